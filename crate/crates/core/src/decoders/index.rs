use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sorted, distinct latent indices. Stored 0-based; parsed and displayed
/// 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IndexSet {
    indices: Vec<usize>,
}

impl IndexSet {
    /// Builds a set from 0-based indices, all below `dim`.
    pub fn new(mut indices: Vec<usize>, dim: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::IndexSet("index set must be nonempty".into()));
        }
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::IndexSet(format!("duplicate index in {indices:?}")));
        }
        if let Some(&last) = indices.last() {
            if last >= dim {
                return Err(Error::IndexSet(format!(
                    "index {} out of range 1..={dim}",
                    last + 1
                )));
            }
        }
        Ok(Self { indices })
    }

    /// Builds a set from 1-based indices as written by users.
    pub fn from_one_based(indices: &[usize], dim: usize) -> Result<Self> {
        if indices.contains(&0) {
            return Err(Error::IndexSet("indices are 1-based; 0 is invalid".into()));
        }
        Self::new(indices.iter().map(|i| i - 1).collect(), dim)
    }

    pub fn singleton(index: usize, dim: usize) -> Result<Self> {
        Self::new(vec![index], dim)
    }

    pub fn all(dim: usize) -> Result<Self> {
        Self::new((0..dim).collect(), dim)
    }

    /// Parses `"1,3,5"` or ranges like `"1-3,7"` (1-based, inclusive).
    pub fn parse(text: &str, dim: usize) -> Result<Self> {
        let mut out = Vec::new();
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let parse = |s: &str| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::IndexSet(format!("cannot parse index '{s}'")))
            };
            match part.split_once('-') {
                Some((a, b)) => {
                    let (a, b) = (parse(a)?, parse(b)?);
                    if a > b {
                        return Err(Error::IndexSet(format!("empty range '{part}'")));
                    }
                    out.extend(a..=b);
                }
                None => out.push(parse(part)?),
            }
        }
        Self::from_one_based(&out, dim)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    pub fn is_disjoint(&self, other: &IndexSet) -> bool {
        !self.indices.iter().any(|&i| other.contains(i))
    }

    /// Indices of `0..dim` not in the set; `None` when the set covers everything.
    pub fn complement(&self, dim: usize) -> Option<IndexSet> {
        let rest: Vec<usize> = (0..dim).filter(|&i| !self.contains(i)).collect();
        if rest.is_empty() {
            None
        } else {
            Some(IndexSet { indices: rest })
        }
    }

    pub fn union(&self, other: &IndexSet) -> IndexSet {
        let mut indices = self.indices.clone();
        indices.extend(other.indices.iter().filter(|&&i| !self.contains(i)));
        indices.sort_unstable();
        IndexSet { indices }
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.indices.iter().map(|i| i + 1).collect()
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.one_based().iter().map(usize::to_string).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// Disjoint index sets that together cover `0..dim`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    dim: usize,
    sets: Vec<IndexSet>,
}

impl Partition {
    pub fn new(sets: Vec<IndexSet>, dim: usize) -> Result<Self> {
        let mut seen = vec![false; dim];
        for s in &sets {
            for &i in s.indices() {
                if i >= dim {
                    return Err(Error::IndexSet(format!(
                        "index {} exceeds dimension {dim}",
                        i + 1
                    )));
                }
                if seen[i] {
                    return Err(Error::IndexSet(format!(
                        "index {} appears in two blocks",
                        i + 1
                    )));
                }
                seen[i] = true;
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::IndexSet(format!(
                "partition does not cover index {}",
                missing + 1
            )));
        }
        Ok(Self { dim, sets })
    }

    /// The finest partition `{{1}, ..., {D}}`.
    pub fn singletons(dim: usize) -> Self {
        Self {
            dim,
            sets: (0..dim).map(|i| IndexSet { indices: vec![i] }).collect(),
        }
    }

    /// Parses blocks separated by `|`, e.g. `"1-10|11-20"`.
    pub fn parse(text: &str, dim: usize) -> Result<Self> {
        let sets = text
            .split('|')
            .map(|b| IndexSet::parse(b, dim))
            .collect::<Result<Vec<_>>>()?;
        Self::new(sets, dim)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sets(&self) -> &[IndexSet] {
        &self.sets
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.sets.iter().map(IndexSet::to_string).collect();
        write!(f, "{}", parts.join("|"))
    }
}

impl FromStr for IndexSet {
    type Err = Error;

    /// Parses without a dimension bound; use [`IndexSet::parse`] to validate.
    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s, usize::MAX)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_based_boundary() {
        let s = IndexSet::parse("3, 1-2", 4).unwrap();
        assert_eq!(s.indices(), &[0, 1, 2]);
        assert_eq!(s.to_string(), "1,2,3");
        assert_eq!(s.complement(4).unwrap().indices(), &[3]);
        assert!(IndexSet::parse("0", 4).is_err());
        assert!(IndexSet::parse("5", 4).is_err());
        assert!(IndexSet::parse("1,1", 4).is_err());
        assert!(IndexSet::parse("", 4).is_err());
    }

    #[test]
    fn partitions_must_cover_disjointly() {
        assert!(Partition::parse("1|2,3", 3).is_ok());
        assert!(Partition::parse("1|1,2,3", 3).is_err());
        assert!(Partition::parse("1|3", 3).is_err());
        let p = Partition::singletons(3);
        assert_eq!(p.to_string(), "1|2|3");
        assert_eq!(Partition::parse(&p.to_string(), 3).unwrap(), p);
    }

    #[test]
    fn union_and_disjointness() {
        let a = IndexSet::parse("1,3", 4).unwrap();
        let b = IndexSet::parse("2", 4).unwrap();
        assert!(a.is_disjoint(&b));
        assert_eq!(a.union(&b).indices(), &[0, 1, 2]);
        assert!(!a.is_disjoint(&a));
    }
}
