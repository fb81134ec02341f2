use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::decoders::{jacobian_batch, Decoder, JacobianBatch, JacobianMode};
use crate::dgp::standard_normal;
use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

/// Pairs with `cos² θ > 1 − COLLINEAR_TOLERANCE` are reported as unbounded.
pub const COLLINEAR_TOLERANCE: f64 = 1e-12;

/// Estimation fails when more than this fraction of samples is excluded.
pub const MAX_EXCLUDED_FRACTION: f64 = 0.01;

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    /// Samples that entered the average.
    pub samples: usize,
    /// Samples dropped because a needed log-volume was degenerate.
    pub excluded: usize,
}

impl Estimate {
    /// `offset + mean(terms)`, with `stderr = sd(terms) / √n`.
    pub fn from_terms(offset: f64, terms: &[f64], excluded: usize) -> Result<Self> {
        let n = terms.len();
        if n == 0 {
            return Err(Error::Estimation("every sample was excluded".into()));
        }
        // Shifted by the first term: constant integrands give an exact mean
        // and exactly zero spread.
        let nf = n as f64;
        let shift = terms[0];
        let d_sum: f64 = terms.iter().map(|t| t - shift).sum();
        let d_mean = d_sum / nf;
        let mean = shift + d_mean;
        let stderr = if n > 1 {
            let ss: f64 = terms.iter().map(|t| (t - shift - d_mean).powi(2)).sum();
            (ss / (nf - 1.0)).sqrt() / nf.sqrt()
        } else {
            0.0
        };
        Ok(Self {
            value: offset + mean,
            stderr,
            samples: n,
            excluded,
        })
    }
}

impl fmt::Display for Estimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6} ± {:.6}", self.value, self.stderr)
    }
}

/// A matrix cell: a number, a divergent (collinear) entry, or an entry that
/// is not defined (diagonal of a within-model matrix, zero variance).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Entry {
    Value(f64),
    Unbounded,
    Undefined,
}

impl Entry {
    pub fn value(self) -> Option<f64> {
        match self {
            Entry::Value(v) => Some(v),
            _ => None,
        }
    }

    /// Numeric view: `+∞` for unbounded, NaN for undefined.
    pub fn as_f64(self) -> f64 {
        match self {
            Entry::Value(v) => v,
            Entry::Unbounded => f64::INFINITY,
            Entry::Undefined => f64::NAN,
        }
    }

    /// Text form used in CSV and JSON: 17 significant digits, `inf`, `nan`.
    pub fn to_text(self) -> String {
        match self {
            Entry::Value(v) => format_float(v),
            Entry::Unbounded => "inf".into(),
            Entry::Undefined => "nan".into(),
        }
    }
}

/// Lossless float formatting with 17 significant digits.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.16e}")
    }
}

impl Serialize for Entry {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Entry::Value(v) => s.serialize_f64(*v),
            Entry::Unbounded => s.serialize_str("inf"),
            Entry::Undefined => s.serialize_str("nan"),
        }
    }
}

impl<'de> Deserialize<'de> for Entry {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Entry::Value(v)),
            Raw::Text(t) if t == "inf" => Ok(Entry::Unbounded),
            Raw::Text(t) if t == "nan" => Ok(Entry::Undefined),
            Raw::Text(t) => Err(serde::de::Error::custom(format!(
                "unknown matrix entry '{t}'"
            ))),
        }
    }
}

/// Square or rectangular matrix of [`Entry`] with 1-based axis labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryMatrix {
    pub row_labels: Vec<usize>,
    pub col_labels: Vec<usize>,
    /// Row-major.
    pub entries: Vec<Entry>,
    /// Standard error per entry (NaN where the entry is not a value).
    #[serde(default, with = "nullable_vec")]
    pub stderr: Vec<f64>,
}

impl EntryMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<Entry>) -> Self {
        assert_eq!(rows * cols, entries.len(), "entry count");
        Self {
            row_labels: (1..=rows).collect(),
            col_labels: (1..=cols).collect(),
            stderr: vec![f64::NAN; entries.len()],
            entries,
        }
    }

    pub fn rows(&self) -> usize {
        self.row_labels.len()
    }

    pub fn cols(&self) -> usize {
        self.col_labels.len()
    }

    pub fn get(&self, i: usize, j: usize) -> Entry {
        self.entries[i * self.cols() + j]
    }

    /// Reorders rows and columns: output row `a` is input row `rows[a]`.
    pub fn reorder(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut entries = Vec::with_capacity(rows.len() * cols.len());
        let mut stderr = Vec::with_capacity(rows.len() * cols.len());
        for &i in rows {
            for &j in cols {
                entries.push(self.get(i, j));
                stderr.push(
                    self.stderr
                        .get(i * self.cols() + j)
                        .copied()
                        .unwrap_or(f64::NAN),
                );
            }
        }
        Self {
            row_labels: rows.iter().map(|&i| self.row_labels[i]).collect(),
            col_labels: cols.iter().map(|&j| self.col_labels[j]).collect(),
            entries,
            stderr,
        }
    }

    /// Mean of finite diagonal and off-diagonal entries, the ratio used to
    /// summarise how diagonal a comparison matrix is. Unbounded diagonal
    /// entries count as dominating.
    pub fn diagonal_dominance(&self) -> DiagonalDominance {
        let n = self.rows().min(self.cols());
        let (mut diag, mut nd, mut off, mut no) = (0.0, 0usize, 0.0, 0usize);
        let mut unbounded_diag = 0;
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                match (i == j && i < n, self.get(i, j)) {
                    (true, Entry::Value(v)) => {
                        diag += v;
                        nd += 1;
                    }
                    (true, Entry::Unbounded) => unbounded_diag += 1,
                    (false, Entry::Value(v)) => {
                        off += v;
                        no += 1;
                    }
                    _ => {}
                }
            }
        }
        let mean_diag = if nd > 0 { diag / nd as f64 } else { f64::NAN };
        let mean_off = if no > 0 { off / no as f64 } else { f64::NAN };
        DiagonalDominance {
            mean_diagonal: mean_diag,
            mean_off_diagonal: mean_off,
            unbounded_diagonal: unbounded_diag,
            ratio: mean_diag / mean_off,
        }
    }

    /// Matrix of the finite values, with unbounded/undefined entries as `+∞`/NaN.
    pub fn to_f64(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.as_f64()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagonalDominance {
    #[serde(with = "nullable")]
    pub mean_diagonal: f64,
    #[serde(with = "nullable")]
    pub mean_off_diagonal: f64,
    pub unbounded_diagonal: usize,
    #[serde(with = "nullable")]
    pub ratio: f64,
}

/// Non-finite floats as JSON `null` (read back as NaN).
pub(crate) mod nullable {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

pub(crate) mod nullable_vec {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|x| x.is_finite().then_some(*x)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Ok(Vec::<Option<f64>>::deserialize(d)?
            .into_iter()
            .map(|x| x.unwrap_or(f64::NAN))
            .collect())
    }
}

/// Where latent samples come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleSource {
    /// `z ~ N(0, I)`, matching the metric definitions.
    #[default]
    Prior,
    /// `z = f(x)` for data rows `x`, the encoder-pushed variant.
    Encoder,
}

/// `n` standard-normal latents of dimension `dim` from a seeded stream.
pub fn prior_latents(dim: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| standard_normal(&mut rng, dim)).collect()
}

/// Pushes data rows through the decoder's encoder.
pub fn encoder_latents(decoder: &dyn Decoder, data: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    if !decoder.has_encoder() {
        return Err(Error::Capability(format!(
            "encoder-pushed sampling needs an invertible decoder, '{}' has no encoder",
            decoder.name()
        )));
    }
    data.par_iter().map(|x| decoder.encode(x)).collect()
}

/// Jacobians at `samples` prior draws, in the preferred mode unless given.
pub fn prior_batch(
    decoder: &dyn Decoder,
    samples: usize,
    seed: u64,
    mode: Option<JacobianMode>,
) -> Result<JacobianBatch> {
    if samples < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 samples, got {samples}"
        )));
    }
    let z = prior_latents(decoder.latent_dim(), samples, seed);
    jacobian_batch(
        decoder,
        &z,
        mode.unwrap_or_else(|| JacobianMode::preferred(decoder)),
    )
}

/// Evaluates `term` on every non-degenerate sample in parallel, keeping input
/// order. Samples whose term reports a degenerate Jacobian are excluded; more
/// than [`MAX_EXCLUDED_FRACTION`] exclusions is an error.
pub(crate) fn per_sample<T, F>(batch: &JacobianBatch, term: F) -> Result<(Vec<T>, Vec<usize>)>
where
    T: Send,
    F: Fn(&DenseMatrix) -> Result<T> + Sync,
{
    let results: Vec<Option<Result<T>>> = (0..batch.len())
        .into_par_iter()
        .map(|i| {
            if batch.is_degenerate(i) {
                return None;
            }
            match term(batch.matrix(i)) {
                Err(Error::DegenerateJacobian { .. }) => None,
                other => Some(other),
            }
        })
        .collect();
    let mut terms = Vec::with_capacity(results.len());
    let mut kept = Vec::with_capacity(results.len());
    for (i, r) in results.into_iter().enumerate() {
        if let Some(r) = r {
            terms.push(r?);
            kept.push(i);
        }
    }
    let excluded = batch.len() - kept.len();
    if excluded as f64 > MAX_EXCLUDED_FRACTION * batch.len() as f64 {
        return Err(Error::Estimation(format!(
            "{excluded} of {} samples have degenerate Jacobians (limit {:.0}%)",
            batch.len(),
            MAX_EXCLUDED_FRACTION * 100.0
        )));
    }
    Ok((terms, kept))
}
