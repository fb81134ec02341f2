use std::fmt;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::entropic::{
    manifold_entropies_batch, manifold_entropy_batch, manifold_total_correlation_batch,
    total_entropy_batch,
};
use super::estimate::{encoder_latents, per_sample, prior_batch, Entry, EntryMatrix, Estimate};
use crate::decoders::{Decoder, IndexSet, JacobianMode, Partition, TorusDecoder};
use crate::error::{check_dim, Error, Result};

/// Batch average of Jacobian column `i` (0-based) under the prior.
pub fn mean_jacobian_column(
    decoder: &dyn Decoder,
    i: usize,
    samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if i >= decoder.latent_dim() {
        return Err(Error::IndexSet(format!(
            "index {} exceeds latent dimension {}",
            i + 1,
            decoder.latent_dim()
        )));
    }
    let batch = prior_batch(decoder, samples, seed, None)?;
    let (cols, _) = per_sample(&batch, |j| Ok(j.column(i)))?;
    let mut mean = vec![0.0; decoder.data_dim()];
    for c in &cols {
        for (m, v) in mean.iter_mut().zip(c) {
            *m += v;
        }
    }
    let n = cols.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    Ok(mean)
}

/// Empirical standard deviation of one encoded latent dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceEntry {
    /// 1-based latent dimension.
    pub dim: usize,
    pub std: f64,
}

/// Per-dimension std of encoded data, unsorted (original latent order).
pub fn latent_std(decoder: &dyn Decoder, data: &[Vec<f64>]) -> Result<Vec<f64>> {
    if data.len() < 2 {
        return Err(Error::InvalidArgument("need at least two data rows".into()));
    }
    let z = encoder_latents(decoder, data)?;
    let d = decoder.latent_dim();
    let n = z.len() as f64;
    Ok((0..d)
        .map(|k| {
            let mean = z.iter().map(|r| r[k]).sum::<f64>() / n;
            let ss: f64 = z.iter().map(|r| (r[k] - mean) * (r[k] - mean)).sum();
            (ss / (n - 1.0)).sqrt()
        })
        .collect())
}

/// Latent dimensions sorted by descending encoded std (stable on ties).
pub fn latent_variance_spectrum(
    decoder: &dyn Decoder,
    data: &[Vec<f64>],
) -> Result<Vec<VarianceEntry>> {
    let std = latent_std(decoder, data)?;
    let mut order: Vec<usize> = (0..std.len()).collect();
    order.sort_by(|&a, &b| std[b].total_cmp(&std[a]).then(a.cmp(&b)));
    Ok(order
        .into_iter()
        .map(|k| VarianceEntry {
            dim: k + 1,
            std: std[k],
        })
        .collect())
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa > 0.0 && sbb > 0.0 {
        Some(sab / (saa * sbb).sqrt())
    } else {
        None
    }
}

/// Spearman rank correlation with average ranks for ties; NaN if either
/// input is constant.
pub fn spearman_rank_correlation(a: &[f64], b: &[f64]) -> Result<f64> {
    check_dim("rank correlation", a.len(), b.len())?;
    if a.len() < 2 {
        return Err(Error::InvalidArgument(
            "rank correlation needs two points".into(),
        ));
    }
    Ok(pearson(&ranks(a), &ranks(b)).unwrap_or(f64::NAN))
}

/// Squared Pearson correlation between column `i` of `a` (rows) and column
/// `j` of `b` (columns). Constant columns give undefined entries.
pub fn squared_correlation_matrix(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<EntryMatrix> {
    check_dim("correlation rows", a.len(), b.len())?;
    if a.len() < 2 {
        return Err(Error::InvalidArgument(
            "correlation needs at least two rows".into(),
        ));
    }
    let (da, db) = (a[0].len(), b[0].len());
    let col = |m: &[Vec<f64>], k: usize| m.iter().map(|r| r[k]).collect::<Vec<f64>>();
    let ca: Vec<Vec<f64>> = (0..da).map(|k| col(a, k)).collect();
    let cb: Vec<Vec<f64>> = (0..db).map(|k| col(b, k)).collect();
    let mut entries = Vec::with_capacity(da * db);
    for x in &ca {
        for y in &cb {
            entries.push(match pearson(x, y) {
                Some(r) => Entry::Value(r * r),
                None => Entry::Undefined,
            });
        }
    }
    Ok(EntryMatrix::new(da, db, entries))
}

/// `R²_ij` between ground-truth latent `i` and encoded dimension `j`, with
/// `encode` applied to the data rows that `gt_latents` generated.
pub fn pearson_cross_correlation(
    gt_latents: &[Vec<f64>],
    data: &[Vec<f64>],
    encoder: &dyn Decoder,
) -> Result<EntryMatrix> {
    check_dim("ground-truth rows", data.len(), gt_latents.len())?;
    let z = encoder_latents(encoder, data)?;
    squared_correlation_matrix(gt_latents, &z)
}

/// Metric tracked by [`convergence_diagnostic`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MetricKind {
    TotalEntropy,
    ManifoldEntropy(IndexSet),
    /// Partition text such as `1-5|6-10`; `None` means singletons.
    TotalCorrelation(Option<String>),
}

impl MetricKind {
    pub fn estimate(&self, decoder: &dyn Decoder, samples: usize, seed: u64) -> Result<Estimate> {
        let batch = prior_batch(decoder, samples, seed, None)?;
        match self {
            MetricKind::TotalEntropy => total_entropy_batch(&batch),
            MetricKind::ManifoldEntropy(s) => manifold_entropy_batch(&batch, s),
            MetricKind::TotalCorrelation(p) => {
                let p = match p {
                    Some(p) => Partition::parse(p, decoder.latent_dim())?,
                    None => Partition::singletons(decoder.latent_dim()),
                };
                manifold_total_correlation_batch(&batch, &p)
            }
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricKind::TotalEntropy => f.write_str("h"),
            MetricKind::ManifoldEntropy(s) => write!(f, "me:{s}"),
            MetricKind::TotalCorrelation(None) => f.write_str("mtc"),
            MetricKind::TotalCorrelation(Some(p)) => write!(f, "mtc:{p}"),
        }
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    /// `h`, `me:<set>` (1-based, e.g. `me:1` or `me:1-3`), `mtc`, `mtc:<partition>`.
    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None if s == "h" => Ok(MetricKind::TotalEntropy),
            None if s == "mtc" => Ok(MetricKind::TotalCorrelation(None)),
            Some(("me", set)) => Ok(MetricKind::ManifoldEntropy(set.parse::<IndexSet>()?)),
            Some(("mtc", p)) => Ok(MetricKind::TotalCorrelation(Some(p.to_string()))),
            _ => Err(Error::InvalidArgument(format!(
                "unknown metric '{s}' (expected h, me:<set>, mtc or mtc:<partition>)"
            ))),
        }
    }
}

impl Serialize for MetricKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MetricKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// One row of a convergence table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub samples: usize,
    pub mean: f64,
    /// Standard deviation of the estimate across repeats.
    pub std: f64,
    pub repeats: usize,
}

/// Seeds for every (size, repeat) pair, drawn from one stream so that each
/// estimate uses an independent prior batch.
pub fn repeat_seeds(seed: u64, sizes: usize, repeats: usize) -> Vec<Vec<u64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..sizes)
        .map(|_| (0..repeats).map(|_| rng.next_u64()).collect())
        .collect()
}

/// Repeats the estimate `repeats` times at every sample size and reports the
/// spread of the estimates.
pub fn convergence_diagnostic(
    decoder: &dyn Decoder,
    kind: &MetricKind,
    sizes: &[usize],
    repeats: usize,
    seed: u64,
) -> Result<Vec<ConvergenceRow>> {
    if repeats < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 repeats, got {repeats}"
        )));
    }
    if sizes.is_empty() {
        return Err(Error::InvalidArgument("no sample sizes given".into()));
    }
    let seeds = repeat_seeds(seed, sizes.len(), repeats);
    sizes
        .iter()
        .zip(&seeds)
        .map(|(&n, seeds)| {
            let values = seeds
                .iter()
                .map(|&s| kind.estimate(decoder, n, s).map(|e| e.value))
                .collect::<Result<Vec<_>>>()?;
            let r = values.len() as f64;
            let mean = values.iter().sum::<f64>() / r;
            let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
            Ok(ConvergenceRow {
                samples: n,
                mean,
                std: (ss / (r - 1.0)).sqrt(),
                repeats,
            })
        })
        .collect()
}

/// Analytic-Jacobian estimates on the torus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusGroundTruth {
    /// `H(q_i)` in latent order: azimuthal dims first, then radial.
    pub entropies: Vec<Estimate>,
    /// Singleton-partition total correlation.
    pub mtc: Estimate,
    /// Paired-sample estimates of `H(q_i) − H(q_j)` for azimuthal `i < j`.
    pub azimuthal_differences: Vec<EntropyDifference>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyDifference {
    /// 1-based latent dimensions.
    pub i: usize,
    pub j: usize,
    pub estimate: Estimate,
    /// `ln(σ_i / σ_j)`.
    pub expected: f64,
}

impl EntropyDifference {
    /// Deviation from the expected value in units of standard error.
    pub fn z_score(&self) -> f64 {
        let dev = (self.estimate.value - self.expected).abs();
        if self.estimate.stderr > 0.0 {
            dev / self.estimate.stderr
        } else if dev == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

pub fn torus_ground_truth_metrics(
    decoder: &TorusDecoder,
    samples: usize,
    seed: u64,
) -> Result<TorusGroundTruth> {
    let batch = prior_batch(decoder, samples, seed, Some(JacobianMode::Analytic))?;
    let entropies = manifold_entropies_batch(&batch)?;
    let mtc =
        manifold_total_correlation_batch(&batch, &Partition::singletons(decoder.latent_dim()))?;
    let n = decoder.circles();
    let (per, kept) = per_sample(&batch, |j| {
        (0..n)
            .map(|k| {
                let c = j.column(k);
                Ok(0.5 * c.iter().map(|v| v * v).sum::<f64>().ln())
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    let excluded = batch.len() - kept.len();
    let mut azimuthal_differences = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let terms: Vec<f64> = per.iter().map(|s| s[i] - s[j]).collect();
            azimuthal_differences.push(EntropyDifference {
                i: i + 1,
                j: j + 1,
                estimate: Estimate::from_terms(0.0, &terms, excluded)?,
                expected: (decoder.sigma_phi[i] / decoder.sigma_phi[j]).ln(),
            });
        }
    }
    Ok(TorusGroundTruth {
        entropies,
        mtc,
        azimuthal_differences,
    })
}
