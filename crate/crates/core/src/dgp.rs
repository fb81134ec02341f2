//! Seeded data-generating processes: two moons and the 10-D torus.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::decoders::{Decoder, TorusDecoder};
use crate::error::{Error, Result};
use crate::numerics::{householder_qr, DenseMatrix};

/// `n` evenly spaced points from `start` to `end`, both included.
pub fn linspace(start: f64, end: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..n)
            .map(|i| start + (end - start) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Draws `n` independent standard normals.
pub fn standard_normal(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwoMoonsConfig {
    pub samples: usize,
    /// Standard deviation of the isotropic Gaussian noise.
    pub noise: f64,
    pub seed: u64,
}

impl Default for TwoMoonsConfig {
    fn default() -> Self {
        Self {
            samples: 2000,
            noise: 0.1,
            seed: 0,
        }
    }
}

/// Two interleaved half circles. The first `⌈N/2⌉` rows follow the upper arc
/// `(cos θ, sin θ)`, the rest the lower arc `(1 − cos θ, 0.5 − sin θ)`, with
/// `θ` evenly spaced over `[0, π]` on each arc. Rows are not shuffled.
pub fn sample_two_moons(config: &TwoMoonsConfig) -> Result<Vec<Vec<f64>>> {
    if config.samples == 0 {
        return Err(Error::InvalidArgument(
            "two moons needs at least one sample".into(),
        ));
    }
    if !(config.noise >= 0.0) || !config.noise.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "noise must be >= 0, got {}",
            config.noise
        )));
    }
    let n_upper = config.samples / 2 + config.samples % 2;
    let n_lower = config.samples - n_upper;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut out = Vec::with_capacity(config.samples);
    for t in linspace(0.0, std::f64::consts::PI, n_upper) {
        out.push(vec![t.cos(), t.sin()]);
    }
    for t in linspace(0.0, std::f64::consts::PI, n_lower) {
        out.push(vec![1.0 - t.cos(), 0.5 - t.sin()]);
    }
    if config.noise > 0.0 {
        for p in &mut out {
            for v in p.iter_mut() {
                *v += config.noise * rng.sample::<f64, _>(StandardNormal);
            }
        }
    }
    Ok(out)
}

/// Distance from `p` to the nearer of the two noiseless arcs.
pub fn two_moons_arc_distance(p: &[f64]) -> f64 {
    let arc = |cx: f64, cy: f64, upper: bool| {
        let (dx, dy) = (p[0] - cx, p[1] - cy);
        let on_side = if upper { dy >= 0.0 } else { dy <= 0.0 };
        if on_side {
            ((dx * dx + dy * dy).sqrt() - 1.0).abs()
        } else {
            let e1 = ((dx - 1.0).powi(2) + dy * dy).sqrt();
            let e2 = ((dx + 1.0).powi(2) + dy * dy).sqrt();
            e1.min(e2)
        }
    };
    arc(0.0, 0.0, true).min(arc(1.0, 0.5, false))
}

/// Azimuthal scales `0.07 · 2π · exp(−linspace(0, 1.5, n))`.
pub fn default_sigma_phi(n: usize) -> Vec<f64> {
    linspace(0.0, 1.5, n)
        .into_iter()
        .map(|t| 0.07 * std::f64::consts::TAU * (-t).exp())
        .collect()
}

/// Radial scales `0.05 · exp(−linspace(0, 1.5, n))`.
pub fn default_sigma_r(n: usize) -> Vec<f64> {
    linspace(0.0, 1.5, n)
        .into_iter()
        .map(|t| 0.05 * (-t).exp())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TorusDatasetConfig {
    pub samples: usize,
    pub seed: u64,
    pub circles: usize,
    /// Overrides the default azimuthal scales when set.
    pub sigma_phi: Option<Vec<f64>>,
    /// Overrides the default radial scales when set.
    pub sigma_r: Option<Vec<f64>>,
    pub rotation_seed: u64,
    pub rotate: bool,
    pub normalize: bool,
    /// Samples used to estimate the frozen normalization.
    pub normalization_samples: usize,
}

impl Default for TorusDatasetConfig {
    fn default() -> Self {
        Self {
            samples: 10_000,
            seed: 0,
            circles: 10,
            sigma_phi: None,
            sigma_r: None,
            rotation_seed: 1234,
            rotate: true,
            normalize: true,
            normalization_samples: 100_000,
        }
    }
}

impl TorusDatasetConfig {
    pub fn sigma_phi(&self) -> Vec<f64> {
        self.sigma_phi
            .clone()
            .unwrap_or_else(|| default_sigma_phi(self.circles))
    }

    pub fn sigma_r(&self) -> Vec<f64> {
        self.sigma_r
            .clone()
            .unwrap_or_else(|| default_sigma_r(self.circles))
    }

    /// The ground-truth decoder (rotation and normalization frozen), without
    /// drawing the dataset itself.
    pub fn decoder(&self) -> Result<TorusDecoder> {
        let sp = self.sigma_phi();
        let sr = self.sigma_r();
        if sp.len() != self.circles || sr.len() != self.circles {
            return Err(Error::InvalidArgument(format!(
                "torus with {} circles needs {} scales per kind",
                self.circles, self.circles
            )));
        }
        let d = 2 * self.circles;
        let mut dec = TorusDecoder::new(sp, sr)?;
        if self.rotate {
            dec = dec.with_rotation(make_random_rotation(d, self.rotation_seed))?;
        }
        if self.normalize {
            if self.normalization_samples < 2 {
                return Err(Error::InvalidArgument(
                    "normalization needs at least 2 samples".into(),
                ));
            }
            // independent stream so the statistics do not depend on `seed`
            let mut rng = ChaCha8Rng::seed_from_u64(self.rotation_seed ^ 0x6e6f_726d);
            let n = self.normalization_samples;
            let mut sum = vec![0.0; d];
            let mut sum_sq = vec![0.0; d];
            for _ in 0..n {
                let x = dec.decode(&standard_normal(&mut rng, d))?;
                for k in 0..d {
                    sum[k] += x[k];
                    sum_sq[k] += x[k] * x[k];
                }
            }
            let mean: Vec<f64> = sum.iter().map(|s| s / n as f64).collect();
            let var: f64 = (0..d)
                .map(|k| (sum_sq[k] - n as f64 * mean[k] * mean[k]) / (n as f64 - 1.0))
                .sum::<f64>()
                / d as f64;
            dec = dec.with_normalization(mean, var.sqrt())?;
        }
        Ok(dec)
    }
}

/// A dataset row with the latent that generated it.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub x: Vec<f64>,
    pub z_gt: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct TorusDataset {
    pub samples: Vec<LabeledSample>,
    pub decoder: TorusDecoder,
}

impl TorusDataset {
    pub fn data(&self) -> Vec<Vec<f64>> {
        self.samples.iter().map(|s| s.x.clone()).collect()
    }

    pub fn latents(&self) -> Vec<Vec<f64>> {
        self.samples.iter().map(|s| s.z_gt.clone()).collect()
    }
}

/// Draws `z ~ N(0, I)` and decodes it through the frozen torus decoder.
pub fn sample_torus(config: &TorusDatasetConfig) -> Result<TorusDataset> {
    if config.samples == 0 {
        return Err(Error::InvalidArgument(
            "torus needs at least one sample".into(),
        ));
    }
    let decoder = config.decoder()?;
    let d = decoder.latent_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let samples = (0..config.samples)
        .map(|_| {
            let z = standard_normal(&mut rng, d);
            Ok(LabeledSample {
                x: decoder.decode(&z)?,
                z_gt: z,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TorusDataset { samples, decoder })
}

/// Orthogonal `Q` from the Householder QR of a seeded Gaussian matrix, with
/// column signs fixed so that `R` has a positive diagonal.
pub fn make_random_rotation(dim: usize, seed: u64) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DenseMatrix::from_fn(dim, dim, |_, _| rng.sample(StandardNormal));
    let (q, r) = householder_qr(&g);
    DenseMatrix::from_fn(dim, dim, |i, j| {
        if r.get(j, j) < 0.0 {
            -q.get(i, j)
        } else {
            q.get(i, j)
        }
    })
}

/// Dataset selection for manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetConfig {
    TwoMoons(TwoMoonsConfig),
    Torus(TorusDatasetConfig),
}

impl DatasetConfig {
    pub fn dim(&self) -> usize {
        match self {
            DatasetConfig::TwoMoons(_) => 2,
            DatasetConfig::Torus(t) => 2 * t.circles,
        }
    }

    /// Data matrix, one sample per row.
    pub fn generate(&self) -> Result<Vec<Vec<f64>>> {
        match self {
            DatasetConfig::TwoMoons(c) => sample_two_moons(c),
            DatasetConfig::Torus(c) => Ok(sample_torus(c)?.data()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::log_abs_det;

    #[test]
    fn noiseless_moons_lie_on_arcs() {
        let cfg = TwoMoonsConfig {
            samples: 101,
            noise: 0.0,
            seed: 0,
        };
        let pts = sample_two_moons(&cfg).unwrap();
        assert_eq!(pts[0], vec![1.0, 0.0]);
        assert!(pts.iter().all(|p| two_moons_arc_distance(p) < 1e-12));
    }

    #[test]
    fn moons_are_seed_deterministic() {
        let cfg = TwoMoonsConfig::default();
        let a = sample_two_moons(&cfg).unwrap();
        let b = sample_two_moons(&cfg).unwrap();
        assert_eq!(a, b);
        let c = sample_two_moons(&TwoMoonsConfig { seed: 1, ..cfg }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn sigma_schedules() {
        let sp = default_sigma_phi(10);
        let sr = default_sigma_r(10);
        assert!((sp[0] - 0.07 * std::f64::consts::TAU).abs() < 1e-15);
        assert!((sr[9] - 0.05 * (-1.5f64).exp()).abs() < 1e-15);
        assert!(sp.windows(2).all(|w| w[1] < w[0]));
        assert!(sr.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn rotation_is_orthogonal_and_seeded() {
        let q = make_random_rotation(20, 7);
        let qtq = q.transpose().matmul(&q).unwrap();
        assert!(qtq.max_abs_diff(&DenseMatrix::identity(20)) < 1e-12);
        assert!(log_abs_det(&q).unwrap().abs() < 1e-10);
        assert_eq!(q, make_random_rotation(20, 7));
        assert_ne!(q, make_random_rotation(20, 8));
    }

    #[test]
    fn torus_samples_reproduce_from_decoder() {
        let cfg = TorusDatasetConfig {
            samples: 200,
            normalization_samples: 2000,
            ..Default::default()
        };
        let ds = sample_torus(&cfg).unwrap();
        for s in &ds.samples {
            let x = ds.decoder.decode(&s.z_gt).unwrap();
            for (a, b) in x.iter().zip(&s.x) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn unrotated_torus_projection_is_an_annulus() {
        let cfg = TorusDatasetConfig {
            samples: 4000,
            rotate: false,
            normalize: false,
            ..Default::default()
        };
        let ds = sample_torus(&cfg).unwrap();
        let radii: Vec<f64> = ds.samples.iter().map(|s| s.x[0].hypot(s.x[1])).collect();
        let mean = radii.iter().sum::<f64>() / radii.len() as f64;
        let sd =
            (radii.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / radii.len() as f64).sqrt();
        assert!((mean - 1.0).abs() < 0.01);
        assert!((sd - 0.05).abs() < 0.005, "{sd}");
    }

    #[test]
    fn torus_latents_are_standard_normal() {
        let cfg = TorusDatasetConfig {
            samples: 5000,
            normalization_samples: 100,
            ..Default::default()
        };
        let ds = sample_torus(&cfg).unwrap();
        let n = ds.samples.len() as f64;
        for k in 0..20 {
            let m = ds.samples.iter().map(|s| s.z_gt[k]).sum::<f64>() / n;
            let v = ds
                .samples
                .iter()
                .map(|s| (s.z_gt[k] - m).powi(2))
                .sum::<f64>()
                / n;
            assert!(m.abs() < 4.0 / n.sqrt());
            assert!((v.sqrt() - 1.0).abs() < 4.0 / n.sqrt());
        }
    }
}
