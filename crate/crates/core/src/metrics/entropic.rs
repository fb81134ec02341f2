use serde::{Deserialize, Serialize};

use super::estimate::{per_sample, prior_batch, Entry, EntryMatrix, Estimate, COLLINEAR_TOLERANCE};
use crate::decoders::{jacobian_batch, Decoder, IndexSet, JacobianBatch, Partition};
use crate::error::{check_dim, Error, Result};
use crate::numerics::{gram_log_volume, DenseMatrix, HALF_LOG_2PI_E};

fn entropy_offset(k: usize) -> f64 {
    k as f64 * HALF_LOG_2PI_E
}

fn log_norm(col: &[f64]) -> Result<f64> {
    let n2: f64 = col.iter().map(|v| v * v).sum();
    if !(n2 > 0.0) {
        return Err(Error::DegenerateJacobian {
            columns: 1,
            index: 0,
        });
    }
    Ok(0.5 * n2.ln())
}

fn check_set(batch: &JacobianBatch, set: &IndexSet) -> Result<()> {
    match set.indices().last() {
        Some(&last) if last >= batch.latent_dim() => Err(Error::IndexSet(format!(
            "index {} exceeds latent dimension {}",
            last + 1,
            batch.latent_dim()
        ))),
        _ => Ok(()),
    }
}

/// Mutual-information integrand of one column pair,
/// `log|a| + log|b| − log vol[a, b]`; `None` when the pair is collinear.
pub fn pair_information(a: &[f64], b: &[f64]) -> Result<Option<f64>> {
    // Fixed column order so the value does not depend on pair labelling.
    let swap = a
        .iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .is_some_and(|o| o.is_gt());
    let (a, b) = if swap { (b, a) } else { (a, b) };
    let la = log_norm(a)?;
    let lb = log_norm(b)?;
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na2: f64 = a.iter().map(|v| v * v).sum();
    let nb2: f64 = b.iter().map(|v| v * v).sum();
    if dot * dot / (na2 * nb2) > 1.0 - COLLINEAR_TOLERANCE {
        return Ok(None);
    }
    let joint = DenseMatrix::from_columns(&[a.to_vec(), b.to_vec()])?;
    Ok(Some(la + lb - gram_log_volume(&joint)?))
}

/// `H(q) = D/2 (1 + ln 2π) + E[log |J|]`.
pub fn total_entropy_batch(batch: &JacobianBatch) -> Result<Estimate> {
    let (terms, kept) = per_sample(batch, gram_log_volume)?;
    Estimate::from_terms(
        entropy_offset(batch.latent_dim()),
        &terms,
        batch.len() - kept.len(),
    )
}

/// `H(q_S) = |S|/2 (1 + ln 2π) + E[log |J_S|]`, averaged over the full latent.
pub fn manifold_entropy_batch(batch: &JacobianBatch, set: &IndexSet) -> Result<Estimate> {
    check_set(batch, set)?;
    let (terms, kept) = per_sample(batch, |j| gram_log_volume(&j.select_columns(set.indices())))?;
    Estimate::from_terms(entropy_offset(set.len()), &terms, batch.len() - kept.len())
}

/// Per-sample `Σ_S log |J_S| − log |J|` averaged over the batch.
pub fn manifold_total_correlation_batch(
    batch: &JacobianBatch,
    partition: &Partition,
) -> Result<Estimate> {
    check_dim("partition dimension", batch.latent_dim(), partition.dim())?;
    let (terms, kept) = per_sample(batch, |j| {
        let mut acc = 0.0;
        for s in partition.sets() {
            acc += gram_log_volume(&j.select_columns(s.indices()))?;
        }
        Ok(acc - gram_log_volume(j)?)
    })?;
    Estimate::from_terms(0.0, &terms, batch.len() - kept.len())
}

/// Per-sample `log |J_S| + log |J_T| − log |J_{S∪T}|` averaged over the batch.
pub fn manifold_mutual_information_batch(
    batch: &JacobianBatch,
    s: &IndexSet,
    t: &IndexSet,
) -> Result<Estimate> {
    check_set(batch, s)?;
    check_set(batch, t)?;
    if !s.is_disjoint(t) {
        return Err(Error::IndexSet(format!("sets {{{s}}} and {{{t}}} overlap")));
    }
    let st = s.union(t);
    let (terms, kept) = per_sample(batch, |j| {
        Ok(gram_log_volume(&j.select_columns(s.indices()))?
            + gram_log_volume(&j.select_columns(t.indices()))?
            - gram_log_volume(&j.select_columns(st.indices()))?)
    })?;
    Estimate::from_terms(0.0, &terms, batch.len() - kept.len())
}

/// Averages per-sample pair terms into a matrix; any collinear sample makes
/// the entry unbounded.
fn pair_matrix(
    rows: usize,
    cols: usize,
    per: &[Vec<Option<f64>>],
    skip_diagonal: bool,
) -> EntryMatrix {
    let n = per.len() as f64;
    let mut entries = Vec::with_capacity(rows * cols);
    let mut stderr = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            if skip_diagonal && i == j {
                entries.push(Entry::Undefined);
                stderr.push(f64::NAN);
                continue;
            }
            let k = i * cols + j;
            if per.iter().any(|s| s[k].is_none()) {
                entries.push(Entry::Unbounded);
                stderr.push(f64::NAN);
                continue;
            }
            let vals: Vec<f64> = per.iter().map(|s| s[k].expect("checked")).collect();
            let est = Estimate::from_terms(0.0, &vals, 0).expect("nonempty batch");
            entries.push(Entry::Value(est.value));
            stderr.push(if n > 1.0 { est.stderr } else { 0.0 });
        }
    }
    let mut m = EntryMatrix::new(rows, cols, entries);
    m.stderr = stderr;
    m
}

/// Pairwise manifold mutual information `I(q_i, q_j)`; diagonal undefined.
pub fn mpmi_matrix_batch(batch: &JacobianBatch) -> Result<EntryMatrix> {
    let d = batch.latent_dim();
    if d < 2 {
        return Err(Error::InvalidArgument(
            "MPMI needs at least two latent dimensions".into(),
        ));
    }
    let (per, _) = per_sample(batch, |j| {
        let cols: Vec<Vec<f64>> = (0..d).map(|k| j.column(k)).collect();
        let mut out = vec![None; d * d];
        for a in 0..d {
            for b in a + 1..d {
                let v = pair_information(&cols[a], &cols[b])?;
                out[a * d + b] = v;
                out[b * d + a] = v;
            }
        }
        Ok(out)
    })?;
    Ok(pair_matrix(d, d, &per, true))
}

/// Cross-model pairwise information `I(q^a_i, q^b_j)` on shared latents.
pub fn mcpmi_matrix_batches(a: &JacobianBatch, b: &JacobianBatch) -> Result<EntryMatrix> {
    check_dim(
        "cross-model latent dimension",
        a.latent_dim(),
        b.latent_dim(),
    )?;
    check_dim("cross-model data dimension", a.data_dim(), b.data_dim())?;
    check_dim("cross-model batch size", a.len(), b.len())?;
    if a.latents() != b.latents() {
        return Err(Error::InvalidArgument(
            "cross-model batches must share latent samples".into(),
        ));
    }
    let d = a.latent_dim();
    let mut per = Vec::with_capacity(a.len());
    for s in 0..a.len() {
        if a.is_degenerate(s) || b.is_degenerate(s) {
            continue;
        }
        let ja = a.matrix(s);
        let jb = b.matrix(s);
        let cb: Vec<Vec<f64>> = (0..d).map(|k| jb.column(k)).collect();
        let mut out = Vec::with_capacity(d * d);
        let mut ok = true;
        for i in 0..d {
            let ca = ja.column(i);
            for cbj in &cb {
                match pair_information(&ca, cbj) {
                    Ok(v) => out.push(v),
                    Err(Error::DegenerateJacobian { .. }) => {
                        ok = false;
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }
            if !ok {
                break;
            }
        }
        if ok {
            per.push(out);
        }
    }
    let excluded = a.len() - per.len();
    if excluded as f64 > super::estimate::MAX_EXCLUDED_FRACTION * a.len() as f64 {
        return Err(Error::Estimation(format!(
            "{excluded} of {} shared samples are degenerate in one of the models",
            a.len()
        )));
    }
    Ok(pair_matrix(d, d, &per, false))
}

/// One latent dimension's manifold entropy in a spectrum (1-based `dim`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub dim: usize,
    pub entropy: Estimate,
}

/// Singleton manifold entropies `H(q_i)` in original latent order.
pub fn manifold_entropies_batch(batch: &JacobianBatch) -> Result<Vec<Estimate>> {
    let d = batch.latent_dim();
    let (per, kept) = per_sample(batch, |j| {
        (0..d)
            .map(|k| log_norm(&j.column(k)))
            .collect::<Result<Vec<_>>>()
    })?;
    let excluded = batch.len() - kept.len();
    (0..d)
        .map(|k| {
            let terms: Vec<f64> = per.iter().map(|s| s[k]).collect();
            Estimate::from_terms(HALF_LOG_2PI_E, &terms, excluded)
        })
        .collect()
}

/// Sorts singleton entropies in descending order; ties keep original order.
pub fn sort_spectrum(entropies: &[Estimate]) -> Vec<SpectrumEntry> {
    let mut order: Vec<usize> = (0..entropies.len()).collect();
    order.sort_by(|&a, &b| {
        entropies[b]
            .value
            .total_cmp(&entropies[a].value)
            .then(a.cmp(&b))
    });
    order
        .into_iter()
        .map(|k| SpectrumEntry {
            dim: k + 1,
            entropy: entropies[k],
        })
        .collect()
}

/// 0-based latent order of a sorted spectrum.
pub fn spectrum_order(spectrum: &[SpectrumEntry]) -> Vec<usize> {
    spectrum.iter().map(|e| e.dim - 1).collect()
}

pub fn manifold_entropy_spectrum_batch(batch: &JacobianBatch) -> Result<Vec<SpectrumEntry>> {
    Ok(sort_spectrum(&manifold_entropies_batch(batch)?))
}

// Convenience wrappers drawing `samples` prior latents from `seed`.

pub fn total_entropy(decoder: &dyn Decoder, samples: usize, seed: u64) -> Result<Estimate> {
    total_entropy_batch(&prior_batch(decoder, samples, seed, None)?)
}

pub fn manifold_entropy(
    decoder: &dyn Decoder,
    set: &IndexSet,
    samples: usize,
    seed: u64,
) -> Result<Estimate> {
    manifold_entropy_batch(&prior_batch(decoder, samples, seed, None)?, set)
}

pub fn manifold_entropy_spectrum(
    decoder: &dyn Decoder,
    samples: usize,
    seed: u64,
) -> Result<Vec<SpectrumEntry>> {
    manifold_entropy_spectrum_batch(&prior_batch(decoder, samples, seed, None)?)
}

pub fn manifold_total_correlation(
    decoder: &dyn Decoder,
    partition: &Partition,
    samples: usize,
    seed: u64,
) -> Result<Estimate> {
    manifold_total_correlation_batch(&prior_batch(decoder, samples, seed, None)?, partition)
}

pub fn manifold_mutual_information(
    decoder: &dyn Decoder,
    s: &IndexSet,
    t: &IndexSet,
    samples: usize,
    seed: u64,
) -> Result<Estimate> {
    manifold_mutual_information_batch(&prior_batch(decoder, samples, seed, None)?, s, t)
}

pub fn mpmi_matrix(decoder: &dyn Decoder, samples: usize, seed: u64) -> Result<EntryMatrix> {
    mpmi_matrix_batch(&prior_batch(decoder, samples, seed, None)?)
}

/// MCPMI with both decoders evaluated on the same prior draws.
pub fn mcpmi_matrix(
    a: &dyn Decoder,
    b: &dyn Decoder,
    samples: usize,
    seed: u64,
) -> Result<EntryMatrix> {
    check_dim(
        "cross-model latent dimension",
        a.latent_dim(),
        b.latent_dim(),
    )?;
    let ba = prior_batch(a, samples, seed, None)?;
    let bb = jacobian_batch(b, ba.latents(), crate::decoders::JacobianMode::preferred(b))?;
    mcpmi_matrix_batches(&ba, &bb)
}

/// `log p_S(z_S) − log |J_S(z)|` at `z = f(x)`.
pub fn manifold_log_density(decoder: &dyn Decoder, x: &[f64], set: &IndexSet) -> Result<f64> {
    if !decoder.has_encoder() {
        return Err(Error::Capability(format!(
            "manifold log-density needs an invertible decoder, '{}' has no encoder",
            decoder.name()
        )));
    }
    let z = decoder.encode(x)?;
    if let Some(&last) = set.indices().last() {
        if last >= z.len() {
            return Err(Error::IndexSet(format!(
                "index {} exceeds latent dimension {}",
                last + 1,
                z.len()
            )));
        }
    }
    let mode = crate::decoders::JacobianMode::preferred(decoder);
    let j = crate::decoders::jacobian_columns(decoder, &z, set, mode)?;
    let log_prior: f64 = set
        .indices()
        .iter()
        .map(|&i| -0.5 * z[i] * z[i] - crate::numerics::HALF_LOG_2PI)
        .sum();
    Ok(log_prior - gram_log_volume(&j)?)
}
