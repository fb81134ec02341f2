use std::cell::RefCell;

use rayon::prelude::*;

use crate::decoders::{IndexSet, Partition};
use crate::error::{check_dim, Error, Result};
use crate::flows::FlowModel;
use crate::numerics::{gram_log_volume_scalar, seed_identity, Dual, Jet, Scalar, Tape};

/// Objective of one training run.
#[derive(Debug, Clone, PartialEq)]
pub enum Objective {
    /// Maximum likelihood only.
    Ml,
    /// ML plus `λ ·` manifold total correlation over `partition` at `z = f(x)`.
    MlMtc { lambda: f64, partition: Partition },
    /// ML plus `λ ·` reconstruction from the `core` latents alone.
    MlRec { lambda: f64, core: IndexSet },
}

impl Objective {
    pub fn lambda(&self) -> f64 {
        match self {
            Objective::Ml => 0.0,
            Objective::MlMtc { lambda, .. } | Objective::MlRec { lambda, .. } => *lambda,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Objective::Ml => Ok(()),
            Objective::MlMtc { lambda, partition } => {
                check_lambda(*lambda)?;
                check_dim("regularizer partition", dim, partition.dim())
            }
            Objective::MlRec { lambda, core } => {
                check_lambda(*lambda)?;
                if core.is_empty() || core.len() >= dim || core.indices().iter().any(|&i| i >= dim)
                {
                    return Err(Error::IndexSet(format!(
                        "core set {{{core}}} must be a nonempty proper subset of 1..{dim}"
                    )));
                }
                Ok(())
            }
        }
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda >= 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "regularizer weight must be >= 0, got {lambda}"
        )))
    }
}

/// Per-sample loss components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleTerms<T> {
    /// `½|f(x)|² − log|∂f/∂x|`.
    pub nll: T,
    /// Unweighted regularizer (zero for plain ML).
    pub reg: T,
}

/// `½|z|² − log|det ∂f/∂x|` without the `D/2 log 2π` constant.
fn nll_from<T: Scalar>(z: &[T], log_det: T) -> T {
    T::dot(z, z) * 0.5 - log_det
}

/// `Σ_S log|J_S(z)| − log|J(z)|`, with decoder columns from forward-mode
/// tangents through the decoder (one pass per column) and `−log|J| =
/// log|det ∂f/∂x|` taken from the encoder. Used for dimensions without a
/// specialized [`Jet`] path.
pub fn mtc_term<T: Scalar>(
    model: &FlowModel,
    params: &[T],
    z: &[T],
    encoder_log_det: T,
    partition: &Partition,
) -> Result<T> {
    let d = z.len();
    let lifted: Vec<Dual<T>> = params.iter().map(|&p| Dual::constant(p)).collect();
    let mut columns = Vec::with_capacity(d);
    for k in 0..d {
        let seeded: Vec<Dual<T>> = z
            .iter()
            .enumerate()
            .map(|(i, &v)| Dual::new(v, T::cst(if i == k { 1.0 } else { 0.0 })))
            .collect();
        let (x, _) = model.decode_with(&lifted, &seeded)?;
        columns.push(x.into_iter().map(|v| v.eps).collect::<Vec<T>>());
    }
    let mut acc = encoder_log_det;
    for s in partition.sets() {
        let cols: Vec<Vec<T>> = s.indices().iter().map(|&k| columns[k].clone()).collect();
        acc = acc + gram_log_volume_scalar(&cols)?;
    }
    Ok(acc)
}

/// Columns of `m⁻¹` for a square matrix given by rows. Gauss-Jordan with
/// partial pivoting chosen on primal values.
fn inverse_columns<T: Scalar>(rows: &[Vec<T>]) -> Result<Vec<Vec<T>>> {
    let d = rows.len();
    let mut a = rows.to_vec();
    let mut inv: Vec<Vec<T>> = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| T::cst(if i == j { 1.0 } else { 0.0 }))
                .collect()
        })
        .collect();
    for c in 0..d {
        let p = (c..d)
            .max_by(|&i, &j| a[i][c].value().abs().total_cmp(&a[j][c].value().abs()))
            .unwrap_or(c);
        let pivot = a[p][c].value();
        if !(pivot.abs() > f64::MIN_POSITIVE) || !pivot.is_finite() {
            return Err(Error::DegenerateJacobian {
                columns: d,
                index: c,
            });
        }
        a.swap(c, p);
        inv.swap(c, p);
        let scale = T::cst(1.0) / a[c][c];
        for j in 0..d {
            a[c][j] = a[c][j] * scale;
            inv[c][j] = inv[c][j] * scale;
        }
        for r in (0..d).filter(|&r| r != c) {
            let f = a[r][c];
            for j in 0..d {
                a[r][j] = a[r][j] - f * a[c][j];
                inv[r][j] = inv[r][j] - f * inv[c][j];
            }
        }
    }
    Ok((0..d)
        .map(|k| (0..d).map(|i| inv[i][k]).collect())
        .collect())
}

/// NLL and MTC from one multi-tangent pass through the encoder: the pass
/// yields `z`, `log|det ∂f/∂x|` and `∂f/∂x`, whose inverse holds the decoder
/// columns at `z`.
pub(crate) fn mtc_terms_jet<T: Scalar, const N: usize>(
    model: &FlowModel,
    params: &[T],
    x: &[f64],
    partition: &Partition,
) -> Result<SampleTerms<T>> {
    let lifted: Vec<Jet<T, N>> = params.iter().map(|&p| Jet::constant(p)).collect();
    let xs: Vec<T> = x.iter().map(|&v| T::cst(v)).collect();
    let (zj, ld) = model.encode_with(&lifted, &seed_identity(&xs))?;
    let z: Vec<T> = zj.iter().map(|v| v.re).collect();
    let rows: Vec<Vec<T>> = zj.iter().map(|v| v.eps.to_vec()).collect();
    let columns = inverse_columns(&rows)?;
    let mut reg = ld.re;
    for s in partition.sets() {
        let cols: Vec<Vec<T>> = s.indices().iter().map(|&k| columns[k].clone()).collect();
        reg = reg + gram_log_volume_scalar(&cols)?;
    }
    Ok(SampleTerms {
        nll: nll_from(&z, ld.re),
        reg,
    })
}

/// The [`Jet`] path for the dimensions it is compiled for.
fn mtc_terms_fast<T: Scalar>(
    model: &FlowModel,
    params: &[T],
    x: &[f64],
    partition: &Partition,
) -> Option<Result<SampleTerms<T>>> {
    macro_rules! dispatch {
        ($($n:literal),*) => {
            match x.len() {
                $($n => Some(mtc_terms_jet::<T, $n>(model, params, x, partition)),)*
                _ => None,
            }
        };
    }
    dispatch!(2, 3, 4, 6, 8, 10, 20)
}

/// `½|x − g(z_C, 0)|²` with `z = f(x)`.
pub fn reconstruction_term<T: Scalar>(
    model: &FlowModel,
    params: &[T],
    x: &[T],
    z: &[T],
    core: &IndexSet,
) -> Result<T> {
    let masked: Vec<T> = z
        .iter()
        .enumerate()
        .map(|(i, &v)| if core.contains(i) { v } else { T::cst(0.0) })
        .collect();
    let (xh, _) = model.decode_with(params, &masked)?;
    let diff: Vec<T> = x.iter().zip(&xh).map(|(&a, &b)| a - b).collect();
    Ok(T::dot(&diff, &diff) * 0.5)
}

/// Loss components of one sample for parameters held in any scalar kind.
pub fn sample_terms<T: Scalar>(
    model: &FlowModel,
    params: &[T],
    x: &[f64],
    objective: &Objective,
) -> Result<SampleTerms<T>> {
    if let Objective::MlMtc { partition, .. } = objective {
        if let Some(terms) = mtc_terms_fast(model, params, x, partition) {
            return terms;
        }
    }
    let xs: Vec<T> = x.iter().map(|&v| T::cst(v)).collect();
    let (z, log_det) = model.encode_with(params, &xs)?;
    let nll = nll_from(&z, log_det);
    let reg = match objective {
        Objective::Ml => T::cst(0.0),
        Objective::MlMtc { partition, .. } => mtc_term(model, params, &z, log_det, partition)?,
        Objective::MlRec { core, .. } => reconstruction_term(model, params, &xs, &z, core)?,
    };
    Ok(SampleTerms { nll, reg })
}

fn check_batch(batch: &[Vec<f64>]) -> Result<()> {
    if batch.is_empty() {
        Err(Error::InvalidArgument("loss needs a nonempty batch".into()))
    } else {
        Ok(())
    }
}

fn non_finite(what: &str, index: usize) -> Error {
    Error::Training(format!("non-finite {what} at batch row {index}"))
}

/// Mean negative log-likelihood `mean(½|f(x)|² − log|∂f/∂x|)`.
pub fn nll_loss(model: &FlowModel, batch: &[Vec<f64>]) -> Result<f64> {
    check_batch(batch)?;
    let terms: Vec<f64> = batch
        .par_iter()
        .map(|x| sample_terms::<f64>(model, model.params(), x, &Objective::Ml).map(|t| t.nll))
        .collect::<Result<_>>()?;
    if let Some(i) = terms.iter().position(|t| !t.is_finite()) {
        return Err(non_finite("NLL", i));
    }
    Ok(terms.iter().sum::<f64>() / batch.len() as f64)
}

/// Regularizer mean over the samples whose columns were non-degenerate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularizerValue {
    pub mean: f64,
    pub skipped: usize,
}

/// Mean manifold total correlation at encoder-pushed latents.
pub fn mtc_regularizer(
    model: &FlowModel,
    batch: &[Vec<f64>],
    partition: &Partition,
) -> Result<RegularizerValue> {
    check_batch(batch)?;
    check_dim("regularizer partition", model.dim(), partition.dim())?;
    let objective = Objective::MlMtc {
        lambda: 1.0,
        partition: partition.clone(),
    };
    let results: Vec<Option<f64>> = batch
        .par_iter()
        .map(
            |x| match sample_terms::<f64>(model, model.params(), x, &objective) {
                Ok(t) => Ok(Some(t.reg)),
                Err(Error::DegenerateJacobian { .. }) => Ok(None),
                Err(e) => Err(e),
            },
        )
        .collect::<Result<_>>()?;
    let kept: Vec<f64> = results.iter().flatten().copied().collect();
    if kept.is_empty() {
        return Err(Error::Training(
            "every sample had degenerate Jacobian columns".into(),
        ));
    }
    Ok(RegularizerValue {
        mean: kept.iter().sum::<f64>() / kept.len() as f64,
        skipped: results.len() - kept.len(),
    })
}

/// Mean `½|x − g(f_C(x), 0)|²`.
pub fn reconstruction_loss(model: &FlowModel, batch: &[Vec<f64>], core: &IndexSet) -> Result<f64> {
    check_batch(batch)?;
    let objective = Objective::MlRec {
        lambda: 1.0,
        core: core.clone(),
    };
    objective.validate(model.dim())?;
    let terms: Vec<f64> = batch
        .par_iter()
        .map(|x| sample_terms::<f64>(model, model.params(), x, &objective).map(|t| t.reg))
        .collect::<Result<_>>()?;
    if let Some(i) = terms.iter().position(|t| !t.is_finite()) {
        return Err(non_finite("reconstruction loss", i));
    }
    Ok(terms.iter().sum::<f64>() / batch.len() as f64)
}

/// Batch means and the gradient of `nll + λ·reg` with respect to the model
/// parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchGradient {
    pub nll: f64,
    pub reg: f64,
    pub total: f64,
    pub gradient: Vec<f64>,
    /// Samples left out because a Jacobian column block was degenerate.
    pub skipped: usize,
}

/// Samples per reduction chunk. Fixed so summation order does not depend on
/// the worker count.
const CHUNK: usize = 16;

struct Partial {
    nll: f64,
    reg: f64,
    grad: Vec<f64>,
    kept: usize,
}

thread_local! {
    static SCRATCH: RefCell<(Tape, Vec<f64>)> = RefCell::new((Tape::new(), Vec::new()));
}

/// Records every sample of a chunk on one tape and sweeps the summed loss once.
/// The tape and adjoint buffer are reused per worker thread.
fn chunk_gradient(
    model: &FlowModel,
    chunk: &[Vec<f64>],
    objective: &Objective,
    first: usize,
) -> Result<Partial> {
    SCRATCH.with(|cell| {
        let mut scratch = cell.borrow_mut();
        let (tape, adj) = &mut *scratch;
        tape.clear();
        let tape = &*tape;
        let params = tape.vars(model.params());
        let lambda = objective.lambda();
        let mut acc = Partial {
            nll: 0.0,
            reg: 0.0,
            grad: vec![0.0; params.len()],
            kept: 0,
        };
        let mut losses = Vec::with_capacity(chunk.len());
        for (k, x) in chunk.iter().enumerate() {
            let terms = match sample_terms(model, &params, x, objective) {
                Ok(t) => t,
                Err(Error::DegenerateJacobian { .. }) => continue,
                Err(e) => return Err(e),
            };
            let (nll, reg) = (terms.nll.value(), terms.reg.value());
            if !nll.is_finite() || !reg.is_finite() {
                return Err(non_finite("loss", first + k));
            }
            acc.nll += nll;
            acc.reg += reg;
            acc.kept += 1;
            losses.push(terms.nll + terms.reg * lambda);
        }
        let loss = Scalar::sum(&losses);
        if acc.kept > 0 && !loss.is_constant() {
            tape.gradient_into(loss, adj)?;
            for (g, p) in acc.grad.iter_mut().zip(&params) {
                *g = p.index().map_or(0.0, |i| adj[i]);
            }
        }
        Ok(acc)
    })
}

/// Reverse-mode gradient over a batch, reduced in a fixed order.
pub fn batch_gradient(
    model: &FlowModel,
    batch: &[Vec<f64>],
    objective: &Objective,
) -> Result<BatchGradient> {
    check_batch(batch)?;
    let p = model.param_count();
    let partials: Vec<Partial> = batch
        .par_chunks(CHUNK)
        .enumerate()
        .map(|(c, chunk)| chunk_gradient(model, chunk, objective, c * CHUNK))
        .collect::<Result<_>>()?;
    let mut total = Partial {
        nll: 0.0,
        reg: 0.0,
        grad: vec![0.0; p],
        kept: 0,
    };
    for part in partials {
        total.nll += part.nll;
        total.reg += part.reg;
        for (a, b) in total.grad.iter_mut().zip(&part.grad) {
            *a += b;
        }
        total.kept += part.kept;
    }
    if total.kept == 0 {
        return Err(Error::Training(
            "every sample in the batch was skipped".into(),
        ));
    }
    let n = total.kept as f64;
    let nll = total.nll / n;
    let reg = total.reg / n;
    total.grad.iter_mut().for_each(|g| *g /= n);
    Ok(BatchGradient {
        nll,
        reg,
        total: nll + objective.lambda() * reg,
        gradient: total.grad,
        skipped: batch.len() - total.kept,
    })
}

/// Batch objective value in plain `f64` (used for finite-difference checks).
pub fn batch_objective(
    model: &FlowModel,
    batch: &[Vec<f64>],
    objective: &Objective,
) -> Result<f64> {
    check_batch(batch)?;
    let mut acc = 0.0;
    let mut kept = 0usize;
    for x in batch {
        match sample_terms::<f64>(model, model.params(), x, objective) {
            Ok(t) => {
                acc += t.nll + objective.lambda() * t.reg;
                kept += 1;
            }
            Err(Error::DegenerateJacobian { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    if kept == 0 {
        return Err(Error::Training(
            "every sample in the batch was skipped".into(),
        ));
    }
    Ok(acc / kept as f64)
}
