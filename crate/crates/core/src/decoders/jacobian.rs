use std::cell::RefCell;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::decoder::{decode_checked, Decoder};
use super::index::IndexSet;
use crate::error::{check_dim, Error, Result};
use crate::numerics::{finite_difference_jacobian, gram_log_volume, seed, DenseMatrix, Tape};

/// Default central-difference step.
pub const FD_STEP: f64 = 1e-5;

/// How Jacobian columns are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JacobianMode {
    Analytic,
    Forward,
    Reverse,
    FiniteDifference,
}

impl JacobianMode {
    pub const ALL: [JacobianMode; 4] = [
        JacobianMode::Analytic,
        JacobianMode::Forward,
        JacobianMode::Reverse,
        JacobianMode::FiniteDifference,
    ];

    /// Analytic when the decoder provides it, forward mode otherwise.
    pub fn preferred(decoder: &dyn Decoder) -> Self {
        if decoder.has_analytic_jacobian() {
            JacobianMode::Analytic
        } else {
            JacobianMode::Forward
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            JacobianMode::Analytic => "analytic",
            JacobianMode::Forward => "forward",
            JacobianMode::Reverse => "reverse",
            JacobianMode::FiniteDifference => "finite_difference",
        }
    }
}

impl fmt::Display for JacobianMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for JacobianMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "analytic" => JacobianMode::Analytic,
            "forward" | "jvp" => JacobianMode::Forward,
            "reverse" | "vjp" => JacobianMode::Reverse,
            "finite_difference" | "fd" => JacobianMode::FiniteDifference,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown Jacobian mode '{other}'"
                )))
            }
        })
    }
}

fn forward_column(decoder: &dyn Decoder, z: &[f64], k: usize) -> Result<Vec<f64>> {
    let mut dir = vec![0.0; z.len()];
    dir[k] = 1.0;
    let out = decoder.decode_dual(&seed(z, &dir))?;
    Ok(out.iter().map(|d| d.eps).collect())
}

fn reverse_jacobian(decoder: &dyn Decoder, z: &[f64]) -> Result<DenseMatrix> {
    let tape = Tape::new();
    let inputs = tape.vars(z);
    let out = decoder.decode_var(&inputs)?;
    let mut data = Vec::with_capacity(out.len() * z.len());
    let mut adj = Vec::new();
    for y in &out {
        if y.is_constant() {
            data.extend(std::iter::repeat_n(0.0, z.len()));
            continue;
        }
        tape.gradient_into(*y, &mut adj)?;
        data.extend(
            inputs
                .iter()
                .map(|v| adj[v.index().expect("input is a tape variable")]),
        );
    }
    DenseMatrix::new(out.len(), z.len(), data)
}

/// Full `D_x × D_z` Jacobian at `z`.
pub fn jacobian(decoder: &dyn Decoder, z: &[f64], mode: JacobianMode) -> Result<DenseMatrix> {
    check_dim("Jacobian point", decoder.latent_dim(), z.len())?;
    let j = match mode {
        JacobianMode::Analytic => decoder.analytic_jacobian(z).ok_or_else(|| {
            Error::Capability(format!(
                "decoder '{}' has no analytic Jacobian",
                decoder.name()
            ))
        })??,
        JacobianMode::Forward => {
            let cols = (0..z.len())
                .map(|k| forward_column(decoder, z, k))
                .collect::<Result<Vec<_>>>()?;
            DenseMatrix::from_columns(&cols)?
        }
        JacobianMode::Reverse => reverse_jacobian(decoder, z)?,
        JacobianMode::FiniteDifference => {
            let failure = RefCell::new(None);
            let j = finite_difference_jacobian(
                |v| match decode_checked(decoder, v) {
                    Ok(x) => x,
                    Err(e) => {
                        failure.borrow_mut().get_or_insert(e);
                        vec![0.0; decoder.data_dim()]
                    }
                },
                z,
                FD_STEP,
            )?;
            if let Some(e) = failure.into_inner() {
                return Err(e);
            }
            j
        }
    };
    check_dim("Jacobian rows", decoder.data_dim(), j.rows())?;
    Ok(j)
}

/// The `S`-columns of the Jacobian. Forward mode evaluates only those columns;
/// other modes slice the full matrix.
pub fn jacobian_columns(
    decoder: &dyn Decoder,
    z: &[f64],
    set: &IndexSet,
    mode: JacobianMode,
) -> Result<DenseMatrix> {
    check_dim("Jacobian point", decoder.latent_dim(), z.len())?;
    if let Some(&last) = set.indices().last() {
        if last >= z.len() {
            return Err(Error::IndexSet(format!(
                "index {} exceeds latent dimension {}",
                last + 1,
                z.len()
            )));
        }
    }
    match mode {
        JacobianMode::Forward => {
            let cols = set
                .indices()
                .iter()
                .map(|&k| forward_column(decoder, z, k))
                .collect::<Result<Vec<_>>>()?;
            DenseMatrix::from_columns(&cols)
        }
        _ => Ok(jacobian(decoder, z, mode)?.select_columns(set.indices())),
    }
}

/// Per-sample Jacobians over a latent batch, with samples whose Jacobian
/// could not be evaluated or is rank deficient flagged rather than dropped.
#[derive(Debug, Clone)]
pub struct JacobianBatch {
    latent_dim: usize,
    data_dim: usize,
    mode: JacobianMode,
    latents: Vec<Vec<f64>>,
    matrices: Vec<DenseMatrix>,
    degenerate: Vec<bool>,
}

impl JacobianBatch {
    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    pub fn data_dim(&self) -> usize {
        self.data_dim
    }

    pub fn mode(&self) -> JacobianMode {
        self.mode
    }

    pub fn latents(&self) -> &[Vec<f64>] {
        &self.latents
    }

    pub fn matrix(&self, i: usize) -> &DenseMatrix {
        &self.matrices[i]
    }

    pub fn matrices(&self) -> &[DenseMatrix] {
        &self.matrices
    }

    pub fn is_degenerate(&self, i: usize) -> bool {
        self.degenerate[i]
    }

    pub fn degenerate_count(&self) -> usize {
        self.degenerate.iter().filter(|d| **d).count()
    }

    /// Gram log-volume of the `S`-columns of sample `i`.
    pub fn log_volume(&self, i: usize, set: &IndexSet) -> Result<f64> {
        gram_log_volume(&self.matrices[i].select_columns(set.indices()))
    }

    /// Builds a batch directly from matrices (for externally computed Jacobians).
    pub fn from_matrices(latents: Vec<Vec<f64>>, matrices: Vec<DenseMatrix>) -> Result<Self> {
        check_dim("Jacobian batch", latents.len(), matrices.len())?;
        let first = matrices
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty Jacobian batch".into()))?;
        let (data_dim, latent_dim) = first.shape();
        for m in &matrices {
            if m.shape() != (data_dim, latent_dim) {
                return Err(Error::Dimension {
                    context: "Jacobian batch matrix",
                    expected: latent_dim,
                    actual: m.cols(),
                });
            }
        }
        let degenerate = matrices
            .iter()
            .map(|m| gram_log_volume(m).is_err())
            .collect();
        Ok(Self {
            latent_dim,
            data_dim,
            mode: JacobianMode::Analytic,
            latents,
            matrices,
            degenerate,
        })
    }
}

/// Evaluates one Jacobian per latent sample. Samples are processed in
/// parallel; results keep input order.
pub fn jacobian_batch(
    decoder: &dyn Decoder,
    latents: &[Vec<f64>],
    mode: JacobianMode,
) -> Result<JacobianBatch> {
    if latents.is_empty() {
        return Err(Error::InvalidArgument(
            "Jacobian batch needs at least one sample".into(),
        ));
    }
    let (d_x, d_z) = (decoder.data_dim(), decoder.latent_dim());
    let results: Vec<Result<(DenseMatrix, bool)>> = latents
        .par_iter()
        .map(|z| match jacobian(decoder, z, mode) {
            Ok(j) => {
                let degenerate = gram_log_volume(&j).is_err();
                Ok((j, degenerate))
            }
            Err(Error::NonFinite(_)) | Err(Error::DegenerateJacobian { .. }) => {
                Ok((DenseMatrix::zeros(d_x, d_z), true))
            }
            Err(e) => Err(e),
        })
        .collect();
    let mut matrices = Vec::with_capacity(latents.len());
    let mut degenerate = Vec::with_capacity(latents.len());
    for r in results {
        let (m, d) = r?;
        matrices.push(m);
        degenerate.push(d);
    }
    Ok(JacobianBatch {
        latent_dim: d_z,
        data_dim: d_x,
        mode,
        latents: latents.to_vec(),
        matrices,
        degenerate,
    })
}
