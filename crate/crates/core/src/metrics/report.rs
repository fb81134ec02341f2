use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::diagnostics::{squared_correlation_matrix, ConvergenceRow};
use super::entropic::{
    manifold_entropies_batch, manifold_total_correlation_batch, mcpmi_matrix_batches,
    mpmi_matrix_batch, sort_spectrum, spectrum_order, total_entropy_batch, SpectrumEntry,
};
use super::estimate::{
    encoder_latents, format_float, prior_latents, DiagonalDominance, EntryMatrix, Estimate,
    SampleSource,
};
use crate::decoders::{jacobian_batch, Decoder, JacobianBatch, JacobianMode, Partition};
use crate::error::{check_dim, Error, Result};

/// Estimator settings shared by `evaluate` and `compare`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalOptions {
    pub samples: usize,
    pub seed: u64,
    /// Jacobian mode; the decoder's preferred mode when absent.
    pub mode: Option<JacobianMode>,
    pub source: SampleSource,
    /// Partition for the total correlation; singletons when absent.
    pub partition: Option<String>,
    pub mpmi: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            samples: 1000,
            seed: 0,
            mode: None,
            source: SampleSource::Prior,
            partition: None,
            mpmi: true,
        }
    }
}

impl EvalOptions {
    pub fn partition(&self, dim: usize) -> Result<Partition> {
        match &self.partition {
            None => Ok(Partition::singletons(dim)),
            Some(p) => Partition::parse(p, dim),
        }
    }

    /// Latents for this run: seeded prior draws, or the first `samples` data
    /// rows pushed through the encoder.
    pub fn latents(
        &self,
        decoder: &dyn Decoder,
        data: Option<&[Vec<f64>]>,
    ) -> Result<Vec<Vec<f64>>> {
        if self.samples < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 samples, got {}",
                self.samples
            )));
        }
        match self.source {
            SampleSource::Prior => Ok(prior_latents(decoder.latent_dim(), self.samples, self.seed)),
            SampleSource::Encoder => {
                let data = data.ok_or_else(|| {
                    Error::InvalidArgument("encoder-pushed sampling needs a data set".into())
                })?;
                let n = self.samples.min(data.len());
                encoder_latents(decoder, &data[..n])
            }
        }
    }

    pub fn batch(&self, decoder: &dyn Decoder, data: Option<&[Vec<f64>]>) -> Result<JacobianBatch> {
        let z = self.latents(decoder, data)?;
        jacobian_batch(
            decoder,
            &z,
            self.mode
                .unwrap_or_else(|| JacobianMode::preferred(decoder)),
        )
    }
}

/// Every single-model metric from one Jacobian batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub decoder: String,
    pub latent_dim: usize,
    pub data_dim: usize,
    pub samples: usize,
    pub seed: u64,
    pub source: SampleSource,
    pub mode: JacobianMode,
    pub total_entropy: Estimate,
    /// `H(q_i)` in original latent order.
    pub manifold_entropies: Vec<Estimate>,
    /// Descending by entropy.
    pub spectrum: Vec<SpectrumEntry>,
    pub partition: String,
    pub mtc: Estimate,
    pub mtc_per_dim: f64,
    pub mpmi: Option<EntryMatrix>,
    /// Samples flagged degenerate in the Jacobian batch.
    pub excluded: usize,
}

impl MetricsReport {
    /// `Σ_S H(q_S) − H(q) − MTC`; zero up to rounding for singleton partitions.
    pub fn decomposition_residual(&self) -> f64 {
        let sum: f64 = self.manifold_entropies.iter().map(|e| e.value).sum();
        sum - self.total_entropy.value - self.mtc.value
    }
}

pub fn evaluate_batch(
    decoder: &dyn Decoder,
    batch: &JacobianBatch,
    options: &EvalOptions,
) -> Result<MetricsReport> {
    check_dim(
        "batch latent dimension",
        decoder.latent_dim(),
        batch.latent_dim(),
    )?;
    let partition = options.partition(decoder.latent_dim())?;
    let total_entropy = total_entropy_batch(batch)?;
    let manifold_entropies = manifold_entropies_batch(batch)?;
    let mtc = manifold_total_correlation_batch(batch, &partition)?;
    let mpmi = if options.mpmi && decoder.latent_dim() >= 2 {
        Some(mpmi_matrix_batch(batch)?)
    } else {
        None
    };
    Ok(MetricsReport {
        decoder: decoder.name(),
        latent_dim: decoder.latent_dim(),
        data_dim: decoder.data_dim(),
        samples: batch.len(),
        seed: options.seed,
        source: options.source,
        mode: batch.mode(),
        spectrum: sort_spectrum(&manifold_entropies),
        manifold_entropies,
        partition: partition.to_string(),
        mtc_per_dim: mtc.value / decoder.latent_dim() as f64,
        mtc,
        mpmi,
        total_entropy,
        excluded: batch.degenerate_count(),
    })
}

pub fn evaluate(
    decoder: &dyn Decoder,
    options: &EvalOptions,
    data: Option<&[Vec<f64>]>,
) -> Result<MetricsReport> {
    let batch = options.batch(decoder, data)?;
    evaluate_batch(decoder, &batch, options)
}

/// Cross-model comparison with both axes sorted by each model's spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossReport {
    pub model_a: String,
    pub model_b: String,
    pub samples: usize,
    pub seed: u64,
    /// 1-based latent dimensions of each model in descending-entropy order.
    pub order_a: Vec<usize>,
    pub order_b: Vec<usize>,
    /// Rows: model a's latent dims; columns: model b's.
    pub mcpmi: EntryMatrix,
    pub mcpmi_dominance: DiagonalDominance,
    /// Rows: model a's encoded dims; columns: model b's ground-truth latents.
    pub pearson: Option<EntryMatrix>,
    pub pearson_dominance: Option<DiagonalDominance>,
}

/// Data generated by model b, with the latents that produced each row.
pub struct LabeledData<'a> {
    pub latents: &'a [Vec<f64>],
    pub data: &'a [Vec<f64>],
}

pub fn compare(
    a: &dyn Decoder,
    b: &dyn Decoder,
    options: &EvalOptions,
    labeled: Option<LabeledData<'_>>,
) -> Result<CrossReport> {
    check_dim(
        "cross-model latent dimension",
        a.latent_dim(),
        b.latent_dim(),
    )?;
    check_dim("cross-model data dimension", a.data_dim(), b.data_dim())?;
    let z = prior_latents(a.latent_dim(), options.samples.max(2), options.seed);
    let mode_a = options.mode.unwrap_or_else(|| JacobianMode::preferred(a));
    let mode_b = options.mode.unwrap_or_else(|| JacobianMode::preferred(b));
    let ba = jacobian_batch(a, &z, mode_a)?;
    let bb = jacobian_batch(b, &z, mode_b)?;
    let order_a = spectrum_order(&sort_spectrum(&manifold_entropies_batch(&ba)?));
    let order_b = spectrum_order(&sort_spectrum(&manifold_entropies_batch(&bb)?));
    let mcpmi = mcpmi_matrix_batches(&ba, &bb)?.reorder(&order_a, &order_b);
    let pearson = match labeled {
        None => None,
        Some(l) => {
            check_dim("labeled rows", l.latents.len(), l.data.len())?;
            let encoded = encoder_latents(a, l.data)?;
            Some(squared_correlation_matrix(&encoded, l.latents)?.reorder(&order_a, &order_b))
        }
    };
    Ok(CrossReport {
        model_a: a.name(),
        model_b: b.name(),
        samples: z.len(),
        seed: options.seed,
        order_a: order_a.iter().map(|i| i + 1).collect(),
        order_b: order_b.iter().map(|i| i + 1).collect(),
        mcpmi_dominance: mcpmi.diagonal_dominance(),
        mcpmi,
        pearson_dominance: pearson.as_ref().map(EntryMatrix::diagonal_dominance),
        pearson,
    })
}

/// `dim,H,stderr` rows in spectrum order.
pub fn spectrum_csv(spectrum: &[SpectrumEntry]) -> String {
    let mut out = String::from("dim,H,stderr\n");
    for e in spectrum {
        let _ = writeln!(
            out,
            "{},{},{}",
            e.dim,
            format_float(e.entropy.value),
            format_float(e.entropy.stderr)
        );
    }
    out
}

/// Dense matrix with a `dim,<col labels>` header and the row label first.
pub fn matrix_csv(m: &EntryMatrix) -> String {
    let mut out = String::from("dim");
    for c in &m.col_labels {
        let _ = write!(out, ",{c}");
    }
    out.push('\n');
    for i in 0..m.rows() {
        let _ = write!(out, "{}", m.row_labels[i]);
        for j in 0..m.cols() {
            let _ = write!(out, ",{}", m.get(i, j).to_text());
        }
        out.push('\n');
    }
    out
}

/// `metric,value,stderr` rows: `H`, `H_<i>` per dimension, `MTC`, `MTC_per_dim`.
pub fn summary_csv(report: &MetricsReport) -> String {
    let mut out = String::from("metric,value,stderr\n");
    let mut row = |name: &str, e: &Estimate| {
        let _ = writeln!(
            out,
            "{name},{},{}",
            format_float(e.value),
            format_float(e.stderr)
        );
    };
    row("H", &report.total_entropy);
    for (i, e) in report.manifold_entropies.iter().enumerate() {
        row(&format!("H_{}", i + 1), e);
    }
    row("MTC", &report.mtc);
    let d = report.latent_dim as f64;
    let _ = writeln!(
        out,
        "MTC_per_dim,{},{}",
        format_float(report.mtc_per_dim),
        format_float(report.mtc.stderr / d)
    );
    out
}

/// `samples,mean,std,repeats` rows.
pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut out = String::from("samples,mean,std,repeats\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.samples,
            format_float(r.mean),
            format_float(r.std),
            r.repeats
        );
    }
    out
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    s.push('\n');
    Ok(s)
}
