//! Manifold entropic metrics as Monte Carlo averages over decoder Jacobians.
//!
//! All quantities are in nats. Estimators that take a [`JacobianBatch`]
//! share one set of samples, so identities between metrics hold to rounding.
//!
//! [`JacobianBatch`]: crate::decoders::JacobianBatch

mod diagnostics;
mod entropic;
mod estimate;
mod report;

pub use diagnostics::{
    convergence_diagnostic, latent_std, latent_variance_spectrum, mean_jacobian_column,
    pearson_cross_correlation, repeat_seeds, spearman_rank_correlation, squared_correlation_matrix,
    torus_ground_truth_metrics, ConvergenceRow, EntropyDifference, MetricKind, TorusGroundTruth,
    VarianceEntry,
};
pub use entropic::{
    manifold_entropies_batch, manifold_entropy, manifold_entropy_batch, manifold_entropy_spectrum,
    manifold_entropy_spectrum_batch, manifold_log_density, manifold_mutual_information,
    manifold_mutual_information_batch, manifold_total_correlation,
    manifold_total_correlation_batch, mcpmi_matrix, mcpmi_matrix_batches, mpmi_matrix,
    mpmi_matrix_batch, pair_information, sort_spectrum, spectrum_order, total_entropy,
    total_entropy_batch, SpectrumEntry,
};
pub use estimate::{
    encoder_latents, format_float, prior_batch, prior_latents, DiagonalDominance, Entry,
    EntryMatrix, Estimate, SampleSource, COLLINEAR_TOLERANCE, MAX_EXCLUDED_FRACTION,
};
pub use report::{
    compare, convergence_csv, evaluate, evaluate_batch, matrix_csv, spectrum_csv, summary_csv,
    to_json, CrossReport, EvalOptions, LabeledData, MetricsReport,
};
