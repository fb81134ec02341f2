use std::fs;
use std::path::{Path, PathBuf};

use manimet_core::decoders::TorusDecoder;
use manimet_core::dgp::{sample_torus, two_moons_arc_distance, DatasetConfig};
use manimet_core::metrics::{
    compare, convergence_csv, convergence_diagnostic, evaluate, format_float, matrix_csv,
    spectrum_csv, summary_csv, to_json, CrossReport, DiagonalDominance, EvalOptions, LabeledData,
    MetricKind, MetricsReport, SampleSource,
};
use manimet_core::training::{train, TrainHistory, TrainStatus};
use manimet_core::Error;
use serde::Serialize;

use crate::error::CliError;
use crate::manifest::{output_dir, RunManifest};
use crate::registry::{resolve_decoder, GROUND_TRUTH};
use crate::svg::{heatmap_svg, line_svg, spectrum_svg, Bar};

/// Command-line overrides shared by every command.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub svg: bool,
    pub decoder: Option<String>,
}

/// Files written by one command, in write order.
#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
}

impl RunOutput {
    fn create(dir: PathBuf) -> Result<Self, CliError> {
        fs::create_dir_all(&dir).map_err(|e| {
            CliError::usage(format!(
                "cannot create output directory {}: {e}",
                dir.display()
            ))
        })?;
        Ok(Self {
            dir,
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents)
            .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))?;
        self.files.push(path);
        Ok(())
    }

    fn resolved(&mut self, manifest: &mut RunManifest, command: &str) -> Result<(), CliError> {
        manifest.command = Some(command.into());
        manifest.out = Some(self.dir.clone());
        let text = manifest.to_toml()?;
        self.write("manifest.toml", text)
    }
}

fn no_samples(o: &Overrides, command: &str) -> Result<(), CliError> {
    match o.samples {
        Some(_) => Err(CliError::usage(format!(
            "--samples does not apply to {command}"
        ))),
        None => Ok(()),
    }
}

#[derive(Debug, Serialize)]
struct DatasetSummary {
    kind: &'static str,
    samples: usize,
    dims: usize,
    mean: Vec<f64>,
    std: Vec<f64>,
    /// Sample std of the distance to the noiseless arcs (two moons only).
    #[serde(skip_serializing_if = "Option::is_none")]
    arc_residual_std: Option<f64>,
    /// Frozen ground-truth decoder with its rotation and normalization.
    #[serde(skip_serializing_if = "Option::is_none")]
    torus: Option<TorusDecoder>,
}

fn column_stats(data: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let d = data.first().map_or(0, Vec::len);
    let n = data.len() as f64;
    let mean: Vec<f64> = (0..d)
        .map(|k| data.iter().map(|r| r[k]).sum::<f64>() / n)
        .collect();
    let std = (0..d)
        .map(|k| {
            let ss: f64 = data.iter().map(|r| (r[k] - mean[k]).powi(2)).sum();
            (ss / (n - 1.0).max(1.0)).sqrt()
        })
        .collect();
    (mean, std)
}

fn sample_std(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)).sqrt()
}

pub fn cmd_generate(mut m: RunManifest, o: &Overrides, stem: &str) -> Result<RunOutput, CliError> {
    let mut dataset = m.dataset()?.clone();
    match &mut dataset {
        DatasetConfig::TwoMoons(c) => {
            c.samples = o.samples.unwrap_or(c.samples);
            c.seed = o.seed.unwrap_or(c.seed);
        }
        DatasetConfig::Torus(c) => {
            c.samples = o.samples.unwrap_or(c.samples);
            c.seed = o.seed.unwrap_or(c.seed);
        }
    }
    let (kind, data, arc, torus) = match &dataset {
        DatasetConfig::TwoMoons(_) => {
            let data = dataset.generate()?;
            let dist: Vec<f64> = data.iter().map(|p| two_moons_arc_distance(p)).collect();
            ("two_moons", data, Some(sample_std(&dist)), None)
        }
        DatasetConfig::Torus(c) => {
            let ds = sample_torus(c)?;
            ("torus", ds.data(), None, Some(ds.decoder))
        }
    };
    let (mean, std) = column_stats(&data);
    let summary = DatasetSummary {
        kind,
        samples: data.len(),
        dims: dataset.dim(),
        mean,
        std,
        arc_residual_std: arc,
        torus,
    };
    let mut out = RunOutput::create(output_dir(o.out.as_deref(), &m, stem))?;
    let mut csv = String::from("dim,mean,std\n");
    for (k, (mu, sd)) in summary.mean.iter().zip(&summary.std).enumerate() {
        csv.push_str(&format!(
            "{},{},{}\n",
            k + 1,
            format_float(*mu),
            format_float(*sd)
        ));
    }
    out.write("dataset_summary.csv", csv)?;
    out.write("dataset_summary.json", to_json(&summary)?)?;
    m.dataset = Some(dataset);
    out.resolved(&mut m, "generate")?;
    println!("{kind}: {} samples, {} dims", summary.samples, summary.dims);
    if let Some(a) = arc {
        println!("arc residual std {a:.6}");
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
struct TrainSummary {
    status: &'static str,
    epochs_run: usize,
    initial_nll: f64,
    final_nll: f64,
    final_reg: f64,
    skipped_samples: usize,
    rejected_steps: u64,
}

impl TrainSummary {
    fn new(h: &TrainHistory, status: &TrainStatus) -> Self {
        let last = h.epochs.last();
        Self {
            status: match status {
                TrainStatus::Completed => "completed",
                TrainStatus::Diverged { .. } => "diverged",
            },
            epochs_run: h.epochs.len(),
            initial_nll: h.initial_nll,
            final_nll: last.map_or(f64::NAN, |r| r.nll),
            final_reg: last.map_or(f64::NAN, |r| r.reg),
            skipped_samples: h.skipped_samples,
            rejected_steps: h.rejected_steps,
        }
    }
}

pub fn cmd_train(mut m: RunManifest, o: &Overrides, stem: &str) -> Result<RunOutput, CliError> {
    no_samples(o, "train")?;
    let mut config = m.train_config()?;
    if let Some(s) = o.seed {
        config.seed = s;
    }
    config.validate()?;
    m.set_train_config(&config)?;
    let mut out = RunOutput::create(output_dir(o.out.as_deref(), &m, stem))?;
    out.resolved(&mut m, "train")?;
    let outcome = train(&config, Some(&out.dir))?;
    out.write("history.csv", outcome.history.to_csv())?;
    out.write(
        "train_summary.json",
        to_json(&TrainSummary::new(&outcome.history, &outcome.status))?,
    )?;
    match outcome.status {
        TrainStatus::Completed => {
            out.files.push(out.dir.join("model.flow"));
            let s = TrainSummary::new(&outcome.history, &outcome.status);
            println!(
                "trained {} epochs: nll {:.4} -> {:.4}, reg {:.4}",
                s.epochs_run, s.initial_nll, s.final_nll, s.final_reg
            );
            Ok(out)
        }
        TrainStatus::Diverged {
            epoch,
            nll,
            initial,
        } => Err(Error::Divergence {
            epoch,
            nll,
            initial,
        }
        .into()),
    }
}

fn spectrum_bars(report: &MetricsReport) -> Vec<Bar> {
    report
        .spectrum
        .iter()
        .map(|e| Bar {
            label: e.dim.to_string(),
            value: e.entropy.value,
            stderr: e.entropy.stderr,
        })
        .collect()
}

pub fn cmd_eval(mut m: RunManifest, o: &Overrides, stem: &str) -> Result<RunOutput, CliError> {
    let mut sec = m.eval.clone().unwrap_or_default();
    if let Some(d) = &o.decoder {
        sec.model = Some(d.clone());
    }
    sec.samples = o.samples.unwrap_or(sec.samples);
    sec.seed = o.seed.unwrap_or(sec.seed);
    sec.svg |= o.svg;
    let name = sec
        .model
        .clone()
        .ok_or_else(|| CliError::usage("eval needs a model: set [eval] model or pass --decoder"))?;
    let decoder = resolve_decoder(&name, m.dataset.as_ref())?;
    let data = match sec.source {
        SampleSource::Encoder => Some(m.dataset()?.generate()?),
        SampleSource::Prior => None,
    };
    let report = evaluate(decoder.as_ref(), &sec.options(), data.as_deref())?;
    let mut out = RunOutput::create(output_dir(o.out.as_deref(), &m, stem))?;
    out.write("summary.csv", summary_csv(&report))?;
    out.write("spectrum.csv", spectrum_csv(&report.spectrum))?;
    if let Some(mpmi) = &report.mpmi {
        out.write("mpmi.csv", matrix_csv(mpmi))?;
    }
    out.write("report.json", to_json(&report)?)?;
    if sec.svg {
        out.write(
            "spectrum.svg",
            spectrum_svg(
                &spectrum_bars(&report),
                "manifold entropy spectrum",
                "H (nats)",
            ),
        )?;
        if let Some(mpmi) = &report.mpmi {
            out.write(
                "mpmi.svg",
                heatmap_svg(mpmi, "pairwise manifold mutual information"),
            )?;
        }
    }
    m.eval = Some(sec);
    out.resolved(&mut m, "eval")?;
    println!(
        "{}: H {:.6} ± {:.2e}, MTC {:.6} ({:.6} per dim), excluded {}",
        report.decoder,
        report.total_entropy.value,
        report.total_entropy.stderr,
        report.mtc.value,
        report.mtc_per_dim,
        report.excluded
    );
    Ok(out)
}

fn dominance_csv(report: &CrossReport) -> String {
    let mut s = String::from("matrix,mean_diagonal,mean_off_diagonal,ratio,unbounded_diagonal\n");
    let mut row = |name: &str, d: &DiagonalDominance| {
        s.push_str(&format!(
            "{name},{},{},{},{}\n",
            format_float(d.mean_diagonal),
            format_float(d.mean_off_diagonal),
            format_float(d.ratio),
            d.unbounded_diagonal
        ));
    };
    row("mcpmi", &report.mcpmi_dominance);
    if let Some(p) = &report.pearson_dominance {
        row("pearson", p);
    }
    s
}

pub fn cmd_compare(mut m: RunManifest, o: &Overrides, stem: &str) -> Result<RunOutput, CliError> {
    let mut sec = m.compare.clone().unwrap_or_default();
    if let Some(d) = &o.decoder {
        sec.model_a = Some(d.clone());
    }
    sec.samples = o.samples.unwrap_or(sec.samples);
    sec.seed = o.seed.unwrap_or(sec.seed);
    sec.svg |= o.svg;
    let name_a = sec.model_a.clone().ok_or_else(|| {
        CliError::usage("compare needs model_a: set [compare] model_a or pass --decoder")
    })?;
    let a = resolve_decoder(&name_a, m.dataset.as_ref())?;
    let b = resolve_decoder(&sec.model_b, m.dataset.as_ref())?;
    let torus = match &m.dataset {
        Some(DatasetConfig::Torus(c)) => Some(c.clone()),
        _ => None,
    };
    let pearson = match sec.pearson {
        Some(p) => p,
        None => torus.is_some() && a.has_encoder(),
    };
    let labeled = if pearson {
        let c =
            torus.ok_or_else(|| CliError::usage("pearson needs a labeled (torus) [dataset]"))?;
        Some(sample_torus(&c)?)
    } else {
        None
    };
    let (latents, data) = match &labeled {
        Some(ds) => (ds.latents(), ds.data()),
        None => (Vec::new(), Vec::new()),
    };
    let options = EvalOptions {
        samples: sec.samples,
        seed: sec.seed,
        mode: sec.mode,
        ..EvalOptions::default()
    };
    let lab = labeled.as_ref().map(|_| LabeledData {
        latents: &latents,
        data: &data,
    });
    let report = compare(a.as_ref(), b.as_ref(), &options, lab)?;
    let mut out = RunOutput::create(output_dir(o.out.as_deref(), &m, stem))?;
    out.write("mcpmi.csv", matrix_csv(&report.mcpmi))?;
    if let Some(p) = &report.pearson {
        out.write("pearson.csv", matrix_csv(p))?;
    }
    out.write("dominance.csv", dominance_csv(&report))?;
    out.write("compare.json", to_json(&report)?)?;
    if sec.svg {
        out.write(
            "mcpmi.svg",
            heatmap_svg(
                &report.mcpmi,
                "cross-model pointwise manifold mutual information",
            ),
        )?;
        if let Some(p) = &report.pearson {
            out.write("pearson.svg", heatmap_svg(p, "squared Pearson correlation"))?;
        }
    }
    sec.pearson = Some(pearson);
    m.compare = Some(sec);
    out.resolved(&mut m, "compare")?;
    let b_label = if m.compare.as_ref().map(|s| s.model_b.as_str()) == Some(GROUND_TRUTH) {
        GROUND_TRUTH.to_string()
    } else {
        report.model_b.clone()
    };
    println!(
        "{} vs {}: MCPMI diagonal/off-diagonal ratio {:.4}",
        report.model_a, b_label, report.mcpmi_dominance.ratio
    );
    if let Some(p) = &report.pearson_dominance {
        println!("Pearson diagonal/off-diagonal ratio {:.4}", p.ratio);
    }
    Ok(out)
}

pub fn cmd_convergence(
    mut m: RunManifest,
    o: &Overrides,
    stem: &str,
) -> Result<RunOutput, CliError> {
    no_samples(o, "convergence (set sizes in [convergence])")?;
    let mut sec = m.convergence.clone().unwrap_or_default();
    if let Some(d) = &o.decoder {
        sec.model = Some(d.clone());
    }
    sec.seed = o.seed.unwrap_or(sec.seed);
    sec.svg |= o.svg;
    let name = sec.model.clone().ok_or_else(|| {
        CliError::usage("convergence needs a model: set [convergence] model or pass --decoder")
    })?;
    let kind: MetricKind = sec.metric.parse()?;
    let decoder = resolve_decoder(&name, m.dataset.as_ref())?;
    let rows = convergence_diagnostic(decoder.as_ref(), &kind, &sec.sizes, sec.repeats, sec.seed)?;
    let mut out = RunOutput::create(output_dir(o.out.as_deref(), &m, stem))?;
    out.write("convergence.csv", convergence_csv(&rows))?;
    if sec.svg {
        let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.samples as f64, r.std)).collect();
        let title = format!("spread of {kind} over {} repeats", sec.repeats);
        out.write(
            "convergence.svg",
            line_svg(&pts, &title, "samples", "std (nats)"),
        )?;
    }
    for r in &rows {
        println!("N={:<7} mean {:.6} std {:.3e}", r.samples, r.mean, r.std);
    }
    m.convergence = Some(sec);
    out.resolved(&mut m, "convergence")?;
    Ok(out)
}

/// Manifest file stem used for default output directories.
pub fn stem_of(manifest: Option<&Path>, command: &str) -> String {
    manifest
        .and_then(|p| p.file_stem())
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| command.to_string())
}
