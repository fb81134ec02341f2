//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs with `cargo test -p manimet-cli --test acceptance`. Set
//! `MANIMET_ACCEPTANCE=fast` to skip the two long training criteria (7, 8).

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use manimet_core::decoders::{
    jacobian, jacobian_batch, AffineDecoder, Decoder, FlowDecoder, IndexSet, JacobianBatch,
    JacobianMode, MlpDecoder, Partition,
};
use manimet_core::dgp::TorusDatasetConfig;
use manimet_core::flows::{Activation, FlowArchitecture, FlowModel, MlpShape};
use manimet_core::metrics::{
    evaluate, manifold_entropy_batch, manifold_mutual_information_batch,
    manifold_total_correlation_batch, mpmi_matrix_batch, prior_batch, prior_latents,
    torus_ground_truth_metrics, total_entropy_batch, EvalOptions,
};
use manimet_core::numerics::{gram_log_volume, DenseMatrix};
use manimet_core::training::{batch_gradient, batch_objective, Objective};
use rand::{seq::SliceRandom, Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Duration,
    soft: bool,
    slow: bool,
    run: fn() -> Outcome,
}

const MIN: u64 = 60;

fn criteria() -> Vec<Criterion> {
    let c = |id, name, secs, soft, slow, run| Criterion {
        id,
        name,
        limit: Duration::from_secs(secs),
        soft,
        slow,
        run,
    };
    vec![
        c(
            1,
            "affine closed form",
            1,
            false,
            false,
            affine_closed_form as fn() -> Outcome,
        ),
        c(
            2,
            "decomposition identity",
            30,
            false,
            false,
            decomposition_identity,
        ),
        c(
            3,
            "integrand nonnegativity",
            30,
            false,
            false,
            nonnegativity,
        ),
        c(4, "cosine form", 5, false, false, cosine_form),
        c(5, "AD correctness", 2 * MIN, false, false, ad_correctness),
        c(
            6,
            "torus ground truth",
            30,
            false,
            false,
            torus_ground_truth,
        ),
        c(7, "two moons end to end", 30 * MIN, false, true, two_moons),
        c(8, "torus recovery", 30 * MIN, true, true, torus_recovery),
        c(9, "convergence", 2 * MIN, false, false, convergence),
        c(10, "determinism", 5 * MIN, false, false, determinism),
    ]
}

fn line(text: &str) {
    // Bypasses test output capture so every line reaches the log.
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "{text}");
}

fn main() {
    let fast = std::env::var("MANIMET_ACCEPTANCE").is_ok_and(|v| v == "fast");
    let mut hard_failures = 0;
    for c in criteria() {
        if fast && c.slow {
            line(&format!(
                "SKIP {:>2} {} (MANIMET_ACCEPTANCE=fast)",
                c.id, c.name
            ));
            continue;
        }
        let start = Instant::now();
        let result = (c.run)();
        let took = start.elapsed();
        let (ok, detail) = match result {
            Ok(d) if took <= c.limit => (true, d),
            Ok(d) => (
                false,
                format!(
                    "{d}; took {:.1}s > {}s",
                    took.as_secs_f64(),
                    c.limit.as_secs()
                ),
            ),
            Err(d) => (false, d),
        };
        let tag = if ok { "PASS" } else { "FAIL" };
        let soft = if c.soft { " [soft]" } else { "" };
        line(&format!(
            "{tag} {:>2} {}{soft} ({:.1}s): {detail}",
            c.id,
            c.name,
            took.as_secs_f64()
        ));
        if !ok && !c.soft {
            hard_failures += 1;
        }
    }
    if hard_failures > 0 {
        line(&format!("{hard_failures} acceptance criteria failed"));
        std::process::exit(1);
    }
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_mlp(d: usize, out: usize, seed: u64) -> MlpDecoder {
    MlpDecoder::random(
        MlpShape::new(vec![d, 16, out], Activation::Tanh).unwrap(),
        &mut rng(seed),
    )
    .unwrap()
}

fn random_flow(d: usize, seed: u64) -> FlowModel {
    let arch = FlowArchitecture {
        dim: d,
        blocks: 3,
        hidden: vec![8],
        seed,
        ..Default::default()
    };
    let mut m = FlowModel::new(&arch).unwrap();
    let mut r = rng(seed ^ 0xf10);
    let p = (0..m.param_count())
        .map(|_| r.gen_range(-0.4..0.4))
        .collect();
    m.set_params(p).unwrap();
    m
}

/// Random MLPs and flows of mixed latent and data dimension.
fn random_decoders(count: usize, seed: u64) -> Vec<Arc<dyn Decoder>> {
    let mut r = rng(seed);
    (0..count)
        .map(|k| {
            let d = r.gen_range(2..6);
            let s = r.gen();
            if k % 3 == 2 {
                Arc::new(FlowDecoder::new(random_flow(d, s))) as Arc<dyn Decoder>
            } else {
                Arc::new(random_mlp(d, d + r.gen_range(0..4), s))
            }
        })
        .collect()
}

fn random_partition(d: usize, r: &mut ChaCha8Rng) -> Partition {
    let mut idx: Vec<usize> = (0..d).collect();
    idx.shuffle(r);
    let cut = r.gen_range(1..d);
    Partition::new(
        vec![
            IndexSet::new(idx[..cut].to_vec(), d).unwrap(),
            IndexSet::new(idx[cut..].to_vec(), d).unwrap(),
        ],
        d,
    )
    .unwrap()
}

fn affine_closed_form() -> Outcome {
    let d = AffineDecoder::diagonal(&[2.0, 0.5]).map_err(err)?;
    let r = evaluate(
        &d,
        &EvalOptions {
            samples: 100,
            ..Default::default()
        },
        None,
    )
    .map_err(err)?;
    let half = 0.5 * (1.0 + (2.0 * PI).ln());
    let ln2 = 2f64.ln();
    let mpmi = r.mpmi.as_ref().ok_or("no MPMI matrix")?;
    let off = [mpmi.get(0, 1).value(), mpmi.get(1, 0).value()];
    let checks = [
        ("H(q1)", r.manifold_entropies[0].value, half + ln2),
        ("H(q2)", r.manifold_entropies[1].value, half - ln2),
        ("H(q)", r.total_entropy.value, 2.83788),
        ("MTC", r.mtc.value, 0.0),
        ("MPMI(1,2)", off[0].ok_or("MPMI(1,2) not finite")?, 0.0),
        ("MPMI(2,1)", off[1].ok_or("MPMI(2,1) not finite")?, 0.0),
    ];
    let mut worst = 0f64;
    for (name, got, want) in checks {
        let tol = if name == "H(q)" { 1e-5 } else { 1e-10 };
        check((got - want).abs() <= tol, || {
            format!("{name} = {got}, expected {want}")
        })?;
        if name != "H(q)" {
            worst = worst.max((got - want).abs());
        }
    }
    check((r.total_entropy.value - 2.0 * half).abs() <= 1e-10, || {
        "H(q) off closed form".into()
    })?;
    let spread = r
        .manifold_entropies
        .iter()
        .chain([&r.total_entropy, &r.mtc])
        .map(|e| e.stderr)
        .fold(0.0, f64::max);
    check(spread == 0.0, || {
        format!("nonzero Monte Carlo stderr {spread}")
    })?;
    Ok(format!("max error {worst:.1e}, zero stderr"))
}

fn decomposition_identity() -> Outcome {
    let mut worst = 0f64;
    let mut r = rng(2);
    for (k, dec) in random_decoders(20, 20).iter().enumerate() {
        let d = dec.latent_dim();
        let batch = prior_batch(dec.as_ref(), 200, k as u64, None).map_err(err)?;
        let h = total_entropy_batch(&batch).map_err(err)?.value;
        for p in [Partition::singletons(d), random_partition(d, &mut r)] {
            let sum: f64 = p
                .sets()
                .iter()
                .map(|s| manifold_entropy_batch(&batch, s).map(|e| e.value))
                .sum::<Result<f64, _>>()
                .map_err(err)?;
            let mtc = manifold_total_correlation_batch(&batch, &p)
                .map_err(err)?
                .value;
            worst = worst.max((sum - h - mtc).abs());
        }
        let p = random_partition(d, &mut r);
        let (s, t) = (&p.sets()[0], &p.sets()[1]);
        let hs = manifold_entropy_batch(&batch, s).map_err(err)?.value;
        let ht = manifold_entropy_batch(&batch, t).map_err(err)?.value;
        let hst = manifold_entropy_batch(&batch, &s.union(t))
            .map_err(err)?
            .value;
        let mi = manifold_mutual_information_batch(&batch, s, t)
            .map_err(err)?
            .value;
        worst = worst.max((hst - hs - ht + mi).abs());
    }
    check(worst <= 1e-10, || format!("worst residual {worst:.3e}"))?;
    Ok(format!("20 decoders, worst residual {worst:.1e}"))
}

fn log_vol(j: &DenseMatrix, set: &[usize]) -> Result<f64, String> {
    gram_log_volume(&j.select_columns(set)).map_err(err)
}

/// Smallest MTC and pairwise-MI integrand over a batch.
fn min_integrands(batch: &JacobianBatch, r: &mut ChaCha8Rng) -> Result<f64, String> {
    let d = batch.latent_dim();
    let mut lowest = f64::INFINITY;
    for i in 0..batch.len() {
        let j = batch.matrix(i);
        let singles: Vec<f64> = (0..d).map(|k| log_vol(j, &[k])).collect::<Result<_, _>>()?;
        let all: Vec<usize> = (0..d).collect();
        lowest = lowest.min(singles.iter().sum::<f64>() - log_vol(j, &all)?);
        for a in 0..d {
            for b in a + 1..d {
                lowest = lowest.min(singles[a] + singles[b] - log_vol(j, &[a, b])?);
            }
        }
        let p = random_partition(d, r);
        let (s, t) = (p.sets()[0].indices(), p.sets()[1].indices());
        lowest = lowest.min(log_vol(j, s)? + log_vol(j, t)? - log_vol(j, &all)?);
    }
    Ok(lowest)
}

fn nonnegativity() -> Outcome {
    let torus = TorusDatasetConfig::default().decoder().map_err(err)?;
    let mut decoders: Vec<Arc<dyn Decoder>> = vec![
        Arc::new(AffineDecoder::identity(3)),
        Arc::new(AffineDecoder::diagonal(&[2.0, 0.5]).map_err(err)?),
        Arc::new(
            AffineDecoder::new(
                DenseMatrix::from_fn(4, 3, |i, k| ((i + 1) as f64).powi(k as i32)),
                vec![0.0; 4],
            )
            .map_err(err)?,
        ),
        Arc::new(torus),
    ];
    decoders.extend(random_decoders(9, 3));
    let mut r = rng(3);
    let mut lowest = f64::INFINITY;
    for (k, dec) in decoders.iter().enumerate() {
        let batch = prior_batch(dec.as_ref(), 1000, 100 + k as u64, None).map_err(err)?;
        lowest = lowest.min(min_integrands(&batch, &mut r)?);
    }
    check(lowest >= -1e-9, || {
        format!("integrand {lowest:.3e} below -1e-9")
    })?;
    Ok(format!(
        "{} decoders x 1000 samples, min integrand {lowest:.2e}",
        decoders.len()
    ))
}

fn cosine_form() -> Outcome {
    let mut r = rng(4);
    let mut worst = 0f64;
    for _ in 0..1000 {
        let m = r.gen_range(2..8);
        let a: Vec<f64> = (0..m).map(|_| r.gen_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..m).map(|_| r.gen_range(-1.0..1.0)).collect();
        let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        let cos2 = dot * dot
            / (a.iter().map(|v| v * v).sum::<f64>() * b.iter().map(|v| v * v).sum::<f64>());
        if cos2 > 1.0 - 1e-6 {
            continue;
        }
        let want = -0.5 * (1.0 - cos2).ln();
        let dec = AffineDecoder::new(
            DenseMatrix::from_columns(&[a, b]).map_err(err)?,
            vec![0.0; m],
        )
        .map_err(err)?;
        let batch =
            jacobian_batch(&dec, &prior_latents(2, 2, 0), JacobianMode::Forward).map_err(err)?;
        let got = mpmi_matrix_batch(&batch)
            .map_err(err)?
            .get(0, 1)
            .value()
            .ok_or("MPMI entry not finite")?;
        worst = worst.max((got - want).abs());
    }
    check(worst <= 1e-10, || format!("worst deviation {worst:.3e}"))?;
    Ok(format!("1000 pairs, worst deviation {worst:.1e}"))
}

fn ad_correctness() -> Outcome {
    let torus = TorusDatasetConfig::default().decoder().map_err(err)?;
    let decoders: Vec<(Arc<dyn Decoder>, bool)> = vec![
        (Arc::new(torus), true),
        (Arc::new(random_mlp(4, 7, 5)), false),
        (Arc::new(FlowDecoder::new(random_flow(3, 5))), false),
    ];
    let (mut ad, mut fd) = (0f64, 0f64);
    for (dec, analytic) in &decoders {
        for z in prior_latents(dec.latent_dim(), 20, 5) {
            let fwd = jacobian(dec.as_ref(), &z, JacobianMode::Forward).map_err(err)?;
            let rev = jacobian(dec.as_ref(), &z, JacobianMode::Reverse).map_err(err)?;
            let num = jacobian(dec.as_ref(), &z, JacobianMode::FiniteDifference).map_err(err)?;
            ad = ad.max(fwd.max_abs_diff(&rev));
            if *analytic {
                ad = ad.max(fwd.max_abs_diff(
                    &jacobian(dec.as_ref(), &z, JacobianMode::Analytic).map_err(err)?,
                ));
            }
            fd = fd.max(fwd.max_abs_diff(&num));
        }
    }
    check(ad <= 1e-9, || format!("AD modes disagree by {ad:.3e}"))?;
    check(fd <= 1e-5, || format!("finite differences off by {fd:.3e}"))?;

    let mut model = random_flow(2, 6);
    let data = prior_latents(2, 24, 9);
    let objectives = [
        Objective::Ml,
        Objective::MlMtc {
            lambda: 1.0,
            partition: Partition::singletons(2),
        },
        Objective::MlRec {
            lambda: 5.0,
            core: IndexSet::parse("1", 2).map_err(err)?,
        },
    ];
    let mut worst = 0f64;
    let params = model.params().to_vec();
    let picks: Vec<usize> = (0..params.len())
        .step_by((params.len() / 25).max(1))
        .collect();
    for obj in &objectives {
        model.set_params(params.clone()).map_err(err)?;
        let g = batch_gradient(&model, &data, obj).map_err(err)?.gradient;
        for &i in &picks {
            let h = 1e-5;
            let mut eval = |delta: f64| {
                let mut p = params.clone();
                p[i] += delta;
                model.set_params(p).map_err(err)?;
                batch_objective(&model, &data, obj).map_err(err)
            };
            let num = (eval(h)? - eval(-h)?) / (2.0 * h);
            let rel = (g[i] - num).abs() / g[i].abs().max(num.abs()).max(1e-3);
            worst = worst.max(rel);
        }
    }
    check(worst <= 1e-3, || {
        format!("training gradient relative error {worst:.3e}")
    })?;
    Ok(format!(
        "AD {ad:.1e}, FD {fd:.1e}, training gradients {worst:.1e}"
    ))
}

fn torus_ground_truth() -> Outcome {
    let torus = TorusDatasetConfig::default().decoder().map_err(err)?;
    let g = torus_ground_truth_metrics(&torus, 1000, 6).map_err(err)?;
    check(g.mtc.value <= 1e-8, || format!("MTC {:.3e}", g.mtc.value))?;
    let z = g
        .azimuthal_differences
        .iter()
        .map(|d| d.z_score())
        .fold(0.0, f64::max);
    check(z <= 3.0, || {
        format!("log-scale gap off by {z:.2} standard errors")
    })?;
    let n = torus.circles();
    let min_az = g.entropies[..n]
        .iter()
        .map(|e| e.value)
        .fold(f64::INFINITY, f64::min);
    let max_rad = g.entropies[n..]
        .iter()
        .map(|e| e.value)
        .fold(f64::NEG_INFINITY, f64::max);
    check(min_az > max_rad, || {
        format!("azimuthal ME {min_az:.4} not above radial {max_rad:.4}")
    })?;
    Ok(format!(
        "MTC {:.1e}, max z {z:.2}, ME gap {:.3}",
        g.mtc.value,
        min_az - max_rad
    ))
}

fn manifests_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../manifests")
}

fn scratch_dir(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR"))
        .join("acceptance")
        .join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

/// Runs the CLI in `cwd` so the manifest's relative paths land there.
fn manimet(cwd: &Path, args: &[&str], threads: Option<usize>) -> Result<String, String> {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_manimet"));
    cmd.args(args).current_dir(cwd).env_remove("MANIMET_OUT");
    if let Some(t) = threads {
        cmd.env("RAYON_NUM_THREADS", t.to_string());
    }
    let out = cmd.output().map_err(err)?;
    if out.status.success() {
        Ok(String::from_utf8_lossy(&out.stdout).into_owned())
    } else {
        Err(format!(
            "manimet {} failed: {}",
            args.join(" "),
            String::from_utf8_lossy(&out.stderr).trim()
        ))
    }
}

fn manifest(name: &str) -> String {
    manifests_dir()
        .join(name)
        .canonicalize()
        .unwrap()
        .to_string_lossy()
        .into_owned()
}

fn csv_rows(path: &Path) -> Result<Vec<Vec<String>>, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect())
}

fn summary_value(path: &Path, metric: &str) -> Result<f64, String> {
    csv_rows(path)?
        .into_iter()
        .find(|r| r[0] == metric)
        .and_then(|r| r[1].parse().ok())
        .ok_or_else(|| format!("{metric} missing in {}", path.display()))
}

fn train_and_eval(cwd: &Path, name: &str) -> Result<PathBuf, String> {
    let m = manifest(&format!("{name}.toml"));
    manimet(cwd, &["train", "--manifest", &m], None)?;
    manimet(cwd, &["eval", "--manifest", &m], None)?;
    Ok(cwd.join("runs").join(name))
}

fn two_moons() -> Outcome {
    let cwd = scratch_dir("two_moons");
    let mut notes = Vec::new();
    let mut failures = Vec::new();
    for (regime, name) in [
        ("A", "two_moons_a"),
        ("B", "two_moons_b"),
        ("C", "two_moons_c"),
    ] {
        let start = Instant::now();
        let dir = train_and_eval(&cwd, name)?;
        let took = start.elapsed().as_secs_f64();
        let summary = dir.join("summary.csv");
        let (ok, what) = match regime {
            "A" => {
                let v = summary_value(&summary, "MTC_per_dim")?;
                ((0.3..=1.5).contains(&v), format!("MTC {v:.4}/dim"))
            }
            "B" => {
                let v = summary_value(&summary, "MTC_per_dim")?;
                (v <= 0.05, format!("MTC {v:.4}/dim"))
            }
            _ => {
                let v = summary_value(&summary, "H_1")? - summary_value(&summary, "H_2")?;
                (v >= 2.0, format!("H1-H2 {v:.3}"))
            }
        };
        let ok = ok && took < 600.0;
        notes.push(format!("{regime} {what} in {took:.0}s"));
        if !ok {
            failures.push(regime);
        }
    }
    let text = notes.join(", ");
    if failures.is_empty() {
        Ok(text)
    } else {
        Err(format!("{text}; failing regime {}", failures.join(",")))
    }
}

fn dominance(path: &Path) -> Result<Vec<(String, f64)>, String> {
    csv_rows(path)?
        .into_iter()
        .map(|r| {
            let ratio = match r[3].as_str() {
                "inf" => f64::INFINITY,
                s => s.parse().map_err(|_| format!("bad ratio '{s}'"))?,
            };
            Ok((r[0].clone(), ratio))
        })
        .collect()
}

fn torus_recovery() -> Outcome {
    let cwd = scratch_dir("torus");
    let m = manifest("torus_recovery.toml");
    manimet(&cwd, &["train", "--manifest", &m], None)?;
    manimet(&cwd, &["compare", "--manifest", &m], None)?;
    let ratios = dominance(&cwd.join("runs/torus_recovery/dominance.csv"))?;
    let text = ratios
        .iter()
        .map(|(n, r)| format!("{n} ratio {r:.2}"))
        .collect::<Vec<_>>()
        .join(", ");
    check(ratios.len() == 2, || {
        format!("expected MCPMI and Pearson rows: {text}")
    })?;
    check(ratios.iter().all(|(_, r)| *r >= 5.0), || text.clone())?;
    Ok(text)
}

fn convergence() -> Outcome {
    let cwd = scratch_dir("convergence");
    let m = manifest("convergence.toml");
    manimet(&cwd, &["train", "--manifest", &m], None)?;
    manimet(&cwd, &["convergence", "--manifest", &m], None)?;
    let rows = csv_rows(&cwd.join("runs/convergence/convergence.csv"))?;
    let std_at = |n: &str| -> Result<f64, String> {
        rows.iter()
            .find(|r| r[0] == n)
            .and_then(|r| r[2].parse().ok())
            .ok_or_else(|| format!("no row for N={n}"))
    };
    let (small, large) = (std_at("100")?, std_at("1000")?);
    check(large < small, || {
        format!("std {large:.4} at N=1000 not below {small:.4} at N=100")
    })?;
    Ok(format!("std {small:.4} (N=100) -> {large:.4} (N=1000)"))
}

fn files_under(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

/// The wall-clock `seconds` column of `history.csv` is the one intended
/// difference between runs.
fn comparable(path: &Path, bytes: Vec<u8>) -> Vec<u8> {
    if path.file_name().is_some_and(|n| n == "history.csv") {
        let text = String::from_utf8_lossy(&bytes);
        return text
            .lines()
            .map(|l| format!("{}\n", l.rsplit_once(',').map_or(l, |(head, _)| head)))
            .collect::<String>()
            .into_bytes();
    }
    bytes
}

fn determinism() -> Outcome {
    let m = manifest("smoke.toml");
    let mut runs = Vec::new();
    for (k, threads) in [1usize, 4].into_iter().enumerate() {
        let cwd = scratch_dir(&format!("determinism_{k}"));
        for cmd in ["generate", "train", "eval", "compare", "convergence"] {
            manimet(&cwd, &[cmd, "--manifest", &m, "--svg"], Some(threads))?;
        }
        runs.push(cwd);
    }
    let (a, b) = (files_under(&runs[0]), files_under(&runs[1]));
    check(a == b, || format!("file sets differ: {a:?} vs {b:?}"))?;
    let reports = a
        .iter()
        .filter(|p| p.extension().is_some_and(|e| e == "csv" || e == "svg"))
        .count();
    for rel in &a {
        let x = comparable(rel, fs::read(runs[0].join(rel)).map_err(err)?);
        let y = comparable(rel, fs::read(runs[1].join(rel)).map_err(err)?);
        check(x == y, || {
            format!("{} differs between 1 and 4 threads", rel.display())
        })?;
    }
    Ok(format!(
        "{} files identical across 1 and 4 threads ({reports} CSV/SVG)",
        a.len()
    ))
}
