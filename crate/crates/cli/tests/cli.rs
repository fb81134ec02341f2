use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use manimet_cli::{EXIT_DIVERGENCE, EXIT_OK, EXIT_USAGE};

fn manimet(args: &[&str]) -> Output {
    manimet_in(Path::new("."), args)
}

fn manimet_in(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_manimet"))
        .args(args)
        .current_dir(cwd)
        .env_remove("MANIMET_OUT")
        .output()
        .expect("spawn manimet")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write_manifest(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn csv_value(path: &Path, metric: &str) -> f64 {
    let text = fs::read_to_string(path).unwrap();
    let line = text
        .lines()
        .find(|l| l.split(',').next() == Some(metric))
        .unwrap_or_else(|| panic!("{metric} missing from {}", path.display()));
    line.split(',').nth(1).unwrap().parse().unwrap()
}

/// Paths inside are relative to `dir`, so runs in different directories
/// produce identical reports.
fn smoke_manifest(dir: &Path) -> PathBuf {
    let text = r#"out = "run"

[dataset]
kind = "two_moons"
samples = 300
seed = 3

[train]
epochs = 6
batch_size = 100
seed = 1
flow = { blocks = 2, bins = 4, hidden = [8] }
loss = { mode = "ml_mtc", lambda = 1.0 }

[eval]
model = "run/model.flow"
samples = 120
svg = true

[convergence]
model = "run/model.flow"
sizes = [30, 120]
repeats = 3
svg = true
"#;
    write_manifest(dir, "smoke.toml", text)
}

#[test]
fn missing_manifest_is_a_usage_error() {
    assert_eq!(code(&manimet(&["train"])), EXIT_USAGE);
    assert_eq!(code(&manimet(&["frobnicate"])), EXIT_USAGE);
    assert_eq!(
        code(&manimet(&["eval", "--manifest", "/nonexistent/m.toml"])),
        EXIT_USAGE
    );
}

#[test]
fn unknown_manifest_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_manifest(
        dir.path(),
        "bad.toml",
        "[dataset]\nkind = \"two_moons\"\nnoize = 0.2\n",
    );
    let out = manimet(&["generate", "--manifest", m.to_str().unwrap()]);
    assert_eq!(code(&out), EXIT_USAGE);
    assert!(String::from_utf8_lossy(&out.stderr).contains("noize"));
}

#[test]
fn train_without_dataset_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_manifest(dir.path(), "nodata.toml", "[train]\nepochs = 1\n");
    assert_eq!(
        code(&manimet(&["train", "--manifest", m.to_str().unwrap()])),
        EXIT_USAGE
    );
}

#[test]
fn divergence_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        "out = \"{}\"\n[dataset]\nkind = \"two_moons\"\nsamples = 100\n[train]\nepochs = 3\nbatch_size = 50\n\
         flow = {{ blocks = 2, hidden = [4] }}\ndivergence_factor = -100.0\ndivergence_patience = 1\n",
        dir.path().join("out").display()
    );
    let m = write_manifest(dir.path(), "diverge.toml", &text);
    let out = manimet(&["train", "--manifest", m.to_str().unwrap()]);
    assert_eq!(
        code(&out),
        EXIT_DIVERGENCE,
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn builtin_affine_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let out = manimet(&[
        "eval",
        "--decoder",
        "affine:diag:2,0.5",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(
        code(&out),
        EXIT_OK,
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let s = dir.path().join("summary.csv");
    let half = 0.5 * (1.0 + (2.0 * std::f64::consts::PI).ln());
    assert!((csv_value(&s, "H_1") - (half + 2f64.ln())).abs() < 1e-10);
    assert!((csv_value(&s, "H_1") - 2.11208).abs() < 1e-5);
    assert!((csv_value(&s, "H_2") - (half - 2f64.ln())).abs() < 1e-10);
    assert!(csv_value(&s, "MTC").abs() < 1e-10);
    assert!(dir.path().join("manifest.toml").exists());
}

#[test]
fn torus_ground_truth_has_no_total_correlation() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_manifest(
        dir.path(),
        "torus.toml",
        "[dataset]\nkind = \"torus\"\n[eval]\nmodel = \"ground-truth\"\nmode = \"analytic\"\n",
    );
    let out = manimet(&[
        "eval",
        "--manifest",
        m.to_str().unwrap(),
        "--samples",
        "300",
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(
        code(&out),
        EXIT_OK,
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(csv_value(&dir.path().join("o/summary.csv"), "MTC").abs() < 1e-8);
}

#[test]
fn generate_writes_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_manifest(
        dir.path(),
        "gen.toml",
        "[dataset]\nkind = \"torus\"\nsamples = 500\n",
    );
    let o = dir.path().join("g");
    assert_eq!(
        code(&manimet(&[
            "generate",
            "--manifest",
            m.to_str().unwrap(),
            "--out",
            o.to_str().unwrap()
        ])),
        EXIT_OK
    );
    let csv = fs::read_to_string(o.join("dataset_summary.csv")).unwrap();
    assert_eq!(csv.lines().count(), 21);
    assert!(o.join("dataset_summary.json").exists());
}

/// `history.csv` carries wall-clock seconds in its last column.
fn without_timing(name: &str, bytes: Vec<u8>) -> Vec<u8> {
    if name != "history.csv" {
        return bytes;
    }
    let text = String::from_utf8(bytes).unwrap();
    text.lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head).to_string() + "\n")
        .collect::<String>()
        .into_bytes()
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            let bytes = without_timing(&name, fs::read(&p).unwrap());
            (name, bytes)
        })
        .collect();
    files.sort();
    files
}

#[test]
fn smoke_pipeline_is_deterministic() {
    let mut runs = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().unwrap();
        let m = smoke_manifest(dir.path());
        let m = m.to_str().unwrap();
        for cmd in ["train", "eval", "convergence"] {
            let out = manimet_in(dir.path(), &[cmd, "--manifest", m]);
            assert_eq!(
                code(&out),
                EXIT_OK,
                "{cmd}: {}",
                String::from_utf8_lossy(&out.stderr)
            );
        }
        let files = snapshot(&dir.path().join("run"));
        let names: Vec<&str> = files.iter().map(|(n, _)| n.as_str()).collect();
        for want in [
            "model.flow",
            "history.csv",
            "summary.csv",
            "mpmi.csv",
            "spectrum.svg",
            "convergence.csv",
        ] {
            assert!(names.contains(&want), "{want} missing: {names:?}");
        }
        runs.push((files, dir));
    }
    let (a, b) = (&runs[0].0, &runs[1].0);
    assert_eq!(a.len(), b.len());
    for ((na, ba), (nb, bb)) in a.iter().zip(b) {
        assert_eq!(na, nb);
        assert!(ba == bb, "{na} differs between runs");
    }
}

#[test]
fn samples_flag_is_rejected_for_training() {
    let dir = tempfile::tempdir().unwrap();
    let m = smoke_manifest(dir.path());
    assert_eq!(
        code(&manimet(&[
            "train",
            "--manifest",
            m.to_str().unwrap(),
            "--samples",
            "10"
        ])),
        EXIT_USAGE
    );
}
