use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn homgate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_homgate")).args(args).output().expect("binary runs")
}

fn read_table(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut comments = Vec::new();
    let mut rows = Vec::new();
    for line in text.lines() {
        match line.strip_prefix("# ") {
            Some(c) => comments.push(c.to_string()),
            None => rows.push(line.split(',').map(str::to_string).collect()),
        }
    }
    (comments, rows)
}

fn column(rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let idx = rows[0].iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows[1..].iter().map(|r| r[idx].parse().unwrap()).collect()
}

fn json_field(path: &Path, key: &str) -> f64 {
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    v[key].as_f64().unwrap()
}

#[test]
fn fidelity_curve_hits_reference_points() {
    let dir = tempfile::tempdir().unwrap();
    let out = homgate(&["--out", dir.path().to_str().unwrap(), "fidelity-curve", "--grid", "1,0.9,0"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (comments, rows) = read_table(&dir.path().join("fidelity_curve.csv"));
    assert_eq!(comments[0], "seed=0");
    assert_eq!(rows[0], ["V", "F_model", "F_werner"]);
    let f = column(&rows, "F_model");
    let w = column(&rows, "F_werner");
    let expect = |v: f64| (1.0 + v) / (2.0 * (2.0 - v));
    for (k, v) in [1.0, 0.9, 0.0].into_iter().enumerate() {
        assert!((f[k] - expect(v)).abs() < 1e-12);
        assert!((w[k] - (1.0 + 3.0 * v) / 4.0).abs() < 1e-12);
    }
}

#[test]
fn same_seed_gives_identical_files() {
    let run = |seed: &str| {
        let dir = tempfile::tempdir().unwrap();
        let out = homgate(&[
            "--out", dir.path().to_str().unwrap(), "--seed", seed, "--eta", "0.8",
            "tomography", "--bell", "psi-", "--shots", "5000",
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        (
            fs::read(dir.path().join("counts_psiminus.csv")).unwrap(),
            fs::read(dir.path().join("rho_psiminus.json")).unwrap(),
        )
    };
    let a = run("7");
    assert_eq!(a, run("7"));
    assert_ne!(a.0, run("8").0);
}

#[test]
fn tomography_recovers_ideal_and_white_noise_limits() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = homgate(&["--out", d, "--eta", "1", "--oracle", "tomography", "--bell", "phi+"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let f = json_field(&dir.path().join("report_phiplus.json"), "fidelity");
    assert!(f >= 0.999, "F = {f}");

    let out = homgate(&["--out", d, "--eta", "1", "--noise", "1", "tomography", "--bell", "phi+"]);
    assert!(out.status.success());
    let f = json_field(&dir.path().join("report_phiplus.json"), "fidelity");
    assert!((f - 0.25).abs() < 0.01, "F = {f}");
}

#[test]
fn long_window_matches_unwindowed_overlap() {
    let dir = tempfile::tempdir().unwrap();
    let out = homgate(&["--out", dir.path().to_str().unwrap(), "--window-offset", "-5e-9", "window-sweep", "--tau", "5e-9,1e-7"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (_, rows) = read_table(&dir.path().join("window_sweep.csv"));
    let eta = column(&rows, "eta");

    let hom = tempfile::tempdir().unwrap();
    let out = homgate(&["--out", hom.path().to_str().unwrap(), "hom", "--start", "0", "--stop", "0", "--step", "1e-10"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (_, hom_rows) = read_table(&hom.path().join("hom.csv"));
    let free = column(&hom_rows, "eta")[0];
    assert!((eta[1] - free).abs() < 1e-6, "{} vs {free}", eta[1]);
    // a window closing at the memory peak sees only the leading edges
    assert!((eta[0] - free).abs() > 1e-3);
    for row in column(&rows, "acceptance_memory") {
        assert!((0.0..=1.0).contains(&row));
    }
}

#[test]
fn hom_dip_matches_overlap() {
    let dir = tempfile::tempdir().unwrap();
    let out = homgate(&["--out", dir.path().to_str().unwrap(), "--oracle", "hom", "--step", "2.5e-10"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (comments, rows) = read_table(&dir.path().join("hom.csv"));
    assert_eq!(rows[0], ["delay_s", "coincidence", "eta"]);
    let c = column(&rows, "coincidence");
    let e = column(&rows, "eta");
    for (c, e) in c.iter().zip(&e) {
        assert!((c - (1.0 - e) / 2.0).abs() < 1e-12);
    }
    let vis: f64 = comments.iter().find_map(|l| l.strip_prefix("visibility=")).unwrap().parse().unwrap();
    let max_eta = e.iter().copied().fold(0.0, f64::max);
    assert!((vis - max_eta).abs() < 1e-12);
}

#[test]
fn truth_tables_and_chsh_write_expected_columns() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert!(homgate(&["--out", d, "--eta", "1", "--oracle", "truth-table"]).status.success());
    let (comments, rows) = read_table(&dir.path().join("truth_table_fidelity.csv"));
    assert_eq!(rows[0], ["basis", "fidelity"]);
    assert!(column(&rows, "fidelity").iter().all(|f| (f - 1.0).abs() < 1e-12));
    assert!(comments.iter().any(|c| c.starts_with("process_lower=")));
    let (_, rows) = read_table(&dir.path().join("truth_table.csv"));
    assert_eq!(rows.len(), 1 + 3 * 16);

    assert!(homgate(&["--out", d, "--eta", "0.5", "chsh", "--bell", "phi+"]).status.success());
    let (_, rows) = read_table(&dir.path().join("chsh.csv"));
    let s = column(&rows, "S_max")[0];
    let f = column(&rows, "fidelity")[0];
    assert!((f - 0.5).abs() < 1e-12);
    assert!(s < 2.0 && s > 1.0);
    assert_eq!(rows[1][rows[0].iter().position(|h| h == "violates_chsh").unwrap()], "false");
}

#[test]
fn stdout_carries_seed_line_without_out_dir() {
    let out = homgate(&["--seed", "42", "fidelity-curve", "--points", "2"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# seed=42\nV,F_model,F_werner\n"), "{text}");
}

#[test]
fn bad_input_exits_with_code_two() {
    for args in [
        &["--eta", "1.5", "chsh"][..],
        &["--noise", "-0.1", "tomography"],
        &["hom", "--step", "0"],
        &["tomography", "--bell", "chi"],
        &["truth-table", "--basis", "zx"],
        &["--config", "/nonexistent.toml", "chsh"],
        &["no-such-command"],
    ] {
        let out = homgate(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn scenario_file_drives_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "seed = 3\neta = 0.9\nout = \"results\"\n").unwrap();
    let out = homgate(&["--config", cfg.to_str().unwrap(), "chsh", "--bell", "psi+"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (comments, rows) = read_table(&dir.path().join("results/chsh.csv"));
    assert_eq!(comments[0], "seed=3");
    assert!((column(&rows, "eta")[0] - 0.9).abs() < 1e-15);

    fs::write(&cfg, "eta = 0.9\nbogus = 1\n").unwrap();
    assert_eq!(homgate(&["--config", cfg.to_str().unwrap(), "chsh"]).status.code(), Some(2));
}
