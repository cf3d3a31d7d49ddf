//! End-to-end checks of the command surface.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use cafet_core::dgp::{generate_dgp, DgpSpec};
use cafet_core::pipeline::{write_panel_csv, write_schema_csv, RawPanel, SeriesSchema};

use cafet_cli::commands::{cmd_diagnose, cmd_test, TestOptions};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cafet"))
}

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

/// Write a simulated dataset (target plus block-structured predictors) as a
/// data/schema CSV pair; all series are level (tcode 1).
fn write_synthetic_dataset(dir: &Path, spec: &DgpSpec) -> (PathBuf, PathBuf) {
    let sim = generate_dgp(spec).expect("simulates");
    let t_len = sim.y.len();
    let mut columns: Vec<Vec<Option<f64>>> = vec![sim.y.iter().map(|v| Some(*v)).collect()];
    let mut names = vec!["target".to_string()];
    let mut schema = vec![SeriesSchema {
        name: "target".into(),
        block: 1,
        tcode: 1,
        target: true,
    }];
    for j in 0..sim.panel.n_series() {
        columns.push(sim.panel.values.column(j).iter().map(|v| Some(*v)).collect());
        names.push(sim.panel.series_names[j].clone());
        schema.push(SeriesSchema {
            name: sim.panel.series_names[j].clone(),
            block: sim.panel.block_of[j],
            tcode: 1,
            target: false,
        });
    }
    let raw = RawPanel {
        columns,
        series_names: names,
        time_index: (1..=t_len).map(|t| t.to_string()).collect(),
    };
    let data = dir.join("data.csv");
    let schema_path = dir.join("schema.csv");
    write_panel_csv(&raw, &data).unwrap();
    write_schema_csv(&schema, &schema_path).unwrap();
    (data, schema_path)
}

#[test]
fn smoke_profile_completes_quickly_and_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    let start = Instant::now();
    for out in [&out_a, &out_b] {
        let status = bin()
            .args([
                "simulate",
                "--config",
                config_path("smoke.cfg").to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ])
            .status()
            .expect("binary runs");
        assert!(status.success());
    }
    assert!(
        start.elapsed().as_secs() < 10,
        "smoke profile took {:?}",
        start.elapsed()
    );
    let a = std::fs::read(out_a.join("rejections.csv")).unwrap();
    let b = std::fs::read(out_b.join("rejections.csv")).unwrap();
    assert_eq!(a, b, "same config + seed must give byte-identical CSV");
}

#[test]
fn invalid_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("broken.cfg");
    std::fs::write(&cfg, "cell = dgp=2 N=20 T=80\nreps = many\n").unwrap();
    let output = bin()
        .args([
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.path().join("out").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains(":2:"), "diagnostics carry the line: {stderr}");
}

#[test]
fn missing_target_exits_3_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = DgpSpec::design(2, 10, 120).unwrap();
    spec.seed = 5;
    let (data, schema) = write_synthetic_dataset(dir.path(), &spec);
    let output = bin()
        .args([
            "test",
            "--data",
            data.to_str().unwrap(),
            "--schema",
            schema.to_str().unwrap(),
            "--target",
            "ghost",
            "--out",
            dir.path().join("out").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&output.stderr).contains("ghost"));
}

#[test]
fn short_sample_refused_with_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    // T = 24 leaves only 18 out-of-sample points after the 25% cutoff.
    let mut spec = DgpSpec::design(2, 10, 24).unwrap();
    spec.seed = 5;
    let (data, schema) = write_synthetic_dataset(dir.path(), &spec);
    let output = bin()
        .args([
            "test",
            "--data",
            data.to_str().unwrap(),
            "--schema",
            schema.to_str().unwrap(),
            "--target",
            "target",
            "--out",
            dir.path().join("out").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&output.stderr).contains("at least 20"));
}

#[test]
fn planted_signal_rejects_on_stationary_panel() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = DgpSpec::design(2, 40, 240).unwrap();
    spec.alpha = 0.6;
    spec.seed = 424242;
    let (data, schema) = write_synthetic_dataset(dir.path(), &spec);
    let out = dir.path().join("out");
    let opts = TestOptions::default();
    cmd_test(&data, &schema, "target", &out, &opts).unwrap();
    let csv = std::fs::read_to_string(out.join("tests.csv")).unwrap();
    let stationary_ps: Vec<f64> = csv
        .lines()
        .filter(|l| l.contains(",stationary,"))
        .map(|l| l.split(',').nth(3).unwrap().parse().unwrap())
        .collect();
    assert_eq!(stationary_ps.len(), 4);
    for p in stationary_ps {
        assert!(p < 0.10, "planted signal should reject: p = {p}");
    }
    let md = std::fs::read_to_string(out.join("tests.md")).unwrap();
    assert!(md.contains("**"), "markdown bolds significant p-values");
}

#[test]
fn null_p_values_are_roughly_uniform_over_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let mut below = 0usize;
    let mut total = 0usize;
    for seed in 0..100u64 {
        let run_dir = dir.path().join(format!("s{seed}"));
        std::fs::create_dir_all(&run_dir).unwrap();
        let mut spec = DgpSpec::design(2, 15, 160).unwrap();
        spec.seed = 7000 + seed;
        let (data, schema) = write_synthetic_dataset(&run_dir, &spec);
        let out = run_dir.join("out");
        cmd_test(&data, &schema, "target", &out, &TestOptions::default()).unwrap();
        let csv = std::fs::read_to_string(out.join("tests.csv")).unwrap();
        for line in csv.lines().filter(|l| l.contains(",stationary,")) {
            let p: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
            below += usize::from(p < 0.10);
            total += 1;
        }
    }
    let fraction = below as f64 / total as f64;
    assert!(
        (0.04..=0.20).contains(&fraction),
        "null fraction below 0.10 was {fraction:.3} over {total} p-values"
    );
}

#[test]
fn diagnose_reports_one_factor_with_exact_columns() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = DgpSpec::design(2, 60, 200).unwrap();
    spec.seed = 99;
    let (data, schema) = write_synthetic_dataset(dir.path(), &spec);
    let out = dir.path().join("out");
    cmd_diagnose(&data, &schema, &out).unwrap();
    let csv = std::fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "dataset,ER,SC,Abs SC,XC,Abs XC");
    let stationary = lines.next().unwrap();
    assert!(stationary.starts_with("stationary,1,"), "{stationary}");
}

#[test]
fn empty_dataset_is_a_structured_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    let schema = dir.path().join("schema.csv");
    std::fs::write(&data, "date,a\n").unwrap();
    std::fs::write(&schema, "name,block,tcode,target\na,1,1,0\n").unwrap();
    let output = bin()
        .args([
            "diagnose",
            "--data",
            data.to_str().unwrap(),
            "--schema",
            schema.to_str().unwrap(),
            "--out",
            dir.path().join("out").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(3));
}

#[test]
fn table2_subset_config_parses_with_six_cells() {
    let cfg = cafet_cli::config::load_config(&config_path("table2_subset.cfg")).unwrap();
    assert_eq!(cfg.cells.len(), 6);
    assert_eq!(cfg.reps, 1000);
    assert!(cfg.cells.iter().all(|c| c.dgp_id == 2 && c.alpha == 0.0));
}
