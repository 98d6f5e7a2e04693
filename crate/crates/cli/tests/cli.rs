use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn marketlab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_marketlab"))
        .args(args)
        .current_dir(dir)
        .env_remove("MARKETLAB_OUT")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect()
}

fn price_file(dir: &Path, name: &str, closes: &[f64]) -> std::path::PathBuf {
    let mut text = String::from("date,close\n");
    let start = 719_162; // 1970-01-01 in days from 0001-01-01
    for (i, c) in closes.iter().enumerate() {
        text.push_str(&format!("{},{c}\n", iso_day(start + i as i64)));
    }
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

/// Proleptic Gregorian date for a day count from 0001-01-01.
fn iso_day(days: i64) -> String {
    let z = days - 719_162 + 719_468;
    let era = z.div_euclid(146_097);
    let doe = z - era * 146_097;
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = doy - (153 * mp + 2) / 5 + 1;
    let m = if mp < 10 { mp + 3 } else { mp - 9 };
    let y = yoe + era * 400 + (m <= 2) as i64;
    format!("{y:04}-{m:02}-{d:02}")
}

#[test]
fn zim_smoke_run_writes_every_file() {
    let tmp = TempDir::new().unwrap();
    let o = marketlab(&["simulate", "--model", "zim", "--steps", "300", "--out", "run"], tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let run = tmp.path().join("run");
    for f in ["steps.csv", "impacts.csv", "depth.csv", "report.json", "manifest.json"] {
        assert!(run.join(f).exists(), "{f}");
    }
    assert_eq!(rows(&run.join("steps.csv")).len(), 300);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["config"]["config"]["steps"], 300);
}

#[test]
fn same_seed_same_bytes() {
    let tmp = TempDir::new().unwrap();
    for out in ["a", "b"] {
        let o = marketlab(
            &["simulate", "--model", "hybrid", "--steps", "500", "--seed", "9", "--out", out],
            tmp.path(),
        );
        assert_eq!(code(&o), 0);
    }
    let read = |d: &str| std::fs::read(tmp.path().join(d).join("steps.csv")).unwrap();
    assert_eq!(read("a"), read("b"));
}

#[test]
fn output_directory_defaults_to_env() {
    let tmp = TempDir::new().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_marketlab"))
        .args(["simulate", "--model", "cont", "--steps", "50"])
        .current_dir(tmp.path())
        .env("MARKETLAB_OUT", "from-env")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(tmp.path().join("from-env/steps.csv").exists());
}

#[test]
fn cont_hand_trace() {
    // five agents with zero thresholds all follow the sign of the news, so
    // every step moves the log price by exactly 5 / (10 * 5)
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("cont.toml");
    std::fs::write(
        &cfg,
        "n_agents = 5\nmarket_depth = 10.0\nupdate_prob = 0.0\nsteps = 2\ninitial_price = 100.0\n\
         [initial_threshold]\nkind = \"constant\"\nvalue = 0.0\n",
    )
    .unwrap();
    let o = marketlab(
        &["simulate", "--model", "cont", "--config", "cont.toml", "--out", "c"],
        tmp.path(),
    );
    // two returns are too few to score, so the run completes as degenerate
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&tmp.path().join("c/steps.csv"));
    assert_eq!(r.len(), 2);
    let mut price = 100.0f64;
    for row in &r {
        let ret: f64 = row[6].parse().unwrap();
        assert!((ret.abs() - 0.1).abs() < 1e-15, "{ret}");
        price *= ret.exp();
        let got: f64 = row[1].parse().unwrap();
        assert!((got - price).abs() < 1e-12);
        assert_eq!(row[7], "5");
    }
}

#[test]
fn config_errors_exit_2() {
    let tmp = TempDir::new().unwrap();
    std::fs::write(tmp.path().join("bad.toml"), "limit_rat = 3.0\n").unwrap();
    let o = marketlab(&["simulate", "--model", "zim", "--config", "bad.toml"], tmp.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("limit_rat"));
    std::fs::write(tmp.path().join("neg.toml"), "limit_rate = -3.0\n").unwrap();
    let o = marketlab(&["simulate", "--model", "zim", "--config", "neg.toml"], tmp.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("limit_rate"));
    let o = marketlab(&["stats", "--input", "missing.csv"], tmp.path());
    assert_eq!(code(&o), 2);
}

#[test]
fn ingest_windows_and_reports_line_errors() {
    let tmp = TempDir::new().unwrap();
    let closes: Vec<f64> = (1..=7000).map(f64::from).collect();
    price_file(tmp.path(), "long.csv", &closes);
    let o = marketlab(&["ingest", "--input", "long.csv", "--out", "i"], tmp.path());
    assert_eq!(code(&o), 0);
    let kept = rows(&tmp.path().join("i/prices.csv"));
    assert_eq!(kept.len(), 6546);
    assert_eq!(kept[0][1], "455");

    std::fs::write(tmp.path().join("zero.csv"), "date,close\n2000-01-03,1\n2000-01-04,0\n").unwrap();
    let o = marketlab(&["ingest", "--input", "zero.csv"], tmp.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn stats_on_constant_series_is_degenerate() {
    let tmp = TempDir::new().unwrap();
    price_file(tmp.path(), "flat.csv", &[5.0; 300]);
    let o = marketlab(&["stats", "--input", "flat.csv", "--out", "s"], tmp.path());
    assert_eq!(code(&o), 3);
    assert!(tmp.path().join("s/report.json").exists());
}

#[test]
fn stats_on_gaussian_returns() {
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let n = Normal::new(0.0, 0.01).unwrap();
    let mut p = 100.0f64;
    let closes: Vec<f64> = (0..5000)
        .map(|_| {
            p *= f64::exp(n.sample(&mut rng));
            p
        })
        .collect();
    let tmp = TempDir::new().unwrap();
    price_file(tmp.path(), "g.csv", &closes);
    let o = marketlab(&["stats", "--input", "g.csv", "--out", "s"], tmp.path());
    assert_eq!(code(&o), 0);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("s/report.json")).unwrap()).unwrap();
    let scores = &report["fitness"]["scores"];
    assert!(scores["tails"].as_f64().unwrap() < 0.1);
    assert!(scores["clustering"].as_f64().unwrap() < 0.3);
    assert!(scores["no_autocorr"].as_f64().unwrap() >= 0.8);
    for f in ["panel_prices.csv", "panel_histogram.csv", "panel_acf.csv", "panel_abs_acf.csv"] {
        assert!(tmp.path().join("s").join(f).exists(), "{f}");
    }
}

#[test]
fn fractal_line_and_comparison() {
    let tmp = TempDir::new().unwrap();
    let line: Vec<f64> = (1..=5000).map(f64::from).collect();
    price_file(tmp.path(), "line.csv", &line);
    let o = marketlab(&["fractal", "--input", "line.csv", "--out", "f"], tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("f/verdict.json")).unwrap()).unwrap();
    assert!((v["box_dimension"].as_f64().unwrap() - 1.0).abs() < 0.05);
    assert_eq!(v["verdict"], "MONOFRACTAL");
    assert_eq!(rows(&tmp.path().join("f/spectrum.csv")).len(), 21);

    let o = marketlab(&["simulate", "--model", "zim", "--steps", "5000", "--out", "z"], tmp.path());
    assert_eq!(code(&o), 0);
    let o = marketlab(
        &["fractal", "--input", "z/steps.csv", "--compare", "line.csv", "--out", "fc"],
        tmp.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("fc/verdict.json")).unwrap()).unwrap();
    assert!(v["compare"]["spectrum_distance"].as_f64().unwrap() > 0.0);
    assert!(tmp.path().join("fc/spectrum_compare.csv").exists());
}

#[test]
fn sweep_rows_rerun_and_ranking() {
    let tmp = TempDir::new().unwrap();
    std::fs::write(
        tmp.path().join("plan.toml"),
        r#"
model = "zim"
steps = 600
base_seed = 11

[[params]]
name = "limit_rate"
values = [-1.0, 10.0]

[[params]]
name = "market_rate"
values = [0.5, 1.0, 2.0]
"#,
    )
    .unwrap();
    for (out, workers) in [("a", "1"), ("b", "2")] {
        let o = marketlab(
            &["sweep", "--plan", "plan.toml", "--workers", workers, "--out", out],
            tmp.path(),
        );
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let read = |d: &str| std::fs::read(tmp.path().join(d).join("results.csv")).unwrap();
    assert_eq!(read("a"), read("b"));
    assert_eq!(rows(&tmp.path().join("a/results.csv")).len(), 6);
    let ranking = rows(&tmp.path().join("a/ranking.csv"));
    let flagged: Vec<bool> = ranking.iter().map(|r| !r[4].is_empty()).collect();
    assert_eq!(flagged, [false, false, false, true, true, true]);
}
