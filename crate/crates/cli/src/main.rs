//! `marketlab` command-line driver.
//!
//! Exit codes: 0 success, 2 configuration or input error, 3 finished on
//! degenerate data, 1 anything else.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use marketlab::fractal::{analyze_series, spectrum_distance, FractalConfig, FractalReport};
use marketlab::io::{read_price_csv, Align, PriceSeries, RunManifest, DEFAULT_WINDOW};
use marketlab::model::ModelConfig;
use marketlab::output::{read_steps_csv, ModelKind};
use marketlab::stats::{evaluate, log_returns, write_json, FactPanels, ScoringConfig, Weights};
use marketlab::sweep::{rank, run_sweep, RankKey, SweepPlan};

#[derive(Parser)]
#[command(name = "marketlab", version, about = "Single-asset market simulation laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutDir {
    /// Output directory.
    #[arg(long, env = "MARKETLAB_OUT", default_value = "marketlab-out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run one model and write its per-step output, report and manifest.
    Simulate {
        #[arg(long)]
        model: ModelKind,
        /// TOML config; unknown keys are rejected.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        steps: Option<usize>,
        #[command(flatten)]
        out: OutDir,
    },
    /// Stylized-fact report and figure panels for a price file or a simulation's steps.csv.
    Stats {
        #[arg(long)]
        input: PathBuf,
        /// Leading steps to drop from a steps.csv.
        #[arg(long, default_value_t = 0)]
        burn_in: usize,
        /// TOML scoring config.
        #[arg(long)]
        scoring: Option<PathBuf>,
        #[arg(long, default_value_t = 50)]
        bins: usize,
        #[command(flatten)]
        out: OutDir,
    },
    /// Box dimension, multifractal spectrum and verdict of a price series.
    Fractal {
        #[arg(long)]
        input: PathBuf,
        /// Second series; its spectrum and the distance between the two are written too.
        #[arg(long)]
        compare: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_WINDOW)]
        window: usize,
        #[arg(long, default_value_t = 32)]
        samples_per_box: usize,
        #[command(flatten)]
        out: OutDir,
    },
    /// Full-factorial parameter sweep.
    Sweep {
        #[arg(long)]
        plan: PathBuf,
        /// Worker threads; 0 picks one per core.
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long, default_value = "product")]
        rank: RankKey,
        #[command(flatten)]
        out: OutDir,
    },
    /// Validate and window a `date,close` file.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_WINDOW)]
        window: usize,
        #[arg(long, default_value = "end")]
        align: Align,
        #[command(flatten)]
        out: OutDir,
    },
}

enum Outcome {
    Done,
    Degenerate,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Degenerate) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(err) = cause.downcast_ref::<marketlab::Error>() {
            if err.is_validation() {
                return 2;
            }
            if let marketlab::Error::Io(io) = err {
                if io.kind() == std::io::ErrorKind::NotFound {
                    return 2;
                }
            }
        }
        if let Some(io) = cause.downcast_ref::<std::io::Error>() {
            if io.kind() == std::io::ErrorKind::NotFound {
                return 2;
            }
        }
    }
    1
}

fn run(cmd: Command) -> anyhow::Result<Outcome> {
    let start = Instant::now();
    match cmd {
        Command::Simulate {
            model,
            config,
            seed,
            steps,
            out,
        } => simulate(model, config.as_deref(), seed, steps, &out.out, start),
        Command::Stats {
            input,
            burn_in,
            scoring,
            bins,
            out,
        } => stats(&input, burn_in, scoring.as_deref(), bins, &out.out, start),
        Command::Fractal {
            input,
            compare,
            window,
            samples_per_box,
            out,
        } => fractal(&input, compare.as_deref(), window, samples_per_box, &out.out, start),
        Command::Sweep {
            plan,
            workers,
            rank,
            out,
        } => sweep(&plan, workers, rank, &out.out, start),
        Command::Ingest {
            input,
            window,
            align,
            out,
        } => ingest(&input, window, align, &out.out, start),
    }
}

fn read_text(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path)
        .map_err(marketlab::Error::from)
        .with_context(|| format!("reading {}", path.display()))
}

/// Writes a file through `f` and records its name.
fn emit(
    dir: &Path,
    name: &str,
    outputs: &mut Vec<String>,
    f: impl FnOnce(std::fs::File) -> marketlab::Result<()>,
) -> anyhow::Result<()> {
    let path = dir.join(name);
    let file = std::fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    f(file).with_context(|| format!("writing {}", path.display()))?;
    outputs.push(name.to_string());
    Ok(())
}

fn finish(mut manifest: RunManifest, dir: &Path, start: Instant) -> anyhow::Result<()> {
    manifest.outputs.push("manifest.json".into());
    manifest.wall_clock_seconds = start.elapsed().as_secs_f64();
    manifest.write(&dir.join("manifest.json"))?;
    Ok(())
}

fn make_dir(dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn simulate(
    kind: ModelKind,
    config: Option<&Path>,
    seed: Option<u64>,
    steps: Option<usize>,
    dir: &Path,
    start: Instant,
) -> anyhow::Result<Outcome> {
    let mut cfg = match config {
        Some(p) => ModelConfig::from_toml(kind, &read_text(p)?).with_context(|| format!("in {}", p.display()))?,
        None => ModelConfig::default_for(kind),
    };
    if let Some(s) = seed {
        cfg.set_seed(s);
    }
    if let Some(n) = steps {
        cfg.set_steps(n);
    }
    cfg.validate()?;
    let (out, telemetry) = cfg.run()?;
    make_dir(dir)?;

    let mut manifest = RunManifest::new("simulate", serde_json::to_value(&cfg)?);
    manifest.seeds.push(cfg.seed());
    let files = &mut manifest.outputs;
    emit(dir, "steps.csv", files, |f| out.write_steps_csv(f))?;
    if kind != ModelKind::Cont {
        emit(dir, "impacts.csv", files, |f| out.write_impacts_csv(f))?;
    }
    if !out.depth.is_empty() {
        emit(dir, "depth.csv", files, |f| out.write_depth_csv(f))?;
    }
    if let Some(t) = &telemetry {
        emit(dir, "funds.csv", files, |f| t.write_csv(f))?;
    }
    let volume: Vec<f64> = out.trimmed_volume().iter().map(|&v| v as f64).collect();
    let eval = evaluate(
        out.trimmed_returns(),
        Some(&volume),
        &ScoringConfig::default(),
        Weights::default(),
    );
    let report = json!({ "summary": out.summary(), "evaluation": eval });
    emit(dir, "report.json", files, |f| write_json(f, &report))?;
    finish(manifest, dir, start)?;

    println!(
        "{} seed {}: {} steps, fitness sum {:.4} product {:.4}",
        kind.as_str(),
        cfg.seed(),
        out.len(),
        eval.fitness.fitness_sum,
        eval.fitness.fitness_product
    );
    Ok(match eval.degeneracy {
        Some(why) => {
            eprintln!("warning: {why}");
            Outcome::Degenerate
        }
        None => Outcome::Done,
    })
}

/// Prices plus, for a simulation file, its own returns and volume.
struct Series {
    prices: Vec<f64>,
    returns: Option<Vec<f64>>,
    volume: Option<Vec<f64>>,
}

fn load_series(path: &Path, burn_in: usize) -> anyhow::Result<Series> {
    let text = read_text(path)?;
    let header = text.lines().next().unwrap_or("").trim().to_ascii_lowercase();
    let loaded = if header == "date,close" {
        let s: PriceSeries = read_price_csv(text.as_bytes())?;
        Series {
            prices: s.closes,
            returns: None,
            volume: None,
        }
    } else {
        let (price, returns, volume) = read_steps_csv(text.as_bytes())?;
        let k = burn_in.min(price.len());
        Series {
            prices: price[k..].to_vec(),
            returns: Some(returns[k..].to_vec()),
            volume: Some(volume[k..].iter().map(|&v| v as f64).collect()),
        }
    };
    Ok(loaded)
}

fn stats(
    input: &Path,
    burn_in: usize,
    scoring: Option<&Path>,
    bins: usize,
    dir: &Path,
    start: Instant,
) -> anyhow::Result<Outcome> {
    let cfg: ScoringConfig = match scoring {
        Some(p) => toml::from_str(&read_text(p)?)
            .map_err(marketlab::Error::from)
            .with_context(|| format!("in {}", p.display()))?,
        None => ScoringConfig::default(),
    };
    cfg.validate()?;
    let s = load_series(input, burn_in).with_context(|| format!("loading {}", input.display()))?;
    let returns = match s.returns {
        Some(r) => r,
        None => log_returns(&s.prices)?.values,
    };
    let eval = evaluate(&returns, s.volume.as_deref(), &cfg, Weights::default());
    make_dir(dir)?;
    let mut manifest = RunManifest::new(
        "stats",
        json!({ "input": input, "burn_in": burn_in, "scoring": cfg, "bins": bins }),
    );
    emit(dir, "report.json", &mut manifest.outputs, |f| write_json(f, &eval))?;
    if let Some(report) = &eval.report {
        let panels = FactPanels::new(&s.prices, &returns, report, bins);
        for p in panels.write_csvs(dir)? {
            manifest.outputs.push(p.file_name().unwrap().to_string_lossy().into_owned());
        }
    }
    finish(manifest, dir, start)?;
    match (&eval.report, &eval.degeneracy) {
        (Some(r), _) => {
            let sc = eval.fitness.scores;
            println!(
                "T={} excess kurtosis {:.4}; scores tails {:.3} no-autocorr {:.3} clustering {:.3}; fitness sum {:.4} product {:.4}",
                r.sample_size,
                r.excess_kurtosis,
                sc.tails,
                sc.no_autocorr,
                sc.clustering,
                eval.fitness.fitness_sum,
                eval.fitness.fitness_product
            );
            Ok(Outcome::Done)
        }
        (None, why) => {
            eprintln!("warning: {}", why.as_deref().unwrap_or("degenerate series"));
            Ok(Outcome::Degenerate)
        }
    }
}

#[derive(Serialize)]
struct Verdict<'a> {
    input: &'a Path,
    samples: usize,
    box_dimension: f64,
    box_dimension_degenerate: bool,
    verdict: marketlab::fractal::Verdict,
    nonlinearity: f64,
    threshold: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    compare: Option<CompareVerdict<'a>>,
}

#[derive(Serialize)]
struct CompareVerdict<'a> {
    input: &'a Path,
    samples: usize,
    box_dimension: f64,
    verdict: marketlab::fractal::Verdict,
    nonlinearity: f64,
    spectrum_distance: f64,
}

fn fractal(
    input: &Path,
    compare: Option<&Path>,
    window: usize,
    samples_per_box: usize,
    dir: &Path,
    start: Instant,
) -> anyhow::Result<Outcome> {
    let cfg = FractalConfig {
        window,
        samples_per_box,
        ..FractalConfig::default()
    };
    let analyze = |p: &Path| -> anyhow::Result<FractalReport> {
        let s = load_series(p, 0).with_context(|| format!("loading {}", p.display()))?;
        analyze_series(&s.prices, &cfg).with_context(|| format!("analysing {}", p.display()))
    };
    let a = match analyze(input) {
        Ok(a) => a,
        Err(e) if is_degenerate(&e) => {
            eprintln!("degenerate series: {e:#}");
            return Ok(Outcome::Degenerate);
        }
        Err(e) => return Err(e),
    };
    make_dir(dir)?;
    let mut manifest = RunManifest::new(
        "fractal",
        json!({ "input": input, "compare": compare, "config": cfg }),
    );
    emit(dir, "spectrum.csv", &mut manifest.outputs, |f| a.spectrum.write_csv(f))?;
    let compare_verdict = match compare {
        Some(p) => {
            let b = analyze(p)?;
            emit(dir, "spectrum_compare.csv", &mut manifest.outputs, |f| b.spectrum.write_csv(f))?;
            let d = spectrum_distance(&a.spectrum, &b.spectrum, cfg.min_r2)?;
            println!("spectrum distance {d}");
            Some(CompareVerdict {
                input: p,
                samples: b.samples,
                box_dimension: b.box_dimension.dimension,
                verdict: b.test.verdict,
                nonlinearity: b.test.statistic,
                spectrum_distance: d,
            })
        }
        None => None,
    };
    let v = Verdict {
        input,
        samples: a.samples,
        box_dimension: a.box_dimension.dimension,
        box_dimension_degenerate: a.box_dimension.degenerate,
        verdict: a.test.verdict,
        nonlinearity: a.test.statistic,
        threshold: a.test.threshold,
        compare: compare_verdict,
    };
    emit(dir, "verdict.json", &mut manifest.outputs, |f| write_json(f, &v))?;
    finish(manifest, dir, start)?;
    println!(
        "{} samples: box dimension {:.4}, {:?} (nonlinearity {:.4})",
        a.samples, a.box_dimension.dimension, a.test.verdict, a.test.statistic
    );
    Ok(if a.box_dimension.degenerate {
        Outcome::Degenerate
    } else {
        Outcome::Done
    })
}

fn is_degenerate(e: &anyhow::Error) -> bool {
    e.chain()
        .any(|c| matches!(c.downcast_ref::<marketlab::Error>(), Some(marketlab::Error::Degenerate(_))))
}

fn sweep(plan_path: &Path, workers: usize, key: RankKey, dir: &Path, start: Instant) -> anyhow::Result<Outcome> {
    let text = read_text(plan_path)?;
    let plan = SweepPlan::from_toml(&text).with_context(|| format!("in {}", plan_path.display()))?;
    let result = run_sweep(&plan, workers)?;
    make_dir(dir)?;
    let mut manifest = RunManifest::new("sweep", serde_json::to_value(&plan)?);
    manifest.seeds.push(plan.base_seed);
    emit(dir, "results.csv", &mut manifest.outputs, |f| result.write_csv(f))?;
    emit(dir, "replicates.csv", &mut manifest.outputs, |f| result.write_replicates_csv(f))?;
    let ranked = rank(&result, key);
    emit(dir, "ranking.csv", &mut manifest.outputs, |f| {
        let mut w = csv::Writer::from_writer(f);
        w.write_record(["rank", "cell", "fitness_sum", "fitness_product", "flags"])?;
        for (i, c) in ranked.iter().enumerate() {
            w.write_record([
                (i + 1).to_string(),
                c.cell.index.to_string(),
                c.fitness_sum.to_string(),
                c.fitness_product.to_string(),
                c.flags.label(),
            ])?;
        }
        w.flush()?;
        Ok(())
    })?;
    finish(manifest, dir, start)?;
    let flagged = result.cells.iter().filter(|c| c.flags.any()).count();
    println!("{} cells, {} flagged", result.cells.len(), flagged);
    if let Some(best) = ranked.first() {
        println!(
            "best cell {}: fitness sum {:.4} product {:.4}",
            best.cell.index, best.fitness_sum, best.fitness_product
        );
    }
    Ok(Outcome::Done)
}

fn ingest(input: &Path, window: usize, align: Align, dir: &Path, start: Instant) -> anyhow::Result<Outcome> {
    let text = read_text(input)?;
    let s = read_price_csv(text.as_bytes()).with_context(|| format!("in {}", input.display()))?;
    let w = s.window(window, align);
    make_dir(dir)?;
    let mut manifest = RunManifest::new(
        "ingest",
        json!({ "input": input, "window": window, "align": align }),
    );
    emit(dir, "prices.csv", &mut manifest.outputs, |f| w.write_csv(f))?;
    finish(manifest, dir, start)?;
    println!(
        "{} rows read, {} kept ({} to {})",
        s.len(),
        w.len(),
        w.dates.first().map(String::as_str).unwrap_or("-"),
        w.dates.last().map(String::as_str).unwrap_or("-")
    );
    Ok(Outcome::Done)
}
