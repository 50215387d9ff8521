use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use fracflow::diagnostics::{DiagnosticsRecord, DiagnosticsSettings, ShiftSet};
use fracflow::integrator;
use fracflow::{io, lab, presets, Error, RunConfig};

#[derive(Parser)]
#[command(name = "fracflow", version, about = "Active-scalar transport with fractional dissipation on the torus")]
struct Cli {
    /// Suppress the human-readable summary on stdout.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Source {
    /// TOML run configuration.
    #[arg(long, value_name = "PATH", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in scenario instead of a config file.
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    /// Override the initial-condition seed.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Output directory (defaults to output.dir from the config).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configuration and write diagnostics.csv, final_state.bin and run_summary.json.
    Simulate(Source),
    /// Compare a run with its rescaled counterpart at N and 2N.
    ScalingTest {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 2)]
        lambda: usize,
    },
    /// Evaluate the weighted inequalities over a seeded radial corpus.
    InequalityLab {
        #[arg(long, default_value_t = 200)]
        corpus_size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_delimiter = ',', default_value = "0.3,0.5,0.7")]
        alphas: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "0.2,0.4,0.6,0.8")]
        gammas: Vec<f64>,
        /// Points per side of the 16π box.
        #[arg(long, default_value_t = 512)]
        points: usize,
        /// Append a zero profile (reported as degenerate).
        #[arg(long)]
        include_zero: bool,
        #[arg(long, value_name = "DIR", default_value = "out")]
        out: PathBuf,
    },
    /// Track J(t) on radial data and compare with the fitted Riccati envelope.
    BlowupProbe(Source),
    /// Recompute diagnostics from a final_state.bin.
    Diagnose {
        #[arg(long, value_name = "PATH")]
        state: PathBuf,
        /// Config whose [diagnostics] section is used.
        #[arg(long, value_name = "PATH")]
        config: Option<PathBuf>,
        #[arg(long, value_name = "DIR", default_value = "out")]
        out: PathBuf,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) => 3,
        Error::Config(_)
        | Error::Format(_)
        | Error::NotRadial(_)
        | Error::InvalidParameter(_)
        | Error::InvalidGrid(_) => 2,
        _ => 1,
    }
}

fn load(source: &Source) -> fracflow::Result<RunConfig> {
    let mut cfg = match (&source.config, &source.preset) {
        (Some(path), _) => RunConfig::load(path)?,
        (None, Some(name)) => presets::preset(name)?,
        (None, None) => return Err(Error::Config("one of --config or --preset is required".into())),
    };
    if let Some(seed) = source.seed {
        cfg.initial.seed = seed;
    }
    if let Some(out) = &source.out {
        cfg.output.dir = out.display().to_string();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_json(path: &Path, value: &serde_json::Value) -> fracflow::Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("json value");
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn simulate(source: &Source, quiet: bool) -> fracflow::Result<()> {
    let cfg = load(source)?;
    let v = cfg.validate()?;
    let out = PathBuf::from(&cfg.output.dir);
    let started = Instant::now();
    let outcome = integrator::run(&cfg)?;
    let wall = started.elapsed().as_secs_f64();
    fs::create_dir_all(&out)?;
    io::write_diagnostics_csv(&out.join("diagnostics.csv"), &outcome.records)?;
    if cfg.output.write_state {
        io::write_state(&out.join("final_state.bin"), &outcome.final_state.theta, outcome.final_state.t)?;
    }
    let summary = json!({
        "termination": outcome.termination.label(),
        "regime": v.params.regime().label(),
        "t_final": outcome.final_state.t,
        "steps": outcome.final_state.step_count,
        "records": outcome.records.len(),
        "seed": v.seed,
        "wall_time_s": wall,
    });
    write_json(&out.join("run_summary.json"), &summary)?;
    if !quiet {
        println!(
            "{} ({}): {} at t = {} after {} steps, {:.2} s",
            v.params.regime().label(),
            v.initial.name(),
            outcome.termination.label(),
            outcome.final_state.t,
            outcome.final_state.step_count,
            wall
        );
    }
    Ok(())
}

fn scaling_test(source: &Source, lambda: usize, quiet: bool) -> fracflow::Result<()> {
    let cfg = load(source)?;
    let report = lab::scaling_study(&cfg, lambda)?;
    let value = json!({
        "lambda": report.lambda,
        "points": report.points,
        "discrepancy": report.discrepancy_coarse,
        "discrepancy_refined": report.discrepancy_fine,
        "tolerance": report.tolerance(),
        "passed": report.passed(),
    });
    let out = PathBuf::from(&cfg.output.dir);
    fs::create_dir_all(&out)?;
    write_json(&out.join("scaling_report.json"), &value)?;
    if !quiet {
        println!(
            "lambda = {}: discrepancy {:e} at N = {}, {:e} at N = {} -> {}",
            report.lambda,
            report.discrepancy_coarse,
            report.points,
            report.discrepancy_fine,
            2 * report.points,
            if report.passed() { "PASS" } else { "FAIL" }
        );
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn inequality_lab(
    corpus_size: usize,
    seed: u64,
    alphas: &[f64],
    gammas: &[f64],
    points: usize,
    include_zero: bool,
    out: &Path,
    quiet: bool,
) -> fracflow::Result<()> {
    if corpus_size == 0 {
        return Err(Error::Config("--corpus-size must be >= 1".into()));
    }
    if let Some(p) = alphas.iter().chain(gammas).find(|p| !(**p > 0.0 && **p < 1.0)) {
        return Err(Error::Config(format!("parameters must lie in (0,1), got {p}")));
    }
    let grid = fracflow::TorusGrid::new(2, points, 16.0 * std::f64::consts::PI)
        .map_err(|e| Error::Config(e.to_string()))?;
    let report = lab::inequality_lab(corpus_size, seed, alphas, gammas, &grid, include_zero)?;
    fs::create_dir_all(out)?;
    let mut csv = Vec::new();
    report.write_csv(&mut csv)?;
    fs::write(out.join("inequality_corpus.csv"), csv)?;
    let max_ratios: Vec<_> = gammas
        .iter()
        .map(|&g| json!({ "gamma": g, "max_ratio": report.max_dissipation_ratio(g, corpus_size) }))
        .collect();
    let fits: Vec<_> = alphas
        .iter()
        .filter_map(|&a| report.nonlinear_fit(a, corpus_size))
        .map(|f| json!({ "alpha": f.alpha, "c1": f.c1, "c2": f.c2, "violations": f.violations }))
        .collect();
    let degenerate = report.rows.iter().filter(|r| r.report.is_degenerate()).count();
    write_json(
        &out.join("inequality_summary.json"),
        &json!({
            "seed": seed,
            "corpus_size": corpus_size,
            "rows": report.rows.len(),
            "degenerate_rows": degenerate,
            "dissipation": max_ratios,
            "nonlinear": fits,
        }),
    )?;
    if !quiet {
        for &g in gammas {
            println!("gamma = {g}: max ratio {:.6}", report.max_dissipation_ratio(g, corpus_size));
        }
        for f in alphas.iter().filter_map(|&a| report.nonlinear_fit(a, corpus_size)) {
            println!("alpha = {}: c1 = {:.6}, c2 = {:.6}", f.alpha, f.c1, f.c2);
        }
        if degenerate > 0 {
            println!("{degenerate} degenerate rows excluded");
        }
    }
    Ok(())
}

fn blowup_probe(source: &Source, quiet: bool) -> fracflow::Result<()> {
    let cfg = load(source)?;
    let report = lab::blowup_probe(&cfg)?;
    let out = PathBuf::from(&cfg.output.dir);
    fs::create_dir_all(&out)?;
    io::write_diagnostics_csv(&out.join("diagnostics.csv"), &report.records)?;
    let value = json!({
        "termination": report.termination.label(),
        "termination_time": report.termination_time,
        "j_initial": report.records.first().and_then(|r| r.j_value),
        "j_final": report.records.last().and_then(|r| r.j_value),
        "j_increasing": report.j_increasing,
        "j_growth_rate": report.j_growth_rate,
        "riccati_c7": report.fit.map(|f| f.c7),
        "riccati_offset": report.fit.map(|f| f.offset),
        "predicted_blowup": report.predicted_time,
        "prediction_ratio": report.prediction_ratio(),
        "initial_asymmetry": report.initial_asymmetry,
    });
    write_json(&out.join("blowup_report.json"), &value)?;
    if !quiet {
        println!(
            "{} at t = {:.4}; J increasing: {}; growth rate {:.3}; Riccati prediction {}",
            report.termination.label(),
            report.termination_time,
            report.j_increasing,
            report.j_growth_rate,
            report
                .predicted_time
                .map_or("none".to_string(), |t| format!("{t:.4}"))
        );
    }
    Ok(())
}

fn diagnose(state: &Path, config: Option<&Path>, out: &Path, quiet: bool) -> fracflow::Result<()> {
    let settings = match config {
        Some(p) => RunConfig::load(p)?.diagnostics,
        None => DiagnosticsSettings::default(),
    };
    settings.validate()?;
    let (theta, t) = io::read_state(state)?;
    let shifts = ShiftSet::dyadic(theta.grid());
    // The BKM integral is path-dependent and not stored in the dump.
    let record = DiagnosticsRecord::measure(&theta, t, 0.0, f64::NAN, &settings, &shifts)?;
    fs::create_dir_all(out)?;
    io::write_diagnostics_csv(&out.join("diagnostics.csv"), std::slice::from_ref(&record))?;
    if !quiet {
        println!("{}", DiagnosticsRecord::CSV_HEADER);
        println!("{}", record.csv_row());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(source) => simulate(source, cli.quiet),
        Command::ScalingTest { source, lambda } => scaling_test(source, *lambda, cli.quiet),
        Command::InequalityLab {
            corpus_size,
            seed,
            alphas,
            gammas,
            points,
            include_zero,
            out,
        } => inequality_lab(*corpus_size, *seed, alphas, gammas, *points, *include_zero, out, cli.quiet),
        Command::BlowupProbe(source) => blowup_probe(source, cli.quiet),
        Command::Diagnose { state, config, out } => diagnose(state, config.as_deref(), out, cli.quiet),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
