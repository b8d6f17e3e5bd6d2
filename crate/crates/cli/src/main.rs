//! `ped2`: batch commands around the decentralized sharing solver.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use ped2_core::experiments::{compare_on, ground_truth, qp_oracle, Comparison, ExperimentSpec};
use ped2_core::solvers::{
    build_fixed_point, ped2_init, rate_report, write_log_error, write_trace_csv,
};
use ped2_core::{validate, Mode};

use config::{load, ParseError, Resolved};
use output::OutDir;

/// Seeds of the built-in twenty-agent demonstration.
const DEMO_GRAPH_SEED: u64 = 7;
const DEMO_COST_SEED: u64 = 11;
/// Target squared error of the demonstration run.
const DEMO_TARGET: f64 = 1e-10;

#[derive(Parser)]
#[command(
    name = "ped2",
    version,
    about = "Decentralized sharing optimization by proximal exact dual diffusion"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Directory for output files.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Override a config entry by dotted path, e.g. `experiment.cost_seed=3`.
    #[arg(long = "set", global = true, value_name = "K=V")]
    sets: Vec<String>,
    /// Suppress the summary line.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Solve the instance with the decentralized and centralized solvers and write traces.
    Run,
    /// Check the linear-rate hypotheses and write rate.json.
    Rate,
    /// Check the graph and problem assumptions and write validate.json.
    Validate,
    /// Run the twenty-agent upper-bound demonstration.
    #[command(name = "demo-fig1")]
    Demo,
    /// Solve a small quadratic instance exactly and write oracle.json.
    Oracle,
}

/// A requested check did not pass.
#[derive(Debug)]
struct CheckFailed(String);

impl std::fmt::Display for CheckFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for CheckFailed {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ParseError>().is_some() {
        return 2;
    }
    if err.downcast_ref::<CheckFailed>().is_some() {
        return 3;
    }
    match err.downcast_ref::<ped2_core::Error>() {
        Some(ped2_core::Error::Divergence { .. }) => 4,
        _ => 1,
    }
}

fn write_comparison(out: &OutDir, cmp: &Comparison) -> anyhow::Result<()> {
    out.write_with("trace_ped2.csv", |w| {
        Ok(write_trace_csv(&cmp.ped2_trace, w)?)
    })?;
    out.write_with("trace_central.csv", |w| {
        Ok(write_trace_csv(&cmp.central_trace, w)?)
    })?;
    out.write_with("logerr_ped2.dat", |w| {
        Ok(write_log_error(&cmp.ped2_trace, w)?)
    })?;
    out.write_with("logerr_central.dat", |w| {
        Ok(write_log_error(&cmp.central_trace, w)?)
    })?;
    out.write_json("rate.json", &cmp.rate)?;
    out.write_json("summary.json", cmp)?;
    Ok(())
}

fn comparison_line(label: &str, cmp: &Comparison) -> String {
    format!(
        "{label}: gamma {:.6} ({}), {} {} iterations final sq_err {:.3e}, central {} iterations final sq_err {:.3e}",
        cmp.rate.gamma,
        if cmp.rate.certified { "certified" } else { "not certified" },
        cmp.ped2.solver,
        cmp.ped2.iterations,
        cmp.ped2.final_sq_err,
        cmp.central.iterations,
        cmp.central.final_sq_err,
    )
}

fn run(r: &Resolved, out: &OutDir) -> anyhow::Result<String> {
    let cmp = compare_on(r.spec.as_ref(), &r.problem, &r.cs, &r.config)?;
    write_comparison(out, &cmp)?;
    Ok(comparison_line("run", &cmp))
}

fn rate(r: &Resolved, out: &OutDir) -> anyhow::Result<String> {
    let config = r.config.clone().with_mode(Mode::Ped2);
    let truth = ground_truth(&r.problem, &r.cs, &config)?;
    let init = ped2_init(&r.problem, &r.cs, &config, None, None)?;
    let fp = build_fixed_point(&r.problem, &r.cs, &config, &truth.w_star, &truth.y_star).ok();
    let report = rate_report(&r.problem, &r.cs, &config, fp.as_ref().map(|f| (f, &init)))?;
    out.write_json("rate.json", &report)?;
    if !report.certified {
        return Err(
            CheckFailed(format!("rate not certified: {}", report.reasons.join("; "))).into(),
        );
    }
    Ok(format!(
        "rate: gamma {:.6} (gamma1 {:.6}, gamma2 {:.6}, gamma3 {:.6}), C_o {}",
        report.gamma,
        report.gamma1,
        report.gamma2,
        report.gamma3,
        report
            .c_o
            .map_or_else(|| "n/a".into(), |c| format!("{c:.3e}")),
    ))
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "✓"
    } else {
        "✗"
    }
}

fn validate_cmd(r: &Resolved, out: &OutDir) -> anyhow::Result<String> {
    let report = validate(&r.problem, &r.cs, Some(&r.config))?;
    out.write_json("validate.json", &report)?;
    let line = format!(
        "validate: doubly-stochastic {}, combination conditions {}, full-row-rank {}, strongly convex {}, relative interior {}, step sizes {}",
        mark(report.doubly_stochastic),
        mark(report.combination.ok),
        mark(report.full_row_rank),
        mark(report.strongly_convex),
        mark(report.relative_interior.ok),
        mark(report.steps.as_ref().is_some_and(|s| s.ok)),
    );
    if report.ok {
        Ok(line)
    } else {
        Err(CheckFailed(line).into())
    }
}

fn oracle(r: &Resolved, out: &OutDir) -> anyhow::Result<String> {
    let sol = qp_oracle(&r.problem)?;
    out.write_json("oracle.json", &sol)?;
    Ok(format!(
        "oracle: objective {:.12e}, active set {:?}, KKT residual {:.3e}",
        sol.objective, sol.active_set, sol.kkt_residual
    ))
}

fn demo(r: &Resolved, out: &OutDir) -> anyhow::Result<String> {
    let cmp = compare_on(r.spec.as_ref(), &r.problem, &r.cs, &r.config)?;
    write_comparison(out, &cmp)?;
    let line = comparison_line("demo-fig1", &cmp);
    let best = cmp
        .ped2_trace
        .iter()
        .map(|t| t.sq_err_w)
        .fold(f64::INFINITY, f64::min);
    if cmp.ped2.final_sq_err <= DEMO_TARGET || best <= DEMO_TARGET {
        Ok(line)
    } else {
        Err(CheckFailed(format!("{line}; target {DEMO_TARGET:e} not reached")).into())
    }
}

fn dispatch(cli: &Cli) -> anyhow::Result<String> {
    let base = match cli.command {
        Command::Demo => Some(serde_json::json!({
            "experiment": ExperimentSpec::demo(DEMO_GRAPH_SEED, DEMO_COST_SEED)
        })),
        _ => None,
    };
    let cfg = load(cli.common.config.as_deref(), base, &cli.common.sets)?;
    let resolved = cfg.resolve().context("cannot build the instance")?;
    let out = OutDir::create(&cli.common.out)?;
    match cli.command {
        Command::Run => run(&resolved, &out),
        Command::Rate => rate(&resolved, &out),
        Command::Validate => validate_cmd(&resolved, &out),
        Command::Demo => demo(&resolved, &out),
        Command::Oracle => oracle(&resolved, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(line) => {
            if !cli.common.quiet {
                println!("{line}");
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
