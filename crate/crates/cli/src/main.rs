use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cellfree_core::harness::output::{write_cdf_table, write_results, write_summary};
use cellfree_core::harness::{
    experiment, experiment_catalog, run_scenario_with, Experiment, RunResult, ScenarioConfig,
};
use cellfree_core::registry::Strategies;
use cellfree_core::validation::{run_check, CHECKS};
use clap::{Parser, Subcommand};

/// Coverage and outage simulation for system-information broadcast in
/// cell-free massive MIMO.
#[derive(Parser)]
#[command(name = "cellfree", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a preset experiment or a scenario config file.
    Run {
        /// Preset name (see `list-scenarios`) or path to a config file.
        #[arg(long)]
        scenario: String,
        /// Master seed. CELLFREE_SEED takes precedence when set.
        #[arg(long)]
        seed: Option<u64>,
        /// Network realizations per scenario.
        #[arg(long)]
        outer: Option<usize>,
        /// Small-scale realizations per network realization.
        #[arg(long)]
        inner: Option<usize>,
        /// Outage target.
        #[arg(long)]
        epsilon: Option<f64>,
        /// Only run these variants of a preset.
        #[arg(long = "variant")]
        variants: Vec<String>,
        /// Per-sample result CSV.
        #[arg(long)]
        out: PathBuf,
        /// Summary CSV with one row per scenario and terminal.
        #[arg(long)]
        summary: Option<PathBuf>,
        /// Gnuplot table of empirical CDFs.
        #[arg(long)]
        cdf: Option<PathBuf>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Print the preset experiments and their variants.
    ListScenarios,
    /// Check a scenario config file.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Statistical check of a closed form against the link-level simulator.
    Oracle {
        /// One of: theorem1, corollary1, hyperexp.
        #[arg(long)]
        check: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

/// An error with its exit code.
struct Failure {
    code: u8,
    message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| usage(format!("cannot write output file {}: {e}", path.display())))
}

fn load_experiment(scenario: &str) -> Result<Experiment, Failure> {
    if let Ok(e) = experiment(scenario) {
        return Ok(e);
    }
    let path = Path::new(scenario);
    if !path.is_file() {
        return Err(usage(format!(
            "unknown scenario '{scenario}': not a preset name and not a readable file"
        )));
    }
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {scenario}: {e}")))?;
    let config = ScenarioConfig::parse(&text).map_err(|e| usage(format!("malformed config {scenario}: {e}")))?;
    Ok(Experiment {
        name: "file",
        description: "scenario config file",
        variants: vec![config],
    })
}

fn env_seed() -> Result<Option<u64>, Failure> {
    match std::env::var("CELLFREE_SEED") {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| usage(format!("CELLFREE_SEED='{v}' is not an unsigned integer"))),
        _ => Ok(None),
    }
}

fn print_result(r: &RunResult) {
    for s in &r.series {
        let o = &s.outage;
        let analytic = s
            .analytic_gamma
            .map(|g| format!(" analytic_gamma_db={:.2}", 10.0 * g.log10()))
            .unwrap_or_default();
        println!(
            "{:<28} eps={:<6} gamma_db={:>7.2} rate={:.4} ±{:.4} bpcu n={}{} ({:.1}s)",
            s.label,
            o.epsilon,
            10.0 * o.gamma_eps.log10(),
            o.rate,
            o.ci_halfwidth,
            o.n_trials,
            analytic,
            r.wall_time.as_secs_f64()
        );
    }
}

#[allow(clippy::too_many_arguments)]
fn run(
    scenario: &str,
    seed: Option<u64>,
    outer: Option<usize>,
    inner: Option<usize>,
    epsilon: Option<f64>,
    variants: &[String],
    out: &Path,
    summary: Option<&Path>,
    cdf: Option<&Path>,
    threads: Option<usize>,
) -> Result<(), Failure> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| usage(format!("cannot configure worker threads: {e}")))?;
    }
    let seed = env_seed()?.or(seed);
    let mut exp = load_experiment(scenario)?.with_overrides(seed, outer, inner, epsilon);
    if !variants.is_empty() {
        if let Some(missing) = variants.iter().find(|v| exp.variant(v).is_none()) {
            return Err(usage(format!("experiment '{}' has no variant '{missing}'", exp.name)));
        }
        exp.variants.retain(|v| variants.contains(&v.name));
    }
    let strategies = Strategies::standard();
    for v in &exp.variants {
        v.validate(&strategies)
            .map_err(|e| usage(format!("invalid scenario '{}': {e}", v.name)))?;
    }
    let mut out_w = create(out)?;
    let mut summary_w = summary.map(create).transpose()?;
    let mut cdf_w = cdf.map(create).transpose()?;

    let mut results = Vec::with_capacity(exp.variants.len());
    for v in &exp.variants {
        let r = run_scenario_with(v, &strategies).map_err(|e| Failure {
            code: 1,
            message: format!("scenario '{}' failed: {e}", v.name),
        })?;
        print_result(&r);
        results.push(r);
    }
    let io = |e: cellfree_core::Error| usage(format!("writing output failed: {e}"));
    write_results(&mut out_w, &results).map_err(io)?;
    out_w
        .flush()
        .map_err(|e| usage(format!("writing output failed: {e}")))?;
    if let Some(w) = summary_w.as_mut() {
        write_summary(&mut *w, &results).map_err(io)?;
        w.flush().map_err(|e| usage(format!("writing output failed: {e}")))?;
    }
    if let Some(w) = cdf_w.as_mut() {
        write_cdf_table(&mut *w, &results, 500).map_err(io)?;
        w.flush().map_err(|e| usage(format!("writing output failed: {e}")))?;
    }
    Ok(())
}

fn validate(path: &Path) -> Result<(), Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let config = ScenarioConfig::parse(&text).map_err(|e| usage(format!("malformed config: {e}")))?;
    config.validate(&Strategies::standard()).map_err(|e| Failure {
        code: 1,
        message: format!("invalid scenario '{}': {e}", config.name),
    })?;
    println!("ok: {}", config.name);
    Ok(())
}

fn oracle(check: &str, seed: u64) -> Result<(), Failure> {
    if !CHECKS.contains(&check) {
        return Err(usage(format!(
            "unknown check '{check}', expected one of: {}",
            CHECKS.join(", ")
        )));
    }
    let report = run_check(check, seed).map_err(|e| Failure {
        code: 1,
        message: format!("{check}: {e}"),
    })?;
    for line in &report.lines {
        println!("{}: {line}", report.name);
    }
    if report.passed {
        Ok(())
    } else {
        Err(Failure {
            code: 1,
            message: format!("{check}: check failed"),
        })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run {
            scenario,
            seed,
            outer,
            inner,
            epsilon,
            variants,
            out,
            summary,
            cdf,
            threads,
        } => run(
            &scenario,
            seed,
            outer,
            inner,
            epsilon,
            &variants,
            &out,
            summary.as_deref(),
            cdf.as_deref(),
            threads,
        ),
        Command::ListScenarios => {
            for e in experiment_catalog() {
                println!("{:<16} {}", e.name, e.description);
                for v in &e.variants {
                    println!("    {}", v.name);
                }
            }
            Ok(())
        }
        Command::Validate { config } => validate(&config),
        Command::Oracle { check, seed } => oracle(&check, seed),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
