//! `aucmix` command line: run grids, aggregate tables, generate data, self-check.
//!
//! Exit codes: 0 success, 1 configuration error, 2 partial grid failure,
//! 3 internal error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aucmix::augment::{generate_synthetic, write_binary, write_csv, SyntheticSpec};
use aucmix::harness::{
    compare_table, curves_csv, load_config, load_selections, run_checks, run_grid, write_atomic,
    DatasetSource, RunOptions, Selection,
};
use aucmix::optim::Method;
use aucmix::Error;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "aucmix",
    version,
    about = "Deep AUC maximization with mixup on small imbalanced datasets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Args)]
struct Global {
    /// Experiment config file (key = value format).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (for `gen`: the dataset file).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Added to every configured seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed_offset: u64,
    /// Only run these methods (comma separated or repeated).
    #[arg(long, global = true, value_delimiter = ',')]
    method: Vec<Method>,
    /// Suppress progress output.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Train every method × seed × learning rate in the config.
    Run,
    /// Aggregate selected runs into comparison tables.
    Table,
    /// Write a synthetic dataset (.csv or binary) to --out.
    Gen(GenArgs),
    /// Run the built-in oracle and property checks.
    Check,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 20)]
    d: usize,
    /// Fraction of positives.
    #[arg(long, default_value_t = 0.02)]
    ratio: f64,
    #[arg(long, default_value_t = 2.0)]
    separation: f64,
    #[arg(long, default_value_t = 1.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

enum Failure {
    Config(String),
    Partial(String),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Parse { .. } => Failure::Config(e.to_string()),
            other => Failure::Internal(other.to_string()),
        }
    }
}

fn config_failure(e: Error) -> Failure {
    Failure::Config(e.to_string())
}

fn write_tables(out: &Path, selections: &[Selection], quiet: bool) -> Result<(), Failure> {
    let table = compare_table(selections)?;
    let text = table.to_text();
    write_atomic(&out.join("table.txt"), text.as_bytes())?;
    write_atomic(&out.join("table.csv"), &table.to_csv()?)?;
    write_atomic(&out.join("curves.csv"), &curves_csv(selections)?)?;
    if !quiet {
        print!("{text}");
    }
    Ok(())
}

fn cmd_run(g: &Global) -> Result<(), Failure> {
    let path = g
        .config
        .as_ref()
        .ok_or_else(|| Failure::Config("run needs --config <path>".into()))?;
    let mut cfg = load_config(path).map_err(config_failure)?;
    if let Some(out) = &g.out {
        cfg.output_dir = out.clone();
    }
    let opts = RunOptions {
        jobs: g.jobs,
        quiet: g.quiet,
        seed_offset: g.seed_offset,
        methods: (!g.method.is_empty()).then(|| g.method.clone()),
        max_new_runs: None,
    };
    let outcome = run_grid(&cfg, &opts)?;
    if !g.quiet {
        eprintln!(
            "{} new run(s), {} cached, {} failed; results in {}",
            outcome.trained,
            outcome.cached,
            outcome.failed_runs,
            outcome.out_dir.display()
        );
    }
    // a table needs two successful seeds per method; skip it quietly otherwise
    if let Err(Failure::Internal(e)) = write_tables(&outcome.out_dir, &outcome.selections, g.quiet)
    {
        return Err(Failure::Internal(e));
    }
    if outcome.has_failures() {
        return Err(Failure::Partial(format!(
            "{} training run(s) failed; see {}",
            outcome.failed_runs,
            outcome.out_dir.join("results.csv").display()
        )));
    }
    Ok(())
}

fn cmd_table(g: &Global) -> Result<(), Failure> {
    let out = match (&g.out, &g.config) {
        (Some(o), _) => o.clone(),
        (None, Some(c)) => load_config(c).map_err(config_failure)?.output_dir,
        (None, None) => {
            return Err(Failure::Config(
                "table needs --out <dir> or --config <path>".into(),
            ))
        }
    };
    let mut selections = load_selections(&out).map_err(|e| match e {
        Error::Io { .. } => Failure::Config(format!("{e} (has `aucmix run` been executed?)")),
        other => other.into(),
    })?;
    if !g.method.is_empty() {
        selections.retain(|s| g.method.contains(&s.method));
    }
    write_tables(&out, &selections, false)
}

fn cmd_gen(g: &Global, a: &GenArgs) -> Result<(), Failure> {
    let out = g
        .out
        .as_ref()
        .ok_or_else(|| Failure::Config("gen needs --out <file>".into()))?;
    let spec = match &g.config {
        Some(c) => match load_config(c).map_err(config_failure)?.dataset {
            DatasetSource::Synthetic(s) => s,
            _ => {
                return Err(Failure::Config(
                    "gen needs a synthetic dataset config".into(),
                ))
            }
        },
        None => SyntheticSpec {
            n: a.n,
            d: a.d,
            imbalance_ratio: a.ratio,
            class_separation: a.separation,
            noise: a.noise,
            seed: a.seed,
        },
    };
    let ds = generate_synthetic(&spec)?;
    if out
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
    {
        write_csv(out, &ds)?;
    } else {
        write_binary(out, &ds)?;
    }
    if !g.quiet {
        eprintln!(
            "wrote {} rows ({} positive) to {}",
            ds.len(),
            ds.n_pos(),
            out.display()
        );
    }
    Ok(())
}

fn cmd_check(g: &Global) -> Result<(), Failure> {
    let results = run_checks()?;
    let failed = results.iter().filter(|r| !r.passed).count();
    for r in &results {
        if !g.quiet || !r.passed {
            println!(
                "{} {} {}",
                if r.passed { "PASS" } else { "FAIL" },
                r.name,
                r.detail
            );
        }
    }
    if failed > 0 {
        return Err(Failure::Internal(format!("{failed} check(s) failed")));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Run => cmd_run(&cli.global),
        Command::Table => cmd_table(&cli.global),
        Command::Gen(a) => cmd_gen(&cli.global, a),
        Command::Check => cmd_check(&cli.global),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Partial(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(m)) => {
            eprintln!("internal error: {m}");
            ExitCode::from(3)
        }
    }
}
