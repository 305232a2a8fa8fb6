use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use heislab_cli::commands::{self, CommandOutput, Context};
use heislab_cli::config::{parse_count, ExperimentConfig};
use heislab_cli::verify::{run_all, Fault, VerifyOptions};

#[derive(Debug, Parser)]
#[command(name = "heislab", version, about = "Möbius disjointness experiments for Heisenberg skew products")]
struct Cli {
    /// TOML configuration; the built-in standard configuration when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for orbit streaming.
    #[arg(long, global = true, env = "LAB_WORKERS")]
    workers: Option<usize>,
    /// Segment size of the orbit plan, a power of two.
    #[arg(long, global = true, value_parser = parse_count)]
    segment_size: Option<u64>,
    /// Comma-separated checkpoints replacing every checkpoint list.
    #[arg(long, global = true, value_delimiter = ',', value_parser = parse_count)]
    checkpoints: Option<Vec<u64>>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the exact-arithmetic self-checks.
    Verify {
        #[arg(long)]
        inject_fault: Option<Fault>,
        #[arg(long, value_parser = parse_count)]
        instances: Option<u64>,
    },
    /// Sieve the Möbius function and tabulate the Mertens function.
    Sieve {
        #[arg(long, value_parser = parse_count)]
        bound: Option<u64>,
    },
    /// Write an orbit of T from the identity coset.
    Orbit {
        #[arg(long, default_value = "1000", value_parser = parse_count)]
        steps: u64,
    },
    /// Möbius correlation sums and the Davenport baseline.
    Correlate,
    /// Bilinear prime-pair sums along the direct and reduced routes.
    Bilinear,
    /// Compare the reduced joining orbit against the pair orbit.
    ReduceJoining {
        #[arg(long, default_value = "1000", value_parser = parse_count)]
        steps: u64,
    },
    /// Weyl sums of the trivialized joining map.
    Weyl,
    /// Winding number and Lipschitz estimate of the iterated cocycle.
    Winding {
        #[arg(long, default_value = "1")]
        n: u64,
        #[arg(long, default_value = "0.5")]
        y0: f64,
    },
    /// Discriminant and derived constants of the divergence argument.
    Constants,
    /// Truncated Fourier search for a transfer function.
    Coboundary,
    /// Every experiment followed by a run manifest.
    Run,
}

fn load(cli: &Cli) -> Result<ExperimentConfig, Box<dyn std::error::Error>> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::standard(),
    };
    if let Some(w) = cli.workers {
        cfg.plan.workers = w;
    }
    if let Some(s) = cli.segment_size {
        cfg.plan.segment_size = s;
    }
    if let Some(list) = &cli.checkpoints {
        cfg.set_all_checkpoints(list);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn report(out: &CommandOutput, ctx: &Context) {
    for line in &out.summary {
        println!("{line}");
    }
    for d in &out.diagnostics {
        let mark = if d.within { "ok" } else { "outside threshold" };
        println!("diagnostic {}: {} (threshold {}) {mark}", d.name, d.value, d.threshold);
    }
    for f in &out.files {
        println!("wrote {}", ctx.out.join(f).display());
    }
}

fn run(cli: Cli) -> Result<bool, Box<dyn std::error::Error>> {
    let cfg = load(&cli)?;
    let ctx = Context::new(cfg, cli.out.clone());
    let out = match cli.command {
        Command::Verify { inject_fault, instances } => {
            let mut opts = VerifyOptions { fault: inject_fault, ..VerifyOptions::default() };
            if let Some(n) = instances {
                opts.instances = n;
            }
            let outcomes = run_all(&opts);
            for o in &outcomes {
                println!("{o}");
            }
            return Ok(outcomes.iter().all(|o| o.passed));
        }
        Command::Sieve { bound } => commands::cmd_sieve(&ctx, bound)?,
        Command::Orbit { steps } => commands::cmd_orbit(&ctx, steps)?,
        Command::Correlate => commands::cmd_correlate(&ctx, None)?,
        Command::Bilinear => commands::cmd_bilinear(&ctx)?,
        Command::ReduceJoining { steps } => commands::cmd_reduce_joining(&ctx, steps)?,
        Command::Weyl => commands::cmd_weyl(&ctx)?,
        Command::Winding { n, y0 } => commands::cmd_winding(&ctx, n, y0)?,
        Command::Constants => commands::cmd_constants(&ctx)?,
        Command::Coboundary => commands::cmd_coboundary(&ctx)?,
        Command::Run => commands::cmd_run(&ctx)?.0,
    };
    report(&out, &ctx);
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
