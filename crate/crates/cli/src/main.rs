use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use colombeau::scenario::{emit_samples, run, uniform_grid, Scenario};

#[derive(Parser)]
#[command(name = "colombeau", version, about = "Generalized function nets: classification, embeddings, support decompositions")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario and write a JSON report.
    Run {
        scenario: PathBuf,
        /// Report path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Write the CSV table described by the scenario's `samples` section.
    Samples { scenario: PathBuf },
}

enum Outcome {
    Pass,
    Fail(usize),
}

fn load(path: &PathBuf) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Scenario::from_json(&text).with_context(|| format!("in {}", path.display()))?)
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("TOOL_THREADS") {
        let n: usize = v.trim().parse().with_context(|| format!("TOOL_THREADS={v:?} is not a thread count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global()?;
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<Outcome> {
    configure_threads()?;
    match cli.cmd {
        Cmd::Run { scenario, out, seed } => {
            let mut sc = load(&scenario)?;
            if let Some(s) = seed {
                sc.seed = s;
            }
            let report = run(&sc)?;
            let text = serde_json::to_string_pretty(&report)?;
            match out {
                Some(p) => std::fs::write(&p, text + "\n").with_context(|| format!("writing {}", p.display()))?,
                None => println!("{text}"),
            }
            Ok(if report.failures == 0 { Outcome::Pass } else { Outcome::Fail(report.failures) })
        }
        Cmd::Samples { scenario } => {
            let sc = load(&scenario)?;
            let spec = sc.samples.clone().context("scenario has no `samples` section")?;
            let net = match &spec.net {
                Some(n) => n.build()?,
                None => sc.primary_net()?,
            };
            let file = File::create(&spec.out).with_context(|| format!("creating {}", spec.out))?;
            let mut w = BufWriter::new(file);
            let rows = emit_samples(&net, &spec.eps, &uniform_grid(spec.lo, spec.hi, spec.points), &mut w)?;
            w.flush()?;
            eprintln!("wrote {rows} rows to {}", spec.out);
            Ok(Outcome::Pass)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail(n)) => {
            eprintln!("FAIL: {n} verdict(s) failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
