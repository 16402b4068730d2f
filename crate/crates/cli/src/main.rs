use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use swarmshape::agent::Method;
use swarmshape_cli::commands::{self, RunOptions};
use swarmshape_cli::render;
use swarmshape_cli::serve::server;

#[derive(Parser)]
#[command(author, version, about = "Swarm shape formation simulator")]
struct Args {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario and write its trace as JSON lines
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Output file; stdout when omitted
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, env = "SWARMSHAPE_SEED")]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
        #[arg(long)]
        steps: Option<u64>,
    },
    /// Audit a trace; exits nonzero if any check fails
    Check {
        #[arg(long)]
        trace: PathBuf,
        /// Comma-separated subset of checks; all when omitted
        #[arg(long, value_delimiter = ',')]
        checks: Vec<String>,
    },
    /// Print the DFCP path of a shape file as JSON
    Oracle {
        #[arg(long)]
        shape: PathBuf,
    },
    /// Draw a trace step, or a shape with its path, as SVG
    Render {
        #[arg(long, conflicts_with = "shape", requires = "render_step")]
        trace: Option<PathBuf>,
        #[arg(long)]
        render_step: Option<u64>,
        #[arg(long)]
        shape: Option<PathBuf>,
        /// Output file; stdout when omitted
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Serve live sessions over WebSocket at ws://127.0.0.1:PORT/ws
    Serve {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, env = "SWARMSHAPE_PORT", default_value_t = 8080)]
        port: u16,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Comm,
    Movement,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Comm => Method::CommunicationBased,
            MethodArg::Movement => Method::MovementBased,
        }
    }
}

fn write_out(path: Option<&PathBuf>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => Ok(io::stdout().write_all(bytes)?),
    }
}

fn run(cmd: Cmd) -> Result<bool> {
    match cmd {
        Cmd::Run { scenario, trace, seed, method, steps } => {
            let sc = commands::load_scenario(&scenario)?;
            let opts = RunOptions { seed, method: method.map(Method::from), steps };
            let t = commands::run(&sc, &opts)?;
            write_out(trace.as_ref(), t.to_jsonl().as_bytes())?;
            eprintln!("{} steps, trace hash {}", t.steps.len(), t.hash());
        }
        Cmd::Check { trace, checks } => {
            let t = commands::load_trace(&trace)?;
            let reports = commands::check(&t, &checks)?;
            for r in &reports {
                let verdict = if r.passed { "PASS" } else { "FAIL" };
                match &r.counterexample {
                    Some(c) => match c.step {
                        Some(step) => println!("{verdict} {}: step {step}: {}", r.check_name, c.detail),
                        None => println!("{verdict} {}: {}", r.check_name, c.detail),
                    },
                    None => println!("{verdict} {}", r.check_name),
                }
            }
            return Ok(reports.iter().all(|r| r.passed));
        }
        Cmd::Oracle { shape } => {
            let doc = commands::oracle(&commands::load_shape(&shape)?);
            println!("{}", serde_json::to_string_pretty(&doc)?);
        }
        Cmd::Render { trace, render_step, shape, out } => {
            let svg = match (trace, render_step, shape) {
                (Some(t), Some(step), None) => render::render_step(&commands::load_trace(&t)?, step)?,
                (None, None, Some(s)) => render::render_shape(&commands::load_shape(&s)?),
                _ => bail!("render takes either --trace with --render-step, or --shape"),
            };
            write_out(out.as_ref(), svg.as_bytes())?;
        }
        Cmd::Serve { scenario, port } => {
            if port == 0 {
                bail!("port must be between 1 and 65535");
            }
            let sc = commands::load_scenario(&scenario)?;
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async {
                let listener = tokio::net::TcpListener::bind(("127.0.0.1", port)).await?;
                eprintln!("listening on ws://{}/ws", listener.local_addr()?);
                server::serve(listener, sc).await
            })?;
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Args::parse().cmd) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
