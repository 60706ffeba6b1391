use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use partopt::output::{read_metrics, read_particles};
use partopt::plot::{render_curves, render_scatter};
use partopt::report::write_outputs;
use partopt::run::{run_with_context, RunContext};
use partopt::spec::{load_spec, to_toml};
use partopt::sweep::run_sweep;
use partopt::{HarnessError, Result};

#[derive(Parser)]
#[command(name = "partopt", version, about = "Run particle-optimization sampling experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its CSV files and plots.
    Run {
        spec: PathBuf,
        /// Overrides output.dir from the spec.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a spec and print it with all defaults filled in.
    Validate { spec: PathBuf },
    /// Render a metrics CSV as curves or a particles CSV as a scatter of its last snapshot.
    Plot {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Rerun a spec once per value of one parameter (a dotted key such as sampler.plan_scale).
    Sweep {
        spec: PathBuf,
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
}

fn plot(input: &Path, output: &Path) -> Result<()> {
    let file = std::fs::File::open(input).map_err(|e| HarnessError::io(input, e))?;
    let mut first = String::new();
    std::io::BufRead::read_line(&mut std::io::BufReader::new(file), &mut first)
        .map_err(|e| HarnessError::io(input, e))?;
    if first.starts_with("iteration,particle") {
        let snaps = read_particles(input)?;
        let (_, last) = snaps.last().ok_or_else(|| HarnessError::Data {
            path: input.to_path_buf(),
            line: 2,
            message: "no particles".into(),
        })?;
        render_scatter(last, None, output)
    } else {
        render_curves(&read_metrics(input)?, output)
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { spec, out } => {
            let mut s = load_spec(&spec)?;
            if let Some(dir) = out {
                s.output.dir = dir;
            }
            let ctx = RunContext::new(&s)?;
            let result = run_with_context(&s, &ctx)?;
            write_outputs(&s, &ctx, &result, &s.output.dir)?;
            for row in result.summary.iter().filter(|r| r.iteration == s.sampler.iterations) {
                println!("{} {:.6} ± {:.6} (n={})", row.metric, row.mean, row.std, row.count);
            }
            println!("wrote {}", s.output.dir.display());
            match result.diverged() {
                0 => Ok(()),
                d => Err(HarnessError::Diverged(d, result.runs.len())),
            }
        }
        Command::Validate { spec } => {
            let s = load_spec(&spec)?;
            print!("{}", to_toml(&s));
            Ok(())
        }
        Command::Plot { input, output } => plot(&input, &output),
        Command::Sweep { spec, param, values } => {
            let s = load_spec(&spec)?;
            let diverged = run_sweep(&s, &param, &values, &spec)?;
            println!("wrote {}", s.output.dir.join("sweep.csv").display());
            match diverged {
                0 => Ok(()),
                d => Err(HarnessError::Diverged(d, values.len() * s.run.repeats)),
            }
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
