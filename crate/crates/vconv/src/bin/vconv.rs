//! Command-line driver. Exit codes follow the verdict contract:
//! 0 holds, 1 fails, 2 inconclusive, 3 usage/config/IO error.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use vconv::config::{CoverSpec, RunConfig};
use vconv::report;
use vconv::runner::{self, Op};

#[derive(Parser)]
#[command(
    name = "vconv",
    version,
    about = "Numeric checks for V-convergence of function sequences"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Semidistance of a sequence term against the family limit
    Vdist(CommonArgs),
    /// Classify convergence in the four modes
    Classify(CommonArgs),
    /// Sequence form of the convergence criterion at each probe
    Cauchy(CommonArgs),
    /// Normal series rule: hypotheses plus conclusion
    Series(CommonArgs),
    /// Abel series rule with summation by parts
    Abel(CommonArgs),
    /// Double-limit interchange along a convergent point sequence
    Interchange(CommonArgs),
    /// Patch an ordered cover and measure the defect against a target
    Patch(CommonArgs),
    /// List the built-in function families
    Corpus(CommonArgs),
}

impl Cmd {
    fn op(&self) -> Op {
        match self {
            Cmd::Vdist(_) => Op::VDist,
            Cmd::Classify(_) => Op::Classify,
            Cmd::Cauchy(_) => Op::Cauchy,
            Cmd::Series(_) => Op::Series,
            Cmd::Abel(_) => Op::Abel,
            Cmd::Interchange(_) => Op::Interchange,
            Cmd::Patch(_) => Op::Patch,
            Cmd::Corpus(_) => Op::Corpus,
        }
    }

    fn args(self) -> CommonArgs {
        match self {
            Cmd::Vdist(a)
            | Cmd::Classify(a)
            | Cmd::Cauchy(a)
            | Cmd::Series(a)
            | Cmd::Abel(a)
            | Cmd::Interchange(a)
            | Cmd::Patch(a)
            | Cmd::Corpus(a) => a,
        }
    }
}

#[derive(Args)]
struct CommonArgs {
    /// JSON config file; flags override its settings
    #[arg(long)]
    config: Option<PathBuf>,

    /// Corpus family name
    #[arg(long)]
    family: Option<String>,

    /// Probe points (scalar coordinates)
    #[arg(long, num_args = 1.., value_delimiter = ' ')]
    probes: Option<Vec<f64>>,

    /// Tolerance for the statement under test
    #[arg(long)]
    eps: Option<f64>,

    /// Sequence horizon
    #[arg(long)]
    horizon: Option<usize>,

    /// Sequence index (vdist) or approximant index (patch)
    #[arg(long)]
    index: Option<usize>,

    /// Codomain semidistance member
    #[arg(long)]
    member: Option<usize>,

    #[arg(long)]
    k_max: Option<u32>,
    #[arg(long)]
    tol_stall: Option<f64>,
    #[arg(long)]
    stall_span: Option<u32>,
    #[arg(long)]
    base_depth: Option<u32>,
    #[arg(long)]
    margin: Option<f64>,
    #[arg(long)]
    min_tail: Option<usize>,
    #[arg(long)]
    tail_window: Option<usize>,
    #[arg(long)]
    uniform_depth: Option<u32>,

    /// Patch target object name
    #[arg(long)]
    target: Option<String>,

    /// JSON file with the ordered cover (list of {center, radius, approximant})
    #[arg(long)]
    cover: Option<PathBuf>,

    /// Write the JSON report here instead of stdout
    #[arg(long)]
    json: Option<PathBuf>,

    /// Also write a CSV profile table
    #[arg(long)]
    csv: Option<PathBuf>,

    /// Also write an SVG profile plot
    #[arg(long)]
    svg: Option<PathBuf>,
}

impl CommonArgs {
    fn into_config(self) -> Result<(RunConfig, Outputs), vconv::Error> {
        let file_cfg = match &self.config {
            Some(path) => RunConfig::from_json(&fs::read_to_string(path)?)?,
            None => RunConfig::default(),
        };
        let cover = match &self.cover {
            Some(path) => {
                let specs: Vec<CoverSpec> = serde_json::from_str(&fs::read_to_string(path)?)?;
                Some(specs)
            }
            None => None,
        };
        let flag_cfg = RunConfig {
            family: self.family,
            horizon: self.horizon,
            probes: self.probes,
            epsilon: self.eps,
            member: self.member,
            index: self.index,
            k_max: self.k_max,
            tol_stall: self.tol_stall,
            stall_span: self.stall_span,
            base_depth: self.base_depth,
            margin: self.margin,
            min_tail: self.min_tail,
            tail_window: self.tail_window,
            uniform_depth: self.uniform_depth,
            cover,
            target: self.target,
        };
        let outputs = Outputs {
            json: self.json,
            csv: self.csv,
            svg: self.svg,
        };
        Ok((file_cfg.overlaid(flag_cfg), outputs))
    }
}

struct Outputs {
    json: Option<PathBuf>,
    csv: Option<PathBuf>,
    svg: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<ExitCode, vconv::Error> {
    let op = cli.cmd.op();
    let (cfg, outputs) = cli.cmd.args().into_config()?;
    let (verdict, rep) = runner::run(op, &cfg)?;
    let json = report::to_json(op, verdict, &rep)?;
    match &outputs.json {
        Some(path) => fs::write(path, &json)?,
        None => print!("{json}"),
    }
    if let Some(path) = &outputs.csv {
        fs::write(path, report::to_csv(&rep))?;
    }
    if let Some(path) = &outputs.svg {
        fs::write(path, report::to_svg(&rep))?;
    }
    Ok(ExitCode::from(verdict.exit_code() as u8))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(3),
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
