use std::path::PathBuf;
use std::process::ExitCode;

use brolin_lab::commands::{self, Outcome};
use brolin_lab::{LabResult, Loaded, Rayon};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "brolin-lab", version, about = "Orthonormal polynomials, their Julia sets and Brolin measures")]
struct Cli {
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, env = "BROLIN_LAB_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Measure documents.
    #[command(subcommand)]
    Measure(MeasureCmd),
    /// Orthonormal basis and the table of leading coefficients.
    Ortho(Common),
    /// Green's function grid, Brolin samples and a summary for one degree.
    Dyn(Common),
    /// Filled hull and equilibrium measure of the support.
    Eq(Common),
    /// Degree sweep with convergence diagnostics.
    Lab(Common),
    /// Re-emit CSVs and a verdict table from a saved report.
    Report {
        report: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum MeasureCmd {
    /// Parse and validate a measure document.
    Validate { file: PathBuf },
    /// Write the quadrature proxy of a measure as CSV.
    Quadrature {
        file: PathBuf,
        #[arg(long, default_value_t = 256)]
        nodes: usize,
        #[arg(long, short)]
        out: PathBuf,
    },
}

/// Flags shared by the pipeline commands; they override the config file.
#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Measure document (JSON); replaces the config's measure.
    #[arg(long)]
    measure: Option<PathBuf>,
    /// Degree for `ortho` and `dyn`.
    #[arg(long)]
    degree: Option<usize>,
    /// Sweep degrees, e.g. `2,4,8` or `2-16`.
    #[arg(long)]
    degrees: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_degrees(s: &str) -> Result<Vec<usize>, String> {
    let mut v = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let bad = || format!("bad degree list entry {part:?}");
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (usize, usize) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
                v.extend(a..=b);
            }
            None => v.push(part.parse().map_err(|_| bad())?),
        }
    }
    Ok(v)
}

fn load(c: &Common, command: &str) -> LabResult<Loaded> {
    use brolin_lab::measure_doc::MeasureDoc;
    let mut l = match (&c.config, &c.measure) {
        (Some(p), _) => Loaded::read(p)?,
        (None, Some(m)) => Loaded::from_measure_file(m)?,
        (None, None) => return Err(brolin_lab::LabError::Input("either --config or --measure is required".into())),
    };
    if let (Some(_), Some(m)) = (&c.config, &c.measure) {
        let (doc, _) = MeasureDoc::load(m)?;
        let doc = match doc {
            MeasureDoc::QuadratureTable { label, path } => MeasureDoc::QuadratureTable {
                label,
                path: m.parent().map(|d| d.join(&path)).unwrap_or(path),
            },
            d => d,
        };
        l.config.measure = doc;
    }
    let cfg = &mut l.config;
    if let Some(d) = c.degree {
        match command {
            "dyn" => cfg.dynamics.degree = d,
            _ => cfg.ortho.degree = Some(d),
        }
    }
    if let Some(s) = &c.degrees {
        cfg.degrees = parse_degrees(s).map_err(brolin_lab::LabError::Input)?;
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(r) = c.resolution {
        cfg.grid.resolution = r;
        cfg.lab.resolution = r;
    }
    if let Some(n) = c.samples {
        cfg.dynamics.samples = n;
        cfg.lab.samples = n;
    }
    if let Some(o) = &c.out {
        cfg.output_dir = o.clone();
    }
    cfg.validate()?;
    Ok(l)
}

fn run(cli: Cli) -> LabResult<Outcome> {
    match cli.command {
        Command::Measure(MeasureCmd::Validate { file }) => commands::measure_validate(&file),
        Command::Measure(MeasureCmd::Quadrature { file, nodes, out }) => commands::measure_quadrature(&file, nodes, &out),
        Command::Ortho(c) => commands::cmd_ortho(&load(&c, "ortho")?),
        Command::Dyn(c) => {
            let l = load(&c, "dyn")?;
            commands::cmd_dyn(&Rayon::new(cli.threads)?, &l)
        }
        Command::Eq(c) => {
            let l = load(&c, "eq")?;
            commands::cmd_eq(&Rayon::new(cli.threads)?, &l)
        }
        Command::Lab(c) => {
            let l = load(&c, "lab")?;
            Ok(commands::cmd_lab(&Rayon::new(cli.threads)?, &l)?.1)
        }
        Command::Report { report, out } => commands::cmd_report(&report, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(o) => {
            if o.exit_code == 0 {
                println!("{}", o.message);
            } else {
                eprintln!("{}", o.message);
            }
            ExitCode::from(o.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
