//! `kobalab`: command-line front end for the Kobayashi geometry toolkit.

mod commands;
mod config;

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{DeltaArgs, Outcome};
use config::{load_domain, Failure, Format, RunConfig};

const EXIT_HELP: &str = "\
Exit codes: 0 pass, 1 assertion failure, 2 input error, 3 non-convergence
or undecided classification, 4 precondition violated by well-formed input.
KOBALAB_THREADS caps the worker threads. CSV columns are listed per
subcommand and in CSV_SCHEMA.md.";

#[derive(Parser)]
#[command(name = "kobalab", version, about = "Kobayashi geometry of convex domains", after_help = EXIT_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Domain spec JSON file, or `kind:dim` for a catalog domain
    /// (ball, polydisc, left_half_spaces, siegel, product_with_plane).
    #[arg(long)]
    domain: Option<String>,
    /// RunConfig JSON: seed, metric, out, format, horizons, isometry_samples.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand)]
enum Command {
    /// Two-sided Kobayashi distance between two points.
    #[command(after_help = "CSV: lower,upper,closed_lower,closed_upper,nodes,iterations")]
    Distance {
        #[command(flatten)]
        common: Common,
        /// Point as JSON `[[re, im], ...]`.
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
    },
    /// Four-point hyperbolicity estimate over a radius sweep.
    #[command(
        after_help = "CSV: sample_radius,delta_four_point,delta_thin_triangle,error_bar,n_samples"
    )]
    Delta {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Comma-separated sampling radii in domain scales.
        #[arg(long, value_delimiter = ',')]
        radii: Option<Vec<f64>>,
        /// Sampled triples also checked for thin triangles.
        #[arg(long, default_value_t = 0)]
        triangles: usize,
    },
    /// Recession directions, end count and C-properness.
    #[command(after_help = "CSV: direction,v0_re,v0_im,...")]
    Ends {
        #[command(flatten)]
        common: Common,
    },
    /// Orbit of a self-map and its Denjoy-Wolff classification.
    #[command(after_help = "CSV: n,z0_re,z0_im,...,step_dist,norm")]
    Iterate {
        #[command(flatten)]
        common: Common,
        /// MapSpec JSON file.
        #[arg(long)]
        map: PathBuf,
        /// Start point; the domain witness when absent.
        #[arg(long)]
        x0: Option<String>,
        #[arg(long, default_value_t = 200)]
        steps: usize,
        /// Euclidean tail diameter for an interior attractor.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Return distances of a commuting pair and the compact-return bound.
    #[command(after_help = "CSV: m,n,dist,slack")]
    Commute {
        #[command(flatten)]
        common: Common,
        /// MapSpec JSON files for f and g, in that order.
        #[arg(long = "map", num_args = 1)]
        maps: Vec<PathBuf>,
        #[arg(long)]
        x0: Option<String>,
        /// Largest iterate count of f.
        #[arg(long = "iterates", default_value_t = 20)]
        big_m: usize,
    },
    /// Rays to boundary targets: equivalence and limits.
    #[command(after_help = "CSV: ray,target,start,node,z0_re,z0_im,...")]
    VerifyExtension {
        #[command(flatten)]
        common: Common,
        /// JSON array of ideal points.
        #[arg(long)]
        targets: PathBuf,
        #[arg(long)]
        x0: Option<String>,
    },
    /// Counterexample gallery: shear, bidisc or cayley.
    #[command(after_help = "CSV rows: shear n,a..,b..,to_limit,source_gap,image_gap; \
bidisc n,z..,w..,lower,upper; cayley n,z..,image..,norm,image_norm")]
    Gallery {
        #[command(flatten)]
        common: Common,
        which: String,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Distance { common, .. }
            | Command::Delta { common, .. }
            | Command::Ends { common }
            | Command::Iterate { common, .. }
            | Command::Commute { common, .. }
            | Command::VerifyExtension { common, .. }
            | Command::Gallery { common, .. } => common,
        }
    }
}

fn init_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("KOBALAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Input(format!("KOBALAB_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Input(format!("thread pool: {e}")))
}

fn dispatch(cmd: &Command, cfg: &RunConfig) -> Result<Outcome, Failure> {
    let domain = || load_domain(cmd.common().domain.as_deref());
    match cmd {
        Command::Distance { x, y, .. } => commands::distance_cmd(&domain()?, x, y, cfg),
        Command::Delta {
            samples,
            radii,
            triangles,
            ..
        } => {
            let args = DeltaArgs {
                samples: *samples,
                radii: radii.clone(),
                triangles: *triangles,
            };
            commands::delta_cmd(&domain()?, &args, cfg)
        }
        Command::Ends { .. } => commands::ends_cmd(&domain()?, cfg),
        Command::Iterate {
            map, x0, steps, tol, ..
        } => commands::iterate_cmd(&domain()?, map, x0.as_deref(), *steps, *tol, cfg),
        Command::Commute { maps, x0, big_m, .. } => {
            commands::commute_cmd(&domain()?, maps, x0.as_deref(), *big_m, cfg)
        }
        Command::VerifyExtension { targets, x0, .. } => {
            commands::verify_extension_cmd(&domain()?, targets, x0.as_deref(), cfg)
        }
        Command::Gallery { which, .. } => commands::gallery_cmd(which, cfg),
    }
}

fn emit(outcome: &Outcome, format: Format, out: Option<&PathBuf>) -> Result<(), Failure> {
    let io_err = |e: io::Error| Failure::Input(format!("cannot write output: {e}"));
    let mut sink: Box<dyn Write> = match out {
        Some(p) => Box::new(File::create(p).map_err(io_err)?),
        None => Box::new(io::stdout().lock()),
    };
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut sink, &outcome.json)
                .map_err(|e| Failure::Input(format!("cannot write output: {e}")))?;
            writeln!(sink).map_err(io_err)?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(sink);
            let csv_err = |e: csv::Error| Failure::Input(format!("cannot write output: {e}"));
            w.write_record(&outcome.table.header).map_err(csv_err)?;
            for row in &outcome.table.rows {
                w.write_record(row).map_err(csv_err)?;
            }
            w.flush().map_err(io_err)?;
            return Ok(());
        }
    }
    sink.flush().map_err(io_err)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    init_threads()?;
    let common = cli.command.common();
    let mut cfg = RunConfig::load(common.config.as_deref())?;
    if let Some(s) = common.seed {
        cfg.seed = s;
        cfg.metric.seed = s;
    }
    let format = common.format.or(cfg.format).unwrap_or_default();
    let out = common.out.as_ref().or(cfg.out.as_ref());
    let outcome = dispatch(&cli.command, &cfg)?;
    emit(&outcome, format, out)?;
    match outcome.failure {
        Some(f) => Err(f),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("kobalab: {f}");
            ExitCode::from(f.code())
        }
    }
}
