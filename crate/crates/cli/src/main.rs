use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sgks::problem::OracleKind;
use sgks::runner::{exit_code, run, sweep, RunManifest, SweepAxis, OUT_ROOT_ENV};

#[derive(Parser)]
#[command(name = "sgks", version, about = "Wiener chaos solver for the stochastic generalized Kuramoto-Sivashinsky equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem for one or more seeds and write the artifacts.
    Run(Common),
    /// Repeat a run over values of dt, dx or I and write sweep.csv.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Axis to vary: dt, dx or I.
        #[arg(long)]
        axis: SweepAxis,
        /// Comma-separated values along the axis.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<f64>,
    },
}

#[derive(Args)]
struct Common {
    /// Builtin problem: linear_test, tp1, tp2, tp3, tp4.
    #[arg(long, default_value = "tp1")]
    problem: String,
    /// TOML problem file; overrides --problem.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seeds, comma-separated or repeated.
    #[arg(long = "seed", value_delimiter = ',', default_value = "0")]
    seeds: Vec<u64>,
    /// Number of Gaussian modes I.
    #[arg(long = "I", default_value_t = 60)]
    total: u32,
    /// Number of first-order indices.
    #[arg(long = "Itilde", default_value_t = 40)]
    gaussian: u32,
    /// Hermite order cap for modes above Itilde.
    #[arg(long, default_value_t = 1)]
    cap: u32,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    dx: Option<f64>,
    /// Output directory [default: $SGKS_OUT_ROOT/<problem> or runs/<problem>].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Snapshot times, comma-separated.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    snapshots: Vec<f64>,
    /// Reference solution: analytic, theorem3 or none.
    #[arg(long)]
    oracle: Option<OracleKind>,
    /// Run even when nu*dt/dx^4 exceeds the stability limit.
    #[arg(long)]
    force: bool,
}

impl Common {
    fn manifest(self) -> RunManifest {
        let label = self
            .config
            .as_ref()
            .and_then(|p| p.file_stem())
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| self.problem.clone());
        let out = self.out.unwrap_or_else(|| {
            let root = std::env::var_os(OUT_ROOT_ENV)
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("runs"));
            root.join(label)
        });
        RunManifest {
            problem: self.problem,
            config: self.config,
            seeds: self.seeds,
            gaussian_count: self.gaussian,
            total_count: self.total,
            higher_order_cap: self.cap,
            dt: self.dt,
            dx: self.dx,
            out,
            snapshots: self.snapshots,
            oracle: self.oracle,
            force: self.force,
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |v| format!("{v:.4e}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(common) => {
            let manifest = common.manifest();
            run(&manifest).map(|report| {
                for s in &report.seeds {
                    match &s.errors {
                        Some(e) => println!(
                            "seed {}: max_rel {} terminal_abs {:.4e} slope {}",
                            s.seed,
                            fmt_opt(e.max_rel),
                            e.terminal_abs,
                            fmt_opt(e.slope)
                        ),
                        None => println!("seed {}: no reference", s.seed),
                    }
                }
                println!("wrote {}", report.out.display());
            })
        }
        Command::Sweep {
            common,
            axis,
            values,
        } => {
            let manifest = common.manifest();
            sweep(&manifest, axis, &values).map(|rows| {
                for r in &rows {
                    println!(
                        "{axis}={} seed {}: terminal_abs {} max_rel {} slope {} {}",
                        r.value,
                        r.seed,
                        fmt_opt(r.terminal_abs),
                        fmt_opt(r.max_rel),
                        fmt_opt(r.slope),
                        r.status
                    );
                }
                println!("wrote {}", manifest.out.join("sweep.csv").display());
            })
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
