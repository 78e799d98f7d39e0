mod run;

use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "measura", version, about = "Exact measures and certified integrals over a small expression language")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Requested enclosure width, as `p/q` or a decimal.
    #[arg(long, global = true, default_value = "1e-6")]
    pub tol: String,
    /// Output format.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads for library-level parallelism.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Engine {
    Riemann,
    Lebesgue,
    Regulated,
    All,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Measure of a set expression in [0, 1].
    Measure {
        set: String,
        /// `lebesgue`, `dirac:<rat>` or `density:<expr>`.
        #[arg(long, default_value = "lebesgue")]
        measure: String,
    },
    /// Integral of a function over [0, 1] or a subset.
    Integrate {
        expr: String,
        #[arg(long, value_enum, default_value = "lebesgue")]
        engine: Engine,
        #[arg(long, default_value = "lebesgue")]
        measure: String,
        /// Restrict to a set expression.
        #[arg(long)]
        over: Option<String>,
        /// Maximum subdivision depth of the Riemann engine.
        #[arg(long, default_value_t = 20)]
        depth: u32,
        /// Divergence bound of the truncation path.
        #[arg(long, default_value = "1e6")]
        bound: String,
    },
    /// Levels of the middle-third Cantor construction.
    Cantor {
        n: u32,
        /// Include every interval of the last level.
        #[arg(long)]
        full: bool,
    },
    /// Open cover of the Cantor set with total length below `--tol`.
    Cover {
        #[arg(default_value = "cantor")]
        family: String,
        /// Include every interval of the cover.
        #[arg(long)]
        full: bool,
    },
    /// Integrals of a sequence `f_n` given as a template in `n`.
    Converge {
        template: String,
        /// `bounded`, `monotone` or `dominated:<expr>`.
        #[arg(long, default_value = "bounded")]
        mode: String,
        /// Comma-separated list or inclusive range `a..b`.
        #[arg(long, default_value = "2,4,8,16,32,64,128,256,512,1024")]
        ns: String,
        /// Pointwise limit to compare against.
        #[arg(long)]
        limit: Option<String>,
    },
    /// Fourier coefficients on [-1, 1] in the trigonometric family.
    Fourier {
        expr: String,
        #[arg(long = "N", default_value_t = 16)]
        n: usize,
        /// Also sample `f` and `S_N` on a uniform grid, as `grid=<int>`.
        #[arg(long = "emit-plot")]
        emit_plot: Option<String>,
    },
    /// Hoelder, Cauchy-Schwarz, Minkowski and parallelogram checks on [-1, 1].
    L2check { f: String, g: String },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(j) = cli.common.jobs {
        if j > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(j).build_global();
        }
    }
    match run::run(&cli) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(out.text.as_bytes());
            let _ = stdout.flush();
            ExitCode::from(out.code)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
