use std::fs;
use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use diffchain::cli::{self, Command, Format, RunConfig};
use diffchain::convergence::DEFAULT_K_MAX;
use diffchain::Error;

/// Capacities of index sets and convergence of higher-order differences of
/// two-state Markov chains.
#[derive(Parser)]
#[command(name = "diffchain", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    format: Format,
    /// Write output to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<String>,
    /// Tolerance for chain-type classification; 0 means exact.
    #[arg(long, default_value_t = 0.0, global = true)]
    tol: f64,
    /// Refuse orders k above this bound.
    #[arg(long, default_value_t = DEFAULT_K_MAX, global = true)]
    k_max: u64,
}

#[derive(Subcommand)]
enum Cmd {
    /// Capacities C and c of an index set, plus thickness for family unions.
    Caps {
        #[arg(long)]
        set: String,
        /// List every member with its trailing-ones count and digit sum.
        #[arg(long)]
        members: bool,
        /// Density sample points.
        #[arg(long, value_delimiter = ',')]
        m: Vec<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Exact law of the k-th difference at time n.
    Dist {
        #[arg(long)]
        chain: String,
        #[arg(long, default_value_t = 0)]
        n: u64,
        #[arg(long)]
        k: u64,
        /// Also enumerate all windows and compare (k <= 22).
        #[arg(long)]
        brute: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Deviation sweep along an index set with verdict and control contrast.
    Converge {
        #[arg(long)]
        chain: String,
        #[arg(long)]
        set: String,
        #[arg(long, default_value_t = 0)]
        n: u64,
        /// Final deviation must fall below this value.
        #[arg(long, default_value_t = 1e-6)]
        threshold: f64,
        /// Required ratio between control and final deviation.
        #[arg(long, default_value_t = 10.0)]
        control_factor: f64,
        /// Control set is {2^m : 1 <= m <= this}.
        #[arg(long, default_value_t = 14)]
        control_mmax: u32,
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo estimate of P(k-th difference at n = 1).
    Simulate {
        #[arg(long)]
        chain: String,
        #[arg(long)]
        k: u64,
        #[arg(long, default_value_t = 0)]
        n: u64,
        #[arg(long)]
        paths: u64,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Counting density of an index set at sample points.
    Density {
        #[arg(long)]
        set: String,
        #[arg(long, value_delimiter = ',', required = true)]
        m: Vec<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Re-run the configuration embedded in a previous output file.
    Replay {
        file: String,
        /// Write the regenerated output here (default: stdout).
        #[arg(long)]
        out: Option<String>,
    },
}

fn base(command: Command, common: &Common) -> RunConfig {
    let mut c = RunConfig::new(command);
    c.format = common.format;
    c.out = common.out.clone();
    c.tol = common.tol;
    c.k_max = common.k_max;
    c
}

fn to_config(cmd: Cmd) -> Result<(RunConfig, Option<String>), Error> {
    let config = match cmd {
        Cmd::Caps {
            set,
            members,
            m,
            common,
        } => {
            let mut c = base(Command::Caps, &common);
            c.set = Some(set);
            c.members = members;
            c.m = m;
            c
        }
        Cmd::Dist {
            chain,
            n,
            k,
            brute,
            common,
        } => {
            let mut c = base(Command::Dist, &common);
            c.chain = Some(chain);
            c.n = n;
            c.k = Some(k);
            c.brute = brute;
            c
        }
        Cmd::Converge {
            chain,
            set,
            n,
            threshold,
            control_factor,
            control_mmax,
            common,
        } => {
            let mut c = base(Command::Converge, &common);
            c.chain = Some(chain);
            c.set = Some(set);
            c.n = n;
            c.threshold = threshold;
            c.control_factor = control_factor;
            c.control_mmax = control_mmax;
            c
        }
        Cmd::Simulate {
            chain,
            k,
            n,
            paths,
            seed,
            common,
        } => {
            let mut c = base(Command::Simulate, &common);
            c.chain = Some(chain);
            c.k = Some(k);
            c.n = n;
            c.paths = Some(paths);
            c.seed = Some(seed);
            c
        }
        Cmd::Density { set, m, common } => {
            let mut c = base(Command::Density, &common);
            c.set = Some(set);
            c.m = m;
            c
        }
        Cmd::Replay { file, out } => {
            let text = fs::read_to_string(&file)?;
            let config = cli::extract_config(&text)?;
            return Ok((config, out));
        }
    };
    let out = config.out.clone();
    Ok((config, out))
}

fn configure_threads() {
    if let Ok(v) = std::env::var("DIFFCHAIN_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
            _ => eprintln!("diffchain: ignoring DIFFCHAIN_THREADS={v:?}"),
        }
    }
}

fn run(cmd: Cmd) -> Result<(), Error> {
    let (config, out) = to_config(cmd)?;
    let text = cli::execute(&config)?;
    match out {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Cli::parse();
    configure_threads();
    match run(args.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("diffchain: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
