use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gerber_shiu::experiments::{self, RunConfig};
use gerber_shiu::Error;

mod config;

use config::{parse_list, parse_u_list, ConfigFile};

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "gerber-shiu",
    version,
    about = "Gerber-Shiu functions by Volterra collocation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Φ(u) on a list of reserves
    Solve(Common),
    /// Boundary value Φ(0) and κ_δ
    Phi0(Common),
    /// Error and order table over N = 64, 128, ..., --N
    Convergence(Common),
    /// Monte-Carlo estimate at a single reserve
    Mc(Common),
    /// Values and relative errors for N = 512..4096, plus the three curves
    Figures(Common),
}

#[derive(Args, Debug, Default, Clone)]
struct Common {
    /// key=value file with the same keys as the long flags; flags win
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// exp | erlang2 | combexp
    #[arg(long)]
    claims: Option<String>,
    /// ruin | claimcause | deficit
    #[arg(long)]
    penalty: Option<String>,
    #[arg(long)]
    m: Option<usize>,
    /// Collocation parameters, comma separated
    #[arg(long)]
    params: Option<String>,
    #[arg(long = "N", value_name = "INT")]
    n: Option<usize>,
    #[arg(long = "T", value_name = "FLOAT")]
    horizon: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Comma-separated reserves or a start:step:end range
    #[arg(long)]
    u: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    paths: Option<u64>,
    /// Output file (figures: file prefix)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Figure reference: auto | oracle | refined | self
    #[arg(long)]
    reference: Option<String>,
    /// Table error measure: auto | exact | self
    #[arg(long)]
    error: Option<String>,
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_configuration() {
            Failure::Config(e.to_string())
        } else {
            Failure::Numerical(e.to_string())
        }
    }
}

impl Common {
    /// Fills unset flags from the config file, if any.
    fn merged(self) -> Result<Common, Failure> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let text = fs::read_to_string(&path)
            .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
        let file = ConfigFile::parse(&text).map_err(Failure::Config)?;
        let num = |key: &str| -> Result<Option<f64>, Failure> {
            file.get(key)
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|e| Failure::Config(format!("{key}: {e}")))
                })
                .transpose()
        };
        let int = |key: &str| -> Result<Option<u64>, Failure> {
            file.get(key)
                .map(|v| {
                    v.parse::<u64>()
                        .map_err(|e| Failure::Config(format!("{key}: {e}")))
                })
                .transpose()
        };
        Ok(Common {
            config: None,
            claims: self
                .claims
                .or_else(|| file.get("claims").map(str::to_string)),
            penalty: self
                .penalty
                .or_else(|| file.get("penalty").map(str::to_string)),
            m: match self.m {
                Some(m) => Some(m),
                None => int("m")?.map(|v| v as usize),
            },
            params: self
                .params
                .or_else(|| file.get("params").map(str::to_string)),
            n: match self.n {
                Some(n) => Some(n),
                None => int("N")?.map(|v| v as usize),
            },
            horizon: match self.horizon {
                Some(t) => Some(t),
                None => num("T")?,
            },
            c: match self.c {
                Some(c) => Some(c),
                None => num("c")?,
            },
            lambda: match self.lambda {
                Some(l) => Some(l),
                None => num("lambda")?,
            },
            delta: match self.delta {
                Some(d) => Some(d),
                None => num("delta")?,
            },
            u: self.u.or_else(|| file.get("u").map(str::to_string)),
            seed: match self.seed {
                Some(s) => Some(s),
                None => int("seed")?,
            },
            paths: match self.paths {
                Some(p) => Some(p),
                None => int("paths")?,
            },
            out: self.out.or_else(|| file.get("out").map(PathBuf::from)),
            reference: self
                .reference
                .or_else(|| file.get("reference").map(str::to_string)),
            error: self.error.or_else(|| file.get("error").map(str::to_string)),
        })
    }

    fn run_config(&self) -> Result<RunConfig, Failure> {
        let d = RunConfig::default();
        let params = match &self.params {
            Some(s) => Some(parse_list(s).map_err(Failure::Config)?),
            None => None,
        };
        let m = self.m.or(params.as_ref().map(Vec::len)).unwrap_or(d.m);
        Ok(RunConfig {
            claims: parse_opt(&self.claims, d.claims)?,
            penalty: parse_opt(&self.penalty, d.penalty)?,
            m,
            params,
            n: self.n.unwrap_or(d.n),
            horizon: self.horizon.unwrap_or(d.horizon),
            c: self.c.unwrap_or(d.c),
            lambda: self.lambda.unwrap_or(d.lambda),
            delta: self.delta.unwrap_or(d.delta),
            u: match &self.u {
                Some(s) => Some(parse_u_list(s).map_err(Failure::Config)?),
                None => None,
            },
            seed: self.seed.unwrap_or(d.seed),
            paths: self.paths.unwrap_or(d.paths),
            reference: parse_opt(&self.reference, d.reference)?,
            error: parse_opt(&self.error, d.error)?,
        })
    }
}

fn parse_opt<T: std::str::FromStr<Err = Error>>(
    v: &Option<String>,
    default: T,
) -> Result<T, Failure> {
    match v {
        Some(s) => Ok(s.parse()?),
        None => Ok(default),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text)
            .map_err(|e| Failure::Config(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Solve(args) => {
            let args = args.merged()?;
            let rows = experiments::solve_curve(&args.run_config()?)?;
            emit(args.out.as_deref(), &experiments::solve_csv(&rows))
        }
        Command::Phi0(args) => {
            let args = args.merged()?;
            let r = experiments::phi0_result(&args.run_config()?)?;
            emit(args.out.as_deref(), &experiments::phi0_csv(&r))
        }
        Command::Convergence(args) => {
            let args = args.merged()?;
            let report = experiments::convergence(&args.run_config()?)?;
            emit(args.out.as_deref(), &report.to_csv())
        }
        Command::Mc(args) => {
            let args = args.merged()?;
            let e = experiments::monte_carlo(&args.run_config()?)?;
            emit(args.out.as_deref(), &experiments::mc_csv(&e))
        }
        Command::Figures(args) => {
            let args = args.merged()?;
            let cfg = args.run_config()?;
            let data = experiments::figures(&cfg)?;
            let curves = experiments::curves(&RunConfig {
                n: *experiments::FIGURE_LEVELS.last().expect("non-empty"),
                ..cfg
            })?;
            let prefix = args.out.unwrap_or_else(|| PathBuf::from("figures"));
            emit(
                Some(&with_suffix(&prefix, "_values.csv")),
                &data.values_csv(),
            )?;
            emit(
                Some(&with_suffix(&prefix, "_relerr.csv")),
                &data.relerr_csv(),
            )?;
            emit(Some(&with_suffix(&prefix, "_curves.csv")), &curves.to_csv())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}
