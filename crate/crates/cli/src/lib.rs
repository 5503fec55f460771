pub mod cache;
pub mod commands;
pub mod config;

use anyhow::Result;
use cache::{Cache, Lookup};
use clap::{Parser, Subcommand};
use commands::{InputRecord, Outcome, RouteArg, Status};
use config::{ConfigError, Format, GlobalArgs, PipelineConfig};
use serde::Serialize;
use serde_json::Value;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Parser, Debug)]
#[command(name = "asaireg", version, about = "p-adic Asai regulators through overconvergent Eisenstein projection")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case", tag = "name")]
pub enum Command {
    /// Nonzero entries of the U_p matrix on the Kolberg basis
    Umatrix,
    /// Smith normal form of A - lambda and the kernel vector
    Snf {
        /// Eigenvalue, e.g. 3^7 (default p^{k+1})
        #[arg(long)]
        lambda: Option<String>,
    },
    /// The critical Eisenstein functional
    Eisfunctional,
    /// Diagonal pullbacks of the depleted Hilbert forms
    Pullback {
        #[arg(long, default_value_t = 3)]
        coeffs: usize,
        #[arg(long, default_value_t = 15)]
        prec: u32,
    },
    /// The regulator along one or both routes
    Regulator {
        #[arg(long, value_enum, default_value_t = RouteArg::Both)]
        route: RouteArg,
        /// Pullback coefficients to use
        #[arg(long)]
        coeffs: Option<usize>,
        /// Digits the result must certify
        #[arg(long)]
        digits: Option<u32>,
    },
    /// Bernoulli numbers, L-values and the Eisenstein period
    Lvalues {
        #[arg(long)]
        k: Option<u32>,
        #[arg(long, default_value_t = 20)]
        prec: u32,
    },
    /// Built-in consistency checks
    Selftest,
}

#[derive(Serialize)]
pub struct Report<'a> {
    pub schema_version: u32,
    pub command: &'a Command,
    pub config: PipelineConfig,
    pub inputs: Vec<InputRecord>,
    pub status: Status,
    pub body: Value,
}

/// Exit code for an error that escaped a command.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    use asaireg::Error as E;
    for cause in err.chain() {
        if cause.downcast_ref::<ConfigError>().is_some() {
            return 4;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::MissingPrime { .. } | E::InsufficientTruncation { .. } | E::Table(_) => 2,
                E::InsufficientPrecision { .. } | E::PrecisionExhausted(_) | E::TailUnbounded(_) | E::EulerVanishing(_) => 3,
                E::InvalidInput(_) | E::Unsupported(_) | E::InvalidWeight(_) => 4,
                _ => 1,
            };
        }
    }
    1
}

fn execute(cfg: &mut PipelineConfig, command: &Command) -> Result<(Outcome, Vec<InputRecord>)> {
    Ok(match command {
        Command::Umatrix => (commands::cmd_umatrix(cfg)?, vec![]),
        Command::Snf { lambda } => (commands::cmd_snf(cfg, lambda.as_deref())?, vec![]),
        Command::Eisfunctional => (commands::cmd_eisfunctional(cfg)?, vec![]),
        Command::Pullback { coeffs, prec } => {
            let (o, i) = commands::cmd_pullback(cfg, *coeffs, *prec)?;
            (o, vec![i])
        }
        Command::Regulator { route, coeffs, digits } => {
            if let Some(c) = coeffs {
                cfg.coeffs = *c;
            }
            if digits.is_some() {
                cfg.n_output = *digits;
            }
            let (o, i) = commands::cmd_regulator(cfg, *route)?;
            (o, vec![i])
        }
        Command::Lvalues { k, prec } => (commands::cmd_lvalues(cfg, *k, *prec)?, vec![]),
        Command::Selftest => (commands::cmd_selftest()?, vec![]),
    })
}

/// Runs one invocation; returns the rendered report and its exit code.
pub fn run(cli: &Cli) -> Result<(String, i32)> {
    let mut cfg = PipelineConfig::resolve(&cli.global)?;
    let cache = match &cfg.cache {
        Some(dir) => Some(Cache::open(dir)?),
        None => None,
    };
    // inputs are hashed up front so a changed table misses the cache
    let input_hash = match &cli.command {
        Command::Pullback { .. } | Command::Regulator { .. } => Some(commands::input_record(&cfg)?.sha256),
        _ => None,
    };
    let key = cache.as_ref().map(|_| Cache::key(&(SCHEMA_VERSION, &cli.command, cfg.fingerprint(), &input_hash)));
    let mut hit = None;
    if let (Some(c), Some(k)) = (&cache, &key) {
        let (v, lookup) = c.get::<(Outcome, Vec<InputRecord>, PipelineConfig)>(k);
        eprintln!("cache {}", match lookup {
            Lookup::Hit => "hit",
            Lookup::Miss => "miss",
            Lookup::Corrupt => "corrupt entry ignored",
        });
        hit = v;
    }
    let (outcome, inputs, cfg) = match hit {
        Some(x) => x,
        None => {
            let (o, i) = execute(&mut cfg, &cli.command)?;
            let x = (o, i, cfg);
            if let (Some(c), Some(k)) = (&cache, &key) {
                if x.0.status == Status::Ok {
                    c.put(k, &x)?;
                }
            }
            x
        }
    };
    let code = outcome.status.code();
    let text = match cli.global.format {
        Format::Json => {
            let report = Report {
                schema_version: SCHEMA_VERSION,
                command: &cli.command,
                config: cfg.fingerprint(),
                inputs,
                status: outcome.status,
                body: outcome.body,
            };
            serde_json::to_string_pretty(&report)?
        }
        Format::Text => {
            let mut lines = outcome.text;
            lines.push(format!("status: {:?}", outcome.status));
            lines.join("\n")
        }
    };
    Ok((text, code))
}
