use asaireg::hilbert::Weight;
use asaireg::qfield::QuadField;
use clap::Args;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};

/// A configuration problem; maps to exit code 4.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid configuration: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn bad<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TailConfig {
    None,
    Conjecture { bound: i64, start: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub p: u64,
    #[serde(rename = "D")]
    pub d: i64,
    pub weight: [i64; 4],
    pub j: i64,
    /// Modulus exponent for the `U_p` matrix.
    pub n_matrix: u32,
    /// Digits the regulator must certify; fewer is reported as precision exhausted.
    pub n_output: Option<u32>,
    /// Matrix window override (default `R(N)`).
    pub trunc: Option<usize>,
    /// Pullback coefficients for the regulator.
    pub coeffs: usize,
    pub table: Option<PathBuf>,
    pub cache: Option<PathBuf>,
    pub tail: TailConfig,
    /// Generator `(x + y sqrt D)/2` of the first prime above `p`.
    pub p1: Option<[i64; 2]>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            p: 3,
            d: 13,
            weight: [2, 8, 3, 0],
            j: 0,
            n_matrix: 20,
            n_output: None,
            trunc: None,
            coeffs: 55,
            table: None,
            cache: None,
            tail: TailConfig::None,
            p1: None,
        }
    }
}

/// Flags shared by every subcommand; each overrides the config file.
#[derive(Args, Clone, Debug, Default)]
pub struct GlobalArgs {
    /// TOML configuration file
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub p: Option<u64>,
    /// The real quadratic field is Q(sqrt D)
    #[arg(long = "D", global = true)]
    pub d: Option<i64>,
    /// Hilbert weight r1,r2,t1,t2
    #[arg(long, global = true)]
    pub weight: Option<String>,
    #[arg(long, global = true)]
    pub j: Option<i64>,
    /// Matrix modulus exponent
    #[arg(long = "N", global = true)]
    pub n: Option<u32>,
    /// Matrix window (overrides R(N))
    #[arg(long, global = true)]
    pub trunc: Option<usize>,
    /// Eigenvalue table (CSV or JSON)
    #[arg(long, global = true)]
    pub table: Option<PathBuf>,
    #[arg(long, global = true)]
    pub cache: Option<PathBuf>,
    /// Assumed tail bound v,start: v(b_n) >= v for n > start
    #[arg(long = "tail-bound", global = true)]
    pub tail_bound: Option<String>,
    #[arg(long, value_enum, global = true, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Format {
    #[default]
    Json,
    Text,
}

fn parse_ints(s: &str, n: usize, what: &str) -> Result<Vec<i64>, ConfigError> {
    let v: Result<Vec<i64>, _> = s.split(',').map(|x| x.trim().parse::<i64>()).collect();
    match v {
        Ok(v) if v.len() == n => Ok(v),
        _ => bad(format!("{what} expects {n} comma-separated integers, got {s:?}")),
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError(format!("config file: {e}")))
    }

    fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Defaults, then the config file, then flags; validated.
    pub fn resolve(args: &GlobalArgs) -> Result<Self, ConfigError> {
        let mut c = match &args.config {
            Some(path) => Self::load(path)?,
            None => Self::default(),
        };
        if let Some(p) = args.p {
            c.p = p;
        }
        if let Some(d) = args.d {
            c.d = d;
        }
        if let Some(w) = &args.weight {
            let v = parse_ints(w, 4, "--weight")?;
            c.weight = [v[0], v[1], v[2], v[3]];
        }
        if let Some(j) = args.j {
            c.j = j;
        }
        if let Some(n) = args.n {
            c.n_matrix = n;
        }
        if args.trunc.is_some() {
            c.trunc = args.trunc;
        }
        if args.table.is_some() {
            c.table = args.table.clone();
        }
        if args.cache.is_some() {
            c.cache = args.cache.clone();
        }
        if let Some(t) = &args.tail_bound {
            let v = parse_ints(t, 2, "--tail-bound")?;
            if v[1] < 1 {
                return bad("tail start must be positive");
            }
            c.tail = TailConfig::Conjecture { bound: v[0], start: v[1] as usize };
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.p < 3 || !(2..self.p).take_while(|d| d * d <= self.p).all(|d| self.p % d != 0) {
            return bad(format!("p = {} must be an odd prime", self.p));
        }
        QuadField::new(self.d).map_err(|e| ConfigError(format!("D = {}: {e}", self.d)))?;
        let w = self.weight_tuple()?;
        let (k1, k2) = (w.r1 - 2, w.r2 - 2);
        if k1 < 0 || k2 < 0 {
            return bad(format!("weight {w} needs r1, r2 >= 2"));
        }
        if self.j < 0 || self.j > k1.min(k2) {
            return bad(format!("j = {} must lie in [0, {}]", self.j, k1.min(k2)));
        }
        if !(6..=80).contains(&self.n_matrix) {
            return bad(format!("N = {} outside the supported range 6..=80", self.n_matrix));
        }
        if self.trunc == Some(0) || self.coeffs == 0 {
            return bad("truncations must be positive");
        }
        Ok(())
    }

    pub fn weight_tuple(&self) -> Result<Weight, ConfigError> {
        let [r1, r2, t1, t2] = self.weight;
        Weight::new(r1, r2, t1, t2).map_err(|e| ConfigError(e.to_string()))
    }

    /// `(k1, k2)` with `k_i = r_i - 2`.
    pub fn ks(&self) -> (i64, i64) {
        (self.weight[0] - 2, self.weight[1] - 2)
    }

    /// Weight minus two of the elliptic forms on the diagonal.
    pub fn functional_k(&self) -> u32 {
        let (k1, k2) = self.ks();
        (k1 + k2 - 2 * self.j) as u32
    }

    /// The config as it bears on results: the cache location is left out.
    pub fn fingerprint(&self) -> PipelineConfig {
        PipelineConfig { cache: None, ..self.clone() }
    }
}
