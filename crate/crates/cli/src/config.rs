//! Flags, `key=value` config files and their resolution into a `RunConfig`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use extsource_core::mop::FiniteSizeParams;
use extsource_core::{Edge, Precision};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "extsource", version, about = "Three-cut Gaussian random matrix model with an external source")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Discriminants and phase.
    Phase,
    /// Branch points, critical points and edge constants.
    Support,
    /// Limiting density samples and interval masses.
    Density,
    /// Monte Carlo eigenvalues and histogram comparison.
    Sample,
    /// Finite-n correlation kernel on a grid.
    Kernel,
    /// Scaling-limit comparisons against the sine and Airy kernels.
    Limits,
    /// All residual suites.
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Phase => "phase",
            Command::Support => "support",
            Command::Density => "density",
            Command::Sample => "sample",
            Command::Kernel => "kernel",
            Command::Limits => "limits",
            Command::Verify => "verify",
        }
    }
}

#[derive(Debug, Default, Clone, Args)]
pub struct Flags {
    /// Source spacing; the source has eigenvalues a, 0, -a.
    #[arg(long, global = true)]
    pub a: Option<f64>,
    /// Fraction of zero source eigenvalues.
    #[arg(long, global = true)]
    pub t: Option<f64>,
    /// Matrix size.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Explicit block sizes; all three or none.
    #[arg(long, global = true)]
    pub n1: Option<usize>,
    #[arg(long, global = true)]
    pub n2: Option<usize>,
    #[arg(long, global = true)]
    pub n3: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub draws: Option<usize>,
    /// Histogram bin width.
    #[arg(long, global = true)]
    pub bins: Option<f64>,
    /// Comma-separated points: x values for density and kernel, scaled
    /// offsets for limits.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub grid: Option<String>,
    /// Comma-separated sizes for limits.
    #[arg(long, global = true)]
    pub sizes: Option<String>,
    /// Edge for limits: z1, z2, z3, -z1, -z2 or -z3.
    #[arg(long, global = true)]
    pub edge: Option<String>,
    /// Number of density samples when no grid is given.
    #[arg(long, global = true)]
    pub points: Option<usize>,
    /// Moment solve arithmetic: auto, double or extended.
    #[arg(long, global = true)]
    pub precision: Option<String>,
    /// Worker thread cap.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Directory for JSON and CSV artifacts; JSON goes to stdout otherwise.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub no_timestamp: bool,
    /// `key=value` file with defaults for any of the flags above.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<extsource_core::Error> for ConfigError {
    fn from(e: extsource_core::Error) -> Self {
        ConfigError(e.to_string())
    }
}

/// Fully resolved run parameters; embedded in every JSON artifact.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub a: f64,
    pub t: f64,
    pub n: usize,
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
    pub seed: u64,
    pub draws: usize,
    pub bin_width: f64,
    pub grid: Option<Vec<f64>>,
    pub sizes: Vec<usize>,
    pub edge: Option<Edge>,
    pub points: usize,
    pub precision: Precision,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub timestamp: bool,
}

impl RunConfig {
    pub fn finite_size(&self) -> Result<FiniteSizeParams, ConfigError> {
        Ok(FiniteSizeParams::new(self.a, self.n1, self.n2, self.n3)?)
    }
}

const KEYS: [&str; 17] = [
    "a", "t", "n", "n1", "n2", "n3", "seed", "draws", "bins", "grid", "sizes", "edge", "points", "precision", "threads",
    "out", "no-timestamp",
];

/// `key=value` lines; `#` starts a comment.
pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    parse_config_text(&text)
}

pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) =
            line.split_once('=').ok_or_else(|| ConfigError(format!("line {}: expected key=value", lineno + 1)))?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            return Err(ConfigError(format!("line {}: unknown key `{key}`", lineno + 1)));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

fn parse_value<T: FromStr>(key: &str, raw: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    raw.parse().map_err(|e| ConfigError(format!("invalid value `{raw}` for {key}: {e}")))
}

fn parse_list<T: FromStr>(key: &str, raw: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: fmt::Display,
{
    let items = raw.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| parse_value(key, s)).collect::<Result<Vec<_>, _>>()?;
    if items.is_empty() {
        return Err(ConfigError(format!("{key} needs at least one value")));
    }
    Ok(items)
}

/// Flags take precedence over the file, the file over defaults.
pub fn resolve(command: Command, flags: &Flags) -> Result<RunConfig, ConfigError> {
    let file = match &flags.config {
        Some(path) => read_config_file(path)?,
        None => BTreeMap::new(),
    };
    let pick = |key: &str, flag: Option<String>| flag.or_else(|| file.get(key).cloned());
    fn get<T: FromStr>(key: &str, raw: Option<String>, default: T) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        raw.map_or(Ok(default), |r| parse_value(key, &r))
    }
    let a: f64 = get("a", pick("a", flags.a.map(|v| v.to_string())), 2.0)?;
    let t: f64 = get("t", pick("t", flags.t.map(|v| v.to_string())), 0.5)?;
    let n: usize = get("n", pick("n", flags.n.map(|v| v.to_string())), 12)?;
    let blocks: Vec<Option<usize>> = [("n1", flags.n1), ("n2", flags.n2), ("n3", flags.n3)]
        .into_iter()
        .map(|(k, f)| pick(k, f.map(|v| v.to_string())).map(|r| parse_value(k, &r)).transpose())
        .collect::<Result<_, _>>()?;
    if !(a.is_finite() && a > 0.0) {
        return Err(ConfigError(format!("a = {a} must be positive")));
    }
    if !(t > 0.0 && t < 1.0) {
        return Err(ConfigError(format!("t = {t} must lie in (0, 1)")));
    }
    let split = match blocks.as_slice() {
        [None, None, None] => {
            let fp = FiniteSizeParams::from_t(a, t, n)?;
            [fp.n1, fp.n2, fp.n3]
        }
        [Some(n1), Some(n2), Some(n3)] => {
            let fp = FiniteSizeParams::new(a, *n1, *n2, *n3)?;
            if fp.n != n {
                return Err(ConfigError(format!("n1 + n2 + n3 = {} differs from n = {n}", fp.n)));
            }
            [*n1, *n2, *n3]
        }
        _ => return Err(ConfigError("give all of n1, n2, n3 or none".into())),
    };
    let precision = match pick("precision", flags.precision.clone()) {
        Some(raw) => raw.parse::<Precision>().map_err(ConfigError)?,
        None => Precision::Auto,
    };
    let edge = pick("edge", flags.edge.clone()).map(|raw| raw.parse::<Edge>().map_err(ConfigError)).transpose()?;
    let grid = pick("grid", flags.grid.clone()).map(|raw| parse_list::<f64>("grid", &raw)).transpose()?;
    let sizes = match pick("sizes", flags.sizes.clone()) {
        Some(raw) => parse_list::<usize>("sizes", &raw)?,
        None => vec![12, 24, 48],
    };
    let bin_width: f64 = get("bins", pick("bins", flags.bins.map(|v| v.to_string())), 0.1)?;
    if !(bin_width > 0.0) {
        return Err(ConfigError(format!("bin width {bin_width} must be positive")));
    }
    let threads: Option<usize> = pick("threads", flags.threads.map(|v| v.to_string())).map(|r| parse_value("threads", &r)).transpose()?;
    if threads == Some(0) {
        return Err(ConfigError("threads must be at least 1".into()));
    }
    let no_timestamp = flags.no_timestamp || file.get("no-timestamp").map(|v| parse_value::<bool>("no-timestamp", v)).transpose()?.unwrap_or(false);
    Ok(RunConfig {
        command,
        a,
        t,
        n,
        n1: split[0],
        n2: split[1],
        n3: split[2],
        seed: get("seed", pick("seed", flags.seed.map(|v| v.to_string())), 1)?,
        draws: get("draws", pick("draws", flags.draws.map(|v| v.to_string())), 100)?,
        bin_width,
        grid,
        sizes,
        edge,
        points: get("points", pick("points", flags.points.map(|v| v.to_string())), 101)?,
        precision,
        threads,
        out: flags.out.clone().or_else(|| file.get("out").map(PathBuf::from)),
        timestamp: !no_timestamp,
    })
}
