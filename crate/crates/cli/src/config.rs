//! Experiment configuration: flat `key = value` files overridden by flags.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::Args;
use fpp_core::{DistributionSpec, FppError, FppParams, Quantity};
use serde::{Deserialize, Serialize};

/// Errors surfaced by the front-end, each with its exit status.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad flags, config or input files.
    Usage(String),
    /// A window exceeded the allocation limit.
    Capacity(String),
    /// An exact check failed.
    Verification(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            Self::Capacity(_) => 3,
            Self::Verification(_) => 4,
            Self::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Usage(m) | Self::Capacity(m) | Self::Verification(m) | Self::Io(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<FppError> for CliError {
    fn from(e: FppError) -> Self {
        match e {
            FppError::Capacity { .. } => Self::Capacity(e.to_string()),
            other => Self::Usage(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Every experiment setting; flags and file keys share these names.
#[derive(Args, Clone, Debug, Default, PartialEq)]
pub struct ConfigArgs {
    /// Flat `key = value` config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Lattice dimension d.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Comma-separated list of n.
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<u64>>,
    /// a0n, b0n, s0n, dd or dd_tau.
    #[arg(long)]
    pub quantity: Option<String>,
    /// Weight distribution, e.g. `exponential:rate=1`.
    #[arg(long)]
    pub dist: Option<String>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// The slow-edge level M.
    #[arg(long = "m", visible_alias = "m-level")]
    pub m_level: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Box half-width is ceil(c (ln n)^(1+delta)); default c = 3^d M.
    #[arg(long)]
    pub box_scale: Option<f64>,
    /// Transverse half-width for cylinder windows; default 4n.
    #[arg(long)]
    pub transverse: Option<i64>,
    /// Window margin as a multiple of n.
    #[arg(long)]
    pub padding: Option<f64>,
    /// Configurations per n.
    #[arg(long)]
    pub replicas: Option<usize>,
    /// Inner replicas R for conditional means.
    #[arg(long)]
    pub inner_replicas: Option<usize>,
    /// Largest ball level for the martingale (default k* of each base + 2).
    #[arg(long)]
    pub k_max: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Highest moment order is 2 * moments.
    #[arg(long)]
    pub moments: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

const KEYS: &[&str] = &[
    "dim",
    "n",
    "quantity",
    "dist",
    "epsilon",
    "m",
    "delta",
    "box_scale",
    "transverse",
    "padding",
    "replicas",
    "inner_replicas",
    "k_max",
    "seed",
    "threads",
    "moments",
    "out",
];

fn parse_value<T: std::str::FromStr>(key: &str, value: &str, line: usize) -> CliResult<T>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| CliError::Usage(format!("line {line}: invalid value '{value}' for '{key}': {e}")))
}

impl ConfigArgs {
    /// Parses the flat `key = value` format. `#` starts a comment.
    pub fn parse_file_text(text: &str) -> CliResult<(Self, Option<usize>)> {
        let mut out = Self::default();
        let mut threads = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("line {line_no}: expected 'key = value', got '{line}'")))?;
            let key = key.trim().to_ascii_lowercase().replace('-', "_");
            let key = if key == "m_level" { "m".to_string() } else { key };
            let value = value.trim();
            match key.as_str() {
                "dim" => out.dim = Some(parse_value(&key, value, line_no)?),
                "n" => {
                    out.n = Some(
                        value
                            .split(',')
                            .map(|s| parse_value(&key, s.trim(), line_no))
                            .collect::<CliResult<Vec<u64>>>()?,
                    )
                }
                "quantity" => out.quantity = Some(value.to_string()),
                "dist" => out.dist = Some(value.to_string()),
                "epsilon" => out.epsilon = Some(parse_value(&key, value, line_no)?),
                "m" => out.m_level = Some(parse_value(&key, value, line_no)?),
                "delta" => out.delta = Some(parse_value(&key, value, line_no)?),
                "box_scale" => out.box_scale = Some(parse_value(&key, value, line_no)?),
                "transverse" => out.transverse = Some(parse_value(&key, value, line_no)?),
                "padding" => out.padding = Some(parse_value(&key, value, line_no)?),
                "replicas" => out.replicas = Some(parse_value(&key, value, line_no)?),
                "inner_replicas" => out.inner_replicas = Some(parse_value(&key, value, line_no)?),
                "k_max" => out.k_max = Some(parse_value(&key, value, line_no)?),
                "seed" => out.seed = Some(parse_value(&key, value, line_no)?),
                "moments" => out.moments = Some(parse_value(&key, value, line_no)?),
                "out" => out.out = Some(PathBuf::from(value)),
                "threads" => threads = Some(parse_value(&key, value, line_no)?),
                _ => {
                    return Err(CliError::Usage(format!(
                        "line {line_no}: unknown key '{key}' (known: {})",
                        KEYS.join(", ")
                    )))
                }
            }
        }
        Ok((out, threads))
    }

    /// `self` wins over `base` field by field.
    pub fn over(self, base: Self) -> Self {
        Self {
            config: self.config.or(base.config),
            dim: self.dim.or(base.dim),
            n: self.n.or(base.n),
            quantity: self.quantity.or(base.quantity),
            dist: self.dist.or(base.dist),
            epsilon: self.epsilon.or(base.epsilon),
            m_level: self.m_level.or(base.m_level),
            delta: self.delta.or(base.delta),
            box_scale: self.box_scale.or(base.box_scale),
            transverse: self.transverse.or(base.transverse),
            padding: self.padding.or(base.padding),
            replicas: self.replicas.or(base.replicas),
            inner_replicas: self.inner_replicas.or(base.inner_replicas),
            k_max: self.k_max.or(base.k_max),
            seed: self.seed.or(base.seed),
            moments: self.moments.or(base.moments),
            out: self.out.or(base.out),
        }
    }

    /// Reads the config file (if any), applies flags over it, validates.
    pub fn resolve(self, threads: Option<usize>) -> CliResult<ExperimentConfig> {
        let (merged, file_threads) = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
                let (file, t) = Self::parse_file_text(&text)
                    .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
                (self.over(file), t)
            }
            None => (self, None),
        };
        ExperimentConfig::from_args(merged, threads.or(file_threads))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dim: usize,
    pub n: Vec<u64>,
    pub quantity: Quantity,
    pub dist: DistributionSpec,
    pub epsilon: f64,
    pub m_level: f64,
    pub delta: f64,
    pub box_scale: Option<f64>,
    pub transverse: Option<i64>,
    pub padding: f64,
    pub replicas: usize,
    pub inner_replicas: usize,
    pub k_max: Option<u64>,
    pub seed: u64,
    pub threads: Option<usize>,
    pub moments: usize,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let p = FppParams::default();
        Self {
            dim: p.dim,
            n: vec![16, 32, 64],
            quantity: Quantity::A0n,
            dist: DistributionSpec::Exponential { rate: 1.0 },
            epsilon: p.epsilon,
            m_level: p.m_level,
            delta: p.delta,
            box_scale: p.box_scale,
            transverse: p.transverse,
            padding: p.padding,
            replicas: 100,
            inner_replicas: 64,
            k_max: None,
            seed: 1,
            threads: None,
            moments: 3,
            out: PathBuf::from("fpp-out"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_args(a: ConfigArgs, threads: Option<usize>) -> CliResult<Self> {
        let d = Self::default();
        let quantity = match a.quantity {
            Some(q) => q.parse::<Quantity>()?,
            None => d.quantity,
        };
        let dist = match a.dist {
            Some(s) => s.parse::<DistributionSpec>()?,
            None => d.dist,
        };
        let cfg = Self {
            dim: a.dim.unwrap_or(d.dim),
            n: a.n.unwrap_or(d.n),
            quantity,
            dist,
            epsilon: a.epsilon.unwrap_or(d.epsilon),
            m_level: a.m_level.unwrap_or(d.m_level),
            delta: a.delta.unwrap_or(d.delta),
            box_scale: a.box_scale.or(d.box_scale),
            transverse: a.transverse.or(d.transverse),
            padding: a.padding.unwrap_or(d.padding),
            replicas: a.replicas.unwrap_or(d.replicas),
            inner_replicas: a.inner_replicas.unwrap_or(d.inner_replicas),
            k_max: a.k_max.or(d.k_max),
            seed: a.seed.unwrap_or(d.seed),
            threads,
            moments: a.moments.unwrap_or(d.moments),
            out: a.out.unwrap_or(d.out),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        self.params().validate()?;
        self.dist.validate()?;
        if self.n.is_empty() {
            return Err(CliError::Usage("n: give at least one value, e.g. --n 16,32".into()));
        }
        if let Some(&n) = self.n.iter().find(|&&n| n < 2) {
            return Err(CliError::Usage(format!("n: every value must be at least 2, got {n}")));
        }
        if self.replicas < 1 {
            return Err(CliError::Usage("replicas: must be at least 1".into()));
        }
        if self.inner_replicas < 2 {
            return Err(CliError::Usage("inner_replicas: must be at least 2".into()));
        }
        if self.moments < 1 {
            return Err(CliError::Usage("moments: must be at least 1".into()));
        }
        if self.threads == Some(0) {
            return Err(CliError::Usage("threads: must be at least 1".into()));
        }
        Ok(())
    }

    pub fn params(&self) -> FppParams {
        FppParams {
            dim: self.dim,
            epsilon: self.epsilon,
            m_level: self.m_level,
            delta: self.delta,
            box_scale: self.box_scale,
            transverse: self.transverse,
            padding: self.padding,
        }
    }

    /// The config as `key = value` text that [`ConfigArgs::parse_file_text`] reads back.
    pub fn to_file_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| s.push_str(&format!("{k} = {v}\n"));
        put("dim", self.dim.to_string());
        put("n", self.n.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(","));
        put("quantity", self.quantity.to_string());
        put("dist", self.dist.to_string());
        put("epsilon", self.epsilon.to_string());
        put("m", self.m_level.to_string());
        put("delta", self.delta.to_string());
        if let Some(c) = self.box_scale {
            put("box_scale", c.to_string());
        }
        if let Some(w) = self.transverse {
            put("transverse", w.to_string());
        }
        put("padding", self.padding.to_string());
        put("replicas", self.replicas.to_string());
        put("inner_replicas", self.inner_replicas.to_string());
        if let Some(k) = self.k_max {
            put("k_max", k.to_string());
        }
        put("seed", self.seed.to_string());
        put("moments", self.moments.to_string());
        put("out", self.out.display().to_string());
        s
    }
}

/// Creates the output directory.
pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_files() {
        let text = "# sweep\nn = 8, 16\ndist = bernoulli:a=0,b=1,p=0.2\nM = 2.5\nreplicas=10 # inline\nthreads = 3\n";
        let (a, t) = ConfigArgs::parse_file_text(text).unwrap();
        assert_eq!(a.n, Some(vec![8, 16]));
        assert_eq!(a.m_level, Some(2.5));
        assert_eq!(a.replicas, Some(10));
        assert_eq!(t, Some(3));
        let cfg = ExperimentConfig::from_args(a, t).unwrap();
        assert_eq!(cfg.dist, DistributionSpec::Bernoulli { a: 0.0, b: 1.0, p: 0.2 });
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(matches!(ConfigArgs::parse_file_text("colour = red"), Err(CliError::Usage(_))));
        assert!(matches!(ConfigArgs::parse_file_text("n = many"), Err(CliError::Usage(_))));
        assert!(matches!(ConfigArgs::parse_file_text("just text"), Err(CliError::Usage(_))));
    }

    #[test]
    fn flags_override_file() {
        let (file, _) = ConfigArgs::parse_file_text("seed = 3\nreplicas = 5").unwrap();
        let flags = ConfigArgs {
            seed: Some(9),
            ..Default::default()
        };
        let cfg = ExperimentConfig::from_args(flags.over(file), None).unwrap();
        assert_eq!((cfg.seed, cfg.replicas), (9, 5));
    }

    #[test]
    fn validation_messages() {
        let bad = |a: ConfigArgs| ExperimentConfig::from_args(a, None).unwrap_err();
        let e = bad(ConfigArgs { epsilon: Some(5.0), ..Default::default() });
        assert!(e.to_string().contains("epsilon"));
        let e = bad(ConfigArgs { dist: Some("pareto:alpha=0.9,scale=1".into()), ..Default::default() });
        assert_eq!(e.exit_code(), 2);
        let e = bad(ConfigArgs { n: Some(vec![]), ..Default::default() });
        assert!(e.to_string().contains("n:"));
        assert!(ExperimentConfig::from_args(ConfigArgs::default(), Some(0)).is_err());
    }

    #[test]
    fn file_text_round_trips() {
        let cfg = ExperimentConfig {
            box_scale: Some(1.0),
            k_max: Some(4),
            ..Default::default()
        };
        let (a, _) = ConfigArgs::parse_file_text(&cfg.to_file_text()).unwrap();
        assert_eq!(ExperimentConfig::from_args(a, None).unwrap(), cfg);
    }
}
