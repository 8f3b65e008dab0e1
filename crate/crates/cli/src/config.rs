//! Run configuration, input loading and the exit-code mapping.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use kobalab_core::domain::{ConvexDomain, DomainKind};
use kobalab_core::metric::MetricConfig;
use kobalab_core::{CVector, Domain, KobaError};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// The `--config` record. Command-line flags override its fields.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub metric: MetricConfig,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    /// Ray comparison horizons for `verify-extension`.
    pub horizons: Option<Vec<f64>>,
    /// Sample pairs for the `gallery cayley` isometry check.
    pub isometry_samples: Option<usize>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, Failure> {
        let mut cfg = match path {
            Some(p) => read_json::<RunConfig>(p, "config")?,
            None => RunConfig::default(),
        };
        cfg.metric.validate().map_err(Failure::from)?;
        cfg.metric.seed = cfg.seed;
        Ok(cfg)
    }
}

/// Why a run stopped, carrying its exit code.
#[derive(Debug)]
pub enum Failure {
    /// Exit 1: the run finished and a checked property failed.
    Assertion(String),
    /// Exit 2: unreadable or malformed input.
    Input(String),
    /// Exit 3: a solver or classifier did not settle.
    NonConvergence(String),
    /// Exit 4: well-formed input violating an operation's precondition.
    Precondition(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Assertion(_) => 1,
            Failure::Input(_) => 2,
            Failure::NonConvergence(_) => 3,
            Failure::Precondition(_) => 4,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Assertion(m) => write!(f, "assertion failed: {m}"),
            Failure::Input(m) => write!(f, "input error: {m}"),
            Failure::NonConvergence(m) => write!(f, "did not converge: {m}"),
            Failure::Precondition(m) => write!(f, "precondition: {m}"),
        }
    }
}

impl From<KobaError> for Failure {
    fn from(e: KobaError) -> Self {
        let msg = e.to_string();
        if e.is_input_error() {
            return Failure::Input(msg);
        }
        match e.root() {
            KobaError::Precondition(_)
            | KobaError::DegenerateMetric
            | KobaError::EscapedDomain { .. } => Failure::Precondition(msg),
            KobaError::StartDependence(_) => Failure::Assertion(msg),
            _ => Failure::NonConvergence(msg),
        }
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path, what: &str) -> Result<T, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("cannot read {what} {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::Input(format!("malformed {what} {}: {e}", path.display())))
}

/// A JSON domain file, or `kind:dim` for a catalog domain such as `ball:2`.
pub fn load_domain(arg: Option<&str>) -> Result<Domain, Failure> {
    let arg = arg.ok_or_else(|| Failure::Input("--domain is required".into()))?;
    let path = Path::new(arg);
    if path.exists() {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::Input(format!("cannot read domain {arg}: {e}")))?;
        return ConvexDomain::from_json(&text).map_err(Failure::from);
    }
    let (kind, dim) = arg
        .split_once(':')
        .ok_or_else(|| Failure::Input(format!("no domain file {arg} (or use kind:dim)")))?;
    let dim: usize = dim
        .parse()
        .map_err(|_| Failure::Input(format!("bad dimension in {arg}")))?;
    let kind = match kind {
        "ball" => DomainKind::Ball,
        "polydisc" => DomainKind::Polydisc,
        "left_half_spaces" => DomainKind::LeftHalfSpaces,
        "siegel" => DomainKind::Siegel,
        "product_with_plane" => DomainKind::ProductWithPlane,
        _ => return Err(Failure::Input(format!("unknown catalog kind in {arg}"))),
    };
    ConvexDomain::catalog(kind, dim).map_err(Failure::from)
}

/// A point as JSON `[[re, im], ...]`.
pub fn parse_point(arg: &str, what: &str) -> Result<CVector, Failure> {
    serde_json::from_str(arg).map_err(|e| Failure::Input(format!("bad {what} {arg:?}: {e}")))
}
