//! Run configuration: defaults, then a `key = value` file, then flags.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use covberry::berry::DEFAULT_STEPS;
use covberry::{HbarConvention, OmegaConvention, QuadConfig, StateIndex};
use serde::Serialize;

pub const MIN_NODES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Pretty,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "pretty" => Ok(Self::Pretty),
            other => Err(format!("unknown format `{other}` (expected csv, json or pretty)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MethodChoice {
    Closed,
    Connection,
    Overlap,
}

impl FromStr for MethodChoice {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "closed" => Ok(Self::Closed),
            "connection" => Ok(Self::Connection),
            "overlap" => Ok(Self::Overlap),
            other => Err(format!("unknown method `{other}` (expected closed, connection or overlap)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StateSelection {
    All,
    List(Vec<StateIndex>),
}

impl StateSelection {
    pub fn contains(&self, j: StateIndex) -> bool {
        match self {
            Self::All => true,
            Self::List(v) => v.contains(&j),
        }
    }
}

impl FromStr for StateSelection {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s.trim() == "all" {
            return Ok(Self::All);
        }
        s.split(',')
            .map(|t| t.trim().parse::<StateIndex>().map_err(|e| e.to_string()))
            .collect::<Result<Vec<_>, _>>()
            .map(Self::List)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    /// Overrides the per-row frequencies when set.
    pub omega_mhz: Option<f64>,
    pub dimensionless: bool,
    pub nodes: QuadConfig,
    pub steps: usize,
    pub radius: Option<f64>,
    pub backwards: bool,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub omega_convention: OmegaConvention,
    pub hbar_convention: HbarConvention,
    pub states: StateSelection,
    pub method: MethodChoice,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            omega_mhz: None,
            dimensionless: false,
            nodes: QuadConfig::default(),
            steps: DEFAULT_STEPS,
            radius: None,
            backwards: false,
            format: Format::Pretty,
            out: None,
            omega_convention: OmegaConvention::Angular,
            hbar_convention: HbarConvention::Hbar,
            states: StateSelection::All,
            method: MethodChoice::Closed,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| ConfigError(format!("invalid value `{value}` for `{key}`: {e}")))
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("line {}: expected `key = value`", n + 1)))?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "omega" => self.omega_mhz = Some(parse(key, value)?),
            "dimensionless" => self.dimensionless = parse(key, value)?,
            "nodes" => self.nodes = QuadConfig::uniform(parse(key, value)?),
            "radial_nodes" => self.nodes.radial = parse(key, value)?,
            "polar_nodes" => self.nodes.polar = parse(key, value)?,
            "azimuthal_nodes" => self.nodes.azimuthal = parse(key, value)?,
            "rapidity_nodes" => self.nodes.rapidity = parse(key, value)?,
            "steps" => self.steps = parse(key, value)?,
            "radius" => self.radius = Some(parse(key, value)?),
            "backwards" => self.backwards = parse(key, value)?,
            "format" => self.format = parse(key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            "omega_convention" => self.omega_convention = parse(key, value)?,
            "hbar_convention" => self.hbar_convention = parse(key, value)?,
            "states" => self.states = parse(key, value)?,
            "method" => self.method = parse(key, value)?,
            other => return Err(ConfigError(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    pub fn check(&self) -> Result<(), ConfigError> {
        let n = &self.nodes;
        if [n.radial, n.polar, n.azimuthal, n.rapidity].iter().any(|&k| k < MIN_NODES) {
            return Err(ConfigError(format!("node counts must be at least {MIN_NODES}")));
        }
        if let Some(w) = self.omega_mhz {
            if !w.is_finite() || w <= 0.0 {
                return Err(ConfigError(format!("omega must be positive, got {w}")));
            }
        }
        if let Some(r) = self.radius {
            if !r.is_finite() || r <= 0.0 {
                return Err(ConfigError(format!("radius must be positive, got {r}")));
            }
        }
        if self.steps < 8 {
            return Err(ConfigError(format!("steps must be at least 8, got {}", self.steps)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_keys_and_comments() {
        let mut c = RunConfig::default();
        c.apply_text("# run\nnodes = 64\npolar_nodes=32 # finer\nformat = csv\nstates = 1, 9\nomega_convention = cyclic\n")
            .unwrap();
        assert_eq!(c.nodes.radial, 64);
        assert_eq!(c.nodes.polar, 32);
        assert_eq!(c.format, Format::Csv);
        assert_eq!(c.omega_convention, OmegaConvention::Cyclic);
        assert!(c.states.contains(StateIndex::new(9).unwrap()));
        assert!(!c.states.contains(StateIndex::new(2).unwrap()));
    }

    #[test]
    fn rejects_bad_input() {
        let mut c = RunConfig::default();
        assert!(c.apply_text("colour = red").is_err());
        assert!(c.apply_text("nodes").is_err());
        assert!(c.apply_text("states = 17").is_err());
        c.apply_text("nodes = 8").unwrap();
        assert!(c.check().is_err());
    }
}
