//! Declarative run configuration: TOML in, canonical hash out.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

use crate::bath::{DosFamily, DosSpec};
use crate::cli::CliError;

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    FreeSpin,
    Ising,
    MeanField,
    Nbl,
    Nrg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CachePolicy {
    #[default]
    ReadWrite,
    Off,
    /// Recompute and overwrite any cached artifacts.
    Refresh,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DosConfig {
    pub family: String,
    #[serde(default = "default_halfwidth")]
    pub halfwidth: f64,
    /// Optional exponent; must match the family's canonical value.
    pub r: Option<f64>,
    /// Two-column table path for the tabulated family.
    pub table: Option<PathBuf>,
}

fn default_halfwidth() -> f64 {
    1.0
}

impl DosConfig {
    pub fn build(&self, base: &Path) -> Result<DosSpec, CliError> {
        let spec = match self.family.as_str() {
            "flat" => DosSpec::flat(self.halfwidth),
            "nanowire" => DosSpec::nanowire(self.halfwidth),
            "gaussian" => DosSpec::gaussian(self.halfwidth),
            "graphene" => DosSpec::graphene(self.halfwidth),
            "tbg" => DosSpec::tbg(self.halfwidth),
            "tabulated" => {
                let rel = self.table.as_ref().ok_or_else(|| {
                    CliError::Config("tabulated DoS needs a table path".into())
                })?;
                let path = if rel.is_absolute() {
                    rel.clone()
                } else {
                    base.join(rel)
                };
                DosSpec::tabulated_from_path(&path, self.halfwidth)
                    .map_err(|e| CliError::Config(format!("table: {e}")))?
            }
            other => {
                return Err(CliError::Config(format!(
                    "unknown DoS family '{other}' (flat|nanowire|gaussian|graphene|tbg|tabulated)"
                )))
            }
        };
        if let Some(r) = self.r {
            match spec.exponent() {
                Some(canon) if (canon - r).abs() < 1e-12 => {}
                Some(canon) => {
                    return Err(CliError::Config(format!(
                        "exponent r={r} conflicts with {}'s canonical r={canon}",
                        self.family
                    )))
                }
                None => {
                    return Err(CliError::Config(format!(
                        "family '{}' takes no exponent",
                        self.family
                    )))
                }
            }
        }
        Ok(spec)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CouplingsConfig {
    /// Isotropic exchange (Kondo/NBL models).
    pub j: Option<f64>,
    /// Ising coupling (ising/meanfield models); `j` is accepted too.
    pub jz: Option<f64>,
    /// Field list; must be non-empty.
    pub fields: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TemperatureConfig {
    pub min: f64,
    pub max: f64,
    #[serde(default = "default_points")]
    pub points: usize,
}

fn default_points() -> usize {
    80
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SolverConfig {
    pub lambda: Option<f64>,
    pub n_keep: Option<usize>,
    pub beta_bar: Option<f64>,
    /// Wilson chain length; derived from the temperature floor if absent.
    pub n_chain: Option<usize>,
    /// Mean-field fixed-point tolerance.
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub track_rdm: bool,
    pub interleave: Option<bool>,
    /// `desk` (default) or `paper` (Lambda = 2, 3000 kept states).
    pub preset: Option<String>,
    /// Derivative smoothing: "auto" or "never" (default).
    pub smoothing: Option<String>,
    /// Worker threads; 0 or absent = machine parallelism.
    pub threads: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub model: Model,
    pub dos: DosConfig,
    pub couplings: CouplingsConfig,
    pub temperature: TemperatureConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub cache: CachePolicy,
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let config: RunConfig = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.couplings.fields.is_empty() {
            return Err(CliError::Config("field list must not be empty".into()));
        }
        if !(self.temperature.min > 0.0) || self.temperature.max <= self.temperature.min {
            return Err(CliError::Config(format!(
                "temperature grid must satisfy 0 < min < max, got [{}, {}]",
                self.temperature.min, self.temperature.max
            )));
        }
        if self.temperature.points < 5 {
            return Err(CliError::Config(
                "temperature grid needs at least 5 points".into(),
            ));
        }
        match self.model {
            Model::Ising | Model::MeanField => {
                if self.coupling().is_none() {
                    return Err(CliError::Config("ising models need jz (or j)".into()));
                }
            }
            Model::Nbl | Model::Nrg => {
                if self.coupling().is_none() {
                    return Err(CliError::Config("exchange models need j".into()));
                }
            }
            Model::FreeSpin => {}
        }
        Ok(())
    }

    pub fn coupling(&self) -> Option<f64> {
        self.couplings.j.or(self.couplings.jz)
    }

    pub fn temperature_grid(&self) -> Vec<f64> {
        let n = self.temperature.points;
        let (lo, hi) = (self.temperature.min.ln(), self.temperature.max.ln());
        // descending, matching curve order
        (0..n)
            .map(|i| (hi - (hi - lo) * i as f64 / (n - 1) as f64).exp())
            .collect()
    }

    /// Canonical hash: config serialized to JSON (sorted keys) plus the
    /// toolkit version. Stable under TOML field reordering.
    pub fn canonical_hash(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        let canonical = serde_json::to_string(&value).expect("canonical json");
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        hasher.update(TOOLKIT_VERSION.as_bytes());
        let digest = hasher.finalize();
        digest[..16].iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Per-point cache key.
    pub fn point_key(&self, b: f64) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.canonical_hash().as_bytes());
        hasher.update(b.to_le_bytes());
        let digest = hasher.finalize();
        digest[..16].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// The record of one executed sweep, written as `manifest.json`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: u32,
    pub config_hash: String,
    pub toolkit_version: String,
    pub model: Model,
    pub dos: String,
    /// Flag recorded when the graphene family is in play: the linear
    /// pseudogap stands in for the full lattice DoS.
    pub approximations: Vec<String>,
    pub coupling: Option<f64>,
    pub curves: Vec<CurveRecord>,
    pub failures: Vec<PointFailure>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CurveRecord {
    pub b: f64,
    pub path: String,
    pub wall_ms: u128,
    pub cache_hit: bool,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PointFailure {
    pub b: f64,
    pub error: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
model = "freespin"
output_dir = "out"

[dos]
family = "flat"
halfwidth = 1.0

[couplings]
fields = [0.01, 0.1]

[temperature]
min = 1e-4
max = 1.0
points = 50
"#;

    #[test]
    fn parse_and_hash_stability() {
        let a: RunConfig = toml::from_str(SAMPLE).unwrap();
        a.validate().unwrap();
        // reorder sections: same hash
        let reordered = r#"
output_dir = "out"
model = "freespin"

[temperature]
max = 1.0
min = 1e-4
points = 50

[couplings]
fields = [0.01, 0.1]

[dos]
halfwidth = 1.0
family = "flat"
"#;
        let b: RunConfig = toml::from_str(reordered).unwrap();
        assert_eq!(a.canonical_hash(), b.canonical_hash());
        // a changed field changes the hash
        let mut c = a.clone();
        c.couplings.fields = vec![0.01, 0.2];
        assert_ne!(a.canonical_hash(), c.canonical_hash());
    }

    #[test]
    fn empty_field_list_rejected() {
        let bad = SAMPLE.replace("fields = [0.01, 0.1]", "fields = []");
        let cfg: RunConfig = toml::from_str(&bad).unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn dos_family_validation() {
        let base = Path::new(".");
        let ok = DosConfig {
            family: "graphene".into(),
            halfwidth: 1.0,
            r: Some(1.0),
            table: None,
        };
        assert!(ok.build(base).is_ok());
        let bad_r = DosConfig {
            family: "graphene".into(),
            halfwidth: 1.0,
            r: Some(0.5),
            table: None,
        };
        assert!(bad_r.build(base).is_err());
        let unknown = DosConfig {
            family: "cubic".into(),
            halfwidth: 1.0,
            r: None,
            table: None,
        };
        assert!(unknown.build(base).is_err());
    }
}
