use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bandwidth::{settings_table, SettingParams};
use crate::error::{Error, Result};

/// The shipped paper-protocol configuration.
pub const PAPER_PROTOCOL: &str = include_str!("../../../../configs/paper.toml");

/// A full experiment: instances, schemes and the Monte-Carlo protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Iterations per replication.
    pub iterations: usize,
    pub replications: usize,
    /// Replication `i` uses seed `base_seed + i`.
    #[serde(default)]
    pub base_seed: u64,
    /// Trace decimation; the last iteration is always a multiple of it.
    #[serde(default = "one")]
    pub record_every: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Natural-residual tolerance for the reference solution.
    #[serde(default = "default_reference_tol")]
    pub reference_tol: f64,
    /// Sample count for the empirical constants reported next to the
    /// analytic ones. Zero skips the estimate.
    #[serde(default = "default_estimate_samples")]
    pub estimate_samples: usize,
    pub instance: InstanceSpec,
    pub schemes: Vec<SchemeSpec>,
}

fn one() -> usize {
    1
}

fn default_reference_tol() -> f64 {
    1e-9
}

fn default_estimate_samples() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InstanceSpec {
    Bandwidth {
        /// `"default"` or a path to a topology file.
        #[serde(default = "default_topology")]
        topology: String,
        /// Setting ids from the parameter table; empty means all twelve.
        #[serde(default)]
        settings: Vec<usize>,
        /// Field-by-field overrides of table settings.
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        overrides: Vec<SettingOverride>,
        #[serde(default, skip_serializing_if = "ConstantsOverride::is_empty")]
        constants: ConstantsOverride,
    },
    SyntheticAffine {
        dimension: usize,
        eta: f64,
        lipschitz: f64,
        nu: f64,
    },
}

fn default_topology() -> String {
    "default".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SettingOverride {
    pub id: usize,
    pub m_b: Option<f64>,
    pub m_c: Option<f64>,
    pub m_xi: Option<f64>,
    pub d_xi: Option<f64>,
}

/// Constants that replace the analytic values when set.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsOverride {
    pub eta: Option<f64>,
    pub lipschitz: Option<f64>,
    pub nu: Option<f64>,
    pub diameter: Option<f64>,
}

impl ConstantsOverride {
    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeSpec {
    pub name: String,
    #[serde(flatten)]
    pub policy: PolicySpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PolicySpec {
    /// `γ_k = θ/(k+1)` for every player.
    Harmonic { theta: f64 },
    /// Per-player adaptive rule. `c` defaults to
    /// `min(c_fraction · η/2, ν/(√2 D))`; `r` defaults to values evenly
    /// spaced on `[1, 1 + (η-2c)/L]`.
    Dasa {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        c: Option<f64>,
        #[serde(default = "default_c_fraction")]
        c_fraction: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        r: Option<Vec<f64>>,
    },
}

fn default_c_fraction() -> f64 {
    0.9
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn paper_protocol() -> Self {
        Self::from_toml(PAPER_PROTOCOL).expect("shipped config is valid")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.iterations == 0 || self.replications == 0 || self.record_every == 0 {
            return bad("iterations, replications and record_every must be >= 1".into());
        }
        if !self.iterations.is_multiple_of(self.record_every) {
            return bad("record_every must divide iterations".into());
        }
        if !(self.reference_tol > 0.0) {
            return bad("reference_tol must be positive".into());
        }
        if self.schemes.is_empty() {
            return bad("at least one scheme is required".into());
        }
        let mut names = BTreeSet::new();
        for s in &self.schemes {
            if !names.insert(s.name.as_str()) {
                return bad(format!("duplicate scheme name '{}'", s.name));
            }
            if s.name.is_empty() || s.name.contains(',') {
                return bad(format!("scheme name '{}' must be non-empty without commas", s.name));
            }
            match &s.policy {
                PolicySpec::Harmonic { theta } if !(*theta > 0.0) => {
                    return bad(format!("{}: theta must be positive", s.name));
                }
                PolicySpec::Dasa { c_fraction, .. } if !(*c_fraction > 0.0 && *c_fraction < 1.0) => {
                    return bad(format!("{}: c_fraction must lie in (0, 1)", s.name));
                }
                _ => {}
            }
        }
        if let InstanceSpec::Bandwidth { settings, overrides, .. } = &self.instance {
            for id in settings.iter().chain(overrides.iter().map(|o| &o.id)) {
                SettingParams::by_id(*id)?;
            }
        }
        Ok(())
    }

    /// Setting parameters to run, in order, with overrides applied.
    /// Synthetic instances have no settings.
    pub fn resolved_settings(&self) -> Result<Vec<SettingParams>> {
        let InstanceSpec::Bandwidth { settings, overrides, .. } = &self.instance else {
            return Ok(Vec::new());
        };
        let table = settings_table();
        let chosen: Vec<SettingParams> = if settings.is_empty() {
            table
        } else {
            settings.iter().map(|&id| SettingParams::by_id(id)).collect::<Result<_>>()?
        };
        chosen
            .into_iter()
            .map(|mut p| {
                for o in overrides.iter().filter(|o| o.id == p.id) {
                    p.m_b = o.m_b.unwrap_or(p.m_b);
                    p.m_c = o.m_c.unwrap_or(p.m_c);
                    p.m_xi = o.m_xi.unwrap_or(p.m_xi);
                    p.d_xi = o.d_xi.unwrap_or(p.d_xi);
                }
                p.validate()?;
                Ok(p)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_protocol_parses() {
        let cfg = ExperimentConfig::paper_protocol();
        assert_eq!((cfg.iterations, cfg.replications), (4000, 25));
        assert_eq!(cfg.schemes.len(), 4);
        assert_eq!(cfg.resolved_settings().unwrap().len(), 12);
    }

    #[test]
    fn toml_round_trip() {
        let cfg = ExperimentConfig::paper_protocol();
        assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn overrides_apply() {
        let cfg = ExperimentConfig::from_toml(
            r#"
            iterations = 10
            replications = 1
            [instance]
            kind = "bandwidth"
            settings = [3]
            overrides = [{ id = 3, m_b = 0.5 }]
            [[schemes]]
            name = "h"
            kind = "harmonic"
            theta = 1.0
            "#,
        )
        .unwrap();
        let p = cfg.resolved_settings().unwrap();
        assert_eq!((p[0].m_b, p[0].m_c), (0.5, 1.0));
    }

    #[test]
    fn rejects_bad_configs() {
        let base = "iterations = 10\nreplications = 1\n[instance]\nkind = \"bandwidth\"\n";
        let h = "[[schemes]]\nname = \"h\"\nkind = \"harmonic\"\ntheta = 1.0\n";
        for bad in [
            base.to_string(),
            format!("{base}{h}{h}"),
            format!("{base}settings = [13]\n{h}"),
            h.to_string(),
            format!("{}{h}", base.replace("10", "0")),
        ] {
            assert!(ExperimentConfig::from_toml(&bad).is_err(), "{bad}");
        }
    }
}
