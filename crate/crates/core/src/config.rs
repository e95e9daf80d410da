//! TOML run configuration with `QNLAB_SECTION__KEY` environment overrides.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{Diagnostics, EntropySettings, TestField};
use crate::equilibrium::{solver_registry, Equilibrium, PotentialParams};
use crate::error::{invalid, Error, Result};
use crate::fluid::{extend_divfree, flow_registry, FlowParams, LimitField, VelocityField};
use crate::kinetic::{shape_registry, Bump, FieldGrid, InitParams, Mode, Sampling, SimConfig};

/// Prefix of environment overrides: `QNLAB_SIMULATION__EPS=1e-3`.
pub const ENV_PREFIX: &str = "QNLAB_";

fn default_dt_factor() -> f64 {
    0.05
}
fn default_cfl() -> Option<f64> {
    Some(0.25)
}
fn default_final_time() -> f64 {
    1.0
}
fn default_particles() -> usize {
    10_000
}
fn default_shape() -> String {
    "cic".into()
}
fn default_cadence() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub eps: f64,
    #[serde(default)]
    pub theta: f64,
    /// Defaults to `vlasov-poisson-fokker-planck` when `theta > 0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(default = "default_dt_factor")]
    pub dt_factor: f64,
    /// `0` disables the velocity-based step cap.
    #[serde(default = "default_cfl", skip_serializing_if = "Option::is_none")]
    pub cfl: Option<f64>,
    #[serde(default = "default_final_time")]
    pub final_time: f64,
    #[serde(default = "default_particles")]
    pub particles: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_shape")]
    pub shape: String,
    /// Nodes along the longest grid axis; defaults depend on the dimension.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_nodes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_cadence: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    /// Velocity spread; defaults to `sqrt(eps)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    /// Bump amplitude; defaults to `eps`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default)]
    pub sampling: Sampling,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bump_center: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bump_radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestFieldSpec {
    pub direction: Vec<f64>,
    pub center: Vec<f64>,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSection {
    #[serde(default = "default_cadence")]
    pub cadence: usize,
    /// Defaults to one field along the first axis, centered in `K`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_fields: Option<Vec<TestFieldSpec>>,
    /// Radius of the region where the extended field equals the limit field;
    /// defaults to the outer radius of `K`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff_radius: Option<f64>,
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        Self {
            cadence: default_cadence(),
            test_fields: None,
            cutoff_radius: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub eps: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub potential: PotentialParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSection>,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub flow: FlowParams,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
    #[serde(default)]
    pub sweep: SweepSection,
}

fn parse_scalar(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        Self::from_toml_with_env(text, std::iter::empty())
    }

    /// Parses `text`, then applies `(name, value)` overrides whose names
    /// start with [`ENV_PREFIX`].
    pub fn from_toml_with_env(
        text: &str,
        env: impl IntoIterator<Item = (String, String)>,
    ) -> Result<Self> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        for (name, value) in env {
            let Some(rest) = name.strip_prefix(ENV_PREFIX) else {
                continue;
            };
            let Some((section, key)) = rest.split_once("__") else {
                return Err(Error::Config(format!(
                    "override {name} must look like {ENV_PREFIX}SECTION__KEY"
                )));
            };
            let section = section.to_lowercase();
            let key = key.to_lowercase();
            let entry = table
                .entry(section.clone())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            let toml::Value::Table(t) = entry else {
                return Err(Error::Config(format!("[{section}] is not a section")));
            };
            t.insert(key, parse_scalar(&value));
        }
        let cfg: Config = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    /// Reads a file and applies overrides from the process environment.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_with_env(&text, std::env::vars())
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn simulation(&self) -> Result<&SimulationSection> {
        self.simulation
            .as_ref()
            .ok_or_else(|| Error::Config("missing [simulation] section".into()))
    }

    pub fn equilibrium(&self) -> Result<Arc<dyn Equilibrium>> {
        solver_registry().get(&self.potential.class)?.solve(&self.potential)
    }

    pub fn limit_field(&self, eq: &dyn Equilibrium) -> Result<Arc<dyn LimitField>> {
        flow_registry().get(&self.flow.family)?.build(&self.flow, eq.domain())
    }

    /// Reference field for the modulated energy, defined on all of `R^N`.
    pub fn reference_field(&self, eq: &dyn Equilibrium) -> Result<Arc<dyn VelocityField>> {
        let field = self.limit_field(eq)?;
        if field.name() == "zero" {
            return Ok(field as Arc<dyn VelocityField>);
        }
        let radius = match self.diagnostics.cutoff_radius {
            Some(r) => r,
            None => {
                let (lo, hi) = eq.domain().bounding_box();
                lo.iter().chain(&hi).fold(0.0, |m: f64, v| m.max(v.abs()))
            }
        };
        Ok(Arc::new(extend_divfree(field, radius)?))
    }

    pub fn sim_config(&self) -> Result<SimConfig> {
        let s = self.simulation()?;
        let mode = s.mode.unwrap_or(if s.theta > 0.0 {
            Mode::VlasovPoissonFokkerPlanck
        } else {
            Mode::VlasovPoisson
        });
        let cfg = SimConfig {
            mode,
            eps: s.eps,
            theta: s.theta,
            dt_factor: s.dt_factor,
            cfl: s.cfl.filter(|c| *c != 0.0),
            final_time: s.final_time,
            seed: s.seed,
            cadence: self.diagnostics.cadence,
            snapshot_cadence: s.snapshot_cadence,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn init_params(&self, eq: &dyn Equilibrium) -> Result<InitParams> {
        let s = self.simulation()?;
        let i = &self.initial;
        let dom = eq.domain();
        let bump = match (&i.bump_center, i.bump_radius) {
            (None, None) => None,
            (c, r) => Some(Bump::new(
                c.clone().unwrap_or_else(|| dom.center()),
                r.unwrap_or(0.9 * dom.inradius()),
            )?),
        };
        Ok(InitParams {
            sigma: i.sigma.unwrap_or(s.eps.sqrt()),
            delta: i.delta.unwrap_or(s.eps),
            bump,
            n_particles: s.particles,
            seed: s.seed,
            sampling: i.sampling,
            eps: s.eps,
            theta: s.theta,
        })
    }

    pub fn grid(&self, eq: &dyn Equilibrium) -> Result<FieldGrid> {
        let s = self.simulation()?;
        let nodes = s.grid_nodes.unwrap_or(match eq.dim().get() {
            1 => 2048,
            2 => 256,
            _ => 64,
        });
        FieldGrid::for_equilibrium(eq, nodes, shape_registry().get(&s.shape)?)
    }

    pub fn test_fields(&self, eq: &dyn Equilibrium) -> Result<Vec<TestField>> {
        let dim = eq.dim().get();
        let specs = match &self.diagnostics.test_fields {
            Some(v) => v.clone(),
            None => {
                let mut direction = vec![0.0; dim];
                direction[0] = 1.0;
                vec![TestFieldSpec {
                    direction,
                    center: eq.domain().center(),
                    radius: 0.5 * eq.domain().inradius(),
                }]
            }
        };
        specs
            .into_iter()
            .map(|s| {
                if s.direction.len() != dim || s.center.len() != dim {
                    return Err(invalid("test field has the wrong dimension"));
                }
                Ok(TestField {
                    direction: s.direction,
                    bump: Bump::new(s.center, s.radius)?,
                })
            })
            .collect()
    }

    pub fn diagnostics(&self, eq: &dyn Equilibrium) -> Result<Diagnostics> {
        let sim = self.sim_config()?;
        let entropy = match sim.mode {
            Mode::VlasovPoissonFokkerPlanck => Some(EntropySettings::new(eq, sim.eps, sim.theta)?),
            Mode::VlasovPoisson => None,
        };
        Ok(Diagnostics {
            velocity: self.reference_field(eq)?,
            test_fields: self.test_fields(eq)?,
            entropy,
        })
    }

    /// Copy with a different `eps` (and the `eps`-dependent defaults).
    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        let mut c = self.clone();
        let s = c
            .simulation
            .as_mut()
            .ok_or_else(|| Error::Config("missing [simulation] section".into()))?;
        s.eps = eps;
        Ok(c)
    }

    pub fn with_seed(&self, seed: u64) -> Result<Self> {
        let mut c = self.clone();
        let s = c
            .simulation
            .as_mut()
            .ok_or_else(|| Error::Config("missing [simulation] section".into()))?;
        s.seed = seed;
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEXT: &str = r#"
[potential]
class = "convex1d"
mass = 2.0
coefficients = [0.0, 0.0, 0.5]

[simulation]
eps = 0.01
particles = 500
"#;

    #[test]
    fn parses_with_defaults() {
        let c = Config::from_toml(TEXT).unwrap();
        let s = c.simulation().unwrap();
        assert_eq!(s.dt_factor, 0.05);
        assert_eq!(s.cfl, Some(0.25));
        assert_eq!(c.flow.family, "zero");
        assert_eq!(c.sim_config().unwrap().mode, Mode::VlasovPoisson);
        let back = Config::from_toml(&c.to_toml_string().unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn unknown_keys_are_errors() {
        let bad = TEXT.replace("particles", "particals");
        assert!(matches!(Config::from_toml(&bad), Err(Error::Config(_))));
        let missing = TEXT.replace("mass = 2.0\n", "");
        assert!(Config::from_toml(&missing).is_err());
    }

    #[test]
    fn environment_overrides() {
        let env = vec![
            ("QNLAB_SIMULATION__EPS".to_string(), "0.001".to_string()),
            ("QNLAB_FLOW__FAMILY".to_string(), "rigid-rotation".to_string()),
            ("HOME".to_string(), "/root".to_string()),
        ];
        let c = Config::from_toml_with_env(TEXT, env).unwrap();
        assert_eq!(c.simulation().unwrap().eps, 0.001);
        assert_eq!(c.flow.family, "rigid-rotation");
        let bad = vec![("QNLAB_EPS".to_string(), "1".to_string())];
        assert!(Config::from_toml_with_env(TEXT, bad).is_err());
    }
}
