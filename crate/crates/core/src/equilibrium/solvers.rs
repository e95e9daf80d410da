//! Equilibrium solvers registered by potential class name.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::profiles::{Polynomial1d, PowerLaw};
use super::{Equilibrium, Potential};
use crate::error::{Error, Result};
use crate::geometry::SpaceDim;
use crate::registry::{Named, Registry};

/// Parameters of the `[potential]` configuration section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialParams {
    pub class: String,
    pub mass: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    /// Trap lengths of the quadratic class.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<f64>>,
    /// Power-law radial profile `coef ((r - offset)_+)^exponent`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coef: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<f64>,
    /// Polynomial coefficients (constant term first) of the convex1d class.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<f64>>,
}

impl PotentialParams {
    pub fn new(class: &str, mass: f64) -> Self {
        Self {
            class: class.to_string(),
            mass,
            dim: None,
            lambda: None,
            coef: None,
            exponent: None,
            offset: None,
            coefficients: None,
        }
    }

    fn require<T: Clone>(&self, v: &Option<T>, key: &str) -> Result<T> {
        v.clone().ok_or_else(|| {
            Error::Config(format!(
                "potential class \"{}\" requires the key \"{key}\"",
                self.class
            ))
        })
    }

    fn dim(&self) -> Result<SpaceDim> {
        SpaceDim::new(self.require(&self.dim, "dim")?)
    }
}

/// Builds an equilibrium for one family of external potentials.
pub trait EquilibriumSolver: Named + Send + Sync {
    fn potential(&self, params: &PotentialParams) -> Result<Potential>;

    fn solve(&self, params: &PotentialParams) -> Result<Arc<dyn Equilibrium>> {
        self.potential(params)?.solve(params.mass)
    }
}

struct IsotropicSolver;
struct QuadraticSolver;
struct RadialSolver;
struct Convex1dSolver;

impl Named for IsotropicSolver {
    fn name(&self) -> &'static str {
        "isotropic"
    }
}
impl EquilibriumSolver for IsotropicSolver {
    fn potential(&self, p: &PotentialParams) -> Result<Potential> {
        Ok(Potential::Isotropic { dim: p.dim()? })
    }
}

impl Named for QuadraticSolver {
    fn name(&self) -> &'static str {
        "quadratic"
    }
}
impl EquilibriumSolver for QuadraticSolver {
    fn potential(&self, p: &PotentialParams) -> Result<Potential> {
        let lambda = p.require(&p.lambda, "lambda")?;
        if let Some(d) = p.dim {
            if d != lambda.len() {
                return Err(Error::Config(format!(
                    "dim = {d} but lambda has {} entries",
                    lambda.len()
                )));
            }
        }
        Ok(Potential::Quadratic { lambda })
    }
}

impl Named for RadialSolver {
    fn name(&self) -> &'static str {
        "radial"
    }
}
impl EquilibriumSolver for RadialSolver {
    fn potential(&self, p: &PotentialParams) -> Result<Potential> {
        let profile = PowerLaw::new(
            p.require(&p.coef, "coef")?,
            p.require(&p.exponent, "exponent")?,
            p.offset.unwrap_or(0.0),
        )?;
        Ok(Potential::Radial {
            dim: p.dim()?,
            profile: Arc::new(profile),
        })
    }
}

impl Named for Convex1dSolver {
    fn name(&self) -> &'static str {
        "convex1d"
    }
}
impl EquilibriumSolver for Convex1dSolver {
    fn potential(&self, p: &PotentialParams) -> Result<Potential> {
        if let Some(d) = p.dim {
            if d != 1 {
                return Err(Error::Config(format!("convex1d requires dim = 1, got {d}")));
            }
        }
        let poly = Polynomial1d::new(p.require(&p.coefficients, "coefficients")?)?;
        Ok(Potential::Convex1d {
            profile: Arc::new(poly),
        })
    }
}

pub fn solver_registry() -> Registry<dyn EquilibriumSolver> {
    let mut r: Registry<dyn EquilibriumSolver> = Registry::new("potential class");
    r.register(Arc::new(IsotropicSolver))
        .register(Arc::new(QuadraticSolver))
        .register(Arc::new(RadialSolver))
        .register(Arc::new(Convex1dSolver));
    r
}
