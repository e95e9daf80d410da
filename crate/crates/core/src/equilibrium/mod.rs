//! Quasi-neutral equilibria: the density `n_e`, its support `K`, the
//! confinement potential `Phi_e` and the Robin constant.

mod convex1d;
mod ellipsoid;
mod flux;
mod isotropic;
mod profiles;
mod quadratic;
mod radial;
mod solvers;
pub mod zmap;

use std::fmt::Debug;
use std::sync::Arc;

use serde::Serialize;

pub use convex1d::Convex1dEquilibrium;
pub use ellipsoid::ellipsoid_newtonian_potential;
pub use flux::boundary_flux_bound;
pub use isotropic::IsotropicEquilibrium;
pub use profiles::{Convex1dProfile, FnRadialProfile, Polynomial1d, PowerLaw, RadialProfile};
pub use quadratic::QuadraticEquilibrium;
pub use radial::RadialEquilibrium;
pub use solvers::{solver_registry, EquilibriumSolver, PotentialParams};
pub use zmap::{z_inverse, z_map, zeta};

use crate::error::{invalid, Result};
use crate::geometry::{Ellipsoid, SpaceDim};

/// Typed description of an external potential.
#[derive(Clone)]
pub enum Potential {
    /// `|x|^2 / (2N)`.
    Isotropic { dim: SpaceDim },
    /// `sum_j x_j^2 / (2 lambda_j^2)`.
    Quadratic { lambda: Vec<f64> },
    /// `phi(|x|)`.
    Radial {
        dim: SpaceDim,
        profile: Arc<dyn RadialProfile>,
    },
    /// A convex function of one variable.
    Convex1d { profile: Arc<dyn Convex1dProfile> },
}

impl Potential {
    pub fn solve(&self, mass: f64) -> Result<Arc<dyn Equilibrium>> {
        Ok(match self {
            Potential::Isotropic { dim } => Arc::new(IsotropicEquilibrium::new(mass, *dim)?),
            Potential::Quadratic { lambda } => {
                Arc::new(QuadraticEquilibrium::new(lambda.clone(), mass)?)
            }
            Potential::Radial { dim, profile } => {
                Arc::new(RadialEquilibrium::new(profile.clone(), mass, *dim)?)
            }
            Potential::Convex1d { profile } => {
                Arc::new(Convex1dEquilibrium::new(profile.clone(), mass)?)
            }
        })
    }
}

/// Support `K` of the equilibrium density.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Ball { dim: SpaceDim, radius: f64 },
    Ellipsoid { axes: Vec<f64> },
    Interval { lo: f64, hi: f64 },
    RadialSupport { dim: SpaceDim, r_min: f64, radius: f64 },
}

impl Domain {
    pub fn dim(&self) -> SpaceDim {
        match self {
            Domain::Ball { dim, .. } | Domain::RadialSupport { dim, .. } => *dim,
            Domain::Ellipsoid { axes } => SpaceDim::new(axes.len()).expect("validated axes"),
            Domain::Interval { .. } => SpaceDim::ONE,
        }
    }

    /// Closed-set membership. The radial support is the ball of radius `R`
    /// (the density vanishes below `r_min` but the potential does too).
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Domain::Ball { radius, .. } | Domain::RadialSupport { radius, .. } => {
                x.iter().map(|v| v * v).sum::<f64>() <= radius * radius
            }
            Domain::Ellipsoid { axes } => x
                .iter()
                .zip(axes)
                .map(|(x, a)| (x / a).powi(2))
                .sum::<f64>()
                <= 1.0,
            Domain::Interval { lo, hi } => x[0] >= *lo && x[0] <= *hi,
        }
    }

    /// Axis-aligned bounding box `(lo, hi)`.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Domain::Ball { dim, radius } | Domain::RadialSupport { dim, radius, .. } => {
                (vec![-radius; dim.get()], vec![*radius; dim.get()])
            }
            Domain::Ellipsoid { axes } => (axes.iter().map(|a| -a).collect(), axes.clone()),
            Domain::Interval { lo, hi } => (vec![*lo], vec![*hi]),
        }
    }

    pub fn center(&self) -> Vec<f64> {
        let (lo, hi) = self.bounding_box();
        lo.iter().zip(&hi).map(|(l, h)| 0.5 * (l + h)).collect()
    }

    /// Radius of the largest ball centred at [`Domain::center`] inside `K`.
    pub fn inradius(&self) -> f64 {
        match self {
            Domain::Ball { radius, .. } | Domain::RadialSupport { radius, .. } => *radius,
            Domain::Ellipsoid { axes } => axes.iter().cloned().fold(f64::INFINITY, f64::min),
            Domain::Interval { lo, hi } => 0.5 * (hi - lo),
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            Domain::Ball { radius, .. } | Domain::RadialSupport { radius, .. } => 2.0 * radius,
            Domain::Ellipsoid { axes } => 2.0 * axes.iter().cloned().fold(0.0, f64::max),
            Domain::Interval { lo, hi } => hi - lo,
        }
    }

    pub fn ellipsoid(&self) -> Option<Ellipsoid> {
        match self {
            Domain::Ellipsoid { axes } => Ellipsoid::new(axes.clone()).ok(),
            _ => None,
        }
    }
}

/// An equilibrium `(n_e, K, Phi_e, C*)`. Implementations are immutable and
/// safe to share between threads.
pub trait Equilibrium: Send + Sync + Debug {
    fn class(&self) -> &'static str;
    fn dim(&self) -> SpaceDim;
    fn mass(&self) -> f64;
    fn robin_constant(&self) -> f64;
    fn domain(&self) -> &Domain;

    fn external_potential(&self, x: &[f64]) -> f64;
    fn external_gradient(&self, x: &[f64], out: &mut [f64]);
    fn density(&self, x: &[f64]) -> f64;
    fn phi_e(&self, x: &[f64]) -> f64;
    fn grad_phi_e(&self, x: &[f64], out: &mut [f64]);

    /// Upper bound of `n_e`, when it is bounded.
    fn density_bound(&self) -> Option<f64>;

    fn contains(&self, x: &[f64]) -> bool {
        self.domain().contains(x)
    }

    /// Parameters describing `K`, as reported in summaries.
    fn domain_params(&self) -> serde_json::Map<String, serde_json::Value> {
        let mut map = serde_json::Map::new();
        if let Ok(serde_json::Value::Object(m)) = serde_json::to_value(self.domain()) {
            map.extend(m);
        }
        map
    }
}

pub(crate) fn check_mass(mass: f64) -> Result<()> {
    if !(mass.is_finite() && mass > 0.0) {
        return Err(invalid(format!("mass must be positive, got {mass}")));
    }
    Ok(())
}
