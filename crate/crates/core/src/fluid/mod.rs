//! Limit velocity fields, their residual in the friction Euler system, and
//! the divergence-free extension to the whole plane.

mod extension;
mod families;
mod residual;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use extension::{extend_divfree, smooth_step, ExtendedField};
pub use families::{flow_registry, EllipticRotation, FlowFamily, RigidRotation, ZeroField};
pub use residual::{limit_residual, limit_residual_fd, ResidualReport};

use crate::equilibrium::Domain;
use crate::registry::Named;

/// A time-dependent vector field on `R^N`.
pub trait VelocityField: Send + Sync {
    fn dim(&self) -> usize;
    fn velocity(&self, t: f64, x: &[f64], out: &mut [f64]);
}

/// Analytic first derivatives of a flow at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowDerivatives {
    pub dt_velocity: Vec<f64>,
    /// Row-major `J[i][j] = d_j V_i`.
    pub jacobian: Vec<f64>,
    pub grad_pressure: Vec<f64>,
}

/// An exact solution of the incompressible Euler system with linear
/// friction, posed on the support of an equilibrium.
pub trait LimitField: VelocityField + Named {
    fn domain(&self) -> &Domain;
    /// Decay rate `gamma` of the friction term the field solves.
    fn friction(&self) -> f64;
    fn pressure(&self, t: f64, x: &[f64]) -> f64;
    /// Streamfunction `h` with `V = (-d_2 h, d_1 h)`, for planar fields.
    fn streamfunction(&self, t: f64, x: &[f64]) -> Option<f64>;
    fn derivatives(&self, _t: f64, _x: &[f64]) -> Option<FlowDerivatives> {
        None
    }
}

/// Parameters of the `[flow]` configuration section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowParams {
    #[serde(default = "default_family")]
    pub family: String,
    #[serde(default)]
    pub omega: f64,
    #[serde(default)]
    pub friction: f64,
}

fn default_family() -> String {
    "zero".into()
}

impl Default for FlowParams {
    fn default() -> Self {
        Self {
            family: default_family(),
            omega: 0.0,
            friction: 0.0,
        }
    }
}

/// The zero field as a trait object, handy as a default.
pub fn zero_velocity(dim: usize) -> Arc<dyn VelocityField> {
    Arc::new(ZeroVelocity(dim))
}

struct ZeroVelocity(usize);

impl VelocityField for ZeroVelocity {
    fn dim(&self) -> usize {
        self.0
    }
    fn velocity(&self, _t: f64, _x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
    }
}
