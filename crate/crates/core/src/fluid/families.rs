use std::sync::Arc;

use super::{FlowDerivatives, FlowParams, LimitField, VelocityField};
use crate::equilibrium::Domain;
use crate::error::{invalid, Result};
use crate::registry::{Named, Registry};

/// `V = 0`, `p = 0`. The only admissible field in one dimension.
#[derive(Debug, Clone)]
pub struct ZeroField {
    domain: Domain,
}

impl ZeroField {
    pub fn new(domain: Domain) -> Self {
        Self { domain }
    }
}

impl Named for ZeroField {
    fn name(&self) -> &'static str {
        "zero"
    }
}

impl VelocityField for ZeroField {
    fn dim(&self) -> usize {
        self.domain.dim().get()
    }
    fn velocity(&self, _t: f64, _x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
    }
}

impl LimitField for ZeroField {
    fn domain(&self) -> &Domain {
        &self.domain
    }
    fn friction(&self) -> f64 {
        0.0
    }
    fn pressure(&self, _t: f64, _x: &[f64]) -> f64 {
        0.0
    }
    fn streamfunction(&self, _t: f64, _x: &[f64]) -> Option<f64> {
        Some(0.0)
    }
    fn derivatives(&self, _t: f64, _x: &[f64]) -> Option<FlowDerivatives> {
        let n = self.dim();
        Some(FlowDerivatives {
            dt_velocity: vec![0.0; n],
            jacobian: vec![0.0; n * n],
            grad_pressure: vec![0.0; n],
        })
    }
}

/// Planar rotation `omega(t) (-c x_2, x_1 / c)` with `omega = omega0 e^{-gamma t}`
/// and `c = a_1 / a_2`. Tangent to the ellipse with semi-axes `a`; `c = 1`
/// is rigid rotation of a disk.
#[derive(Debug, Clone)]
pub struct EllipticRotation {
    c: f64,
    omega0: f64,
    gamma: f64,
    domain: Domain,
    name: &'static str,
}

/// Rigid rotation of a disk.
pub type RigidRotation = EllipticRotation;

impl EllipticRotation {
    pub fn new(axes: [f64; 2], omega0: f64, gamma: f64) -> Result<Self> {
        if axes.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(invalid(format!("semi-axes must be positive, got {axes:?}")));
        }
        check_rates(omega0, gamma)?;
        Ok(Self {
            c: axes[0] / axes[1],
            omega0,
            gamma,
            domain: Domain::Ellipsoid {
                axes: axes.to_vec(),
            },
            name: "elliptic-rotation",
        })
    }

    pub fn rigid(radius: f64, omega0: f64, gamma: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(invalid(format!("radius must be positive, got {radius}")));
        }
        check_rates(omega0, gamma)?;
        Ok(Self {
            c: 1.0,
            omega0,
            gamma,
            domain: Domain::Ball {
                dim: crate::SpaceDim::TWO,
                radius,
            },
            name: "rigid-rotation",
        })
    }

    pub fn omega(&self, t: f64) -> f64 {
        self.omega0 * (-self.gamma * t).exp()
    }
}

fn check_rates(omega0: f64, gamma: f64) -> Result<()> {
    if !omega0.is_finite() || !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(invalid(format!(
            "need finite omega and gamma >= 0, got omega = {omega0}, gamma = {gamma}"
        )));
    }
    Ok(())
}

impl Named for EllipticRotation {
    fn name(&self) -> &'static str {
        self.name
    }
}

impl VelocityField for EllipticRotation {
    fn dim(&self) -> usize {
        2
    }
    fn velocity(&self, t: f64, x: &[f64], out: &mut [f64]) {
        let w = self.omega(t);
        out[0] = -w * self.c * x[1];
        out[1] = w * x[0] / self.c;
    }
}

impl LimitField for EllipticRotation {
    fn domain(&self) -> &Domain {
        &self.domain
    }
    fn friction(&self) -> f64 {
        self.gamma
    }
    fn pressure(&self, t: f64, x: &[f64]) -> f64 {
        0.5 * self.omega(t).powi(2) * (x[0] * x[0] + x[1] * x[1])
    }
    fn streamfunction(&self, t: f64, x: &[f64]) -> Option<f64> {
        Some(0.5 * self.omega(t) * (x[0] * x[0] / self.c + self.c * x[1] * x[1]))
    }
    fn derivatives(&self, t: f64, x: &[f64]) -> Option<FlowDerivatives> {
        let w = self.omega(t);
        let mut v = [0.0; 2];
        self.velocity(t, x, &mut v);
        Some(FlowDerivatives {
            dt_velocity: vec![-self.gamma * v[0], -self.gamma * v[1]],
            jacobian: vec![0.0, -w * self.c, w / self.c, 0.0],
            grad_pressure: vec![w * w * x[0], w * w * x[1]],
        })
    }
}

/// Builds a limit field on the support of an equilibrium.
pub trait FlowFamily: Named + Send + Sync {
    fn build(&self, params: &FlowParams, domain: &Domain) -> Result<Arc<dyn LimitField>>;
}

struct ZeroFamily;
struct RigidFamily;
struct EllipticFamily;

impl Named for ZeroFamily {
    fn name(&self) -> &'static str {
        "zero"
    }
}
impl FlowFamily for ZeroFamily {
    fn build(&self, _p: &FlowParams, domain: &Domain) -> Result<Arc<dyn LimitField>> {
        Ok(Arc::new(ZeroField::new(domain.clone())))
    }
}

impl Named for RigidFamily {
    fn name(&self) -> &'static str {
        "rigid-rotation"
    }
}
impl FlowFamily for RigidFamily {
    fn build(&self, p: &FlowParams, domain: &Domain) -> Result<Arc<dyn LimitField>> {
        if domain.dim().get() == 1 {
            return Ok(Arc::new(ZeroField::new(domain.clone())));
        }
        match domain {
            Domain::Ball { dim, radius } | Domain::RadialSupport { dim, radius, .. }
                if dim.get() == 2 =>
            {
                Ok(Arc::new(EllipticRotation::rigid(*radius, p.omega, p.friction)?))
            }
            _ => Err(invalid(
                "rigid-rotation needs a planar disk support (isotropic or radial class, dim = 2)",
            )),
        }
    }
}

impl Named for EllipticFamily {
    fn name(&self) -> &'static str {
        "elliptic-rotation"
    }
}
impl FlowFamily for EllipticFamily {
    fn build(&self, p: &FlowParams, domain: &Domain) -> Result<Arc<dyn LimitField>> {
        if domain.dim().get() == 1 {
            return Ok(Arc::new(ZeroField::new(domain.clone())));
        }
        match domain {
            Domain::Ellipsoid { axes } if axes.len() == 2 => Ok(Arc::new(EllipticRotation::new(
                [axes[0], axes[1]],
                p.omega,
                p.friction,
            )?)),
            Domain::Ball { dim, radius } if dim.get() == 2 => Ok(Arc::new(
                EllipticRotation::new([*radius, *radius], p.omega, p.friction)?,
            )),
            _ => Err(invalid(
                "elliptic-rotation needs a planar ellipse or disk support",
            )),
        }
    }
}

pub fn flow_registry() -> Registry<dyn FlowFamily> {
    let mut r: Registry<dyn FlowFamily> = Registry::new("flow family");
    r.register(Arc::new(ZeroFamily))
        .register(Arc::new(RigidFamily))
        .register(Arc::new(EllipticFamily));
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::SpaceDim;

    #[test]
    fn rotation_is_tangent() {
        let f = EllipticRotation::new([2.0, 1.0], 1.3, 0.0).unwrap();
        let mut v = [0.0; 2];
        for k in 0..1000 {
            let th = k as f64 * 0.00628318;
            let x = [2.0 * th.cos(), th.sin()];
            f.velocity(0.4, &x, &mut v);
            let flux = v[0] * x[0] / 4.0 + v[1] * x[1];
            assert!(flux.abs() < 1e-14);
        }
    }

    #[test]
    fn rigid_decay() {
        let f = EllipticRotation::rigid(1.0, 2.0, 1.0).unwrap();
        let mut v = [0.0; 2];
        f.velocity(1.0, &[1.0, 0.0], &mut v);
        assert!((v[1] - 2.0 * (-1.0f64).exp()).abs() < 1e-15);
        f.velocity(0.3, &[0.3, -0.7], &mut v);
        assert!((v[0] * 0.3 - v[1] * 0.7).abs() < 1e-15);
    }

    #[test]
    fn one_dimensional_fields_vanish() {
        let reg = flow_registry();
        let dom = Domain::Interval { lo: -1.0, hi: 1.0 };
        let p = FlowParams {
            family: "rigid-rotation".into(),
            omega: 3.0,
            friction: 0.0,
        };
        for name in reg.names() {
            let f = reg.get(name).unwrap().build(&p, &dom).unwrap();
            let mut v = [1.0];
            f.velocity(0.5, &[0.2], &mut v);
            assert_eq!(v, [0.0]);
        }
        let disk = Domain::Ball {
            dim: SpaceDim::TWO,
            radius: 1.0,
        };
        assert_eq!(reg.get("rigid-rotation").unwrap().build(&p, &disk).unwrap().name(), "rigid-rotation");
    }
}
