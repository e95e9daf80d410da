use std::sync::Arc;

use super::{LimitField, VelocityField};
use crate::error::{invalid, Result};

fn bump_tail(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

fn bump_tail_derivative(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp() / (t * t)
    } else {
        0.0
    }
}

/// `C^inf` step: 0 for `t <= 0`, 1 for `t >= 1`. Returns value and derivative.
pub fn smooth_step(t: f64) -> (f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0);
    }
    if t >= 1.0 {
        return (1.0, 0.0);
    }
    let (a, b) = (bump_tail(t), bump_tail(1.0 - t));
    let (da, db) = (bump_tail_derivative(t), -bump_tail_derivative(1.0 - t));
    let s = a + b;
    (a / s, (da * s - a * (da + db)) / (s * s))
}

/// Divergence-free field on the whole plane that equals the limit field on
/// `B(0, 3R/2)` and vanishes outside `B(0, 2R)`: the perpendicular gradient
/// of `chi(|x|) h(x)` with `h` the streamfunction.
pub struct ExtendedField {
    base: Arc<dyn LimitField>,
    radius: f64,
    trivial: bool,
}

impl ExtendedField {
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn base(&self) -> &Arc<dyn LimitField> {
        &self.base
    }

    /// Cutoff `chi(r)` and its radial derivative.
    pub fn cutoff(&self, r: f64) -> (f64, f64) {
        let w = 0.5 * self.radius;
        let (s, ds) = smooth_step((r - 1.5 * self.radius) / w);
        (1.0 - s, -ds / w)
    }
}

pub fn extend_divfree(field: Arc<dyn LimitField>, cutoff_radius: f64) -> Result<ExtendedField> {
    if !(cutoff_radius > 0.0 && cutoff_radius.is_finite()) {
        return Err(invalid(format!(
            "cutoff radius must be positive, got {cutoff_radius}"
        )));
    }
    let trivial = field.name() == "zero";
    if !trivial && (field.dim() != 2 || field.streamfunction(0.0, &[0.0, 0.0]).is_none()) {
        return Err(invalid(
            "the divergence-free extension needs a planar field with a streamfunction",
        ));
    }
    Ok(ExtendedField {
        base: field,
        radius: cutoff_radius,
        trivial,
    })
}

impl VelocityField for ExtendedField {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn velocity(&self, t: f64, x: &[f64], out: &mut [f64]) {
        if self.trivial {
            out.iter_mut().for_each(|o| *o = 0.0);
            return;
        }
        let r = x[0].hypot(x[1]);
        if r >= 2.0 * self.radius {
            out[0] = 0.0;
            out[1] = 0.0;
            return;
        }
        self.base.velocity(t, x, out);
        let (chi, dchi) = self.cutoff(r);
        if dchi == 0.0 {
            out[0] *= chi;
            out[1] *= chi;
            return;
        }
        let h = self.base.streamfunction(t, x).unwrap_or(0.0);
        let c = h * dchi / r;
        out[0] = chi * out[0] - c * x[1];
        out[1] = chi * out[1] + c * x[0];
    }
}
