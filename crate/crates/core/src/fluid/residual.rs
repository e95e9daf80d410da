use super::{FlowDerivatives, LimitField};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualReport {
    /// Max over probes of `|d_t V + (V.grad)V + grad p + gamma V|`.
    pub max: f64,
    pub evaluated: usize,
    /// Probes outside the domain.
    pub skipped: usize,
}

fn fd_derivatives(field: &dyn LimitField, t: f64, x: &[f64], h: f64) -> FlowDerivatives {
    let n = x.len();
    let mut vp = vec![0.0; n];
    let mut vm = vec![0.0; n];
    field.velocity(t + h, x, &mut vp);
    field.velocity(t - h, x, &mut vm);
    let dt_velocity = vp.iter().zip(&vm).map(|(a, b)| (a - b) / (2.0 * h)).collect();
    let mut jacobian = vec![0.0; n * n];
    let mut grad_pressure = vec![0.0; n];
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    for j in 0..n {
        xp[j] = x[j] + h;
        xm[j] = x[j] - h;
        field.velocity(t, &xp, &mut vp);
        field.velocity(t, &xm, &mut vm);
        for i in 0..n {
            jacobian[i * n + j] = (vp[i] - vm[i]) / (2.0 * h);
        }
        grad_pressure[j] = (field.pressure(t, &xp) - field.pressure(t, &xm)) / (2.0 * h);
        xp[j] = x[j];
        xm[j] = x[j];
    }
    FlowDerivatives {
        dt_velocity,
        jacobian,
        grad_pressure,
    }
}

fn residual_at(field: &dyn LimitField, gamma: f64, t: f64, x: &[f64], d: &FlowDerivatives) -> f64 {
    let n = x.len();
    let mut v = vec![0.0; n];
    field.velocity(t, x, &mut v);
    let mut sq = 0.0;
    for i in 0..n {
        let adv: f64 = (0..n).map(|j| d.jacobian[i * n + j] * v[j]).sum();
        let r = d.dt_velocity[i] + adv + d.grad_pressure[i] + gamma * v[i];
        sq += r * r;
    }
    sq.sqrt()
}

fn run(
    field: &dyn LimitField,
    gamma: f64,
    probes: &[(f64, Vec<f64>)],
    deriv: impl Fn(f64, &[f64]) -> FlowDerivatives,
) -> ResidualReport {
    let mut report = ResidualReport {
        max: 0.0,
        evaluated: 0,
        skipped: 0,
    };
    for (t, x) in probes {
        if !field.domain().contains(x) {
            report.skipped += 1;
            continue;
        }
        let d = deriv(*t, x);
        report.max = report.max.max(residual_at(field, gamma, *t, x, &d));
        report.evaluated += 1;
    }
    report
}

/// Residual of the friction Euler system with analytic derivatives when the
/// field provides them, centered differences otherwise.
pub fn limit_residual(
    field: &dyn LimitField,
    gamma: f64,
    probes: &[(f64, Vec<f64>)],
) -> ResidualReport {
    run(field, gamma, probes, |t, x| {
        field
            .derivatives(t, x)
            .unwrap_or_else(|| fd_derivatives(field, t, x, 1e-5))
    })
}

/// Residual with every derivative replaced by a centered difference of step `h`.
pub fn limit_residual_fd(
    field: &dyn LimitField,
    gamma: f64,
    probes: &[(f64, Vec<f64>)],
    h: f64,
) -> ResidualReport {
    run(field, gamma, probes, |t, x| fd_derivatives(field, t, x, h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fluid::{EllipticRotation, ZeroField};
    use crate::equilibrium::Domain;

    fn probes() -> Vec<(f64, Vec<f64>)> {
        (0..50)
            .map(|k| {
                let th = k as f64 * 0.37;
                (0.02 * k as f64, vec![0.6 * th.cos(), 0.4 * th.sin()])
            })
            .collect()
    }

    #[test]
    fn zero_field() {
        let f = ZeroField::new(Domain::Interval { lo: -1.0, hi: 1.0 });
        let r = limit_residual(&f, 0.0, &[(0.0, vec![0.5]), (0.0, vec![3.0])]);
        assert_eq!(r.max, 0.0);
        assert_eq!(r.skipped, 1);
    }

    #[test]
    fn wrong_friction_scales_with_speed() {
        let f = EllipticRotation::rigid(1.0, 1.0, 0.5).unwrap();
        assert!(limit_residual(&f, 0.5, &probes()).max < 1e-14);
        let x = vec![0.3, 0.4];
        let r = limit_residual(&f, 0.8, &[(0.0, x)]);
        assert!((r.max - 0.3 * 0.5).abs() < 1e-14);
    }
}
