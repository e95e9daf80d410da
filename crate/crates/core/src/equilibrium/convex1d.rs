use std::sync::Arc;

use super::profiles::Convex1dProfile;
use super::{check_mass, Domain, Equilibrium};
use crate::error::{Error, Result};
use crate::geometry::SpaceDim;
use crate::quadrature::{bisect, integrate_scalar, Tolerance};

const TOL: Tolerance = Tolerance {
    abs: 1e-300,
    rel: 1e-13,
};

/// Equilibrium of a convex potential on the line, supported on `[a-, a+]`.
#[derive(Debug, Clone)]
pub struct Convex1dEquilibrium {
    profile: Arc<dyn Convex1dProfile>,
    mass: f64,
    a_minus: f64,
    a_plus: f64,
    robin: f64,
    density_max: f64,
    domain: Domain,
}

/// Finds `x` with `g(x) = 0` for a nondecreasing `g`.
fn monotone_root(g: impl Fn(f64) -> f64) -> Result<f64> {
    let g0 = g(0.0);
    if g0 == 0.0 {
        return Ok(0.0);
    }
    let dir = if g0 < 0.0 { 1.0 } else { -1.0 };
    let mut prev: f64 = 0.0;
    let mut step = 1.0;
    for _ in 0..200 {
        let x = dir * step;
        let gx = g(x);
        if gx.is_finite() && gx.signum() != g0.signum() {
            return bisect(&g, prev.min(x), prev.max(x), 200);
        }
        prev = x;
        step *= 2.0;
    }
    Err(Error::NoEquilibrium(
        "the derivative of the potential never reaches half the mass".into(),
    ))
}

impl Convex1dEquilibrium {
    pub fn new(profile: Arc<dyn Convex1dProfile>, mass: f64) -> Result<Self> {
        check_mass(mass)?;
        let a_plus = monotone_root(|x| profile.dphi(x) - 0.5 * mass)?;
        let a_minus = monotone_root(|x| profile.dphi(x) + 0.5 * mass)?;
        if a_plus <= a_minus {
            return Err(Error::NoEquilibrium(format!(
                "derivative is not increasing: a- = {a_minus}, a+ = {a_plus}"
            )));
        }
        // Convexity on a neighbourhood and a density bounded away from zero
        // on the support.
        let width = a_plus - a_minus;
        let samples = 4000;
        let mut dens_min = f64::INFINITY;
        let mut dens_max: f64 = 0.0;
        for i in 0..=samples {
            let x = a_minus - width + 3.0 * width * i as f64 / samples as f64;
            let d = profile.d2phi(x);
            if d < -1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "potential is not convex: second derivative {d} at x = {x}"
                )));
            }
            if x >= a_minus && x <= a_plus {
                dens_min = dens_min.min(d);
                dens_max = dens_max.max(d);
            }
        }
        if dens_min <= 1e-10 * dens_max.max(1.0) {
            return Err(Error::NoEquilibrium(format!(
                "density vanishes inside ({a_minus}, {a_plus}); degenerate supports are not supported"
            )));
        }
        let robin = 0.5 * (profile.phi(a_plus) + profile.phi(a_minus)) - 0.25 * mass * width;
        Ok(Self {
            profile,
            mass,
            a_minus,
            a_plus,
            robin,
            density_max: dens_max,
            domain: Domain::Interval {
                lo: a_minus,
                hi: a_plus,
            },
        })
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a_minus, self.a_plus)
    }

    /// `(Gamma * n_e)(x) + Phi(x) - C*` by direct quadrature of the
    /// convolution. Equal to `phi_e` outside the support.
    pub fn phi_e_by_convolution(&self, x: f64) -> Result<f64> {
        let (lo, hi) = (self.a_minus, self.a_plus);
        let kernel = |y: f64| -0.5 * (x - y).abs() * self.profile.d2phi(y);
        let conv = if x > lo && x < hi {
            integrate_scalar(kernel, lo, x, TOL)? + integrate_scalar(kernel, x, hi, TOL)?
        } else {
            integrate_scalar(kernel, lo, hi, TOL)?
        };
        Ok(conv + self.profile.phi(x) - self.robin)
    }
}

impl Equilibrium for Convex1dEquilibrium {
    fn class(&self) -> &'static str {
        "convex1d"
    }
    fn dim(&self) -> SpaceDim {
        SpaceDim::ONE
    }
    fn mass(&self) -> f64 {
        self.mass
    }
    fn robin_constant(&self) -> f64 {
        self.robin
    }
    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn external_potential(&self, x: &[f64]) -> f64 {
        self.profile.phi(x[0])
    }

    fn external_gradient(&self, x: &[f64], out: &mut [f64]) {
        out[0] = self.profile.dphi(x[0]);
    }

    fn density(&self, x: &[f64]) -> f64 {
        if x[0] >= self.a_minus && x[0] <= self.a_plus {
            self.profile.d2phi(x[0])
        } else {
            0.0
        }
    }

    /// Outside the support, `Phi_e` is the integral of `Phi' -+ m/2` from the
    /// nearest endpoint; the integrand is nonnegative so no cancellation occurs.
    fn phi_e(&self, x: &[f64]) -> f64 {
        let x = x[0];
        let half = 0.5 * self.mass;
        let v = if x > self.a_plus {
            integrate_scalar(|t| self.profile.dphi(t) - half, self.a_plus, x, TOL)
        } else if x < self.a_minus {
            integrate_scalar(|t| -(self.profile.dphi(t) + half), x, self.a_minus, TOL)
        } else {
            return 0.0;
        };
        v.expect("integrand of a polynomial-like profile is finite").max(0.0)
    }

    fn grad_phi_e(&self, x: &[f64], out: &mut [f64]) {
        let x0 = x[0];
        let half = 0.5 * self.mass;
        out[0] = if x0 > self.a_plus {
            self.profile.dphi(x0) - half
        } else if x0 < self.a_minus {
            self.profile.dphi(x0) + half
        } else {
            0.0
        };
    }

    fn density_bound(&self) -> Option<f64> {
        Some(self.density_max)
    }
}
