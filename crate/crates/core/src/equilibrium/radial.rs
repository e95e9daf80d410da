use std::sync::Arc;

use super::profiles::RadialProfile;
use super::{check_mass, Domain, Equilibrium};
use crate::error::{invalid, Error, Result};
use crate::geometry::{gamma_radial, gamma_radial_derivative, norm, SpaceDim};
use crate::quadrature::{bisect, bracket_upwards, integrate_scalar, Tolerance};

/// Equilibrium of a radial trap `phi(|x|)`, supported on a ball.
#[derive(Debug, Clone)]
pub struct RadialEquilibrium {
    profile: Arc<dyn RadialProfile>,
    dim: SpaceDim,
    mass: f64,
    radius: f64,
    r_min: f64,
    robin: f64,
    domain: Domain,
}

impl RadialEquilibrium {
    pub fn new(profile: Arc<dyn RadialProfile>, mass: f64, dim: SpaceDim) -> Result<Self> {
        check_mass(mass)?;
        if dim.get() < 2 {
            return Err(invalid("radial traps need dimension 2 or 3; use convex1d in 1D"));
        }
        let area = dim.unit_sphere_area();
        let n = dim.get() as i32;
        let flux = |r: f64| area * r.powi(n - 1) * profile.dphi(r) - mass;
        let r_min = profile.flat_radius();
        let start = if r_min > 0.0 { 2.0 * r_min } else { 1.0 };
        let (lo, hi) = bracket_upwards(flux, r_min, start).map_err(|_| {
            Error::NoEquilibrium(format!(
                "the flux of phi' never reaches the mass {mass}; the trap is too weak"
            ))
        })?;
        let radius = bisect(flux, lo, hi, 200)?;
        let robin = mass * gamma_radial(radius, dim) + profile.phi(radius);
        Ok(Self {
            profile,
            dim,
            mass,
            radius,
            r_min,
            robin,
            domain: Domain::RadialSupport {
                dim,
                r_min,
                radius,
            },
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn radial_density(&self, r: f64) -> f64 {
        if r > self.radius {
            return 0.0;
        }
        if r == 0.0 {
            // phi'(r)/r tends to phi''(0)
            return self.dim.as_f64() * self.profile.d2phi(0.0);
        }
        self.profile.d2phi(r) + (self.dim.as_f64() - 1.0) * self.profile.dphi(r) / r
    }

    /// `N |B_1| int_0^R n_e(r) r^{N-1} dr` by quadrature.
    pub fn mass_by_quadrature(&self) -> Result<f64> {
        let n = self.dim.get() as i32;
        let lo = self.r_min;
        let v = integrate_scalar(
            |r| self.radial_density(r) * r.powi(n - 1),
            lo,
            self.radius,
            Tolerance::new(1e-14, 1e-12),
        )?;
        Ok(self.dim.unit_sphere_area() * v)
    }
}

impl Equilibrium for RadialEquilibrium {
    fn class(&self) -> &'static str {
        "radial"
    }
    fn dim(&self) -> SpaceDim {
        self.dim
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
        self.profile.phi(norm(x))
    }

    fn external_gradient(&self, x: &[f64], out: &mut [f64]) {
        let r = norm(x);
        let c = if r > 0.0 { self.profile.dphi(r) / r } else { 0.0 };
        for (o, xi) in out.iter_mut().zip(x) {
            *o = c * xi;
        }
    }

    fn density(&self, x: &[f64]) -> f64 {
        self.radial_density(norm(x))
    }

    fn phi_e(&self, x: &[f64]) -> f64 {
        let r = norm(x);
        if r <= self.radius {
            return 0.0;
        }
        self.profile.phi(r) - self.profile.phi(self.radius)
            + self.mass * (gamma_radial(r, self.dim) - gamma_radial(self.radius, self.dim))
    }

    fn grad_phi_e(&self, x: &[f64], out: &mut [f64]) {
        let r = norm(x);
        if r <= self.radius {
            out.iter_mut().for_each(|o| *o = 0.0);
            return;
        }
        let c = (self.profile.dphi(r) + self.mass * gamma_radial_derivative(r, self.dim)) / r;
        for (o, xi) in out.iter_mut().zip(x) {
            *o = c * xi;
        }
    }

    fn density_bound(&self) -> Option<f64> {
        self.profile.laplacian_bound(self.dim.get(), self.radius)
    }
}

#[cfg(test)]
mod tests {
    use super::super::profiles::PowerLaw;
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn linear_profile_in_plane() {
        let p = Arc::new(PowerLaw::new(1.0, 1.0, 0.0).unwrap());
        let eq = RadialEquilibrium::new(p, 2.0 * PI, SpaceDim::TWO).unwrap();
        assert!((eq.radius() - 1.0).abs() < 1e-13);
        assert!((eq.density(&[0.5, 0.0]) - 2.0).abs() < 1e-13);
        assert!((eq.mass_by_quadrature().unwrap() - 2.0 * PI).abs() < 1e-8);
        assert!(eq.density_bound().is_none());
    }

    #[test]
    fn weak_trap_rejected() {
        let f = super::super::profiles::FnRadialProfile {
            phi: Arc::new(|r: f64| -(-r).exp()),
            dphi: Arc::new(|r: f64| (-r).exp()),
            d2phi: Arc::new(|r: f64| -(-r).exp()),
            flat_radius: 0.0,
        };
        let err = RadialEquilibrium::new(Arc::new(f), 1e6, SpaceDim::TWO).unwrap_err();
        assert!(matches!(err, Error::NoEquilibrium(_)));
    }
}
