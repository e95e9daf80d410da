use super::{check_mass, Domain, Equilibrium};
use crate::error::Result;
use crate::geometry::{gamma_radial, norm, SpaceDim};

/// Equilibrium of the potential `|x|^2 / (2N)`: a uniform ball of unit
/// density.
#[derive(Debug, Clone)]
pub struct IsotropicEquilibrium {
    dim: SpaceDim,
    mass: f64,
    radius: f64,
    robin: f64,
    domain: Domain,
}

impl IsotropicEquilibrium {
    pub fn new(mass: f64, dim: SpaceDim) -> Result<Self> {
        check_mass(mass)?;
        let n = dim.as_f64();
        let radius = (mass / dim.unit_ball_volume()).powf(1.0 / n);
        let robin = mass * gamma_radial(radius, dim) + radius * radius / (2.0 * n);
        Ok(Self {
            dim,
            mass,
            radius,
            robin,
            domain: Domain::Ball { dim, radius },
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

impl Equilibrium for IsotropicEquilibrium {
    fn class(&self) -> &'static str {
        "isotropic"
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
        x.iter().map(|v| v * v).sum::<f64>() / (2.0 * self.dim.as_f64())
    }

    fn external_gradient(&self, x: &[f64], out: &mut [f64]) {
        let n = self.dim.as_f64();
        for (o, xi) in out.iter_mut().zip(x) {
            *o = xi / n;
        }
    }

    fn density(&self, x: &[f64]) -> f64 {
        if norm(x) <= self.radius {
            1.0
        } else {
            0.0
        }
    }

    fn phi_e(&self, x: &[f64]) -> f64 {
        let r = norm(x);
        let big_r = self.radius;
        if r <= big_r {
            return 0.0;
        }
        match self.dim.get() {
            1 => 0.5 * (r - big_r).powi(2),
            2 => (r * r - big_r * big_r) / 4.0 - 0.5 * big_r * big_r * (r / big_r).ln(),
            _ => r * r / 6.0 + big_r.powi(3) / (3.0 * r) - big_r * big_r / 2.0,
        }
    }

    fn grad_phi_e(&self, x: &[f64], out: &mut [f64]) {
        let r = norm(x);
        if r <= self.radius {
            out.iter_mut().for_each(|o| *o = 0.0);
            return;
        }
        let n = self.dim.as_f64();
        let c = (1.0 - (self.radius / r).powi(self.dim.get() as i32)) / n;
        for (o, xi) in out.iter_mut().zip(x) {
            *o = c * xi;
        }
    }

    fn density_bound(&self) -> Option<f64> {
        Some(1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_radius() {
        let eq = IsotropicEquilibrium::new(std::f64::consts::PI, SpaceDim::TWO).unwrap();
        assert!((eq.radius() - 1.0).abs() < 1e-15);
        assert_eq!(eq.phi_e(&[0.3, -0.4]), 0.0);
    }

    #[test]
    fn interval_case() {
        let eq = IsotropicEquilibrium::new(2.0, SpaceDim::ONE).unwrap();
        assert!((eq.radius() - 1.0).abs() < 1e-15);
        assert!((eq.phi_e(&[2.0]) - 0.5).abs() < 1e-15);
        assert!((eq.robin_constant() + 0.5).abs() < 1e-15);
    }

    #[test]
    fn matches_general_radial_form() {
        // Phi_ext(x) - Phi_ext(R) + m (Gamma(x) - Gamma(R)) outside the ball.
        for dim in [SpaceDim::ONE, SpaceDim::TWO, SpaceDim::THREE] {
            let eq = IsotropicEquilibrium::new(1.7, dim).unwrap();
            let r_big = eq.radius();
            let n = dim.as_f64();
            for r in [1.01 * r_big, 1.5 * r_big, 4.0 * r_big] {
                let mut x = vec![0.0; dim.get()];
                x[0] = r;
                let expected = (r * r - r_big * r_big) / (2.0 * n)
                    + eq.mass() * (gamma_radial(r, dim) - gamma_radial(r_big, dim));
                assert!((eq.phi_e(&x) - expected).abs() < 1e-13 * (1.0 + expected));
            }
        }
    }
}
