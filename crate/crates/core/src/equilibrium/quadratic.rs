use super::ellipsoid::{ellipsoid_newtonian_potential, exterior_integrals};
use super::zmap::z_inverse;
use super::{check_mass, Domain, Equilibrium};
use crate::error::{invalid, Error, Result};
use crate::geometry::{Ellipsoid, SpaceDim};

/// Equilibrium of the anisotropic trap `sum_j x_j^2 / (2 lambda_j^2)`: a
/// uniform ellipsoid.
#[derive(Debug, Clone)]
pub struct QuadraticEquilibrium {
    lambda: Vec<f64>,
    ellipsoid: Ellipsoid,
    a2: Vec<f64>,
    /// `sum_k lambda_k^{-2}`, the Laplacian of the trap and the density on `K`.
    laplacian: f64,
    prod_axes: f64,
    kappa: f64,
    mass: f64,
    domain: Domain,
}

impl QuadraticEquilibrium {
    pub fn new(lambda: Vec<f64>, mass: f64) -> Result<Self> {
        check_mass(mass)?;
        let dim = SpaceDim::new(lambda.len())?;
        if dim.get() < 2 {
            return Err(invalid(
                "quadratic traps need dimension 2 or 3; use the isotropic or convex1d class in 1D",
            ));
        }
        if lambda.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(invalid(format!("lambda must be positive, got {lambda:?}")));
        }
        let b1 = dim.unit_ball_volume();
        let inv2: Vec<f64> = lambda.iter().map(|l| l.powi(-2)).collect();
        let laplacian: f64 = inv2.iter().sum();
        // The quadratic part of Phi_ext + laplacian * Gamma*1_K must vanish
        // on K, which fixes Z(a^2) = (2|B_1|/m) lambda^{-2}.
        let z: Vec<f64> = inv2.iter().map(|v| 2.0 * b1 / mass * v).collect();
        let a2 = z_inverse(&z)?;
        let axes: Vec<f64> = a2.iter().map(|v| v.sqrt()).collect();
        let ellipsoid = Ellipsoid::new(axes.clone())?;
        let prod_axes: f64 = axes.iter().product();
        let implied_mass = b1 * prod_axes * laplacian;
        if ((implied_mass - mass) / mass).abs() > 1e-8 {
            return Err(Error::Convergence(format!(
                "ellipsoid mass {implied_mass} disagrees with requested mass {mass}"
            )));
        }
        let origin = vec![0.0; dim.get()];
        let kappa = -laplacian * ellipsoid_newtonian_potential(&origin, &ellipsoid)?;
        Ok(Self {
            lambda,
            ellipsoid,
            a2,
            laplacian,
            prod_axes,
            kappa,
            mass,
            domain: Domain::Ellipsoid { axes },
        })
    }

    pub fn axes(&self) -> &[f64] {
        self.ellipsoid.axes()
    }

    pub fn ellipsoid(&self) -> &Ellipsoid {
        &self.ellipsoid
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    /// The additive constant `kappa = -C*`.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// `Phi_ext + laplacian * Gamma*1_K + kappa`, evaluated without the
    /// exterior shortcut. Equals `phi_e` up to quadrature error.
    pub fn phi_e_by_assembly(&self, x: &[f64]) -> Result<f64> {
        Ok(self.external_potential(x)
            + self.laplacian * ellipsoid_newtonian_potential(x, &self.ellipsoid)?
            + self.kappa)
    }

    fn exterior(&self, x: &[f64]) -> Option<(f64, [f64; 4])> {
        let sigma = self.ellipsoid.sigma(x).finite()?;
        if sigma <= 0.0 {
            return None;
        }
        let ints = exterior_integrals(x, &self.a2, sigma)
            .unwrap_or_else(|e| panic!("exterior integrals failed at {x:?}: {e}"));
        Some((sigma, ints))
    }

    /// Value and gradient of `Phi_e` with a single quadrature.
    pub fn phi_e_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        match self.exterior(x) {
            None => {
                grad.iter_mut().for_each(|g| *g = 0.0);
                0.0
            }
            Some((_, ints)) => {
                let c = self.laplacian * self.prod_axes;
                for (i, g) in grad.iter_mut().enumerate() {
                    *g = 0.5 * c * x[i] * ints[i + 1];
                }
                0.25 * c * ints[0]
            }
        }
    }
}

impl Equilibrium for QuadraticEquilibrium {
    fn class(&self) -> &'static str {
        "quadratic"
    }
    fn dim(&self) -> SpaceDim {
        self.ellipsoid.dim()
    }
    fn mass(&self) -> f64 {
        self.mass
    }
    fn robin_constant(&self) -> f64 {
        -self.kappa
    }
    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn external_potential(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.lambda)
            .map(|(x, l)| 0.5 * x * x / (l * l))
            .sum()
    }

    fn external_gradient(&self, x: &[f64], out: &mut [f64]) {
        for ((o, x), l) in out.iter_mut().zip(x).zip(&self.lambda) {
            *o = x / (l * l);
        }
    }

    fn density(&self, x: &[f64]) -> f64 {
        if self.ellipsoid.contains(x) {
            self.laplacian
        } else {
            0.0
        }
    }

    fn phi_e(&self, x: &[f64]) -> f64 {
        match self.exterior(x) {
            None => 0.0,
            Some((_, ints)) => 0.25 * self.laplacian * self.prod_axes * ints[0],
        }
    }

    fn grad_phi_e(&self, x: &[f64], out: &mut [f64]) {
        self.phi_e_and_gradient(x, out);
    }

    fn density_bound(&self) -> Option<f64> {
        Some(self.laplacian)
    }

    fn domain_params(&self) -> serde_json::Map<String, serde_json::Value> {
        let mut map = serde_json::Map::new();
        map.insert("kind".into(), "ellipsoid".into());
        map.insert("axes".into(), serde_json::json!(self.axes()));
        map.insert("lambda".into(), serde_json::json!(self.lambda));
        if self.axes().len() == 2 {
            map.insert(
                "aspect_ratio".into(),
                serde_json::json!(self.axes()[0] / self.axes()[1]),
            );
        }
        map
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn planar_example() {
        let eq = QuadraticEquilibrium::new(vec![1.0, 1.0], PI).unwrap();
        for a in eq.axes() {
            assert!((a - 0.5f64.sqrt()).abs() < 1e-14);
        }
    }

    #[test]
    fn planar_aspect_ratio() {
        let eq = QuadraticEquilibrium::new(vec![2.0, 1.0], 3.0).unwrap();
        let a = eq.axes();
        assert!((a[0] / a[1] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn assembly_agrees_outside() {
        for lambda in [vec![1.3, 0.8], vec![1.0, 1.4, 0.7]] {
            let eq = QuadraticEquilibrium::new(lambda, 2.0).unwrap();
            let n = eq.axes().len();
            let mut x = vec![0.0; n];
            for (i, xi) in x.iter_mut().enumerate() {
                *xi = 1.3 * eq.axes()[i] * if i == 0 { 1.0 } else { 0.4 };
            }
            let direct = eq.phi_e(&x);
            let assembled = eq.phi_e_by_assembly(&x).unwrap();
            assert!(direct > 0.0);
            assert!((direct - assembled).abs() < 1e-11, "{direct} vs {assembled}");
            let inside: Vec<f64> = x.iter().map(|v| 0.3 * v).collect();
            assert!(eq.phi_e_by_assembly(&inside).unwrap().abs() < 1e-11);
            assert_eq!(eq.phi_e(&inside), 0.0);
        }
    }
}
