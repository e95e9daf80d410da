use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Result};

/// Radial profile `phi` of an external potential `Phi_ext(x) = phi(|x|)`.
pub trait RadialProfile: Send + Sync + fmt::Debug {
    fn phi(&self, r: f64) -> f64;
    fn dphi(&self, r: f64) -> f64;
    fn d2phi(&self, r: f64) -> f64;

    /// Largest `r` with `phi'(r) = 0`.
    fn flat_radius(&self) -> f64 {
        0.0
    }

    /// Upper bound of `phi'' + (N-1) phi'/r on `[0, r_max]`, if finite.
    fn laplacian_bound(&self, _dim: usize, _r_max: f64) -> Option<f64> {
        None
    }
}

/// `phi(r) = c ((r - r0)_+)^p` with `p >= 1` (`p > 1` when `r0 > 0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLaw {
    pub coef: f64,
    pub exponent: f64,
    pub offset: f64,
}

impl PowerLaw {
    pub fn new(coef: f64, exponent: f64, offset: f64) -> Result<Self> {
        if !(coef > 0.0 && coef.is_finite()) {
            return Err(invalid(format!("power-law coefficient must be positive, got {coef}")));
        }
        if !(exponent >= 1.0 && exponent.is_finite()) {
            return Err(invalid(format!("power-law exponent must be >= 1, got {exponent}")));
        }
        if !(offset >= 0.0 && offset.is_finite()) {
            return Err(invalid(format!("power-law offset must be >= 0, got {offset}")));
        }
        if offset > 0.0 && exponent == 1.0 {
            return Err(invalid("an offset power law needs exponent > 1 for a continuous derivative"));
        }
        Ok(Self {
            coef,
            exponent,
            offset,
        })
    }
}

impl RadialProfile for PowerLaw {
    fn phi(&self, r: f64) -> f64 {
        self.coef * (r - self.offset).max(0.0).powf(self.exponent)
    }
    fn dphi(&self, r: f64) -> f64 {
        let t = r - self.offset;
        if t <= 0.0 {
            return 0.0;
        }
        self.coef * self.exponent * t.powf(self.exponent - 1.0)
    }
    fn d2phi(&self, r: f64) -> f64 {
        let t = r - self.offset;
        if t <= 0.0 || self.exponent == 1.0 {
            return 0.0;
        }
        self.coef * self.exponent * (self.exponent - 1.0) * t.powf(self.exponent - 2.0)
    }
    fn flat_radius(&self) -> f64 {
        self.offset
    }
    fn laplacian_bound(&self, dim: usize, r_max: f64) -> Option<f64> {
        let (p, n) = (self.exponent, dim as f64);
        if self.offset == 0.0 {
            // n_e = c p (p + N - 2) r^{p-2}
            if p < 2.0 && (n > 1.0 || p > 1.0) {
                return None;
            }
            return Some(self.coef * p * (p + n - 2.0) * r_max.max(1e-300).powf(p - 2.0));
        }
        if p < 2.0 {
            return None;
        }
        let t = (r_max - self.offset).max(0.0);
        Some(self.coef * p * ((p - 1.0) * t.powf(p - 2.0) + (n - 1.0) * t.powf(p - 1.0) / self.offset))
    }
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Radial profile given by closures, for library users with custom traps.
#[derive(Clone)]
pub struct FnRadialProfile {
    pub phi: ScalarFn,
    pub dphi: ScalarFn,
    pub d2phi: ScalarFn,
    pub flat_radius: f64,
}

impl fmt::Debug for FnRadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnRadialProfile")
            .field("flat_radius", &self.flat_radius)
            .finish_non_exhaustive()
    }
}

impl RadialProfile for FnRadialProfile {
    fn phi(&self, r: f64) -> f64 {
        (self.phi)(r)
    }
    fn dphi(&self, r: f64) -> f64 {
        (self.dphi)(r)
    }
    fn d2phi(&self, r: f64) -> f64 {
        (self.d2phi)(r)
    }
    fn flat_radius(&self) -> f64 {
        self.flat_radius
    }
}

/// A convex potential on the line.
pub trait Convex1dProfile: Send + Sync + fmt::Debug {
    fn phi(&self, x: f64) -> f64;
    fn dphi(&self, x: f64) -> f64;
    fn d2phi(&self, x: f64) -> f64;
}

/// `Phi(x) = sum_k c_k x^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial1d {
    coeffs: Vec<f64>,
}

impl Polynomial1d {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        let mut coeffs = coeffs;
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.len() < 3 {
            return Err(invalid("a confining polynomial needs degree at least 2"));
        }
        let deg = coeffs.len() - 1;
        if deg % 2 == 1 || coeffs[deg] <= 0.0 {
            return Err(invalid(
                "a confining polynomial needs even degree and a positive leading coefficient",
            ));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(invalid("polynomial coefficients must be finite"));
        }
        Ok(Self { coeffs })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    fn horner(c: impl DoubleEndedIterator<Item = f64>, x: f64) -> f64 {
        c.rev().fold(0.0, |acc, c| acc * x + c)
    }
}

impl Convex1dProfile for Polynomial1d {
    fn phi(&self, x: f64) -> f64 {
        Self::horner(self.coeffs.iter().copied(), x)
    }
    fn dphi(&self, x: f64) -> f64 {
        Self::horner(
            self.coeffs.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c),
            x,
        )
    }
    fn d2phi(&self, x: f64) -> f64 {
        Self::horner(
            self.coeffs
                .iter()
                .enumerate()
                .skip(2)
                .map(|(k, c)| (k * (k - 1)) as f64 * c),
            x,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_derivatives() {
        let p = Polynomial1d::new(vec![1.0, -2.0, 0.5, 0.0, 0.25]).unwrap();
        let x = 1.3;
        assert!((p.phi(x) - (1.0 - 2.0 * x + 0.5 * x * x + 0.25 * x.powi(4))).abs() < 1e-14);
        assert!((p.dphi(x) - (-2.0 + x + x.powi(3))).abs() < 1e-14);
        assert!((p.d2phi(x) - (1.0 + 3.0 * x * x)).abs() < 1e-14);
        assert!(Polynomial1d::new(vec![0.0, 1.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn power_law_laplacian() {
        let p = PowerLaw::new(1.0, 1.0, 0.0).unwrap();
        assert!(p.laplacian_bound(2, 1.0).is_none());
        let q = PowerLaw::new(0.5, 2.0, 0.0).unwrap();
        assert_eq!(q.laplacian_bound(3, 2.0), Some(3.0));
    }
}
