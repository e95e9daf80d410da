//! Dimension-generic primitives: the Newtonian kernel and ellipsoidal
//! coordinates.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quadrature::safeguarded_newton;

/// Spatial dimension, restricted to 1, 2 or 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct SpaceDim(usize);

impl SpaceDim {
    pub const ONE: SpaceDim = SpaceDim(1);
    pub const TWO: SpaceDim = SpaceDim(2);
    pub const THREE: SpaceDim = SpaceDim(3);

    pub fn new(n: usize) -> Result<Self> {
        match n {
            1..=3 => Ok(SpaceDim(n)),
            _ => Err(Error::Dimension(n)),
        }
    }

    pub fn get(self) -> usize {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64
    }

    /// Volume of the unit ball.
    pub fn unit_ball_volume(self) -> f64 {
        match self.0 {
            1 => 2.0,
            2 => PI,
            _ => 4.0 * PI / 3.0,
        }
    }

    /// Area of the unit sphere, `N |B_1|`.
    pub fn unit_sphere_area(self) -> f64 {
        self.as_f64() * self.unit_ball_volume()
    }
}

impl TryFrom<usize> for SpaceDim {
    type Error = Error;
    fn try_from(n: usize) -> Result<Self> {
        SpaceDim::new(n)
    }
}

impl From<SpaceDim> for usize {
    fn from(d: SpaceDim) -> usize {
        d.0
    }
}

impl fmt::Display for SpaceDim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn check_point(x: &[f64], dim: SpaceDim) -> Result<f64> {
    if x.len() != dim.get() {
        return Err(invalid(format!(
            "point has {} coordinates, dimension is {dim}",
            x.len()
        )));
    }
    let r = norm(x);
    if r == 0.0 {
        return Err(invalid("kernel evaluated at the origin"));
    }
    Ok(r)
}

/// Radial profile of the fundamental solution of `-Δ`.
pub fn gamma_radial(r: f64, dim: SpaceDim) -> f64 {
    match dim.get() {
        1 => -0.5 * r,
        2 => -r.ln() / (2.0 * PI),
        _ => 1.0 / (4.0 * PI * r),
    }
}

/// Radial derivative of [`gamma_radial`].
pub fn gamma_radial_derivative(r: f64, dim: SpaceDim) -> f64 {
    -1.0 / (dim.unit_sphere_area() * r.powi(dim.get() as i32 - 1))
}

/// Fundamental solution of `-Δ` at `x != 0`.
pub fn gamma(x: &[f64], dim: SpaceDim) -> Result<f64> {
    let r = check_point(x, dim)?;
    Ok(gamma_radial(r, dim))
}

pub fn gamma_gradient(x: &[f64], dim: SpaceDim) -> Result<Vec<f64>> {
    let r = check_point(x, dim)?;
    let g = gamma_radial_derivative(r, dim) / r;
    Ok(x.iter().map(|xi| g * xi).collect())
}

/// An ellipsoid `K_a = { x : sum x_j^2 / a_j^2 <= 1 }` centred at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ellipsoid {
    axes: Vec<f64>,
}

/// Value of the ellipsoidal coordinate `sigma_a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EllipsoidalCoord {
    /// The origin, where the defining equation has no root.
    NegInfinity,
    Finite(f64),
}

impl EllipsoidalCoord {
    pub fn finite(self) -> Option<f64> {
        match self {
            EllipsoidalCoord::NegInfinity => None,
            EllipsoidalCoord::Finite(s) => Some(s),
        }
    }

    /// True when the point lies in the closed ellipsoid.
    pub fn is_inside(self) -> bool {
        match self {
            EllipsoidalCoord::NegInfinity => true,
            EllipsoidalCoord::Finite(s) => s <= 0.0,
        }
    }

    /// `max(sigma, 0)`.
    pub fn positive_part(self) -> f64 {
        match self {
            EllipsoidalCoord::NegInfinity => 0.0,
            EllipsoidalCoord::Finite(s) => s.max(0.0),
        }
    }
}

impl Ellipsoid {
    pub fn new(axes: Vec<f64>) -> Result<Self> {
        SpaceDim::new(axes.len())?;
        if axes.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(invalid(format!("semi-axes must be positive, got {axes:?}")));
        }
        Ok(Self { axes })
    }

    pub fn axes(&self) -> &[f64] {
        &self.axes
    }

    pub fn dim(&self) -> SpaceDim {
        SpaceDim(self.axes.len())
    }

    pub fn volume(&self) -> f64 {
        self.dim().unit_ball_volume() * self.axes.iter().product::<f64>()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(&self.axes)
            .map(|(x, a)| (x / a).powi(2))
            .sum::<f64>()
            <= 1.0
    }

    /// Largest root `s` of `sum x_j^2 / (a_j^2 + s) = 1`.
    pub fn sigma(&self, x: &[f64]) -> EllipsoidalCoord {
        debug_assert_eq!(x.len(), self.axes.len());
        if x.iter().all(|v| *v == 0.0) {
            return EllipsoidalCoord::NegInfinity;
        }
        let a2: Vec<f64> = self.axes.iter().map(|a| a * a).collect();
        let f = |s: f64| -> f64 {
            x.iter()
                .zip(&a2)
                .map(|(x, a2)| x * x / (a2 + s))
                .sum::<f64>()
                - 1.0
        };
        // The pole that matters is the largest -a_j^2 among axes where x_j != 0.
        let pole = x
            .iter()
            .zip(&a2)
            .filter(|(x, _)| **x != 0.0)
            .map(|(_, a2)| -a2)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut eta = 1e-3 * (-pole);
        let mut lo = pole + eta;
        while f(lo) <= 0.0 {
            eta *= 1e-3;
            let next = pole + eta;
            if next <= pole || eta == 0.0 {
                break;
            }
            lo = next;
        }
        let hi = norm2(x);
        if f(lo) <= 0.0 {
            // x is so close to the degenerate axis that the root sits on the pole.
            return EllipsoidalCoord::Finite(lo);
        }
        // Bisection for robustness, then Newton polish.
        let (mut l, mut h) = (lo, hi);
        for _ in 0..60 {
            let m = 0.5 * (l + h);
            if f(m) > 0.0 {
                l = m;
            } else {
                h = m;
            }
        }
        let df = |s: f64| -> f64 {
            -x.iter()
                .zip(&a2)
                .map(|(x, a2)| x * x / ((a2 + s) * (a2 + s)))
                .sum::<f64>()
        };
        let s = safeguarded_newton(|s| (f(s), df(s)), l, h, 0.5 * (l + h), 1e-15)
            .unwrap_or(0.5 * (l + h));
        EllipsoidalCoord::Finite(s)
    }
}
