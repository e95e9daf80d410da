//! Newtonian potential of a uniform ellipsoid and the exterior integrals
//! that build the confinement potential of quadratic traps.

use std::f64::consts::LN_2;

use super::zmap::{inv_sqrt_product_integral, z_map};
use crate::error::{invalid, Result};
use crate::geometry::Ellipsoid;
use crate::quadrature::{integrate, integrate_to_infinity, Tolerance};

const TOL: Tolerance = Tolerance {
    abs: 0.0,
    rel: 1e-13,
};

fn prod_inv_sqrt(a2: &[f64], s: f64) -> f64 {
    a2.iter().map(|a| a + s).product::<f64>().sqrt().recip()
}

/// `(Gamma * 1_K)(x)` for the ellipsoid `K` in dimension 2 or 3.
pub fn ellipsoid_newtonian_potential(x: &[f64], e: &Ellipsoid) -> Result<f64> {
    let n = e.axes().len();
    if n < 2 {
        return Err(invalid("ellipsoid potential needs dimension 2 or 3"));
    }
    if x.len() != n {
        return Err(invalid("point and ellipsoid dimensions differ"));
    }
    let a2: Vec<f64> = e.axes().iter().map(|a| a * a).collect();
    let pa: f64 = e.axes().iter().product();
    let sigma = e.sigma(x);
    let s0 = sigma.positive_part();
    let scale = a2.iter().cloned().fold(0.0, f64::max) + s0;

    if n == 3 {
        if s0 == 0.0 {
            let z = z_map(&a2)?;
            let quad: f64 = x.iter().zip(&z).map(|(x, z)| x * x * z).sum();
            return Ok(0.25 * pa * (inv_sqrt_product_integral(&a2)? - quad));
        }
        let r = integrate_to_infinity(
            |s| {
                let q: f64 = x.iter().zip(&a2).map(|(x, a)| x * x / (a + s)).sum();
                [(1.0 - q) * prod_inv_sqrt(&a2, s)]
            },
            s0,
            scale,
            TOL,
        )?;
        return Ok(0.25 * pa * r.value[0]);
    }

    // Plane: the logarithmic kernel needs the primitive
    // d/ds ln(s + (a1^2+a2^2)/2 + sqrt((a1^2+s)(a2^2+s))) = prod^{-1/2}.
    // The constant (1 + ln 2) fixes the normalisation so that the result
    // behaves like |K| Gamma(x) at infinity.
    let log_term = (s0 + 0.5 * (a2[0] + a2[1]) + ((a2[0] + s0) * (a2[1] + s0)).sqrt()).ln();
    let quad = if s0 == 0.0 {
        let z = z_map(&a2)?;
        x.iter().zip(&z).map(|(x, z)| x * x * z).sum()
    } else {
        integrate_to_infinity(
            |s| {
                let q: f64 = x.iter().zip(&a2).map(|(x, a)| x * x / (a + s)).sum();
                [q * prod_inv_sqrt(&a2, s)]
            },
            s0,
            scale,
            TOL,
        )?
        .value[0]
    };
    Ok(0.25 * pa * (1.0 + LN_2 - log_term - quad))
}

/// For `x` outside the ellipsoid, returns
/// `I0 = int_0^sigma (sum x_j^2/(a_j^2+s) - 1) prod^{-1/2} ds` and
/// `I_i = int_0^sigma (a_i^2+s)^{-1} prod^{-1/2} ds`.
///
/// The first integrand is written as `(sigma - s) sum x_j^2 / ((a_j^2+s)(a_j^2+sigma))`
/// so that it carries no cancellation near the boundary.
pub(crate) fn exterior_integrals(x: &[f64], a2: &[f64], sigma: f64) -> Result<[f64; 4]> {
    let n = a2.len();
    let r = integrate(
        |s| {
            let w = prod_inv_sqrt(a2, s);
            let mut out = [0.0; 4];
            let mut q = 0.0;
            for j in 0..n {
                let inv = 1.0 / (a2[j] + s);
                q += x[j] * x[j] * inv / (a2[j] + sigma);
                out[j + 1] = w * inv;
            }
            out[0] = (sigma - s) * q * w;
            out
        },
        0.0,
        sigma,
        TOL,
    )?;
    Ok(r.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_ball_values() {
        let e = Ellipsoid::new(vec![1.0; 3]).unwrap();
        let c = ellipsoid_newtonian_potential(&[0.0; 3], &e).unwrap();
        assert!((c - 0.5).abs() < 1e-12);
        let f = ellipsoid_newtonian_potential(&[0.0, 2.0, 0.0], &e).unwrap();
        assert!((f - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn unit_disk_values() {
        let e = Ellipsoid::new(vec![1.0, 1.0]).unwrap();
        let c = ellipsoid_newtonian_potential(&[0.0, 0.0], &e).unwrap();
        assert!((c - 0.25).abs() < 1e-14);
        // Outside: pi * Gamma(x) = -ln r / 2.
        let f = ellipsoid_newtonian_potential(&[3.0, 0.0], &e).unwrap();
        assert!((f + 0.5 * 3f64.ln()).abs() < 1e-12, "{f}");
    }
}
