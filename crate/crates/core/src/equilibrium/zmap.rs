//! The map `Z`, its concave potential `zeta` with `grad zeta = Z`, and the
//! inverse of `Z` obtained by convex minimization.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::quadrature::{integrate_to_infinity, Tolerance};

const TOL: Tolerance = Tolerance {
    abs: 0.0,
    rel: 1e-14,
};

fn check(alpha: &[f64], what: &str) -> Result<()> {
    if !(2..=3).contains(&alpha.len()) {
        return Err(invalid(format!(
            "{what} is defined for dimensions 2 and 3, got {}",
            alpha.len()
        )));
    }
    if alpha.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
        return Err(invalid(format!(
            "{what} needs positive components, got {alpha:?}"
        )));
    }
    Ok(())
}

fn inv_sqrt_prod(alpha: &[f64], s: f64) -> f64 {
    alpha.iter().map(|a| a + s).product::<f64>().sqrt().recip()
}

fn tail_scale(alpha: &[f64]) -> f64 {
    alpha.iter().cloned().fold(0.0, f64::max)
}

/// `int_0^inf prod_k (alpha_k + s)^{-1/2} ds`, finite for three or more axes.
pub fn inv_sqrt_product_integral(alpha: &[f64]) -> Result<f64> {
    check(alpha, "the product integral")?;
    if alpha.len() < 3 {
        return Err(invalid("the product integral diverges in the plane"));
    }
    let r = integrate_to_infinity(|s| [inv_sqrt_prod(alpha, s)], 0.0, tail_scale(alpha), TOL)?;
    Ok(r.value[0])
}

/// Concave potential of `Z`: `grad zeta = Z`.
///
/// In space the normalisation is `-2 int prod^{-1/2}`; differentiating under
/// the integral gives `(1/2) Z_j` per unit of the integral, hence the factor 2.
pub fn zeta(alpha: &[f64]) -> Result<f64> {
    check(alpha, "zeta")?;
    if alpha.len() == 2 {
        return Ok(4.0 * (alpha[0].sqrt() + alpha[1].sqrt()).ln());
    }
    Ok(-2.0 * inv_sqrt_product_integral(alpha)?)
}

pub fn z_map(alpha: &[f64]) -> Result<Vec<f64>> {
    check(alpha, "Z")?;
    if alpha.len() == 2 {
        let g = (alpha[0] * alpha[1]).sqrt();
        return Ok(vec![2.0 / (alpha[0] + g), 2.0 / (alpha[1] + g)]);
    }
    let r = integrate_to_infinity(
        |s| {
            let w = inv_sqrt_prod(alpha, s);
            [w / (alpha[0] + s), w / (alpha[1] + s), w / (alpha[2] + s)]
        },
        0.0,
        tail_scale(alpha),
        TOL,
    )?;
    Ok(r.value.to_vec())
}

/// `Z(alpha)` together with the positive definite matrix `-Hess zeta(alpha)`.
pub fn z_and_neg_hessian(alpha: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
    check(alpha, "Z")?;
    let n = alpha.len();
    // -d_k Z_j = int (a_j+s)^-1 (a_k+s)^-1 (delta_jk + 1/2) prod^-1/2 ds
    let r = integrate_to_infinity(
        |s| {
            let w = inv_sqrt_prod(alpha, s);
            let mut out = [0.0; 9];
            for j in 0..n {
                let ij = 1.0 / (alpha[j] + s);
                out[j] = w * ij;
                for k in j..n {
                    let ik = 1.0 / (alpha[k] + s);
                    let c = if j == k { 1.5 } else { 0.5 };
                    out[3 + j * (7 - j) / 2 + (k - j)] = c * w * ij * ik;
                }
            }
            out
        },
        0.0,
        tail_scale(alpha),
        TOL,
    )?;
    let v = r.value;
    let z = v[..n].to_vec();
    let mut h = DMatrix::zeros(n, n);
    for j in 0..n {
        for k in j..n {
            let x = v[3 + j * (7 - j) / 2 + (k - j)];
            h[(j, k)] = x;
            h[(k, j)] = x;
        }
    }
    Ok((z, h))
}

/// Closed-form inverse in the plane.
fn z_inverse_2d(z: &[f64]) -> Vec<f64> {
    let s = z[0] + z[1];
    vec![2.0 * z[1] / (z[0] * s), 2.0 * z[0] / (z[1] * s)]
}

/// Solves `Z(alpha) = z` for `alpha`.
pub fn z_inverse(z: &[f64]) -> Result<Vec<f64>> {
    check(z, "Z inverse")?;
    let n = z.len();
    if n == 2 {
        return Ok(z_inverse_2d(z));
    }
    // Minimize F(alpha) = z.alpha - zeta(alpha), a strictly convex function
    // whose gradient is z - Z(alpha). The starting point is exact when all z_j
    // coincide.
    let objective = |a: &[f64]| -> Result<f64> {
        Ok(z.iter().zip(a).map(|(z, a)| z * a).sum::<f64>() - zeta(a)?)
    };
    let mut alpha: Vec<f64> = z
        .iter()
        .map(|zj| (2.0 / (n as f64 * zj)).powf(2.0 / n as f64))
        .collect();
    let mut f = objective(&alpha)?;
    let mut residual = f64::INFINITY;
    for _ in 0..100 {
        let (za, hess) = z_and_neg_hessian(&alpha)?;
        let grad = DVector::from_iterator(n, z.iter().zip(&za).map(|(z, za)| z - za));
        residual = grad.amax();
        let chol = hess.cholesky().ok_or_else(|| {
            Error::Convergence("Hessian of the dual objective lost definiteness".into())
        })?;
        let step = -chol.solve(&grad);
        let step_size = step
            .iter()
            .zip(&alpha)
            .map(|(d, a)| (d / a).abs())
            .fold(0.0, f64::max);
        if residual < 1e-10 && step_size < 1e-14 {
            return Ok(alpha);
        }
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = alpha.iter().zip(step.iter()).map(|(a, d)| a + t * d).collect();
            if trial.iter().all(|a| *a > 0.0) {
                let ft = objective(&trial)?;
                // Near the optimum the decrease drowns in rounding, so a tiny
                // relative slack is allowed.
                if ft <= f + 1e-14 * f.abs().max(1.0) {
                    alpha = trial;
                    f = ft;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            if residual < 1e-10 {
                return Ok(alpha);
            }
            break;
        }
    }
    let za = z_map(&alpha)?;
    residual = residual.min(
        z.iter()
            .zip(&za)
            .map(|(z, za)| (z - za).abs())
            .fold(0.0, f64::max),
    );
    if residual < 1e-10 {
        Ok(alpha)
    } else {
        Err(Error::Convergence(format!(
            "Z inverse stalled at alpha = {alpha:?} with residual {residual:e}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * (1.0 + y.abs()))
    }

    #[test]
    fn zeta_values() {
        assert!((zeta(&[1.0, 1.0]).unwrap() - 4.0 * 2f64.ln()).abs() < 1e-15);
        assert!((zeta(&[1.0, 1.0, 1.0]).unwrap() + 4.0).abs() < 1e-12);
        assert!(zeta(&[1.0, 0.0]).is_err());
        assert!(zeta(&[1.0]).is_err());
    }

    #[test]
    fn z_values() {
        assert!(close(&z_map(&[1.0, 1.0]).unwrap(), &[1.0, 1.0], 1e-15));
        assert!(close(&z_map(&[4.0, 1.0]).unwrap(), &[1.0 / 3.0, 2.0 / 3.0], 1e-15));
        assert!(close(&z_map(&[1.0, 1.0, 1.0]).unwrap(), &[2.0 / 3.0; 3], 1e-12));
    }

    #[test]
    fn inverse_values() {
        assert!(close(&z_inverse(&[1.0, 1.0]).unwrap(), &[1.0, 1.0], 1e-15));
        assert!(close(&z_inverse(&[1.0 / 3.0, 2.0 / 3.0]).unwrap(), &[4.0, 1.0], 1e-14));
        assert!(close(&z_inverse(&[2.0 / 3.0; 3]).unwrap(), &[1.0; 3], 1e-10));
    }

    #[test]
    fn gradient_of_zeta_is_z() {
        for a in [[0.7, 1.9], [2.0, 0.3]] {
            check_gradient(&a);
        }
        check_gradient(&[0.7, 1.9, 3.2]);
        check_gradient(&[0.05, 1.0, 8.0]);
    }

    fn check_gradient(a: &[f64]) {
        let z = z_map(a).unwrap();
        for k in 0..a.len() {
            let step = 1e-5 * a[k];
            let mut ap = a.to_vec();
            let mut am = a.to_vec();
            ap[k] += step;
            am[k] -= step;
            let fd = (zeta(&ap).unwrap() - zeta(&am).unwrap()) / (2.0 * step);
            assert!((fd - z[k]).abs() < 1e-6 * (1.0 + z[k]), "{a:?} {k}: {fd} vs {}", z[k]);
        }
    }

    #[test]
    fn hessian_matches_differences() {
        let a = [0.7, 1.9, 3.2];
        let (z, h) = z_and_neg_hessian(&a).unwrap();
        let step = 1e-5;
        for k in 0..3 {
            let mut ap = a;
            let mut am = a;
            ap[k] += step;
            am[k] -= step;
            let zp = z_map(&ap).unwrap();
            let zm = z_map(&am).unwrap();
            for j in 0..3 {
                let fd = -(zp[j] - zm[j]) / (2.0 * step);
                assert!((fd - h[(j, k)]).abs() < 1e-7, "{j}{k}: {fd} vs {}", h[(j, k)]);
            }
            assert!(z[k] > 0.0);
        }
    }
}
