use std::f64::consts::PI;
use std::sync::Arc;

use qnlab::equilibrium::{
    boundary_flux_bound, solver_registry, Convex1dEquilibrium, Equilibrium, IsotropicEquilibrium,
    Polynomial1d, PotentialParams, PowerLaw, QuadraticEquilibrium, RadialEquilibrium,
};
use qnlab::fluid::{EllipticRotation, VelocityField};
use qnlab::geometry::{gamma, gamma_gradient, Ellipsoid, SpaceDim};

fn dim(n: usize) -> SpaceDim {
    SpaceDim::new(n).unwrap()
}

#[test]
fn kernel_examples() {
    assert_eq!(gamma(&[0.6, 0.8], dim(2)).unwrap(), 0.0);
    assert!((gamma(&[-2.0], dim(1)).unwrap() + 1.0).abs() < 1e-15);
    let r = 1.7;
    assert!((gamma(&[0.0, r, 0.0], dim(3)).unwrap() - 1.0 / (4.0 * PI * r)).abs() < 1e-15);
    assert!(gamma(&[0.0, 0.0], dim(2)).is_err());
    assert!(gamma_gradient(&[0.0], dim(1)).is_err());

    assert!((gamma_gradient(&[2.0], dim(1)).unwrap()[0] + 0.5).abs() < 1e-15);
    let g2 = gamma_gradient(&[1.0, 0.0], dim(2)).unwrap();
    assert!((g2[0] + 1.0 / (2.0 * PI)).abs() < 1e-15 && g2[1] == 0.0);
    let g3 = gamma_gradient(&[1.0, 0.0, 0.0], dim(3)).unwrap();
    assert!((g3[0] + 1.0 / (4.0 * PI)).abs() < 1e-15);
}

#[test]
fn kernel_gradient_matches_differences() {
    let h = 1e-5;
    for x in [vec![0.7], vec![0.3, -1.1], vec![0.5, 0.2, -0.9]] {
        let n = dim(x.len());
        let g = gamma_gradient(&x, n).unwrap();
        for j in 0..x.len() {
            let (mut a, mut b) = (x.clone(), x.clone());
            a[j] += h;
            b[j] -= h;
            let fd = (gamma(&a, n).unwrap() - gamma(&b, n).unwrap()) / (2.0 * h);
            assert!((fd - g[j]).abs() < 1e-8, "{x:?} {j}");
        }
    }
}

#[test]
fn ellipsoidal_coordinate_examples() {
    let e = Ellipsoid::new(vec![1.0, 1.0]).unwrap();
    assert!((e.sigma(&[2.0, 0.0]).finite().unwrap() - 3.0).abs() < 1e-12);
    assert!(e.sigma(&[0.0, 0.0]).finite().is_none());
    let e = Ellipsoid::new(vec![2.0, 0.5, 1.0]).unwrap();
    let t: f64 = 0.4;
    let on = [2.0 * t.cos(), 0.5 * t.sin(), 0.0];
    assert!(e.sigma(&on).finite().unwrap().abs() < 1e-12);
}

#[test]
fn isotropic_line_example() {
    let eq = IsotropicEquilibrium::new(2.0, dim(1)).unwrap();
    assert!((eq.radius() - 1.0).abs() < 1e-15);
    assert!((eq.phi_e(&[2.0]) - 0.5).abs() < 1e-14);
    assert_eq!(eq.phi_e(&[0.4]), 0.0);
}

#[test]
fn isotropic_quadratic_trap_gives_the_ball() {
    // |x|^2/(2N) is the quadratic trap with lambda_j = sqrt(N)
    for n in [2usize, 3] {
        let m = 2.5;
        let iso = IsotropicEquilibrium::new(m, dim(n)).unwrap();
        let quad = QuadraticEquilibrium::new(vec![(n as f64).sqrt(); n], m).unwrap();
        for a in quad.axes() {
            assert!((a - iso.radius()).abs() < 1e-10, "{a} vs {}", iso.radius());
        }
        for x in [[1.5, 0.2, 0.1], [0.1, -2.0, 0.4], [0.2, 0.1, 0.0]] {
            let x = &x[..n];
            assert!((quad.phi_e(x) - iso.phi_e(x)).abs() < 1e-9, "{x:?}");
            assert!((quad.density(x) - iso.density(x)).abs() < 1e-12);
        }
    }
}

#[test]
fn radial_profile_reduces_to_isotropic() {
    for n in [2usize, 3] {
        let m = 4.0;
        let profile = Arc::new(PowerLaw::new(0.5 / n as f64, 2.0, 0.0).unwrap());
        let rad = RadialEquilibrium::new(profile, m, dim(n)).unwrap();
        let iso = IsotropicEquilibrium::new(m, dim(n)).unwrap();
        assert!((rad.radius() - iso.radius()).abs() < 1e-10);
        for r in [0.3, 1.9, 2.7] {
            let mut x = vec![0.0; n];
            x[n - 1] = r;
            assert!((rad.phi_e(&x) - iso.phi_e(&x)).abs() < 1e-9, "N={n} r={r}");
            assert!((rad.density(&x) - iso.density(&x)).abs() < 1e-10);
        }
    }
}

#[test]
fn radial_potential_solves_the_exterior_equation() {
    // -Delta Phi_e = Delta Phi_ext outside the support, for phi(r) = r^3
    let eq = RadialEquilibrium::new(Arc::new(PowerLaw::new(1.0, 3.0, 0.0).unwrap()), 5.0, dim(2)).unwrap();
    let r0 = eq.radius();
    let h = 1e-3;
    for r in [1.5 * r0, 2.0 * r0] {
        let x = [r * 0.6, r * 0.8];
        let mut lap = -4.0 * eq.phi_e(&x);
        for (dx, dy) in [(h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h)] {
            lap += eq.phi_e(&[x[0] + dx, x[1] + dy]);
        }
        lap /= h * h;
        // Laplacian of r^3 in the plane
        let expect = 9.0 * r;
        assert!((lap - expect).abs() < 1e-3 * expect, "{lap} vs {expect}");
    }
}

#[test]
fn convex1d_harmonic_values() {
    let eq = Convex1dEquilibrium::new(Arc::new(Polynomial1d::new(vec![0.0, 0.0, 0.5]).unwrap()), 2.0).unwrap();
    assert!((eq.phi_e(&[2.0]) - 0.5).abs() < 1e-12);
    for x in [-0.9, 0.0, 0.7] {
        assert!((eq.density(&[x]) - 1.0).abs() < 1e-14);
    }
    assert_eq!(eq.density(&[1.5]), 0.0);
    for x in [-2.5, 1.3, 2.0] {
        assert!((eq.phi_e_by_convolution(x).unwrap() - eq.phi_e(&[x])).abs() < 1e-9);
    }
}

#[test]
fn quadratic_potential_near_the_boundary() {
    let eq = QuadraticEquilibrium::new(vec![2f64.sqrt(), 1.0], 3.0 * PI).unwrap();
    let e = eq.ellipsoid().clone();
    let mut grad_ratio = Vec::new();
    let mut value_ratio = Vec::new();
    for k in 2..=6 {
        let d = 10f64.powi(-k);
        let t: f64 = 0.9;
        let p = [2.0 * t.cos(), t.sin()];
        let nrm = [p[0] / 4.0, p[1]];
        let l = nrm[0].hypot(nrm[1]);
        let x = [p[0] + d * nrm[0] / l, p[1] + d * nrm[1] / l];
        let s = e.sigma(&x).finite().unwrap();
        let mut g = [0.0; 2];
        eq.grad_phi_e(&x, &mut g);
        grad_ratio.push(g[0].hypot(g[1]) / s);
        value_ratio.push(eq.phi_e(&x) / (s * s));
    }
    let bounded = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(0.0, f64::max);
        lo > 0.0 && hi / lo < 1.5
    };
    assert!(bounded(&grad_ratio), "{grad_ratio:?}");
    assert!(bounded(&value_ratio), "{value_ratio:?}");
}

#[test]
fn flux_bound_examples() {
    let eq = IsotropicEquilibrium::new(PI, dim(2)).unwrap();
    let samples: Vec<Vec<f64>> = (1..=6)
        .flat_map(|k| {
            let r = 1.0 + 10f64.powi(-k);
            (0..16).map(move |j| {
                let t = 2.0 * PI * j as f64 / 16.0;
                vec![r * t.cos(), r * t.sin()]
            })
        })
        .collect();
    assert_eq!(boundary_flux_bound(&eq, |_, out| out.fill(0.0), &samples), 0.0);
    let rot = EllipticRotation::rigid(1.0, 1.0, 0.0).unwrap();
    let c = boundary_flux_bound(&eq, |x, out| rot.velocity(0.0, x, out), &samples);
    assert!(c.is_finite() && c < 1e-6, "{c}");
    // a radial field is not tangent; the ratio blows up like 1/distance
    let c = boundary_flux_bound(&eq, |x, out| out.copy_from_slice(x), &samples);
    assert!(c > 1e5);
}

#[test]
fn registry_builds_every_class() {
    let reg = solver_registry();
    let mut iso = PotentialParams::new("isotropic", PI);
    iso.dim = Some(2);
    let mut quad = PotentialParams::new("quadratic", 3.0);
    quad.lambda = Some(vec![2.0, 1.0]);
    let mut rad = PotentialParams::new("radial", 2.0 * PI);
    rad.dim = Some(2);
    rad.coef = Some(1.0);
    rad.exponent = Some(1.0);
    rad.offset = Some(0.0);
    let mut c1 = PotentialParams::new("convex1d", 2.0);
    c1.coefficients = Some(vec![0.0, 0.0, 0.5]);
    for p in [iso, quad, rad, c1] {
        let eq = reg.get(&p.class).unwrap().solve(&p).unwrap();
        assert_eq!(eq.class(), p.class);
        assert!((eq.mass() - p.mass).abs() < 1e-12);
    }
    assert!(reg.get("obstacle").is_err());
}
