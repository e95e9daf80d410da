//! Runtime property checks, registered by name. Every check reports a
//! margin: the tolerance minus the observed error, so negative means failure.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::Config;
use crate::diagnostics::{fit_gronwall_rate, gronwall_tolerance};
use crate::equilibrium::{
    boundary_flux_bound, ellipsoid_newtonian_potential, z_inverse, z_map, Convex1dEquilibrium,
    Equilibrium, Polynomial1d, PowerLaw, QuadraticEquilibrium, RadialEquilibrium,
};
use crate::error::Result;
use crate::fluid::{
    extend_divfree, limit_residual, limit_residual_fd, EllipticRotation, LimitField, VelocityField,
};
use crate::geometry::{Ellipsoid, SpaceDim};
use crate::kinetic::{fokker_planck_step, ParticleEnsemble, StreamKey};
use crate::pipeline::{decreasing_within, simulate, sweep};
use crate::registry::{Named, Registry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub test: String,
    pub status: Status,
    pub margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

pub trait Check: Named + Send + Sync {
    /// Returns `(tolerance - error, detail)`.
    fn evaluate(&self) -> Result<(f64, String)>;

    fn run(&self) -> CheckReport {
        match self.evaluate() {
            Ok((margin, detail)) => CheckReport {
                test: self.name().to_string(),
                status: if margin >= 0.0 { Status::Pass } else { Status::Fail },
                margin,
                detail: Some(detail),
            },
            Err(e) => CheckReport {
                test: self.name().to_string(),
                status: Status::Error,
                margin: f64::NEG_INFINITY,
                detail: Some(e.to_string()),
            },
        }
    }
}

struct FnCheck {
    name: &'static str,
    f: fn() -> Result<(f64, String)>,
}

impl Named for FnCheck {
    fn name(&self) -> &'static str {
        self.name
    }
}

impl Check for FnCheck {
    fn evaluate(&self) -> Result<(f64, String)> {
        (self.f)()
    }
}

fn harmonic_config(eps: f64, particles: usize, theta: f64, nodes: usize, t: f64) -> Result<Config> {
    Config::from_toml(&format!(
        r#"
[potential]
class = "convex1d"
mass = 2.0
coefficients = [0.0, 0.0, 0.5]

[simulation]
eps = {eps:e}
theta = {theta:e}
particles = {particles}
cfl = 0
final_time = {t:e}
grid_nodes = {nodes}
seed = 1

[diagnostics]
cadence = 20
"#
    ))
}

fn z_roundtrip() -> Result<(f64, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for dim in [2, 3] {
        for _ in 0..1000 {
            let alpha: Vec<f64> = (0..dim).map(|_| rng.random_range(0.1..10.0)).collect();
            let back = z_inverse(&z_map(&alpha)?)?;
            for (a, b) in alpha.iter().zip(&back) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    Ok((1e-8 - worst, format!("max |alpha - Z^-1(Z(alpha))| = {worst:e}")))
}

fn ellipsoid_ball() -> Result<(f64, String)> {
    let e = Ellipsoid::new(vec![1.0; 3])?;
    let c = ellipsoid_newtonian_potential(&[0.0; 3], &e)?;
    let r2 = ellipsoid_newtonian_potential(&[2.0, 0.0, 0.0], &e)?;
    let err = (c - 0.5).abs().max((r2 - 1.0 / 6.0).abs());
    Ok((1e-8 - err, format!("center {c}, |x|=2 {r2}")))
}

fn ellipsoid_laplacian() -> Result<(f64, String)> {
    let e = Ellipsoid::new(vec![2.0, 1.0, 1.0])?;
    let h = 0.02;
    let pts = [[0.3, 0.2, -0.1], [1.2, 0.0, 0.3], [3.0, 0.5, 0.2], [0.0, 2.0, 1.0]];
    let mut worst: f64 = 0.0;
    for p in pts {
        let mut lap = -6.0 * ellipsoid_newtonian_potential(&p, &e)?;
        for j in 0..3 {
            for s in [-h, h] {
                let mut q = p;
                q[j] += s;
                lap += ellipsoid_newtonian_potential(&q, &e)?;
            }
        }
        lap /= h * h;
        let expect = if e.contains(&p) { -1.0 } else { 0.0 };
        worst = worst.max((lap - expect).abs());
    }
    Ok((1e-2 - worst, format!("max Laplacian error {worst:e} at h = {h}")))
}

fn quadratic_mass() -> Result<(f64, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let dim = 2 + k % 2;
        let lambda: Vec<f64> = (0..dim).map(|_| rng.random_range(0.5..2.0)).collect();
        let m = rng.random_range(0.5..10.0);
        let eq = QuadraticEquilibrium::new(lambda.clone(), m)?;
        let a = eq.axes();
        let b1 = SpaceDim::new(dim)?.unit_ball_volume();
        let implied = b1 * a.iter().product::<f64>() * lambda.iter().map(|l| l.powi(-2)).sum::<f64>();
        worst = worst.max(((implied - m) / m).abs());
        if dim == 2 {
            let ratio = (lambda[0] / lambda[1]).powi(2);
            worst = worst.max(((a[0] / a[1]) - ratio).abs() / ratio);
        }
    }
    Ok((1e-8 - worst, format!("max relative mass/aspect error {worst:e}")))
}

fn convex1d_harmonic() -> Result<(f64, String)> {
    let eq = Convex1dEquilibrium::new(Arc::new(Polynomial1d::new(vec![0.0, 0.0, 0.5])?), 2.0)?;
    let (lo, hi) = eq.interval();
    let mut worst = (lo + 1.0).abs().max((hi - 1.0).abs()).max((eq.robin_constant() + 0.5).abs());
    for k in 0..=600 {
        let x = -3.0 + 0.01 * k as f64;
        let expect = 0.5 * (x.abs() - 1.0).max(0.0).powi(2);
        worst = worst.max((eq.phi_e(&[x]) - expect).abs());
    }
    Ok((1e-10 - worst, format!("max error {worst:e}")))
}

fn radial_example() -> Result<(f64, String)> {
    let eq = RadialEquilibrium::new(Arc::new(PowerLaw::new(1.0, 1.0, 0.0)?), 2.0 * PI, SpaceDim::TWO)?;
    let mut worst = (eq.radius() - 1.0).abs();
    worst = worst.max((eq.mass_by_quadrature()? - 2.0 * PI).abs());
    for r in [0.1, 0.5, 0.9] {
        worst = worst.max((eq.density(&[r, 0.0]) - 1.0 / r).abs());
    }
    worst = worst.max(eq.phi_e(&[eq.radius(), 0.0]).abs());
    Ok((1e-8 - worst, format!("R = {}", eq.radius())))
}

/// Points at distance `d` outside the ellipse with semi-axes `a`.
pub fn ellipse_offsets(a: [f64; 2], d: f64, count: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|k| {
            let t = 2.0 * PI * (k as f64 + 0.5) / count as f64;
            let p = [a[0] * t.cos(), a[1] * t.sin()];
            let n = [p[0] / (a[0] * a[0]), p[1] / (a[1] * a[1])];
            let nn = n[0].hypot(n[1]);
            vec![p[0] + d * n[0] / nn, p[1] + d * n[1] / nn]
        })
        .collect()
}

fn boundary_flux() -> Result<(f64, String)> {
    // lambda = (sqrt 2, 1), m = 3 pi gives the ellipse with semi-axes (2, 1)
    let eq = QuadraticEquilibrium::new(vec![2f64.sqrt(), 1.0], 3.0 * PI)?;
    let a = [eq.axes()[0], eq.axes()[1]];
    let field = EllipticRotation::new(a, 1.0, 0.0)?;
    let sups: Vec<f64> = (1..=6)
        .map(|k| {
            let pts = ellipse_offsets(a, 10f64.powi(-k), 400);
            boundary_flux_bound(&eq, |x, out| field.velocity(0.0, x, out), &pts)
        })
        .collect();
    let finite = sups.iter().all(|s| s.is_finite());
    let growth = (sups[5] - sups[3]) / sups[3];
    let margin = if finite { 1e-2 - growth } else { f64::NEG_INFINITY };
    Ok((margin, format!("sup ratios {sups:?}")))
}

fn energy_conservation() -> Result<(f64, String)> {
    let out = simulate(&harmonic_config(1e-2, 10_000, 0.0, 2048, 1.0)?, &mut |_| Ok(()))?;
    let e0 = out.series.rows[0].energy_total;
    let drift = out
        .series
        .rows
        .iter()
        .map(|r| (r.energy_total - e0).abs() / e0)
        .fold(0.0, f64::max);
    let q0 = out.series.rows[0].charge;
    let charge_ok = out.series.rows.iter().all(|r| r.charge == q0);
    let margin = if charge_ok { 1e-3 - drift } else { f64::NEG_INFINITY };
    Ok((margin, format!("relative drift {drift:e}")))
}

fn quasineutral_sweep() -> Result<(f64, String)> {
    let cfg = harmonic_config(1e-1, 10_000, 0.0, 8192, 1.0)?;
    let rows = sweep(&cfg, &[1e-1, 1e-2, 1e-3])?;
    let h: Vec<f64> = rows.iter().map(|r| r.0.h_final).collect();
    let d: Vec<f64> = rows.iter().map(|r| r.0.hminus1_final).collect();
    let p: Vec<f64> = rows.iter().map(|r| r.0.pairing_sup).collect();
    let ok = decreasing_within(&h, 0.2) && decreasing_within(&d, 0.2) && decreasing_within(&p, 0.2);
    let ratio = h[2] / h[0];
    Ok((
        if ok { 1.0 - ratio } else { -1.0 },
        format!("H {h:?}, Hminus1 {d:?}, sup pairing {p:?}"),
    ))
}

fn gronwall_rotation() -> Result<(f64, String)> {
    let cfg = Config::from_toml(
        r#"
[potential]
class = "isotropic"
mass = 3.141592653589793
dim = 2

[simulation]
eps = 1e-2
particles = 100000
final_time = 0.5
cfl = 0
grid_nodes = 256
seed = 1

[flow]
family = "rigid-rotation"
omega = 1.0

[diagnostics]
cadence = 5
"#,
    )?;
    let out = simulate(&cfg, &mut |_| Ok(()))?;
    let tol = gronwall_tolerance(out.series.rows[0].h_mod, out.ensemble.len());
    let c = fit_gronwall_rate(&out.series, tol);
    Ok((10.0 - c, format!("fitted C = {c}")))
}

fn ou_moments() -> Result<(f64, String)> {
    let n = 100_000;
    let theta = 0.3;
    let v0 = vec![1.5; n];
    let mut ens = ParticleEnsemble::new(1, vec![0.0; n], v0, vec![1.0; n], 1.0, theta)?;
    let key = StreamKey::new(3);
    let dt = 0.05;
    for k in 0..20 {
        fokker_planck_step(&mut ens, dt, &key, k + 1);
    }
    let t = 20.0 * dt;
    let mean = ens.velocities.iter().sum::<f64>() / n as f64;
    let var = ens.velocities.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    let m_exp = 1.5 * (-t).exp();
    let v_exp = theta * (1.0 - (-2.0 * t).exp());
    let err = ((mean - m_exp) / m_exp).abs().max(((var - v_exp) / v_exp).abs());
    Ok((0.05 - err, format!("mean {mean}, variance {var}")))
}

fn free_energy() -> Result<(f64, String)> {
    let cfg = harmonic_config(1e-2, 10_000, 0.1, 2048, 1.0)?;
    let runs: Vec<Vec<f64>> = (1..=8)
        .map(|seed| {
            let out = simulate(&cfg.with_seed(seed)?, &mut |_| Ok(()))?;
            Ok(out.series.rows.iter().map(|r| r.free_energy.unwrap_or(f64::NAN)).collect())
        })
        .collect::<Result<_>>()?;
    let (mean, sd) = band(&runs);
    let worst = mean
        .windows(2)
        .zip(sd.windows(2))
        .map(|(m, s)| (m[1] - m[0]) - 3.0 * (s[0] * s[0] + s[1] * s[1]).sqrt())
        .fold(f64::NEG_INFINITY, f64::max);
    Ok((-worst, format!("replica means {mean:?}")))
}

/// Mean and standard error of the mean across replicas, per row.
pub fn band(runs: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let r = runs.len() as f64;
    let rows = runs.iter().map(|v| v.len()).min().unwrap_or(0);
    (0..rows)
        .map(|k| {
            let m = runs.iter().map(|v| v[k]).sum::<f64>() / r;
            let var = runs.iter().map(|v| (v[k] - m).powi(2)).sum::<f64>() / (r - 1.0).max(1.0);
            (m, (var / r).sqrt())
        })
        .unzip()
}

fn extension() -> Result<(f64, String)> {
    let base = Arc::new(EllipticRotation::rigid(1.0, 1.0, 0.0)?);
    let ext = extend_divfree(base.clone(), 1.0)?;
    let (mut a, mut b) = ([0.0; 2], [0.0; 2]);
    let mut vmax: f64 = 0.0;
    let mut mismatch: f64 = 0.0;
    let mut div: f64 = 0.0;
    let d = 1e-4;
    let n = 120;
    for i in 0..=n {
        for j in 0..=n {
            let x = [-2.5 + 5.0 * i as f64 / n as f64, -2.5 + 5.0 * j as f64 / n as f64];
            let r = x[0].hypot(x[1]);
            ext.velocity(0.0, &x, &mut a);
            vmax = vmax.max(a[0].hypot(a[1]));
            if r <= 1.0 {
                base.velocity(0.0, &x, &mut b);
                mismatch = mismatch.max((a[0] - b[0]).abs().max((a[1] - b[1]).abs()));
            } else if r > 2.0 {
                mismatch = mismatch.max(a[0].abs().max(a[1].abs()));
            }
            div = div.max(divergence4(&ext, &x, d).abs());
        }
    }
    let margin = (1e-8 * vmax - div).min(1e-14 - mismatch);
    Ok((margin, format!("max divergence {div:e}, max |V| {vmax}, mismatch {mismatch:e}")))
}

/// Fourth-order centered divergence.
pub fn divergence4(f: &dyn VelocityField, x: &[f64; 2], d: f64) -> f64 {
    let mut v = [0.0; 2];
    let mut total = 0.0;
    for j in 0..2 {
        let mut s = 0.0;
        for (k, c) in [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)] {
            let mut y = *x;
            y[j] += k * d;
            f.velocity(0.0, &y, &mut v);
            s += c * v[j];
        }
        total += s / (12.0 * d);
    }
    total
}

fn limit_residuals() -> Result<(f64, String)> {
    let probes: Vec<(f64, Vec<f64>)> = (0..200)
        .map(|k| {
            let t = 0.01 * k as f64;
            let th = 0.7 * k as f64;
            let r = 0.9 * ((k % 10) as f64 + 0.5) / 10.0;
            (t, vec![2.0 * r * th.cos(), r * th.sin()])
        })
        .collect();
    let fields = [
        EllipticRotation::rigid(1.0, 1.3, 0.5)?,
        EllipticRotation::new([2.0, 1.0], 0.8, 0.2)?,
    ];
    let mut worst: f64 = 0.0;
    let mut order: f64 = f64::INFINITY;
    for f in &fields {
        worst = worst.max(limit_residual(f, f.friction(), &probes).max);
        let coarse = limit_residual_fd(f, f.friction(), &probes, 1e-2).max;
        let fine = limit_residual_fd(f, f.friction(), &probes, 5e-3).max;
        if coarse > 1e-13 {
            order = order.min((coarse / fine).log2());
        }
    }
    let margin = (1e-6 - worst).min(if order.is_finite() { order - 1.8 } else { 0.0 });
    Ok((margin, format!("analytic residual {worst:e}, FD order {order}")))
}

pub fn check_registry() -> Registry<dyn Check> {
    let mut r: Registry<dyn Check> = Registry::new("check");
    let checks: [(&'static str, fn() -> Result<(f64, String)>); 14] = [
        ("z-roundtrip", z_roundtrip),
        ("ellipsoid-ball", ellipsoid_ball),
        ("ellipsoid-laplacian", ellipsoid_laplacian),
        ("quadratic-mass", quadratic_mass),
        ("convex1d-harmonic", convex1d_harmonic),
        ("radial-example", radial_example),
        ("boundary-flux", boundary_flux),
        ("energy-conservation", energy_conservation),
        ("quasineutral-sweep", quasineutral_sweep),
        ("gronwall-rotation", gronwall_rotation),
        ("ou-moments", ou_moments),
        ("free-energy", free_energy),
        ("extension", extension),
        ("limit-residual", limit_residuals),
    ];
    for (name, f) in checks {
        r.register(Arc::new(FnCheck { name, f }));
    }
    r
}

/// Runs the named checks, or all of them when `names` is empty.
pub fn run_checks(names: &[String]) -> Result<Vec<CheckReport>> {
    let reg = check_registry();
    let selected: Vec<String> = if names.is_empty() {
        reg.names().into_iter().map(String::from).collect()
    } else {
        names.to_vec()
    };
    selected
        .iter()
        .map(|n| Ok(reg.get(n)?.run()))
        .collect()
}
