use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::ensemble::ParticleEnsemble;
use super::rng::{StreamKey, INIT_PHASE};
use crate::equilibrium::Equilibrium;
use crate::error::{invalid, Error, Result};
use crate::fluid::VelocityField;
use crate::quadrature::gauss_legendre;

/// Largest number of candidates drawn for a single particle.
const MAX_TRIES: usize = 10_000;

/// `chi(x) = (1 - |x - c|^2 / r^2)^4` inside `B(c, r)`, zero outside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Bump {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(invalid(format!("bump radius must be positive, got {radius}")));
        }
        Ok(Self { center, radius })
    }

    fn s(&self, x: &[f64]) -> f64 {
        let d2: f64 = x.iter().zip(&self.center).map(|(a, b)| (a - b).powi(2)).sum();
        d2 / (self.radius * self.radius)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let q = 1.0 - self.s(x);
        if q > 0.0 {
            q.powi(4)
        } else {
            0.0
        }
    }

    pub fn laplacian(&self, x: &[f64]) -> f64 {
        let s = self.s(x);
        let q = 1.0 - s;
        if q <= 0.0 {
            return 0.0;
        }
        let r2 = self.radius * self.radius;
        let n = self.center.len() as f64;
        (48.0 * q * q * s - 8.0 * n * q.powi(3)) / r2
    }

    /// `sup |Delta chi|`, attained at the center.
    pub fn max_abs_laplacian(&self) -> f64 {
        8.0 * self.center.len() as f64 / (self.radius * self.radius)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    /// Independent rejection sampling per particle.
    Random,
    /// Low-discrepancy positions and stratified Gaussian velocities.
    #[default]
    Quiet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitParams {
    pub sigma: f64,
    pub delta: f64,
    /// Defaults to a bump at the center of `K` with 0.9 times its inradius.
    pub bump: Option<Bump>,
    pub n_particles: usize,
    pub seed: u64,
    pub sampling: Sampling,
    pub eps: f64,
    pub theta: f64,
}

fn sphere_points(center: &[f64], r: f64) -> Vec<Vec<f64>> {
    match center.len() {
        1 => vec![vec![center[0] - r], vec![center[0] + r]],
        2 => (0..128)
            .map(|k| {
                let t = k as f64 * std::f64::consts::TAU / 128.0;
                vec![center[0] + r * t.cos(), center[1] + r * t.sin()]
            })
            .collect(),
        _ => {
            let m = 400;
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..m)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / m as f64;
                    let rho = (1.0 - z * z).sqrt();
                    let t = golden * k as f64;
                    vec![
                        center[0] + r * rho * t.cos(),
                        center[1] + r * rho * t.sin(),
                        center[2] + r * z,
                    ]
                })
                .collect()
        }
    }
}

struct Target<'a> {
    eq: &'a dyn Equilibrium,
    bump: Bump,
    delta: f64,
}

impl Target<'_> {
    fn density(&self, x: &[f64]) -> f64 {
        let n = self.eq.density(x);
        if self.delta == 0.0 {
            n
        } else {
            n - self.delta * self.bump.laplacian(x)
        }
    }
}

fn validate<'a>(eq: &'a dyn Equilibrium, p: &InitParams) -> Result<Target<'a>> {
    let dim = eq.dim().get();
    if p.n_particles == 0 {
        return Err(invalid("need at least one particle"));
    }
    if !(p.sigma >= 0.0 && p.delta >= 0.0 && p.sigma.is_finite() && p.delta.is_finite()) {
        return Err(invalid("sigma and delta must be nonnegative"));
    }
    let dom = eq.domain();
    let bump = match &p.bump {
        Some(b) => b.clone(),
        None => Bump::new(dom.center(), 0.9 * dom.inradius())?,
    };
    if bump.center.len() != dim {
        return Err(invalid("bump center has the wrong dimension"));
    }
    if p.delta > 0.0 {
        if sphere_points(&bump.center, bump.radius)
            .iter()
            .any(|x| !dom.contains(x))
        {
            return Err(invalid("the bump support must lie inside K"));
        }
        // n_e - delta Delta chi >= 0 on a lattice over the bump support
        let k = match dim {
            1 => 2001,
            2 => 101,
            _ => 31,
        };
        let total = (k as usize).pow(dim as u32);
        let mut x = vec![0.0; dim];
        for idx in 0..total {
            let mut rem = idx;
            for j in 0..dim {
                let t = (rem % k) as f64 / (k - 1) as f64;
                rem /= k;
                x[j] = bump.center[j] + bump.radius * (2.0 * t - 1.0);
            }
            if !dom.contains(&x) {
                continue;
            }
            let v = eq.density(&x) - p.delta * bump.laplacian(&x);
            if v < 0.0 {
                return Err(invalid(format!(
                    "n_e - delta * Delta chi is negative ({v:e}) at {x:?}; reduce delta"
                )));
            }
        }
    }
    Ok(Target {
        eq,
        bump,
        delta: p.delta,
    })
}

/// Samples well-prepared initial data: positions from `n_e - delta Delta chi`,
/// velocities `V_init(x) + sigma xi`, equal weights `m / n`.
pub fn init_well_prepared(
    eq: &dyn Equilibrium,
    v_init: &dyn VelocityField,
    params: &InitParams,
) -> Result<ParticleEnsemble> {
    let dim = eq.dim().get();
    if v_init.dim() != dim {
        return Err(invalid("initial velocity field has the wrong dimension"));
    }
    let target = validate(eq, params)?;
    let key = StreamKey::new(params.seed);
    let n = params.n_particles;
    let (positions, mut xi) = match params.sampling {
        Sampling::Random => random_positions(&target, params, &key)?,
        Sampling::Quiet => {
            let pos = if dim == 1 {
                quantile_positions(&target, n)?
            } else {
                halton_positions(&target, n)?
            };
            (pos, stratified_normals(n, dim, &key)?)
        }
    };
    let mut velocities = vec![0.0; n * dim];
    for i in 0..n {
        let x = &positions[i * dim..(i + 1) * dim];
        let v = &mut velocities[i * dim..(i + 1) * dim];
        v_init.velocity(0.0, x, v);
        for j in 0..dim {
            v[j] += params.sigma * xi[i * dim + j];
        }
    }
    xi.clear();
    let w = eq.mass() / n as f64;
    ParticleEnsemble::new(dim, positions, velocities, vec![w; n], params.eps, params.theta)
}

fn envelope(target: &Target<'_>) -> Result<f64> {
    let bound = target.eq.density_bound().ok_or_else(|| {
        invalid("rejection sampling needs a bounded equilibrium density")
    })?;
    Ok(bound + target.delta * target.bump.max_abs_laplacian())
}

fn random_positions(
    target: &Target<'_>,
    p: &InitParams,
    key: &StreamKey,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let dim = target.eq.dim().get();
    let env = envelope(target)?;
    let (lo, hi) = target.eq.domain().bounding_box();
    let draws: Vec<Result<(Vec<f64>, Vec<f64>, usize)>> = (0..p.n_particles)
        .into_par_iter()
        .map(|i| {
            let mut rng = key.stream(i, INIT_PHASE);
            let mut x = vec![0.0; dim];
            for tries in 1..=MAX_TRIES {
                for j in 0..dim {
                    x[j] = lo[j] + (hi[j] - lo[j]) * rng.random::<f64>();
                }
                let u = env * rng.random::<f64>();
                if u < target.density(&x) {
                    let xi = (0..dim)
                        .map(|_| StandardNormal.sample(&mut rng))
                        .collect::<Vec<f64>>();
                    return Ok((x, xi, tries));
                }
            }
            Err(Error::Config(format!(
                "rejection sampling gave up after {MAX_TRIES} candidates"
            )))
        })
        .collect();
    let mut pos = Vec::with_capacity(p.n_particles * dim);
    let mut xi = Vec::with_capacity(p.n_particles * dim);
    let mut tries = 0usize;
    for d in draws {
        let (x, z, t) = d?;
        pos.extend(x);
        xi.extend(z);
        tries += t;
    }
    let efficiency = p.n_particles as f64 / tries as f64;
    if efficiency < 0.01 {
        return Err(Error::Config(format!(
            "rejection efficiency {efficiency:.4} is below 1%"
        )));
    }
    Ok((pos, xi))
}

/// Positions at the quantiles `(i + 1/2)/n` of the target density.
fn quantile_positions(target: &Target<'_>, n: usize) -> Result<Vec<f64>> {
    let (lo, hi) = target.eq.domain().bounding_box();
    let (a, b) = (lo[0], hi[0]);
    let panels = 4096;
    let width = (b - a) / panels as f64;
    let (gx, gw) = gauss_legendre(8);
    let seg = |l: f64, r: f64| -> f64 {
        let (c, hw) = (0.5 * (l + r), 0.5 * (r - l));
        gx.iter()
            .zip(&gw)
            .map(|(x, w)| w * target.density(&[c + hw * x]).max(0.0))
            .sum::<f64>()
            * hw
    };
    let mut cum = vec![0.0; panels + 1];
    for k in 0..panels {
        let l = a + k as f64 * width;
        cum[k + 1] = cum[k] + seg(l, l + width);
    }
    let total = cum[panels];
    if !(total > 0.0) {
        return Err(invalid("target density has no mass"));
    }
    let out = (0..n)
        .into_par_iter()
        .map(|i| {
            let t = (i as f64 + 0.5) / n as f64 * total;
            let k = cum.partition_point(|c| *c <= t).clamp(1, panels) - 1;
            let l = a + k as f64 * width;
            let (mut x0, mut x1) = (l, l + width);
            for _ in 0..60 {
                let mid = 0.5 * (x0 + x1);
                if cum[k] + seg(l, mid) < t {
                    x0 = mid;
                } else {
                    x1 = mid;
                }
            }
            0.5 * (x0 + x1)
        })
        .collect();
    Ok(out)
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Rejection sampling driven by a Halton sequence instead of random numbers.
fn halton_positions(target: &Target<'_>, n: usize) -> Result<Vec<f64>> {
    const BASES: [u64; 4] = [2, 3, 5, 7];
    let dim = target.eq.dim().get();
    let env = envelope(target)?;
    let (lo, hi) = target.eq.domain().bounding_box();
    let mut pos = Vec::with_capacity(n * dim);
    let mut x = vec![0.0; dim];
    let limit = (n as u64).saturating_mul(100);
    let mut accepted = 0;
    let mut i = 0u64;
    while accepted < n {
        i += 1;
        if i > limit {
            return Err(Error::Config(
                "rejection efficiency is below 1%".to_string(),
            ));
        }
        for j in 0..dim {
            x[j] = lo[j] + (hi[j] - lo[j]) * radical_inverse(i, BASES[j]);
        }
        let u = env * radical_inverse(i, BASES[dim]);
        if u < target.density(&x) {
            pos.extend_from_slice(&x);
            accepted += 1;
        }
    }
    Ok(pos)
}

/// Normal quantiles at `(k + 1/2)/n`, independently permuted per component.
fn stratified_normals(n: usize, dim: usize, key: &StreamKey) -> Result<Vec<f64>> {
    let normal = Normal::new(0.0, 1.0).map_err(|e| invalid(e.to_string()))?;
    let q: Vec<f64> = (0..n)
        .map(|k| normal.inverse_cdf((k as f64 + 0.5) / n as f64))
        .collect();
    let mut out = vec![0.0; n * dim];
    for j in 0..dim {
        let mut rng = key.stream(usize::MAX - j, INIT_PHASE);
        let mut perm: Vec<usize> = (0..n).collect();
        for k in (1..n).rev() {
            let r = rng.random_range(0..=k);
            perm.swap(k, r);
        }
        for (i, p) in perm.into_iter().enumerate() {
            out[i * dim + j] = q[p];
        }
    }
    Ok(out)
}
