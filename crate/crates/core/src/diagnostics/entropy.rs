use std::f64::consts::PI;

use rayon::prelude::*;

use super::{modulated_energy, EnergyComponents};
use crate::equilibrium::Equilibrium;
use crate::error::{invalid, Result};
use crate::fluid::VelocityField;
use crate::kinetic::{FieldGrid, ParticleEnsemble};
use crate::quadrature::{integrate_to_infinity, Tolerance};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropySettings {
    pub theta: f64,
    /// `int exp(-Phi_e / (eps theta))`.
    pub z_eps: f64,
}

impl EntropySettings {
    pub fn new(eq: &dyn Equilibrium, eps: f64, theta: f64) -> Result<Self> {
        Ok(Self {
            theta,
            z_eps: partition_function(eq, eps, theta)?,
        })
    }
}

/// Histogram estimate of `int f ln f` over phase space, with
/// `ceil(n^(1/(4N)))` bins per axis spanning the sample range.
pub fn histogram_entropy(ens: &ParticleEnsemble) -> f64 {
    let n = ens.len();
    if n == 0 {
        return 0.0;
    }
    let dim = ens.dim();
    let d = 2 * dim;
    let bins = (n as f64).powf(1.0 / (2.0 * d as f64)).ceil().max(1.0) as usize;
    let coord = |i: usize, a: usize| {
        if a < dim {
            ens.positions[i * dim + a]
        } else {
            ens.velocities[i * dim + a - dim]
        }
    };
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for i in 0..n {
        for a in 0..d {
            let c = coord(i, a);
            lo[a] = lo[a].min(c);
            hi[a] = hi[a].max(c);
        }
    }
    let mut width = vec![0.0; d];
    for a in 0..d {
        let span = (hi[a] - lo[a]).max(1e-12 * (1.0 + hi[a].abs()));
        // widen slightly so the maximum falls inside the last bin
        let span = span * (1.0 + 1e-9);
        width[a] = span / bins as f64;
    }
    let total_bins = bins.pow(d as u32);
    let mut mass = vec![0.0; total_bins];
    for i in 0..n {
        let mut idx = 0;
        for a in (0..d).rev() {
            let k = (((coord(i, a) - lo[a]) / width[a]) as usize).min(bins - 1);
            idx = idx * bins + k;
        }
        mass[idx] += ens.weights[i];
    }
    let vol: f64 = width.iter().product();
    mass.iter()
        .filter(|m| **m > 0.0)
        .map(|m| m * (m / vol).ln())
        .sum()
}

/// `Z_eps = int exp(-Phi_e / (eps theta)) dx`: adaptive quadrature in one
/// dimension, a midpoint lattice over an enlarged box otherwise.
pub fn partition_function(eq: &dyn Equilibrium, eps: f64, theta: f64) -> Result<f64> {
    if !(theta > 0.0) {
        return Err(invalid("the modulated entropy needs theta > 0"));
    }
    let s = eps * theta;
    let dom = eq.domain();
    let (lo, hi) = dom.bounding_box();
    let dim = lo.len();
    let weight = |x: &[f64]| (-eq.phi_e(x) / s).exp();
    if dim == 1 {
        let tol = Tolerance::new(1e-14, 1e-11);
        let scale = s.sqrt().max(1e-3);
        let right = integrate_to_infinity::<1, _>(|x| [weight(&[x])], hi[0], scale, tol)?.value[0];
        let left = integrate_to_infinity::<1, _>(|y| [weight(&[-y])], -lo[0], scale, tol)?.value[0];
        return Ok(hi[0] - lo[0] + right + left);
    }
    let margin = dom.diameter();
    let nodes: usize = if dim == 2 { 400 } else { 80 };
    let h: Vec<f64> = (0..dim)
        .map(|j| (hi[j] - lo[j] + 2.0 * margin) / nodes as f64)
        .collect();
    let total = nodes.pow(dim as u32);
    let sum: f64 = (0..total)
        .into_par_iter()
        .with_min_len(4096)
        .map(|f| {
            let mut x = [0.0; 3];
            let mut rem = f;
            for j in 0..dim {
                x[j] = lo[j] - margin + ((rem % nodes) as f64 + 0.5) * h[j];
                rem /= nodes;
            }
            weight(&x[..dim])
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    Ok(sum * h.iter().product::<f64>())
}

pub(crate) fn assemble_fp(
    h: &EnergyComponents,
    entropy: f64,
    s: &EntropySettings,
    mass: f64,
    dim: usize,
) -> f64 {
    let th = s.theta;
    h.total() + th * entropy + 0.5 * dim as f64 * mass * th * (2.0 * PI * th).ln()
        - th * mass * (mass / s.z_eps).ln()
}

/// `H + theta int f ln f + N m theta ln(2 pi theta)/2 - theta m ln(m / Z_eps)`,
/// the entropy integral estimated by [`histogram_entropy`].
pub fn modulated_entropy_fp(
    ens: &ParticleEnsemble,
    grid: &FieldGrid,
    eq: &dyn Equilibrium,
    velocity: &dyn VelocityField,
    t: f64,
    settings: &EntropySettings,
) -> Result<f64> {
    if !(settings.theta > 0.0) {
        return Err(invalid("the modulated entropy needs theta > 0"));
    }
    let h = modulated_energy(ens, grid, eq, velocity, t);
    Ok(assemble_fp(
        &h,
        histogram_entropy(ens),
        settings,
        eq.mass(),
        ens.dim(),
    ))
}
