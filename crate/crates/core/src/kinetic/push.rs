use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::ensemble::ParticleEnsemble;
use super::grid::FieldGrid;
use super::rng::StreamKey;
use super::CHUNK;
use crate::equilibrium::Equilibrium;
use crate::error::{Error, Result};

/// Total acceleration `-(1/eps) grad Phi_e - (1/sqrt eps) grad psi` at `x`.
/// Returns false when `x` lies outside the grid.
pub fn acceleration(
    grid: &FieldGrid,
    eq: &dyn Equilibrium,
    eps: f64,
    x: &[f64],
    out: &mut [f64],
) -> bool {
    let dim = x.len();
    let mut gp = [0.0; 3];
    let inside = grid.gather(x, &mut gp[..dim]);
    eq.grad_phi_e(x, out);
    let (a, b) = (1.0 / eps, 1.0 / eps.sqrt());
    for j in 0..dim {
        out[j] = -a * out[j] - b * gp[j];
    }
    inside
}

/// `v += dt a(x)`.
pub fn kick(ens: &mut ParticleEnsemble, grid: &FieldGrid, eq: &dyn Equilibrium, dt: f64) -> Result<()> {
    let dim = ens.dim();
    let eps = ens.eps;
    let escaped = ens
        .positions
        .par_chunks(CHUNK * dim)
        .zip(ens.velocities.par_chunks_mut(CHUNK * dim))
        .enumerate()
        .map(|(c, (xs, vs))| {
            let mut a = [0.0; 3];
            for (k, (x, v)) in xs.chunks_exact(dim).zip(vs.chunks_exact_mut(dim)).enumerate() {
                if !acceleration(grid, eq, eps, x, &mut a[..dim]) {
                    return Some(c * CHUNK + k);
                }
                for j in 0..dim {
                    v[j] += dt * a[j];
                }
            }
            None
        })
        .collect::<Vec<_>>();
    match escaped.into_iter().flatten().next() {
        Some(index) => Err(Error::ParticleEscaped { index, step: 0 }),
        None => Ok(()),
    }
}

/// `x += dt v`.
pub fn drift(ens: &mut ParticleEnsemble, dt: f64) {
    let dim = ens.dim();
    ens.positions
        .par_chunks_mut(CHUNK * dim)
        .zip(ens.velocities.par_chunks(CHUNK * dim))
        .for_each(|(xs, vs)| {
            for (x, v) in xs.iter_mut().zip(vs) {
                *x += dt * v;
            }
        });
}

/// One kick-drift-kick step in frozen fields.
pub fn push_particles(
    ens: &mut ParticleEnsemble,
    grid: &FieldGrid,
    eq: &dyn Equilibrium,
    dt: f64,
) -> Result<()> {
    kick(ens, grid, eq, 0.5 * dt)?;
    drift(ens, dt);
    kick(ens, grid, eq, 0.5 * dt)
}

/// Exact Ornstein-Uhlenbeck update of every velocity over `dt`, with draws
/// from the `(particle, phase)` streams.
pub fn fokker_planck_step(ens: &mut ParticleEnsemble, dt: f64, key: &StreamKey, phase: u64) {
    if dt == 0.0 {
        return;
    }
    let dim = ens.dim();
    let decay = (-dt).exp();
    let spread = (ens.theta * (1.0 - (-2.0 * dt).exp())).sqrt();
    ens.velocities
        .par_chunks_mut(CHUNK * dim)
        .enumerate()
        .for_each(|(c, vs)| {
            for (k, v) in vs.chunks_exact_mut(dim).enumerate() {
                let mut rng = key.stream(c * CHUNK + k, phase);
                for vj in v.iter_mut() {
                    let xi: f64 = StandardNormal.sample(&mut rng);
                    *vj = *vj * decay + spread * xi;
                }
            }
        });
}
