//! Modulated energy and entropy, energy budgets, density and current
//! distances, and the Gronwall trend check.

mod entropy;
mod gronwall;
mod series;

use std::sync::Arc;

use rayon::prelude::*;

pub use entropy::{histogram_entropy, modulated_entropy_fp, partition_function, EntropySettings};
pub use gronwall::{fit_gronwall_rate, gronwall_check, gronwall_tolerance, GronwallReport};
pub use series::{DiagnosticRow, DiagnosticSeries, SCHEMA_VERSION};

use crate::equilibrium::Equilibrium;
use crate::error::Result;
use crate::fluid::VelocityField;
use crate::kinetic::{Bump, FieldGrid, ParticleEnsemble, CHUNK};

/// The three nonnegative pieces of the modulated energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyComponents {
    /// `1/2 sum w |v - V(x)|^2`.
    pub kinetic: f64,
    /// `1/2 |grad psi|^2` on the grid.
    pub fluctuation: f64,
    /// `(1/eps) sum w Phi_e(x)`.
    pub confinement: f64,
}

impl EnergyComponents {
    pub fn total(&self) -> f64 {
        self.kinetic + self.fluctuation + self.confinement
    }
}

fn particle_sum(ens: &ParticleEnsemble, f: impl Fn(&[f64], &[f64], f64) -> f64 + Sync) -> f64 {
    let dim = ens.dim();
    let parts: Vec<f64> = ens
        .positions
        .par_chunks(CHUNK * dim)
        .zip(ens.velocities.par_chunks(CHUNK * dim))
        .zip(ens.weights.par_chunks(CHUNK))
        .map(|((xs, vs), ws)| {
            xs.chunks_exact(dim)
                .zip(vs.chunks_exact(dim))
                .zip(ws)
                .map(|((x, v), w)| f(x, v, *w))
                .sum::<f64>()
        })
        .collect();
    parts.iter().sum()
}

/// `1/2 sum w |v|^2`.
pub fn kinetic_energy(ens: &ParticleEnsemble) -> f64 {
    0.5 * particle_sum(ens, |_, v, w| w * v.iter().map(|a| a * a).sum::<f64>())
}

/// `(1/eps) sum w Phi_e(x)`.
pub fn confinement_energy(ens: &ParticleEnsemble, eq: &dyn Equilibrium) -> f64 {
    particle_sum(ens, |x, _, w| w * eq.phi_e(x)) / ens.eps
}

/// `sum w v`.
pub fn momentum(ens: &ParticleEnsemble) -> Vec<f64> {
    (0..ens.dim())
        .map(|j| particle_sum(ens, |_, v, w| w * v[j]))
        .collect()
}

pub fn modulated_energy(
    ens: &ParticleEnsemble,
    grid: &FieldGrid,
    eq: &dyn Equilibrium,
    velocity: &dyn VelocityField,
    t: f64,
) -> EnergyComponents {
    let dim = ens.dim();
    let kinetic = 0.5
        * particle_sum(ens, |x, v, w| {
            let mut u = [0.0; 3];
            velocity.velocity(t, x, &mut u[..dim]);
            w * v.iter().zip(&u).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
        });
    EnergyComponents {
        kinetic,
        fluctuation: grid.field_energy(),
        confinement: confinement_energy(ens, eq),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBudget {
    /// `E_kin + (1/eps) sum w Phi_e + E_fluct`, conserved when `theta = 0`.
    pub energy: f64,
    /// `energy + theta S` with `S` the entropy estimate, when `theta > 0`.
    pub free_energy: Option<f64>,
}

pub fn energy_budget(
    ens: &ParticleEnsemble,
    grid: &FieldGrid,
    eq: &dyn Equilibrium,
) -> EnergyBudget {
    if ens.is_empty() {
        return EnergyBudget {
            energy: grid.field_energy(),
            free_energy: (ens.theta > 0.0).then_some(grid.field_energy()),
        };
    }
    let energy = kinetic_energy(ens) + confinement_energy(ens, eq) + grid.field_energy();
    let free_energy = (ens.theta > 0.0).then(|| energy + ens.theta * histogram_entropy(ens));
    EnergyBudget {
        energy,
        free_energy,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityDistance {
    /// `sum |rho - n_e| h^N`.
    pub l1: f64,
    /// `sqrt(eps) |grad psi|`.
    pub hminus1: f64,
}

pub fn density_distance(grid: &FieldGrid, eps: f64) -> DensityDistance {
    let l1 = grid
        .rho
        .iter()
        .zip(&grid.n_e)
        .map(|(r, n)| (r - n).abs())
        .sum::<f64>()
        * grid.geom.cell_volume();
    DensityDistance {
        l1,
        hminus1: (2.0 * eps * grid.field_energy()).sqrt(),
    }
}

/// `Theta(x) = direction chi(x)` with a compactly supported bump `chi`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestField {
    pub direction: Vec<f64>,
    pub bump: Bump,
}

impl TestField {
    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        let c = self.bump.value(x);
        for (o, d) in out.iter_mut().zip(&self.direction) {
            *o = c * d;
        }
    }
}

/// `int (J - n_e V) . Theta`, the current by a particle sum and `n_e V` by
/// grid quadrature.
pub fn current_pairings(
    ens: &ParticleEnsemble,
    grid: &FieldGrid,
    velocity: &dyn VelocityField,
    t: f64,
    fields: &[TestField],
) -> Vec<f64> {
    let dim = ens.dim();
    let g = &grid.geom;
    fields
        .iter()
        .map(|tf| {
            let particles = particle_sum(ens, |x, v, w| {
                let mut th = [0.0; 3];
                tf.eval(x, &mut th[..dim]);
                w * v.iter().zip(&th).map(|(a, b)| a * b).sum::<f64>()
            });
            let fluid: f64 = (0..g.len())
                .into_par_iter()
                .with_min_len(CHUNK)
                .map(|f| {
                    let n = grid.n_e[f];
                    if n == 0.0 {
                        return 0.0;
                    }
                    let x = g.node(f);
                    let (mut th, mut u) = ([0.0; 3], [0.0; 3]);
                    tf.eval(&x[..dim], &mut th[..dim]);
                    velocity.velocity(t, &x[..dim], &mut u[..dim]);
                    n * (0..dim).map(|j| u[j] * th[j]).sum::<f64>()
                })
                .collect::<Vec<f64>>()
                .iter()
                .sum::<f64>()
                * g.cell_volume();
            particles - fluid
        })
        .collect()
}

/// What a run records at every diagnostic step.
#[derive(Clone)]
pub struct Diagnostics {
    /// Reference field, defined on all of `R^N`.
    pub velocity: Arc<dyn VelocityField>,
    pub test_fields: Vec<TestField>,
    /// Present for Fokker-Planck runs.
    pub entropy: Option<EntropySettings>,
}

impl Diagnostics {
    pub fn new_series(&self, dim: usize) -> DiagnosticSeries {
        DiagnosticSeries::new(dim, self.test_fields.len(), self.entropy.is_some())
    }

    pub fn record(
        &self,
        t: f64,
        ens: &ParticleEnsemble,
        grid: &FieldGrid,
        eq: &dyn Equilibrium,
    ) -> Result<DiagnosticRow> {
        let h = modulated_energy(ens, grid, eq, self.velocity.as_ref(), t);
        let e_kin = kinetic_energy(ens);
        let energy = e_kin + h.confinement + h.fluctuation;
        let dist = density_distance(grid, ens.eps);
        let (h_fp, entropy, free) = match &self.entropy {
            Some(s) => {
                let ent = histogram_entropy(ens);
                let hfp = entropy::assemble_fp(&h, ent, s, eq.mass(), ens.dim());
                (Some(hfp), Some(ent), Some(energy + s.theta * ent))
            }
            None => (None, None, None),
        };
        Ok(DiagnosticRow {
            t,
            e_kin,
            e_phi_e: h.confinement,
            e_fluct: h.fluctuation,
            h_kin: h.kinetic,
            h_mod: h.total(),
            energy_total: energy,
            h_fp,
            entropy_estimate: entropy,
            free_energy: free,
            charge: ens.total_charge(),
            momentum: momentum(ens),
            dist_l1: dist.l1,
            dist_hminus1: dist.hminus1,
            pairings: current_pairings(ens, grid, self.velocity.as_ref(), t, &self.test_fields),
        })
    }
}
