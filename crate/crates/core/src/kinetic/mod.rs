//! Particle-in-cell solver for the confined Vlasov-Poisson system, with an
//! optional Fokker-Planck velocity relaxation. The confinement force is taken
//! from the equilibrium; only the fluctuation potential lives on the grid.

mod ensemble;
mod grid;
mod init;
mod poisson;
mod push;
pub mod rng;
mod shape;

use serde::{Deserialize, Serialize};

pub use ensemble::ParticleEnsemble;
pub use grid::{FieldGrid, GridGeometry};
pub use init::{init_well_prepared, Bump, InitParams, Sampling};
pub use poisson::{self_cell_kernel, FreeSpacePoisson};
pub use push::{acceleration, drift, fokker_planck_step, kick, push_particles};
pub use rng::StreamKey;
pub use shape::{shape_registry, Cic, Ngp, Shape};

use crate::diagnostics::{DiagnosticSeries, Diagnostics};
use crate::equilibrium::Equilibrium;
use crate::error::{invalid, Error, Result};

/// Particles per parallel work item. Fixed so reductions merge in the same
/// order on any number of threads.
pub(crate) const CHUNK: usize = 1024;

/// Sum of `f` over `xs` in fixed chunks, merged in order.
pub(crate) fn ordered_sum<T: Sync>(xs: &[T], f: impl Fn(&T) -> f64 + Sync) -> f64 {
    use rayon::prelude::*;
    let parts: Vec<f64> = xs
        .par_chunks(CHUNK)
        .map(|c| c.iter().map(&f).sum::<f64>())
        .collect();
    parts.iter().sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    VlasovPoisson,
    VlasovPoissonFokkerPlanck,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub mode: Mode,
    pub eps: f64,
    pub theta: f64,
    /// `dt <= dt_factor sqrt(eps)`.
    pub dt_factor: f64,
    /// `dt <= cfl h / max|v|` when set.
    pub cfl: Option<f64>,
    pub final_time: f64,
    pub seed: u64,
    /// Diagnostics every `cadence` steps, plus the last step.
    pub cadence: usize,
    pub snapshot_cadence: Option<usize>,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(invalid(format!("eps must be positive, got {}", self.eps)));
        }
        if !(self.dt_factor > 0.0 && self.dt_factor.is_finite()) {
            return Err(invalid("dt_factor must be positive"));
        }
        if let Some(c) = self.cfl {
            if !(c > 0.0 && c.is_finite()) {
                return Err(invalid("cfl must be positive"));
            }
        }
        if !(self.final_time > 0.0 && self.final_time.is_finite()) {
            return Err(invalid("final time must be positive"));
        }
        if self.cadence == 0 || self.snapshot_cadence == Some(0) {
            return Err(invalid("cadences must be positive"));
        }
        match self.mode {
            Mode::VlasovPoisson if self.theta != 0.0 => {
                Err(invalid("theta must be 0 in vlasov-poisson mode"))
            }
            Mode::VlasovPoissonFokkerPlanck if !(self.theta > 0.0 && self.theta.is_finite()) => {
                Err(invalid("theta must be positive in vlasov-poisson-fokker-planck mode"))
            }
            _ => Ok(()),
        }
    }

    /// Step size at state `ens` on a grid of spacing `h`.
    pub fn dt(&self, ens: &ParticleEnsemble, h: f64) -> f64 {
        let mut dt = self.dt_factor * self.eps.sqrt();
        if let Some(c) = self.cfl {
            let vmax = ens
                .velocities
                .chunks_exact(ens.dim())
                .map(|v| v.iter().map(|x| x * x).sum::<f64>())
                .fold(0.0, f64::max)
                .sqrt();
            if vmax > 0.0 {
                dt = dt.min(c * h / vmax);
            }
        }
        dt
    }
}

/// State handed to snapshot observers.
pub struct Snapshot<'a> {
    pub step: usize,
    pub t: f64,
    pub ensemble: &'a ParticleEnsemble,
    pub grid: &'a FieldGrid,
}

fn at_step(e: Error, step: usize) -> Error {
    match e {
        Error::ParticleEscaped { index, .. } => Error::ParticleEscaped { index, step },
        other => other,
    }
}

/// Deposits and solves so that `grid` matches `ens`.
pub fn refresh_fields(ens: &ParticleEnsemble, grid: &mut FieldGrid, solver: &FreeSpacePoisson) -> Result<()> {
    grid.deposit(ens)?;
    solver.solve(grid, ens.eps);
    Ok(())
}

/// Advances `ens` to the final time with the step order half-kick, drift,
/// field solve, half-kick, then the Ornstein-Uhlenbeck step when `theta > 0`.
pub fn run(
    cfg: &SimConfig,
    eq: &dyn Equilibrium,
    ens: &mut ParticleEnsemble,
    grid: &mut FieldGrid,
    diagnostics: &Diagnostics,
    observer: &mut dyn FnMut(&Snapshot<'_>) -> Result<()>,
) -> Result<DiagnosticSeries> {
    cfg.validate()?;
    if (ens.eps - cfg.eps).abs() > 0.0 || (ens.theta - cfg.theta).abs() > 0.0 {
        return Err(invalid("ensemble eps/theta differ from the configuration"));
    }
    let solver = FreeSpacePoisson::new(&grid.geom);
    let key = StreamKey::new(cfg.seed);
    refresh_fields(ens, grid, &solver).map_err(|e| at_step(e, 0))?;
    let mut series = diagnostics.new_series(ens.dim());
    series.push(diagnostics.record(0.0, ens, grid, eq)?);
    let snap = |step, t, ens: &ParticleEnsemble, grid: &FieldGrid, obs: &mut dyn FnMut(&Snapshot<'_>) -> Result<()>| {
        obs(&Snapshot {
            step,
            t,
            ensemble: ens,
            grid,
        })
    };
    if cfg.snapshot_cadence.is_some() {
        snap(0, 0.0, ens, grid, observer)?;
    }
    let t_end = cfg.final_time;
    let mut t = 0.0;
    let mut step = 0;
    while t < t_end * (1.0 - 1e-12) {
        let dt = cfg.dt(ens, grid.geom.h).min(t_end - t);
        kick(ens, grid, eq, 0.5 * dt).map_err(|e| at_step(e, step + 1))?;
        drift(ens, dt);
        refresh_fields(ens, grid, &solver).map_err(|e| at_step(e, step + 1))?;
        kick(ens, grid, eq, 0.5 * dt).map_err(|e| at_step(e, step + 1))?;
        if cfg.mode == Mode::VlasovPoissonFokkerPlanck {
            fokker_planck_step(ens, dt, &key, step as u64 + 1);
        }
        step += 1;
        t += dt;
        let last = t >= t_end * (1.0 - 1e-12);
        if last {
            t = t_end;
        }
        if step % cfg.cadence == 0 || last {
            series.push(diagnostics.record(t, ens, grid, eq)?);
        }
        if let Some(k) = cfg.snapshot_cadence {
            if step % k == 0 || last {
                snap(step, t, ens, grid, observer)?;
            }
        }
    }
    Ok(series)
}
