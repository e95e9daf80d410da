//! End-to-end runs driven by a [`Config`]: single simulations, eps sweeps,
//! and particle/grid dumps.

use std::io::{Read, Write};
use std::sync::Arc;

use rayon::prelude::*;

use crate::config::Config;
use crate::diagnostics::DiagnosticSeries;
use crate::equilibrium::Equilibrium;
use crate::error::{invalid, Error, Result};
use crate::kinetic::{init_well_prepared, run, FieldGrid, ParticleEnsemble, Snapshot};

const AXES: [&str; 3] = ["x", "y", "z"];

pub struct SimulationOutput {
    pub series: DiagnosticSeries,
    pub equilibrium: Arc<dyn Equilibrium>,
    pub ensemble: ParticleEnsemble,
    pub grid: FieldGrid,
}

impl std::fmt::Debug for SimulationOutput {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SimulationOutput")
            .field("rows", &self.series.rows.len())
            .field("particles", &self.ensemble.len())
            .finish_non_exhaustive()
    }
}

/// Builds the equilibrium, samples well-prepared data and runs to the final time.
pub fn simulate(
    cfg: &Config,
    observer: &mut dyn FnMut(&Snapshot<'_>) -> Result<()>,
) -> Result<SimulationOutput> {
    let eq = cfg.equilibrium()?;
    let sim = cfg.sim_config()?;
    let diagnostics = cfg.diagnostics(eq.as_ref())?;
    let v_init = cfg.reference_field(eq.as_ref())?;
    let mut ens = init_well_prepared(eq.as_ref(), v_init.as_ref(), &cfg.init_params(eq.as_ref())?)?;
    let mut grid = cfg.grid(eq.as_ref())?;
    let series = run(&sim, eq.as_ref(), &mut ens, &mut grid, &diagnostics, observer)?;
    Ok(SimulationOutput {
        series,
        equilibrium: eq,
        ensemble: ens,
        grid,
    })
}

/// Final-time summary of one run in an eps sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub eps: f64,
    pub h_final: f64,
    pub hminus1_final: f64,
    /// Largest `|pairing|` over test fields at the final time.
    pub pairing_final: f64,
    /// Largest `|pairing|` over test fields and recorded times.
    pub pairing_sup: f64,
}

pub const SWEEP_HEADER: [&str; 5] = ["eps", "H_T", "dist_Hminus1_T", "pairing_T", "pairing_sup"];

pub fn summarize(eps: f64, series: &DiagnosticSeries) -> Result<SweepRow> {
    let last = series
        .last()
        .ok_or_else(|| invalid("empty diagnostic series"))?;
    let abs_max = |v: &[f64]| v.iter().fold(0.0, |m: f64, x| m.max(x.abs()));
    Ok(SweepRow {
        eps,
        h_final: last.h_mod,
        hminus1_final: last.dist_hminus1,
        pairing_final: abs_max(&last.pairings),
        pairing_sup: series
            .rows
            .iter()
            .map(|r| abs_max(&r.pairings))
            .fold(0.0, f64::max),
    })
}

/// Runs one simulation per `eps` with the same seed and sorts rows by
/// decreasing `eps`.
pub fn sweep(cfg: &Config, eps: &[f64]) -> Result<Vec<(SweepRow, DiagnosticSeries)>> {
    if eps.len() < 2 {
        return Err(Error::Config("a sweep needs at least two eps values".into()));
    }
    let mut rows: Vec<(SweepRow, DiagnosticSeries)> = eps
        .par_iter()
        .map(|e| {
            let out = simulate(&cfg.with_eps(*e)?, &mut |_| Ok(()))?;
            Ok((summarize(*e, &out.series)?, out.series))
        })
        .collect::<Result<_>>()?;
    rows.sort_by(|a, b| b.0.eps.total_cmp(&a.0.eps));
    Ok(rows)
}

/// True when `values` never rises by more than `band` times the previous entry.
pub fn decreasing_within(values: &[f64], band: f64) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] * (1.0 + band))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Config(format!("csv: {e}"))
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(SWEEP_HEADER).map_err(csv_err)?;
    for r in rows {
        wr.write_record(
            [r.eps, r.h_final, r.hminus1_final, r.pairing_final, r.pairing_sup].map(|v| format!("{v:e}")),
        )
        .map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_sweep_csv<R: Read>(r: R) -> Result<Vec<SweepRow>> {
    let mut rd = csv::Reader::from_reader(r);
    let header: Vec<String> = rd.headers().map_err(csv_err)?.iter().map(String::from).collect();
    if header != SWEEP_HEADER {
        return Err(Error::Config(format!("unexpected sweep header {header:?}")));
    }
    rd.records()
        .map(|rec| {
            let rec = rec.map_err(csv_err)?;
            let v: Vec<f64> = rec
                .iter()
                .map(|s| s.parse::<f64>().map_err(|e| Error::Config(format!("{s:?}: {e}"))))
                .collect::<Result<_>>()?;
            if v.len() != 5 {
                return Err(Error::Config("short sweep record".into()));
            }
            Ok(SweepRow {
                eps: v[0],
                h_final: v[1],
                hminus1_final: v[2],
                pairing_final: v[3],
                pairing_sup: v[4],
            })
        })
        .collect()
}

/// Particle dump with columns `x.., v_x.., w`.
pub fn write_particles<W: Write>(ens: &ParticleEnsemble, w: W) -> Result<()> {
    let dim = ens.dim();
    let mut wr = csv::Writer::from_writer(w);
    let mut header: Vec<String> = AXES[..dim].iter().map(|a| a.to_string()).collect();
    header.extend(AXES[..dim].iter().map(|a| format!("v_{a}")));
    header.push("w".into());
    wr.write_record(&header).map_err(csv_err)?;
    for i in 0..ens.len() {
        let rec: Vec<String> = ens
            .position(i)
            .iter()
            .chain(ens.velocity(i))
            .chain(std::iter::once(&ens.weights[i]))
            .map(|v| format!("{v:e}"))
            .collect();
        wr.write_record(&rec).map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

/// Grid dump with columns `i[,j[,k]],rho,psi,gpsi_x..`.
pub fn write_grid<W: Write>(grid: &FieldGrid, w: W) -> Result<()> {
    let g = &grid.geom;
    let dim = g.dim;
    let mut wr = csv::Writer::from_writer(w);
    let mut header: Vec<String> = ["i", "j", "k"][..dim].iter().map(|a| a.to_string()).collect();
    header.extend(["rho".to_string(), "psi".to_string()]);
    header.extend(AXES[..dim].iter().map(|a| format!("gpsi_{a}")));
    wr.write_record(&header).map_err(csv_err)?;
    for f in 0..g.len() {
        let idx = g.unflat(f);
        let mut rec: Vec<String> = idx[..dim].iter().map(|i| i.to_string()).collect();
        rec.push(format!("{:e}", grid.rho[f]));
        rec.push(format!("{:e}", grid.psi[f]));
        rec.extend((0..dim).map(|j| format!("{:e}", grid.grad_psi[j][f])));
        wr.write_record(&rec).map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}
