use std::io::{Read, Write};

use crate::error::{Error, Result};

/// Version of the diagnostics CSV layout.
pub const SCHEMA_VERSION: u32 = 1;

const AXES: [&str; 3] = ["x", "y", "z"];

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticRow {
    pub t: f64,
    pub e_kin: f64,
    pub e_phi_e: f64,
    pub e_fluct: f64,
    pub h_kin: f64,
    pub h_mod: f64,
    pub energy_total: f64,
    pub h_fp: Option<f64>,
    pub entropy_estimate: Option<f64>,
    pub free_energy: Option<f64>,
    pub charge: f64,
    pub momentum: Vec<f64>,
    pub dist_l1: f64,
    pub dist_hminus1: f64,
    pub pairings: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticSeries {
    pub dim: usize,
    pub n_pairings: usize,
    pub fokker_planck: bool,
    pub rows: Vec<DiagnosticRow>,
}

fn fmt(v: f64) -> String {
    format!("{v:e}")
}

impl DiagnosticSeries {
    pub fn new(dim: usize, n_pairings: usize, fokker_planck: bool) -> Self {
        Self {
            dim,
            n_pairings,
            fokker_planck,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: DiagnosticRow) {
        self.rows.push(row);
    }

    pub fn last(&self) -> Option<&DiagnosticRow> {
        self.rows.last()
    }

    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = ["t", "E_kin", "E_phi_e", "E_fluct", "H_kin", "H_mod", "energy_total"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        if self.fokker_planck {
            h.extend(["H_fp", "entropy_estimate", "free_energy"].map(String::from));
        }
        h.push("charge".into());
        for a in AXES.iter().take(self.dim) {
            h.push(format!("momentum_{a}"));
        }
        h.push("dist_L1".into());
        h.push("dist_Hminus1".into());
        for k in 0..self.n_pairings {
            h.push(format!("pairing_{k}"));
        }
        h
    }

    fn record(&self, r: &DiagnosticRow) -> Vec<String> {
        let mut out = vec![
            fmt(r.t),
            fmt(r.e_kin),
            fmt(r.e_phi_e),
            fmt(r.e_fluct),
            fmt(r.h_kin),
            fmt(r.h_mod),
            fmt(r.energy_total),
        ];
        if self.fokker_planck {
            for v in [r.h_fp, r.entropy_estimate, r.free_energy] {
                out.push(v.map(fmt).unwrap_or_default());
            }
        }
        out.push(fmt(r.charge));
        out.extend(r.momentum.iter().map(|v| fmt(*v)));
        out.push(fmt(r.dist_l1));
        out.push(fmt(r.dist_hminus1));
        out.extend(r.pairings.iter().map(|v| fmt(*v)));
        out
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let csv_err = |e: csv::Error| Error::Config(format!("csv: {e}"));
        wr.write_record(self.header()).map_err(csv_err)?;
        for r in &self.rows {
            wr.write_record(self.record(r)).map_err(csv_err)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Config(e.to_string()))
    }

    /// Parses a CSV written by [`DiagnosticSeries::write_csv`].
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let bad = |m: String| Error::Config(format!("diagnostics csv: {m}"));
        let mut rd = csv::Reader::from_reader(r);
        let header: Vec<String> = rd
            .headers()
            .map_err(|e| bad(e.to_string()))?
            .iter()
            .map(String::from)
            .collect();
        let fokker_planck = header.iter().any(|h| h == "H_fp");
        let dim = header.iter().filter(|h| h.starts_with("momentum_")).count();
        let n_pairings = header.iter().filter(|h| h.starts_with("pairing_")).count();
        if dim == 0 || dim > 3 {
            return Err(bad("missing momentum columns".into()));
        }
        let mut series = Self::new(dim, n_pairings, fokker_planck);
        if series.header() != header {
            return Err(bad(format!("unexpected header {header:?}")));
        }
        for rec in rd.records() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            let vals: Vec<f64> = rec
                .iter()
                .map(|s| s.parse::<f64>().map_err(|e| bad(format!("{s:?}: {e}"))))
                .collect::<Result<_>>()?;
            let mut it = vals.into_iter();
            let mut next = || it.next().ok_or_else(|| bad("short record".into()));
            let t = next()?;
            let e_kin = next()?;
            let e_phi_e = next()?;
            let e_fluct = next()?;
            let h_kin = next()?;
            let h_mod = next()?;
            let energy_total = next()?;
            let (h_fp, entropy_estimate, free_energy) = if fokker_planck {
                (Some(next()?), Some(next()?), Some(next()?))
            } else {
                (None, None, None)
            };
            let charge = next()?;
            let momentum = (0..dim).map(|_| next()).collect::<Result<_>>()?;
            let dist_l1 = next()?;
            let dist_hminus1 = next()?;
            let pairings = (0..n_pairings).map(|_| next()).collect::<Result<_>>()?;
            series.push(DiagnosticRow {
                t,
                e_kin,
                e_phi_e,
                e_fluct,
                h_kin,
                h_mod,
                energy_total,
                h_fp,
                entropy_estimate,
                free_energy,
                charge,
                momentum,
                dist_l1,
                dist_hminus1,
                pairings,
            });
        }
        Ok(series)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.header().iter().position(|h| h == name)?;
        Some(
            self.rows
                .iter()
                .map(|r| self.record(r)[idx].parse().unwrap_or(f64::NAN))
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(t: f64) -> DiagnosticRow {
        DiagnosticRow {
            t,
            e_kin: 0.1 + t,
            e_phi_e: 1.0 / 3.0,
            e_fluct: 2e-17,
            h_kin: 0.1,
            h_mod: 0.1 + 1.0 / 3.0 + 2e-17,
            energy_total: 1.5,
            h_fp: Some(-0.25),
            entropy_estimate: Some(std::f64::consts::PI),
            free_energy: Some(1.0e300),
            charge: 2.0,
            momentum: vec![1e-19, -3.0],
            dist_l1: 0.0,
            dist_hminus1: 5e-8,
            pairings: vec![0.7],
        }
    }

    #[test]
    fn csv_round_trip_is_byte_identical() {
        let mut s = DiagnosticSeries::new(2, 1, true);
        s.push(row(0.0));
        s.push(row(0.1));
        let text = s.to_csv_string().unwrap();
        let back = DiagnosticSeries::read_csv(text.as_bytes()).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.to_csv_string().unwrap(), text);
        assert!(text.starts_with("t,E_kin,E_phi_e,E_fluct,H_kin,H_mod,energy_total,H_fp"));
    }

    #[test]
    fn rejects_foreign_headers() {
        assert!(DiagnosticSeries::read_csv("a,b\n1,2\n".as_bytes()).is_err());
    }
}
