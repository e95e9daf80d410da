use super::series::DiagnosticSeries;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GronwallReport {
    pub pass: bool,
    /// `min_t (e^{Ct}(H(0) + tol) - H(t))`; negative on failure.
    pub margin: f64,
    pub tol: f64,
}

/// Monte-Carlo floor `max(3 H(0) / sqrt(n), 1e-6)`.
pub fn gronwall_tolerance(h0: f64, n_particles: usize) -> f64 {
    (3.0 * h0 / (n_particles.max(1) as f64).sqrt()).max(1e-6)
}

/// Checks `H(t) <= e^{Ct} (H(0) + tol)` on every row.
pub fn gronwall_check(series: &DiagnosticSeries, c: f64, tol: f64) -> GronwallReport {
    let Some(first) = series.rows.first() else {
        return GronwallReport {
            pass: true,
            margin: f64::INFINITY,
            tol,
        };
    };
    let base = first.h_mod + tol;
    let margin = series
        .rows
        .iter()
        .map(|r| (c * (r.t - first.t)).exp() * base - r.h_mod)
        .fold(f64::INFINITY, f64::min);
    GronwallReport {
        pass: margin >= 0.0,
        margin,
        tol,
    }
}

/// Smallest `C >= 0` for which the check passes.
pub fn fit_gronwall_rate(series: &DiagnosticSeries, tol: f64) -> f64 {
    let Some(first) = series.rows.first() else {
        return 0.0;
    };
    let base = first.h_mod + tol;
    series
        .rows
        .iter()
        .filter(|r| r.t > first.t && r.h_mod > base)
        .map(|r| (r.h_mod / base).ln() / (r.t - first.t))
        .fold(0.0, f64::max)
}
