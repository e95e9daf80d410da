use std::sync::Arc;

use crate::registry::{Named, Registry};

/// Particle shape function in cell units. Per axis, a particle at grid
/// coordinate `u` touches `width()` consecutive nodes starting at the
/// returned index; weights sum to one.
pub trait Shape: Named + Send + Sync {
    fn width(&self) -> usize;
    fn weights(&self, u: f64, w: &mut [f64; 2]) -> isize;
    /// Shape kernel `W(s)` with unit integral.
    fn kernel(&self, s: f64) -> f64;
    /// Smooth pieces of the kernel support.
    fn segments(&self) -> &'static [(f64, f64)];
    /// Half-width of the support.
    fn support(&self) -> f64;
}

/// Nearest grid point.
#[derive(Debug, Clone, Copy, Default)]
pub struct Ngp;

/// Cloud in cell (linear weighting).
#[derive(Debug, Clone, Copy, Default)]
pub struct Cic;

impl Named for Ngp {
    fn name(&self) -> &'static str {
        "ngp"
    }
}

impl Shape for Ngp {
    fn width(&self) -> usize {
        1
    }
    fn weights(&self, u: f64, w: &mut [f64; 2]) -> isize {
        *w = [1.0, 0.0];
        u.round() as isize
    }
    fn kernel(&self, s: f64) -> f64 {
        if s.abs() < 0.5 {
            1.0
        } else {
            0.0
        }
    }
    fn segments(&self) -> &'static [(f64, f64)] {
        &[(-0.5, 0.5)]
    }
    fn support(&self) -> f64 {
        0.5
    }
}

impl Named for Cic {
    fn name(&self) -> &'static str {
        "cic"
    }
}

impl Shape for Cic {
    fn width(&self) -> usize {
        2
    }
    fn weights(&self, u: f64, w: &mut [f64; 2]) -> isize {
        let first = u.floor();
        let f = u - first;
        *w = [1.0 - f, f];
        first as isize
    }
    fn kernel(&self, s: f64) -> f64 {
        (1.0 - s.abs()).max(0.0)
    }
    fn segments(&self) -> &'static [(f64, f64)] {
        &[(-1.0, 0.0), (0.0, 1.0)]
    }
    fn support(&self) -> f64 {
        1.0
    }
}

pub fn shape_registry() -> Registry<dyn Shape> {
    let mut r: Registry<dyn Shape> = Registry::new("particle shape");
    r.register(Arc::new(Ngp)).register(Arc::new(Cic));
    r
}
