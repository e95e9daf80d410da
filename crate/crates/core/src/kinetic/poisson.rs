use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::grid::{FieldGrid, GridGeometry};
use crate::geometry::gamma_radial;
use crate::SpaceDim;

/// Mean of `ln|y|` over the unit square centered at the origin.
const MEAN_LOG_UNIT_SQUARE: f64 = -1.061_175_426_882_524_4;
/// Mean of `1/|y|` over the unit cube centered at the origin.
const MEAN_INV_UNIT_CUBE: f64 = 2.380_077_363_979_553;

/// Kernel value assigned to the zero offset: the cell average of the
/// fundamental solution for `N >= 2`, the point value for `N = 1`.
pub fn self_cell_kernel(dim: usize, h: f64) -> f64 {
    match dim {
        1 => 0.0,
        2 => -(h.ln() + MEAN_LOG_UNIT_SQUARE) / (2.0 * PI),
        _ => MEAN_INV_UNIT_CUBE / (4.0 * PI * h),
    }
}

/// Free-space solver for `-Delta u = f` by zero padding to twice the grid
/// and cyclic convolution with the sampled fundamental solution.
pub struct FreeSpacePoisson {
    geom: GridGeometry,
    m: [usize; 3],
    kernel_hat: Vec<Complex<f64>>,
    forward: [Arc<dyn Fft<f64>>; 3],
    inverse: [Arc<dyn Fft<f64>>; 3],
}

impl std::fmt::Debug for FreeSpacePoisson {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FreeSpacePoisson")
            .field("geom", &self.geom)
            .field("m", &self.m)
            .finish_non_exhaustive()
    }
}

impl FreeSpacePoisson {
    pub fn new(geom: &GridGeometry) -> Self {
        let dim = geom.dim;
        let mut m = [1; 3];
        for j in 0..dim {
            m[j] = 2 * geom.n[j];
        }
        let mut planner = FftPlanner::new();
        let forward = [0, 1, 2].map(|j| planner.plan_fft_forward(m[j]));
        let inverse = [0, 1, 2].map(|j| planner.plan_fft_inverse(m[j]));
        let sd = SpaceDim::new(dim).expect("grid dimension already validated");
        let total = m[0] * m[1] * m[2];
        let h = geom.h;
        let g0 = self_cell_kernel(dim, h);
        let mut kernel: Vec<Complex<f64>> = (0..total)
            .into_par_iter()
            .map(|f| {
                let idx = [f % m[0], (f / m[0]) % m[1], f / (m[0] * m[1])];
                let mut r2 = 0.0;
                for j in 0..dim {
                    let d = if idx[j] < geom.n[j] {
                        idx[j] as f64
                    } else {
                        idx[j] as f64 - m[j] as f64
                    };
                    r2 += d * d;
                }
                let v = if r2 == 0.0 {
                    g0
                } else {
                    gamma_radial(h * r2.sqrt(), sd)
                };
                Complex::new(v, 0.0)
            })
            .collect();
        let mut solver = Self {
            geom: geom.clone(),
            m,
            kernel_hat: Vec::new(),
            forward,
            inverse,
        };
        solver.transform(&mut kernel, false);
        solver.kernel_hat = kernel;
        solver
    }

    fn transform(&self, buf: &mut [Complex<f64>], inverse: bool) {
        let plans = if inverse { &self.inverse } else { &self.forward };
        let m = self.m;
        for axis in 0..self.geom.dim {
            let plan = &plans[axis];
            if axis == 0 {
                buf.par_chunks_mut(m[0]).for_each(|row| plan.process(row));
                continue;
            }
            let stride = if axis == 1 { m[0] } else { m[0] * m[1] };
            let len = m[axis];
            // lines along `axis`: fixed outer block and inner offset
            let block = stride * len;
            buf.par_chunks_mut(block).for_each(|blk| {
                let mut line = vec![Complex::new(0.0, 0.0); len];
                for off in 0..stride {
                    for k in 0..len {
                        line[k] = blk[off + k * stride];
                    }
                    plan.process(&mut line);
                    for k in 0..len {
                        blk[off + k * stride] = line[k];
                    }
                }
            });
        }
    }

    /// `out_i = sum_j G(x_i - x_j) src_j h^N` over the grid.
    pub fn convolve(&self, src: &[f64]) -> Vec<f64> {
        let g = &self.geom;
        let m = self.m;
        let total = m[0] * m[1] * m[2];
        let mut buf = vec![Complex::new(0.0, 0.0); total];
        for (f, s) in src.iter().enumerate() {
            let i = g.unflat(f);
            buf[i[0] + m[0] * (i[1] + m[1] * i[2])] = Complex::new(*s, 0.0);
        }
        self.transform(&mut buf, false);
        buf.par_iter_mut()
            .zip(&self.kernel_hat)
            .for_each(|(b, k)| *b *= k);
        self.transform(&mut buf, true);
        let scale = g.cell_volume() / total as f64;
        (0..g.len())
            .map(|f| {
                let i = g.unflat(f);
                buf[i[0] + m[0] * (i[1] + m[1] * i[2])].re * scale
            })
            .collect()
    }

    /// Solves `Delta psi = (n_e - rho)/sqrt(eps)` in free space and updates
    /// the gradient.
    pub fn solve(&self, grid: &mut FieldGrid, eps: f64) {
        let s = 1.0 / eps.sqrt();
        let src: Vec<f64> = grid
            .rho
            .iter()
            .zip(&grid.n_e)
            .map(|(r, n)| (r - n) * s)
            .collect();
        grid.psi = self.convolve(&src);
        grid.update_gradient();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::gamma;

    fn direct(geom: &GridGeometry, src: &[f64]) -> Vec<f64> {
        let sd = SpaceDim::new(geom.dim).unwrap();
        let g0 = self_cell_kernel(geom.dim, geom.h);
        (0..geom.len())
            .map(|i| {
                let xi = geom.node(i);
                src.iter()
                    .enumerate()
                    .map(|(j, s)| {
                        if i == j {
                            return g0 * s;
                        }
                        let xj = geom.node(j);
                        let d: Vec<f64> = (0..geom.dim).map(|k| xi[k] - xj[k]).collect();
                        gamma(&d, sd).unwrap() * s
                    })
                    .sum::<f64>()
                    * geom.cell_volume()
            })
            .collect()
    }

    #[test]
    fn matches_direct_sum() {
        for (dim, n) in [(1, 13), (2, 9), (3, 5)] {
            let lo = vec![-1.0; dim];
            let hi = vec![1.3; dim];
            let geom = GridGeometry::covering(&lo, &hi, n).unwrap();
            let src: Vec<f64> = (0..geom.len())
                .map(|f| ((f * 7919) % 31) as f64 / 31.0 - 0.4)
                .collect();
            let fast = FreeSpacePoisson::new(&geom).convolve(&src);
            let slow = direct(&geom, &src);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() < 1e-11 * (1.0 + b.abs()), "dim {dim}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn cell_average_constants() {
        // midpoint-free check of the 2D constant by a fine product rule
        let (x, w) = crate::quadrature::gauss_legendre(40);
        let mut acc = 0.0;
        for (xi, wi) in x.iter().zip(&w) {
            for (yj, wj) in x.iter().zip(&w) {
                // quarter square [0, 1/2]^2
                let (a, b) = (0.25 * (xi + 1.0), 0.25 * (yj + 1.0));
                acc += 0.0625 * wi * wj * 0.5 * (a * a + b * b).ln();
            }
        }
        assert!((4.0 * acc - MEAN_LOG_UNIT_SQUARE).abs() < 1e-4);
    }
}
