use std::sync::Arc;

use rayon::prelude::*;

use super::ensemble::ParticleEnsemble;
use super::shape::Shape;
use super::CHUNK;
use crate::equilibrium::Equilibrium;
use crate::error::{invalid, Error, Result};
use crate::quadrature::gauss_legendre;

/// Uniform node lattice with equal spacing on every axis. Node `(i, j, k)`
/// sits at `lo + h (i, j, k)` and has flat index `i + n0 (j + n1 k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridGeometry {
    pub dim: usize,
    pub n: [usize; 3],
    pub lo: [f64; 3],
    pub h: f64,
}

impl GridGeometry {
    /// Covers `[lo, hi]` with `nodes` nodes along the longest axis.
    pub fn covering(lo: &[f64], hi: &[f64], nodes: usize) -> Result<Self> {
        let dim = lo.len();
        crate::SpaceDim::new(dim)?;
        if nodes < 4 {
            return Err(invalid("grids need at least 4 nodes per axis"));
        }
        let longest = lo
            .iter()
            .zip(hi)
            .map(|(l, h)| h - l)
            .fold(0.0, f64::max);
        if !(longest > 0.0) {
            return Err(invalid("grid box has zero extent"));
        }
        let h = longest / (nodes - 1) as f64;
        let mut n = [1; 3];
        let mut origin = [0.0; 3];
        for j in 0..dim {
            let len = hi[j] - lo[j];
            let cells = (len / h - 1e-9).ceil().max(1.0) as usize;
            n[j] = cells + 1;
            // centre the lattice on the requested box
            origin[j] = 0.5 * (lo[j] + hi[j]) - 0.5 * cells as f64 * h;
        }
        Ok(Self {
            dim,
            n,
            lo: origin,
            h,
        })
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    pub fn hi(&self, axis: usize) -> f64 {
        self.lo[axis] + (self.n[axis] - 1) as f64 * self.h
    }

    pub fn flat(&self, i: [usize; 3]) -> usize {
        i[0] + self.n[0] * (i[1] + self.n[1] * i[2])
    }

    pub fn unflat(&self, f: usize) -> [usize; 3] {
        [f % self.n[0], (f / self.n[0]) % self.n[1], f / (self.n[0] * self.n[1])]
    }

    pub fn node(&self, f: usize) -> [f64; 3] {
        let i = self.unflat(f);
        let mut x = [0.0; 3];
        for j in 0..self.dim {
            x[j] = self.lo[j] + i[j] as f64 * self.h;
        }
        x
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        (0..self.dim).all(|j| x[j] >= self.lo[j] && x[j] <= self.hi(j))
    }

    /// Flat offset between neighbouring nodes along `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        match axis {
            0 => 1,
            1 => self.n[0],
            _ => self.n[0] * self.n[1],
        }
    }
}

/// Per-axis stencil of one particle: first node and weights.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Stencil {
    first: [usize; 3],
    w: [[f64; 2]; 3],
    width: usize,
}

/// Grid carrying the deposited density, the sampled equilibrium density,
/// the fluctuation potential and its gradient.
#[derive(Clone)]
pub struct FieldGrid {
    pub geom: GridGeometry,
    pub shape: Arc<dyn Shape>,
    pub rho: Vec<f64>,
    pub n_e: Vec<f64>,
    pub psi: Vec<f64>,
    pub grad_psi: Vec<Vec<f64>>,
}

impl std::fmt::Debug for FieldGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FieldGrid")
            .field("geom", &self.geom)
            .field("shape", &self.shape.name())
            .finish_non_exhaustive()
    }
}

impl FieldGrid {
    pub fn new(geom: GridGeometry, shape: Arc<dyn Shape>) -> Self {
        let len = geom.len();
        let dim = geom.dim;
        Self {
            geom,
            shape,
            rho: vec![0.0; len],
            n_e: vec![0.0; len],
            psi: vec![0.0; len],
            grad_psi: vec![vec![0.0; len]; dim],
        }
    }

    /// Box around the support of `eq` with a margin of one diameter on each
    /// side, with `nodes` nodes along the longest axis and `n_e` sampled.
    pub fn for_equilibrium(eq: &dyn Equilibrium, nodes: usize, shape: Arc<dyn Shape>) -> Result<Self> {
        let dom = eq.domain();
        let (lo, hi) = dom.bounding_box();
        let margin = dom.diameter();
        let lo: Vec<f64> = lo.iter().map(|v| v - margin).collect();
        let hi: Vec<f64> = hi.iter().map(|v| v + margin).collect();
        let geom = GridGeometry::covering(&lo, &hi, nodes)?;
        let mut grid = Self::new(geom, shape);
        grid.sample_equilibrium(eq)?;
        Ok(grid)
    }

    pub(crate) fn stencil(&self, x: &[f64]) -> Option<Stencil> {
        let g = &self.geom;
        let width = self.shape.width();
        let mut st = Stencil {
            first: [0; 3],
            w: [[0.0; 2]; 3],
            width,
        };
        for j in 0..g.dim {
            let u = (x[j] - g.lo[j]) / g.h;
            if !(u >= 0.0 && u <= (g.n[j] - 1) as f64) {
                return None;
            }
            let first = self.shape.weights(u, &mut st.w[j]);
            let first = first.min(g.n[j] as isize - width as isize).max(0);
            if width == 2 && (u - first as f64) > 1.0 {
                return None;
            }
            if width == 2 {
                let f = u - first as f64;
                st.w[j] = [1.0 - f, f];
            }
            st.first[j] = first as usize;
        }
        for j in g.dim..3 {
            st.w[j] = [1.0, 0.0];
        }
        Some(st)
    }

    fn for_each_node(&self, st: &Stencil, mut f: impl FnMut(usize, f64)) {
        let g = &self.geom;
        let wy = if g.dim >= 2 { st.width } else { 1 };
        let wz = if g.dim >= 3 { st.width } else { 1 };
        for c in 0..wz {
            for b in 0..wy {
                let wbc = st.w[1][b] * st.w[2][c];
                let base = g.flat([st.first[0], st.first[1] + b, st.first[2] + c]);
                for a in 0..st.width {
                    f(base + a, st.w[0][a] * wbc);
                }
            }
        }
    }

    /// Deposits particle weights: afterwards `sum rho h^N = sum w`.
    pub fn deposit(&mut self, ens: &ParticleEnsemble) -> Result<()> {
        let dim = self.geom.dim;
        let len = self.geom.len();
        let partial: Vec<Result<Vec<f64>>> = ens
            .positions
            .par_chunks(CHUNK * dim)
            .zip(ens.weights.par_chunks(CHUNK))
            .enumerate()
            .map(|(c, (xs, ws))| {
                let mut acc = vec![0.0; len];
                for (k, (x, w)) in xs.chunks_exact(dim).zip(ws).enumerate() {
                    let st = self.stencil(x).ok_or(Error::ParticleEscaped {
                        index: c * CHUNK + k,
                        step: 0,
                    })?;
                    self.for_each_node(&st, |i, wt| acc[i] += w * wt);
                }
                Ok(acc)
            })
            .collect();
        let inv = 1.0 / self.geom.cell_volume();
        self.rho.iter_mut().for_each(|r| *r = 0.0);
        for p in partial {
            let p = p?;
            for (r, v) in self.rho.iter_mut().zip(&p) {
                *r += v;
            }
        }
        self.rho.iter_mut().for_each(|r| *r *= inv);
        Ok(())
    }

    /// Interpolates `grad psi` at `x` with the deposition weights.
    pub fn gather(&self, x: &[f64], out: &mut [f64]) -> bool {
        out.iter_mut().for_each(|o| *o = 0.0);
        let Some(st) = self.stencil(x) else {
            return false;
        };
        let dim = self.geom.dim;
        self.for_each_node(&st, |i, w| {
            for j in 0..dim {
                out[j] += w * self.grad_psi[j][i];
            }
        });
        true
    }

    /// Centered differences of `psi`, one-sided on the outer layer.
    pub fn update_gradient(&mut self) {
        let g = self.geom.clone();
        for axis in 0..g.dim {
            let s = g.stride(axis);
            let n = g.n[axis];
            let inv = 1.0 / (2.0 * g.h);
            let psi = &self.psi;
            self.grad_psi[axis]
                .par_iter_mut()
                .enumerate()
                .for_each(|(f, out)| {
                    let i = g.unflat(f)[axis];
                    *out = if i == 0 {
                        (psi[f + s] - psi[f]) / g.h
                    } else if i == n - 1 {
                        (psi[f] - psi[f - s]) / g.h
                    } else {
                        (psi[f + s] - psi[f - s]) * inv
                    };
                });
        }
    }

    /// `1/2 sum over edges ((psi_b - psi_a)/h)^2 h^N`.
    pub fn field_energy(&self) -> f64 {
        let g = &self.geom;
        let mut total = 0.0;
        for axis in 0..g.dim {
            let s = g.stride(axis);
            let psi = &self.psi;
            let part: Vec<f64> = (0..g.len())
                .collect::<Vec<_>>()
                .par_chunks(CHUNK)
                .map(|fs| {
                    fs.iter()
                        .filter(|f| g.unflat(**f)[axis] + 1 < g.n[axis])
                        .map(|f| (psi[f + s] - psi[*f]).powi(2))
                        .sum::<f64>()
                })
                .collect();
            total += part.iter().sum::<f64>();
        }
        0.5 * total * g.cell_volume() / (g.h * g.h)
    }

    /// Averages `n_e` against the deposition shape around every node and
    /// rescales to the exact mass.
    pub fn sample_equilibrium(&mut self, eq: &dyn Equilibrium) -> Result<()> {
        let g = self.geom.clone();
        if eq.dim().get() != g.dim {
            return Err(invalid("equilibrium and grid dimensions differ"));
        }
        let q = match g.dim {
            1 => 24,
            2 => 8,
            _ => 4,
        };
        let (gx, gw) = gauss_legendre(q);
        // 1D rule in cell units covering the shape support, weights include W.
        let mut pts = Vec::new();
        for &(a, b) in self.shape.segments() {
            for (x, w) in gx.iter().zip(&gw) {
                let s = 0.5 * (a + b) + 0.5 * (b - a) * x;
                pts.push((s, 0.5 * (b - a) * w * self.shape.kernel(s)));
            }
        }
        let (klo, khi) = eq.domain().bounding_box();
        let reach = self.shape.support() * g.h;
        let shape_pts = &pts;
        let values: Vec<f64> = (0..g.len())
            .into_par_iter()
            .map(|f| {
                let x0 = g.node(f);
                for j in 0..g.dim {
                    if x0[j] + reach < klo[j] || x0[j] - reach > khi[j] {
                        return 0.0;
                    }
                }
                let mut x = [0.0; 3];
                let mut acc = 0.0;
                let m = shape_pts.len();
                let total = m.pow(g.dim as u32);
                for idx in 0..total {
                    let mut w = 1.0;
                    let mut rem = idx;
                    for j in 0..g.dim {
                        let (s, ws) = shape_pts[rem % m];
                        rem /= m;
                        x[j] = x0[j] + s * g.h;
                        w *= ws;
                    }
                    if w != 0.0 {
                        acc += w * eq.density(&x[..g.dim]);
                    }
                }
                acc
            })
            .collect();
        let total: f64 = values.iter().sum::<f64>() * g.cell_volume();
        if !(total > 0.0) {
            return Err(invalid("sampled equilibrium density has no mass on the grid"));
        }
        let scale = eq.mass() / total;
        self.n_e = values.into_iter().map(|v| v * scale).collect();
        Ok(())
    }

    pub fn charge(&self) -> f64 {
        self.rho.iter().sum::<f64>() * self.geom.cell_volume()
    }
}
