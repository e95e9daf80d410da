//! Adaptive Gauss-Kronrod quadrature for vector-valued integrands, plus a
//! few scalar root finders.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_INTERVALS: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub const TIGHT: Tolerance = Tolerance {
        abs: 1e-15,
        rel: 1e-13,
    };

    pub fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel }
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self::TIGHT
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Integral<const K: usize> {
    pub value: [f64; K],
    pub abs_error: f64,
}

struct Segment<const K: usize> {
    a: f64,
    b: f64,
    value: [f64; K],
    error: f64,
}

impl<const K: usize> PartialEq for Segment<K> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<const K: usize> Eq for Segment<K> {}
impl<const K: usize> PartialOrd for Segment<K> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<const K: usize> Ord for Segment<K> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<const K: usize, F: Fn(f64) -> [f64; K]>(f: &F, a: f64, b: f64) -> ([f64; K], f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut kron = [0.0; K];
    let mut gauss = [0.0; K];
    let fc = f(c);
    for k in 0..K {
        kron[k] = WGK[7] * fc[k];
        gauss[k] = WG[3] * fc[k];
    }
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        for k in 0..K {
            let s = f1[k] + f2[k];
            kron[k] += WGK[j] * s;
            if j % 2 == 1 {
                gauss[k] += WG[j / 2] * s;
            }
        }
    }
    let mut err = 0.0_f64;
    for k in 0..K {
        kron[k] *= h;
        gauss[k] *= h;
        err = err.max((kron[k] - gauss[k]).abs());
    }
    (kron, err)
}

fn norm<const K: usize>(v: &[f64; K]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Integrates a vector-valued `f` over `[a, b]`. Errors only when the result
/// is not finite.
pub fn integrate<const K: usize, F>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Integral<K>>
where
    F: Fn(f64) -> [f64; K],
{
    if a == b {
        return Ok(Integral {
            value: [0.0; K],
            abs_error: 0.0,
        });
    }
    let (value, error) = gk15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error });
    let mut total = value;
    let mut total_err = error;
    let mut count = 1;
    while total_err > tol.abs.max(tol.rel * norm(&total)) && count < MAX_INTERVALS {
        let seg = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            heap.push(seg);
            break;
        }
        let (v1, e1) = gk15(&f, seg.a, mid);
        let (v2, e2) = gk15(&f, mid, seg.b);
        for k in 0..K {
            total[k] += v1[k] + v2[k] - seg.value[k];
        }
        total_err += e1 + e2 - seg.error;
        heap.push(Segment {
            a: seg.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: seg.b,
            value: v2,
            error: e2,
        });
        count += 1;
    }
    // Re-sum to shed accumulated cancellation in the running total.
    let mut value = [0.0; K];
    let mut err = 0.0;
    for seg in heap.iter() {
        for k in 0..K {
            value[k] += seg.value[k];
        }
        err += seg.error;
    }
    if value.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("integral over [{a}, {b}]")));
    }
    Ok(Integral {
        value,
        abs_error: err,
    })
}

/// Integrates `f` over `[a, inf)`. The piece beyond `a + scale` is mapped to
/// `(0, 1]` through `s = a + scale / t^2`.
pub fn integrate_to_infinity<const K: usize, F>(
    f: F,
    a: f64,
    scale: f64,
    tol: Tolerance,
) -> Result<Integral<K>>
where
    F: Fn(f64) -> [f64; K],
{
    if !(scale > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tail scale must be positive, got {scale}"
        )));
    }
    let head = integrate(&f, a, a + scale, tol)?;
    let tail = integrate(
        |t: f64| {
            let s = a + scale / (t * t);
            let jac = 2.0 * scale / (t * t * t);
            let mut v = f(s);
            for x in v.iter_mut() {
                *x *= jac;
            }
            v
        },
        0.0,
        1.0,
        tol,
    )?;
    let mut value = head.value;
    for k in 0..K {
        value[k] += tail.value[k];
    }
    Ok(Integral {
        value,
        abs_error: head.abs_error + tail.abs_error,
    })
}

pub fn integrate_scalar<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<f64> {
    Ok(integrate(|x| [f(x)], a, b, tol)?.value[0])
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            if n == 0 {
                break;
            }
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Bisection on a bracket with `f(lo)` and `f(hi)` of opposite sign.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, iters: usize) -> Result<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() || !flo.is_finite() || !fhi.is_finite() {
        return Err(Error::Convergence(format!(
            "root not bracketed on [{lo}, {hi}]"
        )));
    }
    for _ in 0..iters {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Newton iteration kept inside a sign-changing bracket; falls back to
/// bisection whenever the Newton step would leave it.
pub fn safeguarded_newton<F>(f: F, mut lo: f64, mut hi: f64, x0: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> (f64, f64),
{
    let flo = f(lo).0;
    let fhi = f(hi).0;
    if flo.signum() == fhi.signum() && flo != 0.0 && fhi != 0.0 {
        return Err(Error::Convergence(format!(
            "root not bracketed on [{lo}, {hi}]"
        )));
    }
    let rising = fhi > flo;
    let mut x = x0.clamp(lo, hi);
    for _ in 0..200 {
        let (fx, dfx) = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if (fx > 0.0) == rising {
            hi = x;
        } else {
            lo = x;
        }
        let mut next = x - fx / dfx;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= tol * (1.0 + x.abs()) || hi - lo <= tol * (1.0 + x.abs()) {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// Expands `[lo, hi]` geometrically upwards until `f` changes sign.
pub fn bracket_upwards<F: Fn(f64) -> f64>(f: F, lo: f64, mut hi: f64) -> Result<(f64, f64)> {
    let flo = f(lo);
    let mut prev = lo;
    for _ in 0..200 {
        let fh = f(hi);
        if fh.is_finite() && fh.signum() != flo.signum() {
            return Ok((prev, hi));
        }
        prev = hi;
        hi *= 2.0;
    }
    Err(Error::Convergence(format!(
        "no sign change found above {lo}"
    )))
}
