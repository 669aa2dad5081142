//! Globally adaptive Gauss–Kronrod (7/15) integration of vector-valued
//! integrands on finite intervals.

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
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances and budget for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    /// Maximum number of integrand evaluations.
    pub max_evals: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct Integral<const K: usize> {
    pub value: [f64; K],
    /// Largest per-component absolute error estimate.
    pub error: f64,
    pub evals: usize,
}

struct Panel<const K: usize> {
    a: f64,
    b: f64,
    value: [f64; K],
    err: [f64; K],
    // ordering key
    worst: f64,
}

impl<const K: usize> PartialEq for Panel<K> {
    fn eq(&self, other: &Self) -> bool {
        self.worst == other.worst
    }
}
impl<const K: usize> Eq for Panel<K> {}
impl<const K: usize> PartialOrd for Panel<K> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<const K: usize> Ord for Panel<K> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.worst.total_cmp(&other.worst)
    }
}

fn kronrod<const K: usize, F>(f: &mut F, a: f64, b: f64) -> ([f64; K], [f64; K])
where
    F: FnMut(f64) -> [f64; K],
{
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let mut k15 = [0.0; K];
    let mut g7 = [0.0; K];
    let fc = f(c);
    for j in 0..K {
        k15[j] = WGK[7] * fc[j];
        g7[j] = WG[3] * fc[j];
    }
    for i in 0..7 {
        let dx = r * XGK[i];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        for j in 0..K {
            let s = f1[j] + f2[j];
            k15[j] += WGK[i] * s;
            if i % 2 == 1 {
                g7[j] += WG[i / 2] * s;
            }
        }
    }
    let mut err = [0.0; K];
    for j in 0..K {
        k15[j] *= r;
        err[j] = (k15[j] - g7[j] * r).abs();
    }
    (k15, err)
}

/// Integrate `f` over `[a, b]`, starting from `panels` equal subintervals
/// and bisecting the panel with the largest error until every component
/// meets `max(tol.abs, tol.rel * |value|)`.
pub fn integrate<const K: usize, F>(
    mut f: F,
    a: f64,
    b: f64,
    panels: usize,
    tol: Tolerance,
) -> Result<Integral<K>>
where
    F: FnMut(f64) -> [f64; K],
{
    let panels = panels.max(1);
    let mut heap = BinaryHeap::with_capacity(panels * 4);
    let mut evals = 0;
    let width = (b - a) / panels as f64;
    let push = |heap: &mut BinaryHeap<Panel<K>>, f: &mut F, lo: f64, hi: f64| {
        let (value, err) = kronrod(f, lo, hi);
        let worst = err.iter().cloned().fold(0.0, f64::max);
        heap.push(Panel { a: lo, b: hi, value, err, worst });
    };
    for i in 0..panels {
        let lo = a + width * i as f64;
        let hi = if i + 1 == panels { b } else { lo + width };
        push(&mut heap, &mut f, lo, hi);
        evals += 15;
    }

    loop {
        let mut total = [0.0; K];
        let mut total_err = [0.0; K];
        for p in heap.iter() {
            for j in 0..K {
                total[j] += p.value[j];
                total_err[j] += p.err[j];
            }
        }
        let done = (0..K).all(|j| total_err[j] <= tol.abs.max(tol.rel * total[j].abs()));
        let worst_err = total_err.iter().cloned().fold(0.0, f64::max);
        if done {
            return Ok(Integral { value: total, error: worst_err, evals });
        }
        if evals + 30 > tol.max_evals {
            return Err(Error::Quadrature { estimate: worst_err, nodes: evals });
        }
        let p = heap.pop().expect("at least one panel");
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            // Interval can no longer be split; accept what we have.
            return Ok(Integral { value: total, error: worst_err, evals });
        }
        push(&mut heap, &mut f, p.a, mid);
        push(&mut heap, &mut f, mid, p.b);
        evals += 30;
    }
}

/// Scalar convenience wrapper around [`integrate`].
pub fn integrate_scalar<F>(mut f: F, a: f64, b: f64, panels: usize, tol: Tolerance) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    integrate(|x| [f(x)], a, b, panels, tol).map(|r| r.value[0])
}
