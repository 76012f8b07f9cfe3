//! Globally adaptive Gauss–Kronrod (7, 15) quadrature of complex-valued
//! integrands on real intervals.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::algebra::Complex;
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
// 7-point Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

const MAX_PANELS: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: Complex,
    pub error_estimate: f64,
    pub evaluations: usize,
}

struct Panel {
    lo: f64,
    hi: f64,
    value: Complex,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gauss_kronrod<F: Fn(f64) -> Complex>(f: &F, lo: f64, hi: f64) -> Panel {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += pair * WGK[j];
        if j % 2 == 1 {
            gauss += pair * WG[j / 2];
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).norm();
    Panel { lo, hi, value, error }
}

/// Integrates `f` over `[lo, hi]`, starting from `initial_panels` equal
/// panels and bisecting the worst panel until the summed error estimate is
/// below `abs_tol`.
pub fn integrate<F: Fn(f64) -> Complex>(
    f: F,
    lo: f64,
    hi: f64,
    initial_panels: usize,
    abs_tol: f64,
) -> Result<QuadResult> {
    let n = initial_panels.max(1);
    let width = (hi - lo) / n as f64;
    let mut heap: BinaryHeap<Panel> = (0..n)
        .map(|k| {
            let a = lo + width * k as f64;
            let b = if k + 1 == n { hi } else { a + width };
            gauss_kronrod(&f, a, b)
        })
        .collect();
    let mut evaluations = 15 * n;
    loop {
        let error: f64 = heap.iter().map(|p| p.error).sum();
        if error <= abs_tol {
            let value = heap.iter().map(|p| p.value).sum();
            return Ok(QuadResult { value, error_estimate: error, evaluations });
        }
        if heap.len() >= MAX_PANELS {
            return Err(Error::Quadrature { estimate: error, tolerance: abs_tol });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            return Err(Error::Quadrature { estimate: error, tolerance: abs_tol });
        }
        heap.push(gauss_kronrod(&f, worst.lo, mid));
        heap.push(gauss_kronrod(&f, mid, worst.hi));
        evaluations += 30;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_exact() {
        let r = integrate(|x| Complex::new(x.powi(5), 2.0 * x), 0.0, 2.0, 1, 1e-12).unwrap();
        assert!((r.value - Complex::new(64.0 / 6.0, 4.0)).norm() < 1e-12);
    }

    #[test]
    fn oscillatory() {
        let r = integrate(|x| Complex::new(0.0, x).exp() * x.sin(), 0.0, 6.0 * PI, 3, 1e-12).unwrap();
        // ∫ e^{it} sin t over three periods = iπ·3
        assert!((r.value - Complex::new(0.0, 3.0 * PI)).norm() < 1e-11);
    }

    #[test]
    fn peaked_integrand_refines() {
        let f = |x: f64| Complex::new(1.0 / (1e-4 + x * x), 0.0);
        let r = integrate(f, -1.0, 1.0, 1, 1e-8).unwrap();
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!((r.value.re - exact).abs() < 1e-7);
        assert!(r.evaluations > 15);
    }

    #[test]
    fn non_convergence_reported() {
        let r = integrate(|x| Complex::new(1.0 / x.abs().sqrt().max(1e-300), 0.0), -1.0, 1.0, 2, 1e-300);
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }
}
