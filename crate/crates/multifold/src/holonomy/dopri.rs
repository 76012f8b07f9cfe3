//! Dormand–Prince 5(4) with PI step-size control over a complex state vector
//! driven by a real parameter.

use crate::algebra::Complex;
use crate::config::IntegratorConfig;
use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// fifth-order minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const ALPHA: f64 = 0.7 / 5.0;
const BETA: f64 = 0.4 / 5.0;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;

type State<const N: usize> = [Complex; N];

fn axpy<const N: usize>(y: &State<N>, h: f64, terms: &[(f64, &State<N>)]) -> State<N> {
    let mut out = *y;
    for (coef, k) in terms {
        if *coef == 0.0 {
            continue;
        }
        for i in 0..N {
            out[i] += k[i] * (h * coef);
        }
    }
    out
}

pub(crate) struct Dopri5<'a, F, const N: usize> {
    rhs: F,
    cfg: &'a IntegratorConfig,
    h: Option<f64>,
    err_prev: f64,
    pub steps: usize,
    pub rejected: usize,
}

impl<'a, F, const N: usize> Dopri5<'a, F, N>
where
    F: FnMut(f64, &State<N>) -> Result<State<N>>,
{
    pub fn new(rhs: F, cfg: &'a IntegratorConfig) -> Self {
        Self { rhs, cfg, h: None, err_prev: 1e-4, steps: 0, rejected: 0 }
    }

    fn scale(&self, y: &State<N>, i: usize) -> f64 {
        self.cfg.abs_tol + self.cfg.rel_tol * y[i].norm()
    }

    fn scaled_norm(&self, y: &State<N>, v: &State<N>) -> f64 {
        (0..N).map(|i| v[i].norm() / self.scale(y, i)).fold(0.0, f64::max)
    }

    fn initial_step(&mut self, t: f64, y: &State<N>, f0: &State<N>, span: f64) -> Result<f64> {
        let d0 = self.scaled_norm(y, y);
        let d1 = self.scaled_norm(y, f0);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(span);
        let y1 = axpy(y, h0, &[(1.0, f0)]);
        let f1 = (self.rhs)(t + h0, &y1)?;
        let diff: State<N> = std::array::from_fn(|i| f1[i] - f0[i]);
        let d2 = self.scaled_norm(y, &diff) / h0;
        let dm = d1.max(d2);
        let h1 = if dm <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / dm).powf(0.2) };
        Ok((100.0 * h0).min(h1).min(self.cfg.max_step).max(self.cfg.min_step))
    }

    /// Advances `y` from `t0` to `t1 > t0`. `on_step` sees every accepted state
    /// and may abort the integration.
    pub fn advance(
        &mut self,
        t0: f64,
        t1: f64,
        y: &mut State<N>,
        mut on_step: impl FnMut(f64, &State<N>) -> Result<()>,
    ) -> Result<()> {
        let span = t1 - t0;
        if span <= 0.0 {
            return Ok(());
        }
        let mut t = t0;
        let mut k1 = (self.rhs)(t, y)?;
        let mut h = match self.h {
            Some(h) => h,
            None => self.initial_step(t, y, &k1, span)?,
        };
        let mut just_rejected = false;
        loop {
            let remaining = t1 - t;
            if remaining <= span * 1e-14 {
                break;
            }
            let clipped = h >= remaining;
            let step = if clipped { remaining } else { h };

            let trial = self.try_step(t, y, &k1, step);
            let (y_new, k7, err) = match trial {
                Ok(v) => v,
                Err(e) => {
                    // a stage left the domain of the right-hand side
                    self.rejected += 1;
                    h = step * 0.5;
                    if h < self.cfg.min_step {
                        return Err(e);
                    }
                    just_rejected = true;
                    continue;
                }
            };

            if err <= 1.0 {
                let fac = SAFETY * err.max(1e-10).powf(-ALPHA) * self.err_prev.powf(BETA);
                let mut fac = fac.clamp(FAC_MIN, FAC_MAX);
                if just_rejected {
                    fac = fac.min(1.0);
                }
                self.err_prev = err.max(1e-4);
                t = if clipped { t1 } else { t + step };
                *y = y_new;
                k1 = k7;
                self.steps += 1;
                just_rejected = false;
                on_step(t, y)?;
                let next = (step * fac).min(self.cfg.max_step);
                h = if clipped { next.max(h) } else { next };
                h = h.min(self.cfg.max_step);
            } else {
                self.rejected += 1;
                let fac = (SAFETY * err.powf(-ALPHA)).clamp(FAC_MIN, 1.0);
                h = step * fac;
                if h < self.cfg.min_step {
                    return Err(Error::IntegrationFailure {
                        z: Complex::new(t, 0.0),
                        w: y[0],
                        reason: format!("step size underflow ({h:e} < {:e})", self.cfg.min_step),
                    });
                }
                just_rejected = true;
            }
        }
        self.h = Some(h);
        Ok(())
    }

    fn try_step(&mut self, t: f64, y: &State<N>, k1: &State<N>, h: f64) -> Result<(State<N>, State<N>, f64)> {
        let k2 = (self.rhs)(t + C2 * h, &axpy(y, h, &[(A21, k1)]))?;
        let k3 = (self.rhs)(t + C3 * h, &axpy(y, h, &[(A31, k1), (A32, &k2)]))?;
        let k4 = (self.rhs)(t + C4 * h, &axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]))?;
        let k5 = (self.rhs)(t + C5 * h, &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
        let k6 = (self.rhs)(t + h, &axpy(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]))?;
        let y_new = axpy(y, h, &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = (self.rhs)(t + h, &y_new)?;
        let err_vec =
            axpy(&[Complex::new(0.0, 0.0); N], h, &[(E1, k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)]);
        let err = (0..N)
            .map(|i| {
                let sc = self.cfg.abs_tol + self.cfg.rel_tol * y[i].norm().max(y_new[i].norm());
                err_vec[i].norm() / sc
            })
            .fold(0.0, f64::max);
        let finite = y_new.iter().all(|v| v.re.is_finite() && v.im.is_finite());
        let err = if finite && err.is_finite() { err } else { f64::INFINITY };
        Ok((y_new, k7, err))
    }
}
