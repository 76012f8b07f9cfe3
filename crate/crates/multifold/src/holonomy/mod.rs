//! Holonomy of the perturbed foliation in the chart `(z, w)`.
//!
//! In the chart the leaves are graphs `w(z)` of
//!
//! ```text
//! dw/dz = ε w / (1 + κ a sin z / √(1 - w))
//! ```
//!
//! where `κ` depends on the [`Coupling`]. Lifting the real segment
//! `z ∈ [0, 2πm]` from `w = u` gives the iterated return map `P^m(u)`; the
//! variational equation is carried along for `dP^m/du`.

mod dopri;

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::algebra::{ensure_finite, principal_sqrt, Complex};
use crate::config::{EngineConfig, IntegratorConfig};
use crate::error::{Error, Result};
use crate::geometry::{chart_to_ambient, AmbientPoint, ChartPoint};
use dopri::Dopri5;

/// How the second perturbation form enters the family.
///
/// `Direct` is `ker(dH + ε ω₁ + a ω₂)`: the chart form is
/// `dw - εw dz + a sin z/√(1-w) dw` and the first-order displacement of
/// `P^m` at `ε = i/m` is `a π b_m u^{m+1}`.
///
/// `EpsilonScaled` is `ker(dH + ε(ω₁ + a ω₂))`: the chart form carries
/// `εa` and the first-order displacement picks up an extra factor `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coupling {
    #[default]
    Direct,
    EpsilonScaled,
}

impl Coupling {
    /// Multiplier `κ` of `a` inside the chart denominator.
    pub fn factor(self, eps: Complex) -> Complex {
        match self {
            Coupling::Direct => Complex::new(1.0, 0.0),
            Coupling::EpsilonScaled => eps,
        }
    }
}

impl std::str::FromStr for Coupling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(Coupling::Direct),
            "epsilon-scaled" => Ok(Coupling::EpsilonScaled),
            other => {
                Err(Error::InvalidArgument(format!("unknown coupling {other:?} (expected direct or epsilon-scaled)")))
            }
        }
    }
}

/// The pair `(a, ε)` selecting one foliation of the family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyParams {
    pub a: Complex,
    pub eps: Complex,
    #[serde(default)]
    pub coupling: Coupling,
}

impl FamilyParams {
    pub fn new(a: Complex, eps: Complex) -> Self {
        Self { a, eps, coupling: Coupling::Direct }
    }

    pub fn with_coupling(self, coupling: Coupling) -> Self {
        Self { coupling, ..self }
    }

    pub fn with_eps(self, eps: Complex) -> Self {
        Self { eps, ..self }
    }

    /// `κ a`, the coefficient of `sin z / √(1-w)` in the chart denominator.
    pub fn effective_a(&self) -> Complex {
        self.coupling.factor(self.eps) * self.a
    }

    pub fn validate(&self, cfg: &EngineConfig) -> Result<()> {
        ensure_finite("a", self.a)?;
        ensure_finite("eps", self.eps)?;
        if self.a.norm() > cfg.r2 {
            return Err(Error::InvalidArgument(format!("|a| = {} exceeds r2 = {}", self.a.norm(), cfg.r2)));
        }
        Ok(())
    }
}

fn denominator(z: Complex, w: Complex, params: &FamilyParams, cfg: &IntegratorConfig) -> Result<(Complex, Complex)> {
    let one_minus_w = Complex::new(1.0, 0.0) - w;
    if one_minus_w.norm() == 0.0 {
        return Err(Error::ChartSingularity { w });
    }
    let root = principal_sqrt(one_minus_w);
    let d = 1.0 + params.effective_a() * z.sin() / root;
    if !(d.norm() > cfg.denom_floor) {
        return Err(Error::SingularRhs { z, w, denominator: d.norm() });
    }
    Ok((d, root))
}

/// `dw/dz` of the chart leaf through `(z, w)`.
pub fn ode_rhs(z: Complex, w: Complex, params: &FamilyParams, cfg: &IntegratorConfig) -> Result<Complex> {
    let (d, _) = denominator(z, w, params, cfg)?;
    Ok(params.eps * w / d)
}

fn rhs_and_partial(
    z: Complex,
    w: Complex,
    params: &FamilyParams,
    cfg: &IntegratorConfig,
) -> Result<(Complex, Complex)> {
    let (d, root) = denominator(z, w, params, cfg)?;
    let eps = params.eps;
    let one_minus_w = Complex::new(1.0, 0.0) - w;
    // ∂D/∂w = κ a sin z · ½ (1-w)^(-3/2)
    let d_dw = params.effective_a() * z.sin() * 0.5 / (one_minus_w * root);
    let f = eps * w / d;
    let f_w = eps / d - eps * w * d_dw / (d * d);
    Ok((f, f_w))
}

/// `(∂f/∂w) v`, the right-hand side of the variational equation.
pub fn variational_rhs(
    z: Complex,
    w: Complex,
    v: Complex,
    params: &FamilyParams,
    cfg: &IntegratorConfig,
) -> Result<Complex> {
    let (_, f_w) = rhs_and_partial(z, w, params, cfg)?;
    Ok(f_w * v)
}

/// Outcome of lifting a straight `z`-segment onto a leaf.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftResult {
    pub end_w: Complex,
    /// `∂ end_w / ∂ start_w`.
    pub end_sensitivity: Complex,
    pub trace: Option<Vec<ChartPoint>>,
    pub steps: usize,
    pub rejected_steps: usize,
}

/// Lifts `[z_from, z_to]` starting at `w0`, integrating `w` and its
/// sensitivity jointly. With `samples = Some(n)` the lift is also recorded at
/// `n + 1` equally spaced points including both ends.
pub fn integrate_segment(
    z_from: Complex,
    z_to: Complex,
    w0: Complex,
    params: &FamilyParams,
    cfg: &EngineConfig,
    samples: Option<usize>,
) -> Result<LiftResult> {
    ensure_finite("z_from", z_from)?;
    ensure_finite("z_to", z_to)?;
    ensure_finite("w0", w0)?;
    for z in [z_from, z_to] {
        if z.im.abs() >= cfg.r0 {
            return Err(Error::InvalidArgument(format!("segment endpoint {z} leaves the band |Im z| < {}", cfg.r0)));
        }
    }
    let limit = cfg.chart_exit_radius;
    if w0.norm() > limit {
        return Err(Error::ChartExit { z: z_from, modulus: w0.norm(), limit });
    }

    let length = (z_to - z_from).norm();
    let n = samples.unwrap_or(1).max(1);
    let mut trace = samples.map(|_| vec![ChartPoint::new(z_from, w0)]);
    if length == 0.0 {
        if let Some(t) = trace.as_mut() {
            t.resize(n + 1, ChartPoint::new(z_from, w0));
        }
        return Ok(LiftResult {
            end_w: w0,
            end_sensitivity: Complex::new(1.0, 0.0),
            trace,
            steps: 0,
            rejected_steps: 0,
        });
    }

    let dir = (z_to - z_from) / length;
    let integ = &cfg.integrator;
    let rhs = |tau: f64, y: &[Complex; 2]| -> Result<[Complex; 2]> {
        let z = z_from + dir * tau;
        let (f, f_w) = rhs_and_partial(z, y[0], params, integ)?;
        Ok([dir * f, dir * f_w * y[1]])
    };
    let mut solver = Dopri5::new(rhs, integ);
    let mut y = [w0, Complex::new(1.0, 0.0)];
    for k in 0..n {
        let t0 = length * k as f64 / n as f64;
        let t1 = length * (k + 1) as f64 / n as f64;
        solver.advance(t0, t1, &mut y, |tau, y| {
            let modulus = y[0].norm();
            if modulus > limit {
                Err(Error::ChartExit { z: z_from + dir * tau, modulus, limit })
            } else {
                Ok(())
            }
        })?;
        if let Some(t) = trace.as_mut() {
            t.push(ChartPoint::new(z_from + dir * t1, y[0]));
        }
    }
    if let Some(t) = trace.as_mut() {
        if let Some(last) = t.last_mut() {
            last.z = z_to;
        }
    }
    Ok(LiftResult { end_w: y[0], end_sensitivity: y[1], trace, steps: solver.steps, rejected_steps: solver.rejected })
}

/// Value and derivative of the `m`-th iterate of the return map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoincareValue {
    pub value: Complex,
    pub derivative: Complex,
}

/// `P^m(u)` and `dP^m/du`, from lifting `z ∈ [0, 2πm]` through `w = u`.
pub fn poincare_map(u: Complex, params: &FamilyParams, m: u32, cfg: &EngineConfig) -> Result<PoincareValue> {
    if m == 0 {
        return Err(Error::InvalidArgument("iteration count m must be positive".into()));
    }
    let lift = integrate_segment(Complex::new(0.0, 0.0), Complex::new(TAU * f64::from(m), 0.0), u, params, cfg, None)?;
    Ok(PoincareValue { value: lift.end_w, derivative: lift.end_sensitivity })
}

/// Closed-form multiplier of the trivial fixed point `u = 0` of `P^m`.
///
/// At `w = 0` the variational equation is `v' = ε v / (1 + κ a sin z)`, and
/// `∫₀^{2πm} dz / (1 + k sin z) = 2πm / √(1 - k²)` for `|k| < 1`.
pub fn trivial_multiplier(params: &FamilyParams, m: u32) -> Complex {
    let k = params.effective_a();
    let root = principal_sqrt(Complex::new(1.0, 0.0) - k * k);
    (params.eps * TAU * f64::from(m) / root).exp()
}

/// Lift of `m` turns with a dense trace (`trace_samples_per_period` per turn).
pub fn lift_loop(u: Complex, params: &FamilyParams, m: u32, cfg: &EngineConfig) -> Result<LiftResult> {
    let samples = cfg.trace_samples_per_period * m as usize;
    integrate_segment(Complex::new(0.0, 0.0), Complex::new(TAU * f64::from(m), 0.0), u, params, cfg, Some(samples))
}

/// Closed ambient loop traced by the leaf through an `m`-periodic point.
///
/// The final sample (which returns to the start) is dropped; closure is implied.
pub fn holonomy_loop_trace(u: Complex, params: &FamilyParams, m: u32, cfg: &EngineConfig) -> Result<Vec<AmbientPoint>> {
    let lift = lift_loop(u, params, m, cfg)?;
    let residual = (lift.end_w - u).norm();
    if residual >= cfg.closure_tol {
        return Err(Error::NotACycle { residual, tolerance: cfg.closure_tol });
    }
    let trace = lift.trace.expect("dense lift records a trace");
    trace[..trace.len() - 1].iter().map(|p| chart_to_ambient(*p)).collect()
}
