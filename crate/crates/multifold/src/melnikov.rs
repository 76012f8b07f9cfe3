//! Melnikov integrals of the resonant return map and the Pontryagin
//! abelian integral along the real cycles of `H`.
//!
//! At `ε = i/m` the unperturbed lift through `w = u` is `w(t) = u e^{it/m}`
//! and the first-order coefficient of `P^m` is
//!
//! ```text
//! I_m(u) = -(i/m) ∫₀^{2πm} sin t / √(1 - u e^{it/m}) dt = π b_m u^m .
//! ```

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{ensure_finite, principal_sqrt, series_coefficient_f64, Complex, I};
use crate::config::EngineConfig;
use crate::error::{Error, Result};
use crate::holonomy::{poincare_map, Coupling, FamilyParams};
use crate::quadrature;

/// `I_m(u)` by adaptive quadrature, to absolute error `abs_tol`.
pub fn melnikov_numeric(u: Complex, m: u32, abs_tol: f64) -> Result<Complex> {
    ensure_finite("u", u)?;
    if m == 0 {
        return Err(Error::InvalidArgument("m must be positive".into()));
    }
    if u.norm() >= 1.0 {
        return Err(Error::InvalidArgument(format!("|u| = {} must be below 1", u.norm())));
    }
    let mf = f64::from(m);
    let integrand = |t: f64| {
        let w = u * Complex::new(0.0, t / mf).exp();
        t.sin() / principal_sqrt(1.0 - w)
    };
    // the prefactor has modulus 1/m
    let r = quadrature::integrate(integrand, 0.0, TAU * mf, 4 * m as usize, abs_tol * mf)?;
    Ok(-(I / mf) * r.value)
}

/// `π b_m u^m`.
pub fn melnikov_closed_form(u: Complex, m: u32) -> Complex {
    u.powu(m) * (PI * series_coefficient_f64(m))
}

/// First-order coefficient `κ(i/m)` relating `P^m - u` at `ε = i/m` to
/// `a I_m(u) u` for the given coupling.
pub fn coupling_factor_at_resonance(coupling: Coupling, m: u32) -> Complex {
    coupling.factor(I / f64::from(m))
}

/// `(P^m(u) - u) / (κ a u)` at `ε = i/m`, which tends to `I_m(u)` as `a → 0`
/// with an `O(a)` error. For the direct coupling `κ = 1`.
pub fn melnikov_via_holonomy(
    u: Complex,
    m: u32,
    a_probe: f64,
    coupling: Coupling,
    cfg: &EngineConfig,
) -> Result<Complex> {
    ensure_finite("u", u)?;
    if u.norm() == 0.0 {
        return Err(Error::InvalidArgument("u = 0 cannot be divided out".into()));
    }
    if !(a_probe > 0.0 && a_probe <= 1e-3) {
        return Err(Error::InvalidArgument(format!("probe a = {a_probe} must lie in (0, 1e-3]")));
    }
    let eps = I / f64::from(m);
    let params = FamilyParams::new(Complex::new(a_probe, 0.0), eps).with_coupling(coupling);
    let p = poincare_map(u, &params, m, cfg)?;
    let kappa = coupling_factor_at_resonance(coupling, m);
    Ok((p.value - u) / (kappa * a_probe * u))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolonomyMelnikov {
    /// `(a_probe, value)` pairs.
    pub probes: Vec<(f64, Complex)>,
    /// Two-point Richardson extrapolation to `a = 0`, assuming a linear error.
    pub extrapolated: Complex,
}

/// Evaluates [`melnikov_via_holonomy`] at two probes and extrapolates to `a = 0`.
pub fn melnikov_richardson(
    u: Complex,
    m: u32,
    probes: [f64; 2],
    coupling: Coupling,
    cfg: &EngineConfig,
) -> Result<HolonomyMelnikov> {
    let [a1, a2] = probes;
    if a1 == a2 {
        return Err(Error::InvalidArgument("Richardson probes must differ".into()));
    }
    let v1 = melnikov_via_holonomy(u, m, a1, coupling, cfg)?;
    let v2 = melnikov_via_holonomy(u, m, a2, coupling, cfg)?;
    let extrapolated = (v2 * a1 - v1 * a2) / (a1 - a2);
    Ok(HolonomyMelnikov { probes: vec![(a1, v1), (a2, v2)], extrapolated })
}

/// Perturbation one-forms of the family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationForm {
    /// `(H - 1)(y dx - x dy)`
    Omega1,
    /// `y dH`
    Omega2,
    /// `ω₁ + a ω₂`
    Combined { a: Complex },
}

impl PerturbationForm {
    /// Value of the form at `(x, y)` on the tangent vector `(dx, dy)`.
    pub fn evaluate(&self, x: Complex, y: Complex, dx: Complex, dy: Complex) -> Complex {
        let h = x * x + y * y;
        let omega1 = (h - 1.0) * (y * dx - x * dy);
        let omega2 = || y * (x * dx + y * dy) * 2.0;
        match self {
            PerturbationForm::Omega1 => omega1,
            PerturbationForm::Omega2 => omega2(),
            PerturbationForm::Combined { a } => omega1 + *a * omega2(),
        }
    }
}

/// Abelian integral `∫_{δ_u} ω` over the cycle `x = √u cos θ, y = √u sin θ`
/// of the level `H = u`.
pub fn pontryagin_integral(u: Complex, form: PerturbationForm, abs_tol: f64) -> Result<Complex> {
    ensure_finite("u", u)?;
    if u.norm() == 0.0 {
        return Err(Error::InvalidArgument("u = 0 is the critical level of H".into()));
    }
    let r = principal_sqrt(u);
    let integrand = |theta: f64| {
        let (s, c) = theta.sin_cos();
        form.evaluate(r * c, r * s, -r * s, r * c)
    };
    Ok(quadrature::integrate(integrand, 0.0, TAU, 8, abs_tol)?.value)
}

/// One row of a Melnikov sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub m: u32,
    pub u: Complex,
    pub numeric: Complex,
    pub closed_form: Complex,
    pub abs_error: f64,
}

/// Deterministic sunflower grid of `n` points filling `|u| ≤ radius`.
pub fn sweep_grid(n: usize, radius: f64) -> Vec<Complex> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|j| {
            let r = radius * ((j as f64 + 0.5) / n as f64).sqrt();
            Complex::from_polar(r, golden * j as f64)
        })
        .collect()
}

/// Numeric versus closed-form Melnikov integrals on a grid, in grid order.
pub fn melnikov_sweep(m: u32, grid: &[Complex], abs_tol: f64) -> Result<Vec<SweepRow>> {
    grid.par_iter()
        .map(|&u| {
            let numeric = melnikov_numeric(u, m, abs_tol)?;
            let closed_form = melnikov_closed_form(u, m);
            Ok(SweepRow { m, u, numeric, closed_form, abs_error: (numeric - closed_form).norm() })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    #[test]
    fn closed_form_examples() {
        assert!((melnikov_closed_form(c(0.2, 0.0), 1) - c(0.314_159_265_358_979_3, 0.0)).norm() < 1e-15);
        assert_eq!(melnikov_closed_form(c(0.0, 0.0), 3), c(0.0, 0.0));
        let v = melnikov_closed_form(c(0.1, 0.0), 4);
        assert!((v.re - PI * 35.0 / 128.0 * 1e-4).abs() < 1e-18);
        assert!((v.re - 8.590e-5).abs() < 1e-8);
    }

    #[test]
    fn numeric_examples() {
        let tol = 1e-10;
        assert!(melnikov_numeric(c(0.0, 0.0), 3, tol).unwrap().norm() < 1e-12);
        let v = melnikov_numeric(c(0.1, 0.0), 2, tol).unwrap();
        assert!((v - c(PI * 3.0 / 8.0 * 0.01, 0.0)).norm() < 1e-10);
        assert!((v.re - 0.011_781_0).abs() < 1e-7);
        let v = melnikov_numeric(c(0.0, 0.1), 3, tol).unwrap();
        assert!((v - c(0.0, -PI * 5.0 / 16.0 * 1e-3)).norm() < 1e-10);
        assert!((v.im + 9.8175e-4).abs() < 1e-8);
        assert!(melnikov_numeric(c(1.0, 0.0), 2, tol).is_err());
    }

    #[test]
    fn numeric_is_order_m_in_u() {
        for m in 1..=4 {
            let dir = Complex::from_polar(1.0, 0.7);
            let ratios: Vec<Complex> = [0.05, 0.1, 0.2]
                .iter()
                .map(|r| melnikov_numeric(dir * *r, m, 1e-12).unwrap() / (dir * *r).powu(m))
                .collect();
            for r in &ratios[1..] {
                assert!((r - ratios[0]).norm() < 1e-6 * ratios[0].norm(), "m={m} {ratios:?}");
            }
        }
    }

    #[test]
    fn pontryagin_examples() {
        let tol = 1e-12;
        assert!(pontryagin_integral(c(1.0, 0.0), PerturbationForm::Omega1, tol).unwrap().norm() < 1e-12);
        let v = pontryagin_integral(c(2.0, 0.0), PerturbationForm::Omega1, tol).unwrap();
        assert!((v - c(-4.0 * PI, 0.0)).norm() < 1e-10);
        for u in [c(0.5, 0.0), c(2.0, 0.3), c(-1.0, 0.5)] {
            assert!(pontryagin_integral(u, PerturbationForm::Omega2, tol).unwrap().norm() < 1e-10);
            // parametrization oracle: I(u) = -2πu(u - 1)
            let v = pontryagin_integral(u, PerturbationForm::Omega1, tol).unwrap();
            assert!((v + 2.0 * PI * u * (u - 1.0)).norm() < 1e-10);
            let combined = pontryagin_integral(u, PerturbationForm::Combined { a: c(0.3, 0.0) }, tol).unwrap();
            assert!((combined - v).norm() < 1e-10);
        }
        assert!(pontryagin_integral(c(0.0, 0.0), PerturbationForm::Omega1, tol).is_err());
    }

    #[test]
    fn holonomy_probe_rejects_bad_input() {
        let cfg = EngineConfig::default();
        assert!(melnikov_via_holonomy(c(0.0, 0.0), 2, 1e-4, Coupling::Direct, &cfg).is_err());
        assert!(melnikov_via_holonomy(c(0.1, 0.0), 2, 1e-2, Coupling::Direct, &cfg).is_err());
    }

    #[test]
    fn sweep_grid_fills_disc() {
        let g = sweep_grid(50, 0.3);
        assert_eq!(g.len(), 50);
        assert!(g.iter().all(|u| u.norm() <= 0.3));
        assert!(g.iter().any(|u| u.norm() > 0.29));
    }
}
