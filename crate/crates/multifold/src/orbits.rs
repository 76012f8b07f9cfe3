//! Periodic orbits of the return map: damped Newton refinement, minimal
//! period certification, argument-principle zero counts and the
//! constructive parameter search around the resonance `ε = i/m`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{ensure_finite, melnikov_constant, Complex, I};
use crate::config::EngineConfig;
use crate::error::{Error, Result};
use crate::holonomy::{poincare_map, Coupling, FamilyParams, PoincareValue};

/// An `m`-periodic orbit `u_1 → u_2 → … → u_m → u_1` of the return map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    pub m: u32,
    #[serde(flatten)]
    pub params: FamilyParams,
    pub points: Vec<Complex>,
    /// `max_j |P(u_j) - u_{j+1}|`.
    pub residual: f64,
    /// `dP^m/du` at `u_1`.
    pub multiplier: Complex,
    /// No `P^k(u_1)` with `1 ≤ k < m` returns to `u_1`.
    pub minimal: bool,
}

impl PeriodicOrbit {
    pub fn max_modulus(&self) -> f64 {
        self.points.iter().map(|u| u.norm()).fold(0.0, f64::max)
    }

    /// Radius within which the true orbit is known, `|g| / |dP^m/du - 1|`
    /// with `|g|` bounded by the Newton tolerance. Never below `floor`.
    pub fn location_uncertainty(&self, newton_tol: f64, floor: f64) -> f64 {
        let slope = (self.multiplier - 1.0).norm();
        let g_bound = newton_tol * self.max_modulus().max(1.0);
        if slope == 0.0 {
            return f64::INFINITY;
        }
        (g_bound / slope).max(floor)
    }

    /// Symmetric Hausdorff distance between the point sets of two orbits.
    pub fn distance(&self, other: &PeriodicOrbit) -> f64 {
        fn one_sided(a: &[Complex], b: &[Complex]) -> f64 {
            a.iter().map(|p| b.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max)
        }
        one_sided(&self.points, &other.points).max(one_sided(&other.points, &self.points))
    }
}

/// Where Newton ended up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NewtonOutcome {
    /// Converged to the fixed point `u = 0` shared by every member of the family.
    Trivial {
        multiplier: Complex,
        iterations: usize,
    },
    Orbit {
        orbit: PeriodicOrbit,
        iterations: usize,
    },
}

impl NewtonOutcome {
    pub fn orbit(self) -> Option<PeriodicOrbit> {
        match self {
            NewtonOutcome::Orbit { orbit, .. } => Some(orbit),
            NewtonOutcome::Trivial { .. } => None,
        }
    }
}

/// Damped Newton on `g(u) = P^m(u) - u`, using the variational derivative.
///
/// A step is halved (up to `newton_max_halvings` times) while `|g|` fails to
/// decrease or the trial point cannot be evaluated.
pub fn newton_periodic_point(
    seed: Complex,
    params: &FamilyParams,
    m: u32,
    cfg: &EngineConfig,
) -> Result<NewtonOutcome> {
    ensure_finite("seed", seed)?;
    let mut u = seed;
    let mut eval = poincare_map(u, params, m, cfg)?;
    let mut g = eval.value - u;
    for iteration in 0..=cfg.newton_max_iter {
        if g.norm() < cfg.newton_tol * u.norm().max(1.0) {
            polish(&mut u, &mut eval, params, m, cfg);
            if u.norm() < cfg.trivial_tol {
                return Ok(NewtonOutcome::Trivial { multiplier: eval.derivative, iterations: iteration });
            }
            let orbit = certify_orbit(u, params, m, cfg)?;
            return Ok(NewtonOutcome::Orbit { orbit, iterations: iteration });
        }
        if iteration == cfg.newton_max_iter {
            break;
        }
        let slope = eval.derivative - 1.0;
        if slope.norm() == 0.0 {
            break;
        }
        let step = g / slope;
        let mut lambda = 1.0;
        let mut next: Option<(Complex, PoincareValue)> = None;
        for _ in 0..=cfg.newton_max_halvings {
            let trial = u - step * lambda;
            if let Ok(e) = poincare_map(trial, params, m, cfg) {
                let decreased = (e.value - trial).norm() < g.norm();
                next = Some((trial, e));
                if decreased {
                    break;
                }
            }
            lambda *= 0.5;
        }
        let Some((trial, e)) = next else {
            break;
        };
        u = trial;
        eval = e;
        g = eval.value - u;
    }
    Err(Error::NoConvergence { iterations: cfg.newton_max_iter, residual: g.norm() })
}

/// Full Newton steps past the convergence threshold, kept while `|g|` keeps
/// dropping. A weakly hyperbolic orbit (`|dP^m/du - 1| ≪ 1`) is located only
/// to `|g| / |dP^m/du - 1|`, so the threshold alone leaves it loose.
fn polish(u: &mut Complex, eval: &mut PoincareValue, params: &FamilyParams, m: u32, cfg: &EngineConfig) {
    for _ in 0..4 {
        let g = eval.value - *u;
        let slope = eval.derivative - 1.0;
        if g.norm() == 0.0 || slope.norm() == 0.0 {
            return;
        }
        let trial = *u - g / slope;
        match poincare_map(trial, params, m, cfg) {
            Ok(e) if (e.value - trial).norm() < 0.5 * g.norm() => {
                *u = trial;
                *eval = e;
            }
            _ => return,
        }
    }
}

/// Builds the orbit through `u1` by forward iteration and checks closure and
/// minimality.
pub fn certify_orbit(u1: Complex, params: &FamilyParams, m: u32, cfg: &EngineConfig) -> Result<PeriodicOrbit> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be positive".into()));
    }
    let mut points = Vec::with_capacity(m as usize);
    let mut multiplier = Complex::new(1.0, 0.0);
    let mut u = u1;
    points.push(u);
    for j in 0..m {
        let step = poincare_map(u, params, 1, cfg)?;
        multiplier *= step.derivative;
        u = step.value;
        if j + 1 < m {
            points.push(u);
        }
    }
    let residual = (u - u1).norm();
    if residual >= cfg.closure_tol {
        return Err(Error::NotACycle { residual, tolerance: cfg.closure_tol });
    }
    let separation = points[1..].iter().map(|p| (p - u1).norm()).fold(f64::INFINITY, f64::min);
    Ok(PeriodicOrbit { m, params: *params, points, residual, multiplier, minimal: separation > cfg.separation_tol })
}

/// Recomputes an orbit from its first point and checks that the stored
/// points agree within `tol`.
pub fn recertify(orbit: &PeriodicOrbit, tol: f64, cfg: &EngineConfig) -> Result<PeriodicOrbit> {
    let fresh = certify_orbit(orbit.points[0], &orbit.params, orbit.m, cfg)?;
    let drift = fresh.points.iter().zip(&orbit.points).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    if fresh.points.len() != orbit.points.len() || drift > tol {
        return Err(Error::NotACycle { residual: drift, tolerance: tol });
    }
    Ok(fresh)
}

/// `μ(ε) = min_{1 ≤ k < m} |e^{2πkε} - 1|`, the linear separation of the
/// first `m - 1` iterates from the identity. `∞` for `m = 1`.
pub fn separation_margin(eps: Complex, m: u32) -> f64 {
    (1..m).map(|k| ((eps * TAU * f64::from(k)).exp() - 1.0).norm()).fold(f64::INFINITY, f64::min)
}

/// Resonant parameter and seeds for an `m`-orbit of radius about `rho`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstOrderSeed {
    /// Solves `μ₀(a, ε) - 1 = -κ a c ρ^m`, where `μ₀` is the exact multiplier
    /// of the trivial fixed point.
    pub eps: Complex,
    /// Solves the truncated balance `e^{2πmε} - 1 = -κ a c ρ^m`.
    pub eps_uncorrected: Complex,
    /// The `m` roots of `u^m = ρ^m`.
    pub seeds: Vec<Complex>,
}

/// Balances the linear part of `P^m(u) - u` against the first-order
/// Melnikov term `κ a c u^{m+1}` (with `c = π b_m`) so that the `m` nonzero
/// roots of `g(u) = P^m(u)/u - 1` sit near `|u| = ρ`.
///
/// The linear part is the trivial multiplier `exp(2πmε / √(1 - (κa)²))`
/// rather than its `a = 0` value `e^{2πmε}`: at `a = 10⁻²` the `O(a²)`
/// shift of the former exceeds `a c ρ^m` for every `m ≥ 2` at `ρ = 0.1`.
pub fn seed_from_first_order(
    m: u32,
    a: Complex,
    rho: f64,
    coupling: Coupling,
    cfg: &EngineConfig,
) -> Result<FirstOrderSeed> {
    ensure_finite("a", a)?;
    if m == 0 {
        return Err(Error::InvalidArgument("m must be positive".into()));
    }
    if a.norm() == 0.0 {
        return Err(Error::InvalidArgument("a must be nonzero".into()));
    }
    if !(rho > 0.0 && rho < cfg.r1) {
        return Err(Error::InvalidArgument(format!("rho = {rho} must lie in (0, r1 = {})", cfg.r1)));
    }
    let mf = f64::from(m);
    let kappa = coupling.factor(I / mf);
    let displacement = kappa * a * melnikov_constant(m) * rho.powi(m as i32);
    if displacement.norm() >= 1.0 {
        return Err(Error::InvalidArgument(format!(
            "first-order balance unsolvable: |κ a c ρ^m| = {} ≥ 1",
            displacement.norm()
        )));
    }
    let target = (1.0 - displacement).ln() + 2.0 * PI * I;
    let eps_uncorrected = target / (TAU * mf);

    let mut eps = eps_uncorrected;
    for _ in 0..100 {
        let k = coupling.factor(eps) * a;
        let next = (1.0 - k * k).sqrt() * target / (TAU * mf);
        let change = (next - eps).norm();
        eps = next;
        if change <= 1e-17 {
            break;
        }
    }
    let seeds = (0..m).map(|k| Complex::from_polar(rho, TAU * f64::from(k) / mf)).collect();
    Ok(FirstOrderSeed { eps, eps_uncorrected, seeds })
}

/// Number of zeros of `P^m(u) - u` inside a disc.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroCountReport {
    pub disc_center: Complex,
    pub disc_radius: f64,
    pub count: u32,
    pub samples_used: usize,
    pub min_abs_g: f64,
}

/// Counts zeros of `g(u) = P^m(u) - u` in the disc by the winding of `g`
/// along its boundary. The contour is refined until every consecutive
/// argument increment is below π/2.
pub fn count_fixed_points_argument_principle(
    params: &FamilyParams,
    m: u32,
    disc_center: Complex,
    disc_radius: f64,
    cfg: &EngineConfig,
) -> Result<ZeroCountReport> {
    ensure_finite("disc_center", disc_center)?;
    if !(disc_radius > 0.0) || disc_center.norm() + disc_radius > cfg.r1 {
        return Err(Error::InvalidArgument(format!(
            "disc |u - {disc_center}| ≤ {disc_radius} must lie inside |u| ≤ r1 = {}",
            cfg.r1
        )));
    }
    let g_at = |theta: f64| -> Result<Complex> {
        let u = disc_center + Complex::from_polar(disc_radius, theta);
        Ok(poincare_map(u, params, m, cfg)?.value - u)
    };
    let eval_all = |thetas: &[f64]| -> Result<Vec<Complex>> { thetas.par_iter().map(|t| g_at(*t)).collect() };

    let n0 = cfg.contour_initial_samples;
    let mut thetas: Vec<f64> = (0..n0).map(|k| TAU * k as f64 / n0 as f64).collect();
    let mut values = eval_all(&thetas)?;
    let increment = |a: Complex, b: Complex| {
        let r = b / a;
        r.im.atan2(r.re)
    };
    loop {
        let min_abs_g = values.iter().map(|g| g.norm()).fold(f64::INFINITY, f64::min);
        if !(min_abs_g > cfg.zero_floor) {
            return Err(Error::Indeterminate(format!(
                "|P^m(u) - u| drops to {min_abs_g:e} on the contour (floor {:e})",
                cfg.zero_floor
            )));
        }
        let n = thetas.len();
        let coarse: Vec<usize> =
            (0..n).filter(|&k| increment(values[k], values[(k + 1) % n]).abs() >= FRAC_PI_2).collect();
        if coarse.is_empty() {
            let total: f64 = (0..n).map(|k| increment(values[k], values[(k + 1) % n])).sum();
            let winding = (total / TAU).round();
            if winding < 0.0 {
                return Err(Error::Indeterminate(format!("negative winding {winding} for a holomorphic map")));
            }
            return Ok(ZeroCountReport { disc_center, disc_radius, count: winding as u32, samples_used: n, min_abs_g });
        }
        if n + coarse.len() > cfg.contour_max_samples {
            return Err(Error::Indeterminate(format!(
                "contour refinement exceeds {} samples",
                cfg.contour_max_samples
            )));
        }
        let mids: Vec<f64> = coarse
            .iter()
            .map(|&k| {
                let hi = if k + 1 == n { TAU } else { thetas[k + 1] };
                0.5 * (thetas[k] + hi)
            })
            .collect();
        let mid_values = eval_all(&mids)?;
        let mut merged: Vec<(f64, Complex)> = thetas.into_iter().zip(values).collect();
        merged.extend(mids.into_iter().zip(mid_values));
        merged.sort_by(|a, b| a.0.total_cmp(&b.0));
        (thetas, values) = merged.into_iter().unzip();
    }
}

/// Newton from every seed; distinct orbits in order of first discovery.
/// Seeds that fail, or converge to the trivial fixed point, are dropped.
pub fn find_multifold_orbits(
    m: u32,
    params: &FamilyParams,
    seed_grid: &[Complex],
    cfg: &EngineConfig,
) -> Vec<PeriodicOrbit> {
    let found: Vec<Option<PeriodicOrbit>> = seed_grid
        .par_iter()
        .map(|seed| newton_periodic_point(*seed, params, m, cfg).ok().and_then(NewtonOutcome::orbit))
        .collect();
    let mut orbits: Vec<PeriodicOrbit> = Vec::new();
    for orbit in found.into_iter().flatten() {
        let own = orbit.location_uncertainty(cfg.newton_tol, cfg.dedup_tol);
        let duplicate = orbits.iter().any(|o| {
            let other = o.location_uncertainty(cfg.newton_tol, cfg.dedup_tol);
            o.distance(&orbit) < own + other
        });
        if !duplicate {
            orbits.push(orbit);
        }
    }
    orbits
}

/// Result of the constructive search for an isolated `m`-orbit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitSearch {
    pub m: u32,
    pub rho: f64,
    pub seed: FirstOrderSeed,
    pub orbits: Vec<PeriodicOrbit>,
    /// Every seed converged to `u = 0`: the parameters sit on the zero locus
    /// of the linear part and carry no nearby orbit.
    pub collapsed_to_trivial: bool,
}

/// Seeds at `(a, ε)` from [`seed_from_first_order`] and refines every seed.
pub fn search_orbit(m: u32, a: Complex, rho: f64, coupling: Coupling, cfg: &EngineConfig) -> Result<OrbitSearch> {
    let seed = seed_from_first_order(m, a, rho, coupling, cfg)?;
    let params = FamilyParams::new(a, seed.eps).with_coupling(coupling);
    params.validate(cfg)?;
    let outcomes: Vec<Result<NewtonOutcome>> =
        seed.seeds.par_iter().map(|s| newton_periodic_point(*s, &params, m, cfg)).collect();
    let collapsed_to_trivial = outcomes.iter().all(|o| matches!(o, Ok(NewtonOutcome::Trivial { .. })));
    let orbits = find_multifold_orbits(m, &params, &seed.seeds, cfg);
    Ok(OrbitSearch { m, rho, seed, orbits, collapsed_to_trivial })
}
