//! Continuation of an `m`-orbit family along a path in the `ε`-plane, and
//! detection of the escape of the family from the chart disc.
//!
//! Following an orbit from the resonance `ε ≈ i/m` toward `ε = 0`, the
//! linear part `μ₀ - 1` of `P^m(u) - u` grows while the nonlinear term
//! `a c u^{m+1}` does not, so the orbit radius `≈ (|μ₀ - 1| / |κ a| c)^{1/m}`
//! grows until the orbit leaves the disc.

use serde::{Deserialize, Serialize};

use crate::algebra::{melnikov_constant, Complex, I};
use crate::config::EngineConfig;
use crate::error::{Error, Result};
use crate::geometry::{verticality_check, PathSpec, Verticality, VerticalityReport};
use crate::holonomy::{holonomy_loop_trace, trivial_multiplier, FamilyParams};
use crate::orbits::{newton_periodic_point, NewtonOutcome, PeriodicOrbit};

/// A curve `s ↦ ε(s)`, `s ∈ [0, 1]` by normalized arc length, at fixed `a`.
/// Step sizes are in units of `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterPath {
    pub eps_path: PathSpec,
    pub a: Complex,
    pub step_init: f64,
    pub step_min: f64,
    pub step_max: f64,
}

impl ParameterPath {
    /// The straight segment `ε(s) = (1 - s) ε₀` with default step sizes.
    pub fn toward_zero(eps0: Complex, a: Complex) -> Result<Self> {
        Ok(Self {
            eps_path: PathSpec::segment(eps0, Complex::new(0.0, 0.0))?,
            a,
            step_init: 1e-6,
            step_min: 1e-10,
            step_max: 1e-2,
        })
    }

    fn validate(&self) -> Result<()> {
        if self.eps_path.is_closed() {
            return Err(Error::InvalidArgument("parameter path must be open".into()));
        }
        let ok = self.step_min > 0.0 && self.step_min <= self.step_init && self.step_init <= self.step_max;
        if !ok || !self.step_max.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "need 0 < step_min ≤ step_init ≤ step_max < ∞, got {} / {} / {}",
                self.step_min, self.step_init, self.step_max
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContinuationStatus {
    /// Reached the end of the path.
    Completed,
    /// The orbit left the disc of radius `escape_radius`, or the chart.
    Escaped,
    /// The corrector failed at the minimal step.
    NewtonLost,
    /// The next step would bring `|ε|` below `eps_floor`.
    EpsFloor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EscapeKind {
    /// `max_j |u_j|` exceeded the escape radius.
    Radius,
    /// A lift left the chart while correcting.
    ChartExit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Escape {
    pub s_star: f64,
    pub eps_star: Complex,
    /// Largest orbit modulus seen at `ε*`; for a chart exit, that of the last
    /// sample before it.
    pub max_modulus: f64,
    pub kind: EscapeKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationSample {
    pub s: f64,
    pub eps: Complex,
    pub orbit: PeriodicOrbit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationTrace {
    pub samples: Vec<ContinuationSample>,
    pub status: ContinuationStatus,
    pub escape: Option<Escape>,
    /// Why the corrector gave up, for `newton_lost`.
    pub failure: Option<String>,
}

/// One CSV row of a trace: one orbit point of one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub s: f64,
    pub eps_re: f64,
    pub eps_im: f64,
    pub j: usize,
    pub u_re: f64,
    pub u_im: f64,
    pub residual: f64,
}

impl ContinuationTrace {
    pub fn last(&self) -> &ContinuationSample {
        self.samples.last().expect("a trace holds at least its start")
    }

    /// Rows `(s, Re ε, Im ε, j, Re u_j, Im u_j, residual)` with `j` from 1.
    pub fn rows(&self) -> Vec<TraceRow> {
        self.samples
            .iter()
            .flat_map(|sample| {
                sample.orbit.points.iter().enumerate().map(move |(j, u)| TraceRow {
                    s: sample.s,
                    eps_re: sample.eps.re,
                    eps_im: sample.eps.im,
                    j: j + 1,
                    u_re: u.re,
                    u_im: u.im,
                    residual: sample.orbit.residual,
                })
            })
            .collect()
    }
}

/// Corrector outcome that the step controller can act on.
enum Correction {
    Accepted(PeriodicOrbit, usize),
    Rejected(Error),
}

/// Reorders `orbit` so that it starts at the point matched to `prev.points[0]`
/// and checks that every previous point has an unambiguous nearest successor.
fn match_branch(prev: &PeriodicOrbit, orbit: PeriodicOrbit) -> Result<PeriodicOrbit> {
    let n = orbit.points.len();
    let mut shift = 0;
    for (i, p) in prev.points.iter().enumerate() {
        let mut d: Vec<(f64, usize)> = orbit.points.iter().enumerate().map(|(k, q)| ((p - q).norm(), k)).collect();
        d.sort_by(|x, y| x.0.total_cmp(&y.0));
        if n > 1 && d[1].0 <= 2.0 * d[0].0 {
            return Err(Error::Indeterminate(format!(
                "branch matching ambiguous at point {i}: nearest {:e}, runner-up {:e}",
                d[0].0, d[1].0
            )));
        }
        if i == 0 {
            shift = d[0].1;
        } else if d[0].1 != (shift + i) % n {
            return Err(Error::Indeterminate(format!("orbit order changed at point {i}")));
        }
    }
    let mut orbit = orbit;
    orbit.points.rotate_left(shift);
    Ok(orbit)
}

fn correct(prev: &PeriodicOrbit, params: &FamilyParams, cfg: &EngineConfig) -> Correction {
    let outcome = match newton_periodic_point(prev.points[0], params, prev.m, cfg) {
        Ok(o) => o,
        Err(e) => return Correction::Rejected(e),
    };
    let (orbit, iterations) = match outcome {
        NewtonOutcome::Orbit { orbit, iterations } => (orbit, iterations),
        NewtonOutcome::Trivial { .. } => {
            return Correction::Rejected(Error::Indeterminate("corrector collapsed to u = 0".into()))
        }
    };
    if !orbit.minimal {
        return Correction::Rejected(Error::Indeterminate("corrected orbit is not minimal".into()));
    }
    match match_branch(prev, orbit) {
        Ok(orbit) => Correction::Accepted(orbit, iterations),
        Err(e) => Correction::Rejected(e),
    }
}

/// Follows `start` along `path`: the previous orbit is the predictor, Newton
/// the corrector. The step halves on corrector failure and doubles after a
/// corrector needing at most three iterations.
///
/// When a corrected orbit exceeds `escape_radius` the step is bisected down
/// to `step_min` to locate the crossing, and the first outside sample ends the
/// trace as `escaped`. `escape_radius = ∞` disables the radius test but not
/// the chart-exit test.
pub fn continue_orbit_family(
    start: &PeriodicOrbit,
    path: &ParameterPath,
    escape_radius: f64,
    cfg: &EngineConfig,
) -> Result<ContinuationTrace> {
    path.validate()?;
    if !(escape_radius > 0.0) {
        return Err(Error::InvalidArgument(format!("escape radius {escape_radius} must be positive")));
    }
    let eps0 = path.eps_path.point_at(0.0);
    if (start.params.eps - eps0).norm() > 1e-12 * eps0.norm().max(1.0) || start.params.a != path.a {
        return Err(Error::InvalidArgument(format!(
            "start orbit sits at (a, ε) = ({}, {}), path starts at ({}, {eps0})",
            start.params.a, start.params.eps, path.a
        )));
    }
    if !start.minimal {
        return Err(Error::InvalidArgument("start orbit is not certified minimal".into()));
    }

    let mut samples = vec![ContinuationSample { s: 0.0, eps: start.params.eps, orbit: start.clone() }];
    let finish = |samples, status, escape, failure| Ok(ContinuationTrace { samples, status, escape, failure });
    if path.eps_path.length() == 0.0 {
        return finish(samples, ContinuationStatus::Completed, None, None);
    }

    let mut s = 0.0;
    let mut h = path.step_init;
    // set once an outside orbit has been seen: from then on the step only shrinks
    let mut bracketing = false;
    loop {
        if s >= 1.0 {
            return finish(samples, ContinuationStatus::Completed, None, None);
        }
        let h_try = h.min(1.0 - s);
        let s_new = if h_try >= 1.0 - s { 1.0 } else { s + h_try };
        let eps_new = path.eps_path.point_at(s_new);
        if eps_new.norm() < cfg.eps_floor {
            return finish(samples, ContinuationStatus::EpsFloor, None, None);
        }
        let params = FamilyParams { eps: eps_new, ..start.params };
        let prev = &samples.last().expect("nonempty").orbit;
        match correct(prev, &params, cfg) {
            Correction::Accepted(orbit, iterations) => {
                let modulus = orbit.max_modulus();
                if modulus > escape_radius {
                    if h_try > path.step_min {
                        bracketing = true;
                        h = (0.5 * h_try).max(path.step_min);
                        continue;
                    }
                    samples.push(ContinuationSample { s: s_new, eps: eps_new, orbit });
                    let escape =
                        Escape { s_star: s_new, eps_star: eps_new, max_modulus: modulus, kind: EscapeKind::Radius };
                    return finish(samples, ContinuationStatus::Escaped, Some(escape), None);
                }
                samples.push(ContinuationSample { s: s_new, eps: eps_new, orbit });
                s = s_new;
                h = if iterations <= 3 && !bracketing { (2.0 * h_try).min(path.step_max) } else { h_try };
            }
            Correction::Rejected(err) => {
                if h_try > path.step_min {
                    h = (0.5 * h_try).max(path.step_min);
                    continue;
                }
                if err.is_chart_exit() {
                    let escape = Escape {
                        s_star: s_new,
                        eps_star: eps_new,
                        max_modulus: prev.max_modulus(),
                        kind: EscapeKind::ChartExit,
                    };
                    return finish(samples, ContinuationStatus::Escaped, Some(escape), Some(err.to_string()));
                }
                return finish(samples, ContinuationStatus::NewtonLost, None, Some(err.to_string()));
            }
        }
    }
}

/// First-order orbit radius `(|μ₀ - 1| / (|κ a| π b_m))^{1/m}`, with `μ₀` the
/// exact multiplier of the trivial fixed point of `P^m`.
pub fn first_order_envelope(params: &FamilyParams, m: u32) -> f64 {
    let linear = (trivial_multiplier(params, m) - 1.0).norm();
    (linear / (params.effective_a().norm() * melnikov_constant(m))).powf(1.0 / f64::from(m))
}

/// The same radius with `e^{2πmε}` in place of `μ₀` and `|a|` in place of
/// `|κ a|`, dropping every `O(a²)` term of the linear part.
pub fn first_order_envelope_truncated(params: &FamilyParams, m: u32) -> f64 {
    let linear = ((params.eps * std::f64::consts::TAU * f64::from(m)).exp() - 1.0).norm();
    (linear / (params.a.norm() * melnikov_constant(m))).powf(1.0 / f64::from(m))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub s: f64,
    pub eps: Complex,
    pub max_modulus: f64,
    /// `|ε - i/m|`.
    pub resonance_distance: f64,
    pub envelope: f64,
    pub verticality: VerticalityReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Escape,
    NonVertical,
    VerticalityIndeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstEvent {
    pub index: usize,
    pub s: f64,
    pub eps: Complex,
    pub kind: EventKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conclusion {
    /// The family left the domain at `ε*`.
    Escaped,
    /// The family stayed vertical and inside the chart along the whole path.
    NoEvent,
    /// The trace stopped at the `ε` floor or lost the branch before any event.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RapidEvolutionReport {
    pub m: u32,
    pub status: ContinuationStatus,
    pub rows: Vec<ReportRow>,
    pub first_event: Option<FirstEvent>,
    pub escape: Option<Escape>,
    pub conclusion: Conclusion,
    pub note: String,
}

/// Per-sample modulus, verticality of the holonomy loop and distance to the
/// resonance, and the first sample where the family escapes or stops being
/// vertical.
pub fn rapid_evolution_report(
    trace: &ContinuationTrace,
    critical_values: &[Complex],
    cfg: &EngineConfig,
) -> RapidEvolutionReport {
    let m = trace.samples.first().map_or(1, |s| s.orbit.m);
    let resonance = I / f64::from(m);
    let rows: Vec<ReportRow> = trace
        .samples
        .iter()
        .map(|sample| {
            let orbit = &sample.orbit;
            let verticality = match holonomy_loop_trace(orbit.points[0], &orbit.params, m, cfg) {
                Ok(ambient) => verticality_check(&ambient, critical_values, cfg.vertical_margin),
                Err(e) => VerticalityReport {
                    windings: Vec::new(),
                    verdict: Verticality::Indeterminate(format!("holonomy loop unavailable: {e}")),
                },
            };
            ReportRow {
                s: sample.s,
                eps: sample.eps,
                max_modulus: orbit.max_modulus(),
                resonance_distance: (sample.eps - resonance).norm(),
                envelope: first_order_envelope(&orbit.params, m),
                verticality,
            }
        })
        .collect();

    let mut first_event = rows.iter().enumerate().find_map(|(index, row)| {
        let kind = match row.verticality.vertical() {
            Some(true) => return None,
            Some(false) => EventKind::NonVertical,
            None => EventKind::VerticalityIndeterminate,
        };
        Some(FirstEvent { index, s: row.s, eps: row.eps, kind })
    });
    if first_event.is_none() {
        if let Some(escape) = trace.escape {
            first_event = Some(FirstEvent {
                index: trace.samples.len() - 1,
                s: escape.s_star,
                eps: escape.eps_star,
                kind: EventKind::Escape,
            });
        }
    }
    let conclusion = match (trace.status, first_event) {
        (ContinuationStatus::Escaped, _) => Conclusion::Escaped,
        (_, Some(_)) => Conclusion::Escaped,
        (ContinuationStatus::Completed, None) => Conclusion::NoEvent,
        _ => Conclusion::Inconclusive,
    };
    let note = "with a single critical value only escape from the chart disc is observable; \
                a change of homotopy type through cuts cannot occur"
        .to_string();
    RapidEvolutionReport { m, status: trace.status, rows, first_event, escape: trace.escape, conclusion, note }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::holonomy::Coupling;
    use crate::orbits::search_orbit;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    fn start_orbit(m: u32) -> PeriodicOrbit {
        let cfg = EngineConfig::default();
        let found = search_orbit(m, c(0.01, 0.0), 0.1, Coupling::Direct, &cfg).unwrap();
        found.orbits.into_iter().next().unwrap()
    }

    #[test]
    fn zero_length_path_is_complete() {
        let start = start_orbit(2);
        let path = ParameterPath {
            eps_path: PathSpec::open(vec![start.params.eps]).unwrap(),
            a: start.params.a,
            step_init: 1e-3,
            step_min: 1e-9,
            step_max: 1e-2,
        };
        let trace = continue_orbit_family(&start, &path, 0.3, &EngineConfig::default()).unwrap();
        assert_eq!(trace.status, ContinuationStatus::Completed);
        assert_eq!(trace.samples.len(), 1);
        assert_eq!(trace.samples[0].orbit, start);
    }

    #[test]
    fn rejects_mismatched_start() {
        let start = start_orbit(2);
        let path = ParameterPath::toward_zero(start.params.eps + 1e-3, start.params.a).unwrap();
        assert!(continue_orbit_family(&start, &path, 0.3, &EngineConfig::default()).is_err());
        let mut bad = path.clone();
        bad.eps_path = PathSpec::segment(start.params.eps, c(0.0, 0.0)).unwrap();
        bad.step_min = 1.0;
        assert!(continue_orbit_family(&start, &bad, 0.3, &EngineConfig::default()).is_err());
    }

    #[test]
    fn eps_floor_stops_trace() {
        let start = start_orbit(2);
        let cfg = EngineConfig { eps_floor: start.params.eps.norm() * (1.0 - 1e-5), ..EngineConfig::default() };
        let path = ParameterPath::toward_zero(start.params.eps, start.params.a).unwrap();
        let trace = continue_orbit_family(&start, &path, f64::INFINITY, &cfg).unwrap();
        assert_eq!(trace.status, ContinuationStatus::EpsFloor);
        assert!(trace.escape.is_none());
        assert!(trace.samples.iter().all(|s| s.eps.norm() >= cfg.eps_floor));
        let report = rapid_evolution_report(&trace, &[c(0.0, 0.0)], &cfg);
        assert_eq!(report.conclusion, Conclusion::Inconclusive);
        assert!(report.first_event.is_none());
    }

    #[test]
    fn branch_matching_rotates_and_refuses_ambiguity() {
        let start = start_orbit(3);
        let mut rotated = start.clone();
        rotated.points.rotate_left(1);
        let matched = match_branch(&start, rotated).unwrap();
        assert_eq!(matched.points, start.points);

        let mut collapsed = start.clone();
        collapsed.points = vec![c(0.0, 0.0); 3];
        assert!(match_branch(&start, collapsed).is_err());
    }

    #[test]
    fn envelopes_agree_at_start() {
        let start = start_orbit(3);
        let env = first_order_envelope(&start.params, 3);
        assert!((env - 0.1).abs() < 1e-9, "{env}");
        let truncated = first_order_envelope_truncated(&start.params, 3);
        assert!(truncated.is_finite() && truncated > 0.0);
    }

    #[test]
    fn rows_flatten_samples() {
        let start = start_orbit(2);
        let trace = ContinuationTrace {
            samples: vec![ContinuationSample { s: 0.0, eps: start.params.eps, orbit: start.clone() }],
            status: ContinuationStatus::Completed,
            escape: None,
            failure: None,
        };
        let rows = trace.rows();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].j, 2);
        assert_eq!(rows[1].u_re, start.points[1].re);
    }
}
