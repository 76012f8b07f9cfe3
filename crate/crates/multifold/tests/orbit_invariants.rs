use multifold::holonomy::poincare_map;
use multifold::orbits::{
    count_fixed_points_argument_principle, find_multifold_orbits, recertify, search_orbit, PeriodicOrbit,
};
use multifold::{Complex, Coupling, EngineConfig};

fn c(re: f64, im: f64) -> Complex {
    Complex::new(re, im)
}

fn orbit(m: u32, coupling: Coupling) -> PeriodicOrbit {
    let cfg = EngineConfig::default();
    let found = search_orbit(m, c(0.01, 0.0), 0.1, coupling, &cfg).unwrap();
    assert_eq!(found.orbits.len(), 1, "m={m} {coupling:?}");
    found.orbits.into_iter().next().unwrap()
}

#[test]
fn points_are_permuted_cyclically() {
    let cfg = EngineConfig::default();
    for coupling in [Coupling::Direct, Coupling::EpsilonScaled] {
        for m in [2, 3, 4] {
            let o = orbit(m, coupling);
            let n = o.points.len();
            for j in 0..n {
                let next = poincare_map(o.points[j], &o.params, 1, &cfg).unwrap().value;
                assert!((next - o.points[(j + 1) % n]).norm() < 1e-10);
                let back = poincare_map(o.points[j], &o.params, m, &cfg).unwrap().value;
                assert!((back - o.points[j]).norm() < 1e-10);
            }
        }
    }
}

#[test]
fn json_round_trip_recertifies() {
    let cfg = EngineConfig::default();
    let o = orbit(3, Coupling::Direct);
    let text = serde_json::to_string(&o).unwrap();
    let back: PeriodicOrbit = serde_json::from_str(&text).unwrap();
    assert_eq!(back, o);
    let fresh = recertify(&back, 1e-12, &cfg).unwrap();
    assert!(fresh.minimal);
}

#[test]
fn count_matches_newton_zeros() {
    let cfg = EngineConfig::default();
    for m in [2, 3] {
        let o = orbit(m, Coupling::Direct);
        let report = count_fixed_points_argument_principle(&o.params, m, c(0.0, 0.0), 0.15, &cfg).unwrap();
        assert_eq!(report.count, m + 1);
        // a disc around one orbit point holds that point alone
        let around = count_fixed_points_argument_principle(&o.params, m, o.points[0], 0.02, &cfg).unwrap();
        assert_eq!(around.count, 1);
    }
}

#[test]
fn small_parameter_shift_keeps_orbit() {
    // 1e-7 moves the linear part by ~2e-6, a fifth of the nonlinear balance a c ρ³
    let cfg = EngineConfig::default();
    let o = orbit(3, Coupling::Direct);
    let shifted = o.params.with_eps(o.params.eps + c(0.0, -1e-7));
    let seeds = o.points.clone();
    let moved = find_multifold_orbits(3, &shifted, &seeds, &cfg);
    assert_eq!(moved.len(), 1, "{moved:?}");
    let d = moved[0].distance(&o);
    assert!(d > 1e-4 && d < 0.1, "moved by {d}");
    assert!(moved[0].minimal && moved[0].residual < 1e-10);
}
