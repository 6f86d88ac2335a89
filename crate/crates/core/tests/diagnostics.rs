use proptest::prelude::*;

use elrot_core::config::{RunConfig, SlabSpec, TimeStep};
use elrot_core::diagnostics::{self, DzEllMeasure, Status};
use elrot_core::run::{self, Simulation};
use elrot_core::InitialCondition;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn bound_chain_is_consistent(g in 0.0..=0.25f64, rho in 1e-4..=0.25f64) {
        let b = diagnostics::dz_ell_bounds(g, rho);
        let q = 1.0 + 2.0 * g + 3.0 * g * g;
        prop_assert!((b.s3 - q * rho).abs() <= 1e-15);
        prop_assert!(b.sj >= b.s3);
        prop_assert!(b.d2_lower > 0.0 && b.lb3 > 0.0);
        prop_assert!(b.dz_ell_j <= b.vector && b.c_g <= b.vector);
        prop_assert!(b.vector <= b.bound_14rho, "{} > {}", b.vector, b.bound_14rho);
        prop_assert_eq!(b.bound_14rho, 14.0 * rho);
    }

    #[test]
    fn bounds_grow_with_rossby(g in 0.0..=0.25f64, r1 in 1e-3..0.2f64, dr in 1e-3..0.05f64) {
        let (a, b) = (diagnostics::dz_ell_bounds(g, r1), diagnostics::dz_ell_bounds(g, r1 + dr));
        prop_assert!(b.vector > a.vector && b.c_g > a.c_g && b.dz_ell_j > a.dz_ell_j);
    }

    #[test]
    fn certification_is_gated(
        g in 0.0..0.5f64,
        rho in 0.0..0.5f64,
        measured in 0.0..5.0f64,
    ) {
        let m = DzEllMeasure { vector: measured, horizontal: measured, vertical: measured };
        let c = diagnostics::certify_dz_ell(m, g, rho, 0.25, 0.25);
        let l = diagnostics::certify_dz_lambda(measured, g, rho, 0.25, 0.25);
        if g > 0.25 || rho > 0.25 {
            prop_assert_eq!(c.main.status, Status::NotApplicable);
            prop_assert_eq!(l.status, Status::NotApplicable);
        } else {
            let want = if measured <= 14.0 * rho { Status::Pass } else { Status::Fail };
            prop_assert_eq!(c.main.status, want);
            let want = if measured <= 9.0 * rho { Status::Pass } else { Status::Fail };
            prop_assert_eq!(l.status, want);
        }
        prop_assert_eq!(c.main.margin, c.main.threshold - measured);
    }

    #[test]
    fn pair_bound_and_floor_arithmetic(rho in 0.0..0.25f64, int in 0.0..0.23f64, d in 0.0..3.0f64) {
        let b = diagnostics::pair_bound(rho, int);
        prop_assert!((b - 0.5 * rho * (1.0 + (2.0 * int).exp())).abs() <= 1e-15);
        prop_assert!(b >= rho);
        let f = diagnostics::separation_floor(rho, d);
        prop_assert!(f <= d && (f * (1.0 + 14.0 * rho) - d).abs() <= 1e-12);
    }
}

#[test]
fn rossby_undefined_without_rotation() {
    assert!(diagnostics::rossby(1.0, 0.0).is_err());
    assert_eq!(diagnostics::rossby(2.0, 16.0).unwrap(), 0.125);
}

#[test]
fn slope_of_exact_power_law() {
    let xy: Vec<(f64, f64)> = [1.0, 2.0, 4.0, 8.0].iter().map(|x| (*x, 3.0 * x * x)).collect();
    assert!((diagnostics::log_log_slope(&xy).unwrap() - 2.0).abs() < 1e-12);
    assert!(diagnostics::log_log_slope(&xy[..1]).is_none());
}

fn small(omega: f64) -> RunConfig {
    RunConfig {
        n: 16,
        omega_rate: omega,
        nu: 0.0,
        dt: TimeStep::Fixed(2e-3),
        t_end: 0.04,
        initial_condition: InitialCondition::TaylorGreen,
        lattice: 6,
        pairs: 20,
        slabs: vec![SlabSpec { z0: 1.0, z1: 1.5 }, SlabSpec { z0: 2.5, z1: 3.0 }],
        slab_tracers: 4,
        cadence: 5,
        ..RunConfig::default()
    }
}

#[test]
fn slab_separation_dominates_distance() {
    let mut s = Simulation::new(small(32.0)).unwrap();
    s.run_to_end().unwrap();
    let rho = s.totals.rossby_max;
    let sep = diagnostics::set_separation_check(s.spectral(), &s.tracers, &s.el, 0, 1, rho).unwrap();
    assert!(sep.distance <= sep.delta + 1e-12, "{sep:?}");
    assert!(sep.holds(), "{sep:?}");
    assert!(diagnostics::set_separation_check(s.spectral(), &s.tracers, &s.el, 0, 5, rho).is_err());
}

#[test]
fn pairs_within_bound_on_short_run() {
    let mut s = Simulation::new(small(32.0)).unwrap();
    s.run_to_end().unwrap();
    let rho = s.totals.rossby_max;
    let rep = diagnostics::pair_separation_check(&s.tracers, rho, s.window.grad_u_int);
    assert_eq!(rep.pairs.len(), 20);
    assert!(rep.all_within(), "{rep:?}");
}

#[test]
fn planar_flow_keeps_columns_rigid() {
    let cfg = RunConfig {
        n: 16,
        dt: TimeStep::Auto { dt_max: 1e-2 },
        t_end: 0.2,
        identities: false,
        lattice: 0,
        pairs: 10,
        persistent_lattice: 6,
        ..RunConfig::default()
    };
    for (om, rep) in run::taylor_proudman(&cfg, &[1.0, 50.0]).unwrap() {
        assert!(rep.dz_lambda3 <= 1e-8, "omega {om}: {rep:?}");
        assert!(rep.gap_change <= 1e-8, "omega {om}: {rep:?}");
    }
}
