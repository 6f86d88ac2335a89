use proptest::prelude::*;

use elrot_core::flow::{self, FlowState};
use elrot_core::{Grid, InitialCondition, Spectral};

fn flow(n: usize, ic: InitialCondition, omega: f64, nu: f64) -> (Spectral, FlowState) {
    let sp = Spectral::new(Grid::cube(n).unwrap());
    let u = ic.build(&sp, 1.0, 0).unwrap();
    (sp, FlowState::new(u, omega, nu).unwrap())
}

#[test]
fn inviscid_energy_drift_and_divergence() {
    let (sp, mut s) = flow(32, InitialCondition::TaylorGreen, 16.0, 0.0);
    let e0 = s.energy();
    let dt = 1e-3;
    for _ in 0..100 {
        s = flow::step(&sp, &s, dt).unwrap();
        let (div, grad) = flow::divergence_audit(&sp, &s.u).unwrap();
        assert!(div <= 1e-8 * grad, "div {div} grad {grad}");
    }
    let drift = (s.energy() - e0).abs() / e0 / s.t;
    assert!(drift <= 1e-7, "energy drift {drift} per unit time");
}

#[test]
fn single_mode_decays_exactly() {
    let nu = 0.05;
    let (sp, s0) = flow(16, InitialCondition::Shear, 3.0, nu);
    let mut s = s0.clone();
    for _ in 0..50 {
        s = flow::step(&sp, &s, 0.01).unwrap();
    }
    let decay = (-nu * s.t).exp();
    let g = sp.grid();
    let err = (0..g.len())
        .map(|i| {
            let [a, b, c] = s.u.at(i);
            let e = decay * s0.u.at(i)[0];
            (a - e).abs().max(b.abs()).max(c.abs())
        })
        .fold(0.0, f64::max);
    assert!(err <= 1e-10, "{err}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(3))]

    #[test]
    fn planar_eigenflow_stays_steady(omega in prop::sample::select(vec![0.0, 1.0, 10.0, 100.0])) {
        let (sp, s0) = flow(16, InitialCondition::Eigen2d, omega, 0.0);
        let mut s = s0.clone();
        while s.t < 1.0 - 1e-12 {
            let dt = flow::cfl_dt(&s, 0.01).min(1.0 - s.t);
            s = flow::step(&sp, &s, dt).unwrap();
        }
        prop_assert!(s.u.max_diff(&s0.u) <= 1e-7, "drift {}", s.u.max_diff(&s0.u));
    }
}

#[test]
fn rejects_steps_beyond_cfl() {
    let (sp, s) = flow(16, InitialCondition::TaylorGreen, 0.0, 0.0);
    let limit = flow::cfl_limit(&s, 0.5);
    assert!(flow::step(&sp, &s, 2.0 * limit).is_err());
    assert!(flow::step(&sp, &s, limit).is_ok());
}

#[test]
fn coriolis_of_zero_rotation_vanishes() {
    let (_, s) = flow(8, InitialCondition::Random, 0.0, 0.0);
    assert_eq!(flow::coriolis(&s.u, 0.0).unwrap().max_norm(), 0.0);
    let c = flow::coriolis(&s.u, 2.0).unwrap();
    for i in 0..s.u.grid().len() {
        let u = s.u.at(i);
        let f = c.at(i);
        assert!((f[0] + 4.0 * u[1]).abs() < 1e-15 && (f[1] - 4.0 * u[0]).abs() < 1e-15 && f[2] == 0.0);
    }
}
