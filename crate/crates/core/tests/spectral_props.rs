use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use elrot_core::{Grid, ScalarField, Spectral, VectorField3};

/// Smooth random trigonometric field with modes `|m_i| <= kmax`.
fn trig_field(g: Grid, seed: u64, kmax: i32) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms: Vec<([f64; 3], f64, f64)> = (0..6)
        .map(|_| {
            let m = std::array::from_fn(|_| rng.gen_range(-kmax..=kmax) as f64);
            (m, rng.gen_range(-1.0..1.0), rng.gen_range(0.0..std::f64::consts::TAU))
        })
        .collect();
    ScalarField::from_fn(g, |x| {
        terms
            .iter()
            .map(|(m, a, ph)| a * (m[0] * x[0] + m[1] * x[1] + m[2] * x[2] + ph).cos())
            .sum()
    })
}

fn trig_vector(g: Grid, seed: u64, kmax: i32) -> VectorField3 {
    let c = [0, 1, 2].map(|i| trig_field(g, seed.wrapping_mul(3).wrapping_add(i), kmax));
    VectorField3::new(c).unwrap()
}

fn setup() -> (Grid, Spectral) {
    let g = Grid::cube(16).unwrap();
    (g, Spectral::new(g))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn transform_round_trip(seed in any::<u64>()) {
        let (g, sp) = setup();
        let f = trig_field(g, seed, 7);
        let back = sp.to_physical(&sp.to_spectral(&f).unwrap()).unwrap();
        let peak = f.max_abs().max(1e-300);
        let err = f.as_physical().unwrap().iter().zip(back.as_physical().unwrap())
            .map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-12 * peak, "round trip {err}");
    }

    #[test]
    fn projection_idempotent_and_kills_gradients(seed in any::<u64>()) {
        let (g, sp) = setup();
        let u = trig_vector(g, seed, 5);
        let p = sp.leray_project(&u).unwrap();
        let pp = sp.leray_project(&p).unwrap();
        prop_assert!(pp.max_diff(&p) <= 1e-12 * u.max_norm().max(1.0));
        let phi = trig_field(g, seed ^ 0x5555, 5);
        let grad = sp.gradient(&phi).unwrap();
        let pg = sp.leray_project(&grad).unwrap();
        prop_assert!(pg.max_norm() <= 1e-12 * grad.max_norm().max(1.0));
        let div = sp.divergence(&p).unwrap();
        prop_assert!(div.max_abs() <= 1e-12 * u.max_norm().max(1.0) * 5.0);
    }

    #[test]
    fn curl_grad_and_div_curl_vanish(seed in any::<u64>()) {
        let (g, sp) = setup();
        let phi = trig_field(g, seed, 5);
        let grad = sp.gradient(&phi).unwrap();
        let cg = sp.curl(&grad).unwrap();
        prop_assert!(cg.max_norm() <= 1e-11 * grad.max_norm().max(1.0));
        let a = trig_vector(g, seed, 5);
        let dc = sp.divergence(&sp.curl(&a).unwrap()).unwrap();
        prop_assert!(dc.max_abs() <= 1e-11 * a.max_norm().max(1.0));
    }
}

#[test]
fn laplacian_of_eigenfunction() {
    let (g, sp) = setup();
    let f = ScalarField::from_fn(g, |x| (3.0 * x[0] - x[1]).sin() * (2.0 * x[2]).cos());
    let lap = sp.laplacian(&f).unwrap();
    let err = f
        .as_physical()
        .unwrap()
        .iter()
        .zip(lap.as_physical().unwrap())
        .map(|(a, b)| (b + 14.0 * a).abs())
        .fold(0.0, f64::max);
    assert!(err <= 1e-12, "{err}");
}

#[test]
fn non_cubic_box_scales_wavenumbers() {
    let g = Grid::new(16, 3.0).unwrap();
    let sp = Spectral::new(g);
    let k = g.k0();
    let f = ScalarField::from_fn(g, |x| (k * x[1]).sin());
    let d = sp.partial(&f, 1).unwrap();
    let err = (0..g.len())
        .map(|i| (d.as_physical().unwrap()[i] - k * (k * g.position(i)[1]).cos()).abs())
        .fold(0.0, f64::max);
    assert!(err <= 1e-12, "{err}");
}
