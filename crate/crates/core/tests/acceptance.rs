//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use elrot_core::algebra::{self, Mat3};
use elrot_core::checkpoint::{self, Checkpoint};
use elrot_core::config::{parse_config, RunConfig};
use elrot_core::diagnostics::Status;
use elrot_core::run::{self, Simulation};
use elrot_core::{csv, Grid, ScalarField, Spectral, VectorField3};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn cfg(text: &str) -> RunConfig {
    parse_config(text).expect("valid config")
}

fn max_abs_diff(a: &[f64], b: impl Fn(usize) -> f64) -> f64 {
    a.iter().enumerate().map(|(i, v)| (v - b(i)).abs()).fold(0.0, f64::max)
}

// 1. Spectral identities against closed-form derivatives.
fn spectral_exactness() -> Outcome {
    let g = Grid::cube(32).unwrap();
    let sp = Spectral::new(g);
    let pos = |i: usize| g.position(i);
    let f = ScalarField::from_fn(g, |x| (2.0 * x[0]).sin() * (3.0 * x[1]).cos() + (x[2] + x[0]).cos());
    let df = [
        |x: [f64; 3]| 2.0 * (2.0 * x[0]).cos() * (3.0 * x[1]).cos() - (x[2] + x[0]).sin(),
        |x: [f64; 3]| -3.0 * (2.0 * x[0]).sin() * (3.0 * x[1]).sin(),
        |x: [f64; 3]| -(x[2] + x[0]).sin(),
    ];
    let mut worst: f64 = 0.0;
    for (axis, d) in df.iter().enumerate() {
        let p = sp.partial(&f, axis).unwrap();
        worst = worst.max(max_abs_diff(p.as_physical().unwrap(), |i| d(pos(i))));
    }
    let lap = sp.laplacian(&f).unwrap();
    worst = worst.max(max_abs_diff(lap.as_physical().unwrap(), |i| {
        let x = pos(i);
        -13.0 * (2.0 * x[0]).sin() * (3.0 * x[1]).cos() - 2.0 * (x[2] + x[0]).cos()
    }));

    // a = (sin 2y cos z, sin x cos 3z, sin(x + y)); curl a in closed form.
    let a = VectorField3::from_fn(g, |x| {
        [(2.0 * x[1]).sin() * x[2].cos(), x[0].sin() * (3.0 * x[2]).cos(), (x[0] + x[1]).sin()]
    });
    let curl = sp.curl(&a).unwrap();
    let curl_exact = VectorField3::from_fn(g, |x| {
        [
            (x[0] + x[1]).cos() + 3.0 * x[0].sin() * (3.0 * x[2]).sin(),
            -(2.0 * x[1]).sin() * x[2].sin() - (x[0] + x[1]).cos(),
            x[0].cos() * (3.0 * x[2]).cos() - 2.0 * (2.0 * x[1]).cos() * x[2].cos(),
        ]
    });
    worst = worst.max(curl.max_diff(&curl_exact));

    let div_curl = sp.divergence(&curl).unwrap().max_abs();
    let grad = sp.gradient(&f).unwrap();
    let curl_grad = sp.curl(&grad).unwrap().max_norm();

    // P(w + grad phi) = w for divergence-free w.
    let mixed = VectorField3::from_fn(g, |x| {
        let w = curl_exact_at(x);
        let gphi = [
            -x[0].sin() * (2.0 * x[1]).sin() * x[2].cos(),
            2.0 * x[0].cos() * (2.0 * x[1]).cos() * x[2].cos(),
            -x[0].cos() * (2.0 * x[1]).sin() * x[2].sin(),
        ];
        algebra::add(w, gphi)
    });
    let p = sp.leray_project(&mixed).unwrap();
    let proj_err = p.max_diff(&curl_exact);
    let idem = sp.leray_project(&p).unwrap().max_diff(&p);
    let kills_grad = sp.leray_project(&grad).unwrap().max_norm();
    let div_p = sp.divergence(&p).unwrap().max_abs();

    let round = {
        let s = sp.to_spectral(&f).unwrap();
        let back = sp.to_physical(&s).unwrap();
        max_abs_diff(back.as_physical().unwrap(), |i| f.as_physical().unwrap()[i])
    };

    let all = [worst, div_curl, curl_grad, proj_err, idem, kills_grad, div_p, round];
    let m = all.iter().copied().fold(0.0, f64::max);
    outcome(
        m <= 1e-12,
        format!(
            "derivatives {worst:.1e}, div curl {div_curl:.1e}, curl grad {curl_grad:.1e}, projection {proj_err:.1e}, \
             idempotence {idem:.1e}, P grad {kills_grad:.1e}, div P {div_p:.1e}, round trip {round:.1e} (tol 1e-12)"
        ),
    )
}

fn curl_exact_at(x: [f64; 3]) -> [f64; 3] {
    [
        (x[0] + x[1]).cos() + 3.0 * x[0].sin() * (3.0 * x[2]).sin(),
        -(2.0 * x[1]).sin() * x[2].sin() - (x[0] + x[1]).cos(),
        x[0].cos() * (3.0 * x[2]).cos() - 2.0 * (2.0 * x[1]).cos() * x[2].cos(),
    ]
}

// 2. Factorization identity, from the definitions with an independent oracle.
fn factorization_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let samples = 100_000;
    let mut worst: f64 = 0.0;
    let mut lib_worst: f64 = 0.0;
    let mut without_cubic: f64 = 0.0;
    for _ in 0..samples {
        // gl[alpha][j] = d_j l_alpha, arbitrary (not volume preserving).
        let gl: [[f64; 3]; 3] = std::array::from_fn(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0)));
        let grad = |a: usize| gl[a];
        let dz = [gl[0][2], gl[1][2], gl[2][2]];
        let div = gl[0][0] + gl[1][1] + gl[2][2];
        let c = oracle_cross(grad(0), grad(1));
        let r = [-dz[0] + c[0], -dz[1] + c[1], -dz[2] + div + c[2]];
        let m = [
            [1.0 + gl[1][1], -gl[0][1], 0.0],
            [-gl[1][0], 1.0 + gl[0][0], 0.0],
            [-gl[2][0], -gl[2][1], 1.0 + gl[0][0] + gl[1][1]],
        ];
        let md: [f64; 3] = std::array::from_fn(|i| (0..3).map(|k| m[i][k] * dz[k]).sum());
        let shifted: [[f64; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|j| gl[i][j] + if i == j { 1.0 } else { 0.0 }));
        let cubic = oracle_det(&shifted) - 1.0 - oracle_det(&gl);
        let lhs = [r[0] + md[0], r[1] + md[1], r[2] + md[2]];
        let rhs = [0.0, 0.0, cubic];
        worst = (0..3).map(|i| (lhs[i] - rhs[i]).abs()).fold(worst, f64::max);
        without_cubic = without_cubic.max(lhs[2].abs());
        let lib = algebra::factorization_defect(&Mat3(gl));
        lib_worst = lib_worst.max(algebra::norm(lib));
        let rr = algebra::rotation_term(&Mat3(gl));
        lib_worst = (0..3).map(|i| (rr[i] - r[i]).abs()).fold(lib_worst, f64::max);
    }
    outcome(
        worst <= 1e-12 && lib_worst <= 1e-12,
        format!(
            "{samples} samples: oracle residual {worst:.1e}, library residual {lib_worst:.1e} (tol 1e-12); \
             dropping the cubic term leaves {without_cubic:.2e}"
        ),
    )
}

fn oracle_cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn oracle_det(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn tg_identity_run(n: usize, dt: f64, nu: f64) -> Simulation {
    let mut s = Simulation::new(cfg(&format!(
        "n={n}\nomega=32\nnu={nu}\nt_end=0.15\nic=taylor_green\ndt={dt}\nlattice=0\npairs=0\ncadence=25\nidentities=true"
    )))
    .unwrap();
    s.run_to_end().unwrap();
    assert_eq!(s.totals.resets, 0, "refinement runs must stay within one window");
    s
}

struct Shared {
    base: Simulation,
}

// 3. Cauchy invariance with refinement.
fn cauchy_invariance(shared: &Shared) -> Outcome {
    let last = |s: &Simulation| s.records.last().unwrap().residuals.cauchy_rel;
    let r0 = last(&shared.base);
    let r_dt = last(&tg_identity_run(32, 5e-4, 0.0));
    let r_grid = last(&tg_identity_run(64, 5e-4, 0.0));
    let r_coarse = last(&tg_identity_run(16, 2e-3, 0.0));
    let pass = r0 <= 1e-2 && r_dt < r0 && r_grid < r0 && r_coarse > r0;
    outcome(
        pass,
        format!(
            "residual at window end (t = 0.15): n=32 dt=1e-3 {r0:.3e} (tol 1e-2); dt halved {r_dt:.3e}; \
             grid doubled at fixed Courant number {r_grid:.3e}; coarse n=16 dt=2e-3 {r_coarse:.3e}"
        ),
    )
}

// 4. Weber reconstruction, inviscid and viscous.
fn weber(shared: &Shared) -> Outcome {
    let inviscid = shared.base.totals.weber_max;
    let viscous = tg_identity_run(32, 1e-3, 1e-2).totals.weber_max;
    outcome(
        inviscid <= 1e-2 && viscous <= 2e-2,
        format!("max relative residual over the window: nu=0 {inviscid:.3e} (tol 1e-2), nu=1e-2 {viscous:.3e} (tol 2e-2)"),
    )
}

// 5. Steady planar eigenflow under rotation.
fn taylor_proudman() -> Outcome {
    let c = cfg("n=16\nomega=1\nnu=0\nt_end=1\nic=eigen2d\ndt=auto\ndt_max=0.01\nlattice=0\npairs=100\npersistent_lattice=8\ncadence=50\nidentities=false");
    let reports = run::taylor_proudman(&c, &[1.0, 10.0, 100.0]).unwrap();
    let worst = reports.iter().map(|(_, r)| r.dz_lambda3.max(r.gap_change)).fold(0.0, f64::max);
    let detail = reports
        .iter()
        .map(|(om, r)| format!("omega {om}: |d_a3 lambda_3| {:.1e}, gap change {:.1e}", r.dz_lambda3, r.gap_change))
        .collect::<Vec<_>>()
        .join("; ");
    outcome(worst <= 1e-8, format!("{detail} (tol 1e-8, T = 1)"))
}

fn bounds_run() -> (Simulation, f64) {
    let t = Instant::now();
    let mut s = Simulation::new(cfg(
        "n=32\nomega=32\nnu=0\nt_end=0.3\nic=taylor_green\ndt=1e-3\nlattice=16\npairs=100\nslabs=1.0:1.5,2.5:3.0\nslab_tracers=6\ncadence=5\nidentities=false\nseed=7",
    ))
    .unwrap();
    s.run_to_end().unwrap();
    (s, t.elapsed().as_secs_f64())
}

// 6. d_z l and d_a3 lambda bounds in every window.
fn rossby_bounds(s: &Simulation) -> Outcome {
    let mut pass = s.windows.len() >= 2;
    let mut parts = Vec::new();
    for w in &s.windows {
        let x = &w.window;
        let ok = x.hypotheses_met
            && w.rossby <= 0.25
            && x.g_sup <= 0.25
            && x.grad_u_int <= (1.25f64).ln()
            && x.dz_ell_margin > 0.0
            && x.dz_lambda_margin > 0.0;
        pass &= ok;
        parts.push(format!(
            "window {} rho {:.4} g {:.3} int {:.4}: |d_z l| {:.3e} <= {:.3e}, |d_a3 lambda| {:.3e} <= {:.3e}",
            x.index,
            w.rossby,
            x.g_sup,
            x.grad_u_int,
            x.dz_ell_sup,
            14.0 * w.rossby,
            x.dz_lambda_sup,
            9.0 * w.rossby
        ));
    }
    outcome(pass && s.totals.failures == 0, parts.join("; "))
}

// 7. Vertical pairs and slab separation.
fn separations(s: &Simulation) -> Outcome {
    let pairs_ok = s.windows.iter().all(|w| w.window.pair_margin >= 0.0 && w.window.hypotheses_met);
    let sep_ok = s.windows.iter().all(|w| w.window.separation_margin >= 0.0);
    let r = s.tracer_report().unwrap();
    let sep = r.separation.expect("two slabs configured");
    let d_le_delta = sep.distance <= sep.delta;
    let pair_min = s.windows.iter().map(|w| w.window.pair_margin).fold(f64::INFINITY, f64::min);
    let sep_min = s.windows.iter().map(|w| w.window.separation_margin).fold(f64::INFINITY, f64::min);
    outcome(
        pairs_ok && sep_ok && d_le_delta && s.totals.failures == 0,
        format!(
            "{} pairs at every sample, min margin {pair_min:.3e}; slabs min delta - floor {sep_min:.3e}; \
             final delta {:.4} >= d {:.4}, floor {:.4}",
            r.pairs.pairs.len(),
            sep.delta,
            sep.distance,
            sep.floor
        ),
    )
}

// 8. Two-dimensionalization trend over an Omega sweep.
fn sweep() -> Outcome {
    let base = cfg("n=32\nomega=1\nnu=0\nt_end=0.15\nic=taylor_green\ndt=1e-3\nlattice=8\npairs=0\ncadence=10\nidentities=false");
    let sp = Spectral::new(Grid::new(base.n, base.box_length).unwrap());
    let u0 = base.initial_condition.build(&sp, base.amplitude, base.seed).unwrap();
    let m_vort = sp.curl(&u0).unwrap().max_norm();
    let omegas: Vec<f64> = [4.0, 8.0, 16.0, 32.0].iter().map(|k| k * m_vort).collect();
    let rep = run::sweep(&base, &omegas);
    let p = &rep.probe;
    let eligible = p.rows.iter().filter(|r| r.hypotheses_met).count();
    let slope = p.slope_dz_ell.unwrap_or(f64::NAN);
    let excluded: Vec<String> = p
        .rows
        .iter()
        .filter(|r| !r.hypotheses_met)
        .map(|r| format!("omega {:.2} ({})", r.omega_rate, r.note))
        .collect();
    outcome(
        eligible >= 3 && (0.8..=1.2).contains(&slope) && p.variation_monotone,
        format!(
            "M_vort {m_vort:.4}; slope {slope:.4} over {eligible} runs (range [0.8, 1.2]); a3-variation \
             nonincreasing {}; excluded: {}",
            p.variation_monotone,
            if excluded.is_empty() { "none".into() } else { excluded.join(", ") }
        ),
    )
}

// 9. Checkpoints, determinism, exact restart, D_2 relations.
fn engineering(shared: &Shared, bounds: &Simulation) -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let c = cfg("n=16\nomega=8\nnu=0.01\nt_end=0.04\nic=random\ndt=2e-3\nlattice=4\npairs=10\nslabs=1:2,3:4\ncadence=2\nseed=3");
    let mut a = Simulation::new(c.clone()).unwrap();
    a.sample(false).unwrap();
    for _ in 0..7 {
        a.step_once().unwrap();
    }
    let ck = a.checkpoint().unwrap();
    let path = dir.path().join("ck.bin");
    checkpoint::write_checkpoint(&path, &ck).unwrap();
    let back = checkpoint::read_checkpoint(&path).unwrap();
    let lossless = back.to_bytes() == ck.to_bytes() && back == ck;
    let t_ck = a.flow.t;
    a.run_to_end().unwrap();
    let mut b = Simulation::resume(c.clone(), &back).unwrap();
    b.run_to_end().unwrap();
    let after = |s: &Simulation| -> String {
        let rows: Vec<_> = s.records.iter().filter(|r| r.t > t_ck).copied().collect();
        csv::emit_diagnostics(&rows)
    };
    let restart_exact = after(&a) == after(&b) && a.checkpoint().unwrap() == b.checkpoint().unwrap();

    let mut again = Simulation::new(c).unwrap();
    again.run_to_end().unwrap();
    let deterministic = csv::emit_diagnostics(&a.records) == csv::emit_diagnostics(&again.records);

    let d2 = shared.base.totals.d2_max.max(a.totals.d2_max);
    let poly = shared
        .base
        .totals
        .d2_polynomial_max
        .max(a.totals.d2_polynomial_max)
        .max(bounds.totals.d2_polynomial_max);
    let checkpoint_is_v1 = Checkpoint::from_bytes(&ck.to_bytes()).is_ok();
    outcome(
        lossless && restart_exact && deterministic && d2 <= 1e-2 && poly <= 1e-14 && checkpoint_is_v1,
        format!(
            "checkpoint lossless {lossless}, restart bit-exact {restart_exact}, CSV deterministic {deterministic}, \
             D_2 relation {d2:.3e} (tol 1e-2), D_2 = 1 + t_2 + d_2 {poly:.1e} (tol 1e-14)"
        ),
    )
}

fn main() {
    let mut results: Vec<(u32, &str, Outcome, f64)> = Vec::new();
    let mut timed = |n: u32, name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        let secs = t.elapsed().as_secs_f64();
        println!(
            "criterion {n} {name}: {} [{secs:.0}s] {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        results.push((n, name, o, secs));
    };

    timed(1, "spectral kernel exactness", &mut spectral_exactness);
    timed(2, "factorization oracle", &mut factorization_oracle);
    let shared = Shared {
        base: tg_identity_run(32, 1e-3, 0.0),
    };
    timed(3, "Cauchy invariance", &mut || cauchy_invariance(&shared));
    timed(4, "Weber formula", &mut || weber(&shared));
    timed(5, "nonlinear Taylor-Proudman", &mut taylor_proudman);
    let (bounds, secs) = bounds_run();
    println!("bounds run: n=32, Omega=32, T=0.3 in {secs:.0}s, {} windows", bounds.windows.len());
    timed(6, "d_z l and d_a3 lambda bounds", &mut || rossby_bounds(&bounds));
    timed(7, "pair and slab separation", &mut || separations(&bounds));
    timed(8, "two-dimensionalization trend", &mut sweep);
    timed(9, "engineering", &mut || engineering(&shared, &bounds));

    assert!(bounds.windows.iter().all(|w| w.certified() != Status::Fail));
    let failed: Vec<u32> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    if failed.is_empty() {
        println!("acceptance: all {} criteria PASS", results.len());
    } else {
        println!("acceptance: FAIL {failed:?}");
        std::process::exit(1);
    }
}

