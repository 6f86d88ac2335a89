//! Rotating Euler / Navier-Stokes for the relative velocity.
//!
//! Pressure is never formed: the nonlinear and Coriolis terms are Leray
//! projected, and diffusion is treated exactly by an integrating factor in
//! [`crate::stepper`].

use realfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::VectorField3;
use crate::par::map_max;
use crate::par::prelude::*;
use crate::spectral::{Spec3, Spectral};
use crate::stepper::{self, Coupled};

/// Fraction of energy above which a field counts as under-resolved.
pub const UNDER_RESOLVED_FRACTION: f64 = 1e-6;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub u: VectorField3,
    pub t: f64,
    pub omega_rate: f64,
    pub nu: f64,
}

impl FlowState {
    /// Validates parameters and that `u` is physical and finite.
    pub fn new(u: VectorField3, omega_rate: f64, nu: f64) -> Result<Self> {
        if !(omega_rate >= 0.0 && omega_rate.is_finite()) {
            return Err(Error::config("omega", "rotation rate must be finite and nonnegative"));
        }
        if !(nu >= 0.0 && nu.is_finite()) {
            return Err(Error::config("nu", "viscosity must be finite and nonnegative"));
        }
        if !u.is_physical() {
            return Err(Error::Representation { expected: "physical" });
        }
        if let Some(e) = u.find_non_finite() {
            return Err(e);
        }
        Ok(Self {
            u,
            t: 0.0,
            omega_rate,
            nu,
        })
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.t = t;
        self
    }

    /// `1/2 <|u|^2>` over the box.
    pub fn energy(&self) -> f64 {
        half_mean_square(&self.u)
    }

    /// `1/2 <|curl u|^2>` over the box.
    pub fn enstrophy(&self, sp: &Spectral) -> Result<f64> {
        Ok(half_mean_square(&vorticity(sp, self)?))
    }
}

pub(crate) fn half_mean_square(f: &VectorField3) -> f64 {
    let (a, b, c) = (f.p(0), f.p(1), f.p(2));
    let s = crate::par::map_sum(a.len(), |i| a[i] * a[i] + b[i] * b[i] + c[i] * c[i]);
    0.5 * s / a.len() as f64
}

/// Pointwise `2 Omega z x u = 2 Omega (-u_2, u_1, 0)`.
pub fn coriolis(u: &VectorField3, omega_rate: f64) -> Result<VectorField3> {
    let g = u.grid();
    let (u1, u2) = (u.component(0).as_physical()?, u.component(1).as_physical()?);
    let s = 2.0 * omega_rate;
    Ok(VectorField3::from_physical(
        g,
        [
            u2.iter().map(|v| -s * v).collect(),
            u1.iter().map(|v| s * v).collect(),
            vec![0.0; g.len()],
        ],
    ))
}

/// Right-hand side of the projected momentum equation (diffusion excluded).
#[derive(Debug, Clone)]
pub struct Rhs {
    pub value: VectorField3,
    /// Energy fraction in the top third of the retained spectrum.
    pub tail_fraction: f64,
    pub under_resolved: bool,
}

/// `P[-(u . grad u) - 2 Omega z x u]`, dealiased, returned physically.
pub fn rhs(sp: &Spectral, state: &FlowState) -> Result<Rhs> {
    let u_hat = sp.coeffs3(&state.u)?;
    let u_phys = state.u.to_physical_arrays()?;
    let n_hat = momentum_hat(sp, &u_hat, &u_phys, state.omega_rate);
    let tail_fraction = tail_fraction(sp, &u_hat);
    Ok(Rhs {
        value: VectorField3::from_physical(sp.grid(), sp.inv3(&n_hat)),
        tail_fraction,
        under_resolved: tail_fraction > UNDER_RESOLVED_FRACTION,
    })
}

/// Spectral momentum nonlinearity in divergence form `-d_j(u_i u_j)`, plus
/// Coriolis, dealiased and projected.
pub(crate) fn momentum_hat(sp: &Spectral, u_hat: &Spec3, u: &[Vec<f64>; 3], omega_rate: f64) -> Spec3 {
    let pairs = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];
    let prod: Vec<_> = pairs
        .iter()
        .map(|&(a, b)| {
            let p: Vec<f64> = u[a].iter().zip(&u[b]).map(|(x, y)| x * y).collect();
            sp.fwd(&p)
        })
        .collect();
    let q = |a: usize, b: usize| -> &Vec<Complex64> {
        let k = pairs
            .iter()
            .position(|&p| p == (a.min(b), a.max(b)))
            .expect("symmetric pair");
        &prod[k]
    };
    let len = u_hat[0].len();
    let s = 2.0 * omega_rate;
    let mut out: Spec3 = [
        vec![Complex64::new(0.0, 0.0); len],
        vec![Complex64::new(0.0, 0.0); len],
        vec![Complex64::new(0.0, 0.0); len],
    ];
    for (i, dst) in out.iter_mut().enumerate() {
        let (r0, r1, r2) = (q(i, 0), q(i, 1), q(i, 2));
        par_iter_mut!(dst).enumerate().for_each(|(o, d)| {
            if sp.kept(o) {
                let k = sp.kd(o);
                *d = -I * (k[0] * r0[o] + k[1] * r1[o] + k[2] * r2[o]);
            }
            *d -= match i {
                0 => -s * u_hat[1][o],
                1 => s * u_hat[0][o],
                _ => Complex64::new(0.0, 0.0),
            };
        });
    }
    sp.project_hat(&mut out);
    out
}

/// Energy fraction in modes with `|k| > 2/3 k_cut`, `k_cut = n/3`.
pub(crate) fn tail_fraction(sp: &Spectral, u_hat: &Spec3) -> f64 {
    let idx = sp.index();
    let n = sp.grid().n() as f64;
    let cut = (2.0 / 3.0) * (n / 3.0);
    let mut total = 0.0;
    let mut tail = 0.0;
    for o in 0..u_hat[0].len() {
        let m = idx.modes(o);
        let kk = ((m[0] * m[0] + m[1] * m[1] + m[2] * m[2]) as f64).sqrt();
        let e = idx.weight(o) * (u_hat[0][o].norm_sqr() + u_hat[1][o].norm_sqr() + u_hat[2][o].norm_sqr());
        total += e;
        if kk > cut {
            tail += e;
        }
    }
    if total > 0.0 {
        tail / total
    } else {
        0.0
    }
}

/// Stability limit: `0.5 dx / max|u|`, and `0.1 / Omega` when rotating.
pub fn cfl_limit(state: &FlowState, cfl: f64) -> f64 {
    let umax = state.u.max_norm().max(f64::MIN_POSITIVE);
    let mut dt = cfl * state.u.grid().dx() / umax;
    if state.omega_rate > 0.0 {
        dt = dt.min(0.1 / state.omega_rate);
    }
    dt
}

/// Time step chosen by the CFL rule with safety factor 0.5, capped at `dt_max`.
pub fn cfl_dt(state: &FlowState, dt_max: f64) -> f64 {
    cfl_limit(state, 0.5).min(dt_max)
}

/// One integrating-factor RK4 step of the flow alone.
pub fn step(sp: &Spectral, state: &FlowState, dt: f64) -> Result<FlowState> {
    let out = stepper::advance(sp, state, None, &mut [], dt, &Coupled::flow_only())?;
    Ok(out.flow)
}

/// `omega = curl u`.
pub fn vorticity(sp: &Spectral, state: &FlowState) -> Result<VectorField3> {
    sp.curl(&state.u)
}

/// Max over the grid of the Frobenius norm of `grad u`.
pub fn grad_u_max(sp: &Spectral, state: &FlowState) -> Result<f64> {
    let g = sp.gradient_phys(&sp.coeffs3(&state.u)?);
    Ok(frobenius_max(&g))
}

pub(crate) fn frobenius_max(g: &[[Vec<f64>; 3]; 3]) -> f64 {
    map_max(g[0][0].len(), |i| {
        let mut s = 0.0;
        for row in g {
            for c in row {
                s += c[i] * c[i];
            }
        }
        s.sqrt()
    })
}

/// Max over the grid of `|div u|` and of the Frobenius norm of `grad u`.
pub fn divergence_audit(sp: &Spectral, u: &VectorField3) -> Result<(f64, f64)> {
    let d = sp.divergence(&sp.vector_to_spectral(u)?)?;
    let d = sp.to_physical(&d)?;
    let g = sp.gradient_phys(&sp.coeffs3(u)?);
    Ok((d.max_abs(), frobenius_max(&g)))
}
