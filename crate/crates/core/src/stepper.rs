//! Integrating-factor RK4 for the coupled system `(u, l, v)` plus tracers.
//!
//! Diffusion `nu lap` is integrated exactly (Lawson form); everything else
//! is explicit. All fields see the same stage velocities, and tracers are
//! pushed with the velocity of each stage interpolated at the stage
//! positions, so the whole system is advanced by one consistent RK4 step.

use realfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::VectorField3;
use crate::flow::{self, FlowState};
use crate::identities::virtual_velocity_source;
use crate::interp::Interpolator;
use crate::lagrangian::{ELState, TracerSet};
use crate::par::prelude::*;
use crate::spectral::{Spec, Spectral};

/// Which Lagrangian fields ride along with the flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupled {
    pub displacement: bool,
    pub virtual_velocity: bool,
    pub det_min: f64,
}

impl Coupled {
    pub fn flow_only() -> Self {
        Self {
            displacement: false,
            virtual_velocity: false,
            det_min: crate::lagrangian::DEFAULT_DET_MIN,
        }
    }

    pub fn full(det_min: f64) -> Self {
        Self {
            displacement: true,
            virtual_velocity: true,
            det_min,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Advanced {
    pub flow: FlowState,
    pub el: Option<ELState>,
    /// Energy fraction in the top third of the spectrum at the step start.
    pub tail_fraction: f64,
}

struct System<'a> {
    sp: &'a Spectral,
    omega: f64,
    nu: f64,
    ell: bool,
    v: bool,
    det_min: f64,
}

impl System<'_> {
    fn width(&self) -> usize {
        3 * (1 + self.ell as usize + self.v as usize)
    }

    /// Nonlinear right-hand side of every evolved array, plus the physical
    /// velocity of the stage.
    fn eval(&self, y: &[Spec]) -> Result<(Vec<Spec>, [Vec<f64>; 3])> {
        let sp = self.sp;
        let u_hat = [y[0].clone(), y[1].clone(), y[2].clone()];
        let u = sp.inv3(&u_hat);
        let [m0, m1, m2] = flow::momentum_hat(sp, &u_hat, &u, self.omega);
        let mut out = vec![m0, m1, m2];
        if self.ell {
            let l_hat = [y[3].clone(), y[4].clone(), y[5].clone()];
            let gl = sp.gradient_phys(&l_hat);
            for (a, row) in gl.iter().enumerate() {
                let adv = advect(&u, row);
                let mut h = sp.fwd(&adv);
                sp.dealias_hat(&mut h);
                par_iter_mut!(h)
                    .zip(par_iter!(u_hat[a]))
                    .for_each(|(c, ua)| *c = -*c - *ua);
                out.push(h);
            }
            if self.v {
                let v_hat = [y[6].clone(), y[7].clone(), y[8].clone()];
                let gv = sp.gradient_phys(&v_hat);
                let src = if self.nu > 0.0 {
                    Some(self.source(&l_hat, &gl, &gv)?)
                } else {
                    None
                };
                for (b, row) in gv.iter().enumerate() {
                    let mut rhs = advect(&u, row);
                    match &src {
                        Some(s) => par_iter_mut!(rhs)
                            .zip(par_iter!(s[b]))
                            .for_each(|(r, s)| *r = s - *r),
                        None => par_iter_mut!(rhs).for_each(|r| *r = -*r),
                    }
                    let mut h = sp.fwd(&rhs);
                    sp.dealias_hat(&mut h);
                    out.push(h);
                }
            }
        }
        Ok((out, u))
    }

    fn source(&self, l_hat: &[Spec; 3], gl: &[[Vec<f64>; 3]; 3], gv: &[[Vec<f64>; 3]; 3]) -> Result<[Vec<f64>; 3]> {
        let sp = self.sp;
        let pairs = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];
        let hess: Vec<Vec<Vec<f64>>> = l_hat
            .iter()
            .map(|l| pairs.iter().map(|&(j, k)| sp.inv(&sp.deriv2_hat(l, j, k))).collect())
            .collect();
        let slot = |j: usize, k: usize| pairs.iter().position(|&p| p == (j.min(k), j.max(k))).unwrap();
        let n = gl[0][0].len();
        let vals: Vec<std::result::Result<[f64; 3], f64>> = par_range!(0..n)
            .map(|i| {
                let mut g = [[0.0; 3]; 3];
                let mut dv = [[0.0; 3]; 3];
                let mut h = [[[0.0; 3]; 3]; 3];
                for a in 0..3 {
                    for j in 0..3 {
                        g[a][j] = gl[a][j][i];
                        dv[a][j] = gv[a][j][i];
                        for k in 0..3 {
                            h[a][j][k] = hess[a][slot(j, k)][i];
                        }
                    }
                }
                virtual_velocity_source(&crate::algebra::Mat3(g), &h, &dv, self.nu, self.omega, self.det_min)
            })
            .collect();
        let mut out = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        for (i, r) in vals.into_iter().enumerate() {
            match r {
                Ok(s) => {
                    for c in 0..3 {
                        out[c][i] = s[c];
                    }
                }
                Err(det) => return Err(Error::NearSingular { det, index: i }),
            }
        }
        Ok(out)
    }
}

fn advect(u: &[Vec<f64>; 3], grad: &[Vec<f64>; 3]) -> Vec<f64> {
    let mut out = vec![0.0; u[0].len()];
    par_iter_mut!(out)
        .enumerate()
        .for_each(|(i, o)| *o = u[0][i] * grad[0][i] + u[1][i] * grad[1][i] + u[2][i] * grad[2][i]);
    out
}

fn factors(sp: &Spectral, nu: f64, dt: f64) -> (Vec<f64>, Vec<f64>) {
    let len = sp.index().len();
    let eh: Vec<f64> = (0..len).map(|o| (-nu * sp.k2(o) * 0.5 * dt).exp()).collect();
    let ef: Vec<f64> = eh.iter().map(|e| e * e).collect();
    (eh, ef)
}

fn combine<F>(len: usize, f: F) -> Spec
where
    F: Fn(usize) -> Complex64 + Sync + Send,
{
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    crate::par::fill_indexed(&mut out, |o, c| *c = f(o));
    out
}

fn sample(ip: &Interpolator, u: &[Vec<f64>; 3], pts: &[[f64; 3]]) -> Vec<[f64; 3]> {
    par_iter!(pts)
        .map(|p| ip.sample_many([&u[0][..], &u[1][..], &u[2][..]], *p))
        .collect()
}

fn offset(x: &[[f64; 3]], v: &[[f64; 3]], h: f64) -> Vec<[f64; 3]> {
    x.iter()
        .zip(v)
        .map(|(a, b)| [a[0] + h * b[0], a[1] + h * b[1], a[2] + h * b[2]])
        .collect()
}

fn check_finite(f: &VectorField3) -> Result<()> {
    match f.find_non_finite() {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

/// Advance the flow, optionally `l` and `v`, and any tracer sets by `dt`.
pub fn advance(
    sp: &Spectral,
    flow: &FlowState,
    el: Option<&ELState>,
    tracers: &mut [&mut TracerSet],
    dt: f64,
    opts: &Coupled,
) -> Result<Advanced> {
    let limit = flow::cfl_limit(flow, 0.5);
    if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
        return Err(Error::Cfl { dt, limit });
    }
    if flow.u.grid() != sp.grid() {
        return Err(Error::GridMismatch);
    }
    let want_ell = opts.displacement && el.is_some();
    let sys = System {
        sp,
        omega: flow.omega_rate,
        nu: flow.nu,
        ell: want_ell,
        v: want_ell && opts.virtual_velocity,
        det_min: opts.det_min,
    };

    let mut y0: Vec<Spec> = sp.coeffs3(&flow.u)?.into_iter().collect();
    if let Some(el) = el.filter(|_| sys.ell) {
        y0.extend(sp.coeffs3(&el.ell)?);
        if sys.v {
            y0.extend(sp.coeffs3(&el.v)?);
        }
    }
    debug_assert_eq!(y0.len(), sys.width());
    let tail = flow::tail_fraction(sp, &[y0[0].clone(), y0[1].clone(), y0[2].clone()]);
    let len = y0[0].len();
    let (eh, ef) = factors(sp, flow.nu, dt);
    let ip = Interpolator::new(sp.grid());
    let x0: Vec<Vec<[f64; 3]>> = tracers.iter().map(|t| t.positions().to_vec()).collect();
    let h = 0.5 * dt;

    let (k1, u1) = sys.eval(&y0)?;
    let v1: Vec<_> = x0.iter().map(|x| sample(&ip, &u1, x)).collect();
    let ya: Vec<Spec> = (0..y0.len())
        .map(|c| combine(len, |o| eh[o] * (y0[c][o] + h * k1[c][o])))
        .collect();

    let (k2, u2) = sys.eval(&ya)?;
    let xa: Vec<_> = x0.iter().zip(&v1).map(|(x, v)| offset(x, v, h)).collect();
    let v2: Vec<_> = xa.iter().map(|x| sample(&ip, &u2, x)).collect();
    let yb: Vec<Spec> = (0..y0.len())
        .map(|c| combine(len, |o| eh[o] * y0[c][o] + h * k2[c][o]))
        .collect();

    let (k3, u3) = sys.eval(&yb)?;
    let xb: Vec<_> = x0.iter().zip(&v2).map(|(x, v)| offset(x, v, h)).collect();
    let v3: Vec<_> = xb.iter().map(|x| sample(&ip, &u3, x)).collect();
    let yc: Vec<Spec> = (0..y0.len())
        .map(|c| combine(len, |o| ef[o] * y0[c][o] + dt * eh[o] * k3[c][o]))
        .collect();

    let (k4, u4) = sys.eval(&yc)?;
    let xc: Vec<_> = x0.iter().zip(&v3).map(|(x, v)| offset(x, v, dt)).collect();
    let v4: Vec<_> = xc.iter().map(|x| sample(&ip, &u4, x)).collect();

    let s = dt / 6.0;
    let mut y1: Vec<Spec> = (0..y0.len())
        .map(|c| {
            combine(len, |o| {
                ef[o] * y0[c][o] + s * (ef[o] * k1[c][o] + 2.0 * eh[o] * (k2[c][o] + k3[c][o]) + k4[c][o])
            })
        })
        .collect();

    let mut u_hat = [
        std::mem::take(&mut y1[0]),
        std::mem::take(&mut y1[1]),
        std::mem::take(&mut y1[2]),
    ];
    sp.project_hat(&mut u_hat);
    let grid = sp.grid();
    let u = VectorField3::from_physical(grid, sp.inv3(&u_hat));
    check_finite(&u)?;
    let flow_out = FlowState {
        u,
        t: flow.t + dt,
        omega_rate: flow.omega_rate,
        nu: flow.nu,
    };

    let el_out = match el {
        Some(el) if sys.ell => {
            let ell_hat = [std::mem::take(&mut y1[3]), std::mem::take(&mut y1[4]), std::mem::take(&mut y1[5])];
            let ell = VectorField3::from_physical(grid, sp.inv3(&ell_hat));
            check_finite(&ell)?;
            let v = if sys.v {
                let v_hat = [std::mem::take(&mut y1[6]), std::mem::take(&mut y1[7]), std::mem::take(&mut y1[8])];
                let v = VectorField3::from_physical(grid, sp.inv3(&v_hat));
                check_finite(&v)?;
                v
            } else {
                el.v.clone()
            };
            Some(ELState {
                ell,
                v,
                zeta0: el.zeta0.clone(),
                t0: el.t0,
            })
        }
        Some(el) => Some(el.clone()),
        None => None,
    };

    for (t, i) in tracers.iter_mut().zip(0..) {
        let x: Vec<[f64; 3]> = x0[i]
            .iter()
            .enumerate()
            .map(|(p, a)| {
                let mut out = *a;
                for c in 0..3 {
                    out[c] += s * (v1[i][p][c] + 2.0 * v2[i][p][c] + 2.0 * v3[i][p][c] + v4[i][p][c]);
                }
                out
            })
            .collect();
        if let Some(bad) = x.iter().position(|p| p.iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFinitePoint(bad));
        }
        *t.positions_mut() = x;
    }

    Ok(Advanced {
        flow: flow_out,
        el: el_out,
        tail_fraction: tail,
    })
}
