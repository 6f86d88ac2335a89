//! Structural identities between the flow and its Lagrangian objects:
//! virtual velocity and vorticity, Cauchy invariance, the Weber formula,
//! the rotation term `R(l)` and its factorization, and the horizontal
//! block determinant `D_2`.

use crate::algebra::{self, Mat3, Vec3};
use crate::error::{Error, Result};
use crate::field::{ScalarField, TensorField3, VectorField3};
use crate::flow::{self, FlowState};
use crate::interp::Interpolator;
use crate::lagrangian::{self, ELState};
use crate::par::map_max;
use crate::par::prelude::*;
use crate::spectral::Spectral;
use crate::stepper::{self, Coupled};

/// `C[alpha][j][beta] = sum_k B_{k beta} d_j d_k A^alpha`, `B = (grad A)^-1`.
pub type Christoffel = [[[f64; 3]; 3]; 3];

/// Pointwise Christoffel coefficients from `B` and the Hessian
/// `h[alpha][j][k] = d_j d_k l_alpha`.
#[inline]
pub fn christoffel_at(b: &Mat3, h: &[[[f64; 3]; 3]; 3]) -> Christoffel {
    let mut c = [[[0.0; 3]; 3]; 3];
    for a in 0..3 {
        for j in 0..3 {
            for beta in 0..3 {
                c[a][j][beta] = (0..3).map(|k| b.0[k][beta] * h[a][j][k]).sum();
            }
        }
    }
    c
}

/// Source of the virtual-velocity equation,
/// `2 nu C^alpha_{j;beta} d_j v^alpha + 2 Omega nu (z; d_j A; C_{j;beta})`.
/// `Err(det)` when `det(grad A) <= det_min`.
#[inline]
pub fn virtual_velocity_source(
    g: &Mat3,
    h: &[[[f64; 3]; 3]; 3],
    dv: &[[f64; 3]; 3],
    nu: f64,
    omega: f64,
    det_min: f64,
) -> std::result::Result<Vec3, f64> {
    let j = g.plus_identity();
    let b = j.inverse(det_min).ok_or_else(|| j.det())?;
    let c = christoffel_at(&b, h);
    let mut out = [0.0; 3];
    for (beta, o) in out.iter_mut().enumerate() {
        let mut s = 0.0;
        let mut r = 0.0;
        for jj in 0..3 {
            for a in 0..3 {
                s += c[a][jj][beta] * dv[a][jj];
            }
            r += j.0[0][jj] * c[1][jj][beta] - j.0[1][jj] * c[0][jj][beta];
        }
        *o = 2.0 * nu * s + 2.0 * omega * nu * r;
    }
    Ok(out)
}

/// 27-component Christoffel field.
#[derive(Debug, Clone)]
pub struct ChristoffelField {
    values: Vec<Christoffel>,
}

impl ChristoffelField {
    pub fn at(&self, index: usize) -> &Christoffel {
        &self.values[index]
    }

    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .flat_map(|c| c.iter().flatten().flatten())
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn hessian(sp: &Spectral, el: &ELState) -> Result<Vec<[[[f64; 3]; 3]; 3]>> {
    let l_hat = sp.coeffs3(&el.ell)?;
    let mut h: Vec<[[Vec<f64>; 3]; 3]> = Vec::with_capacity(3);
    for l in &l_hat {
        let mut rows: [[Vec<f64>; 3]; 3] = Default::default();
        for j in 0..3 {
            for k in j..3 {
                let d = sp.inv(&sp.deriv2_hat(l, j, k));
                rows[k][j].clone_from(&d);
                rows[j][k] = d;
            }
        }
        h.push(rows);
    }
    let n = sp.grid().len();
    Ok((0..n)
        .map(|i| {
            let mut out = [[[0.0; 3]; 3]; 3];
            for a in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        out[a][j][k] = h[a][j][k][i];
                    }
                }
            }
            out
        })
        .collect())
}

pub fn compute_christoffel(sp: &Spectral, el: &ELState, det_min: f64) -> Result<ChristoffelField> {
    let ga = lagrangian::grad_a(sp, el)?;
    let h = hessian(sp, el)?;
    let mut values = Vec::with_capacity(h.len());
    for (i, hi) in h.iter().enumerate() {
        let j = ga.at(i);
        let b = j.inverse(det_min).ok_or(Error::NearSingular { det: j.det(), index: i })?;
        values.push(christoffel_at(&b, hi));
    }
    Ok(ChristoffelField { values })
}

/// One coupled step of `v` (and `l`, `u`, which it needs at every stage).
pub fn step_virtual_velocity(sp: &Spectral, el: &ELState, flow: &FlowState, dt: f64, det_min: f64) -> Result<ELState> {
    lagrangian::det_grad_a(sp, el, det_min)?;
    let out = stepper::advance(sp, flow, Some(el), &mut [], dt, &Coupled::full(det_min))?;
    Ok(out.el.expect("virtual velocity evolved"))
}

/// `zeta^alpha = eps_{alpha beta gamma} (grad A)^-1_{j beta} d_j v^gamma`.
pub fn virtual_vorticity(sp: &Spectral, el: &ELState, det_min: f64) -> Result<VectorField3> {
    let ga = lagrangian::grad_a(sp, el)?;
    let gv = lagrangian::gradient_tensor(sp, &el.v)?;
    let n = sp.grid().len();
    let vals: Vec<std::result::Result<Vec3, (usize, f64)>> = par_range!(0..n)
        .map(|i| {
            let j = ga.at(i);
            let b = j.inverse(det_min).ok_or((i, j.det()))?;
            let w = gv.at(i).mul(&b);
            Ok([
                w.0[2][1] - w.0[1][2],
                w.0[0][2] - w.0[2][0],
                w.0[1][0] - w.0[0][1],
            ])
        })
        .collect();
    let mut out = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for (i, r) in vals.into_iter().enumerate() {
        let z = r.map_err(|(index, det)| Error::NearSingular { det, index })?;
        for c in 0..3 {
            out[c][i] = z[c];
        }
    }
    Ok(VectorField3::from_physical(sp.grid(), out))
}

/// `C(grad A; zeta + 2 Omega z) - 2 Omega z` from a given `zeta`.
pub fn cauchy_from(ga: &TensorField3, zeta: &VectorField3, omega_rate: f64) -> VectorField3 {
    let s = 2.0 * omega_rate;
    let n = ga.grid().len();
    let vals: Vec<Vec3> = par_range!(0..n)
        .map(|i| {
            let mut w = zeta.at(i);
            w[2] += s;
            let mut c = algebra::cauchy_map(&ga.at(i), w);
            c[2] -= s;
            c
        })
        .collect();
    to_field(ga.grid(), &vals)
}

/// Vorticity reconstructed from the Cauchy invariance.
pub fn cauchy_reconstruct(sp: &Spectral, el: &ELState, omega_rate: f64, det_min: f64) -> Result<VectorField3> {
    let zeta = virtual_vorticity(sp, el, det_min)?;
    Ok(cauchy_from(&lagrangian::grad_a(sp, el)?, &zeta, omega_rate))
}

/// Leray projection of `(grad A)^T v + Omega [2 z x l + l_1 grad l_2 - l_2 grad l_1]`,
/// the periodic part of the rotating Weber formula.
pub fn weber_velocity(sp: &Spectral, el: &ELState, omega_rate: f64) -> Result<VectorField3> {
    let ga = lagrangian::grad_a(sp, el)?;
    let n = sp.grid().len();
    let (l, v) = (&el.ell, &el.v);
    let vals: Vec<Vec3> = par_range!(0..n)
        .map(|i| {
            let j = ga.at(i);
            let li = l.at(i);
            let mut w = j.transpose_mul_vec(v.at(i));
            // grad l_alpha is row alpha of grad A minus e_alpha.
            let g1 = algebra::sub(j.row(0), [1.0, 0.0, 0.0]);
            let g2 = algebra::sub(j.row(1), [0.0, 1.0, 0.0]);
            for c in 0..3 {
                w[c] += omega_rate * (li[0] * g2[c] - li[1] * g1[c]);
            }
            w[0] -= 2.0 * omega_rate * li[1];
            w[1] += 2.0 * omega_rate * li[0];
            w
        })
        .collect();
    sp.leray_project(&to_field(sp.grid(), &vals))
}

/// Rotation term `R(l)`.
pub fn compute_r(sp: &Spectral, el: &ELState) -> Result<VectorField3> {
    Ok(lagrangian::grad_ell(sp, el)?.map_vector(algebra::rotation_term))
}

fn matrix_field<F>(g: &TensorField3, f: F) -> TensorField3
where
    F: Fn(&Mat3) -> Mat3 + Sync + Send,
{
    let n = g.grid().len();
    let mats: Vec<Mat3> = par_range!(0..n).map(|i| f(&g.at(i))).collect();
    let mut data: [[Vec<f64>; 3]; 3] = Default::default();
    for (r, row) in data.iter_mut().enumerate() {
        for (c, col) in row.iter_mut().enumerate() {
            *col = mats.iter().map(|m| m.0[r][c]).collect();
        }
    }
    TensorField3::new(g.grid(), data)
}

/// Factor matrix `M(grad l)`.
pub fn compute_m(sp: &Spectral, el: &ELState) -> Result<TensorField3> {
    Ok(matrix_field(&lagrangian::grad_ell(sp, el)?, algebra::factor_m))
}

/// Matrix `N(grad l)`.
pub fn compute_n(sp: &Spectral, el: &ELState) -> Result<TensorField3> {
    Ok(matrix_field(&lagrangian::grad_ell(sp, el)?, algebra::factor_n))
}

/// `s = (1/2 Omega) N(grad l) {C(grad A; zeta) - omega}`.
pub fn compute_s(sp: &Spectral, el: &ELState, flow: &FlowState, det_min: f64) -> Result<VectorField3> {
    if !(flow.omega_rate > 0.0) {
        return Err(Error::ZeroRotation("s"));
    }
    let zeta = virtual_vorticity(sp, el, det_min)?;
    let omega = flow::vorticity(sp, flow)?;
    let gl = lagrangian::grad_ell(sp, el)?;
    let inv = 1.0 / (2.0 * flow.omega_rate);
    let n = sp.grid().len();
    let vals: Vec<Vec3> = par_range!(0..n)
        .map(|i| {
            let g = gl.at(i);
            let c = algebra::cauchy_map(&g.plus_identity(), zeta.at(i));
            let d = algebra::scale(inv, algebra::sub(c, omega.at(i)));
            algebra::factor_n(&g).mul_vec(d)
        })
        .collect();
    Ok(to_field(sp.grid(), &vals))
}

/// `s = -N R(l)`, the value `s` takes when the Cauchy invariance holds.
#[inline]
pub fn s_algebraic(g: &Mat3) -> Vec3 {
    algebra::scale(-1.0, algebra::factor_n(g).mul_vec(algebra::rotation_term(g)))
}

/// Pointwise norm of `R(l) + M d_z l - (0, 0, det(1+grad l) - 1 - det(grad l))`.
pub fn factorization_residual(sp: &Spectral, el: &ELState) -> Result<ScalarField> {
    Ok(lagrangian::grad_ell(sp, el)?.map_scalar(|g| algebra::norm(algebra::factorization_defect(g))))
}

/// Pointwise norm of `R(l) + M d_z l`, the factorization without the cubic term.
pub fn factorization_residual_without_cubic(sp: &Spectral, el: &ELState) -> Result<ScalarField> {
    Ok(lagrangian::grad_ell(sp, el)?.map_scalar(|g| {
        let r = algebra::rotation_term(g);
        let md = algebra::factor_m(g).mul_vec(algebra::dz(g));
        algebra::norm(algebra::add(r, md))
    }))
}

#[derive(Debug, Clone)]
pub struct D2Report {
    pub big_d2: ScalarField,
    pub small_d2: ScalarField,
    pub t2: ScalarField,
    /// `max |D_2 - 1 - (1/2 Omega){omega_3 - (d_1 A; d_2 A; zeta)}| / max |D_2|`.
    pub relative_residual: f64,
    /// `max |D_2 - 1 - t_2 - d_2|`.
    pub polynomial_residual: f64,
}

pub fn d2_identity(sp: &Spectral, el: &ELState, flow: &FlowState, det_min: f64) -> Result<D2Report> {
    if !(flow.omega_rate > 0.0) {
        return Err(Error::ZeroRotation("the D_2 relation"));
    }
    let zeta = virtual_vorticity(sp, el, det_min)?;
    let omega = flow::vorticity(sp, flow)?;
    d2_from(sp, el, &zeta, &omega, flow.omega_rate)
}

pub(crate) fn d2_from(
    sp: &Spectral,
    el: &ELState,
    zeta: &VectorField3,
    omega: &VectorField3,
    omega_rate: f64,
) -> Result<D2Report> {
    let gl = lagrangian::grad_ell(sp, el)?;
    let big = gl.map_scalar(algebra::big_d2);
    let small = gl.map_scalar(algebra::d2);
    let t2 = gl.map_scalar(algebra::t2);
    let n = sp.grid().len();
    let inv = 1.0 / (2.0 * omega_rate);
    let (bd, sd, td) = (big.p(), small.p(), t2.p());
    let poly = map_max(n, |i| (bd[i] - 1.0 - td[i] - sd[i]).abs());
    let num = map_max(n, |i| {
        let ja = gl.at(i).plus_identity();
        let rhs = 1.0 + inv * (omega.at(i)[2] - algebra::triple(ja.col(0), ja.col(1), zeta.at(i)));
        (bd[i] - rhs).abs()
    });
    let scale = map_max(n, |i| bd[i].abs());
    Ok(D2Report {
        big_d2: big,
        small_d2: small,
        t2,
        relative_residual: if scale > 0.0 { num / scale } else { num },
        polynomial_residual: poly,
    })
}

/// `f(A(x))`, composing a field with the back-to-labels map by interpolation.
pub fn compose_with_a(f: &VectorField3, el: &ELState) -> Result<VectorField3> {
    let g = el.grid();
    let pts: Vec<[f64; 3]> = (0..g.len())
        .map(|i| algebra::add(g.position(i), el.ell.at(i)))
        .collect();
    let vals = Interpolator::new(g).interpolate(f, &pts)?;
    Ok(to_field(g, &vals))
}

/// Residuals of the identities at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityResiduals {
    pub weber_rel: f64,
    pub cauchy_rel: f64,
    pub factorization_abs: f64,
    /// NaN when `Omega = 0`.
    pub d2_rel: f64,
    pub time: f64,
}

impl IdentityResiduals {
    pub fn zero(time: f64) -> Self {
        Self {
            weber_rel: 0.0,
            cauchy_rel: 0.0,
            factorization_abs: 0.0,
            d2_rel: 0.0,
            time,
        }
    }
}

/// Relative max-norm difference; absolute when the reference vanishes.
pub fn relative_max_diff(a: &VectorField3, reference: &VectorField3) -> f64 {
    let d = a.max_diff(reference);
    let s = reference.max_norm();
    if s > 0.0 {
        d / s
    } else {
        d
    }
}

fn remove_mean(f: &VectorField3) -> VectorField3 {
    let g = f.grid();
    let n = g.len() as f64;
    let comps: [Vec<f64>; 3] = std::array::from_fn(|c| {
        let d = f.p(c);
        let m = crate::par::map_sum(d.len(), |i| d[i]) / n;
        d.iter().map(|v| v - m).collect()
    });
    VectorField3::from_physical(g, comps)
}

/// Weber residual `|P w - u| / |u|`, comparing zero-mean parts: the
/// discarded gauge may carry a uniform gradient.
pub fn weber_residual(sp: &Spectral, el: &ELState, flow: &FlowState) -> Result<f64> {
    let w = weber_velocity(sp, el, flow.omega_rate)?;
    Ok(relative_max_diff(&remove_mean(&w), &remove_mean(&flow.u)))
}

/// All identity residuals for the current state.
pub fn residuals(sp: &Spectral, el: &ELState, flow: &FlowState, det_min: f64) -> Result<IdentityResiduals> {
    let zeta = virtual_vorticity(sp, el, det_min)?;
    let omega = flow::vorticity(sp, flow)?;
    let ga = lagrangian::grad_a(sp, el)?;
    let rec = cauchy_from(&ga, &zeta, flow.omega_rate);
    let cauchy_rel = relative_max_diff(&rec, &omega);
    let factorization_abs = factorization_residual(sp, el)?.max_abs();
    let d2_rel = if flow.omega_rate > 0.0 {
        d2_from(sp, el, &zeta, &omega, flow.omega_rate)?.relative_residual
    } else {
        f64::NAN
    };
    Ok(IdentityResiduals {
        weber_rel: weber_residual(sp, el, flow)?,
        cauchy_rel,
        factorization_abs,
        d2_rel,
        time: flow.t,
    })
}

pub(crate) fn to_field(g: crate::grid::Grid, vals: &[Vec3]) -> VectorField3 {
    let mut out = [vec![0.0; vals.len()], vec![0.0; vals.len()], vec![0.0; vals.len()]];
    for (i, v) in vals.iter().enumerate() {
        for c in 0..3 {
            out[c][i] = v[c];
        }
    }
    VectorField3::from_physical(g, out)
}
