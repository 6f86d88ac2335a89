//! Back-to-labels displacement `l = A - x`, reset windows, and tracers for
//! the direct Lagrangian map `X(a, t)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{self, Mat3};
use crate::error::{Error, Result};
use crate::field::{ScalarField, TensorField3, VectorField3};
use crate::flow::{self, FlowState};
use crate::grid::Grid;
use crate::interp::Interpolator;
use crate::spectral::Spectral;
use crate::stepper::{self, Coupled};

/// `log(5/4)`: budget of `int |grad u|` that keeps `g <= 1/4`.
pub const GRAD_U_BUDGET: f64 = 0.223_143_551_314_209_76;

pub const DEFAULT_G_MAX: f64 = 0.25;
pub const DEFAULT_DET_MIN: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct ELState {
    pub ell: VectorField3,
    pub v: VectorField3,
    /// Vorticity at the last reset, the Cauchy datum.
    pub zeta0: VectorField3,
    pub t0: f64,
}

impl ELState {
    /// State at a reset instant: `l = 0`, `v = u`, `zeta0 = curl u`.
    pub fn at_reset(sp: &Spectral, flow: &FlowState) -> Result<Self> {
        Ok(Self {
            ell: VectorField3::zeros(flow.u.grid()),
            v: flow.u.clone(),
            zeta0: flow::vorticity(sp, flow)?,
            t0: flow.t,
        })
    }

    pub fn reset(&mut self, sp: &Spectral, flow: &FlowState) -> Result<()> {
        *self = Self::at_reset(sp, flow)?;
        Ok(())
    }

    pub fn grid(&self) -> Grid {
        self.ell.grid()
    }
}

/// `out[alpha][j] = d_j f_alpha` as a tensor field.
pub fn gradient_tensor(sp: &Spectral, f: &VectorField3) -> Result<TensorField3> {
    Ok(TensorField3::new(sp.grid(), sp.gradient_phys(&sp.coeffs3(f)?)))
}

/// `grad l`.
pub fn grad_ell(sp: &Spectral, el: &ELState) -> Result<TensorField3> {
    gradient_tensor(sp, &el.ell)
}

/// `grad A = 1 + grad l`.
pub fn grad_a(sp: &Spectral, el: &ELState) -> Result<TensorField3> {
    let g = grad_ell(sp, el)?;
    let mut d = g.data().clone();
    for (a, row) in d.iter_mut().enumerate() {
        row[a].iter_mut().for_each(|v| *v += 1.0);
    }
    Ok(TensorField3::new(sp.grid(), d))
}

/// `det(grad A)` without a singularity guard.
pub fn det_grad_a_unchecked(sp: &Spectral, el: &ELState) -> Result<ScalarField> {
    Ok(grad_a(sp, el)?.map_scalar(|m| m.det()))
}

/// `det(grad A)`; fails with [`Error::NearSingular`] where `det <= det_min`.
pub fn det_grad_a(sp: &Spectral, el: &ELState, det_min: f64) -> Result<ScalarField> {
    let det = det_grad_a_unchecked(sp, el)?;
    check_invertible(&det, det_min)?;
    Ok(det)
}

pub fn check_invertible(det: &ScalarField, det_min: f64) -> Result<()> {
    let d = det.as_physical()?;
    match d.iter().position(|v| !(*v > det_min)) {
        Some(index) => Err(Error::NearSingular {
            det: d[index],
            index,
        }),
        None => Ok(()),
    }
}

/// `||grad l||_inf`, pointwise Frobenius norm.
pub fn displacement_gradient_max(sp: &Spectral, el: &ELState) -> Result<f64> {
    Ok(grad_ell(sp, el)?.max_of(|m| m.frobenius()))
}

/// `dX/da_3` at label `A(x)`, computed as `grad A_1 x grad A_2`.
pub fn d3x_from_a(sp: &Spectral, el: &ELState) -> Result<VectorField3> {
    let ga = grad_a(sp, el)?;
    Ok(ga.map_vector(|m| algebra::cross(m.row(0), m.row(1))))
}

/// The same quantity through the expansion in `grad l`.
pub fn d3x_expanded(sp: &Spectral, el: &ELState) -> Result<VectorField3> {
    Ok(grad_ell(sp, el)?.map_vector(algebra::d3x_expanded))
}

/// Advance `l` by one step of `d_t l + u . grad l - nu lap l = -u`.
pub fn step_displacement(sp: &Spectral, el: &ELState, flow: &FlowState, dt: f64) -> Result<ELState> {
    let opts = Coupled {
        displacement: true,
        virtual_velocity: false,
        det_min: DEFAULT_DET_MIN,
    };
    let out = stepper::advance(sp, flow, Some(el), &mut [], dt, &opts)?;
    Ok(out.el.expect("displacement evolved"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResetReason {
    DisplacementGradient,
    GradientBudget,
    NearSingular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResetDecision {
    Continue,
    Reset(ResetReason),
}

/// Reset when `g > g_max` or `int |grad u| > log(5/4)`.
pub fn check_reset(g: f64, grad_u_integral: f64, g_max: f64) -> ResetDecision {
    if g > g_max {
        ResetDecision::Reset(ResetReason::DisplacementGradient)
    } else if grad_u_integral > GRAD_U_BUDGET {
        ResetDecision::Reset(ResetReason::GradientBudget)
    } else {
        ResetDecision::Continue
    }
}

/// Vertical pair `P = a`, `Q = a + d e_3`, registered at the last reset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerticalPair {
    pub p: usize,
    pub q: usize,
    pub gap: f64,
}

/// Tracers for one material slab `a_3 in [z0, z1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlabSet {
    pub z0: f64,
    pub z1: f64,
    pub indices: Vec<usize>,
}

/// Regular `m^3` label lattice stored x-fastest from index `start`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lattice {
    pub m: usize,
    pub start: usize,
}

impl Lattice {
    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        self.start + i + self.m * (j + self.m * k)
    }

    pub fn len(&self) -> usize {
        self.m * self.m * self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TracerSet {
    box_length: f64,
    labels: Vec<[f64; 3]>,
    positions: Vec<[f64; 3]>,
    lattice: Option<Lattice>,
    pairs: Vec<VerticalPair>,
    slabs: Vec<SlabSet>,
}

impl TracerSet {
    pub fn empty(box_length: f64) -> Self {
        Self {
            box_length,
            labels: Vec::new(),
            positions: Vec::new(),
            lattice: None,
            pairs: Vec::new(),
            slabs: Vec::new(),
        }
    }

    /// Arbitrary labels; positions start at the labels.
    pub fn from_labels(box_length: f64, labels: Vec<[f64; 3]>) -> Self {
        let mut t = Self::empty(box_length);
        t.positions = labels.clone();
        t.labels = labels;
        t
    }

    /// Restore labels and positions, e.g. from a checkpoint.
    pub fn with_positions(mut self, positions: Vec<[f64; 3]>) -> Result<Self> {
        if positions.len() != self.labels.len() {
            return Err(Error::Checkpoint {
                message: format!(
                    "tracer count {} does not match the configured {}",
                    positions.len(),
                    self.labels.len()
                ),
                offset: 0,
            });
        }
        self.positions = positions;
        Ok(self)
    }

    fn push(&mut self, a: [f64; 3]) -> usize {
        self.labels.push(a);
        self.positions.push(a);
        self.labels.len() - 1
    }

    /// Add an `m^3` lattice with spacing `L/m` starting at the origin.
    pub fn add_lattice(&mut self, m: usize) {
        if m == 0 {
            return;
        }
        let h = self.box_length / m as f64;
        let start = self.labels.len();
        for k in 0..m {
            for j in 0..m {
                for i in 0..m {
                    self.push([h * i as f64, h * j as f64, h * k as f64]);
                }
            }
        }
        self.lattice = Some(Lattice { m, start });
    }

    /// Add `count` vertical pairs at random labels with gaps uniform in
    /// `[gap_min, gap_max]`.
    pub fn add_random_pairs(&mut self, count: usize, gap_min: f64, gap_max: f64, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let l = self.box_length;
        for _ in 0..count {
            let a = [rng.gen::<f64>() * l, rng.gen::<f64>() * l, rng.gen::<f64>() * l];
            let gap = if gap_max > gap_min {
                rng.gen_range(gap_min..=gap_max)
            } else {
                gap_min
            };
            self.add_pair(a, gap);
        }
    }

    pub fn add_pair(&mut self, a: [f64; 3], gap: f64) {
        let p = self.push(a);
        let q = self.push([a[0], a[1], a[2] + gap]);
        self.pairs.push(VerticalPair { p, q, gap });
    }

    /// Add a slab `a_3 in [z0, z1]` sampled by `k x k` columns with `k`
    /// levels each, boundary planes included.
    pub fn add_slab(&mut self, z0: f64, z1: f64, k: usize) {
        let k = k.max(2);
        let h = self.box_length / k as f64;
        let mut indices = Vec::with_capacity(k * k * k);
        for lz in 0..k {
            let z = z0 + (z1 - z0) * lz as f64 / (k - 1) as f64;
            for j in 0..k {
                for i in 0..k {
                    indices.push(self.push([h * i as f64, h * j as f64, z]));
                }
            }
        }
        self.slabs.push(SlabSet { z0, z1, indices });
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    pub fn labels(&self) -> &[[f64; 3]] {
        &self.labels
    }

    /// Unwrapped positions `X(a, t)`.
    pub fn positions(&self) -> &[[f64; 3]] {
        &self.positions
    }

    pub(crate) fn positions_mut(&mut self) -> &mut Vec<[f64; 3]> {
        &mut self.positions
    }

    pub fn lattice(&self) -> Option<Lattice> {
        self.lattice
    }

    pub fn pairs(&self) -> &[VerticalPair] {
        &self.pairs
    }

    pub fn slabs(&self) -> &[SlabSet] {
        &self.slabs
    }

    /// `lambda = X - a` for every tracer.
    pub fn displacements(&self) -> Vec<[f64; 3]> {
        self.labels
            .iter()
            .zip(&self.positions)
            .map(|(a, x)| algebra::sub(*x, *a))
            .collect()
    }

    /// Positions back to labels (start of a reset window).
    pub fn reseed(&mut self) {
        self.positions.clone_from(&self.labels);
    }
}

/// One RK4 push of all tracers, sharing stage velocities with the flow step.
pub fn advance_tracers(sp: &Spectral, tr: &TracerSet, flow: &FlowState, dt: f64) -> Result<TracerSet> {
    let mut out = tr.clone();
    stepper::advance(sp, flow, None, &mut [&mut out], dt, &Coupled::flow_only())?;
    Ok(out)
}

/// `max_a |A(X(a,t), t) - a|` using interpolated `l`.
pub fn label_round_trip_error(el: &ELState, tr: &TracerSet) -> Result<f64> {
    let ip = Interpolator::new(el.grid());
    let ell = ip.interpolate(&el.ell, tr.positions())?;
    Ok(tr
        .positions()
        .iter()
        .zip(&ell)
        .zip(tr.labels())
        .map(|((x, l), a)| algebra::norm(algebra::sub(algebra::add(*x, *l), *a)))
        .fold(0.0, f64::max))
}

/// Derivative along the lattice's third axis of per-tracer values, by
/// trigonometric differentiation over each periodic column of `m` labels.
pub fn lattice_d3(lat: Lattice, box_length: f64, values: &[[f64; 3]]) -> Vec<[f64; 3]> {
    lattice_derivative(lat, box_length, values, 2)
}

/// Derivative along lattice axis `axis` (0, 1 or 2); see [`lattice_d3`].
pub fn lattice_derivative(lat: Lattice, box_length: f64, values: &[[f64; 3]], axis: usize) -> Vec<[f64; 3]> {
    let m = lat.m;
    let w = spectral_diff_matrix(m, box_length);
    let mut out = vec![[0.0; 3]; m * m * m];
    for a in 0..m {
        for b in 0..m {
            let at = |s: usize| match axis {
                0 => lat.index(s, a, b),
                1 => lat.index(a, s, b),
                _ => lat.index(a, b, s),
            };
            for r in 0..m {
                let mut acc = [0.0; 3];
                for s in 0..m {
                    let v = values[at(s)];
                    for c in 0..3 {
                        acc[c] += w[r * m + s] * v[c];
                    }
                }
                out[at(r) - lat.start] = acc;
            }
        }
    }
    out
}

/// Periodic spectral differentiation matrix on `m` points over length `L`,
/// Nyquist mode dropped.
fn spectral_diff_matrix(m: usize, box_length: f64) -> Vec<f64> {
    let k0 = 2.0 * std::f64::consts::PI / box_length;
    let mut w = vec![0.0; m * m];
    for r in 0..m {
        for s in 0..m {
            let mut acc = 0.0;
            for q in 0..m {
                let kq = if 2 * q < m {
                    q as f64
                } else if 2 * q == m {
                    continue;
                } else {
                    q as f64 - m as f64
                };
                let phase = 2.0 * std::f64::consts::PI * q as f64 * (r as f64 - s as f64) / m as f64;
                // d/dx of exp(i k x) is i k exp(i k x); keep the real part.
                acc += -k0 * kq * phase.sin();
            }
            w[r * m + s] = acc / m as f64;
        }
    }
    w
}

/// Gradient of the direct map at lattice labels: `out[i][c][alpha] =
/// d X_c / d a_alpha`.
pub fn lattice_grad_x(tr: &TracerSet) -> Option<Vec<Mat3>> {
    let lat = tr.lattice()?;
    let lam: Vec<[f64; 3]> = tr.displacements()[lat.start..lat.start + lat.len()].to_vec();
    let shifted = Lattice { m: lat.m, start: 0 };
    let d: Vec<Vec<[f64; 3]>> = (0..3)
        .map(|ax| lattice_derivative(shifted, tr.box_length(), &lam, ax))
        .collect();
    Some(
        (0..lat.len())
            .map(|i| {
                let mut m = Mat3::IDENTITY;
                for (alpha, da) in d.iter().enumerate() {
                    for c in 0..3 {
                        m.0[c][alpha] += da[i][c];
                    }
                }
                m
            })
            .collect(),
    )
}
