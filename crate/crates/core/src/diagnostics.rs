//! Rossby numbers and certification of the vertical-transport bounds.
//!
//! Sup-norms over `x` are taken on the grid; sup-norms over labels on the
//! tracer lattice. Label derivatives are trigonometric derivatives along
//! lattice columns (see [`crate::lagrangian::lattice_derivative`]).

use crate::algebra::{self, Mat3};
use crate::error::{Error, Result};
use crate::field::VectorField3;
use crate::identities::IdentityResiduals;
use crate::interp::Interpolator;
use crate::lagrangian::{self, ELState, TracerSet};
use crate::spectral::Spectral;

pub const DEFAULT_ROSSBY_GATE: f64 = 0.25;

/// Per-sample record; one CSV row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub rossby: f64,
    pub g: f64,
    pub grad_u_int: f64,
    pub dz_ell_max: f64,
    pub bound_14rho: f64,
    pub dz_lambda_max: f64,
    pub bound_9rho: f64,
    pub c_g: f64,
    pub residuals: IdentityResiduals,
    pub energy: f64,
    pub enstrophy: f64,
    pub reset: bool,
    pub under_resolved: bool,
}

/// `rho = sup ||omega||_inf / Omega`.
pub fn rossby(sup_vorticity: f64, omega_rate: f64) -> Result<f64> {
    if !(omega_rate > 0.0) {
        return Err(Error::ZeroRotation("the Rossby number"));
    }
    Ok(sup_vorticity / omega_rate)
}

/// Running supremum of `||omega||_inf` over a window.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RossbyTracker {
    pub sup_vorticity: f64,
}

impl RossbyTracker {
    pub fn observe(&mut self, vort_max: f64) {
        self.sup_vorticity = self.sup_vorticity.max(vort_max);
    }

    pub fn rossby(&self, omega_rate: f64) -> Result<f64> {
        rossby(self.sup_vorticity, omega_rate)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    NotApplicable,
}

impl Status {
    pub fn label(&self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::NotApplicable => "NOT_APPLICABLE",
        }
    }
}

/// Whether the smallness hypotheses `g <= g_max` and `rho <= gate` hold.
pub fn hypotheses_hold(g: f64, rho: f64, g_max: f64, rossby_gate: f64) -> bool {
    g <= g_max && rho <= rossby_gate
}

/// Intermediate bounds for `d_z l` in terms of `g` and `rho = M / Omega`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DzEllBounds {
    /// `|s_3| <= (1 + 2g + 3g^2) rho`.
    pub s3: f64,
    /// `|s_j| <= (1 + 2g) (1 + 2g + 3g^2) rho`.
    pub sj: f64,
    /// `D_2 >= 1 - (1 + 2g + 3g^2) rho`.
    pub d2_lower: f64,
    /// Bound on `|d_z l_j|`, `j = 1, 2`.
    pub dz_ell_j: f64,
    /// `1 + t_2 >= 1 - 2g^2 - (1 + 2g + 3g^2) rho`.
    pub lb3: f64,
    /// `C_g`, bounding `|d_z l_3|`.
    pub c_g: f64,
    /// Euclidean combination of the componentwise bounds.
    pub vector: f64,
    pub bound_14rho: f64,
}

pub fn dz_ell_bounds(g: f64, rho: f64) -> DzEllBounds {
    let q = 1.0 + 2.0 * g + 3.0 * g * g;
    let s3 = q * rho;
    let sj = (1.0 + 2.0 * g) * s3;
    let d2_lower = 1.0 - s3;
    let dz_ell_j = (1.0 + 2.0 * g) * q / d2_lower * rho;
    let lb3 = 1.0 - 2.0 * g * g - s3;
    let c_g = (1.0 + 2.0 * g * (1.0 + 2.0 * g) / d2_lower) * s3 / lb3;
    DzEllBounds {
        s3,
        sj,
        d2_lower,
        dz_ell_j,
        lb3,
        c_g,
        vector: (2.0 * dz_ell_j * dz_ell_j + c_g * c_g).sqrt(),
        bound_14rho: 14.0 * rho,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certification {
    pub status: Status,
    pub measured: f64,
    pub threshold: f64,
    /// `threshold - measured`.
    pub margin: f64,
}

impl Certification {
    fn new(measured: f64, threshold: f64, applicable: bool) -> Self {
        let status = if !applicable {
            Status::NotApplicable
        } else if measured <= threshold {
            Status::Pass
        } else {
            Status::Fail
        };
        Self {
            status,
            measured,
            threshold,
            margin: threshold - measured,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DzEllCertification {
    pub main: Certification,
    /// Check against the tighter `C_g`-based vector bound.
    pub tight: Certification,
    /// Componentwise checks `|d_z l_j| <= dz_ell_j` and `|d_z l_3| <= C_g`.
    pub horizontal: Certification,
    pub vertical: Certification,
    pub bounds: DzEllBounds,
}

/// Sup-norms of `d_z l`: Euclidean, horizontal components, vertical component.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DzEllMeasure {
    pub vector: f64,
    pub horizontal: f64,
    pub vertical: f64,
}

impl DzEllMeasure {
    pub fn max(self, o: Self) -> Self {
        Self {
            vector: self.vector.max(o.vector),
            horizontal: self.horizontal.max(o.horizontal),
            vertical: self.vertical.max(o.vertical),
        }
    }
}

pub fn measure_dz_ell(sp: &Spectral, el: &ELState) -> Result<DzEllMeasure> {
    let gl = lagrangian::grad_ell(sp, el)?;
    Ok(DzEllMeasure {
        vector: gl.max_of(|m| algebra::norm(algebra::dz(m))),
        horizontal: gl.max_of(|m| m.0[0][2].abs().max(m.0[1][2].abs())),
        vertical: gl.max_of(|m| m.0[2][2].abs()),
    })
}

/// `sup |d_z l| <= 14 rho` when `g <= g_max` and `rho <= gate`.
pub fn certify_dz_ell(measured: DzEllMeasure, g: f64, rho: f64, g_max: f64, rossby_gate: f64) -> DzEllCertification {
    let ok = hypotheses_hold(g, rho, g_max, rossby_gate);
    let b = dz_ell_bounds(g, rho);
    DzEllCertification {
        main: Certification::new(measured.vector, b.bound_14rho, ok),
        tight: Certification::new(measured.vector, b.vector, ok),
        horizontal: Certification::new(measured.horizontal, b.dz_ell_j, ok),
        vertical: Certification::new(measured.vertical, b.c_g, ok),
        bounds: b,
    }
}

/// Label-space quantities on the tracer lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeProbe {
    /// `max_a |d_{a_3} lambda|`.
    pub dz_lambda_max: f64,
    /// `max_a |d_{a_3} lambda_3|`.
    pub dz_lambda3_max: f64,
    /// Max over columns and components of the spread of `lambda` in `a_3`.
    pub a3_variation: f64,
    /// `max_a |dX/da_3 - (grad A_1 x grad A_2)(X)|`: lattice derivative vs field.
    pub cross_check: f64,
    /// Max residual of `dX_3/da_3 = 1 + (omega_3(X) - grad_a X_3 . zeta(a)) / 2 Omega`,
    /// relative to `max |dX_3/da_3|`. NaN when `Omega = 0`.
    pub d3x3_rel: f64,
    /// The same with `zeta(a) . dX/da_3` in place of `grad_a X_3 . zeta(a)`.
    pub d3x3_transposed_rel: f64,
}

/// Evaluate the lattice quantities; `None` without a lattice.
pub fn lattice_probe(
    sp: &Spectral,
    tr: &TracerSet,
    el: &ELState,
    omega: &VectorField3,
    omega_rate: f64,
) -> Result<Option<LatticeProbe>> {
    let Some(lat) = tr.lattice() else {
        return Ok(None);
    };
    let grads = lagrangian::lattice_grad_x(tr).expect("lattice present");
    let range = lat.start..lat.start + lat.len();
    let pos = &tr.positions()[range.clone()];
    let labels = &tr.labels()[range.clone()];
    let lam = &tr.displacements()[range];

    let dz_lambda_max = grads
        .iter()
        .map(|m| algebra::norm(algebra::sub(m.col(2), [0.0, 0.0, 1.0])))
        .fold(0.0, f64::max);
    let dz_lambda3_max = grads.iter().map(|m| (m.0[2][2] - 1.0).abs()).fold(0.0, f64::max);

    let m = lat.m;
    let mut a3_variation: f64 = 0.0;
    for j in 0..m {
        for i in 0..m {
            for c in 0..3 {
                let col = (0..m).map(|k| lam[i + m * (j + m * k)][c]);
                let (lo, hi) = col.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
                a3_variation = a3_variation.max(hi - lo);
            }
        }
    }

    let ip = Interpolator::new(sp.grid());
    let cross = lagrangian::d3x_from_a(sp, el)?;
    let field_at_x = ip.interpolate(&cross, pos)?;
    let cross_check = grads
        .iter()
        .zip(&field_at_x)
        .map(|(m, f)| algebra::norm(algebra::sub(m.col(2), *f)))
        .fold(0.0, f64::max);

    let (d3x3_rel, d3x3_transposed_rel) = if omega_rate > 0.0 {
        let om = ip.interpolate(omega, pos)?;
        let zeta = ip.interpolate(&el.zeta0, labels)?;
        let inv = 1.0 / (2.0 * omega_rate);
        let mut worst = 0.0f64;
        let mut worst_t = 0.0f64;
        let mut scale = 0.0f64;
        for ((gx, w), z) in grads.iter().zip(&om).zip(&zeta) {
            let lhs = gx.0[2][2];
            let rhs = 1.0 + inv * (w[2] - algebra::dot(gx.row(2), *z));
            let rhs_t = 1.0 + inv * (w[2] - algebra::dot(gx.col(2), *z));
            worst = worst.max((lhs - rhs).abs());
            worst_t = worst_t.max((lhs - rhs_t).abs());
            scale = scale.max(lhs.abs());
        }
        (worst / scale, worst_t / scale)
    } else {
        (f64::NAN, f64::NAN)
    };

    Ok(Some(LatticeProbe {
        dz_lambda_max,
        dz_lambda3_max,
        a3_variation,
        cross_check,
        d3x3_rel,
        d3x3_transposed_rel,
    }))
}

/// `sup |d_{a_3}(X - a)| <= 9 rho` when the hypotheses hold.
pub fn certify_dz_lambda(measured: f64, g: f64, rho: f64, g_max: f64, rossby_gate: f64) -> Certification {
    Certification::new(measured, 9.0 * rho, hypotheses_hold(g, rho, g_max, rossby_gate))
}

/// Residuals of the displacement equation over the lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisplacementOdeReport {
    /// `max |LHS - RHS|` of
    /// `d_3 lambda_3 + eps_1 d_1 lambda_3 + eps_2 d_2 lambda_3 =
    ///  (omega_3(X) - zeta_3) / (2 Omega (1 + zeta_3 / 2 Omega))`.
    pub residual_abs: f64,
    /// `residual_abs / max(|LHS|, |RHS|)`, 0 when both vanish.
    pub residual_rel: f64,
    /// The steady form: `max |d_3 lambda_3 + eps_1 d_1 lambda_3 + eps_2 d_2 lambda_3|`.
    pub steady_abs: f64,
    /// Residual with `eps_j d_3 lambda_j` in place of `eps_j d_j lambda_3`.
    pub transposed_abs: f64,
    /// Points skipped for `|1 + zeta_3 / 2 Omega| < 0.1`.
    pub skipped: usize,
    /// Points where the local Rossby number `|zeta(a)| / Omega` is not below 2.
    pub local_rossby_violations: usize,
    pub evaluated: usize,
}

pub fn displacement_ode_residual(
    sp: &Spectral,
    tr: &TracerSet,
    el: &ELState,
    omega: &VectorField3,
    omega_rate: f64,
) -> Result<Option<DisplacementOdeReport>> {
    if !(omega_rate > 0.0) {
        return Err(Error::ZeroRotation("the displacement equation"));
    }
    let Some(lat) = tr.lattice() else {
        return Ok(None);
    };
    let grads = lagrangian::lattice_grad_x(tr).expect("lattice present");
    let range = lat.start..lat.start + lat.len();
    let ip = Interpolator::new(sp.grid());
    let om = ip.interpolate(omega, &tr.positions()[range.clone()])?;
    let zeta = ip.interpolate(&el.zeta0, &tr.labels()[range])?;
    let mut r = DisplacementOdeReport {
        residual_abs: 0.0,
        residual_rel: 0.0,
        steady_abs: 0.0,
        transposed_abs: 0.0,
        skipped: 0,
        local_rossby_violations: 0,
        evaluated: 0,
    };
    let mut scale = 0.0f64;
    for ((gx, w), z) in grads.iter().zip(&om).zip(&zeta) {
        if algebra::norm(*z) / omega_rate >= 2.0 {
            r.local_rossby_violations += 1;
        }
        let den = 1.0 + z[2] / (2.0 * omega_rate);
        if den.abs() < 0.1 {
            r.skipped += 1;
            continue;
        }
        let eps = [z[0] / (2.0 * omega_rate * den), z[1] / (2.0 * omega_rate * den)];
        let d = |c: usize, a: usize| gx.0[c][a] - if c == a { 1.0 } else { 0.0 };
        let lhs = d(2, 2) + eps[0] * d(2, 0) + eps[1] * d(2, 1);
        let lhs_t = d(2, 2) + eps[0] * d(0, 2) + eps[1] * d(1, 2);
        let rhs = (w[2] - z[2]) / (2.0 * omega_rate * den);
        r.residual_abs = r.residual_abs.max((lhs - rhs).abs());
        r.transposed_abs = r.transposed_abs.max((lhs_t - rhs).abs());
        r.steady_abs = r.steady_abs.max(lhs.abs());
        scale = scale.max(lhs.abs()).max(rhs.abs());
        r.evaluated += 1;
    }
    r.residual_rel = if scale > 0.0 { r.residual_abs / scale } else { r.residual_abs };
    Ok(Some(r))
}

/// Deviation of one vertical pair against its bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairCheck {
    pub gap: f64,
    /// `|X_3(P,t) - X_3(Q,t) + d|`.
    pub deviation: f64,
    /// `(rho/2)(1 + exp(2 int |grad u|))`.
    pub bound: f64,
    /// The bound scaled by the gap `d`.
    pub bound_scaled: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairReport {
    pub pairs: Vec<PairCheck>,
    pub max_deviation: f64,
    /// `min(bound - deviation)`; `+inf` without pairs.
    pub min_margin: f64,
    pub min_scaled_margin: f64,
}

impl PairReport {
    pub fn all_within(&self) -> bool {
        self.pairs.iter().all(|p| p.deviation <= p.bound)
    }
}

pub fn pair_bound(rho: f64, grad_u_int: f64) -> f64 {
    0.5 * rho * (1.0 + (2.0 * grad_u_int).exp())
}

pub fn pair_separation_check(tr: &TracerSet, rho: f64, grad_u_int: f64) -> PairReport {
    let bound = pair_bound(rho, grad_u_int);
    let x = tr.positions();
    let pairs: Vec<PairCheck> = tr
        .pairs()
        .iter()
        .map(|p| PairCheck {
            gap: p.gap,
            deviation: (x[p.p][2] - x[p.q][2] + p.gap).abs(),
            bound,
            bound_scaled: p.gap * bound,
        })
        .collect();
    PairReport {
        max_deviation: pairs.iter().map(|p| p.deviation).fold(0.0, f64::max),
        min_margin: pairs.iter().map(|p| p.bound - p.deviation).fold(f64::INFINITY, f64::min),
        min_scaled_margin: pairs
            .iter()
            .map(|p| p.bound_scaled - p.deviation)
            .fold(f64::INFINITY, f64::min),
        pairs,
    }
}

/// Separation of two material slabs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SetSeparation {
    /// Vertical separation along vertical lines.
    pub delta: f64,
    /// Euclidean distance between the sets now.
    pub distance: f64,
    /// Distance at the window start, from the tracer subsets.
    pub distance_t0: f64,
    /// `(1 + 14 rho)^-1 d(t0)`.
    pub floor: f64,
    /// Smallest vertical gap between tracers of the two sets.
    pub tracer_vertical_min: f64,
}

impl SetSeparation {
    pub fn holds(&self) -> bool {
        self.delta >= self.floor
    }
}

pub fn separation_floor(rho: f64, distance_t0: f64) -> f64 {
    distance_t0 / (1.0 + 14.0 * rho)
}

fn min_image(d: f64, l: f64) -> f64 {
    d - l * (d / l).round()
}

/// Minimum distance between two tracer subsets at their label positions.
fn label_set_distance(tr: &TracerSet, a: &[usize], b: &[usize]) -> f64 {
    let l = tr.box_length();
    let lab = tr.labels();
    let mut best = f64::INFINITY;
    for &i in a {
        for &j in b {
            let d: [f64; 3] = std::array::from_fn(|c| min_image(lab[i][c] - lab[j][c], l));
            best = best.min(algebra::norm(d));
        }
    }
    best
}

/// Slab separation floor: `delta(t) >= (1 + 14 rho)^-1 d(t0)`.
///
/// The sets are the images of the slabs `a_3 in [z0, z1]` registered in `tr`.
/// `delta` is evaluated on every vertical grid line by locating the slab
/// boundaries `A_3(x, y, z, t) = z0, z1` along the line, and `d(t)` from
/// the same boundary points, so `d(t) <= delta(t)` by construction.
pub fn set_separation_check(
    sp: &Spectral,
    tr: &TracerSet,
    el: &ELState,
    slab_a: usize,
    slab_b: usize,
    rho: f64,
) -> Result<SetSeparation> {
    let slabs = tr.slabs();
    let (Some(sa), Some(sb)) = (slabs.get(slab_a), slabs.get(slab_b)) else {
        return Err(Error::EmptySet("slab index out of range"));
    };
    if sa.indices.is_empty() || sb.indices.is_empty() {
        return Err(Error::EmptySet("slab without tracers"));
    }
    let (lo, hi) = if sa.z0 <= sb.z0 { (sa, sb) } else { (sb, sa) };
    let distance_t0 = label_set_distance(tr, &sa.indices, &sb.indices);

    let g = sp.grid();
    let n = g.n();
    let l = g.box_length();
    let ell3 = el.ell.component(2).as_physical()?;
    // Boundary heights per column: lo top, hi bottom, hi top, lo bottom.
    let mut surf = vec![[0.0; 4]; n * n];
    for j in 0..n {
        for i in 0..n {
            let col: Vec<f64> = (0..n).map(|k| ell3[g.index(i, j, k)]).collect();
            let c = Column::new(&col, l);
            surf[i + n * j] = [c.solve(lo.z1), c.solve(hi.z0), c.solve(hi.z1), c.solve(lo.z0) + l];
        }
    }
    let delta = surf
        .iter()
        .map(|s| (s[1] - s[0]).min(s[3] - s[2]))
        .fold(f64::INFINITY, f64::min);
    let mut distance = f64::INFINITY;
    for (p, sp_) in surf.iter().enumerate() {
        let (xi, yj) = (g.coord(p % n), g.coord(p / n));
        for (q, sq) in surf.iter().enumerate() {
            let dx = min_image(g.coord(q % n) - xi, l);
            let dy = min_image(g.coord(q / n) - yj, l);
            let h2 = dx * dx + dy * dy;
            let dz1 = sq[1] - sp_[0];
            let dz2 = sq[3] - sp_[2];
            distance = distance.min((h2 + dz1 * dz1).sqrt()).min((h2 + dz2 * dz2).sqrt());
        }
    }

    let x = tr.positions();
    let mut tracer_vertical_min = f64::INFINITY;
    for &i in &sa.indices {
        for &j in &sb.indices {
            tracer_vertical_min = tracer_vertical_min.min(min_image(x[i][2] - x[j][2], l).abs());
        }
    }
    Ok(SetSeparation {
        delta,
        distance,
        distance_t0,
        floor: separation_floor(rho, distance_t0),
        tracer_vertical_min,
    })
}

/// Trigonometric interpolant of `l_3` along one vertical line.
struct Column {
    re: Vec<f64>,
    im: Vec<f64>,
    k: Vec<f64>,
    vals: Vec<f64>,
    l: f64,
}

impl Column {
    fn new(vals: &[f64], l: f64) -> Self {
        let n = vals.len();
        let k0 = 2.0 * std::f64::consts::PI / l;
        let mut re = vec![0.0; n];
        let mut im = vec![0.0; n];
        let mut k = vec![0.0; n];
        for q in 0..n {
            let kq = if 2 * q <= n { q as f64 } else { q as f64 - n as f64 };
            k[q] = k0 * kq;
            for (s, v) in vals.iter().enumerate() {
                let ph = -2.0 * std::f64::consts::PI * (q * s) as f64 / n as f64;
                re[q] += v * ph.cos() / n as f64;
                im[q] += v * ph.sin() / n as f64;
            }
        }
        // Split the Nyquist coefficient so the interpolant stays real.
        if n % 2 == 0 {
            k[n / 2] = 0.0;
            re[n / 2] = 0.0;
            im[n / 2] = 0.0;
        }
        Self {
            re,
            im,
            k,
            vals: vals.to_vec(),
            l,
        }
    }

    /// `(A_3, d A_3 / dz)` at height `z`.
    fn eval(&self, z: f64) -> (f64, f64) {
        let mut f = 0.0;
        let mut df = 0.0;
        for q in 0..self.re.len() {
            let (s, c) = (self.k[q] * z).sin_cos();
            f += self.re[q] * c - self.im[q] * s;
            df += -self.k[q] * (self.re[q] * s + self.im[q] * c);
        }
        (z + f, 1.0 + df)
    }

    /// Height `z` with `A_3(z) = target`; `A_3(z + L) = A_3(z) + L`.
    fn solve(&self, target: f64) -> f64 {
        let n = self.vals.len();
        let h = self.l / n as f64;
        let base = self.vals[0];
        let shift = ((target - base) / self.l).floor() * self.l;
        let c = target - shift;
        // Bracket on the samples, then Newton safeguarded by bisection.
        let at = |k: usize| h * k as f64 + if k == n { self.l + base } else { self.vals[k] };
        let mut k = 0;
        while k < n && at(k + 1) < c {
            k += 1;
        }
        let (mut a, mut b) = (h * k as f64, h * (k + 1) as f64);
        let mut z = 0.5 * (a + b);
        for _ in 0..60 {
            let (f, df) = self.eval(z);
            let r = f - c;
            if r.abs() < 1e-14 {
                break;
            }
            if r > 0.0 {
                b = z;
            } else {
                a = z;
            }
            let zn = z - r / df;
            z = if zn > a && zn < b { zn } else { 0.5 * (a + b) };
        }
        z + shift
    }
}

/// One run of an `Omega` sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub omega_rate: f64,
    pub rossby: f64,
    pub g_max: f64,
    pub sup_dz_ell: f64,
    pub sup_dz_lambda: f64,
    pub a3_variation: f64,
    pub hypotheses_met: bool,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub rows: Vec<SweepRow>,
    /// Log-log slope of `sup |d_z l|` against `1/Omega`; `None` with fewer
    /// than two eligible runs.
    pub slope_dz_ell: Option<f64>,
    pub slope_dz_lambda: Option<f64>,
    /// `a_3`-variation of `lambda` nonincreasing in `Omega` over eligible runs.
    pub variation_monotone: bool,
    /// `sup |d_z l|` strictly decreasing in `Omega` over eligible runs.
    pub dz_ell_decreasing: bool,
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(xy: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xy
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

pub fn two_dim_limit_probe(mut rows: Vec<SweepRow>) -> ProbeReport {
    rows.sort_by(|a, b| a.omega_rate.total_cmp(&b.omega_rate));
    let ok: Vec<&SweepRow> = rows.iter().filter(|r| r.hypotheses_met).collect();
    let slope = |f: fn(&SweepRow) -> f64| log_log_slope(&ok.iter().map(|r| (1.0 / r.omega_rate, f(r))).collect::<Vec<_>>());
    ProbeReport {
        slope_dz_ell: slope(|r| r.sup_dz_ell),
        slope_dz_lambda: slope(|r| r.sup_dz_lambda),
        variation_monotone: ok.windows(2).all(|w| w[1].a3_variation <= w[0].a3_variation),
        dz_ell_decreasing: ok.windows(2).all(|w| w[1].sup_dz_ell < w[0].sup_dz_ell),
        rows,
    }
}

/// `dX/da_3` minus `e_3` at one lattice label, for reports.
pub fn dz_lambda(m: &Mat3) -> [f64; 3] {
    algebra::sub(m.col(2), [0.0, 0.0, 1.0])
}
