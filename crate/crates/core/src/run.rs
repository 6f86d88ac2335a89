//! Time loop: step, reset, sample, certify, checkpoint.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use crate::checkpoint::{self, Checkpoint, RunState, Tracer};
use crate::config::{RunConfig, TimeStep};
use crate::csv;
use crate::diagnostics::{self, DiagnosticsRecord, Status, SweepRow};
use crate::error::{Error, Result};
use crate::field::VectorField3;
use crate::flow::{self, FlowState};
use crate::grid::Grid;
use crate::identities::{self, IdentityResiduals};
use crate::lagrangian::{self, ELState, TracerSet, GRAD_U_BUDGET};
use crate::spectral::Spectral;
use crate::stepper::{self, Coupled};

/// Accumulators for the current reset window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub index: u64,
    pub t0: f64,
    pub steps: u64,
    /// `int ||grad u||_inf dt` since the reset, trapezoidal.
    pub grad_u_int: f64,
    /// Running `sup ||omega||_inf`.
    pub sup_vorticity: f64,
    /// Running `sup ||grad l||_inf` over steps.
    pub g_sup: f64,
    pub dz_ell_sup: f64,
    pub dz_lambda_sup: f64,
    pub a3_variation_sup: f64,
    /// Smallest `threshold - measured` over gated samples.
    pub dz_ell_margin: f64,
    pub dz_lambda_margin: f64,
    pub pair_margin: f64,
    pub separation_margin: f64,
    /// Whether every sample so far met the hypotheses.
    pub hypotheses_met: bool,
    pub samples: u64,
}

impl Window {
    fn start(index: u64, t0: f64, sup_vorticity: f64) -> Self {
        Self {
            index,
            t0,
            steps: 0,
            grad_u_int: 0.0,
            sup_vorticity,
            g_sup: 0.0,
            dz_ell_sup: 0.0,
            dz_lambda_sup: 0.0,
            a3_variation_sup: 0.0,
            dz_ell_margin: f64::INFINITY,
            dz_lambda_margin: f64::INFINITY,
            pair_margin: f64::INFINITY,
            separation_margin: f64::INFINITY,
            hypotheses_met: true,
            samples: 0,
        }
    }

    fn to_vec(self) -> Vec<f64> {
        vec![
            self.index as f64,
            self.t0,
            self.steps as f64,
            self.grad_u_int,
            self.sup_vorticity,
            self.g_sup,
            self.dz_ell_sup,
            self.dz_lambda_sup,
            self.a3_variation_sup,
            self.dz_ell_margin,
            self.dz_lambda_margin,
            self.pair_margin,
            self.separation_margin,
            if self.hypotheses_met { 1.0 } else { 0.0 },
            self.samples as f64,
        ]
    }

    fn from_slice(s: &[f64]) -> Self {
        Self {
            index: s[0] as u64,
            t0: s[1],
            steps: s[2] as u64,
            grad_u_int: s[3],
            sup_vorticity: s[4],
            g_sup: s[5],
            dz_ell_sup: s[6],
            dz_lambda_sup: s[7],
            a3_variation_sup: s[8],
            dz_ell_margin: s[9],
            dz_lambda_margin: s[10],
            pair_margin: s[11],
            separation_margin: s[12],
            hypotheses_met: s[13] != 0.0,
            samples: s[14] as u64,
        }
    }

    const LEN: usize = 15;
}

/// Whole-run extremes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Totals {
    pub failures: u64,
    pub sup_vorticity: f64,
    pub rossby_max: f64,
    pub g_max: f64,
    pub dz_ell_sup: f64,
    pub dz_lambda_sup: f64,
    pub a3_variation_sup: f64,
    pub weber_max: f64,
    pub cauchy_max: f64,
    pub factorization_max: f64,
    pub d2_max: f64,
    pub d2_polynomial_max: f64,
    pub resets: u64,
    pub hypotheses_met: bool,
    pub under_resolved: bool,
}

impl Totals {
    fn new() -> Self {
        Self {
            failures: 0,
            sup_vorticity: 0.0,
            rossby_max: 0.0,
            g_max: 0.0,
            dz_ell_sup: 0.0,
            dz_lambda_sup: 0.0,
            a3_variation_sup: 0.0,
            weber_max: 0.0,
            cauchy_max: 0.0,
            factorization_max: 0.0,
            d2_max: 0.0,
            d2_polynomial_max: 0.0,
            resets: 0,
            hypotheses_met: true,
            under_resolved: false,
        }
    }

    fn to_vec(self) -> Vec<f64> {
        vec![
            self.failures as f64,
            self.sup_vorticity,
            self.rossby_max,
            self.g_max,
            self.dz_ell_sup,
            self.dz_lambda_sup,
            self.a3_variation_sup,
            self.weber_max,
            self.cauchy_max,
            self.factorization_max,
            self.d2_max,
            self.d2_polynomial_max,
            self.resets as f64,
            if self.hypotheses_met { 1.0 } else { 0.0 },
            if self.under_resolved { 1.0 } else { 0.0 },
        ]
    }

    fn from_slice(s: &[f64]) -> Self {
        Self {
            failures: s[0] as u64,
            sup_vorticity: s[1],
            rossby_max: s[2],
            g_max: s[3],
            dz_ell_sup: s[4],
            dz_lambda_sup: s[5],
            a3_variation_sup: s[6],
            weber_max: s[7],
            cauchy_max: s[8],
            factorization_max: s[9],
            d2_max: s[10],
            d2_polynomial_max: s[11],
            resets: s[12] as u64,
            hypotheses_met: s[13] != 0.0,
            under_resolved: s[14] != 0.0,
        }
    }

    const LEN: usize = 15;
}

/// Closed reset window, for the final summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowSummary {
    pub window: Window,
    pub t1: f64,
    pub rossby: f64,
}

impl WindowSummary {
    pub fn certified(&self) -> Status {
        if !self.window.hypotheses_met || self.window.samples == 0 {
            Status::NotApplicable
        } else if self.window.dz_ell_margin >= 0.0
            && self.window.dz_lambda_margin >= 0.0
            && self.window.pair_margin >= 0.0
            && self.window.separation_margin >= 0.0
        {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

pub struct Simulation {
    pub cfg: RunConfig,
    sp: Spectral,
    pub flow: FlowState,
    pub el: ELState,
    pub tracers: TracerSet,
    pub persistent: Option<TracerSet>,
    pub step: u64,
    pub window: Window,
    pub totals: Totals,
    pub records: Vec<DiagnosticsRecord>,
    pub windows: Vec<WindowSummary>,
    pub messages: Vec<String>,
    grad_u_now: f64,
    g_now: f64,
    last_sample_step: Option<u64>,
    under_resolved_now: bool,
    sink: Option<File>,
}

fn build_tracers(cfg: &RunConfig, lattice: usize) -> TracerSet {
    let mut tr = TracerSet::empty(cfg.box_length);
    tr.add_lattice(lattice);
    tr.add_random_pairs(cfg.pairs, cfg.pair_gap_min, cfg.pair_gap_max, cfg.seed);
    for s in &cfg.slabs {
        tr.add_slab(s.z0, s.z1, cfg.slab_tracers);
    }
    tr
}

fn tracer_pairs(tr: &TracerSet) -> Vec<Tracer> {
    tr.labels().iter().copied().zip(tr.positions().iter().copied()).collect()
}

fn restore_tracers(structure: TracerSet, saved: &[Tracer], what: &str) -> Result<TracerSet> {
    if saved.len() != structure.len() || saved.iter().zip(structure.labels()).any(|(s, a)| s.0 != *a) {
        return Err(Error::Checkpoint {
            message: format!("{what} do not match the configuration"),
            offset: 0,
        });
    }
    structure.with_positions(saved.iter().map(|s| s.1).collect())
}

impl Simulation {
    pub fn new(cfg: RunConfig) -> Result<Self> {
        let grid = Grid::new(cfg.n, cfg.box_length)?;
        let sp = Spectral::new(grid);
        let u0 = cfg.initial_condition.build(&sp, cfg.amplitude, cfg.seed)?;
        let u0 = sp.leray_project(&u0)?;
        let flow = FlowState::new(u0, cfg.omega_rate, cfg.nu)?;
        let el = ELState::at_reset(&sp, &flow)?;
        let vort = el.zeta0.max_norm();
        let tracers = build_tracers(&cfg, cfg.lattice);
        let persistent = (cfg.persistent_lattice > 0).then(|| build_tracers(&cfg, cfg.persistent_lattice));
        let grad_u_now = flow::grad_u_max(&sp, &flow)?;
        let mut totals = Totals::new();
        totals.sup_vorticity = vort;
        Ok(Self {
            window: Window::start(0, flow.t, vort),
            cfg,
            sp,
            flow,
            el,
            tracers,
            persistent,
            step: 0,
            totals,
            records: Vec::new(),
            windows: Vec::new(),
            messages: Vec::new(),
            grad_u_now,
            g_now: 0.0,
            last_sample_step: None,
            under_resolved_now: false,
            sink: None,
        })
    }

    /// Continue from a checkpoint written by a run with the same configuration.
    pub fn resume(cfg: RunConfig, ck: &Checkpoint) -> Result<Self> {
        if ck.n as usize != cfg.n || ck.box_length != cfg.box_length {
            return Err(Error::GridMismatch);
        }
        if ck.omega_rate != cfg.omega_rate || ck.nu != cfg.nu {
            return Err(Error::config("omega", "checkpoint was written with different omega or nu"));
        }
        let grid = Grid::new(cfg.n, cfg.box_length)?;
        let sp = Spectral::new(grid);
        let f = |a: &[Vec<f64>; 3]| VectorField3::from_physical(grid, a.clone());
        let flow = FlowState::new(f(&ck.u), ck.omega_rate, ck.nu)?.with_time(ck.t);
        let el = ELState {
            ell: f(&ck.ell),
            v: f(&ck.v),
            zeta0: f(&ck.zeta0),
            t0: ck.t0,
        };
        let tracers = restore_tracers(build_tracers(&cfg, cfg.lattice), &ck.tracers, "tracers")?;
        let rs = ck.run_state.as_ref().ok_or_else(|| Error::Checkpoint {
            message: "no run state; cannot resume".into(),
            offset: 0,
        })?;
        if rs.scalars.len() != Window::LEN + Totals::LEN + 1 {
            return Err(Error::Checkpoint {
                message: format!("run state has {} scalars", rs.scalars.len()),
                offset: 0,
            });
        }
        let persistent = match cfg.persistent_lattice {
            0 => None,
            m => Some(restore_tracers(build_tracers(&cfg, m), &rs.persistent, "persistent tracers")?),
        };
        let window = Window::from_slice(&rs.scalars[..Window::LEN]);
        let totals = Totals::from_slice(&rs.scalars[Window::LEN..Window::LEN + Totals::LEN]);
        let last = rs.scalars[Window::LEN + Totals::LEN];
        let grad_u_now = flow::grad_u_max(&sp, &flow)?;
        let g_now = lagrangian::displacement_gradient_max(&sp, &el)?;
        Ok(Self {
            cfg,
            sp,
            flow,
            el,
            tracers,
            persistent,
            step: rs.step,
            window,
            totals,
            records: Vec::new(),
            windows: Vec::new(),
            messages: Vec::new(),
            grad_u_now,
            g_now,
            last_sample_step: (last >= 0.0).then_some(last as u64),
            under_resolved_now: false,
            sink: None,
        })
    }

    pub fn spectral(&self) -> &Spectral {
        &self.sp
    }

    /// Append each diagnostics row to `file` as it is produced.
    pub fn stream_to(&mut self, file: File) {
        self.sink = Some(file);
    }

    pub fn checkpoint(&self) -> Result<Checkpoint> {
        let [u, ell, v, zeta0] = [&self.flow.u, &self.el.ell, &self.el.v, &self.el.zeta0].map(|f| f.to_physical_arrays());
        let mut scalars = self.window.to_vec();
        scalars.extend(self.totals.to_vec());
        scalars.push(self.last_sample_step.map_or(-1.0, |s| s as f64));
        Ok(Checkpoint {
            n: self.cfg.n as u32,
            box_length: self.cfg.box_length,
            t: self.flow.t,
            t0: self.el.t0,
            omega_rate: self.flow.omega_rate,
            nu: self.flow.nu,
            u: u?,
            ell: ell?,
            v: v?,
            zeta0: zeta0?,
            tracers: tracer_pairs(&self.tracers),
            run_state: Some(RunState {
                step: self.step,
                window: self.window.index,
                scalars,
                persistent: self.persistent.as_ref().map(tracer_pairs).unwrap_or_default(),
            }),
        })
    }

    fn evolves_v(&self) -> bool {
        self.cfg.nu > 0.0 || self.cfg.identities
    }

    fn rossby(&self) -> f64 {
        if self.cfg.omega_rate > 0.0 {
            self.window.sup_vorticity / self.cfg.omega_rate
        } else {
            f64::NAN
        }
    }

    pub fn finished(&self) -> bool {
        self.flow.t >= self.cfg.t_end * (1.0 - 1e-14) - 1e-14
    }

    fn next_dt(&self) -> f64 {
        let dt = match self.cfg.dt {
            TimeStep::Fixed(dt) => dt,
            TimeStep::Auto { dt_max } => flow::cfl_dt(&self.flow, dt_max),
        };
        let remaining = self.cfg.t_end - self.flow.t;
        if remaining < dt * (1.0 + 1e-9) {
            remaining
        } else {
            dt
        }
    }

    /// One time step, resetting first when the next step would leave the
    /// window hypotheses.
    pub fn step_once(&mut self) -> Result<()> {
        let dt = self.next_dt();
        if self.window.steps > 0 {
            let pred_int = self.window.grad_u_int + 2.0 * dt * self.grad_u_now;
            let pred_g = (1.0 + self.g_now) * (dt * self.grad_u_now).exp() - 1.0;
            if pred_int > GRAD_U_BUDGET || pred_g > self.cfg.g_max {
                self.reset()?;
            }
        }
        let opts = Coupled {
            displacement: true,
            virtual_velocity: self.evolves_v(),
            det_min: self.cfg.det_min,
        };
        let out = match self.advance(dt, &opts) {
            Err(Error::NearSingular { .. }) if self.window.steps > 0 => {
                self.reset()?;
                self.advance(dt, &opts)?
            }
            r => r?,
        };
        self.flow = out.0.flow;
        self.el = out.0.el.expect("displacement evolved");
        self.tracers = out.1;
        if let Some(p) = out.2 {
            self.persistent = Some(p);
        }
        self.under_resolved_now = out.0.tail_fraction > flow::UNDER_RESOLVED_FRACTION;
        self.totals.under_resolved |= self.under_resolved_now;

        let grad_u_new = flow::grad_u_max(&self.sp, &self.flow)?;
        self.window.grad_u_int += 0.5 * dt * (self.grad_u_now + grad_u_new);
        self.grad_u_now = grad_u_new;
        self.g_now = lagrangian::displacement_gradient_max(&self.sp, &self.el)?;
        self.window.g_sup = self.window.g_sup.max(self.g_now);
        let vort = flow::vorticity(&self.sp, &self.flow)?.max_norm();
        self.window.sup_vorticity = self.window.sup_vorticity.max(vort);
        self.totals.sup_vorticity = self.totals.sup_vorticity.max(vort);
        self.step += 1;
        self.window.steps += 1;
        if self.step % self.cfg.cadence == 0 {
            self.sample(false)?;
        }
        Ok(())
    }

    fn advance(&self, dt: f64, opts: &Coupled) -> Result<(stepper::Advanced, TracerSet, Option<TracerSet>)> {
        let mut tr = self.tracers.clone();
        let mut pers = self.persistent.clone();
        let out = {
            let mut sets: Vec<&mut TracerSet> = vec![&mut tr];
            if let Some(p) = pers.as_mut() {
                sets.push(p);
            }
            stepper::advance(&self.sp, &self.flow, Some(&self.el), &mut sets, dt, opts)?
        };
        Ok((out, tr, pers))
    }

    /// Close the current window and start a new one at the current time.
    pub fn reset(&mut self) -> Result<()> {
        if self.last_sample_step != Some(self.step) {
            self.sample(true)?;
        } else if let Some(last) = self.records.last_mut() {
            last.reset = true;
        }
        self.close_window();
        self.el.reset(&self.sp, &self.flow)?;
        self.tracers.reseed();
        let vort = self.el.zeta0.max_norm();
        self.window = Window::start(self.window.index + 1, self.flow.t, vort);
        self.g_now = 0.0;
        self.totals.resets += 1;
        Ok(())
    }

    fn close_window(&mut self) {
        self.windows.push(WindowSummary {
            window: self.window,
            t1: self.flow.t,
            rossby: self.rossby(),
        });
    }

    /// Evaluate diagnostics and certifications at the current state.
    pub fn sample(&mut self, reset: bool) -> Result<DiagnosticsRecord> {
        let sp = &self.sp;
        let omega_rate = self.cfg.omega_rate;
        let rho = self.rossby();
        let g = self.g_now;
        let g_sup = self.window.g_sup.max(g);
        let rotating = omega_rate > 0.0;
        let hyp = rotating
            && diagnostics::hypotheses_hold(g_sup, rho, self.cfg.g_max, self.cfg.rossby_gate)
            && self.window.grad_u_int <= GRAD_U_BUDGET;

        let dz = diagnostics::measure_dz_ell(sp, &self.el)?;
        let vort = flow::vorticity(sp, &self.flow)?;
        let probe = diagnostics::lattice_probe(sp, &self.tracers, &self.el, &vort, omega_rate)?;
        let residuals = if self.evolves_v() {
            identities::residuals(sp, &self.el, &self.flow, self.cfg.det_min)?
        } else {
            IdentityResiduals {
                weber_rel: f64::NAN,
                cauchy_rel: f64::NAN,
                factorization_abs: identities::factorization_residual(sp, &self.el)?.max_abs(),
                d2_rel: f64::NAN,
                time: self.flow.t,
            }
        };
        let d2_poly = if rotating {
            let gl = lagrangian::grad_ell(sp, &self.el)?;
            gl.max_of(|m| (crate::algebra::big_d2(m) - 1.0 - crate::algebra::t2(m) - crate::algebra::d2(m)).abs())
        } else {
            0.0
        };

        let mut fails = Vec::new();
        let w = &mut self.window;
        w.samples += 1;
        w.hypotheses_met &= hyp;
        w.dz_ell_sup = w.dz_ell_sup.max(dz.vector);
        let (bound_14, bound_9, c_g) = if rotating {
            let b = diagnostics::dz_ell_bounds(g_sup, rho);
            (b.bound_14rho, 9.0 * rho, b.c_g)
        } else {
            (f64::NAN, f64::NAN, f64::NAN)
        };
        let cert = diagnostics::certify_dz_ell(dz, g_sup, rho, self.cfg.g_max, self.cfg.rossby_gate);
        if hyp {
            w.dz_ell_margin = w.dz_ell_margin.min(cert.main.margin);
            if cert.main.status == Status::Fail {
                fails.push(format!("|d_z l| = {:.3e} exceeds 14 rho = {:.3e}", dz.vector, bound_14));
            }
        }
        let dz_lambda = probe.as_ref().map_or(f64::NAN, |p| p.dz_lambda_max);
        if let Some(p) = &probe {
            w.dz_lambda_sup = w.dz_lambda_sup.max(p.dz_lambda_max);
            w.a3_variation_sup = w.a3_variation_sup.max(p.a3_variation);
            if hyp {
                let c = diagnostics::certify_dz_lambda(p.dz_lambda_max, g_sup, rho, self.cfg.g_max, self.cfg.rossby_gate);
                w.dz_lambda_margin = w.dz_lambda_margin.min(c.margin);
                if c.status == Status::Fail {
                    fails.push(format!("|d_a3 lambda| = {:.3e} exceeds 9 rho = {:.3e}", p.dz_lambda_max, bound_9));
                }
            }
        }
        if hyp && !self.tracers.pairs().is_empty() {
            let pr = diagnostics::pair_separation_check(&self.tracers, rho, w.grad_u_int);
            w.pair_margin = w.pair_margin.min(pr.min_margin);
            if !pr.all_within() {
                fails.push(format!("vertical pair deviation {:.3e} exceeds its bound", pr.max_deviation));
            }
        }
        if hyp && self.tracers.slabs().len() >= 2 {
            let s = diagnostics::set_separation_check(sp, &self.tracers, &self.el, 0, 1, rho)?;
            w.separation_margin = w.separation_margin.min(s.delta - s.floor);
            if !s.holds() {
                fails.push(format!("slab separation {:.3e} below floor {:.3e}", s.delta, s.floor));
            }
        }

        let t = &mut self.totals;
        t.failures += fails.len() as u64;
        t.hypotheses_met &= hyp;
        t.rossby_max = t.rossby_max.max(rho);
        t.g_max = t.g_max.max(g_sup);
        t.dz_ell_sup = t.dz_ell_sup.max(dz.vector);
        if let Some(p) = &probe {
            t.dz_lambda_sup = t.dz_lambda_sup.max(p.dz_lambda_max);
            t.a3_variation_sup = t.a3_variation_sup.max(p.a3_variation);
        }
        t.weber_max = t.weber_max.max(residuals.weber_rel);
        t.cauchy_max = t.cauchy_max.max(residuals.cauchy_rel);
        t.factorization_max = t.factorization_max.max(residuals.factorization_abs);
        t.d2_max = t.d2_max.max(residuals.d2_rel);
        t.d2_polynomial_max = t.d2_polynomial_max.max(d2_poly);
        for f in fails {
            self.messages.push(format!("t = {:.6}: {f}", self.flow.t));
        }

        let rec = DiagnosticsRecord {
            t: self.flow.t,
            rossby: rho,
            g,
            grad_u_int: self.window.grad_u_int,
            dz_ell_max: dz.vector,
            bound_14rho: bound_14,
            dz_lambda_max: dz_lambda,
            bound_9rho: bound_9,
            c_g,
            residuals,
            energy: self.flow.energy(),
            enstrophy: self.flow.enstrophy(sp)?,
            reset,
            under_resolved: self.under_resolved_now,
        };
        if let Some(f) = self.sink.as_mut() {
            writeln!(f, "{}", csv::row(&rec))?;
        }
        self.records.push(rec);
        self.last_sample_step = Some(self.step);
        Ok(rec)
    }

    /// Step to `t_end`, then sample and close the last window.
    pub fn run_to_end(&mut self) -> Result<()> {
        if self.step == 0 && self.last_sample_step.is_none() {
            self.sample(false)?;
        }
        while !self.finished() {
            self.step_once()?;
        }
        self.finish()
    }

    pub fn finish(&mut self) -> Result<()> {
        if self.last_sample_step != Some(self.step) {
            self.sample(false)?;
        }
        self.close_window();
        Ok(())
    }

    /// Sup over `X_3` pairs of `|gap change|` and `max |d_a3 lambda_3|` for
    /// the persistent set.
    pub fn persistent_report(&self) -> Option<PersistentReport> {
        let p = self.persistent.as_ref()?;
        let x = p.positions();
        let gap_change = p
            .pairs()
            .iter()
            .map(|q| (x[q.q][2] - x[q.p][2] - q.gap).abs())
            .fold(0.0, f64::max);
        let grads = lagrangian::lattice_grad_x(p)?;
        let dz_lambda3 = grads.iter().map(|m| (m.0[2][2] - 1.0).abs()).fold(0.0, f64::max);
        Some(PersistentReport {
            dz_lambda3,
            gap_change,
        })
    }

    pub fn summary(&self) -> RunSummary {
        RunSummary {
            t: self.flow.t,
            steps: self.step,
            windows: self.windows.clone(),
            totals: self.totals,
            messages: self.messages.clone(),
            persistent: self.persistent_report(),
        }
    }
}

/// Pair and slab checks for the current window.
#[derive(Debug, Clone, PartialEq)]
pub struct TracerReport {
    pub rossby: f64,
    pub grad_u_int: f64,
    pub pairs: diagnostics::PairReport,
    pub separation: Option<diagnostics::SetSeparation>,
}

impl std::fmt::Display for TracerReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "rho {:.4}  int|grad u| {:.4}", self.rossby, self.grad_u_int)?;
        let p = &self.pairs;
        writeln!(
            f,
            "{} pairs: max deviation {:.3e}  margin {:.3e}  gap-scaled margin {:.3e}  {}",
            p.pairs.len(),
            p.max_deviation,
            p.min_margin,
            p.min_scaled_margin,
            if p.all_within() { "PASS" } else { "FAIL" }
        )?;
        match &self.separation {
            Some(s) => write!(
                f,
                "slabs: delta {:.4}  d {:.4}  d(t0) {:.4}  floor {:.4}  {}",
                s.delta,
                s.distance,
                s.distance_t0,
                s.floor,
                if s.holds() { "PASS" } else { "FAIL" }
            ),
            None => write!(f, "slabs: fewer than two configured"),
        }
    }
}

impl Simulation {
    pub fn tracer_report(&self) -> Result<TracerReport> {
        let rho = self.rossby();
        let pairs = diagnostics::pair_separation_check(&self.tracers, rho, self.window.grad_u_int);
        let separation = if self.tracers.slabs().len() >= 2 {
            Some(diagnostics::set_separation_check(&self.sp, &self.tracers, &self.el, 0, 1, rho)?)
        } else {
            None
        };
        Ok(TracerReport {
            rossby: rho,
            grad_u_int: self.window.grad_u_int,
            pairs,
            separation,
        })
    }
}

/// Steady planar eigenflow with persistent tracers, one run per `Omega`.
pub fn taylor_proudman(cfg: &RunConfig, omegas: &[f64]) -> Result<Vec<(f64, PersistentReport)>> {
    omegas
        .iter()
        .map(|&om| {
            let mut c = cfg.clone();
            c.omega_rate = om;
            c.initial_condition = crate::initial::InitialCondition::Eigen2d;
            if c.persistent_lattice == 0 {
                c.persistent_lattice = 8;
            }
            let mut s = Simulation::new(c)?;
            s.run_to_end()?;
            Ok((om, s.persistent_report().expect("persistent set configured")))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PersistentReport {
    pub dz_lambda3: f64,
    pub gap_change: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub t: f64,
    pub steps: u64,
    pub windows: Vec<WindowSummary>,
    pub totals: Totals,
    pub messages: Vec<String>,
    pub persistent: Option<PersistentReport>,
}

impl RunSummary {
    pub fn any_failure(&self) -> bool {
        self.totals.failures > 0
    }
}

impl std::fmt::Display for RunSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "t = {:.6} after {} steps, {} resets", self.t, self.steps, self.totals.resets)?;
        for w in &self.windows {
            let x = &w.window;
            writeln!(
                f,
                "window {:>3} [{:.4}, {:.4}]  rho {:.4}  g {:.3e}  int|grad u| {:.4}  dz_l {:.3e}  dz_lambda {:.3e}  {}",
                x.index,
                x.t0,
                w.t1,
                w.rossby,
                x.g_sup,
                x.grad_u_int,
                x.dz_ell_sup,
                x.dz_lambda_sup,
                w.certified().label()
            )?;
        }
        let t = &self.totals;
        writeln!(
            f,
            "residuals: weber {:.3e}  cauchy {:.3e}  factorization {:.3e}  d2 {:.3e}  d2 polynomial {:.3e}",
            t.weber_max, t.cauchy_max, t.factorization_max, t.d2_max, t.d2_polynomial_max
        )?;
        if t.under_resolved {
            writeln!(f, "warning: spectral tail above {:.0e}; grid under-resolved", flow::UNDER_RESOLVED_FRACTION)?;
        }
        if let Some(p) = &self.persistent {
            writeln!(f, "persistent tracers: |d_a3 lambda_3| {:.3e}  pair gap change {:.3e}", p.dz_lambda3, p.gap_change)?;
        }
        for m in &self.messages {
            writeln!(f, "FAIL {m}")?;
        }
        write!(f, "certification: {}", if self.any_failure() { "FAIL" } else { "PASS" })
    }
}

/// Outcome of a run driven from the command line.
#[derive(Debug)]
pub struct RunOutcome {
    pub summary: Option<RunSummary>,
    pub error: Option<Error>,
    pub csv_path: PathBuf,
    pub checkpoint_path: PathBuf,
}

impl RunOutcome {
    /// Nonzero iff a gated certification failed or the run aborted.
    pub fn exit_code(&self) -> i32 {
        match (&self.error, &self.summary) {
            (Some(_), _) => 2,
            (None, Some(s)) if s.any_failure() => 1,
            _ => 0,
        }
    }
}

/// Keep header and rows with `t <= t_max` of an existing CSV.
fn truncate_csv(path: &Path, t_max: f64) -> Result<String> {
    let mut kept = String::new();
    if let Ok(f) = File::open(path) {
        for (i, line) in BufReader::new(f).lines().enumerate() {
            let line = line?;
            let keep = i == 0
                || line
                    .split(',')
                    .next()
                    .and_then(|c| c.parse::<f64>().ok())
                    .is_some_and(|t| t <= t_max);
            if keep {
                kept.push_str(&line);
                kept.push('\n');
            }
        }
    }
    if kept.is_empty() {
        kept = csv::HEADER.join(",") + "\n";
    }
    Ok(kept)
}

/// Run a configuration with file output, optionally resuming.
pub fn run(cfg: RunConfig, resume: Option<&Path>) -> Result<RunOutcome> {
    std::fs::create_dir_all(&cfg.out_dir)?;
    let csv_path = cfg.out_dir.join(&cfg.diagnostics_file);
    let ck_path = cfg.out_dir.join(&cfg.checkpoint_file);
    let mut sim = match resume {
        Some(p) => Simulation::resume(cfg.clone(), &checkpoint::read_checkpoint(p)?)?,
        None => Simulation::new(cfg.clone())?,
    };
    let head = match resume {
        Some(_) => truncate_csv(&csv_path, sim.flow.t)?,
        None => csv::HEADER.join(",") + "\n",
    };
    let mut f = OpenOptions::new().write(true).create(true).truncate(true).open(&csv_path)?;
    f.write_all(head.as_bytes())?;
    sim.stream_to(f);

    let result = (|| -> Result<()> {
        if resume.is_none() {
            sim.sample(false)?;
        }
        while !sim.finished() {
            sim.step_once()?;
            if cfg.checkpoint_every > 0 && sim.step % cfg.checkpoint_every == 0 {
                checkpoint::write_checkpoint(&ck_path, &sim.checkpoint()?)?;
            }
        }
        sim.finish()?;
        checkpoint::write_checkpoint(&ck_path, &sim.checkpoint()?)
    })();
    let error = result.err().map(|e| match e {
        Error::Io(_) => e,
        other => Error::Aborted {
            t: sim.flow.t,
            reason: other.to_string(),
        },
    });
    Ok(RunOutcome {
        summary: Some(sim.summary()),
        error,
        csv_path,
        checkpoint_path: ck_path,
    })
}

/// Result of an `Omega` sweep.
#[derive(Debug, Clone)]
pub struct SweepReport {
    pub probe: diagnostics::ProbeReport,
}

impl std::fmt::Display for SweepReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "{:>10} {:>10} {:>10} {:>12} {:>12} {:>12}  note", "omega", "rho", "g", "dz_ell", "dz_lambda", "a3_var")?;
        for r in &self.probe.rows {
            writeln!(
                f,
                "{:>10.4} {:>10.4} {:>10.4} {:>12.4e} {:>12.4e} {:>12.4e}  {}",
                r.omega_rate, r.rossby, r.g_max, r.sup_dz_ell, r.sup_dz_lambda, r.a3_variation, r.note
            )?;
        }
        let s = |x: Option<f64>| x.map_or("N/A".to_string(), |v| format!("{v:.4}"));
        writeln!(f, "slope of sup|d_z l| vs 1/omega: {}", s(self.probe.slope_dz_ell))?;
        writeln!(f, "slope of sup|d_a3 lambda| vs 1/omega: {}", s(self.probe.slope_dz_lambda))?;
        write!(f, "a3-variation nonincreasing: {}", self.probe.variation_monotone)
    }
}

/// One run per rotation rate. Failed runs are recorded and skipped.
pub fn sweep(cfg: &RunConfig, omegas: &[f64]) -> SweepReport {
    let rows = omegas
        .iter()
        .map(|&om| {
            let mut c = cfg.clone();
            c.omega_rate = om;
            let res = Simulation::new(c).and_then(|mut s| s.run_to_end().map(|_| s));
            match res {
                Ok(s) => {
                    let t = s.totals;
                    let big_enough = om >= 4.0 * t.sup_vorticity;
                    let met = t.hypotheses_met && big_enough;
                    let mut note = String::new();
                    if !big_enough {
                        note.push_str("omega below 4 M; ");
                    }
                    if !met {
                        note.push_str("hypotheses not met");
                    }
                    if t.failures > 0 {
                        note.push_str(&format!("; {} certification failures", t.failures));
                    }
                    SweepRow {
                        omega_rate: om,
                        rossby: t.rossby_max,
                        g_max: t.g_max,
                        sup_dz_ell: t.dz_ell_sup,
                        sup_dz_lambda: t.dz_lambda_sup,
                        a3_variation: t.a3_variation_sup,
                        hypotheses_met: met,
                        note,
                    }
                }
                Err(e) => SweepRow {
                    omega_rate: om,
                    rossby: f64::NAN,
                    g_max: f64::NAN,
                    sup_dz_ell: f64::NAN,
                    sup_dz_lambda: f64::NAN,
                    a3_variation: f64::NAN,
                    hypotheses_met: false,
                    note: format!("run failed: {e}"),
                },
            }
        })
        .collect();
    SweepReport {
        probe: diagnostics::two_dim_limit_probe(rows),
    }
}

/// Rebuild the flow and Lagrangian state stored in a checkpoint.
pub fn state_from_checkpoint(ck: &Checkpoint) -> Result<(Spectral, FlowState, ELState)> {
    let grid = Grid::new(ck.n as usize, ck.box_length)?;
    let sp = Spectral::new(grid);
    let f = |a: &[Vec<f64>; 3]| VectorField3::from_physical(grid, a.clone());
    let flow = FlowState::new(f(&ck.u), ck.omega_rate, ck.nu)?.with_time(ck.t);
    let el = ELState {
        ell: f(&ck.ell),
        v: f(&ck.v),
        zeta0: f(&ck.zeta0),
        t0: ck.t0,
    };
    Ok((sp, flow, el))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn small(ic: &str) -> RunConfig {
        parse_config(&format!(
            "n=8\nomega=20\nnu=0\nt_end=0.01\nic={ic}\ndt=0.002\nlattice=4\npairs=4\ncadence=2"
        ))
        .unwrap()
    }

    #[test]
    fn zero_flow_rows_vanish() {
        let mut s = Simulation::new(small("zero")).unwrap();
        s.run_to_end().unwrap();
        assert!(s.records.len() >= 3);
        for r in &s.records {
            let text = csv::row(r);
            for (i, c) in text.split(',').enumerate().skip(1) {
                assert_eq!(c.parse::<f64>().unwrap(), 0.0, "column {} in {text}", csv::HEADER[i]);
            }
        }
    }

    #[test]
    fn window_state_round_trips() {
        let mut s = Simulation::new(small("taylor_green")).unwrap();
        s.run_to_end().unwrap();
        let v = s.window.to_vec();
        assert_eq!(Window::from_slice(&v), s.window);
        let t = s.totals.to_vec();
        assert_eq!(Totals::from_slice(&t), s.totals);
    }
}
