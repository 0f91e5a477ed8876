//! Stroke-by-stroke driver shared by both state representations.

use num_complex::Complex64 as C64;
use serde::Serialize;

use super::ledger::{pressure, work_integrands, Kinematics, WorkLedger};
use super::lindblad::{check_bath_fits, rhs_flat, BathConstants};
use super::rk4::Rk4;
use super::{BathFrame, EngineConfig, EngineKind, PhaseConvention};
use crate::error::{Error, Result};
use crate::hilbert::{
    dephase_energy_basis, hermitize, recommended_dim, squeezed_thermal_state, DensityState,
    TAIL_MASS_LIMIT,
};
use crate::linalg::is_positive_shifted;
use crate::moments::{self, from_density, measure_project, rhs_with, MomentState};
use crate::protocol::{stroke_phase, BathSpec, Schedule, StrokeKind};

/// Shift used by the Cholesky positivity probe.
const POSITIVITY_SHIFT: f64 = 1e-8;
/// Trace drift tolerated before renormalizing.
const TRACE_DRIFT: f64 = 1e-10;

/// Starting point of a simulation.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    /// `S(ξ) ρ_th(n̄) S(ξ)†`; vacuum and thermal states are special cases.
    SqueezedThermal { nbar: f64, r: f64, phi: f64 },
    /// Explicit moments; moments engine only.
    Moments(MomentState),
    /// Explicit density matrix; the moments engine uses its moments.
    Density(DensityState),
}

impl InitialState {
    fn occupation(&self) -> (f64, f64) {
        match self {
            InitialState::SqueezedThermal { nbar, r, phi } => {
                let (n, m) = crate::analytics::nm_constants(*nbar, *r, *phi);
                (n, m.norm())
            }
            InitialState::Moments(m) => (m.n, m.s.norm()),
            InitialState::Density(d) => {
                let m = from_density(d);
                (m.n, m.s.norm())
            }
        }
    }
}

/// Engine state in the interaction picture with respect to `ω(t) a†a`:
/// lab-frame coherences carry an extra `e^{-i(m-k)∫ω dt}`.
#[derive(Debug, Clone, PartialEq)]
pub enum EngineState {
    Fock(DensityState),
    Moments(MomentState),
}

impl EngineState {
    fn moments(&self) -> MomentState {
        match self {
            EngineState::Fock(rho) => from_density(rho),
            EngineState::Moments(m) => *m,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct RunStats {
    pub steps: u64,
    pub renormalizations: u64,
    /// Largest per-step trace drift seen before renormalization.
    pub max_trace_drift: f64,
    pub max_tail_mass: f64,
    pub positivity_checks: u64,
    pub fock_dim: Option<usize>,
}

/// One row of a time series, with lab-frame moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub omega: f64,
    pub length: f64,
    pub n_mean: f64,
    pub a2: C64,
    pub energy: f64,
    pub pressure: f64,
    pub w_alicki: f64,
    pub w_alicki_zp: f64,
    pub delta_w: f64,
    pub w_expansion: f64,
    /// Index of the stroke within the schedule.
    pub stroke: usize,
}

pub type TimeSeries = Vec<Sample>;

/// Geometry and bath of the stroke being integrated.
struct StrokeCtx {
    c: f64,
    l0: f64,
    v: f64,
    t0: f64,
    theta0: f64,
    section: f64,
    convention: PhaseConvention,
    frame: BathFrame,
    bath: Option<BathSpec>,
}

impl StrokeCtx {
    /// Kinematics at global time `t` and the phase `∫ω` accumulated since the
    /// stroke began.
    fn kin(&self, t: f64) -> (Kinematics, f64) {
        let tau = t - self.t0;
        let length = self.l0 + self.v * tau;
        let omega = self.c / length;
        let local = stroke_phase(self.c, self.l0, self.v, tau);
        let phase = match self.convention {
            PhaseConvention::OmegaT => 2.0 * omega * t,
            PhaseConvention::IntegralOmega => 2.0 * (self.theta0 + local),
        };
        let kin = Kinematics {
            omega,
            omega_dot: -self.c * self.v / (length * length),
            length,
            length_dot: self.v,
            section: self.section,
            phase,
        };
        (kin, local)
    }

    /// Bath constants in the interaction picture. The literal bath keeps `M`
    /// fixed in the lab, so it appears as `M e^{2i∫ω}` here; the co-rotating
    /// bath keeps `M` fixed in this frame.
    fn bath_constants(&self, omega: f64, local: f64) -> Option<BathConstants> {
        self.bath.map(|b| {
            let (n, m) = b.constants(omega);
            let m = match self.frame {
                BathFrame::Literal => m * C64::from_polar(1.0, 2.0 * (self.theta0 + local)),
                BathFrame::Corotating => m,
            };
            (b.gamma, n, m)
        })
    }

    /// Global `∫₀ᵗ ω` from the phase accumulated within the stroke.
    fn theta(&self, local: f64) -> f64 {
        self.theta0 + local
    }
}

/// A schedule being integrated from a prepared state.
#[derive(Debug, Clone)]
pub struct Simulation {
    schedule: Schedule,
    config: EngineConfig,
    state: EngineState,
    work: [f64; 4],
    t: f64,
    strokes_done: u64,
    stats: RunStats,
}

impl Simulation {
    pub fn new(schedule: Schedule, initial: &InitialState, config: EngineConfig) -> Result<Self> {
        config.validate()?;
        let state = match config.engine {
            EngineKind::Moments => EngineState::Moments(match initial {
                InitialState::SqueezedThermal { nbar, r, phi } => {
                    MomentState::squeezed_thermal(*nbar, *r, *phi)
                }
                InitialState::Moments(m) => *m,
                InitialState::Density(rho) => from_density(rho),
            }),
            EngineKind::Fock => {
                let dim = fock_dimension(&schedule, initial, &config)?;
                let rho = match initial {
                    InitialState::SqueezedThermal { nbar, r, phi } => {
                        squeezed_thermal_state(dim, *nbar, *r, *phi)?
                    }
                    InitialState::Density(rho) => rho.clone(),
                    InitialState::Moments(_) => {
                        return Err(Error::InvalidConfig(
                            "the fock engine needs a density-matrix initial state".into(),
                        ))
                    }
                };
                let mass = rho.tail_mass();
                if mass > TAIL_MASS_LIMIT {
                    return Err(Error::TailMass { mass, window: (dim / 8).max(1), dim, t: 0.0 });
                }
                EngineState::Fock(rho)
            }
        };
        let fock_dim = match &state {
            EngineState::Fock(rho) => Some(rho.dim()),
            EngineState::Moments(_) => None,
        };
        Ok(Self {
            schedule,
            config,
            state,
            work: [0.0; 4],
            t: 0.0,
            strokes_done: 0,
            stats: RunStats { fock_dim, ..Default::default() },
        })
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn stats(&self) -> &RunStats {
        &self.stats
    }

    /// State in the interaction picture; see [`Self::lab_moments`].
    pub fn state(&self) -> &EngineState {
        &self.state
    }

    pub fn strokes_done(&self) -> u64 {
        self.strokes_done
    }

    /// Index of the stroke that [`Self::run_stroke`] will execute next.
    pub fn next_stroke(&self) -> usize {
        (self.strokes_done % self.schedule.strokes().len() as u64) as usize
    }

    /// Lab-frame moments at the current time.
    pub fn lab_moments(&self) -> Result<MomentState> {
        let theta = self.schedule.omega_integral(self.t)?;
        Ok(moments::rotate(&self.state.moments(), theta))
    }

    /// Work integrals plus current energy and pressure.
    pub fn ledger(&self) -> Result<WorkLedger> {
        let sample = self.sample_now()?;
        Ok(WorkLedger {
            w_alicki: self.work[0],
            w_alicki_zp: self.work[1],
            delta_w: self.work[2],
            w_expansion: self.work[3],
            energy: sample.energy,
            pressure: sample.pressure,
        })
    }

    /// Zeroes the work integrals, e.g. at the start of a cycle.
    pub fn reset_work(&mut self) {
        self.work = [0.0; 4];
    }

    /// Applies the non-selective energy measurement to the current state.
    pub fn measure(&mut self) {
        self.state = match &self.state {
            EngineState::Fock(rho) => EngineState::Fock(dephase_energy_basis(rho)),
            EngineState::Moments(m) => EngineState::Moments(measure_project(m)),
        };
    }

    /// Sample at the current time, attributed to the next stroke.
    pub fn sample_now(&self) -> Result<Sample> {
        let stroke = self.next_stroke().min(self.schedule.strokes().len() - 1);
        let omega = self.schedule.omega_at(self.t)?;
        let length = self.schedule.length_at(self.t)?;
        let theta = self.schedule.omega_integral(self.t)?;
        let phase = match self.config.phase_convention {
            PhaseConvention::OmegaT => 2.0 * omega * self.t,
            PhaseConvention::IntegralOmega => 2.0 * theta,
        };
        let kin = Kinematics {
            omega,
            omega_dot: 0.0,
            length,
            length_dot: 0.0,
            section: self.schedule.geometry().section,
            phase,
        };
        let m = self.state.moments();
        Ok(self.make_sample(self.t, &kin, m.n, m.s, theta, stroke))
    }

    /// `s` is the interaction-picture `⟨a²⟩`, the one that pairs with the
    /// explicit `e^{-iΦ}` of the pressure; the sample reports the lab value.
    fn make_sample(
        &self,
        t: f64,
        kin: &Kinematics,
        n: f64,
        s: C64,
        theta: f64,
        stroke: usize,
    ) -> Sample {
        Sample {
            t,
            omega: kin.omega,
            length: kin.length,
            n_mean: n,
            a2: s * C64::from_polar(1.0, -2.0 * theta),
            energy: kin.omega * n,
            pressure: pressure(n, s, kin),
            w_alicki: self.work[0],
            w_alicki_zp: self.work[1],
            delta_w: self.work[2],
            w_expansion: self.work[3],
            stroke,
        }
    }

    /// Runs every stroke of a finite schedule once, sampling as configured.
    pub fn run(&mut self) -> Result<TimeSeries> {
        let mut series = TimeSeries::new();
        let count = self.schedule.strokes().len();
        for _ in 0..count {
            self.run_stroke(Some(&mut series))?;
        }
        Ok(series)
    }

    /// Integrates the next stroke, applying its measurement if requested.
    ///
    /// Samples are appended at the stroke start, every `sample_every` steps
    /// and at the stroke end (before any measurement).
    pub fn run_stroke(&mut self, mut series: Option<&mut TimeSeries>) -> Result<()> {
        let count = self.schedule.strokes().len();
        let k = self.next_stroke();
        let pass = self.strokes_done / count as u64;
        if !self.schedule.is_periodic() && pass >= 1 {
            return Err(Error::TimeOutOfRange { t: self.t, end: self.schedule.duration() });
        }
        let spec = self.schedule.strokes()[k];
        let t0 = pass as f64 * self.schedule.duration() + self.schedule.stroke_start(k);
        self.t = t0;
        let geom = *self.schedule.geometry();
        let ctx = StrokeCtx {
            c: geom.c(),
            l0: self.schedule.stroke_start_length(k),
            v: spec.speed,
            t0,
            theta0: self.schedule.omega_integral(t0)?,
            section: geom.section,
            convention: self.config.phase_convention,
            frame: self.config.bath_frame,
            bath: spec.bath,
        };
        let l_end = ctx.l0 + ctx.v * spec.duration;
        let dt = self.config.effective_dt(ctx.c / ctx.l0.min(l_end));
        let steps = ((spec.duration / dt) * (1.0 - 1e-12)).ceil().max(1.0) as u64;
        let h = spec.duration / steps as f64;

        if let Some(s) = series.as_deref_mut() {
            let (kin, local) = ctx.kin(t0);
            let m = self.state.moments();
            s.push(self.make_sample(t0, &kin, m.n, m.s, ctx.theta(local), k));
        }
        match spec.kind {
            StrokeKind::Unitary => self.unitary_stroke(&ctx, h, steps, k, series.as_deref_mut())?,
            StrokeKind::Dissipative => {
                self.dissipative_stroke(&ctx, h, steps, k, series.as_deref_mut())?
            }
        }
        self.t = t0 + spec.duration;
        if let Some(s) = series {
            let (kin, local) = ctx.kin(self.t);
            let m = self.state.moments();
            s.push(self.make_sample(self.t, &kin, m.n, m.s, ctx.theta(local), k));
        }
        if spec.measure_after {
            self.measure();
        }
        self.strokes_done += 1;
        Ok(())
    }

    fn sample_due(&self, step: u64, steps: u64) -> bool {
        let every = self.config.sample_every as u64;
        every > 0 && step < steps && step % every == 0
    }

    /// Closed system: the interaction-picture state is frozen, so only the
    /// work integrals are stepped.
    fn unitary_stroke(
        &mut self,
        ctx: &StrokeCtx,
        h: f64,
        steps: u64,
        k: usize,
        mut series: Option<&mut TimeSeries>,
    ) -> Result<()> {
        let m0 = self.state.moments();
        let (n0, s0) = (m0.n, m0.s);
        let mut y = self.work.map(|w| C64::new(w, 0.0));
        let mut rk = Rk4::new(4);
        let deriv = |t: f64, _y: &[C64], dy: &mut [C64]| {
            let (kin, _) = ctx.kin(t);
            let w = work_integrands(n0, s0, &kin);
            dy[0] = C64::new(w.w_alicki, 0.0);
            dy[1] = C64::new(w.w_alicki_zp, 0.0);
            dy[2] = C64::new(w.delta_w, 0.0);
            dy[3] = C64::new(w.w_expansion, 0.0);
        };
        for i in 0..steps {
            let t = ctx.t0 + i as f64 * h;
            rk.step(deriv, t, h, &mut y);
            self.stats.steps += 1;
            if y.iter().any(|z| !z.re.is_finite()) {
                return Err(Error::Divergence { t: t + h });
            }
            let done = i + 1;
            if self.sample_due(done, steps) {
                let t = ctx.t0 + done as f64 * h;
                self.work = y.map(|z| z.re);
                let (kin, local) = ctx.kin(t);
                let sample = self.make_sample(t, &kin, n0, s0, ctx.theta(local), k);
                if let Some(s) = series.as_deref_mut() {
                    s.push(sample);
                }
            }
        }
        self.work = y.map(|z| z.re);

        Ok(())
    }

    fn dissipative_stroke(
        &mut self,
        ctx: &StrokeCtx,
        h: f64,
        steps: u64,
        k: usize,
        mut series: Option<&mut TimeSeries>,
    ) -> Result<()> {
        let (mut y, dim) = match &self.state {
            EngineState::Fock(rho) => {
                let d = rho.dim();
                let mut y: Vec<C64> = rho.matrix().as_standard_layout().iter().copied().collect();
                y.extend(self.work.map(|w| C64::new(w, 0.0)));
                (y, Some(d))
            }
            EngineState::Moments(m) => {
                let mut y = vec![m.m1, C64::new(m.n, 0.0), m.s];
                y.extend(self.work.map(|w| C64::new(w, 0.0)));
                (y, None)
            }
        };
        let off = y.len() - 4;
        let mut rk = Rk4::new(y.len());

        let deriv = |t: f64, y: &[C64], dy: &mut [C64]| {
            let (kin, local) = ctx.kin(t);
            let consts = ctx.bath_constants(kin.omega, local);
            let (n, s) = match dim {
                Some(d) => {
                    rhs_flat(&y[..off], d, 0.0, consts, &mut dy[..off]);
                    flat_moments(&y[..off], d)
                }
                None => {
                    let m = MomentState::new(y[0], y[1].re, y[2]);
                    let dm = rhs_with(&m, 0.0, consts);
                    dy[0] = dm.m1;
                    dy[1] = C64::new(dm.n, 0.0);
                    dy[2] = dm.s;
                    (m.n, m.s)
                }
            };
            let w = work_integrands(n, s, &kin);
            dy[off] = C64::new(w.w_alicki, 0.0);
            dy[off + 1] = C64::new(w.w_alicki_zp, 0.0);
            dy[off + 2] = C64::new(w.delta_w, 0.0);
            dy[off + 3] = C64::new(w.w_expansion, 0.0);
        };

        for i in 0..steps {
            let t = ctx.t0 + i as f64 * h;
            rk.step(deriv, t, h, &mut y);
            self.stats.steps += 1;
            let t_next = t + h;
            if y.iter().any(|z| !z.is_finite()) {
                return Err(Error::Divergence { t: t_next });
            }
            if let Some(d) = dim {
                self.condition_density(&mut y[..off], d, t_next)?;
            }
            let done = i + 1;
            let due = self.sample_due(done, steps);
            if due || done == steps {
                self.store(&y, dim, off);
            }
            if due {
                let (kin, local) = ctx.kin(t_next);
                let (n, s) = match dim {
                    Some(d) => flat_moments(&y[..off], d),
                    None => (y[1].re, y[2]),
                };
                if self.config.positivity_checks {
                    self.check_positive(t_next)?;
                }
                let sample = self.make_sample(t_next, &kin, n, s, ctx.theta(local), k);
                if let Some(s) = series.as_deref_mut() {
                    s.push(sample);
                }
            }
        }
        if self.config.positivity_checks {
            self.check_positive(ctx.t0 + steps as f64 * h)?;
        }
        Ok(())
    }

    fn store(&mut self, y: &[C64], dim: Option<usize>, off: usize) {
        for j in 0..4 {
            self.work[j] = y[off + j].re;
        }
        self.state = match dim {
            Some(d) => EngineState::Fock(DensityState::from_raw(
                ndarray::Array2::from_shape_vec((d, d), y[..off].to_vec()).expect("dim² entries"),
            )),
            None => EngineState::Moments(MomentState::new(y[0], y[1].re, y[2])),
        };
    }

    /// Hermitizes, renormalizes drifting traces and enforces the tail guard.
    fn condition_density(&mut self, rho: &mut [C64], d: usize, t: f64) -> Result<()> {
        hermitize(ndarray::ArrayViewMut2::from_shape((d, d), &mut *rho).expect("dim² entries"));
        let trace: f64 = (0..d).map(|j| rho[j * d + j].re).sum();
        let drift = (trace - 1.0).abs();
        self.stats.max_trace_drift = self.stats.max_trace_drift.max(drift);
        if drift > TRACE_DRIFT {
            rho.iter_mut().for_each(|z| *z /= trace);
            self.stats.renormalizations += 1;
        }
        let window = (d / 8).max(1);
        let mass: f64 = (d - window..d).map(|j| rho[j * d + j].re).sum();
        self.stats.max_tail_mass = self.stats.max_tail_mass.max(mass);
        if mass > TAIL_MASS_LIMIT {
            return Err(Error::TailMass { mass, window, dim: d, t });
        }
        Ok(())
    }

    fn check_positive(&mut self, t: f64) -> Result<()> {
        if let EngineState::Fock(rho) = &self.state {
            self.stats.positivity_checks += 1;
            if !is_positive_shifted(rho.matrix(), POSITIVITY_SHIFT) {
                return Err(Error::Positivity { t });
            }
        }
        Ok(())
    }
}

/// `(⟨a†a⟩, ⟨a²⟩)` of a row-major density matrix.
fn flat_moments(rho: &[C64], d: usize) -> (f64, C64) {
    let mut n = 0.0;
    let mut s = C64::new(0.0, 0.0);
    for m in 0..d {
        n += m as f64 * rho[m * d + m].re;
        if m + 2 < d {
            s += ((m + 1) as f64 * (m + 2) as f64).sqrt() * rho[(m + 2) * d + m];
        }
    }
    (n, s)
}

/// Fock dimension for a run: the configured one after a feasibility check,
/// or the tail-mass recommendation covering the initial state and every bath.
fn fock_dimension(schedule: &Schedule, initial: &InitialState, config: &EngineConfig) -> Result<usize> {
    let c = schedule.geometry().c();
    // lowest frequency gives the largest thermal occupation
    let mut l_max = schedule.geometry().l0;
    for (k, s) in schedule.strokes().iter().enumerate() {
        let l = schedule.stroke_start_length(k);
        l_max = l_max.max(l).max(l + s.speed * s.duration);
    }
    let omega_min = c / l_max;
    let (mut n_max, mut m_max) = initial.occupation();
    for bath in schedule.strokes().iter().filter_map(|s| s.bath) {
        let (n, m) = bath.constants(omega_min);
        n_max = n_max.max(n);
        m_max = m_max.max(m.norm());
    }
    let dim = match (config.fock_dim, initial) {
        (Some(d), InitialState::Density(rho)) if d != rho.dim() => {
            return Err(Error::DimensionMismatch { expected: d, found: rho.dim() })
        }
        (_, InitialState::Density(rho)) => rho.dim(),
        (Some(d), _) => d,
        (None, _) => recommended_dim(n_max, m_max),
    };
    check_bath_fits(dim, n_max)?;
    Ok(dim)
}
