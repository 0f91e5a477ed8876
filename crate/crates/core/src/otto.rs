//! Four-stroke squeezing Otto cycles: single cycles, limit cycles, parameter
//! sweeps and the search for the bath occupation that maximizes work.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{EngineConfig, InitialState, Simulation, TimeSeries, WorkLedger};
use crate::error::{Error, Result};
use crate::moments::MomentState;
use crate::protocol::{otto_strokes, validate_cycle, BathSpec, CavityGeometry, OttoCycle};

/// Which cycle's work is reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CycleMode {
    /// The first cycle from the prepared state.
    First,
    /// The periodic steady state.
    #[default]
    Limit,
}

pub const DEFAULT_MAX_CYCLES: usize = 50;
pub const DEFAULT_LIMIT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct CycleResult {
    /// Work done during each stroke of the last cycle run.
    pub stroke_ledgers: [WorkLedger; 4],
    pub net_w_expansion: f64,
    pub net_w_alicki: f64,
    pub net_w_alicki_zp: f64,
    pub net_delta_w: f64,
    /// Net expansion work of every cycle run, in order.
    pub history: Vec<f64>,
    /// Samples of the last cycle (empty unless `sample_every > 0`).
    pub trace: TimeSeries,
    /// Lab-frame moments after the last stroke and its measurement.
    pub end_moments: MomentState,
    pub cycles_run: usize,
    pub limit_cycle_reached: bool,
}

impl CycleResult {
    /// `∮ p dV` of the sampled trace by the trapezoid rule.
    pub fn loop_area(&self, section: f64) -> f64 {
        self.trace
            .windows(2)
            .map(|w| 0.5 * (w[0].pressure + w[1].pressure) * section * (w[1].length - w[0].length))
            .sum()
    }
}

/// Runs one cycle from the simulation's current state.
fn one_cycle(sim: &mut Simulation, trace: &mut TimeSeries) -> Result<[WorkLedger; 4]> {
    sim.reset_work();
    trace.clear();
    let mut ledgers = [WorkLedger::default(); 4];
    let mut before = sim.ledger()?;
    for ledger in ledgers.iter_mut() {
        sim.run_stroke(Some(trace))?;
        let after = sim.ledger()?;
        *ledger = after.since(&before);
        before = after;
    }
    Ok(ledgers)
}

fn close_enough(a: &MomentState, b: &MomentState, tol: f64) -> bool {
    let scale = 1f64.max(a.n.abs()).max(b.n.abs());
    let d = (a.n - b.n).abs().max((a.s - b.s).norm()).max((a.m1 - b.m1).norm());
    d <= tol * scale
}

/// Repeats the cycle until the end-of-cycle moments move by less than
/// `tol · max(1, n)` from one cycle to the next, or `max_cycles` is hit.
///
/// The first comparison is against the prepared state, so `tol = ∞`
/// returns after a single cycle.
pub fn run_to_limit_cycle(
    cycle: &OttoCycle,
    initial: &InitialState,
    config: &EngineConfig,
    max_cycles: usize,
    tol: f64,
) -> Result<CycleResult> {
    if max_cycles == 0 {
        return Err(Error::InvalidArgument("max_cycles must be at least 1".into()));
    }
    let sampled = config.sample_every > 0;
    let mut sim = Simulation::new(cycle.schedule().clone(), initial, *config)?;
    let mut trace = TimeSeries::new();
    let mut history = Vec::new();
    let mut previous = sim.lab_moments()?;
    let mut reached = false;
    let mut ledgers = [WorkLedger::default(); 4];
    while history.len() < max_cycles {
        ledgers = one_cycle(&mut sim, &mut trace)?;
        history.push(ledgers.iter().map(|l| l.w_expansion).sum());
        let now = sim.lab_moments()?;
        if close_enough(&previous, &now, tol) {
            reached = true;
            break;
        }
        previous = now;
    }
    let sum = |f: fn(&WorkLedger) -> f64| ledgers.iter().map(f).sum::<f64>();
    Ok(CycleResult {
        cycles_run: history.len(),
        stroke_ledgers: ledgers,
        net_w_expansion: sum(|l| l.w_expansion),
        net_w_alicki: sum(|l| l.w_alicki),
        net_w_alicki_zp: sum(|l| l.w_alicki_zp),
        net_delta_w: sum(|l| l.delta_w),
        history,
        trace: if sampled { trace } else { TimeSeries::new() },
        end_moments: sim.lab_moments()?,
        limit_cycle_reached: reached,
    })
}

/// A single cycle from the prepared state.
pub fn run_cycle(
    cycle: &OttoCycle,
    initial: &InitialState,
    config: &EngineConfig,
) -> Result<CycleResult> {
    let mut r = run_to_limit_cycle(cycle, initial, config, 1, f64::INFINITY)?;
    r.limit_cycle_reached = false;
    Ok(r)
}

/// Cycle parameters shared by every cell of a sweep; `r2` and `nbar` vary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OttoTemplate {
    pub l0: f64,
    pub omega0: f64,
    #[serde(default = "unit")]
    pub section: f64,
    pub tau: f64,
    pub speed: f64,
    pub gamma: f64,
    pub r1: f64,
    #[serde(default)]
    pub phi: f64,
    #[serde(default)]
    pub mode: CycleMode,
    #[serde(default = "default_max_cycles")]
    pub max_cycles: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn unit() -> f64 {
    1.0
}
fn default_max_cycles() -> usize {
    DEFAULT_MAX_CYCLES
}
fn default_tol() -> f64 {
    DEFAULT_LIMIT_TOL
}

impl OttoTemplate {
    /// ω₀ = 2π, τ = 1000, γ = 0.01, L₀ = 10, |v| = 0.005, r₁ = 0.1.
    pub fn reference() -> Self {
        Self {
            l0: 10.0,
            omega0: 2.0 * std::f64::consts::PI,
            section: 1.0,
            tau: 1000.0,
            speed: 0.005,
            gamma: 0.01,
            r1: 0.1,
            phi: 0.0,
            mode: CycleMode::Limit,
            max_cycles: DEFAULT_MAX_CYCLES,
            tol: DEFAULT_LIMIT_TOL,
        }
    }

    pub fn cycle(&self, r2: f64, nbar: f64) -> Result<OttoCycle> {
        let geom = CavityGeometry::new(self.l0, self.omega0, self.section)?;
        let b1 = BathSpec::new(nbar, self.gamma, self.r1, self.phi)?;
        let b2 = BathSpec::new(nbar, self.gamma, r2, self.phi)?;
        validate_cycle(&geom, &otto_strokes(self.tau, self.speed, b1, b2))
    }

    /// The squeezed thermal state of the first bath.
    pub fn initial(&self, nbar: f64) -> InitialState {
        InitialState::SqueezedThermal { nbar, r: self.r1, phi: self.phi }
    }

    pub fn run(&self, r2: f64, nbar: f64, config: &EngineConfig) -> Result<CycleResult> {
        let cycle = self.cycle(r2, nbar)?;
        let init = self.initial(nbar);
        match self.mode {
            CycleMode::First => run_cycle(&cycle, &init, config),
            CycleMode::Limit => run_to_limit_cycle(&cycle, &init, config, self.max_cycles, self.tol),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub r2: f64,
    pub nbar: f64,
    pub w_expansion_net: f64,
    pub cycles_run: usize,
    pub limit_cycle_reached: bool,
    /// Set when the cell failed; the work fields are then NaN/0.
    pub error: Option<String>,
}

/// Net expansion work on the `r2 × nbar` grid, `r2`-major. Cells run in
/// parallel; a failing cell is recorded and the sweep continues.
pub fn sweep(
    template: &OttoTemplate,
    r2_values: &[f64],
    nbar_values: &[f64],
    config: &EngineConfig,
) -> Vec<SweepCell> {
    let cells: Vec<(f64, f64)> = r2_values
        .iter()
        .flat_map(|&r2| nbar_values.iter().map(move |&nbar| (r2, nbar)))
        .collect();
    let run_cell = |&(r2, nbar): &(f64, f64)| match template.run(r2, nbar, config) {
        Ok(r) => SweepCell {
            r2,
            nbar,
            w_expansion_net: r.net_w_expansion,
            cycles_run: r.cycles_run,
            limit_cycle_reached: r.limit_cycle_reached,
            error: None,
        },
        Err(e) => SweepCell {
            r2,
            nbar,
            w_expansion_net: f64::NAN,
            cycles_run: 0,
            limit_cycle_reached: false,
            error: Some(e.to_string()),
        },
    };
    // collect() on an indexed parallel iterator keeps grid order
    cells.par_iter().map(run_cell).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NbarStar {
    pub r2: f64,
    pub nbar_star: f64,
    pub w_expansion: f64,
    /// True when the maximum sits on a bracket edge.
    pub at_edge: bool,
    /// Coarse grid `(n̄, W)` used to validate the bracket.
    pub grid: Vec<(f64, f64)>,
    pub evaluations: usize,
}

pub const NBAR_GRID_POINTS: usize = 9;
pub const NBAR_TOL: f64 = 1e-3;

/// Maximizes the net expansion work over `n̄ ∈ bracket`.
///
/// A 9-point grid first checks that `W(n̄)` rises then falls (plateaus
/// allowed to relative 1e-12); otherwise the grid is returned inside
/// [`Error::AmbiguousBracket`]. A maximum at a grid end is returned with
/// `at_edge`; an interior one is refined by golden section to `|Δn̄| ≤ 1e-3`.
pub fn find_nbar_star(
    template: &OttoTemplate,
    r2: f64,
    bracket: (f64, f64),
    config: &EngineConfig,
) -> Result<NbarStar> {
    let (lo, hi) = bracket;
    if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::InvalidArgument(format!("bad n̄ bracket ({lo}, {hi})")));
    }
    let eval = |nbar: f64| template.run(r2, nbar, config).map(|r| r.net_w_expansion);
    let xs: Vec<f64> = (0..NBAR_GRID_POINTS)
        .map(|i| lo + (hi - lo) * i as f64 / (NBAR_GRID_POINTS - 1) as f64)
        .collect();
    let ws = xs.par_iter().map(|&x| eval(x)).collect::<Result<Vec<f64>>>()?;
    let grid: Vec<(f64, f64)> = xs.iter().copied().zip(ws.iter().copied()).collect();
    let mut evaluations = grid.len();

    let best = (0..ws.len()).fold(0, |b, i| if ws[i] > ws[b] { i } else { b });
    let slack = |a: f64, b: f64| 1e-12 * a.abs().max(b.abs()).max(1e-300);
    let rising = (0..best).all(|i| ws[i + 1] >= ws[i] - slack(ws[i], ws[i + 1]));
    let falling = (best..ws.len() - 1).all(|i| ws[i + 1] <= ws[i] + slack(ws[i], ws[i + 1]));
    if !(rising && falling) {
        return Err(Error::AmbiguousBracket { grid });
    }
    if best == 0 || best == ws.len() - 1 {
        return Ok(NbarStar {
            r2,
            nbar_star: xs[best],
            w_expansion: ws[best],
            at_edge: true,
            grid,
            evaluations,
        });
    }

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (xs[best - 1], xs[best + 1]);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (eval(c)?, eval(d)?);
    evaluations += 2;
    while b - a > NBAR_TOL {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = eval(d)?;
        }
        evaluations += 1;
    }
    let (nbar_star, w) = if fc >= fd { (c, fc) } else { (d, fd) };
    let (nbar_star, w) = if ws[best] > w { (xs[best], ws[best]) } else { (nbar_star, w) };
    Ok(NbarStar { r2, nbar_star, w_expansion: w, at_edge: false, grid, evaluations })
}
