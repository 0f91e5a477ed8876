//! Experiment drivers. Each returns the files it wants written plus an
//! optional failure to report after writing them.

use serde::Serialize;
use serde_json::{json, Value};
use sqzengine_core::engine::{EngineConfig, EngineKind, Sample, Simulation, TimeSeries};
use sqzengine_core::moments::MomentState;
use sqzengine_core::otto::{find_nbar_star, sweep, CycleResult};

use crate::config::{Experiment, ExpandConfig, RunConfig};
use crate::error::CliError;
use crate::output::{nstar_csv, sweep_csv, timeseries_csv, Artifact};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Tolerance of the per-sample physicality check `|s|² ≤ n(n+1) + tol`.
pub const PHYSICALITY_TOL: f64 = 1e-8;

#[derive(Debug)]
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    /// Reported after the artifacts are written.
    pub failure: Option<CliError>,
}

pub fn execute(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let experiment = cfg.validate()?;
    let stem = cfg.stem();
    let (mut artifacts, summary, failure) = match experiment {
        Experiment::Expand => expand(cfg, &stem)?,
        Experiment::Cycle => cycle(cfg, &stem)?,
        Experiment::Sweep => run_sweep(cfg, &stem)?,
        Experiment::Nstar => nstar(cfg, &stem)?,
        Experiment::Validate => validate(cfg, &stem)?,
    };
    artifacts.push(Artifact { name: format!("{stem}.json"), contents: sidecar(cfg, experiment, summary) });
    Ok(Outcome { artifacts, failure })
}

type Produced = (Vec<Artifact>, Value, Option<CliError>);

fn sidecar(cfg: &RunConfig, experiment: Experiment, summary: Value) -> String {
    let doc = json!({
        "version": VERSION,
        "experiment": experiment.name(),
        "resolved_config": cfg,
        "summary": summary,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("serializable sidecar");
    s.push('\n');
    s
}

/// Whether a sample satisfies `|⟨a²⟩|² ≤ n(n+1)` up to `tol` plus rounding.
/// Samples carry no `⟨a⟩`, which vanishes for the squeezed thermal family.
pub fn sample_is_physical(s: &Sample, tol: f64) -> bool {
    let m = MomentState::new(sqzengine_core::C64::new(0.0, 0.0), s.n_mean, s.a2);
    m.is_finite() && m.is_physical(tol)
}

fn unphysical(series: &[Sample]) -> usize {
    series.iter().filter(|s| !sample_is_physical(s, PHYSICALITY_TOL)).count()
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable summary")
}

fn expand(cfg: &RunConfig, stem: &str) -> Result<Produced, CliError> {
    let e = cfg.expand.as_ref().expect("validated");
    let mut sim = Simulation::new(e.schedule()?, &e.initial.state(), cfg.engine)?;
    let series = sim.run()?;
    let summary = json!({
        "final_ledger": to_value(&sim.ledger()?),
        "stats": to_value(sim.stats()),
        "samples": series.len(),
        "unphysical_samples": unphysical(&series),
    });
    let csv = timeseries_csv(&series, false);
    Ok((vec![Artifact { name: format!("{stem}.csv"), contents: csv }], summary, None))
}

fn cycle_summary(r: &CycleResult, section: f64) -> Value {
    json!({
        "net_w_expansion": r.net_w_expansion,
        "net_w_alicki": r.net_w_alicki,
        "net_w_alicki_zp": r.net_w_alicki_zp,
        "net_delta_w": r.net_delta_w,
        "stroke_ledgers": to_value(&r.stroke_ledgers),
        "history": r.history,
        "cycles_run": r.cycles_run,
        "limit_cycle_reached": r.limit_cycle_reached,
        "end_n": r.end_moments.n,
        "loop_area": if r.trace.is_empty() { Value::Null } else { json!(r.loop_area(section)) },
        "unphysical_samples": unphysical(&r.trace),
    })
}

fn cycle(cfg: &RunConfig, stem: &str) -> Result<Produced, CliError> {
    let c = cfg.cycle.as_ref().expect("validated");
    let res = c.template.run(c.r2, c.nbar, &cfg.engine)?;
    let csv = timeseries_csv(&res.trace, true);
    let summary = cycle_summary(&res, c.template.section);
    Ok((vec![Artifact { name: format!("{stem}.csv"), contents: csv }], summary, None))
}

fn run_sweep(cfg: &RunConfig, stem: &str) -> Result<Produced, CliError> {
    let s = cfg.sweep.as_ref().expect("validated");
    let cells = sweep(&s.template, &s.r2_values, &s.nbar_values, &cfg.engine);
    let errors: Vec<Value> = cells
        .iter()
        .filter_map(|c| c.error.as_ref().map(|e| json!({"r2": c.r2, "nbar": c.nbar, "error": e})))
        .collect();
    let failure = (!errors.is_empty())
        .then(|| CliError::Infeasible(format!("{} sweep cell(s) failed; see the sidecar", errors.len())));
    let summary = json!({ "cells": cells.len(), "errors": errors });
    let csv = sweep_csv(&cells);
    Ok((vec![Artifact { name: format!("{stem}.csv"), contents: csv }], summary, failure))
}

fn nstar(cfg: &RunConfig, stem: &str) -> Result<Produced, CliError> {
    let n = cfg.nstar.as_ref().expect("validated");
    let bracket = (n.bracket[0], n.bracket[1]);
    let mut rows = Vec::new();
    let mut failure = None;
    let mut errors = Vec::new();
    for &r2 in &n.r2_values {
        match find_nbar_star(&n.template, r2, bracket, &cfg.engine) {
            Ok(star) => rows.push((r2, Ok(star))),
            Err(e) => {
                errors.push(json!({"r2": r2, "error": e.to_string()}));
                rows.push((r2, Err(e.to_string())));
                failure.get_or_insert(CliError::from(e));
            }
        }
    }
    let (main, grid) = nstar_csv(&rows);
    let summary = json!({ "errors": errors });
    let artifacts = vec![
        Artifact { name: format!("{stem}.csv"), contents: main },
        Artifact { name: format!("{stem}_grid.csv"), contents: grid },
    ];
    Ok((artifacts, summary, failure))
}

/// Trajectory-relative error of one quantity between two engines.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Discrepancy {
    pub quantity: &'static str,
    pub max_abs_err: f64,
    pub scale: f64,
    pub rel_err: f64,
}

/// Absolute floor on the scale of a quantity that is identically zero.
pub const SCALE_FLOOR: f64 = 1e-12;

/// Compares two sampled runs of the same schedule. The error of each
/// quantity is its largest pointwise difference divided by the largest
/// magnitude it reaches along the reference trajectory.
pub fn compare_series(test: &TimeSeries, reference: &TimeSeries) -> Result<Vec<Discrepancy>, CliError> {
    if test.len() != reference.len() || test.iter().zip(reference).any(|(a, b)| a.t != b.t) {
        return Err(CliError::ValidationFailed("engines produced different sample grids".into()));
    }
    let fields: [(&'static str, fn(&Sample, &Sample) -> (f64, f64)); 6] = [
        ("n_mean", |a, b| ((a.n_mean - b.n_mean).abs(), b.n_mean.abs())),
        ("a2", |a, b| ((a.a2 - b.a2).norm(), b.a2.norm())),
        ("w_alicki", |a, b| ((a.w_alicki - b.w_alicki).abs(), b.w_alicki.abs())),
        ("w_alicki_zp", |a, b| ((a.w_alicki_zp - b.w_alicki_zp).abs(), b.w_alicki_zp.abs())),
        ("delta_w", |a, b| ((a.delta_w - b.delta_w).abs(), b.delta_w.abs())),
        ("w_expansion", |a, b| ((a.w_expansion - b.w_expansion).abs(), b.w_expansion.abs())),
    ];
    Ok(fields
        .iter()
        .map(|(quantity, f)| {
            let (err, scale) = test
                .iter()
                .zip(reference)
                .map(|(a, b)| f(a, b))
                .fold((0.0f64, 0.0f64), |(e, s), (de, ds)| (e.max(de), s.max(ds)));
            let scale = scale.max(SCALE_FLOOR);
            Discrepancy { quantity, max_abs_err: err, scale, rel_err: err / scale }
        })
        .collect())
}

/// Runs a scenario on both engines and compares them sample by sample.
pub fn cross_check(
    scenario: &ExpandConfig,
    engine: &EngineConfig,
) -> Result<(Vec<Discrepancy>, TimeSeries, TimeSeries, Option<usize>), CliError> {
    let run = |kind| -> Result<(TimeSeries, Option<usize>), CliError> {
        let cfg = EngineConfig { engine: kind, ..*engine };
        let mut sim = Simulation::new(scenario.schedule()?, &scenario.initial.state(), cfg)?;
        let series = sim.run()?;
        Ok((series, sim.stats().fock_dim))
    };
    let (fock, dim) = run(EngineKind::Fock)?;
    let (moments, _) = run(EngineKind::Moments)?;
    Ok((compare_series(&fock, &moments)?, fock, moments, dim))
}

fn validate(cfg: &RunConfig, stem: &str) -> Result<Produced, CliError> {
    let v = cfg.validate.as_ref().expect("validated");
    let mut csv = String::from("scenario,fock_dim,quantity,max_abs_err,scale,rel_err,pass\n");
    let mut failed = Vec::new();
    let mut reports = Vec::new();
    for (k, scenario) in v.scenarios.iter().enumerate() {
        let (diffs, fock, moments, dim) = cross_check(scenario, &cfg.engine)?;
        let dim_str = dim.map_or(String::new(), |d| d.to_string());
        for d in &diffs {
            let pass = d.rel_err <= v.rel_tol;
            if !pass {
                failed.push(format!("scenario {k} {}", d.quantity));
            }
            csv.push_str(&format!(
                "{k},{dim_str},{},{},{},{},{pass}\n",
                d.quantity,
                crate::output::num(d.max_abs_err),
                crate::output::num(d.scale),
                crate::output::num(d.rel_err)
            ));
        }
        let bad = unphysical(&fock) + unphysical(&moments);
        let pass = bad == 0;
        if !pass {
            failed.push(format!("scenario {k} physicality"));
        }
        csv.push_str(&format!("{k},{dim_str},unphysical_samples,{bad},0,0,{pass}\n"));
        reports.push(json!({ "scenario": k, "fock_dim": dim, "discrepancies": to_value(&diffs) }));
    }
    let failure = (!failed.is_empty()).then(|| CliError::ValidationFailed(failed.join(", ")));
    let summary = json!({ "rel_tol": v.rel_tol, "scenarios": reports, "failed": failed });
    Ok((vec![Artifact { name: format!("{stem}.csv"), contents: csv }], summary, failure))
}
