use std::f64::consts::PI;

use sqzengine_core::engine::{
    BathFrame, EngineConfig, EngineKind, EngineState, InitialState, PhaseConvention, Simulation,
};
use sqzengine_core::moments::steady_state;
use sqzengine_core::protocol::{BathSpec, CavityGeometry, Schedule, StrokeSpec};
use sqzengine_core::{Error, C64};

fn config(engine: EngineKind) -> EngineConfig {
    EngineConfig { engine, sample_every: 100, ..EngineConfig::default() }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-12)
}

fn open_expansion(duration: f64, v: f64, bath: BathSpec) -> Schedule {
    let geom = CavityGeometry::new(1.0, 2.0 * PI, 1.0).unwrap();
    Schedule::new(geom, vec![StrokeSpec::dissipative(duration, v, bath)]).unwrap()
}

#[test]
fn fock_and_moment_engines_agree_on_open_expansion() {
    let bath = BathSpec::new(0.3, 0.05, 0.3, 0.8).unwrap();
    let sched = open_expansion(60.0, 5e-3, bath);
    let init = InitialState::SqueezedThermal { nbar: 0.2, r: 0.2, phi: -0.4 };
    let fock = Simulation::new(sched.clone(), &init, config(EngineKind::Fock))
        .unwrap()
        .run()
        .unwrap();
    let mom = Simulation::new(sched, &init, config(EngineKind::Moments)).unwrap().run().unwrap();
    assert_eq!(fock.len(), mom.len());
    for (f, m) in fock.iter().zip(&mom) {
        assert_eq!(f.t, m.t);
        assert!(rel(f.n_mean, m.n_mean) < 1e-8, "n at t={}", f.t);
        assert!((f.a2 - m.a2).norm() < 1e-8 * (1.0 + m.a2.norm()));
        for (a, b) in [
            (f.w_alicki, m.w_alicki),
            (f.w_alicki_zp, m.w_alicki_zp),
            (f.delta_w, m.delta_w),
            (f.w_expansion, m.w_expansion),
        ] {
            assert!((a - b).abs() <= 1e-8 * b.abs().max(1e-6), "{a} vs {b} at t={}", f.t);
        }
    }
}

#[test]
fn dissipative_relaxation_reaches_steady_state() {
    let bath = BathSpec::new(0.0, 0.01, 1.0, 0.0).unwrap();
    let geom = CavityGeometry::new(1.0, 2.0 * PI, 1.0).unwrap();
    let sched = Schedule::new(geom, vec![StrokeSpec::dissipative(2000.0, 0.0, bath)]).unwrap();
    let init = InitialState::SqueezedThermal { nbar: 0.0, r: 0.0, phi: 0.0 };
    let mut sim = Simulation::new(sched, &init, EngineConfig::default()).unwrap();
    let series = sim.run().unwrap();
    let want = steady_state(2.0 * PI, &bath).unwrap();
    let end = sim.lab_moments().unwrap();
    assert!((end.n - want.n).abs() < 1e-8);
    assert!((end.s - want.s).norm() < 1e-8);
    // relaxation bound |n(t) − N| ≤ |n(0) − N| e^{−γt}
    for s in &series {
        assert!((s.n_mean - want.n).abs() <= want.n * (-0.01 * s.t).exp() + 1e-8);
    }
}

#[test]
fn unitary_stroke_keeps_populations_and_tracks_energy() {
    let geom = CavityGeometry::new(2.0, 2.0 * PI, 1.0).unwrap();
    let sched = Schedule::new(geom, vec![StrokeSpec::unitary(50.0, 0.01)]).unwrap();
    let init = InitialState::SqueezedThermal { nbar: 0.3, r: 0.3, phi: 0.2 };
    let mut sim = Simulation::new(sched, &init, config(EngineKind::Fock)).unwrap();
    let before = match sim.state() {
        EngineState::Fock(rho) => rho.populations(),
        _ => unreachable!(),
    };
    let series = sim.run().unwrap();
    let after = match sim.state() {
        EngineState::Fock(rho) => rho.populations(),
        _ => unreachable!(),
    };
    assert_eq!(before, after);
    let (first, last) = (series.first().unwrap(), series.last().unwrap());
    let de = last.energy - first.energy;
    assert!((de + last.w_alicki).abs() < 1e-10 * de.abs());
}

#[test]
fn isochore_leaves_work_untouched() {
    let bath = BathSpec::new(1.0, 0.1, 0.5, 0.0).unwrap();
    let geom = CavityGeometry::new(1.0, 2.0 * PI, 1.0).unwrap();
    let sched = Schedule::new(geom, vec![StrokeSpec::dissipative(30.0, 0.0, bath)]).unwrap();
    let init = InitialState::SqueezedThermal { nbar: 0.0, r: 0.0, phi: 0.0 };
    let series = Simulation::new(sched, &init, config(EngineKind::Moments)).unwrap().run().unwrap();
    for s in &series {
        assert_eq!([s.w_alicki, s.w_alicki_zp, s.delta_w, s.w_expansion], [0.0; 4]);
    }
}

#[test]
fn ledger_identity_holds_on_every_sample() {
    let bath = BathSpec::new(10.0, 0.01, 1.0, 0.0).unwrap();
    let sched = open_expansion(200.0, 2.5e-3, bath);
    let init = InitialState::SqueezedThermal { nbar: 10.0, r: 1.0, phi: 0.0 };
    for convention in [PhaseConvention::OmegaT, PhaseConvention::IntegralOmega] {
        let cfg = EngineConfig { phase_convention: convention, ..config(EngineKind::Moments) };
        let series = Simulation::new(sched.clone(), &init, cfg).unwrap().run().unwrap();
        for s in &series {
            let resid = s.w_expansion - (s.w_alicki_zp + s.delta_w);
            assert!(resid.abs() <= 1e-9, "{resid} at t={}", s.t);
        }
    }
}

#[test]
fn unsqueezed_expansion_has_no_two_photon_work() {
    let bath = BathSpec::new(0.5, 0.02, 0.0, 0.0).unwrap();
    let sched = open_expansion(100.0, 5e-3, bath);
    let init = InitialState::SqueezedThermal { nbar: 0.5, r: 0.0, phi: 0.0 };
    for engine in [EngineKind::Fock, EngineKind::Moments] {
        let series = Simulation::new(sched.clone(), &init, config(engine)).unwrap().run().unwrap();
        for s in &series {
            assert_eq!(s.delta_w, 0.0);
            assert!((s.w_expansion - s.w_alicki_zp).abs() <= 1e-9);
        }
    }
}

#[test]
fn corotating_frame_locks_lab_phase() {
    let bath = BathSpec::new(0.5, 0.05, 0.4, 0.3).unwrap();
    let geom = CavityGeometry::new(1.0, 2.0 * PI, 1.0).unwrap();
    let sched = Schedule::new(geom, vec![StrokeSpec::dissipative(600.0, 0.0, bath)]).unwrap();
    let init = InitialState::SqueezedThermal { nbar: 0.0, r: 0.0, phi: 0.0 };
    let cfg = EngineConfig { bath_frame: BathFrame::Corotating, ..EngineConfig::default() };
    let mut sim = Simulation::new(sched, &init, cfg).unwrap();
    sim.run().unwrap();
    let (_, m) = bath.constants(2.0 * PI);
    let lab = sim.lab_moments().unwrap();
    let want = m * C64::from_polar(1.0, -2.0 * 2.0 * PI * 600.0);
    assert!((lab.s - want).norm() < 1e-10, "{} vs {}", lab.s, want);
}

#[test]
fn halving_dt_barely_moves_expansion_work() {
    let bath = BathSpec::new(10.0, 0.01, 1.0, 0.0).unwrap();
    let sched = open_expansion(1000.0, 2.5e-3, bath);
    let init = InitialState::SqueezedThermal { nbar: 10.0, r: 1.0, phi: 0.0 };
    let run = |dt: f64| {
        let cfg = EngineConfig { dt, ..EngineConfig::default() };
        let mut sim = Simulation::new(sched.clone(), &init, cfg).unwrap();
        sim.run().unwrap();
        sim.ledger().unwrap().w_expansion
    };
    let (coarse, fine) = (run(0.02), run(0.01));
    assert!((coarse - fine).abs() <= 1e-6 * fine.abs(), "{coarse} {fine}");
}

#[test]
fn fock_engine_rejects_infeasible_dimension() {
    let bath = BathSpec::new(3.0, 0.05, 0.5, 0.0).unwrap();
    let sched = open_expansion(10.0, 0.0, bath);
    let init = InitialState::SqueezedThermal { nbar: 0.0, r: 0.0, phi: 0.0 };
    let cfg = EngineConfig { fock_dim: Some(16), ..config(EngineKind::Fock) };
    let err = Simulation::new(sched, &init, cfg).unwrap_err();
    assert!(matches!(err, Error::TruncationInfeasible { .. }));
    assert!(err.is_infeasibility());
}

#[test]
fn tail_guard_aborts_underestimated_truncation() {
    // The bath fits the 8(N+1) rule, but squeezing drives population into
    // the top levels of a deliberately small space.
    let bath = BathSpec::new(0.0, 0.5, 1.2, 0.0).unwrap();
    let geom = CavityGeometry::new(1.0, 0.1, 1.0).unwrap();
    let sched = Schedule::new(geom, vec![StrokeSpec::dissipative(40.0, 0.0, bath)]).unwrap();
    let init = InitialState::SqueezedThermal { nbar: 0.0, r: 0.0, phi: 0.0 };
    let cfg = EngineConfig { fock_dim: Some(32), ..config(EngineKind::Fock) };
    let err = Simulation::new(sched, &init, cfg).unwrap().run().unwrap_err();
    assert!(matches!(err, Error::TailMass { .. }), "{err}");
}
