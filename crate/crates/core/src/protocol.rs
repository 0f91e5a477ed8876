//! Cavity geometry, bath parameters and stroke schedules.
//!
//! A schedule is a list of strokes, each moving the mirror at constant speed
//! for a fixed duration. Global time is the prefix sum of stroke durations;
//! Otto cycles repeat their four strokes periodically.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::analytics::{bose_einstein, beta_from_nbar, nm_constants, FrequencyPath};
use crate::error::{Error, Result};

/// Relative slack used when comparing stroke durations and length closure.
const CLOSURE_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavityGeometry {
    pub l0: f64,
    pub omega0: f64,
    #[serde(default = "unit_section")]
    pub section: f64,
}

fn unit_section() -> f64 {
    1.0
}

impl CavityGeometry {
    pub fn new(l0: f64, omega0: f64, section: f64) -> Result<Self> {
        let geom = Self { l0, omega0, section };
        geom.validate()?;
        Ok(geom)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if !ok(self.l0) || !ok(self.omega0) || !ok(self.section) {
            return Err(Error::InvalidSchedule(format!(
                "geometry needs positive finite L0, omega0, section (got {}, {}, {})",
                self.l0, self.omega0, self.section
            )));
        }
        Ok(())
    }

    /// `c = ω₀ L₀`.
    pub fn c(&self) -> f64 {
        self.omega0 * self.l0
    }
}

/// How the bath occupation responds to the cavity frequency.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Occupation {
    /// `n̄` is held constant whatever the cavity frequency.
    #[default]
    Fixed,
    /// Fixed temperature: `n̄(ω) = 1/(e^{βω} − 1)` with β chosen so that
    /// `n̄(omega_ref)` equals the bath's `nbar`.
    Thermal { omega_ref: f64 },
}

/// Squeezed thermal reservoir.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathSpec {
    pub nbar: f64,
    pub gamma: f64,
    pub r: f64,
    #[serde(default)]
    pub phi: f64,
    #[serde(default)]
    pub occupation: Occupation,
}

impl BathSpec {
    pub fn new(nbar: f64, gamma: f64, r: f64, phi: f64) -> Result<Self> {
        let bath = Self { nbar, gamma, r, phi, occupation: Occupation::Fixed };
        bath.validate()?;
        Ok(bath)
    }

    pub fn with_thermal_occupation(mut self, omega_ref: f64) -> Result<Self> {
        self.occupation = Occupation::Thermal { omega_ref };
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.nbar, self.gamma, self.r, self.phi].iter().all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidBath(format!("non-finite parameter in {self:?}")));
        }
        if self.nbar < 0.0 {
            return Err(Error::InvalidBath(format!("nbar = {} is negative", self.nbar)));
        }
        if self.gamma < 0.0 {
            return Err(Error::InvalidBath(format!("gamma = {} is negative", self.gamma)));
        }
        if self.r < 0.0 {
            return Err(Error::InvalidBath(format!("r = {} is negative", self.r)));
        }
        if let Occupation::Thermal { omega_ref } = self.occupation {
            if !(omega_ref > 0.0 && omega_ref.is_finite()) {
                return Err(Error::InvalidBath(format!("thermal omega_ref = {omega_ref}")));
            }
        }
        Ok(())
    }

    /// Inverse temperature for [`Occupation::Thermal`] (infinite for a vacuum
    /// bath); `None` when the occupation is fixed.
    pub fn beta(&self) -> Option<f64> {
        match self.occupation {
            Occupation::Fixed => None,
            Occupation::Thermal { omega_ref } => Some(beta_from_nbar(self.nbar, omega_ref)),
        }
    }

    /// Mean occupation of the bath mode resonant with `omega`.
    pub fn nbar_at(&self, omega: f64) -> f64 {
        match self.beta() {
            None => self.nbar,
            Some(beta) => bose_einstein(beta, omega),
        }
    }

    /// `(N, M)` at frequency `omega` with squeezing phase `phi`.
    pub fn constants_with_phase(&self, omega: f64, phi: f64) -> (f64, C64) {
        nm_constants(self.nbar_at(omega), self.r, phi)
    }

    pub fn constants(&self, omega: f64) -> (f64, C64) {
        self.constants_with_phase(omega, self.phi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrokeKind {
    Unitary,
    Dissipative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrokeSpec {
    pub kind: StrokeKind,
    pub duration: f64,
    /// Mirror speed `dL/dt`; positive for expansion.
    #[serde(default)]
    pub speed: f64,
    #[serde(default)]
    pub bath: Option<BathSpec>,
    #[serde(default)]
    pub measure_after: bool,
}

impl StrokeSpec {
    pub fn unitary(duration: f64, speed: f64) -> Self {
        Self { kind: StrokeKind::Unitary, duration, speed, bath: None, measure_after: false }
    }

    pub fn dissipative(duration: f64, speed: f64, bath: BathSpec) -> Self {
        Self {
            kind: StrokeKind::Dissipative,
            duration,
            speed,
            bath: Some(bath),
            measure_after: false,
        }
    }

    pub fn measured(mut self) -> Self {
        self.measure_after = true;
        self
    }
}

/// Validated piecewise-linear length program.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    geom: CavityGeometry,
    strokes: Vec<StrokeSpec>,
    starts: Vec<f64>,
    start_lengths: Vec<f64>,
    start_phases: Vec<f64>,
    period: f64,
    periodic: bool,
}

impl Schedule {
    pub fn new(geom: CavityGeometry, strokes: Vec<StrokeSpec>) -> Result<Self> {
        Self::build(geom, strokes, false)
    }

    fn build(geom: CavityGeometry, strokes: Vec<StrokeSpec>, periodic: bool) -> Result<Self> {
        geom.validate()?;
        if strokes.is_empty() {
            return Err(Error::InvalidSchedule("no strokes".into()));
        }
        let c = geom.c();
        let mut starts = Vec::with_capacity(strokes.len());
        let mut start_lengths = Vec::with_capacity(strokes.len());
        let mut start_phases = Vec::with_capacity(strokes.len());
        let (mut t, mut l, mut phase) = (0.0, geom.l0, 0.0);
        for (k, s) in strokes.iter().enumerate() {
            if !(s.duration > 0.0 && s.duration.is_finite()) {
                return Err(Error::InvalidSchedule(format!(
                    "stroke {k}: duration {} must be positive and finite",
                    s.duration
                )));
            }
            if !s.speed.is_finite() {
                return Err(Error::InvalidSchedule(format!("stroke {k}: speed is not finite")));
            }
            match (s.kind, &s.bath) {
                (StrokeKind::Dissipative, None) => {
                    return Err(Error::InvalidSchedule(format!(
                        "stroke {k}: dissipative stroke without a bath"
                    )))
                }
                (StrokeKind::Unitary, Some(_)) => {
                    return Err(Error::InvalidSchedule(format!(
                        "stroke {k}: unitary stroke must not carry a bath"
                    )))
                }
                (_, Some(b)) => b.validate()?,
                _ => {}
            }
            let l_end = l + s.speed * s.duration;
            if !(l_end > 0.0) {
                return Err(Error::NonPositiveLength { length: l_end, t: t + s.duration });
            }
            starts.push(t);
            start_lengths.push(l);
            start_phases.push(phase);
            phase += stroke_phase(c, l, s.speed, s.duration);
            t += s.duration;
            l = l_end;
        }
        if periodic && (l - geom.l0).abs() > CLOSURE_RTOL * geom.l0 {
            return Err(Error::InvalidCycle(format!(
                "length does not close: starts at {} and ends at {l}",
                geom.l0
            )));
        }
        Ok(Self {
            geom,
            strokes,
            starts,
            start_lengths,
            start_phases,
            period: t,
            periodic,
        })
    }

    pub fn geometry(&self) -> &CavityGeometry {
        &self.geom
    }

    pub fn strokes(&self) -> &[StrokeSpec] {
        &self.strokes
    }

    /// Total duration of one pass through the strokes.
    pub fn duration(&self) -> f64 {
        self.period
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    /// Global start time of stroke `k` in the first pass.
    pub fn stroke_start(&self, k: usize) -> f64 {
        self.starts[k]
    }

    pub fn stroke_start_length(&self, k: usize) -> f64 {
        self.start_lengths[k]
    }

    /// Locates `t`: (pass index, stroke index, time since stroke start).
    /// Stroke boundaries belong to the later stroke, except the very end of a
    /// finite schedule.
    fn locate(&self, t: f64) -> Result<(u64, usize, f64)> {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::TimeOutOfRange { t, end: self.period });
        }
        let (pass, local) = if self.periodic {
            let pass = (t / self.period).floor();
            let local = t - pass * self.period;
            // Round-off can push `local` to exactly `period`.
            if local >= self.period {
                (pass as u64 + 1, 0.0)
            } else {
                (pass as u64, local)
            }
        } else {
            if t > self.period * (1.0 + CLOSURE_RTOL) {
                return Err(Error::TimeOutOfRange { t, end: self.period });
            }
            (0, t.min(self.period))
        };
        let k = match self.starts.partition_point(|&s| s <= local) {
            0 => 0,
            i => i - 1,
        };
        Ok((pass, k, local - self.starts[k]))
    }

    pub fn stroke_index(&self, t: f64) -> Result<usize> {
        Ok(self.locate(t)?.1)
    }

    pub fn length_at(&self, t: f64) -> Result<f64> {
        let (_, k, dt) = self.locate(t)?;
        Ok(self.start_lengths[k] + self.strokes[k].speed * dt)
    }

    pub fn length_dot(&self, t: f64) -> Result<f64> {
        let (_, k, _) = self.locate(t)?;
        Ok(self.strokes[k].speed)
    }

    pub fn omega_at(&self, t: f64) -> Result<f64> {
        Ok(self.geom.c() / self.length_at(t)?)
    }

    /// `ω̇ = −c v / L²`.
    pub fn omega_dot(&self, t: f64) -> Result<f64> {
        let (_, k, dt) = self.locate(t)?;
        let v = self.strokes[k].speed;
        let l = self.start_lengths[k] + v * dt;
        Ok(-self.geom.c() * v / (l * l))
    }

    /// `∫₀ᵗ ω(t′) dt′` in closed form.
    pub fn omega_integral(&self, t: f64) -> Result<f64> {
        let (pass, k, dt) = self.locate(t)?;
        let per_pass = self.start_phases.last().copied().unwrap_or(0.0)
            + stroke_phase(
                self.geom.c(),
                *self.start_lengths.last().unwrap(),
                self.strokes.last().unwrap().speed,
                self.strokes.last().unwrap().duration,
            );
        Ok(pass as f64 * per_pass
            + self.start_phases[k]
            + stroke_phase(self.geom.c(), self.start_lengths[k], self.strokes[k].speed, dt))
    }

    /// Largest frequency reached anywhere in the schedule.
    pub fn omega_max(&self) -> f64 {
        let c = self.geom.c();
        self.strokes
            .iter()
            .zip(&self.start_lengths)
            .map(|(s, &l)| c / l.min(l + s.speed * s.duration))
            .fold(0.0, f64::max)
    }
}

/// `∫ ω dt` over `duration` of a linear stroke starting at length `l`.
pub fn stroke_phase(c: f64, l: f64, speed: f64, duration: f64) -> f64 {
    if speed == 0.0 {
        c * duration / l
    } else {
        (c / speed) * (speed * duration / l).ln_1p()
    }
}

impl FrequencyPath for Schedule {
    fn omega(&self, t: f64) -> f64 {
        self.omega_at(t).unwrap_or(f64::NAN)
    }

    fn omega_dot(&self, t: f64) -> f64 {
        Schedule::omega_dot(self, t).unwrap_or(f64::NAN)
    }
}

/// `L(t)` for a one-off list of strokes.
pub fn length_at(geom: &CavityGeometry, strokes: &[StrokeSpec], t: f64) -> Result<f64> {
    Schedule::new(*geom, strokes.to_vec())?.length_at(t)
}

/// `ω(t) = c / L(t)` for a one-off list of strokes.
pub fn omega_at(geom: &CavityGeometry, strokes: &[StrokeSpec], t: f64) -> Result<f64> {
    Schedule::new(*geom, strokes.to_vec())?.omega_at(t)
}

/// A validated four-stroke squeezing Otto cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct OttoCycle {
    schedule: Schedule,
}

impl OttoCycle {
    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn tau(&self) -> f64 {
        self.schedule.strokes[0].duration
    }

    /// Squeezing of the bath met after compression.
    pub fn r2(&self) -> f64 {
        self.schedule.strokes[1].bath.map_or(0.0, |b| b.r)
    }

    /// Squeezing of the bath met after expansion.
    pub fn r1(&self) -> f64 {
        self.schedule.strokes[3].bath.map_or(0.0, |b| b.r)
    }

    pub fn bath_r1(&self) -> BathSpec {
        self.schedule.strokes[3].bath.expect("validated")
    }

    pub fn bath_r2(&self) -> BathSpec {
        self.schedule.strokes[1].bath.expect("validated")
    }

    pub fn period(&self) -> f64 {
        self.schedule.period
    }
}

/// Standard cycle: unitary compression at `-speed`, isochore with `bath2`,
/// unitary expansion at `+speed`, isochore with `bath1`; all strokes last
/// `tau` and end with an energy measurement.
pub fn otto_strokes(tau: f64, speed: f64, bath1: BathSpec, bath2: BathSpec) -> Vec<StrokeSpec> {
    vec![
        StrokeSpec::unitary(tau, -speed.abs()).measured(),
        StrokeSpec::dissipative(tau, 0.0, bath2).measured(),
        StrokeSpec::unitary(tau, speed.abs()).measured(),
        StrokeSpec::dissipative(tau, 0.0, bath1).measured(),
    ]
}

/// Checks the four-stroke pattern and returns a periodic schedule.
///
/// Requires unitary compression, dissipative isochore, unitary expansion,
/// dissipative isochore, equal durations, closed length, measurement after
/// each stroke and `r1 <= r2` (equality allowed for null tests).
pub fn validate_cycle(geom: &CavityGeometry, strokes: &[StrokeSpec]) -> Result<OttoCycle> {
    if strokes.len() != 4 {
        return Err(Error::InvalidCycle(format!("expected 4 strokes, got {}", strokes.len())));
    }
    let pattern = [
        StrokeKind::Unitary,
        StrokeKind::Dissipative,
        StrokeKind::Unitary,
        StrokeKind::Dissipative,
    ];
    for (k, (s, want)) in strokes.iter().zip(pattern).enumerate() {
        if s.kind != want {
            return Err(Error::InvalidCycle(format!("stroke {} should be {want:?}", k + 1)));
        }
        if want == StrokeKind::Dissipative {
            if s.bath.is_none() {
                return Err(Error::InvalidCycle(format!("stroke {} has no bath", k + 1)));
            }
            if s.speed != 0.0 {
                return Err(Error::InvalidCycle(format!(
                    "stroke {} is an isochore but has speed {}",
                    k + 1,
                    s.speed
                )));
            }
        }
        if !s.measure_after {
            return Err(Error::InvalidCycle(format!("stroke {} lacks measure_after", k + 1)));
        }
    }
    if !(strokes[0].speed < 0.0) {
        return Err(Error::InvalidCycle("stroke 1 must compress (speed < 0)".into()));
    }
    if !(strokes[2].speed > 0.0) {
        return Err(Error::InvalidCycle("stroke 3 must expand (speed > 0)".into()));
    }
    let tau = strokes[0].duration;
    if strokes.iter().any(|s| (s.duration - tau).abs() > CLOSURE_RTOL * tau) {
        return Err(Error::InvalidCycle("strokes must have equal durations".into()));
    }
    let (r2, r1) = (
        strokes[1].bath.map_or(0.0, |b| b.r),
        strokes[3].bath.map_or(0.0, |b| b.r),
    );
    if r1 > r2 {
        return Err(Error::InvalidCycle(format!("r1 = {r1} exceeds r2 = {r2}")));
    }
    let schedule = Schedule::build(*geom, strokes.to_vec(), true)?;
    Ok(OttoCycle { schedule })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn reference_cycle(r1: f64, r2: f64) -> (CavityGeometry, Vec<StrokeSpec>) {
        let geom = CavityGeometry::new(10.0, 2.0 * PI, 1.0).unwrap();
        let b1 = BathSpec::new(1.0, 0.01, r1, 0.0).unwrap();
        let b2 = BathSpec::new(1.0, 0.01, r2, 0.0).unwrap();
        (geom, otto_strokes(1000.0, 0.005, b1, b2))
    }

    #[test]
    fn otto_compression_reaches_half_length() {
        let (geom, strokes) = reference_cycle(0.1, 10.0);
        assert_relative_eq!(length_at(&geom, &strokes, 1000.0).unwrap(), 5.0, epsilon = 1e-12);
        assert_relative_eq!(omega_at(&geom, &strokes, 1000.0).unwrap(), 4.0 * PI, epsilon = 1e-12);
        // isochore keeps the length
        assert_eq!(length_at(&geom, &strokes, 1500.0).unwrap(), 5.0);
    }

    #[test]
    fn open_expansion_final_length() {
        let geom = CavityGeometry::new(1.0, 2.0 * PI, 1.0).unwrap();
        let bath = BathSpec::new(10.0, 0.01, 1.0, 0.0).unwrap();
        let strokes = [StrokeSpec::dissipative(1000.0, 2.5e-3, bath)];
        assert_relative_eq!(length_at(&geom, &strokes, 1000.0).unwrap(), 3.5, epsilon = 1e-12);
        let sched = Schedule::new(geom, strokes.to_vec()).unwrap();
        assert!(sched.omega_dot(10.0).unwrap() < 0.0);
        assert!(matches!(sched.length_at(1001.0), Err(Error::TimeOutOfRange { .. })));
    }

    #[test]
    fn omega_integral_matches_quadrature() {
        let (geom, strokes) = reference_cycle(0.1, 10.0);
        let cycle = validate_cycle(&geom, &strokes).unwrap();
        let sched = cycle.schedule();
        let t = 2600.0;
        let n = 200_000;
        let h = t / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            acc += sched.omega_at((i as f64 + 0.5) * h).unwrap() * h;
        }
        assert_relative_eq!(sched.omega_integral(t).unwrap(), acc, max_relative = 1e-9);
        // periodic continuation adds one full-period phase
        let one = sched.omega_integral(4000.0).unwrap();
        assert_relative_eq!(
            sched.omega_integral(4000.0 + t).unwrap(),
            one + sched.omega_integral(t).unwrap(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn reference_cycle_validates() {
        let (geom, strokes) = reference_cycle(0.1, 10.0);
        let cycle = validate_cycle(&geom, &strokes).unwrap();
        assert_eq!(cycle.r1(), 0.1);
        assert_eq!(cycle.r2(), 10.0);
        assert_eq!(cycle.period(), 4000.0);
        assert_relative_eq!(cycle.schedule().omega_max(), 4.0 * PI, epsilon = 1e-12);
    }

    #[test]
    fn cycle_validation_errors() {
        let (geom, mut strokes) = reference_cycle(0.1, 10.0);
        strokes[2].speed = 0.004;
        assert!(matches!(validate_cycle(&geom, &strokes), Err(Error::InvalidCycle(_))));

        let (_, mut strokes) = reference_cycle(0.1, 10.0);
        strokes[1].bath = None;
        assert!(validate_cycle(&geom, &strokes).is_err());

        let (_, mut strokes) = reference_cycle(0.1, 10.0);
        strokes[3].measure_after = false;
        assert!(validate_cycle(&geom, &strokes).is_err());

        let (_, strokes) = reference_cycle(10.0, 0.1);
        assert!(validate_cycle(&geom, &strokes).is_err());

        let (_, strokes) = reference_cycle(0.5, 0.5);
        assert!(validate_cycle(&geom, &strokes).is_ok());

        assert!(validate_cycle(&geom, &strokes[..3]).is_err());
    }

    #[test]
    fn schedule_rejects_bad_strokes() {
        let geom = CavityGeometry::new(1.0, 1.0, 1.0).unwrap();
        assert!(matches!(
            Schedule::new(geom, vec![StrokeSpec::unitary(10.0, -0.2)]),
            Err(Error::NonPositiveLength { .. })
        ));
        assert!(Schedule::new(geom, vec![StrokeSpec::unitary(0.0, 0.0)]).is_err());
        let mut s = StrokeSpec::unitary(1.0, 0.0);
        s.kind = StrokeKind::Dissipative;
        assert!(Schedule::new(geom, vec![s]).is_err());
        assert!(BathSpec::new(-1.0, 0.1, 0.0, 0.0).is_err());
        assert!(BathSpec::new(1.0, -0.1, 0.0, 0.0).is_err());
        assert!(CavityGeometry::new(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn thermal_occupation_tracks_frequency() {
        let bath = BathSpec::new(10.0, 0.01, 0.0, 0.0)
            .unwrap()
            .with_thermal_occupation(2.0 * PI)
            .unwrap();
        assert_relative_eq!(bath.nbar_at(2.0 * PI), 10.0, max_relative = 1e-12);
        assert!(bath.nbar_at(PI) > 10.0);
        let fixed = BathSpec::new(10.0, 0.01, 0.0, 0.0).unwrap();
        assert_eq!(fixed.nbar_at(PI), 10.0);
    }

    proptest! {
        #[test]
        fn cycle_geometry_is_periodic(t in 0.0f64..4000.0, k in 1u32..5) {
            let (geom, strokes) = reference_cycle(0.1, 10.0);
            let cycle = validate_cycle(&geom, &strokes).unwrap();
            let s = cycle.schedule();
            let shifted = t + 4000.0 * k as f64;
            prop_assert!((s.length_at(t).unwrap() - s.length_at(shifted).unwrap()).abs() < 1e-9);
            let (l, w) = (s.length_at(t).unwrap(), s.omega_at(t).unwrap());
            prop_assert!((l * w - geom.c()).abs() <= 1e-12 * geom.c());
        }

        #[test]
        fn length_is_continuous_at_boundaries(k in 1usize..4) {
            let (geom, strokes) = reference_cycle(0.1, 10.0);
            let s = validate_cycle(&geom, &strokes).unwrap().schedule().clone();
            let tb = s.stroke_start(k);
            let before = s.length_at(tb - 1e-9).unwrap();
            let after = s.length_at(tb).unwrap();
            prop_assert!((before - after).abs() < 1e-10);
        }
    }
}
