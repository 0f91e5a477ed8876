//! Time evolution of the cavity field with co-integrated work accounting.
//!
//! Two interchangeable state representations are offered: a truncated Fock
//! density matrix and the exact first/second moments. Both are advanced by
//! the same fixed-step RK4 driver, with the four work integrals carried as
//! extra ODE components.

mod ledger;
mod lindblad;
mod rk4;
mod stroke;

pub use ledger::{pressure, work_integrands, Integrands, Kinematics, WorkLedger};
pub use lindblad::{check_bath_fits, lindblad_rhs, lindblad_rhs_dense, BathConstants};
pub use rk4::Rk4;
pub use stroke::{EngineState, InitialState, RunStats, Sample, Simulation, TimeSeries};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Points per period of the fastest cavity oscillation.
pub const STEPS_PER_PERIOD: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineKind {
    Fock,
    #[default]
    Moments,
}

/// Frame in which the bath's squeezing phase is held fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BathFrame {
    /// The master equation as written: cavity Hamiltonian plus a dissipator
    /// with constant `M`. Stationary `⟨a²⟩ = γM/(γ + 2iω)`.
    #[default]
    Literal,
    /// Constant `M` in the frame rotating with the cavity, i.e. a lab-frame
    /// squeezing phase `φ₀ − 2∫ω dt`. Stationary lab `⟨a²⟩ = M e^{−2i∫ω dt}`.
    Corotating,
}

/// Phase `Φ(t)` of the two-photon term in the pressure. It multiplies the
/// interaction-picture `⟨a²⟩`, so `IntegralOmega` reproduces the lab-frame
/// pressure exactly while `OmegaT` uses the instantaneous frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseConvention {
    /// `Φ = 2 ω(t) t`
    #[default]
    OmegaT,
    /// `Φ = 2 ∫₀ᵗ ω dt′`
    IntegralOmega,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineConfig {
    #[serde(default)]
    pub engine: EngineKind,
    /// Upper bound on the step; the driver never exceeds 1/50 of the fastest
    /// period.
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub fock_dim: Option<usize>,
    #[serde(default)]
    pub bath_frame: BathFrame,
    #[serde(default)]
    pub phase_convention: PhaseConvention,
    #[serde(default)]
    pub positivity_checks: bool,
    /// Emit a sample every this many steps; 0 samples stroke boundaries only.
    #[serde(default)]
    pub sample_every: usize,
}

fn default_dt() -> f64 {
    0.01
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            engine: EngineKind::default(),
            dt: default_dt(),
            fock_dim: None,
            bath_frame: BathFrame::default(),
            phase_convention: PhaseConvention::default(),
            positivity_checks: false,
            sample_every: 0,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidConfig(format!("dt = {} must be positive", self.dt)));
        }
        if let Some(d) = self.fock_dim {
            if d < 2 {
                return Err(Error::InvalidDimension(d));
            }
        }
        Ok(())
    }

    /// Step actually used on a stroke whose largest frequency is `omega_max`.
    pub fn effective_dt(&self, omega_max: f64) -> f64 {
        let resolve = 2.0 * std::f64::consts::PI / omega_max / STEPS_PER_PERIOD;
        self.dt.min(resolve)
    }
}
