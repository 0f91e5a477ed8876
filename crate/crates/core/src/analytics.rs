//! Closed-form and quadrature oracles for weakly squeezed thermal baths.
//!
//! Everything here is independent of the time-stepping engines: the bath
//! constants `N` and `M`, their small-`r` expansion, and the quasistatic
//! work integrals for a cavity that tracks a squeezed thermal state at fixed
//! inverse temperature.

use num_complex::Complex64 as C64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Bath constants `(N, M)` of a squeezed thermal reservoir.
///
/// `N = n̄ (cosh²r + sinh²r) + sinh²r` is the stationary photon number and
/// `M = -(1 + 2n̄) cosh r sinh r e^{iφ}` the stationary `⟨a²⟩`.
pub fn nm_constants(nbar: f64, r: f64, phi: f64) -> (f64, C64) {
    let (s, c) = (r.sinh(), r.cosh());
    let n = nbar * (c * c + s * s) + s * s;
    let m = -(1.0 + 2.0 * nbar) * c * s * C64::from_polar(1.0, phi);
    (n, m)
}

/// Leading small-`r` terms of the bath constants: `(N₂, M₁)` with
/// `N₂ = n̄ + (1 + 2n̄) r²` and `M₁ = -(1 + 2n̄) r` (real squeezing).
pub fn nm_perturbative(nbar: f64, r: f64) -> (f64, f64) {
    (nbar + (1.0 + 2.0 * nbar) * r * r, -(1.0 + 2.0 * nbar) * r)
}

/// Bose-Einstein occupation `1 / (e^{βω} - 1)`; zero at infinite β.
pub fn bose_einstein(beta: f64, omega: f64) -> f64 {
    if beta.is_infinite() {
        return 0.0;
    }
    1.0 / (beta * omega).exp_m1()
}

/// Inverse temperature that gives occupation `nbar` at `omega_ref`.
/// `nbar = 0` maps to `f64::INFINITY`.
pub fn beta_from_nbar(nbar: f64, omega_ref: f64) -> f64 {
    if nbar <= 0.0 {
        f64::INFINITY
    } else {
        (1.0 / nbar).ln_1p() / omega_ref
    }
}

/// `coth(βω/2) = (1 + e^{-βω}) / (1 - e^{-βω}) = 1 + 2 n̄`.
fn coth_half(beta: f64, omega: f64) -> f64 {
    1.0 + 2.0 * bose_einstein(beta, omega)
}

/// A frequency protocol ω(t) with its derivative.
pub trait FrequencyPath {
    fn omega(&self, t: f64) -> f64;
    fn omega_dot(&self, t: f64) -> f64;
}

impl<F, G> FrequencyPath for (F, G)
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    fn omega(&self, t: f64) -> f64 {
        (self.0)(t)
    }
    fn omega_dot(&self, t: f64) -> f64 {
        (self.1)(t)
    }
}

/// A quasistatic process at fixed inverse temperature and fixed squeezing.
#[derive(Debug, Clone)]
pub struct QuasistaticSpec<P> {
    pub beta: f64,
    pub path: P,
    pub t0: f64,
    pub tf: f64,
    pub r: f64,
    pub phi: f64,
}

impl<P: FrequencyPath> QuasistaticSpec<P> {
    fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) {
            return Err(Error::InvalidArgument(format!("beta must be positive, got {}", self.beta)));
        }
        if !(self.tf >= self.t0) || !self.t0.is_finite() || !self.tf.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "bad time window [{}, {}]",
                self.t0, self.tf
            )));
        }
        for t in [self.t0, 0.5 * (self.t0 + self.tf), self.tf] {
            if !(self.path.omega(t) > 0.0) {
                return Err(Error::InvalidArgument(format!("omega({t}) must be positive")));
            }
        }
        Ok(())
    }
}

/// `-∫ ω̇ n̄(ω) dt = k_BT ln[(1 - e^{-βω(t0)}) / (1 - e^{-βω(tf)})]`.
///
/// Squeezing enters only at second order, so `r` and `φ` are ignored.
pub fn w_alicki_quasistatic<P: FrequencyPath>(spec: &QuasistaticSpec<P>) -> Result<f64> {
    spec.validate()?;
    if spec.beta.is_infinite() {
        return Ok(0.0);
    }
    let log_one_minus = |omega: f64| (-(-spec.beta * omega).exp()).ln_1p();
    let w0 = spec.path.omega(spec.t0);
    let wf = spec.path.omega(spec.tf);
    Ok((log_one_minus(w0) - log_one_minus(wf)) / spec.beta)
}

/// Alicki work including the zero-point term: `W_Al - [ω(tf) - ω(t0)] / 2`.
pub fn w_alicki_zp_quasistatic<P: FrequencyPath>(spec: &QuasistaticSpec<P>) -> Result<f64> {
    let w = w_alicki_quasistatic(spec)?;
    Ok(w - 0.5 * (spec.path.omega(spec.tf) - spec.path.omega(spec.t0)))
}

/// Absolute tolerance of the step-halving check in [`delta_w_quasistatic`].
pub const DELTA_W_TOL: f64 = 1e-10;

/// Points per local oscillation period of the `cos[φ - 2tω(t)]` factor.
const POINTS_PER_PERIOD: f64 = 40.0;
const MAX_HALVINGS: u32 = 10;

/// First-order two-photon work for a quasistatic squeezed thermal state:
///
/// `ΔW ≈ -r ∫ ω̇ coth(βω/2) cos[φ - 2tω(t)] dt`.
///
/// The integrand is `ω̇ Re[⟨a²⟩ e^{-2itω}]` with `⟨a²⟩ = -(1+2n̄) r e^{iφ}`
/// the leading-order two-photon moment of `S(ξ) ρ_β S(ξ)†`, hence the
/// leading minus sign.
///
/// Evaluated with composite Simpson on panels no wider than
/// `2π / (40 |d(2tω)/dt|)`, refined by step halving until two successive
/// levels agree to [`DELTA_W_TOL`].
pub fn delta_w_quasistatic<P: FrequencyPath>(spec: &QuasistaticSpec<P>) -> Result<f64> {
    spec.validate()?;
    if spec.r == 0.0 || spec.tf == spec.t0 {
        return Ok(0.0);
    }
    let integrand = |t: f64| {
        let w = spec.path.omega(t);
        let wd = spec.path.omega_dot(t);
        if wd == 0.0 {
            return 0.0;
        }
        -spec.r * wd * coth_half(spec.beta, w) * (spec.phi - 2.0 * t * w).cos()
    };
    let phase_rate = |t: f64| (2.0 * spec.path.omega(t) + 2.0 * t * spec.path.omega_dot(t)).abs();

    let mut previous = simpson_oscillatory(&integrand, &phase_rate, spec.t0, spec.tf, 1.0);
    let mut diff = f64::INFINITY;
    for level in 1..=MAX_HALVINGS {
        let refined = simpson_oscillatory(
            &integrand,
            &phase_rate,
            spec.t0,
            spec.tf,
            2f64.powi(level as i32),
        );
        diff = (refined - previous).abs();
        previous = refined;
        if diff <= DELTA_W_TOL {
            return Ok(refined);
        }
    }
    Err(Error::Quadrature {
        tol: DELTA_W_TOL,
        diff,
    })
}

fn simpson_oscillatory(
    f: &impl Fn(f64) -> f64,
    rate: &impl Fn(f64) -> f64,
    t0: f64,
    tf: f64,
    refine: f64,
) -> f64 {
    // Cap the panel width so slowly varying stretches are still resolved.
    let cap = (tf - t0) / (64.0 * refine);
    let mut t = t0;
    let mut total = 0.0;
    let mut f_left = f(t0);
    while t < tf {
        let local = rate(t);
        let mut h = if local > 0.0 {
            (2.0 * PI / (POINTS_PER_PERIOD * refine * local)).min(cap)
        } else {
            cap
        };
        if t + h >= tf || tf - (t + h) < 1e-9 * h {
            h = tf - t;
        }
        let f_mid = f(t + 0.5 * h);
        let f_right = f(t + h);
        total += h / 6.0 * (f_left + 4.0 * f_mid + f_right);
        f_left = f_right;
        t += h;
    }
    total
}

/// Closed form of `tr[a² ρ_β a†²] - tr[a² a†² ρ_β]` for a thermal state with
/// `x = βω`: `-2 (1 + e^{-x}) / (1 - e^{-x})`.
pub fn thermal_two_photon_difference(x: f64) -> f64 {
    let q = (-x).exp();
    -2.0 * (1.0 + q) / (1.0 - q)
}
