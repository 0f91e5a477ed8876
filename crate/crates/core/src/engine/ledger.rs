//! Work, energy and radiation-pressure bookkeeping.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// Running work integrals plus the instantaneous energy and pressure.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WorkLedger {
    /// `W_Al = -∫ ω̇ n dt`
    pub w_alicki: f64,
    /// `W̃_Al = -∫ ω̇ (n + ½) dt`
    pub w_alicki_zp: f64,
    /// `ΔW = ∫ ω̇ Re[s e^{-iΦ}] dt`, `s` as in [`pressure`]
    pub delta_w: f64,
    /// `W_exp = ∫ p 𝒮 dL`, integrated on its own
    pub w_expansion: f64,
    pub energy: f64,
    pub pressure: f64,
}

impl WorkLedger {
    /// `W_exp − (W̃_Al + ΔW)`; zero up to quadrature round-off.
    pub fn identity_residual(&self) -> f64 {
        self.w_expansion - (self.w_alicki_zp + self.delta_w)
    }

    /// Work increments of `self` relative to an earlier snapshot.
    pub fn since(&self, earlier: &WorkLedger) -> WorkLedger {
        WorkLedger {
            w_alicki: self.w_alicki - earlier.w_alicki,
            w_alicki_zp: self.w_alicki_zp - earlier.w_alicki_zp,
            delta_w: self.delta_w - earlier.delta_w,
            w_expansion: self.w_expansion - earlier.w_expansion,
            energy: self.energy,
            pressure: self.pressure,
        }
    }
}

/// Cavity kinematics at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kinematics {
    pub omega: f64,
    pub omega_dot: f64,
    pub length: f64,
    pub length_dot: f64,
    pub section: f64,
    /// Phase `Φ(t)` of the two-photon term in the pressure.
    pub phase: f64,
}

/// Time derivatives of the four work integrals and the pressure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integrands {
    pub w_alicki: f64,
    pub w_alicki_zp: f64,
    pub delta_w: f64,
    pub w_expansion: f64,
    pub pressure: f64,
}

/// `⟨p⟩ = κ (2n + 1 − 2 Re[s e^{-iΦ}])` with `κ = ω / (2 𝒮 L)`.
///
/// `s` is `⟨a²⟩` in the interaction picture with respect to `ω(t) a†a`:
/// the explicit `e^{-iΦ}` is the free rotation of `a²`, so with
/// `Φ = 2∫ω` the product is exactly the lab-frame `⟨a²⟩`.
pub fn pressure(n: f64, s: C64, kin: &Kinematics) -> f64 {
    let kappa = kin.omega / (2.0 * kin.section * kin.length);
    kappa * (2.0 * n + 1.0 - 2.0 * two_photon(s, kin.phase))
}

fn two_photon(s: C64, phase: f64) -> f64 {
    (s * C64::from_polar(1.0, -phase)).re
}

pub fn work_integrands(n: f64, s: C64, kin: &Kinematics) -> Integrands {
    let p = pressure(n, s, kin);
    Integrands {
        w_alicki: -kin.omega_dot * n,
        w_alicki_zp: -kin.omega_dot * (n + 0.5),
        delta_w: kin.omega_dot * two_photon(s, kin.phase),
        w_expansion: p * kin.section * kin.length_dot,
        pressure: p,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn kin(c: f64, length: f64, v: f64, phase: f64) -> Kinematics {
        Kinematics {
            omega: c / length,
            omega_dot: -c * v / (length * length),
            length,
            length_dot: v,
            section: 1.0,
            phase,
        }
    }

    #[test]
    fn vacuum_pressure_is_zero_point() {
        let k = kin(2.0 * PI, 1.0, 0.0, 0.0);
        assert!((pressure(0.0, C64::new(0.0, 0.0), &k) - PI).abs() < 1e-15);
    }

    #[test]
    fn isochore_has_no_work() {
        let w = work_integrands(3.0, C64::new(1.0, 2.0), &kin(5.0, 2.0, 0.0, 1.0));
        assert_eq!((w.w_alicki, w.w_alicki_zp, w.delta_w, w.w_expansion), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn no_two_photon_term_means_no_delta_w() {
        let k = kin(3.0, 1.5, 0.01, 0.7);
        let w = work_integrands(2.0, C64::new(0.0, 0.0), &k);
        assert_eq!(w.delta_w, 0.0);
        assert!((w.w_expansion - w.w_alicki_zp).abs() <= 1e-16 * w.w_alicki_zp.abs().max(1.0));
    }

    proptest! {
        #[test]
        fn expansion_integrand_decomposes(
            n in 0.0f64..1e3, re in -1e3f64..1e3, im in -1e3f64..1e3,
            length in 0.5f64..20.0, v in -0.1f64..0.1, phase in -100.0f64..100.0,
        ) {
            let k = kin(2.0 * PI * 10.0, length, v, phase);
            let w = work_integrands(n, C64::new(re, im), &k);
            let sum = w.w_alicki_zp + w.delta_w;
            let scale = (w.w_alicki_zp.abs() + w.delta_w.abs()).max(1e-300);
            prop_assert!((w.w_expansion - sum).abs() <= 1e-13 * scale);
            prop_assert!((w.w_alicki_zp - w.w_alicki + 0.5 * k.omega_dot).abs() <= 1e-12 * scale);
        }
    }
}
