//! Exact first- and second-moment dynamics.
//!
//! With a quadratic Hamiltonian and jump operators linear in `a`, the means
//! `⟨a⟩`, `⟨a†a⟩` and `⟨a²⟩` obey closed linear equations:
//!
//! ```text
//! d⟨a⟩/dt   = -(iω + γ/2) ⟨a⟩
//! d⟨a†a⟩/dt = γ (N - ⟨a†a⟩)
//! d⟨a²⟩/dt  = -(2iω + γ) ⟨a²⟩ + γ M
//! ```

use std::ops::{Add, Mul};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hilbert::DensityState;
use crate::protocol::BathSpec;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MomentState {
    /// `⟨a⟩`
    pub m1: C64,
    /// `⟨a†a⟩`
    pub n: f64,
    /// `⟨a²⟩`
    pub s: C64,
}

impl Add for MomentState {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self { m1: self.m1 + o.m1, n: self.n + o.n, s: self.s + o.s }
    }
}

impl Mul<f64> for MomentState {
    type Output = Self;
    fn mul(self, k: f64) -> Self {
        Self { m1: self.m1 * k, n: self.n * k, s: self.s * k }
    }
}

impl MomentState {
    pub fn new(m1: C64, n: f64, s: C64) -> Self {
        Self { m1, n, s }
    }

    pub fn vacuum() -> Self {
        Self::default()
    }

    /// Squeezed thermal state with `⟨a†a⟩ = N`, `⟨a²⟩ = M`.
    pub fn squeezed_thermal(nbar: f64, r: f64, phi: f64) -> Self {
        let (n, s) = crate::analytics::nm_constants(nbar, r, phi);
        Self { m1: C64::new(0.0, 0.0), n, s }
    }

    pub fn is_finite(&self) -> bool {
        self.m1.is_finite() && self.n.is_finite() && self.s.is_finite()
    }

    /// Robertson-Schrödinger condition for the centred moments,
    /// `|s₀|² ≤ n₀(n₀ + 1)`, with an absolute slack `tol` plus a relative
    /// floating-point floor for very large occupations.
    pub fn is_physical(&self, tol: f64) -> bool {
        let n0 = self.n - self.m1.norm_sqr();
        let s0 = self.s - self.m1 * self.m1;
        if n0 < -1e-10 {
            return false;
        }
        let bound = n0 * (n0 + 1.0);
        s0.norm_sqr() <= bound + tol + 8.0 * f64::EPSILON * bound
    }
}

/// Moments of a density matrix, computed in O(dim).
pub fn from_density(state: &DensityState) -> MomentState {
    let rho = state.matrix();
    let dim = state.dim();
    let sq: Vec<f64> = (0..=dim).map(|n| (n as f64).sqrt()).collect();
    let mut out = MomentState::default();
    for m in 0..dim {
        out.n += m as f64 * rho[[m, m]].re;
        if m + 1 < dim {
            out.m1 += sq[m + 1] * rho[[m + 1, m]];
        }
        if m + 2 < dim {
            out.s += sq[m + 1] * sq[m + 2] * rho[[m + 2, m]];
        }
    }
    out
}

/// Right-hand side with explicit frequency for the unitary part and
/// explicit bath constants `(γ, N, M)`.
pub fn rhs_with(state: &MomentState, omega: f64, bath: Option<(f64, f64, C64)>) -> MomentState {
    let i = C64::new(0.0, 1.0);
    let mut d = MomentState {
        m1: -i * omega * state.m1,
        n: 0.0,
        s: -2.0 * i * omega * state.s,
    };
    if let Some((gamma, n_bath, m_bath)) = bath {
        d.m1 -= 0.5 * gamma * state.m1;
        d.n += gamma * (n_bath - state.n);
        d.s += gamma * (m_bath - state.s);
    }
    d
}

/// Time derivative of the moments under the squeezed-bath master equation.
pub fn rhs(state: &MomentState, omega: f64, bath: Option<&BathSpec>) -> Result<MomentState> {
    let consts = match bath {
        None => None,
        Some(b) => {
            b.validate()?;
            let (n, m) = b.constants(omega);
            Some((b.gamma, n, m))
        }
    };
    Ok(rhs_with(state, omega, consts))
}

/// Non-selective energy measurement: keeps only `⟨a†a⟩`.
pub fn measure_project(state: &MomentState) -> MomentState {
    MomentState { m1: C64::new(0.0, 0.0), n: state.n, s: C64::new(0.0, 0.0) }
}

/// Fixed point of [`rhs`]: `(0, N, γM/(γ + 2iω))`.
pub fn steady_state(omega: f64, bath: &BathSpec) -> Result<MomentState> {
    bath.validate()?;
    if bath.gamma == 0.0 {
        return Err(Error::NoSteadyState("gamma = 0 leaves the state undamped".into()));
    }
    let (n, m) = bath.constants(omega);
    Ok(MomentState {
        m1: C64::new(0.0, 0.0),
        n,
        s: if omega == 0.0 { m } else { bath.gamma * m / C64::new(bath.gamma, 2.0 * omega) },
    })
}

/// Closed-form solution for constant `omega` over time `t`.
pub fn propagate_constant(
    state: &MomentState,
    omega: f64,
    bath: Option<(f64, f64, C64)>,
    t: f64,
) -> MomentState {
    let (gamma, n_bath, m_bath) = bath.unwrap_or((0.0, 0.0, C64::new(0.0, 0.0)));
    let rot = C64::new(0.0, -omega * t).exp();
    let decay = (-gamma * t).exp();
    let m1 = state.m1 * rot * (-0.5 * gamma * t).exp();
    let n = n_bath + (state.n - n_bath) * decay;
    let rate = C64::new(gamma, 2.0 * omega);
    let s = if gamma == 0.0 {
        state.s * rot * rot
    } else {
        let s_inf = gamma * m_bath / rate;
        s_inf + (state.s - s_inf) * (-rate * t).exp()
    };
    MomentState { m1, n, s }
}

/// Free rotation by accumulated phase `theta = ∫ω dt`.
pub fn rotate(state: &MomentState, theta: f64) -> MomentState {
    let e = C64::from_polar(1.0, -theta);
    MomentState { m1: state.m1 * e, n: state.n, s: state.s * e * e }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::nm_constants;
    use crate::hilbert::{coherent_state, dephase_energy_basis, squeezed_thermal_state, DensityState};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn bath(nbar: f64, gamma: f64, r: f64, phi: f64) -> BathSpec {
        BathSpec::new(nbar, gamma, r, phi).unwrap()
    }

    #[test]
    fn from_density_reference_states() {
        let vac = from_density(&DensityState::vacuum(16).unwrap());
        assert_eq!(vac, MomentState::vacuum());

        let sq = from_density(&squeezed_thermal_state(64, 0.0, 1.0, 0.0).unwrap());
        assert!((sq.n - 1.381_097_845_541_815_7).abs() < 1e-6);
        assert!((sq.s.re + 1.813_430_203_923_509_4).abs() < 1e-6);
        assert!(sq.m1.norm() < 1e-14);

        let coh = from_density(&coherent_state(64, C64::new(2.0, 0.0)).unwrap());
        assert_abs_diff_eq!(coh.m1.re, 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(coh.n, 4.0, epsilon = 1e-9);
        assert_abs_diff_eq!(coh.s.re, 4.0, epsilon = 1e-9);
    }

    #[test]
    fn rhs_fixed_points_and_conservation() {
        let nbar = 3.0;
        let st = MomentState::new(C64::new(0.0, 0.0), nbar, C64::new(0.0, 0.0));
        let d = rhs(&st, 0.0, Some(&bath(nbar, 0.2, 0.0, 0.0))).unwrap();
        assert_eq!(d, MomentState::default());

        let closed = MomentState::new(C64::new(0.3, 0.1), 5.0, C64::new(1.0, -2.0));
        assert_eq!(rhs(&closed, 7.0, None).unwrap().n, 0.0);

        let bad = BathSpec { nbar: 1.0, gamma: -1.0, r: 0.0, phi: 0.0, occupation: Default::default() };
        assert!(matches!(rhs(&closed, 1.0, Some(&bad)), Err(Error::InvalidBath(_))));
    }

    #[test]
    fn steady_state_reference_value() {
        let b = bath(0.0, 0.01, 1.0, 0.0);
        let ss = steady_state(2.0 * PI, &b).unwrap();
        assert!((ss.s.re + 1.148_367_36e-6).abs() < 1e-13);
        assert!((ss.s.im - 1.443_080_99e-3).abs() < 1e-11);
        assert!(rhs(&ss, 2.0 * PI, Some(&b)).unwrap().s.norm() < 1e-18);

        let thermal = steady_state(2.0 * PI, &bath(2.0, 0.1, 0.0, 0.0)).unwrap();
        assert_eq!(thermal, MomentState::new(C64::new(0.0, 0.0), 2.0, C64::new(0.0, 0.0)));

        let (_, m) = nm_constants(0.5, 0.7, 1.1);
        assert_eq!(steady_state(0.0, &bath(0.5, 0.3, 0.7, 1.1)).unwrap().s, m);

        assert!(matches!(
            steady_state(1.0, &bath(0.5, 0.0, 0.7, 1.1)),
            Err(Error::NoSteadyState(_))
        ));
    }

    #[test]
    fn measurement_projection() {
        let st = MomentState::new(C64::new(0.3, 0.1), 2.0, C64::new(1.1, -0.2));
        let p = measure_project(&st);
        assert_eq!(p, MomentState::new(C64::new(0.0, 0.0), 2.0, C64::new(0.0, 0.0)));
        assert_eq!(measure_project(&p), p);

        let rho = squeezed_thermal_state(32, 0.3, 0.4, 0.5).unwrap();
        let via_fock = from_density(&dephase_energy_basis(&rho));
        assert_eq!(via_fock, measure_project(&from_density(&rho)));
    }

    #[test]
    fn closed_form_matches_rk4_on_rhs() {
        let b = (0.05, 1.3, C64::new(-0.4, 0.2));
        let omega = 3.0;
        let mut st = MomentState::new(C64::new(0.2, -0.1), 0.5, C64::new(0.1, 0.3));
        let start = st;
        let (h, steps) = (1e-3, 20_000);
        for _ in 0..steps {
            let f = |x: &MomentState| rhs_with(x, omega, Some(b));
            let k1 = f(&st);
            let k2 = f(&(st + k1 * (h / 2.0)));
            let k3 = f(&(st + k2 * (h / 2.0)));
            let k4 = f(&(st + k3 * h));
            st = st + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
        let exact = propagate_constant(&start, omega, Some(b), h * steps as f64);
        // global RK4 error ~ t (hλ)⁴ λ / 120 with λ ≈ 2ω
        assert!((st.n - exact.n).abs() < 1e-10);
        assert!((st.s - exact.s).norm() < 1e-8);
        assert!((st.m1 - exact.m1).norm() < 1e-10);
    }

    #[test]
    fn rotation_preserves_n() {
        let st = MomentState::new(C64::new(1.0, 0.0), 3.0, C64::new(2.0, 0.0));
        let r = rotate(&st, PI / 2.0);
        assert_eq!(r.n, 3.0);
        assert!((r.m1 - C64::new(0.0, -1.0)).norm() < 1e-15);
        assert!((r.s - C64::new(-2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn physicality_detects_violations() {
        assert!(MomentState::squeezed_thermal(1.0, 2.0, 0.3).is_physical(1e-8));
        assert!(MomentState::squeezed_thermal(0.0, 10.0, 0.0).is_physical(1e-8));
        assert!(!MomentState::new(C64::new(0.0, 0.0), 1.0, C64::new(2.0, 0.0)).is_physical(1e-8));
        assert!(!MomentState::new(C64::new(0.0, 0.0), -1.0, C64::new(0.0, 0.0)).is_physical(1e-8));
    }

    proptest! {
        #[test]
        fn relaxation_bound_on_n(
            n0 in 0.0f64..20.0, nbar in 0.0f64..5.0, r in 0.0f64..2.0,
            gamma in 0.001f64..1.0, t in 0.0f64..100.0,
        ) {
            let b = bath(nbar, gamma, r, 0.0);
            let (n_inf, m) = b.constants(1.0);
            let st = MomentState::new(C64::new(0.0, 0.0), n0, C64::new(0.0, 0.0));
            let out = propagate_constant(&st, 1.0, Some((gamma, n_inf, m)), t);
            prop_assert!((out.n - n_inf).abs() <= (n0 - n_inf).abs() * (-gamma * t).exp() + 1e-8);
        }

        #[test]
        fn stationary_s_is_linear_in_m(
            nbar in 0.0f64..5.0, r in 0.0f64..2.0, phi in -PI..PI, omega in 0.0f64..10.0,
        ) {
            let b = bath(nbar, 0.05, r, phi);
            let (n_bath, m) = b.constants(omega);
            let zero = MomentState::default();
            let one = propagate_constant(&zero, omega, Some((0.05, n_bath, m)), 7.0);
            let two = propagate_constant(&zero, omega, Some((0.05, n_bath, m * 2.0)), 7.0);
            prop_assert!((two.s - one.s * 2.0).norm() <= 1e-12 * (1.0 + one.s.norm()));
        }

        #[test]
        fn squeezed_thermal_moments_are_physical(nbar in 0.0f64..10.0, r in 0.0f64..10.0, phi in -PI..PI) {
            prop_assert!(MomentState::squeezed_thermal(nbar, r, phi).is_physical(1e-8));
        }
    }
}
