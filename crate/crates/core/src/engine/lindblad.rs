//! Right-hand side of the squeezed-bath master equation on a truncated
//! Fock space.
//!
//! The production path is an O(dim²) stencil of the `N`/`M` form of the
//! dissipator; [`lindblad_rhs_dense`] builds the same generator from dense
//! products of the squeezed jump operator and serves as its reference.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hilbert::{ladder, DensityState, FockOperator};
use crate::protocol::BathSpec;

/// Bath constants `(γ, N, M)` as seen by the stencil.
pub type BathConstants = (f64, f64, C64);

/// Rejects baths whose stationary occupation does not fit `8 (N + 1) <= dim`.
pub fn check_bath_fits(dim: usize, n_bath: f64) -> Result<()> {
    let required = (8.0 * (n_bath + 1.0)).ceil() as usize;
    if required > dim {
        return Err(Error::TruncationInfeasible {
            what: format!("bath with stationary occupation N = {n_bath:.6}"),
            required,
            dim,
        });
    }
    Ok(())
}

/// `dρ/dt` for `H = ω a†a` and an optional squeezed thermal bath.
pub fn lindblad_rhs(state: &DensityState, omega: f64, bath: Option<&BathSpec>) -> Result<Array2<C64>> {
    let dim = state.dim();
    let consts = match bath {
        None => None,
        Some(b) => {
            b.validate()?;
            let (n, m) = b.constants(omega);
            check_bath_fits(dim, n)?;
            Some((b.gamma, n, m))
        }
    };
    let rho = state.matrix().as_standard_layout();
    let mut out = vec![C64::new(0.0, 0.0); dim * dim];
    rhs_flat(rho.as_slice().expect("standard layout"), dim, omega, consts, &mut out);
    Ok(Array2::from_shape_vec((dim, dim), out).expect("dim² entries"))
}

/// Stencil evaluation on a row-major `dim × dim` slice. Only the upper
/// triangle is computed; the lower one is its conjugate mirror.
pub(crate) fn rhs_flat(
    rho: &[C64],
    dim: usize,
    omega: f64,
    bath: Option<BathConstants>,
    out: &mut [C64],
) {
    let d = dim;
    let sq: Vec<f64> = (0..d + 3).map(|n| (n as f64).sqrt()).collect();
    let at = |i: usize, j: usize| rho[i * d + j];
    let (g_down, g_up, g_m, g_mc) = match bath {
        Some((g, n, m)) => (g * (n + 1.0), g * n, g * m, g * m.conj()),
        None => (0.0, 0.0, C64::new(0.0, 0.0), C64::new(0.0, 0.0)),
    };
    let dissipative = bath.is_some();
    // diagonal of the truncated a a†
    let e = |n: usize| if n + 1 < d { (n + 1) as f64 } else { 0.0 };
    let zero = C64::new(0.0, 0.0);

    for m in 0..d {
        for k in m..d {
            let r = at(m, k);
            let mut acc = C64::new(0.0, -omega * (m as f64 - k as f64)) * r;
            if dissipative {
                let lower = if m + 1 < d && k + 1 < d {
                    sq[m + 1] * sq[k + 1] * at(m + 1, k + 1)
                } else {
                    zero
                };
                let raise = if m >= 1 && k >= 1 { sq[m] * sq[k] * at(m - 1, k - 1) } else { zero };
                let b1 = if m >= 1 && k + 1 < d { sq[m] * sq[k + 1] * at(m - 1, k + 1) } else { zero };
                let b2 = if m >= 2 { sq[m] * sq[m - 1] * at(m - 2, k) } else { zero };
                let b3 = if k + 2 < d { sq[k + 1] * sq[k + 2] * at(m, k + 2) } else { zero };
                let c1 = if m + 1 < d && k >= 1 { sq[m + 1] * sq[k] * at(m + 1, k - 1) } else { zero };
                let c2 = if m + 2 < d { sq[m + 1] * sq[m + 2] * at(m + 2, k) } else { zero };
                let c3 = if k >= 2 { sq[k - 1] * sq[k] * at(m, k - 2) } else { zero };

                acc += g_down * (lower - 0.5 * (m + k) as f64 * r);
                acc += g_up * (raise - 0.5 * (e(m) + e(k)) * r);
                acc -= g_m * (b1 - 0.5 * (b2 + b3));
                acc -= g_mc * (c1 - 0.5 * (c2 + c3));
            }
            out[m * d + k] = acc;
            out[k * d + m] = acc.conj();
        }
        out[m * d + m].im = 0.0;
    }
}

/// Reference generator from dense products with the squeezed jump operator
/// `ã = a cosh r + a† e^{iφ} sinh r`. O(dim³); meant for tests.
pub fn lindblad_rhs_dense(
    state: &DensityState,
    omega: f64,
    bath: Option<&BathSpec>,
) -> Result<Array2<C64>> {
    let dim = state.dim();
    let (a, ad) = ladder(dim)?;
    let rho = state.matrix();
    let h = FockOperator::number(dim).scale(C64::new(omega, 0.0));
    let i = C64::new(0.0, 1.0);
    let mut out = (h.matrix().dot(rho) - rho.dot(h.matrix())).mapv(|z| -i * z);
    if let Some(b) = bath {
        b.validate()?;
        let nbar = b.nbar_at(omega);
        let jump = a
            .scale(C64::new(b.r.cosh(), 0.0))
            .add(&ad.scale(C64::from_polar(b.r.sinh(), b.phi)));
        let jump_d = jump.dagger();
        let dissipator = |l: &FockOperator, ld: &FockOperator| -> Array2<C64> {
            let ldl = ld.mul(l);
            l.matrix().dot(rho).dot(ld.matrix())
                - (ldl.matrix().dot(rho) + rho.dot(ldl.matrix())).mapv(|z| 0.5 * z)
        };
        out = out
            + dissipator(&jump, &jump_d).mapv(|z| b.gamma * (nbar + 1.0) * z)
            + dissipator(&jump_d, &jump).mapv(|z| b.gamma * nbar * z);
    }
    Ok(out)
}
