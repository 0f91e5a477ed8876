//! Truncated Fock-space operators and density matrices.
//!
//! States live on `|0⟩ … |dim-1⟩`. Ladder operators are the exact
//! truncations of `a` and `a†`, so products such as `a a†` differ from their
//! infinite-dimensional counterparts only in the last row and column.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::analytics::nm_constants;
use crate::error::{Error, Result};
use crate::linalg;

/// Largest tolerated population above `dim - dim/8`.
pub const TAIL_MASS_LIMIT: f64 = 1e-10;

/// Dense operator on a truncated Fock space.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    matrix: Array2<C64>,
}

impl FockOperator {
    pub fn from_matrix(matrix: Array2<C64>) -> Result<Self> {
        check_square(&matrix)?;
        Ok(Self { matrix })
    }

    pub fn identity(dim: usize) -> Self {
        Self { matrix: linalg::identity(dim) }
    }

    /// `a†a`, exact under truncation.
    pub fn number(dim: usize) -> Self {
        Self {
            matrix: Array2::from_diag(&Array1::from_shape_fn(dim, |n| C64::new(n as f64, 0.0))),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn dagger(&self) -> Self {
        Self { matrix: linalg::dagger(&self.matrix) }
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self { matrix: self.matrix.dot(&other.matrix) }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { matrix: &self.matrix + &other.matrix }
    }

    pub fn scale(&self, z: C64) -> Self {
        Self { matrix: self.matrix.mapv(|x| x * z) }
    }

    pub fn commutator(&self, other: &Self) -> Self {
        Self {
            matrix: self.matrix.dot(&other.matrix) - other.matrix.dot(&self.matrix),
        }
    }

    /// Applies the operator to a ket given in the Fock basis.
    pub fn apply(&self, ket: &Array1<C64>) -> Array1<C64> {
        self.matrix.dot(ket)
    }
}

fn check_square(m: &Array2<C64>) -> Result<usize> {
    let dim = m.nrows();
    if m.ncols() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: m.ncols() });
    }
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    Ok(dim)
}

/// Truncated annihilation and creation operators, `⟨m|a|n⟩ = √n δ_{m,n-1}`.
pub fn ladder(dim: usize) -> Result<(FockOperator, FockOperator)> {
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    let mut a = Array2::zeros((dim, dim));
    for n in 1..dim {
        a[[n - 1, n]] = C64::new((n as f64).sqrt(), 0.0);
    }
    let a = FockOperator { matrix: a };
    let a_dagger = a.dagger();
    Ok((a, a_dagger))
}

/// Squeezing operator `S(ξ) = exp[(ξ* a² - ξ a†²) / 2]` with `ξ = r e^{iφ}`.
pub fn squeeze_operator(dim: usize, r: f64, phi: f64) -> Result<FockOperator> {
    if !(r >= 0.0) || !phi.is_finite() {
        return Err(Error::InvalidArgument(format!("squeezing r = {r}, phi = {phi}")));
    }
    let occupation = r.sinh().powi(2);
    if occupation > dim as f64 / 4.0 {
        return Err(Error::TruncationInfeasible {
            what: format!("squeezed vacuum with r = {r}"),
            required: (4.0 * occupation).ceil() as usize,
            dim,
        });
    }
    let (a, ad) = ladder(dim)?;
    let xi = C64::from_polar(r, phi);
    let a2 = a.mul(&a).scale(xi.conj() * 0.5);
    let ad2 = ad.mul(&ad).scale(-xi * 0.5);
    Ok(FockOperator { matrix: linalg::expm(a2.add(&ad2).matrix()) })
}

/// Displacement operator `D(α) = exp(α a† - α* a)`.
pub fn displacement_operator(dim: usize, alpha: C64) -> Result<FockOperator> {
    if !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!("displacement alpha = {alpha}")));
    }
    if alpha.norm_sqr() > dim as f64 / 4.0 {
        return Err(Error::TruncationInfeasible {
            what: format!("coherent amplitude |alpha|^2 = {}", alpha.norm_sqr()),
            required: (4.0 * alpha.norm_sqr()).ceil() as usize,
            dim,
        });
    }
    let (a, ad) = ladder(dim)?;
    let generator = ad.scale(alpha).add(&a.scale(-alpha.conj()));
    Ok(FockOperator { matrix: linalg::expm(generator.matrix()) })
}

/// Quadrature `X_φ = (e^{-iφ} a + e^{iφ} a†) / √2`.
pub fn quadrature(dim: usize, phi: f64) -> Result<FockOperator> {
    let (a, ad) = ladder(dim)?;
    let k = std::f64::consts::FRAC_1_SQRT_2;
    Ok(a
        .scale(C64::from_polar(k, -phi))
        .add(&ad.scale(C64::from_polar(k, phi))))
}

/// Smallest power-of-two dimension that holds a zero-mean Gaussian state with
/// photon number `n` and two-photon moment magnitude `m_abs`.
///
/// The base rule is `8 (n + 1)`. The Fock populations of such a state decay
/// like `(n_eff / (n_eff + 1))^k` with `n_eff = n + |m|` (the anti-squeezed
/// quadrature's thermal equivalent), so the dimension is raised until the
/// predicted population above `dim - dim/8` is below 1e-12.
pub fn recommended_dim(n: f64, m_abs: f64) -> usize {
    let base = 8.0 * (n.max(0.0) + 1.0);
    let n_eff = (n + m_abs).max(0.0);
    let tail_levels = if n_eff <= 0.0 {
        1.0
    } else {
        let ratio = n_eff / (n_eff + 1.0);
        ((1e-12 * (1.0 - ratio)).ln() / ratio.ln()).ceil()
    };
    let need = base.max(8.0 * tail_levels / 7.0).max(8.0);
    (need.ceil() as usize).next_power_of_two()
}

/// Density matrix on a truncated Fock space.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    rho: Array2<C64>,
}

impl DensityState {
    /// Wraps a matrix after checking shape, Hermiticity (1e-10) and trace (1e-8).
    pub fn new(rho: Array2<C64>) -> Result<Self> {
        check_square(&rho)?;
        let herm = linalg::max_abs(&(&rho - &linalg::dagger(&rho)));
        if herm > 1e-10 {
            return Err(Error::InvalidArgument(format!("density matrix not Hermitian ({herm:e})")));
        }
        let state = Self { rho };
        let tr = state.trace();
        if (tr - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidArgument(format!("density matrix trace {tr}")));
        }
        Ok(state)
    }

    pub(crate) fn from_raw(rho: Array2<C64>) -> Self {
        Self { rho }
    }

    pub fn vacuum(dim: usize) -> Result<Self> {
        Self::thermal(dim, 0.0)
    }

    /// Diagonal thermal state, populations ∝ (n̄ / (n̄ + 1))ⁿ renormalized
    /// on the truncated space.
    pub fn thermal(dim: usize, nbar: f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidDimension(dim));
        }
        if !(nbar >= 0.0) || !nbar.is_finite() {
            return Err(Error::InvalidArgument(format!("thermal occupation {nbar}")));
        }
        let q = nbar / (nbar + 1.0);
        let mut pops: Vec<f64> = (0..dim).map(|n| q.powi(n as i32)).collect();
        let total: f64 = pops.iter().sum();
        pops.iter_mut().for_each(|p| *p /= total);
        Ok(Self {
            rho: Array2::from_diag(&Array1::from_iter(pops.into_iter().map(|p| C64::new(p, 0.0)))),
        })
    }

    /// `|ψ⟩⟨ψ|` for a normalized ket.
    pub fn from_ket(ket: &Array1<C64>) -> Result<Self> {
        let dim = ket.len();
        if dim < 2 {
            return Err(Error::InvalidDimension(dim));
        }
        let rho = Array2::from_shape_fn((dim, dim), |(i, j)| ket[i] * ket[j].conj());
        Self::new(rho)
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.rho
    }

    pub(crate) fn matrix_mut(&mut self) -> &mut Array2<C64> {
        &mut self.rho
    }

    pub fn trace(&self) -> f64 {
        self.rho.diag().iter().map(|z| z.re).sum()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.rho.diag().iter().map(|z| z.re).collect()
    }

    /// Population on the top `dim/8` levels (at least one level).
    pub fn tail_mass(&self) -> f64 {
        let dim = self.dim();
        let start = dim - (dim / 8).max(1);
        self.rho.diag().iter().skip(start).map(|z| z.re).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        linalg::max_abs(&(&self.rho - &linalg::dagger(&self.rho)))
    }

    /// True when the smallest eigenvalue is at least `-tol`.
    pub fn is_positive(&self, tol: f64) -> bool {
        linalg::is_positive_shifted(&self.rho, tol)
    }

    /// `U ρ U†`.
    pub fn conjugate_by(&self, u: &FockOperator) -> Result<Self> {
        if u.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: u.dim() });
        }
        let rho = u.matrix.dot(&self.rho).dot(&linalg::dagger(&u.matrix));
        Ok(Self { rho })
    }
}

/// Squeezed thermal state `S(ξ) ρ_th(n̄) S(ξ)†`.
pub fn squeezed_thermal_state(dim: usize, nbar: f64, r: f64, phi: f64) -> Result<DensityState> {
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    let (n, _) = nm_constants(nbar, r, phi);
    let required = (8.0 * (n + 1.0)).ceil() as usize;
    if required > dim {
        return Err(Error::TruncationInfeasible {
            what: format!("squeezed thermal state (nbar = {nbar}, r = {r})"),
            required,
            dim,
        });
    }
    let thermal = DensityState::thermal(dim, nbar)?;
    if r == 0.0 {
        return Ok(thermal);
    }
    let s = squeeze_operator(dim, r, phi)?;
    let mut state = thermal.conjugate_by(&s)?;
    hermitize(state.matrix_mut().view_mut());
    Ok(state)
}

/// Coherent state `D(α)|0⟩⟨0|D(α)†`.
pub fn coherent_state(dim: usize, alpha: C64) -> Result<DensityState> {
    let d = displacement_operator(dim, alpha)?;
    let mut vac = Array1::zeros(dim);
    vac[0] = C64::new(1.0, 0.0);
    let ket = d.apply(&vac);
    let norm = ket.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    DensityState::from_ket(&ket.mapv(|z| z / norm))
}

/// `tr(op ρ)`.
pub fn expect(op: &FockOperator, state: &DensityState) -> Result<C64> {
    if op.dim() != state.dim() {
        return Err(Error::DimensionMismatch { expected: state.dim(), found: op.dim() });
    }
    let dim = op.dim();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..dim {
        for k in 0..dim {
            acc += op.matrix[[i, k]] * state.rho[[k, i]];
        }
    }
    Ok(acc)
}

/// Non-selective energy measurement: keeps only the Fock-basis diagonal.
pub fn dephase_energy_basis(state: &DensityState) -> DensityState {
    let diag = state.rho.diag().mapv(|z| C64::new(z.re, 0.0));
    DensityState { rho: Array2::from_diag(&diag) }
}

/// Variance of `X_φ` in `state`.
pub fn quadrature_variance(state: &DensityState, phi: f64) -> Result<f64> {
    let x = quadrature(state.dim(), phi)?;
    let mean = expect(&x, state)?.re;
    let second = expect(&x.mul(&x), state)?.re;
    Ok(second - mean * mean)
}

pub(crate) fn hermitize(mut rho: ndarray::ArrayViewMut2<C64>) {
    let dim = rho.nrows();
    for i in 0..dim {
        rho[[i, i]].im = 0.0;
        for j in i + 1..dim {
            let avg = 0.5 * (rho[[i, j]] + rho[[j, i]].conj());
            rho[[i, j]] = avg;
            rho[[j, i]] = avg.conj();
        }
    }
}
