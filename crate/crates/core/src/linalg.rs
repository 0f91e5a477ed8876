//! Dense complex linear algebra used by the Fock-space code: matrix
//! exponential (scaling and squaring with diagonal Padé approximants),
//! LU solves and a Cholesky positivity probe.

use ndarray::Array2;
use num_complex::Complex64 as C64;

/// Conjugate transpose.
pub fn dagger(m: &Array2<C64>) -> Array2<C64> {
    m.t().mapv(|z| z.conj())
}

/// Largest entry modulus.
pub fn max_abs(m: &Array2<C64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// Maximum absolute column sum.
pub fn norm_one(m: &Array2<C64>) -> f64 {
    m.columns()
        .into_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn identity(n: usize) -> Array2<C64> {
    Array2::from_diag_elem(n, C64::new(1.0, 0.0))
}

// Higham (2005) degree thresholds on the 1-norm.
const THETA_3: f64 = 1.495_585_217_958_292e-2;
const THETA_5: f64 = 2.539_398_330_063_230e-1;
const THETA_7: f64 = 9.504_178_996_162_932e-1;
const THETA_9: f64 = 2.097_847_961_257_068;
const THETA_13: f64 = 5.371_920_351_148_152;

const PADE_3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE_5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE_7: [f64; 8] = [
    17_297_280.0,
    8_648_640.0,
    1_995_840.0,
    277_200.0,
    25_200.0,
    1_512.0,
    56.0,
    1.0,
];
const PADE_9: [f64; 10] = [
    17_643_225_600.0,
    8_821_612_800.0,
    2_075_673_600.0,
    302_702_400.0,
    30_270_240.0,
    2_162_160.0,
    110_880.0,
    3_960.0,
    90.0,
    1.0,
];
const PADE_13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

/// Matrix exponential by scaling and squaring.
///
/// Low-norm inputs use the cheapest diagonal Padé approximant whose
/// backward error bound is below unit roundoff; everything else is scaled
/// into the degree-13 region and squared back.
pub fn expm(a: &Array2<C64>) -> Array2<C64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    if n == 0 {
        return Array2::zeros((0, 0));
    }
    let norm = norm_one(a);
    let eye = identity(n);

    for (theta, coeffs) in [
        (THETA_3, &PADE_3[..]),
        (THETA_5, &PADE_5[..]),
        (THETA_7, &PADE_7[..]),
        (THETA_9, &PADE_9[..]),
    ] {
        if norm <= theta {
            return pade_low(a, &eye, coeffs);
        }
    }

    let squarings = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil().max(0.0) as u32
    } else {
        0
    };
    let scaled = a.mapv(|z| z / 2f64.powi(squarings as i32));
    let mut result = pade_13(&scaled, &eye);
    for _ in 0..squarings {
        result = result.dot(&result);
    }
    result
}

fn pade_low(a: &Array2<C64>, eye: &Array2<C64>, b: &[f64]) -> Array2<C64> {
    // b has odd length m+1 with m odd: U = A * sum b[2k+1] A^{2k}, V = sum b[2k] A^{2k}
    let a2 = a.dot(a);
    let mut power = eye.clone();
    let mut u_inner: Array2<C64> = Array2::zeros(a.raw_dim());
    let mut v: Array2<C64> = Array2::zeros(a.raw_dim());
    for k in 0..b.len() / 2 {
        if k > 0 {
            power = power.dot(&a2);
        }
        u_inner.scaled_add(C64::new(b[2 * k + 1], 0.0), &power);
        v.scaled_add(C64::new(b[2 * k], 0.0), &power);
    }
    let u = a.dot(&u_inner);
    solve(&(&v - &u), &(&v + &u))
}

fn pade_13(a: &Array2<C64>, eye: &Array2<C64>) -> Array2<C64> {
    let b = |k: usize| C64::new(PADE_13[k], 0.0);
    let a2 = a.dot(a);
    let a4 = a2.dot(&a2);
    let a6 = a2.dot(&a4);

    let w1 = &a6 * b(13) + &a4 * b(11) + &a2 * b(9);
    let w2 = &a6 * b(7) + &a4 * b(5) + &a2 * b(3) + eye * b(1);
    let u = a.dot(&(a6.dot(&w1) + w2));

    let z1 = &a6 * b(12) + &a4 * b(10) + &a2 * b(8);
    let z2 = &a6 * b(6) + &a4 * b(4) + &a2 * b(2) + eye * b(0);
    let v = a6.dot(&z1) + z2;

    solve(&(&v - &u), &(&v + &u))
}

/// Solve `A X = B` by LU with partial pivoting.
///
/// Panics on an exactly singular pivot; the Padé denominators are
/// well-conditioned by construction.
pub fn solve(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    assert_eq!(n, b.nrows());
    let mut lu = a.clone();
    let mut x = b.clone();
    let m = x.ncols();

    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| lu[[i, col]].norm().total_cmp(&lu[[j, col]].norm()))
            .unwrap_or(col);
        assert!(lu[[pivot, col]].norm() > 0.0, "singular matrix in solve");
        if pivot != col {
            for j in 0..n {
                lu.swap([pivot, j], [col, j]);
            }
            for j in 0..m {
                x.swap([pivot, j], [col, j]);
            }
        }
        let diag = lu[[col, col]];
        for row in col + 1..n {
            let factor = lu[[row, col]] / diag;
            if factor == C64::new(0.0, 0.0) {
                continue;
            }
            lu[[row, col]] = factor;
            for j in col + 1..n {
                let v = lu[[col, j]];
                lu[[row, j]] -= factor * v;
            }
            for j in 0..m {
                let v = x[[col, j]];
                x[[row, j]] -= factor * v;
            }
        }
    }
    for col in (0..n).rev() {
        let diag = lu[[col, col]];
        for j in 0..m {
            let mut acc = x[[col, j]];
            for k in col + 1..n {
                acc -= lu[[col, k]] * x[[k, j]];
            }
            x[[col, j]] = acc / diag;
        }
    }
    x
}

/// Returns true when the Hermitian matrix `h + shift * I` admits a Cholesky
/// factorization, i.e. every eigenvalue of `h` is above `-shift`.
pub fn is_positive_shifted(h: &Array2<C64>, shift: f64) -> bool {
    let n = h.nrows();
    let mut l: Array2<C64> = Array2::zeros((n, n));
    for j in 0..n {
        let mut d = h[[j, j]].re + shift;
        for k in 0..j {
            d -= l[[j, k]].norm_sqr();
        }
        if !(d > 0.0) {
            return false;
        }
        let d = d.sqrt();
        l[[j, j]] = C64::new(d, 0.0);
        for i in j + 1..n {
            let mut acc = h[[i, j]];
            for k in 0..j {
                acc -= l[[i, k]] * l[[j, k]].conj();
            }
            l[[i, j]] = acc / d;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    // Plain Taylor series with many terms; only trustworthy for small norms.
    fn taylor_expm(a: &Array2<C64>, terms: usize) -> Array2<C64> {
        let mut result = identity(a.nrows());
        let mut term = identity(a.nrows());
        for k in 1..terms {
            term = term.dot(a).mapv(|z| z / k as f64);
            result = result + &term;
        }
        result
    }

    fn sample(n: usize, scale: f64) -> Array2<C64> {
        Array2::from_shape_fn((n, n), |(i, j)| {
            let x = ((i * 7 + j * 3) % 11) as f64 / 11.0 - 0.5;
            let y = ((i * 5 + j * 13) % 17) as f64 / 17.0 - 0.5;
            c(scale * x, scale * y)
        })
    }

    #[test]
    fn expm_matches_taylor_in_every_pade_regime() {
        for scale in [1e-3, 0.05, 0.2, 0.5, 1.0, 3.0] {
            let a = sample(6, scale);
            let exact = taylor_expm(&a, 80);
            let approx = expm(&a);
            assert!(max_abs(&(&exact - &approx)) < 1e-12, "scale {scale}");
        }
    }

    #[test]
    fn expm_of_diagonal_is_elementwise() {
        let a = Array2::from_diag(&ndarray::arr1(&[c(0.3, 1.0), c(-2.0, 0.5), c(5.0, -3.0)]));
        let e = expm(&a);
        for i in 0..3 {
            let want = a[[i, i]].exp();
            assert_abs_diff_eq!((e[[i, i]] - want).norm(), 0.0, epsilon = 1e-12 * want.norm());
        }
    }

    #[test]
    fn expm_of_anti_hermitian_is_unitary() {
        let h = sample(12, 4.0);
        let anti = (&h - &dagger(&h)).mapv(|z| z * 0.5);
        let u = expm(&anti);
        let err = max_abs(&(dagger(&u).dot(&u) - identity(12)));
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn expm_of_large_norm_uses_squaring() {
        // exp(t * [[0, 1], [-1, 0]]) is a rotation by t.
        let t = 40.0;
        let a = ndarray::arr2(&[[c(0.0, 0.0), c(t, 0.0)], [c(-t, 0.0), c(0.0, 0.0)]]);
        let e = expm(&a);
        assert_abs_diff_eq!(e[[0, 0]].re, t.cos(), epsilon = 1e-12);
        assert_abs_diff_eq!(e[[0, 1]].re, t.sin(), epsilon = 1e-12);
    }

    #[test]
    fn solve_recovers_known_solution() {
        let a = sample(8, 1.0) + identity(8).mapv(|z| z * 3.0);
        let x = sample(8, 0.7);
        let b = a.dot(&x);
        assert!(max_abs(&(solve(&a, &b) - &x)) < 1e-12);
    }

    #[test]
    fn cholesky_probe_detects_negative_eigenvalue() {
        let pos = ndarray::arr2(&[[c(2.0, 0.0), c(0.0, 1.0)], [c(0.0, -1.0), c(2.0, 0.0)]]);
        assert!(is_positive_shifted(&pos, 0.0));
        let neg = ndarray::arr2(&[[c(1.0, 0.0), c(0.0, 2.0)], [c(0.0, -2.0), c(1.0, 0.0)]]);
        assert!(!is_positive_shifted(&neg, 1e-8));
        assert!(is_positive_shifted(&neg, 1.0 + 1e-9));
    }
}
