//! Matrix exponential by scaling and squaring with diagonal Padé approximants
//! of degree 3, 5, 7, 9 or 13, selected by the 1-norm.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fourier::CMatrix;

const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.539_398_330_063_23e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
];
const THETA_13: f64 = 5.371920351148152;
const MAX_SQUARINGS: i32 = 1000;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

pub fn one_norm(m: &CMatrix) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn scaled(m: &CMatrix, s: f64) -> CMatrix {
    m.map(|z| z * s)
}

/// Numerator and denominator pieces `(U, V)` of a low-degree Padé approximant.
fn pade_low(a: &CMatrix, b: &[f64]) -> (CMatrix, CMatrix) {
    let n = a.nrows();
    let a2 = a * a;
    let mut power = CMatrix::identity(n, n);
    let mut u = CMatrix::zeros(n, n);
    let mut v = CMatrix::zeros(n, n);
    for j in 0..b.len() / 2 {
        if j > 0 {
            power = &power * &a2;
        }
        v += scaled(&power, b[2 * j]);
        u += scaled(&power, b[2 * j + 1]);
    }
    (a * u, v)
}

fn pade_13(a: &CMatrix) -> (CMatrix, CMatrix) {
    let n = a.nrows();
    let b = &B13;
    let id = CMatrix::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = scaled(&a6, b[13]) + scaled(&a4, b[11]) + scaled(&a2, b[9]);
    let u = a * (&a6 * inner_u + scaled(&a6, b[7]) + scaled(&a4, b[5]) + scaled(&a2, b[3]) + scaled(&id, b[1]));
    let inner_v = scaled(&a6, b[12]) + scaled(&a4, b[10]) + scaled(&a2, b[8]);
    let v = &a6 * inner_v + scaled(&a6, b[6]) + scaled(&a4, b[4]) + scaled(&a2, b[2]) + scaled(&id, b[0]);
    (u, v)
}

/// `exp(m)` for a complex square matrix.
pub fn matrix_exponential(m: &CMatrix) -> Result<CMatrix> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::SizeMismatch {
            expected: n,
            actual: m.ncols(),
        });
    }
    let norm = one_norm(m);
    if !norm.is_finite() {
        return Err(Error::Overflow(norm));
    }
    if n == 0 {
        return Ok(m.clone());
    }

    let (u, v, squarings) = if let Some(&(deg, _)) = THETA.iter().find(|&&(_, t)| norm <= t) {
        let b: &[f64] = match deg {
            3 => &B3,
            5 => &B5,
            7 => &B7,
            _ => &B9,
        };
        let (u, v) = pade_low(m, b);
        (u, v, 0)
    } else {
        let s = (norm / THETA_13).log2().ceil().max(0.0) as i32;
        if s > MAX_SQUARINGS {
            return Err(Error::Overflow(norm));
        }
        let (u, v) = pade_13(&scaled(m, 0.5f64.powi(s)));
        (u, v, s)
    };

    let lhs = &v - &u;
    let rhs = v + u;
    let mut r = lhs.lu().solve(&rhs).ok_or(Error::Overflow(norm))?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    if r.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Overflow(norm));
    }
    Ok(r)
}

/// `exp(t m)`.
pub fn matrix_exponential_scaled(m: &CMatrix, t: f64) -> Result<CMatrix> {
    matrix_exponential(&m.map(|z| z * Complex64::new(t, 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::max_abs;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    /// Taylor series with Kahan-compensated accumulation.
    fn taylor(m: &CMatrix, terms: usize) -> CMatrix {
        let n = m.nrows();
        let mut sum = CMatrix::identity(n, n);
        let mut comp = CMatrix::zeros(n, n);
        let mut term = CMatrix::identity(n, n);
        for k in 1..terms {
            term = (&term * m).map(|z| z / k as f64);
            for idx in 0..n * n {
                let y = term[idx] - comp[idx];
                let t = sum[idx] + y;
                comp[idx] = (t - sum[idx]) - y;
                sum[idx] = t;
            }
        }
        sum
    }

    #[test]
    fn exponential_of_zero_is_identity() {
        let e = matrix_exponential(&CMatrix::zeros(4, 4)).unwrap();
        assert_eq!(e, CMatrix::identity(4, 4));
    }

    #[test]
    fn nilpotent_series_terminates() {
        let m = CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(0.0), c(0.0)]);
        let e = matrix_exponential(&m).unwrap();
        let expected = CMatrix::from_row_slice(2, 2, &[c(1.0), c(1.0), c(0.0), c(1.0)]);
        assert!(max_abs(&(e - expected)) < 1e-15);
    }

    #[test]
    fn matches_compensated_taylor_series() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let mut m = CMatrix::from_fn(6, 6, |_, _| {
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            let norm = one_norm(&m);
            let target = rng.random_range(0.01..1.0);
            m = m.map(|z| z * (target / norm));
            let diff = max_abs(&(matrix_exponential(&m).unwrap() - taylor(&m, 60)));
            assert!(diff <= 1e-12, "{diff}");
        }
    }

    #[test]
    fn diagonal_and_skew_cases() {
        let m = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(-40.0),
            Complex64::new(0.0, 25.0),
            c(2.0),
        ]));
        let e = matrix_exponential(&m).unwrap();
        assert!((e[(0, 0)] - c((-40.0f64).exp())).norm() < 1e-28);
        assert!((e[(1, 1)] - Complex64::from_polar(1.0, 25.0)).norm() < 1e-13);
        assert!((e[(2, 2)] - c(2.0f64.exp())).norm() < 1e-14);
    }

    #[test]
    fn inverse_pair_multiplies_to_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = CMatrix::from_fn(8, 8, |_, _| {
            Complex64::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0))
        });
        let prod = matrix_exponential(&m).unwrap() * matrix_exponential(&m.map(|z| -z)).unwrap();
        assert!(max_abs(&(prod - CMatrix::identity(8, 8))) < 1e-8);
    }

    #[test]
    fn non_finite_input_overflows() {
        let m = CMatrix::from_element(2, 2, c(f64::INFINITY));
        assert!(matches!(matrix_exponential(&m), Err(Error::Overflow(_))));
    }
}
