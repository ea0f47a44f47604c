//! Closure spectrum and its eigenbasis.
//!
//! The closed moment system has a companion transport matrix whose
//! characteristic polynomial is fixed by the chosen wave speeds
//! `lambda_0 .. lambda_N`. This module builds that polynomial, the Vandermonde
//! eigenvector matrix `P` with its explicit inverse, the Gram matrix
//! `G = P^{-T} P^{-1}` and the polynomial basis `T~_i` whose coefficients are the
//! columns of `G`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub type RMatrix = DMatrix<f64>;

/// Relative gap below which two eigenvalues are treated as equal.
const DUPLICATE_GAP: f64 = 1e-14;
/// `|pi_i|` below this value makes the explicit inverse meaningless.
const PI_UNDERFLOW: f64 = 1e-290;

/// Chebyshev nodes `cos((2k+1) pi / (2N+2))`, `k = 0..=N`, in decreasing order.
pub fn chebyshev_nodes(order: usize) -> Vec<f64> {
    let n1 = (order + 1) as f64;
    (0..=order)
        .map(|k| {
            // Symmetric pairs are forced to be exact negatives of each other.
            let mirror = order - k;
            if mirror < k {
                -(((2 * mirror + 1) as f64) * std::f64::consts::PI / (2.0 * n1)).cos()
            } else if mirror == k {
                0.0
            } else {
                (((2 * k + 1) as f64) * std::f64::consts::PI / (2.0 * n1)).cos()
            }
        })
        .collect()
}

/// Tolerance ladder for `|P P^{-1} - I|_max`; Chebyshev spectra are the best case.
pub fn vandermonde_tolerance(order: usize) -> f64 {
    match order {
        0..=8 => 1e-12,
        9..=16 => 1e-10,
        17..=32 => 1e-7,
        _ => 1e-5,
    }
}

/// A linear closure `mu_{N+1} = sum a_i mu_i` together with its spectrum.
#[derive(Clone, Debug, PartialEq)]
pub struct ClosureSpec {
    order: usize,
    eigenvalues: Vec<f64>,
    closure_coeffs: Vec<f64>,
    /// Ascending coefficients of the monic characteristic polynomial, length `N+2`.
    charpoly_coeffs: Vec<f64>,
    /// Barycentric weights `1 / pi_k`.
    bary_weights: Vec<f64>,
}

impl ClosureSpec {
    /// The Chebyshev closure of order `N`.
    pub fn chebyshev(order: usize) -> Self {
        closure_from_roots(&chebyshev_nodes(order)).expect("Chebyshev nodes are distinct and inside [-1, 1]")
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn size(&self) -> usize {
        self.order + 1
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn closure_coeffs(&self) -> &[f64] {
        &self.closure_coeffs
    }

    pub fn charpoly_coeffs(&self) -> &[f64] {
        &self.charpoly_coeffs
    }

    /// Evaluates the characteristic polynomial from its coefficients (Horner).
    pub fn charpoly(&self, x: f64) -> f64 {
        self.charpoly_coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// True when the spectrum coincides with the Chebyshev nodes of the same order.
    pub fn is_chebyshev(&self) -> bool {
        chebyshev_nodes(self.order)
            .iter()
            .zip(&self.eigenvalues)
            .all(|(a, b)| (a - b).abs() <= 1e-14)
    }

    /// `pi_i = prod_{j != i} (lambda_i - lambda_j)`.
    pub fn node_products(&self) -> Vec<f64> {
        self.bary_weights.iter().map(|w| 1.0 / w).collect()
    }

    /// Values of the Lagrange basis `l_k(x)` on the spectrum, for every `k`.
    ///
    /// Uses the second barycentric form, so it stays accurate for large `N`
    /// where the monomial route through `P^{-1}` does not.
    pub fn lagrange_basis(&self, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.size()];
        if let Some(k) = self.eigenvalues.iter().position(|&l| l == x) {
            out[k] = 1.0;
            return out;
        }
        let mut denom = 0.0;
        for (k, (&l, &w)) in self.eigenvalues.iter().zip(&self.bary_weights).enumerate() {
            let t = w / (x - l);
            out[k] = t;
            denom += t;
        }
        out.iter_mut().for_each(|t| *t /= denom);
        out
    }

    /// `sum_j alpha_j lambda_k^j` for every node `k` (the row `alpha^T P`).
    pub fn node_polynomial(&self, coeffs: &[f64]) -> Vec<f64> {
        self.eigenvalues
            .iter()
            .map(|&l| coeffs.iter().rev().fold(0.0, |acc, &c| acc * l + c))
            .collect()
    }
}

/// Expands `prod_k (X - lambda_k)` and reads off the closure coefficients.
pub fn closure_from_roots(eigenvalues: &[f64]) -> Result<ClosureSpec> {
    if eigenvalues.is_empty() {
        return Err(Error::invalid("eigenvalues", "at least one eigenvalue is required"));
    }
    for (index, &value) in eigenvalues.iter().enumerate() {
        if !value.is_finite() || value.abs() > 1.0 {
            return Err(Error::OutOfInterval { index, value });
        }
    }
    let lo = eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    for i in 0..eigenvalues.len() {
        for j in (i + 1)..eigenvalues.len() {
            let gap = (eigenvalues[i] - eigenvalues[j]).abs();
            if gap <= DUPLICATE_GAP * span || gap == 0.0 {
                return Err(Error::DuplicateEigenvalue(i, j, gap));
            }
        }
    }

    let order = eigenvalues.len() - 1;
    // Ascending coefficients; multiply in the factors from k = N down to 0.
    let mut coeffs = vec![1.0];
    for &root in eigenvalues.iter().rev() {
        let mut next = vec![0.0; coeffs.len() + 1];
        for (p, &c) in coeffs.iter().enumerate() {
            next[p + 1] += c;
            next[p] -= root * c;
        }
        coeffs = next;
    }
    let closure_coeffs = coeffs[..=order].iter().map(|c| -c).collect();

    let mut bary_weights = Vec::with_capacity(order + 1);
    for (i, &li) in eigenvalues.iter().enumerate() {
        let pi: f64 = eigenvalues
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &lj)| li - lj)
            .product();
        bary_weights.push(1.0 / pi);
    }

    Ok(ClosureSpec {
        order,
        eigenvalues: eigenvalues.to_vec(),
        closure_coeffs,
        charpoly_coeffs: coeffs,
        bary_weights,
    })
}

/// `P_{i,j} = lambda_j^i`.
pub fn build_vandermonde(spec: &ClosureSpec) -> RMatrix {
    let n = spec.size();
    RMatrix::from_fn(n, n, |i, j| spec.eigenvalues[j].powi(i as i32))
}

/// Explicit inverse `P^{-1}_{i,j} = p~_{i,j} / pi_i`.
///
/// `p~_{i,j}` is produced by the backward recurrence `p~_{i,N} = 1`,
/// `p~_{i,j-1} = lambda_i p~_{i,j} - a_j`, i.e. synthetic division of the
/// characteristic polynomial by `X - lambda_i`.
pub fn invert_vandermonde(spec: &ClosureSpec) -> Result<RMatrix> {
    let n = spec.size();
    let a = &spec.closure_coeffs;
    let mut inv = RMatrix::zeros(n, n);
    for (i, &li) in spec.eigenvalues.iter().enumerate() {
        let pi = 1.0 / spec.bary_weights[i];
        if !(pi.abs() > PI_UNDERFLOW) || !pi.is_finite() {
            return Err(Error::IllConditioned { index: i, value: pi });
        }
        let mut p = 1.0;
        inv[(i, n - 1)] = p / pi;
        for j in (1..n).rev() {
            p = li * p - a[j];
            inv[(i, j - 1)] = p / pi;
        }
    }
    Ok(inv)
}

/// `G = P^{-T} P^{-1}`, the Gram matrix making the companion matrix self-adjoint.
pub fn gram_matrix(p_inv: &RMatrix) -> RMatrix {
    let g = p_inv.transpose() * p_inv;
    // Symmetrize to remove the rounding asymmetry of the product.
    (&g + g.transpose()) * 0.5
}

/// Vandermonde matrix, its explicit inverse, the spectrum and the Gram matrix.
#[derive(Clone, Debug)]
pub struct SpectralDecomp {
    pub p: RMatrix,
    pub p_inv: RMatrix,
    pub eigenvalues: Vec<f64>,
    pub gram: RMatrix,
}

impl SpectralDecomp {
    pub fn new(spec: &ClosureSpec) -> Result<Self> {
        let p = build_vandermonde(spec);
        let p_inv = invert_vandermonde(spec)?;
        let gram = gram_matrix(&p_inv);
        Ok(SpectralDecomp {
            p,
            p_inv,
            eigenvalues: spec.eigenvalues.clone(),
            gram,
        })
    }

    pub fn size(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// Polynomials `T~_i(X) = sum_k G_{k,i} X^k`; column `i` holds the
/// ascending monomial coefficients of `T~_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct TTildeBasis {
    pub coeffs: RMatrix,
}

impl TTildeBasis {
    pub fn len(&self) -> usize {
        self.coeffs.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.ncols() == 0
    }

    pub fn eval(&self, i: usize, x: f64) -> f64 {
        self.coeffs.column(i).iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_all(&self, x: f64) -> Vec<f64> {
        (0..self.len()).map(|i| self.eval(i, x)).collect()
    }
}

pub fn t_tilde_basis(decomp: &SpectralDecomp) -> TTildeBasis {
    TTildeBasis {
        coeffs: decomp.gram.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn chebyshev_nodes_small_orders() {
        assert_eq!(chebyshev_nodes(0), vec![0.0]);
        let n1 = chebyshev_nodes(1);
        assert!((n1[0] - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((n1[1] + FRAC_1_SQRT_2).abs() < 1e-15);
        let n2 = chebyshev_nodes(2);
        let s = 3f64.sqrt() / 2.0;
        assert!((n2[0] - s).abs() < 1e-15 && n2[1] == 0.0 && (n2[2] + s).abs() < 1e-15);
    }

    #[test]
    fn chebyshev_nodes_are_decreasing_and_symmetric() {
        for order in 0..40 {
            let nodes = chebyshev_nodes(order);
            assert!(nodes.windows(2).all(|w| w[0] > w[1]));
            assert!(nodes.iter().all(|v| v.abs() < 1.0));
            for k in 0..=order {
                assert_eq!(nodes[k], -nodes[order - k]);
            }
        }
    }

    #[test]
    fn closure_coefficients_small_cases() {
        let s = ClosureSpec::chebyshev(1);
        assert!((s.closure_coeffs()[0] - 0.5).abs() < 1e-15);
        assert!(s.closure_coeffs()[1].abs() < 1e-15);

        let s = ClosureSpec::chebyshev(2);
        let a = s.closure_coeffs();
        assert!(a[0].abs() < 1e-15 && (a[1] - 0.75).abs() < 1e-15 && a[2].abs() < 1e-15);
        assert_eq!(*s.charpoly_coeffs().last().unwrap(), 1.0);
    }

    #[test]
    fn sign_flip_relation_is_exact() {
        let s = ClosureSpec::chebyshev(9);
        for (a, c) in s.closure_coeffs().iter().zip(s.charpoly_coeffs()) {
            assert_eq!(*a, -*c);
        }
    }

    #[test]
    fn rejects_duplicates_and_out_of_interval() {
        assert!(matches!(
            closure_from_roots(&[0.5, 0.5]),
            Err(Error::DuplicateEigenvalue(0, 1, _))
        ));
        assert!(matches!(
            closure_from_roots(&[0.2, 1.5]),
            Err(Error::OutOfInterval { index: 1, .. })
        ));
        assert!(closure_from_roots(&[]).is_err());
    }

    #[test]
    fn vandermonde_small_cases() {
        let p = build_vandermonde(&ClosureSpec::chebyshev(0));
        assert_eq!(p, RMatrix::from_element(1, 1, 1.0));
        let p = build_vandermonde(&ClosureSpec::chebyshev(1));
        assert_eq!(p[(0, 0)], 1.0);
        assert!((p[(1, 1)] + FRAC_1_SQRT_2).abs() < 1e-15);
        let p = build_vandermonde(&ClosureSpec::chebyshev(2));
        assert!((p[(2, 0)] - 0.75).abs() < 1e-15 && p[(2, 1)] == 0.0 && (p[(2, 2)] - 0.75).abs() < 1e-15);
    }

    /// `P^{-1}_{i,j} = (-1)^{N-j} e_{N-j}(lambda_k, k != i) / pi_i`, with the
    /// elementary symmetric sums taken over explicit subsets.
    fn symmetric_sum_inverse(roots: &[f64]) -> RMatrix {
        let n = roots.len();
        RMatrix::from_fn(n, n, |i, j| {
            let others: Vec<f64> = roots.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, &r)| r).collect();
            let r = n - 1 - j;
            let mut e = 0.0;
            for mask in 0u32..(1 << others.len()) {
                if mask.count_ones() as usize == r {
                    e += (0..others.len()).filter(|b| mask >> b & 1 == 1).map(|b| others[b]).product::<f64>();
                }
            }
            let pi: f64 = others.iter().map(|o| roots[i] - o).product();
            if r % 2 == 1 {
                -e / pi
            } else {
                e / pi
            }
        })
    }

    #[test]
    fn horner_inverse_matches_symmetric_sum_form() {
        for order in 0..=6 {
            let spec = ClosureSpec::chebyshev(order);
            let oracle = symmetric_sum_inverse(spec.eigenvalues());
            let inv = invert_vandermonde(&spec).unwrap();
            assert!((&inv - &oracle).amax() < 1e-12 * oracle.amax(), "N = {order}");
        }
        let spec = closure_from_roots(&[0.9, 0.35, -0.1, -0.6, -0.95]).unwrap();
        let oracle = symmetric_sum_inverse(spec.eigenvalues());
        assert!((invert_vandermonde(&spec).unwrap() - &oracle).amax() < 1e-12 * oracle.amax());
    }

    #[test]
    fn inverse_two_by_two_matches_direct_inversion() {
        // Direct 2x2 inversion of [[1, 1], [r, -r]].
        let r = FRAC_1_SQRT_2;
        let det = -r - r;
        let direct = [[-r / det, -1.0 / det], [-r / det, 1.0 / det]];
        let inv = invert_vandermonde(&ClosureSpec::chebyshev(1)).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((inv[(i, j)] - direct[i][j]).abs() < 1e-15);
            }
        }
        assert!((inv[(0, 0)] - 0.5).abs() < 1e-15 && (inv[(0, 1)] - r).abs() < 1e-15);
        assert_eq!(invert_vandermonde(&ClosureSpec::chebyshev(0)).unwrap()[(0, 0)], 1.0);
    }

    #[test]
    fn gram_small_cases() {
        let d = SpectralDecomp::new(&ClosureSpec::chebyshev(0)).unwrap();
        assert_eq!(d.gram[(0, 0)], 1.0);
        let d = SpectralDecomp::new(&ClosureSpec::chebyshev(1)).unwrap();
        let expected = [[0.5, 0.0], [0.0, 1.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((d.gram[(i, j)] - expected[i][j]).abs() < 1e-15);
            }
        }
        let b = t_tilde_basis(&d);
        assert!((b.eval(0, 0.3) - 0.5).abs() < 1e-15);
        assert!((b.eval(1, 0.3) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn t_tilde_interpolates_inverse_columns() {
        for order in [0, 3, 6, 10] {
            let spec = ClosureSpec::chebyshev(order);
            let d = SpectralDecomp::new(&spec).unwrap();
            let b = t_tilde_basis(&d);
            let scale = d.p_inv.amax().max(1.0);
            for i in 0..=order {
                for (k, &l) in spec.eigenvalues().iter().enumerate() {
                    assert!((b.eval(i, l) - d.p_inv[(k, i)]).abs() <= 1e-10 * scale);
                }
            }
        }
    }

    #[test]
    fn lagrange_basis_is_cardinal() {
        let spec = ClosureSpec::chebyshev(7);
        for (k, &l) in spec.eigenvalues().iter().enumerate() {
            let row = spec.lagrange_basis(l);
            for (j, v) in row.iter().enumerate() {
                assert_eq!(*v, if j == k { 1.0 } else { 0.0 });
            }
        }
        let s: f64 = spec.lagrange_basis(0.123).iter().sum();
        assert!((s - 1.0).abs() < 1e-14);
    }

    #[test]
    fn ill_conditioned_inverse_is_reported() {
        // Forty nodes packed inside [0, 1e-8] make every pi_i underflow.
        let roots: Vec<f64> = (0..40).map(|k| k as f64 * 2.5e-10).collect();
        let spec = closure_from_roots(&roots).unwrap();
        assert!(matches!(invert_vandermonde(&spec), Err(Error::IllConditioned { .. })));
    }
}
