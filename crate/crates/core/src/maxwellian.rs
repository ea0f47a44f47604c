//! Discrete Maxwellian projection onto functions `p(v) / rho_N(v)`, `deg p <= N`.
//!
//! `M f = sum_i (int v^i f dv) T~_i(v) / rho_N(v)`. Writing
//! `sum_i mu_i T~_i(v) = sum_k l_k(v) (P^{-1} mu)_k` with the Lagrange basis
//! `l_k` of the spectrum gives the equivalent form
//! `M = diag(1/rho) L L^T W`, `L_{m,k} = l_k(v_m)`, which is what gets
//! materialized: it avoids the large entries of `G` at high order.
//!
//! On a Gauss-Chebyshev velocity rule the integrals `int l_k l_j / rho_N`
//! are reproduced exactly, so the discrete operator is an exact projection,
//! self-adjoint for the product `sum_m w_m rho_N(v_m) f_m g_m`.

use std::sync::Arc;

use crate::closure::{ClosureSpec, RMatrix, TTildeBasis};
use crate::error::{Error, Result};
use crate::quadrature::{ChebyshevWeight, VelocityRule};

#[derive(Clone, Debug)]
pub struct MaxwellianOperator {
    pub matrix: RMatrix,
    pub order: usize,
    pub rule: Arc<VelocityRule>,
    pub t_tilde: TTildeBasis,
    pub rho: ChebyshevWeight,
}

pub fn build_maxwellian(
    spec: &ClosureSpec,
    basis: &TTildeBasis,
    rule: Arc<VelocityRule>,
) -> Result<MaxwellianOperator> {
    if !spec.is_chebyshev() {
        return Err(Error::invalid(
            "eigenvalues",
            "the Maxwellian is only defined for the Chebyshev spectrum",
        ));
    }
    if basis.len() != spec.size() {
        return Err(Error::SizeMismatch {
            expected: spec.size(),
            actual: basis.len(),
        });
    }
    let nv = rule.len();
    if spec.order() + 1 > nv {
        return Err(Error::invalid(
            "nv",
            format!("{nv} velocity nodes cannot carry order {}", spec.order()),
        ));
    }
    let rho = ChebyshevWeight::new(spec.order());
    let mut inv_rho = Vec::with_capacity(nv);
    for &v in &rule.nodes {
        let r = rho.eval(v);
        if !(r > 0.0) {
            return Err(Error::NodeAtEndpoint(v));
        }
        inv_rho.push(1.0 / r);
    }
    let mut l = RMatrix::zeros(nv, spec.size());
    for (m, &v) in rule.nodes.iter().enumerate() {
        for (k, lk) in spec.lagrange_basis(v).into_iter().enumerate() {
            l[(m, k)] = lk;
        }
    }
    let mut left = l.clone();
    for (m, s) in inv_rho.iter().enumerate() {
        left.row_mut(m).scale_mut(*s);
    }
    let mut right = l.transpose();
    for (m, w) in rule.weights.iter().enumerate() {
        right.column_mut(m).scale_mut(*w);
    }
    Ok(MaxwellianOperator {
        matrix: left * right,
        order: spec.order(),
        rule,
        t_tilde: basis.clone(),
        rho,
    })
}

pub fn apply_maxwellian(op: &MaxwellianOperator, f: &[f64]) -> Result<Vec<f64>> {
    op.apply(f)
}

impl MaxwellianOperator {
    pub fn apply(&self, f: &[f64]) -> Result<Vec<f64>> {
        if f.len() != self.rule.len() {
            return Err(Error::SizeMismatch {
                expected: self.rule.len(),
                actual: f.len(),
            });
        }
        Ok(self
            .matrix
            .row_iter()
            .map(|r| r.iter().zip(f).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// The rank-`(N+1)` sum `sum_i outer(T~_i / rho, w v^i)` taken literally.
    pub fn factored_matrix(&self) -> RMatrix {
        let nv = self.rule.len();
        let mut out = RMatrix::zeros(nv, nv);
        for i in 0..=self.order {
            for (m, &v) in self.rule.nodes.iter().enumerate() {
                let left = self.t_tilde.eval(i, v) / self.rho.eval(v);
                for (mm, (&vv, &w)) in self.rule.nodes.iter().zip(&self.rule.weights).enumerate() {
                    out[(m, mm)] += left * w * vv.powi(i as i32);
                }
            }
        }
        out
    }

    /// Diagonal of the discrete weighted product, `w_m rho_N(v_m)`.
    pub fn product_weights(&self) -> Vec<f64> {
        self.rule
            .nodes
            .iter()
            .zip(&self.rule.weights)
            .map(|(&v, &w)| w * self.rho.eval(v))
            .collect()
    }

    pub fn weighted_norm(&self, f: &[f64]) -> f64 {
        self.product_weights()
            .iter()
            .zip(f)
            .map(|(w, x)| w * x * x)
            .sum::<f64>()
            .sqrt()
    }
}
