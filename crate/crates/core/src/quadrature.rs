//! Velocity quadrature: Gauss rules, the Chebyshev weight `rho_N`, kernel
//! moments and weighted velocity norms.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::closure::ClosureSpec;
use crate::error::{Error, Result};
use crate::profile::VelocityProfile;

/// Node count of the reference Gauss-Legendre rule.
pub const REFERENCE_NODES: usize = 200;

const NEWTON_TOL: f64 = 1e-15;
const NEWTON_MAX_ITER: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    /// Exact for polynomials of degree `<= exact_degree`.
    GaussLegendre,
    /// Exact for `R(v) / sqrt(1 - v^2)` with `deg R <= exact_degree`; spectrally
    /// accurate for integrands vanishing smoothly at `+-1`.
    GaussChebyshev,
}

/// Nodes and positive weights for integrals over a velocity interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VelocityRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub interval: (f64, f64),
    pub exact_degree: usize,
    pub kind: RuleKind,
}

impl VelocityRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&v, &w)| w * f(v)).sum()
    }

    /// `sum_m w_m v_m^i f_m` for sampled `f`.
    pub fn moment(&self, i: usize, samples: &[f64]) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .zip(samples)
            .map(|((&v, &w), &f)| w * v.powi(i as i32) * f)
            .sum()
    }

    /// Same rule type with twice as many nodes.
    pub fn refined(&self) -> Result<VelocityRule> {
        match self.kind {
            RuleKind::GaussLegendre => gauss_legendre_rule(2 * self.len(), self.interval),
            RuleKind::GaussChebyshev => gauss_chebyshev_rule(2 * self.len()),
        }
    }
}

/// Legendre polynomial `P_n(x)` and its derivative.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// `n`-point Gauss-Legendre rule on `[lo, hi]`, nodes ascending.
pub fn gauss_legendre_rule(n: usize, interval: (f64, f64)) -> Result<VelocityRule> {
    let (lo, hi) = interval;
    if n == 0 {
        return Err(Error::invalid("n", "need at least one node"));
    }
    if !(lo < hi) {
        return Err(Error::invalid("interval", "lower end must be below upper end"));
    }
    let mut ref_nodes = vec![0.0; n];
    let mut ref_weights = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut converged = false;
        for _ in 0..NEWTON_MAX_ITER {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() <= NEWTON_TOL {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NoConvergence(i));
        }
        if 2 * i + 1 == n {
            x = 0.0;
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // Newton ran from the right end; store mirrored pairs ascending.
        ref_nodes[i] = -x;
        ref_nodes[n - 1 - i] = x;
        ref_weights[i] = w;
        ref_weights[n - 1 - i] = w;
    }
    let mid = 0.5 * (lo + hi);
    let scale = 0.5 * (hi - lo);
    Ok(VelocityRule {
        nodes: ref_nodes.iter().map(|&x| mid + scale * x).collect(),
        weights: ref_weights.iter().map(|&w| scale * w).collect(),
        interval,
        exact_degree: 2 * n - 1,
        kind: RuleKind::GaussLegendre,
    })
}

/// `n`-point Gauss-Chebyshev (first kind) rule on `[-1, 1]` written as a
/// plain `dv` rule: nodes `cos((2m+1) pi / 2n)`, weights `(pi/n) sqrt(1 - v^2)`.
///
/// Nodes stay strictly inside `(-1, 1)`, and `sum_m w_m R(v_m) / rho_N(v_m)`
/// reproduces `int R / rho_N` exactly up to `deg R <= 2n - 1`.
pub fn gauss_chebyshev_rule(n: usize) -> Result<VelocityRule> {
    if n == 0 {
        return Err(Error::invalid("n", "need at least one node"));
    }
    let nodes = crate::closure::chebyshev_nodes(n - 1)
        .into_iter()
        .rev()
        .collect::<Vec<_>>();
    let weights = nodes
        .iter()
        .map(|&v: &f64| PI / n as f64 * (1.0 - v * v).sqrt())
        .collect();
    Ok(VelocityRule {
        nodes,
        weights,
        interval: (-1.0, 1.0),
        exact_degree: 2 * n - 1,
        kind: RuleKind::GaussChebyshev,
    })
}

/// The 200-node Gauss-Legendre reference rule on `interval`.
pub fn reference_rule(interval: (f64, f64)) -> VelocityRule {
    gauss_legendre_rule(REFERENCE_NODES, interval).expect("reference rule always converges")
}

/// Reference integral of `f` times `profile` over the part of `interval`
/// where the profile is supported.
pub fn reference_profile_integral(profile: &VelocityProfile, interval: (f64, f64), f: impl Fn(f64) -> f64) -> f64 {
    let Some((lo, hi)) = profile.support() else {
        return 0.0;
    };
    let (lo, hi) = (lo.max(interval.0), hi.min(interval.1));
    if !(lo < hi) {
        return 0.0;
    }
    reference_rule((lo, hi)).integrate(|v| f(v) * profile.eval(v))
}

/// `rho_N(v) = (pi / (N+1)) sqrt(1 - v^2)` on `(-1, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChebyshevWeight {
    pub order: usize,
}

impl ChebyshevWeight {
    pub fn new(order: usize) -> Self {
        ChebyshevWeight { order }
    }

    pub fn eval(&self, v: f64) -> f64 {
        if v.abs() >= 1.0 {
            0.0
        } else {
            PI / (self.order + 1) as f64 * (1.0 - v * v).sqrt()
        }
    }

    /// `int R / rho_N dv` by Gauss-Legendre in the angle variable `v = sin(theta)`,
    /// where the integrand `(N+1)/pi R(sin theta)` is smooth.
    pub fn reference_inverse_integral(&self, r: impl Fn(f64) -> f64) -> f64 {
        let rule = reference_rule((-PI / 2.0, PI / 2.0));
        (self.order + 1) as f64 / PI * rule.integrate(|t| r(t.sin()))
    }
}

/// `sum_k R(lambda_k)` for ascending polynomial coefficients `poly_coeffs`.
///
/// For the Chebyshev spectrum this equals `int R / rho_N dv` exactly when
/// `deg R <= 2N + 1`, and is only an approximation for higher degrees.
pub fn inverse_weight_quadrature(spec: &ClosureSpec, poly_coeffs: &[f64]) -> f64 {
    spec.node_polynomial(poly_coeffs).iter().sum()
}

/// `gamma_i = int v^i q(v) dv` for `i = 0..=i_max` on `rule`.
pub fn kernel_moments(q: impl Fn(f64) -> f64, rule: &VelocityRule, i_max: usize) -> Vec<f64> {
    let qs: Vec<f64> = rule.nodes.iter().map(|&v| q(v)).collect();
    (0..=i_max).map(|i| rule.moment(i, &qs)).collect()
}

fn require_chebyshev(spec: &ClosureSpec) -> Result<()> {
    if spec.is_chebyshev() {
        Ok(())
    } else {
        Err(Error::invalid(
            "eigenvalues",
            "weighted norms are only defined for the Chebyshev spectrum",
        ))
    }
}

/// `(int f^2 rho_N dv)^{1/2}` from samples of `f` at the spectrum.
///
/// Writes the integrand as `(f rho_N)^2 / rho_N` and applies the node
/// identity, so the value is exact when `(f rho_N)^2` is a polynomial of
/// degree at most `2N + 1` and an approximation otherwise.
pub fn weighted_velocity_norm(samples: &[f64], spec: &ClosureSpec) -> Result<f64> {
    if samples.len() != spec.size() {
        return Err(Error::SizeMismatch {
            expected: spec.size(),
            actual: samples.len(),
        });
    }
    require_chebyshev(spec)?;
    let rho = ChebyshevWeight::new(spec.order());
    let sum: f64 = samples
        .iter()
        .zip(spec.eigenvalues())
        .map(|(&f, &l)| {
            let t = f * rho.eval(l);
            t * t
        })
        .sum();
    Ok(sum.sqrt())
}

/// `(int f^2 rho_N dv)^{1/2}` for a general integrand, by the reference rule.
pub fn weighted_velocity_norm_reference(f: impl Fn(f64) -> f64, order: usize) -> f64 {
    let rho = ChebyshevWeight::new(order);
    reference_rule((-1.0, 1.0))
        .integrate(|v| f(v) * f(v) * rho.eval(v))
        .sqrt()
}

/// `Lambda_{N,d} = |alpha| (sum_{j<=d} sum_k lambda_k^{2j})^{1/2}`.
pub fn lambda_nd(spec: &ClosureSpec, alphas: &[f64]) -> f64 {
    let alpha_norm = alphas.iter().map(|a| a * a).sum::<f64>().sqrt();
    let s: f64 = (0..alphas.len())
        .map(|j| spec.eigenvalues().iter().map(|l| l.powi(2 * j as i32)).sum::<f64>())
        .sum();
    alpha_norm * s.sqrt()
}

/// Constants of the weighted stability estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedNorms {
    /// `(int int f0^2 rho_N dx dv)^{1/2}`.
    pub c_n_f0: f64,
    /// `Lambda_{N,d} (int q^2 rho_N dv)^{1/2} - lambda_loss`; may be negative.
    pub c_n_q: f64,
    pub lambda_n_d: f64,
}

impl WeightedNorms {
    pub fn compute(
        spec: &ClosureSpec,
        kernel: &crate::system::KernelSpec,
        f0: &crate::system::KineticState,
    ) -> Result<Self> {
        require_chebyshev(spec)?;
        let rho = ChebyshevWeight::new(spec.order());
        let rule = &f0.rule;
        let dx = f0.grid.dx();
        let mut sum = 0.0;
        for m in 0..rule.len() {
            let wr = rule.weights[m] * rho.eval(rule.nodes[m]);
            sum += wr * f0.values.column(m).iter().map(|f| f * f).sum::<f64>();
        }
        let c_n_f0 = (sum * dx).sqrt();
        let lambda_n_d = lambda_nd(spec, &kernel.alphas);
        let q2 = reference_profile_integral(&kernel.profile, kernel.interval, |v| {
            kernel.profile.eval(v) * rho.eval(v)
        });
        Ok(WeightedNorms {
            c_n_f0,
            c_n_q: lambda_n_d * q2.sqrt() - kernel.lambda_loss,
            lambda_n_d,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binomial_central_over_pow2(p: usize) -> f64 {
        // C(p, p/2) / 2^p built as a running product to avoid overflow.
        (1..=p / 2).fold(1.0, |acc, j| acc * (2 * j - 1) as f64 / (2 * j) as f64)
    }

    #[test]
    fn gauss_legendre_small_rules() {
        let r = gauss_legendre_rule(1, (-1.0, 1.0)).unwrap();
        assert_eq!(r.nodes, vec![0.0]);
        assert!((r.weights[0] - 2.0).abs() < 1e-15);
        let r = gauss_legendre_rule(2, (-1.0, 1.0)).unwrap();
        let s = 1.0 / 3f64.sqrt();
        assert!((r.nodes[0] + s).abs() < 1e-15 && (r.nodes[1] - s).abs() < 1e-15);
        assert!((r.weights[0] - 1.0).abs() < 1e-15 && (r.weights[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gauss_legendre_twenty_nodes_integrates_degree_38() {
        let r = gauss_legendre_rule(20, (-1.0, 1.0)).unwrap();
        let v = r.integrate(|x| x.powi(38));
        assert!((v - 2.0 / 39.0).abs() / (2.0 / 39.0) <= 1e-13);
    }

    #[test]
    fn gauss_legendre_weights_sum_to_length() {
        for (n, lo, hi) in [(7, -0.3, 0.9), (64, -1.0, 1.0), (200, 0.0, 0.5)] {
            let r = gauss_legendre_rule(n, (lo, hi)).unwrap();
            assert!((r.weights.iter().sum::<f64>() - (hi - lo)).abs() <= 1e-13);
            assert!(r.weights.iter().all(|&w| w > 0.0));
            assert!(r.nodes.windows(2).all(|w| w[0] < w[1]));
            let p = r.exact_degree;
            let exact = (hi.powi(p as i32 + 1) - lo.powi(p as i32 + 1)) / (p + 1) as f64;
            let approx = r.integrate(|x| x.powi(p as i32));
            assert!((approx - exact).abs() <= 1e-12 * exact.abs().max(1e-300) + 1e-15);
        }
    }

    #[test]
    fn gauss_legendre_rejects_bad_input() {
        assert!(gauss_legendre_rule(0, (-1.0, 1.0)).is_err());
        assert!(gauss_legendre_rule(4, (1.0, -1.0)).is_err());
    }

    #[test]
    fn gauss_chebyshev_is_exact_against_inverse_weight() {
        let n = 16;
        let r = gauss_chebyshev_rule(n).unwrap();
        for p in 0..2 * n {
            // int v^p / sqrt(1 - v^2) dv = pi C(p, p/2) / 2^p for even p.
            let exact = if p % 2 == 0 {
                PI * binomial_central_over_pow2(p)
            } else {
                0.0
            };
            let approx = r.integrate(|v| v.powi(p as i32) / (1.0 - v * v).sqrt());
            assert!((approx - exact).abs() <= 1e-13, "p = {p}");
        }
    }

    #[test]
    fn inverse_weight_examples() {
        let s1 = ClosureSpec::chebyshev(1);
        assert!((inverse_weight_quadrature(&s1, &[0.0, 0.0, 1.0]) - 1.0).abs() < 1e-15);
        let s0 = ClosureSpec::chebyshev(0);
        assert_eq!(inverse_weight_quadrature(&s0, &[0.0, 0.0, 1.0]), 0.0);
        let rho0 = ChebyshevWeight::new(0);
        assert!((rho0.reference_inverse_integral(|v| v * v) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn inverse_weight_degree_nine_matches_reference() {
        let spec = ClosureSpec::chebyshev(4);
        let coeffs = [0.3, -1.2, 0.7, 2.0, -0.4, 0.9, 1.1, -0.6, 0.25, 0.8];
        let node_sum = inverse_weight_quadrature(&spec, &coeffs);
        let reference =
            ChebyshevWeight::new(4).reference_inverse_integral(|v| coeffs.iter().rev().fold(0.0, |a, &c| a * v + c));
        assert!((node_sum - reference).abs() <= 1e-11);
    }

    #[test]
    fn chebyshev_weight_endpoints() {
        let rho = ChebyshevWeight::new(3);
        assert_eq!(rho.eval(1.0), 0.0);
        assert_eq!(rho.eval(-1.0), 0.0);
        assert!(rho.eval(0.999) > 0.0);
    }

    #[test]
    fn kernel_moment_examples() {
        let q = VelocityProfile::bump(0.0, 0.8, 1.0);
        let rule = reference_rule((-0.8, 0.8));
        let g = kernel_moments(|v| q.eval(v), &rule, 4);
        assert!((g[0] - 1.0).abs() < 1e-12);
        assert!(g[1].abs() < 1e-12);
        assert!(g[3].abs() < 1e-12);
        let wide = reference_rule((-1.0, 1.0));
        let doubled = gauss_legendre_rule(2 * REFERENCE_NODES, (-1.0, 1.0)).unwrap();
        let a = kernel_moments(|v| q.eval(v), &wide, 2)[2];
        let b = kernel_moments(|v| q.eval(v), &doubled, 2)[2];
        assert!((a - b).abs() <= 1e-10);
    }

    #[test]
    fn weighted_norm_examples() {
        let s1 = ClosureSpec::chebyshev(1);
        let node = weighted_velocity_norm(&[1.0, 1.0], &s1).unwrap();
        let reference = weighted_velocity_norm_reference(|_| 1.0, 1);
        assert!((node - reference).abs() / reference <= 0.05);

        let s3 = ClosureSpec::chebyshev(3);
        let rho = ChebyshevWeight::new(3);
        let p = |v: f64| 1.0 - 0.5 * v + 2.0 * v * v * v;
        let samples: Vec<f64> = s3.eigenvalues().iter().map(|&l| p(l) / rho.eval(l)).collect();
        let node = weighted_velocity_norm(&samples, &s3).unwrap();
        let reference = rho.reference_inverse_integral(|v| p(v) * p(v)).sqrt();
        assert!((node - reference).abs() <= 1e-11);

        assert_eq!(weighted_velocity_norm(&[0.0; 4], &s3).unwrap(), 0.0);
        assert!(matches!(
            weighted_velocity_norm(&[0.0; 3], &s3),
            Err(Error::SizeMismatch { .. })
        ));
    }

    #[test]
    fn lambda_n0_is_sqrt_n_plus_one() {
        for n in [0, 1, 5, 17, 64] {
            let spec = ClosureSpec::chebyshev(n);
            assert_eq!(lambda_nd(&spec, &[1.0]), ((n + 1) as f64).sqrt());
        }
    }
}
