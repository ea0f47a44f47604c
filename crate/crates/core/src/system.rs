//! The truncated moment system: kernel data, transport and collision
//! matrices, state containers and the hierarchy residual.

use std::sync::Arc;

use nalgebra::DVector;

use crate::closure::{ClosureSpec, RMatrix, SpectralDecomp};
use crate::error::{Error, Result};
use crate::fourier::{self, PeriodicGrid};
use crate::profile::VelocityProfile;
use crate::quadrature::{reference_profile_integral, VelocityRule};

/// Number of cached kernel moments `gamma_0 ..= gamma_{GAMMA_CACHE - 1}`.
pub const GAMMA_CACHE: usize = 130;

/// Collision kernel `Q(v, v*) = q(v) sum_j alpha_j v*^j` with loss rate `lambda_loss`.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelSpec {
    pub profile: VelocityProfile,
    pub alphas: Vec<f64>,
    pub lambda_loss: f64,
    pub interval: (f64, f64),
    gammas: Vec<f64>,
}

impl KernelSpec {
    pub fn new(profile: VelocityProfile, alphas: Vec<f64>, lambda_loss: f64, interval: (f64, f64)) -> Result<Self> {
        let (lo, hi) = interval;
        if !(lo < hi) || lo < -1.0 || hi > 1.0 {
            return Err(Error::invalid("interval", "must satisfy -1 <= lo < hi <= 1"));
        }
        if alphas.is_empty() || alphas.iter().any(|a| !a.is_finite()) {
            return Err(Error::invalid("alphas", "need at least one finite coefficient"));
        }
        if !(lambda_loss >= 0.0) || !lambda_loss.is_finite() {
            return Err(Error::invalid("lambda_loss", "must be finite and nonnegative"));
        }
        if matches!(profile, VelocityProfile::Flat { .. }) && !profile.is_zero() {
            return Err(Error::invalid(
                "profile",
                "a kernel profile must vanish at the ends of the interval",
            ));
        }
        profile.validate(interval)?;
        let gammas = (0..GAMMA_CACHE)
            .map(|i| reference_profile_integral(&profile, interval, |v| v.powi(i as i32)))
            .collect();
        Ok(KernelSpec {
            profile,
            alphas,
            lambda_loss,
            interval,
            gammas,
        })
    }

    /// Pure loss kernel `q = 0` on `[-1, 1]`.
    pub fn pure_loss(lambda_loss: f64) -> Result<Self> {
        KernelSpec::new(VelocityProfile::Zero, vec![1.0], lambda_loss, (-1.0, 1.0))
    }

    pub fn degree(&self) -> usize {
        self.alphas.len() - 1
    }

    pub fn q(&self, v: f64) -> f64 {
        if v < self.interval.0 || v > self.interval.1 {
            0.0
        } else {
            self.profile.eval(v)
        }
    }

    /// Reference moments `gamma_i = int v^i q dv`.
    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    /// Moments of `q` computed on `rule` instead of the reference rule.
    pub fn gammas_on(&self, rule: &VelocityRule, i_max: usize) -> Vec<f64> {
        crate::quadrature::kernel_moments(|v| self.q(v), rule, i_max)
    }

    pub fn alpha_norm(&self) -> f64 {
        self.alphas.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    /// `||q||_{L^2(I)}` by the reference rule.
    pub fn q_l2_norm(&self) -> f64 {
        reference_profile_integral(&self.profile, self.interval, |v| self.profile.eval(v)).sqrt()
    }
}

/// Companion matrix: ones on the superdiagonal, closure coefficients in the last row.
pub fn build_transport_matrix(spec: &ClosureSpec) -> RMatrix {
    let n = spec.size();
    let mut a = RMatrix::zeros(n, n);
    for i in 0..n - 1 {
        a[(i, i + 1)] = 1.0;
    }
    for (j, &c) in spec.closure_coeffs().iter().enumerate() {
        a[(n - 1, j)] = c;
    }
    a
}

/// `B_{ij} = gamma_i alpha_j [j <= d] - lambda_loss delta_ij` of size `N+1`.
pub fn build_collision_matrix(kernel: &KernelSpec, order: usize) -> Result<RMatrix> {
    collision_matrix_from(&kernel.gammas, &kernel.alphas, kernel.lambda_loss, order)
}

fn collision_matrix_from(gammas: &[f64], alphas: &[f64], lambda_loss: f64, order: usize) -> Result<RMatrix> {
    let degree = alphas.len() - 1;
    if order < degree {
        return Err(Error::TruncationBelowKernelDegree { order, degree });
    }
    if gammas.len() <= order {
        return Err(Error::SizeMismatch {
            expected: order + 1,
            actual: gammas.len(),
        });
    }
    let n = order + 1;
    Ok(RMatrix::from_fn(n, n, |i, j| {
        let gain = if j <= degree { gammas[i] * alphas[j] } else { 0.0 };
        gain - if i == j { lambda_loss } else { 0.0 }
    }))
}

/// Matrices of the closed system together with its characteristic form.
///
/// In characteristic variables `w = P^{-1} mu` the system reads
/// `w_t + diag(lambda) w_x = (c b^T - lambda_loss I) w` with
/// `c_k = int l_k(v) q(v) dv` (Lagrange basis on the spectrum) and
/// `b_k = sum_j alpha_j lambda_k^j`. Both vectors are computed without
/// forming `P^{-1}`, which keeps the propagation accurate for large `N`.
#[derive(Clone, Debug)]
pub struct SystemMatrices {
    pub closure: ClosureSpec,
    pub decomp: SpectralDecomp,
    pub a: RMatrix,
    pub b: RMatrix,
    pub lambda_loss: f64,
    pub char_source: DVector<f64>,
    pub char_coupling: DVector<f64>,
}

impl SystemMatrices {
    /// Kernel integrals by the reference rule.
    pub fn new(closure: &ClosureSpec, kernel: &KernelSpec) -> Result<Self> {
        let c: Vec<f64> = (0..closure.size())
            .map(|k| reference_profile_integral(&kernel.profile, kernel.interval, |v| closure.lagrange_basis(v)[k]))
            .collect();
        Self::assemble(closure, kernel, kernel.gammas(), c)
    }

    /// Kernel integrals on `rule`, matching the discretization of a kinetic
    /// solve on the same velocity nodes.
    pub fn on_rule(closure: &ClosureSpec, kernel: &KernelSpec, rule: &VelocityRule) -> Result<Self> {
        let gammas = kernel.gammas_on(rule, closure.order());
        let mut c = vec![0.0; closure.size()];
        for (&v, &w) in rule.nodes.iter().zip(&rule.weights) {
            let qv = kernel.q(v);
            if qv == 0.0 {
                continue;
            }
            for (ck, lk) in c.iter_mut().zip(closure.lagrange_basis(v)) {
                *ck += w * qv * lk;
            }
        }
        Self::assemble(closure, kernel, &gammas, c)
    }

    fn assemble(closure: &ClosureSpec, kernel: &KernelSpec, gammas: &[f64], c: Vec<f64>) -> Result<Self> {
        let b = collision_matrix_from(gammas, &kernel.alphas, kernel.lambda_loss, closure.order())?;
        let decomp = SpectralDecomp::new(closure)?;
        let coupling = closure.node_polynomial(&kernel.alphas);
        Ok(SystemMatrices {
            closure: closure.clone(),
            decomp,
            a: build_transport_matrix(closure),
            b,
            lambda_loss: kernel.lambda_loss,
            char_source: DVector::from_vec(c),
            char_coupling: DVector::from_vec(coupling),
        })
    }

    pub fn order(&self) -> usize {
        self.closure.order()
    }

    pub fn size(&self) -> usize {
        self.closure.size()
    }

    /// `c b^T - lambda_loss I`, the source term in characteristic variables.
    pub fn char_source_matrix(&self) -> RMatrix {
        let n = self.size();
        &self.char_source * self.char_coupling.transpose() - RMatrix::identity(n, n) * self.lambda_loss
    }
}

/// Moment fields `mu_i(x_j)`, stored `(N+1) x Nx`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentState {
    pub values: RMatrix,
    pub grid: PeriodicGrid,
    pub time: f64,
}

impl MomentState {
    pub fn new(values: RMatrix, grid: PeriodicGrid, time: f64) -> Result<Self> {
        if values.ncols() != grid.nx {
            return Err(Error::SizeMismatch {
                expected: grid.nx,
                actual: values.ncols(),
            });
        }
        Ok(MomentState { values, grid, time })
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.values.row(i).iter().copied().collect()
    }

    pub fn l2_norm(&self, i: usize) -> f64 {
        self.grid.l2_norm(&self.row(i))
    }
}

/// Samples `f(x_j, v_m)`, stored `Nx x Nv`.
#[derive(Clone, Debug, PartialEq)]
pub struct KineticState {
    pub values: RMatrix,
    pub grid: PeriodicGrid,
    pub rule: Arc<VelocityRule>,
    pub time: f64,
}

impl KineticState {
    pub fn new(values: RMatrix, grid: PeriodicGrid, rule: Arc<VelocityRule>, time: f64) -> Result<Self> {
        if values.nrows() != grid.nx || values.ncols() != rule.len() {
            return Err(Error::SizeMismatch {
                expected: grid.nx * rule.len(),
                actual: values.len(),
            });
        }
        Ok(KineticState {
            values,
            grid,
            rule,
            time,
        })
    }

    /// Separable state `g(x_j) h(v_m)`.
    pub fn product(grid: PeriodicGrid, rule: Arc<VelocityRule>, g: &[f64], h: impl Fn(f64) -> f64) -> Result<Self> {
        if g.len() != grid.nx {
            return Err(Error::SizeMismatch {
                expected: grid.nx,
                actual: g.len(),
            });
        }
        let hs: Vec<f64> = rule.nodes.iter().map(|&v| h(v)).collect();
        let values = RMatrix::from_fn(grid.nx, rule.len(), |j, m| g[j] * hs[m]);
        KineticState::new(values, grid, rule, 0.0)
    }

    /// `(int int f^2 dx dv)^{1/2}` on the grid and the velocity rule.
    pub fn l2_norm(&self) -> f64 {
        let dx = self.grid.dx();
        let s: f64 = (0..self.rule.len())
            .map(|m| self.rule.weights[m] * self.values.column(m).iter().map(|f| f * f).sum::<f64>())
            .sum();
        (s * dx).sqrt()
    }
}

/// `mu_i(x_j) = sum_m w_m v_m^i f(x_j, v_m)` for `i = 0..=order`.
pub fn moments_from_kinetic(state: &KineticState, order: usize) -> MomentState {
    let rule = &state.rule;
    let vmat = RMatrix::from_fn(rule.len(), order + 1, |m, i| {
        rule.weights[m] * rule.nodes[m].powi(i as i32)
    });
    MomentState {
        values: (&state.values * vmat).transpose(),
        grid: state.grid,
        time: state.time,
    }
}

/// Characteristic variables `w_k(x_j) = sum_m w_m l_k(v_m) f(x_j, v_m)`,
/// i.e. `P^{-1} mu` evaluated without the explicit inverse.
pub fn characteristic_from_kinetic(state: &KineticState, closure: &ClosureSpec) -> RMatrix {
    let rule = &state.rule;
    let mut lmat = RMatrix::zeros(rule.len(), closure.size());
    for m in 0..rule.len() {
        for (k, l) in closure.lagrange_basis(rule.nodes[m]).into_iter().enumerate() {
            lmat[(m, k)] = rule.weights[m] * l;
        }
    }
    (&state.values * lmat).transpose()
}

/// Moments `mu_i = sum_k lambda_k^i w_k`, `i = 0..=i_max`, from characteristic variables.
pub fn moments_from_characteristic(w: &RMatrix, closure: &ClosureSpec, i_max: usize) -> RMatrix {
    let lam = closure.eigenvalues();
    let p = RMatrix::from_fn(i_max + 1, lam.len(), |i, k| lam[k].powi(i as i32));
    p * w
}

/// Largest residual of the untruncated moment equations
/// `d_t mu_i + d_x mu_{i+1} - gamma_i sum_j alpha_j mu_j + lambda mu_i`,
/// `i < order`, over interior samples of a uniformly spaced trajectory.
///
/// Moments and `gamma_i` come from the trajectory's own velocity rule; time
/// derivatives are centered differences and `d_x` is spectral.
pub fn hierarchy_residual(trajectory: &[KineticState], kernel: &KernelSpec, order: usize) -> Result<f64> {
    if trajectory.len() < 3 {
        return Err(Error::InsufficientSamples {
            needed: 3,
            got: trajectory.len(),
        });
    }
    let first = &trajectory[0];
    let dt = trajectory[1].time - first.time;
    if !(dt > 0.0) {
        return Err(Error::invalid("trajectory", "sample times must increase"));
    }
    for (s, state) in trajectory.iter().enumerate() {
        let expected = first.time + s as f64 * dt;
        if state.grid != first.grid
            || state.rule != first.rule
            || (state.time - expected).abs() > 1e-9 * dt.max(expected.abs())
        {
            return Err(Error::GridMismatch);
        }
    }
    let top = order.max(kernel.degree());
    let gammas = kernel.gammas_on(&first.rule, top);
    let moments: Vec<MomentState> = trajectory.iter().map(|s| moments_from_kinetic(s, top)).collect();
    let grid = first.grid;
    let mut worst: f64 = 0.0;
    for s in 1..trajectory.len() - 1 {
        let (prev, cur, next) = (&moments[s - 1], &moments[s], &moments[s + 1]);
        let gain: Vec<f64> = (0..grid.nx)
            .map(|j| {
                kernel
                    .alphas
                    .iter()
                    .enumerate()
                    .map(|(jj, a)| a * cur.values[(jj, j)])
                    .sum()
            })
            .collect();
        for i in 0..order {
            let flux = fourier::derivative(&cur.row(i + 1), &grid);
            for j in 0..grid.nx {
                let dtm = (next.values[(i, j)] - prev.values[(i, j)]) / (2.0 * dt);
                let rhs = gammas[i] * gain[j] - kernel.lambda_loss * cur.values[(i, j)];
                worst = worst.max((dtm + flux[j] - rhs).abs());
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{gauss_legendre_rule, reference_rule};

    #[test]
    fn transport_matrix_examples() {
        let a = build_transport_matrix(&ClosureSpec::chebyshev(1));
        assert_eq!(a[(0, 0)], 0.0);
        assert_eq!(a[(0, 1)], 1.0);
        assert!((a[(1, 0)] - 0.5).abs() < 1e-15);
        assert!(a[(1, 1)].abs() < 1e-15);
        let a = build_transport_matrix(&ClosureSpec::chebyshev(2));
        assert!((a[(2, 1)] - 0.75).abs() < 1e-15 && a[(2, 0)].abs() < 1e-15 && a[(2, 2)].abs() < 1e-15);
    }

    #[test]
    fn collision_matrix_direct_fill() {
        let b = collision_matrix_from(&[1.0, 0.0, 1.0 / 3.0], &[1.0], 1.0, 2).unwrap();
        let expected = [[0.0, 0.0, 0.0], [0.0, -1.0, 0.0], [1.0 / 3.0, 0.0, -1.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(b[(i, j)], expected[i][j]);
            }
        }
        let k = KernelSpec::pure_loss(0.7).unwrap();
        let b = build_collision_matrix(&k, 4).unwrap();
        assert_eq!(b, RMatrix::identity(5, 5) * -0.7);
    }

    #[test]
    fn collision_matrix_rejects_low_order() {
        let k = KernelSpec::new(
            VelocityProfile::bump(0.0, 0.5, 1.0),
            vec![1.0, 0.2, 0.3],
            1.0,
            (-1.0, 1.0),
        )
        .unwrap();
        assert!(matches!(
            build_collision_matrix(&k, 1),
            Err(Error::TruncationBelowKernelDegree { order: 1, degree: 2 })
        ));
    }

    #[test]
    fn collision_matrix_reproduces_moment_right_side() {
        let alphas = vec![0.4, -1.3, 0.9];
        let k = KernelSpec::new(VelocityProfile::bump(0.1, 0.6, 1.5), alphas.clone(), 0.8, (-1.0, 1.0)).unwrap();
        let b = build_collision_matrix(&k, 5).unwrap();
        let mu = DVector::from_vec(vec![0.3, -0.2, 1.1, 0.05, -0.7, 0.4]);
        let lhs = &b * &mu;
        let gain: f64 = alphas.iter().enumerate().map(|(j, a)| a * mu[j]).sum();
        for i in 0..6 {
            let direct = k.gammas()[i] * gain - 0.8 * mu[i];
            assert!((lhs[i] - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn characteristic_source_matches_similarity_transform() {
        let k = KernelSpec::new(VelocityProfile::bump(0.2, 0.5, 1.0), vec![1.0, 0.5], 0.9, (-1.0, 1.0)).unwrap();
        let closure = ClosureSpec::chebyshev(5);
        let sys = SystemMatrices::new(&closure, &k).unwrap();
        let direct = &sys.decomp.p_inv * &sys.b * &sys.decomp.p;
        let diff = (direct - sys.char_source_matrix()).amax();
        assert!(diff < 1e-11, "{diff}");
    }

    #[test]
    fn kernel_gammas_match_kernel_moments() {
        let profile = VelocityProfile::bump(-0.1, 0.7, 2.0);
        let k = KernelSpec::new(profile.clone(), vec![1.0], 1.0, (-1.0, 1.0)).unwrap();
        let rule = reference_rule((-0.8, 0.6));
        let g = crate::quadrature::kernel_moments(|v| profile.eval(v), &rule, 10);
        for i in 0..=10 {
            assert!((g[i] - k.gammas()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn moments_of_simple_states() {
        let grid = PeriodicGrid::new(16, 4.0).unwrap();
        let rule = Arc::new(gauss_legendre_rule(64, (-1.0, 1.0)).unwrap());
        let g: Vec<f64> = grid.points().iter().map(|x| (x * 1.3).cos()).collect();
        let zero = KineticState::product(grid, rule.clone(), &g, |_| 0.0).unwrap();
        assert_eq!(moments_from_kinetic(&zero, 3).values.amax(), 0.0);

        let flat = KineticState::product(grid, rule.clone(), &g, |_| 1.0).unwrap();
        let m = moments_from_kinetic(&flat, 1);
        for j in 0..16 {
            assert!((m.values[(0, j)] - 2.0 * g[j]).abs() < 1e-13);
            assert!(m.values[(1, j)].abs() < 1e-13);
        }

        let h = VelocityProfile::bump(0.2, 0.5, 1.0);
        let sharp = Arc::new(gauss_legendre_rule(64, (-0.3, 0.7)).unwrap());
        let bump = KineticState::product(grid, sharp, &g, |v| h.eval(v)).unwrap();
        let m = moments_from_kinetic(&bump, 4);
        for i in 0..=4 {
            let reference = reference_profile_integral(&h, (-1.0, 1.0), |v| v.powi(i as i32));
            for j in 0..16 {
                assert!((m.values[(i, j)] - g[j] * reference).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn hierarchy_residual_of_zero_trajectory() {
        let grid = PeriodicGrid::new(8, 1.0).unwrap();
        let rule = Arc::new(gauss_legendre_rule(8, (-1.0, 1.0)).unwrap());
        let k = KernelSpec::pure_loss(1.0).unwrap();
        let traj: Vec<KineticState> = (0..3)
            .map(|s| KineticState::new(RMatrix::zeros(8, 8), grid, rule.clone(), s as f64 * 0.1).unwrap())
            .collect();
        assert_eq!(hierarchy_residual(&traj, &k, 3).unwrap(), 0.0);
        assert!(matches!(
            hierarchy_residual(&traj[..2], &k, 3),
            Err(Error::InsufficientSamples { needed: 3, got: 2 })
        ));
    }
}
