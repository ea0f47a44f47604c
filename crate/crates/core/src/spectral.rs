//! Exact-in-time evolution of the moment system, the kinetic equation and
//! the BGK model.
//!
//! Every model is linear with x-independent coefficients, so each Fourier
//! mode `xi` evolves by `exp(dt G(xi))` with `G(xi) = -i xi S + R`. Modes
//! `0..=Nx/2` are exponentiated in parallel; negative modes use
//! `G(-xi) = conj(G(xi))`, and the Nyquist mode uses `R` alone.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, RwLock};

use log::warn;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::closure::RMatrix;
use crate::error::{Error, Result};
use crate::expm::matrix_exponential;
use crate::fourier::{forward_rows, inverse_rows, CMatrix, PeriodicGrid};
use crate::maxwellian::MaxwellianOperator;
use crate::quadrature::VelocityRule;
use crate::system::{
    characteristic_from_kinetic, moments_from_characteristic, KernelSpec, KineticState, MomentState, SystemMatrices,
};

/// `t / eps` above which a BGK solve is reported as stiff.
pub const STIFF_RATIO: f64 = 1e4;

/// Generator `G(xi) = -i xi S + R` shared by all Fourier modes.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeGenerator {
    pub transport: RMatrix,
    pub source: RMatrix,
}

impl ModeGenerator {
    pub fn new(transport: RMatrix, source: RMatrix) -> Result<Self> {
        let n = transport.nrows();
        if transport.shape() != (n, n) || source.shape() != (n, n) {
            return Err(Error::SizeMismatch {
                expected: n,
                actual: source.nrows(),
            });
        }
        Ok(ModeGenerator { transport, source })
    }

    /// Moment system in companion form, `-i xi A + B`.
    pub fn moments_companion(sys: &SystemMatrices) -> Self {
        ModeGenerator {
            transport: sys.a.clone(),
            source: sys.b.clone(),
        }
    }

    /// Moment system in characteristic variables, `-i xi diag(lambda) + c b^T - lambda_loss I`.
    pub fn moments_characteristic(sys: &SystemMatrices) -> Self {
        ModeGenerator {
            transport: RMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(sys.closure.eigenvalues())),
            source: sys.char_source_matrix(),
        }
    }

    /// Discrete-velocity kinetic equation, `-i xi diag(v) + C`.
    pub fn kinetic(kernel: &KernelSpec, rule: &VelocityRule) -> Self {
        ModeGenerator {
            transport: RMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&rule.nodes)),
            source: kinetic_collision_matrix(kernel, rule),
        }
    }

    /// BGK model, `-i xi diag(v) + C + (M - I) / eps`.
    pub fn bgk(kernel: &KernelSpec, maxw: &MaxwellianOperator, eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::invalid("eps", "must be positive"));
        }
        let rule = &maxw.rule;
        let mut g = ModeGenerator::kinetic(kernel, rule);
        let n = rule.len();
        g.source += (&maxw.matrix - RMatrix::identity(n, n)) / eps;
        Ok(g)
    }

    pub fn dim(&self) -> usize {
        self.transport.nrows()
    }

    pub fn at(&self, xi: f64) -> CMatrix {
        CMatrix::from_fn(self.dim(), self.dim(), |i, j| {
            Complex64::new(self.source[(i, j)], -xi * self.transport[(i, j)])
        })
    }

    fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.transport.shape().hash(&mut h);
        for x in self.transport.iter().chain(self.source.iter()) {
            x.to_bits().hash(&mut h);
        }
        h.finish()
    }
}

/// `C_{m,m'} = q(v_m) sum_j alpha_j v_{m'}^j w_{m'} - lambda_loss delta_{m,m'}`.
pub fn kinetic_collision_matrix(kernel: &KernelSpec, rule: &VelocityRule) -> RMatrix {
    let n = rule.len();
    let q: Vec<f64> = rule.nodes.iter().map(|&v| kernel.q(v)).collect();
    let gain: Vec<f64> = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&v, &w)| w * kernel.alphas.iter().rev().fold(0.0, |acc, &a| acc * v + a))
        .collect();
    RMatrix::from_fn(n, n, |m, mm| {
        q[m] * gain[mm] - if m == mm { kernel.lambda_loss } else { 0.0 }
    })
}

/// Per-mode propagators `exp(dt G(xi_j))` for `j = 0..=Nx/2`.
#[derive(Clone, Debug)]
pub struct SpectralPropagator {
    pub grid: PeriodicGrid,
    pub dt: f64,
    modes: Vec<CMatrix>,
}

impl SpectralPropagator {
    pub fn new(generator: &ModeGenerator, grid: PeriodicGrid, dt: f64) -> Result<Self> {
        if !(dt >= 0.0) || !dt.is_finite() {
            return Err(Error::invalid("dt", "must be finite and nonnegative"));
        }
        let modes = (0..=grid.nx / 2)
            .into_par_iter()
            .map(|j| {
                let xi = if grid.is_nyquist(j) { 0.0 } else { grid.wavenumber(j) };
                let g = generator.at(xi).map(|z| z * dt);
                let mut e = matrix_exponential(&g)?;
                if grid.is_nyquist(j) {
                    e.iter_mut().for_each(|z| z.im = 0.0);
                }
                Ok(e)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SpectralPropagator { grid, dt, modes })
    }

    pub fn dim(&self) -> usize {
        self.modes[0].nrows()
    }

    /// Advances a `dim x Nx` spectrum by one step.
    pub fn apply(&self, spec: &CMatrix) -> CMatrix {
        let nx = self.grid.nx;
        let columns: Vec<Vec<Complex64>> = (0..nx)
            .into_par_iter()
            .map(|j| {
                let col = spec.column(j);
                if j <= nx / 2 {
                    (&self.modes[j] * col).iter().copied().collect()
                } else {
                    (self.modes[nx - j].map(|z| z.conj()) * col).iter().copied().collect()
                }
            })
            .collect();
        CMatrix::from_fn(spec.nrows(), nx, |i, j| columns[j][i])
    }
}

type CacheKey = (u64, u64, usize, u64);

/// Propagators keyed by generator content, step, grid size and length.
/// Concurrent readers share the lock; inserts take it exclusively.
#[derive(Debug)]
pub struct PropagatorCache {
    capacity: usize,
    entries: RwLock<HashMap<CacheKey, Arc<SpectralPropagator>>>,
}

impl Default for PropagatorCache {
    fn default() -> Self {
        PropagatorCache::new(64)
    }
}

impl PropagatorCache {
    pub fn new(capacity: usize) -> Self {
        PropagatorCache {
            capacity,
            entries: RwLock::new(HashMap::new()),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get_or_build(
        &self,
        generator: &ModeGenerator,
        grid: PeriodicGrid,
        dt: f64,
    ) -> Result<Arc<SpectralPropagator>> {
        let key = (generator.fingerprint(), dt.to_bits(), grid.nx, grid.length.to_bits());
        if let Some(p) = self.entries.read().expect("cache lock").get(&key) {
            return Ok(p.clone());
        }
        let built = Arc::new(SpectralPropagator::new(generator, grid, dt)?);
        let mut entries = self.entries.write().expect("cache lock");
        if entries.len() >= self.capacity {
            entries.clear();
        }
        Ok(entries.entry(key).or_insert(built).clone())
    }
}

fn propagator(
    generator: &ModeGenerator,
    grid: PeriodicGrid,
    dt: f64,
    cache: Option<&PropagatorCache>,
) -> Result<Arc<SpectralPropagator>> {
    match cache {
        Some(c) => c.get_or_build(generator, grid, dt),
        None => Ok(Arc::new(SpectralPropagator::new(generator, grid, dt)?)),
    }
}

/// Snapshots of a `dim x Nx` field at `t = k * horizon / steps`, `k = 0..=steps`.
pub fn propagate(
    generator: &ModeGenerator,
    initial: &RMatrix,
    grid: PeriodicGrid,
    horizon: f64,
    steps: usize,
    cache: Option<&PropagatorCache>,
) -> Result<Vec<RMatrix>> {
    if initial.nrows() != generator.dim() || initial.ncols() != grid.nx {
        return Err(Error::SizeMismatch {
            expected: generator.dim() * grid.nx,
            actual: initial.len(),
        });
    }
    if !(horizon >= 0.0) {
        return Err(Error::invalid("horizon_t", "must be nonnegative"));
    }
    let mut out = vec![initial.clone()];
    if steps == 0 || horizon == 0.0 {
        out.resize(steps + 1, initial.clone());
        return Ok(out);
    }
    let prop = propagator(generator, grid, horizon / steps as f64, cache)?;
    let mut spec = forward_rows(initial);
    for _ in 0..steps {
        spec = prop.apply(&spec);
        out.push(inverse_rows(&spec)?);
    }
    Ok(out)
}

fn sample_times(horizon: f64, steps: usize, start: f64) -> impl Iterator<Item = f64> {
    (0..=steps).map(move |k| {
        start
            + if steps == 0 {
                0.0
            } else {
                horizon * k as f64 / steps as f64
            }
    })
}

/// Moment system in companion form, `m(t) = exp(t(-i xi A + B)) m(0)` per mode.
///
/// The companion matrix is highly non-normal at large `N`; beyond `N ~ 16`
/// prefer [`moment_trajectory_from_kinetic`], which works in characteristic
/// variables.
pub fn evolve_moments(m0: &MomentState, sys: &SystemMatrices, t: f64) -> Result<MomentState> {
    let g = ModeGenerator::moments_companion(sys);
    let values = propagate(&g, &m0.values, m0.grid, t, 1, None)?
        .pop()
        .expect("two snapshots");
    MomentState::new(values, m0.grid, m0.time + t)
}

/// Moments `mu_0..=mu_i_max` of the closed system started from the moments of
/// `f0`, sampled at `steps + 1` uniform times on `[0, horizon]`.
pub fn moment_trajectory_from_kinetic(
    f0: &KineticState,
    sys: &SystemMatrices,
    horizon: f64,
    steps: usize,
    i_max: usize,
    cache: Option<&PropagatorCache>,
) -> Result<Vec<MomentState>> {
    let w0 = characteristic_from_kinetic(f0, &sys.closure);
    let g = ModeGenerator::moments_characteristic(sys);
    let snaps = propagate(&g, &w0, f0.grid, horizon, steps, cache)?;
    snaps
        .into_iter()
        .zip(sample_times(horizon, steps, f0.time))
        .map(|(w, t)| MomentState::new(moments_from_characteristic(&w, &sys.closure, i_max), f0.grid, t))
        .collect()
}

fn kinetic_snapshots(
    generator: &ModeGenerator,
    f0: &KineticState,
    horizon: f64,
    steps: usize,
    cache: Option<&PropagatorCache>,
) -> Result<Vec<KineticState>> {
    let snaps = propagate(generator, &f0.values.transpose(), f0.grid, horizon, steps, cache)?;
    snaps
        .into_iter()
        .zip(sample_times(horizon, steps, f0.time))
        .map(|(v, t)| KineticState::new(v.transpose(), f0.grid, f0.rule.clone(), t))
        .collect()
}

pub fn evolve_kinetic(f0: &KineticState, kernel: &KernelSpec, t: f64) -> Result<KineticState> {
    let g = ModeGenerator::kinetic(kernel, &f0.rule);
    Ok(kinetic_snapshots(&g, f0, t, 1, None)?.pop().expect("two snapshots"))
}

pub fn kinetic_trajectory(
    f0: &KineticState,
    kernel: &KernelSpec,
    horizon: f64,
    steps: usize,
    cache: Option<&PropagatorCache>,
) -> Result<Vec<KineticState>> {
    let g = ModeGenerator::kinetic(kernel, &f0.rule);
    kinetic_snapshots(&g, f0, horizon, steps, cache)
}

fn check_bgk(f0: &KineticState, maxw: &MaxwellianOperator, eps: f64, t: f64) -> Result<()> {
    if *f0.rule != *maxw.rule {
        return Err(Error::invalid(
            "velocity_rule",
            "Maxwellian and state use different velocity rules",
        ));
    }
    if t / eps > STIFF_RATIO {
        warn!("stiff BGK solve: t / eps = {:e}", t / eps);
    }
    Ok(())
}

pub fn evolve_bgk(
    f0: &KineticState,
    kernel: &KernelSpec,
    maxw: &MaxwellianOperator,
    eps: f64,
    t: f64,
) -> Result<KineticState> {
    let g = ModeGenerator::bgk(kernel, maxw, eps)?;
    check_bgk(f0, maxw, eps, t)?;
    Ok(kinetic_snapshots(&g, f0, t, 1, None)?.pop().expect("two snapshots"))
}

pub fn bgk_trajectory(
    f0: &KineticState,
    kernel: &KernelSpec,
    maxw: &MaxwellianOperator,
    eps: f64,
    horizon: f64,
    steps: usize,
    cache: Option<&PropagatorCache>,
) -> Result<Vec<KineticState>> {
    let g = ModeGenerator::bgk(kernel, maxw, eps)?;
    check_bgk(f0, maxw, eps, horizon)?;
    kinetic_snapshots(&g, f0, horizon, steps, cache)
}

/// One first-order upwind step in characteristic variables with an explicit
/// source term. Independent of the spectral machinery; used as a cross-check.
pub fn upwind_reference_step(m: &MomentState, sys: &SystemMatrices, dt: f64) -> Result<MomentState> {
    let grid = m.grid;
    let dx = grid.dx();
    let lam = sys.closure.eigenvalues();
    let speed = lam.iter().fold(0.0f64, |a, l| a.max(l.abs()));
    let cfl = dt * speed / dx;
    if cfl > 1.0 {
        return Err(Error::CflViolation(cfl));
    }
    if dt == 0.0 {
        return Ok(m.clone());
    }
    let w = &sys.decomp.p_inv * &m.values;
    let source = sys.char_source_matrix() * &w;
    let nx = grid.nx;
    let mut next = w.clone();
    for (k, &l) in lam.iter().enumerate() {
        let c = dt * l / dx;
        for j in 0..nx {
            let here = w[(k, j)];
            let flux = if l > 0.0 {
                here - w[(k, (j + nx - 1) % nx)]
            } else {
                w[(k, (j + 1) % nx)] - here
            };
            next[(k, j)] = here - c * flux + dt * source[(k, j)];
        }
    }
    MomentState::new(&sys.decomp.p * next, grid, m.time + dt)
}
