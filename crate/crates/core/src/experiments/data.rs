//! Initial data of prescribed Sobolev regularity and the Fourier-truncation
//! regularizer.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{self, PeriodicGrid};
use crate::profile::VelocityProfile;
use crate::quadrature::VelocityRule;
use crate::system::KineticState;

/// Margin added to the decay exponent so that the data sits strictly inside `H^k`.
pub const SOBOLEV_MARGIN: f64 = 0.51;

/// Spatial regularity of the generated data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Regularity {
    /// `|c_m| = (1 + |m|)^{-(k + 0.51)}`: in `H^k` but not `H^{k+1}`.
    Sobolev { k: u32 },
    /// `|c_m| = exp(-(m / bandwidth)^2 / 2)`: an entire function.
    Analytic { bandwidth: f64 },
}

/// Separable initial data `f0(x, v) = A g(x) h(v)` with `||f0||_{L^2} = target_norm`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialDataSpec {
    pub regularity: Regularity,
    pub seed: u64,
    pub nx: usize,
    pub length: f64,
    pub velocity: VelocityProfile,
    #[serde(default = "one")]
    pub target_norm: f64,
}

fn one() -> f64 {
    1.0
}

impl InitialDataSpec {
    pub fn grid(&self) -> Result<PeriodicGrid> {
        PeriodicGrid::new(self.nx, self.length)
    }

    pub fn validate(&self, interval: (f64, f64)) -> Result<()> {
        self.grid()?;
        match self.velocity {
            VelocityProfile::Bump { .. } => self.velocity.validate(interval)?,
            _ => return Err(Error::invalid("velocity", "initial data needs a bump profile")),
        }
        if let Regularity::Analytic { bandwidth } = self.regularity {
            if !(bandwidth > 0.0) {
                return Err(Error::invalid("bandwidth", "must be positive"));
            }
        }
        if !(self.target_norm > 0.0) || !self.target_norm.is_finite() {
            return Err(Error::invalid("target_norm", "must be positive and finite"));
        }
        Ok(())
    }

    /// Modulus of the Fourier coefficient of mode number `m`.
    pub fn coefficient_modulus(&self, m: i64) -> f64 {
        let m = m.unsigned_abs() as f64;
        match self.regularity {
            Regularity::Sobolev { k } => (1.0 + m).powf(-(k as f64 + SOBOLEV_MARGIN)),
            Regularity::Analytic { bandwidth } => (-0.5 * (m / bandwidth).powi(2)).exp(),
        }
    }
}

/// Unnormalized spatial profile `g(x_j) = sum_m c_m e^{i xi_m x_j}`.
///
/// Phases are drawn in order of increasing `|m|` from a seeded stream, so
/// grids of different sizes share their common modes. The mean is `c_0 = 1`
/// and the Nyquist coefficient is zero.
pub fn synth_profile(spec: &InitialDataSpec) -> Result<Vec<f64>> {
    let grid = spec.grid()?;
    let nx = grid.nx;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); nx];
    coeffs[0] = Complex64::new(nx as f64, 0.0);
    for m in 1..nx / 2 {
        let theta: f64 = rng.random_range(0.0..2.0 * PI);
        let c = Complex64::from_polar(nx as f64 * spec.coefficient_modulus(m as i64), theta);
        coeffs[m] = c;
        coeffs[nx - m] = c.conj();
    }
    fourier::inverse(&coeffs)
}

/// `f0(x_j, v_m)` on `rule`, scaled to the requested discrete L2 norm.
pub fn synth_initial_data(spec: &InitialDataSpec, rule: Arc<VelocityRule>) -> Result<KineticState> {
    spec.validate(rule.interval)?;
    let grid = spec.grid()?;
    let g = synth_profile(spec)?;
    let mut state = KineticState::product(grid, rule, &g, |v| spec.velocity.eval(v))?;
    let norm = state.l2_norm();
    if !(norm > 0.0) {
        return Err(Error::invalid("velocity", "bump vanishes at every velocity node"));
    }
    state.values *= spec.target_norm / norm;
    Ok(state)
}

/// Angular wavenumber magnitude of FFT slot `j`, Nyquist included.
fn abs_wavenumber(grid: &PeriodicGrid, j: usize) -> f64 {
    grid.wavenumber(j).abs()
}

/// Zeroes every mode with `|xi| > 1 / eps`.
pub fn fourier_truncate(g: &[f64], grid: &PeriodicGrid, eps: f64) -> Result<Vec<f64>> {
    if !(eps > 0.0) {
        return Err(Error::invalid("eps", "must be positive"));
    }
    if g.len() != grid.nx {
        return Err(Error::SizeMismatch {
            expected: grid.nx,
            actual: g.len(),
        });
    }
    let mut spec = fourier::forward(g);
    for (j, z) in spec.iter_mut().enumerate() {
        if abs_wavenumber(grid, j) > 1.0 / eps {
            *z = Complex64::new(0.0, 0.0);
        }
    }
    fourier::inverse(&spec)
}

/// `||D^k g||_{L^2}` by Parseval on the discrete spectrum.
pub fn derivative_norm(g: &[f64], grid: &PeriodicGrid, k: u32) -> f64 {
    let nx = grid.nx as f64;
    let s: f64 = fourier::forward(g)
        .iter()
        .enumerate()
        .map(|(j, z)| abs_wavenumber(grid, j).powi(2 * k as i32) * z.norm_sqr())
        .sum();
    (grid.length * s / (nx * nx)).sqrt()
}

/// `sum_m (1 + |m|)^{2k} |c_m|^2` with `c_m` the normalized Fourier coefficients.
pub fn sobolev_sum(g: &[f64], grid: &PeriodicGrid, k: u32) -> f64 {
    let nx = grid.nx as f64;
    fourier::forward(g)
        .iter()
        .enumerate()
        .map(|(j, z)| (1.0 + grid.mode_number(j).unsigned_abs() as f64).powi(2 * k as i32) * z.norm_sqr() / (nx * nx))
        .sum()
}
