//! Periodic grid and FFT helpers.
//!
//! Convention: the forward transform is unnormalized, the inverse carries
//! `1/Nx`. The Nyquist mode has no signed wavenumber on a real grid; every
//! operator here treats it as untransported (derivatives zero it, shifts and
//! propagators leave only the non-transport part acting on it).

use std::cell::RefCell;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Relative tolerance on the imaginary part left after an inverse transform.
pub const IMAG_TOL: f64 = 1e-10;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Uniform periodic grid on `[0, length)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicGrid {
    pub nx: usize,
    pub length: f64,
}

impl PeriodicGrid {
    pub fn new(nx: usize, length: f64) -> Result<Self> {
        if nx < 2 || !nx.is_power_of_two() {
            return Err(Error::invalid("nx", format!("{nx} is not a power of two >= 2")));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::invalid("domain_length", "must be positive and finite"));
        }
        Ok(PeriodicGrid { nx, length })
    }

    pub fn dx(&self) -> f64 {
        self.length / self.nx as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.dx()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.nx).map(|j| self.x(j)).collect()
    }

    /// Signed mode number of FFT slot `j`; the Nyquist slot reports `+nx/2`.
    pub fn mode_number(&self, j: usize) -> i64 {
        if j <= self.nx / 2 {
            j as i64
        } else {
            j as i64 - self.nx as i64
        }
    }

    /// Angular wavenumber `2 pi m / L` of FFT slot `j`.
    pub fn wavenumber(&self, j: usize) -> f64 {
        2.0 * PI * self.mode_number(j) as f64 / self.length
    }

    pub fn is_nyquist(&self, j: usize) -> bool {
        j == self.nx / 2
    }

    /// Discrete L2 norm `(dx sum |g_j|^2)^{1/2}`.
    pub fn l2_norm(&self, g: &[f64]) -> f64 {
        (self.dx() * g.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }
}

/// Largest entry modulus of a complex matrix.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

pub fn forward(row: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = row.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()).process(&mut buf));
    buf
}

/// Inverse transform of a conjugate-symmetric spectrum; fails if the
/// imaginary residue exceeds `IMAG_TOL` relative to the signal size.
pub fn inverse(spec: &[Complex64]) -> Result<Vec<f64>> {
    let mut buf = spec.to_vec();
    let n = buf.len();
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n).process(&mut buf));
    let scale = 1.0 / n as f64;
    let mut max_re: f64 = 0.0;
    let mut max_im: f64 = 0.0;
    for z in &buf {
        max_re = max_re.max((z.re * scale).abs());
        max_im = max_im.max((z.im * scale).abs());
    }
    if max_im > IMAG_TOL * max_re.max(1.0) {
        return Err(Error::ImaginaryResidue(max_im));
    }
    Ok(buf.iter().map(|z| z.re * scale).collect())
}

/// Row-wise forward transform of a `dim x nx` array.
pub fn forward_rows(values: &DMatrix<f64>) -> CMatrix {
    let (rows, nx) = values.shape();
    let mut out = CMatrix::zeros(rows, nx);
    let mut row = vec![0.0; nx];
    for i in 0..rows {
        for (j, r) in row.iter_mut().enumerate() {
            *r = values[(i, j)];
        }
        for (j, z) in forward(&row).into_iter().enumerate() {
            out[(i, j)] = z;
        }
    }
    out
}

/// Row-wise inverse transform of a `dim x nx` spectrum.
pub fn inverse_rows(spec: &CMatrix) -> Result<DMatrix<f64>> {
    let (rows, nx) = spec.shape();
    let mut out = DMatrix::zeros(rows, nx);
    let mut row = vec![Complex64::new(0.0, 0.0); nx];
    for i in 0..rows {
        for (j, r) in row.iter_mut().enumerate() {
            *r = spec[(i, j)];
        }
        for (j, v) in inverse(&row)?.into_iter().enumerate() {
            out[(i, j)] = v;
        }
    }
    Ok(out)
}

/// Spectral derivative `d/dx` of a periodic grid function.
pub fn derivative(g: &[f64], grid: &PeriodicGrid) -> Vec<f64> {
    let mut spec = forward(g);
    for (j, z) in spec.iter_mut().enumerate() {
        if grid.is_nyquist(j) {
            *z = Complex64::new(0.0, 0.0);
        } else {
            *z *= Complex64::new(0.0, grid.wavenumber(j));
        }
    }
    inverse(&spec).expect("derivative of a real signal stays real")
}

/// Trigonometric interpolant of `g` evaluated at `x - s` (Nyquist mode left in place).
pub fn shift(g: &[f64], grid: &PeriodicGrid, s: f64) -> Vec<f64> {
    let mut spec = forward(g);
    for (j, z) in spec.iter_mut().enumerate() {
        if !grid.is_nyquist(j) {
            *z *= Complex64::from_polar(1.0, -grid.wavenumber(j) * s);
        }
    }
    inverse(&spec).expect("shift of a real signal stays real")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_non_power_of_two() {
        assert!(PeriodicGrid::new(48, 1.0).is_err());
        assert!(PeriodicGrid::new(64, 0.0).is_err());
        assert!(PeriodicGrid::new(64, 2.0).is_ok());
    }

    #[test]
    fn round_trip_is_identity() {
        let g: Vec<f64> = (0..32).map(|j| ((j * 7 % 13) as f64).sin()).collect();
        let back = inverse(&forward(&g)).unwrap();
        for (a, b) in g.iter().zip(&back) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn derivative_and_shift_of_sine() {
        let grid = PeriodicGrid::new(64, 2.0 * PI).unwrap();
        let g: Vec<f64> = grid.points().iter().map(|x| (3.0 * x).sin()).collect();
        let dg = derivative(&g, &grid);
        let sh = shift(&g, &grid, 0.4);
        for (j, x) in grid.points().iter().enumerate() {
            assert!((dg[j] - 3.0 * (3.0 * x).cos()).abs() < 1e-12);
            assert!((sh[j] - (3.0 * (x - 0.4)).sin()).abs() < 1e-13);
        }
    }

    #[test]
    fn imaginary_residue_is_reported() {
        let mut spec = vec![Complex64::new(0.0, 0.0); 8];
        spec[1] = Complex64::new(1.0, 0.0);
        assert!(matches!(inverse(&spec), Err(Error::ImaginaryResidue(_))));
    }
}
