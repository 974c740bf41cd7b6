//! Fourier collocation on the periodic cell.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::field::ScalarField;
use super::grid::{Grid, TorusGrid};
use crate::error::{Error, Result};

/// Default relative tolerance on the mean of a Poisson right-hand side.
pub const POISSON_MEAN_TOL: f64 = 1e-10;

/// Cached FFT plans and wavenumber tables for one [`TorusGrid`].
///
/// Transforms are unnormalized forward, `1/N` inverse. The `k = 0` mode sits
/// at index 0 of the spectrum.
pub struct SpectralWorkspace {
    grid: TorusGrid,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
    kx2: Vec<f64>,
    ky2: Vec<f64>,
}

impl std::fmt::Debug for SpectralWorkspace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralWorkspace")
            .field("grid", &self.grid)
            .finish_non_exhaustive()
    }
}

fn wavenumbers_sq(n: usize, length: f64) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let m = if i <= n / 2 {
                i as f64
            } else {
                i as f64 - n as f64
            };
            let k = 2.0 * PI * m / length;
            k * k
        })
        .collect()
}

impl SpectralWorkspace {
    pub fn new(grid: TorusGrid) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            grid,
            row_fwd: planner.plan_fft_forward(grid.nx),
            row_inv: planner.plan_fft_inverse(grid.nx),
            col_fwd: planner.plan_fft_forward(grid.ny),
            col_inv: planner.plan_fft_inverse(grid.ny),
            kx2: wavenumbers_sq(grid.nx, grid.lx),
            ky2: wavenumbers_sq(grid.ny, grid.ly),
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    /// `|k|^2` of spectral index `(i, j)`.
    pub fn wavenumber_sq(&self, i: usize, j: usize) -> f64 {
        self.kx2[i] + self.ky2[j]
    }

    fn transform(&self, data: &mut [Complex64], rows: &dyn Fft<f64>, cols: &dyn Fft<f64>) {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        rows.process(data);
        let mut t = vec![Complex64::new(0.0, 0.0); nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                t[i * ny + j] = data[j * nx + i];
            }
        }
        cols.process(&mut t);
        for j in 0..ny {
            for i in 0..nx {
                data[j * nx + i] = t[i * ny + j];
            }
        }
    }

    /// Unnormalized forward transform of real samples.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        assert_eq!(values.len(), self.grid.len());
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut data, &*self.row_fwd, &*self.col_fwd);
        data
    }

    /// Inverse transform, keeping the real part.
    pub fn inverse_real(&self, mut spectrum: Vec<Complex64>) -> Vec<f64> {
        self.transform(&mut spectrum, &*self.row_inv, &*self.col_inv);
        let scale = 1.0 / self.grid.len() as f64;
        spectrum.into_iter().map(|c| c.re * scale).collect()
    }

    /// Multiply each Fourier mode by `symbol(|k|^2)`.
    pub fn apply_symbol(&self, values: &[f64], symbol: impl Fn(f64) -> f64) -> Vec<f64> {
        let nx = self.grid.nx;
        let mut spec = self.forward(values);
        for (idx, c) in spec.iter_mut().enumerate() {
            *c *= symbol(self.wavenumber_sq(idx % nx, idx / nx));
        }
        self.inverse_real(spec)
    }

    pub fn laplacian_values(&self, values: &[f64]) -> Vec<f64> {
        self.apply_symbol(values, |k2| -k2)
    }

    /// Spectral Laplacian: multiplication by `-|k|^2`.
    pub fn laplacian(&self, field: &ScalarField) -> ScalarField {
        ScalarField::from_vec(
            Grid::Torus(self.grid),
            self.laplacian_values(field.values()),
        )
    }

    /// `(sigma - c * Laplacian)^{-1}` applied to `values`; requires `sigma > 0`.
    pub fn solve_shifted(&self, values: &[f64], c: f64, sigma: f64) -> Vec<f64> {
        self.apply_symbol(values, |k2| 1.0 / (sigma + c * k2))
    }

    /// Inverse Laplacian on zero-mean data, without the mean check.
    pub(crate) fn invert_laplacian_unchecked(&self, values: &[f64]) -> Vec<f64> {
        let nx = self.grid.nx;
        let mut spec = self.forward(values);
        for (idx, c) in spec.iter_mut().enumerate() {
            let k2 = self.wavenumber_sq(idx % nx, idx / nx);
            *c = if idx == 0 {
                Complex64::new(0.0, 0.0)
            } else {
                *c / -k2
            };
        }
        self.inverse_real(spec)
    }

    /// Unique zero-mean `U` with `Laplacian U = rhs - mean(rhs)`.
    ///
    /// Fails with [`Error::NonZeroMeanRhs`] when `|mean(rhs)|` exceeds
    /// [`POISSON_MEAN_TOL`] times the RMS of `rhs`.
    pub fn poisson_solve_zero_mean(&self, rhs: &ScalarField) -> Result<ScalarField> {
        self.poisson_solve_with_tol(rhs, POISSON_MEAN_TOL)
    }

    pub fn poisson_solve_with_tol(&self, rhs: &ScalarField, tol: f64) -> Result<ScalarField> {
        let v = rhs.values();
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let rms = (v.iter().map(|x| x * x).sum::<f64>() / n).sqrt();
        if mean.abs() > tol * rms {
            return Err(Error::NonZeroMeanRhs {
                mean,
                tol: tol * rms,
            });
        }
        Ok(ScalarField::from_vec(
            Grid::Torus(self.grid),
            self.invert_laplacian_unchecked(v),
        ))
    }
}

/// Convenience wrapper that plans a workspace for one call.
pub fn laplacian_torus(field: &ScalarField) -> ScalarField {
    let grid = *field
        .grid()
        .as_torus()
        .expect("laplacian_torus requires a torus field");
    SpectralWorkspace::new(grid).laplacian(field)
}

pub fn poisson_solve_zero_mean(rhs: &ScalarField) -> Result<ScalarField> {
    let grid = *rhs
        .grid()
        .as_torus()
        .ok_or_else(|| Error::InvalidGrid("Poisson solve requires a torus grid".into()))?;
    SpectralWorkspace::new(grid).poisson_solve_zero_mean(rhs)
}
