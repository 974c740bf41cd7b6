//! Second-order finite differences on the truncated plane.
//!
//! Unknowns live on interior nodes; the outer ring of nodes holds Dirichlet data.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::field::ScalarField;
use super::grid::{Grid, PlaneGrid};

/// Five-point Laplacian at interior nodes, reading Dirichlet data from the
/// boundary nodes of `values` itself. Boundary entries of the result are zero.
pub fn laplacian_dirichlet(grid: &PlaneGrid, values: &[f64]) -> Vec<f64> {
    let n = grid.n;
    let inv_h2 = 1.0 / grid.spacing().powi(2);
    let mut out = vec![0.0; n * n];
    for j in 1..n - 1 {
        for i in 1..n - 1 {
            let k = j * n + i;
            out[k] = (values[k - 1] + values[k + 1] + values[k - n] + values[k + n]
                - 4.0 * values[k])
                * inv_h2;
        }
    }
    out
}

/// Five-point Laplacian with the constant Dirichlet value `boundary` on the
/// outer ring (whatever the field stores there).
pub fn laplacian_plane(field: &ScalarField, boundary: f64) -> ScalarField {
    let grid = *field
        .grid()
        .as_plane()
        .expect("laplacian_plane requires a plane field");
    let mut v = field.values().to_vec();
    for (k, x) in v.iter_mut().enumerate() {
        if grid.is_boundary(k) {
            *x = boundary;
        }
    }
    ScalarField::from_vec(Grid::Plane(grid), laplacian_dirichlet(&grid, &v))
}

/// Discrete Dirichlet energy `sum over edges (a - b)^2`, counting every edge
/// with at least one interior endpoint. Its gradient with respect to an
/// interior value, divided by `h^2`, is minus the five-point Laplacian.
pub fn dirichlet_energy(grid: &PlaneGrid, values: &[f64]) -> f64 {
    let n = grid.n;
    let mut rows = Vec::with_capacity(n);
    for j in 0..n {
        let mut acc = 0.0;
        for i in 0..n {
            let k = j * n + i;
            let interior = !grid.is_boundary(k);
            if i + 1 < n && (interior || !grid.is_boundary(k + 1)) {
                acc += (values[k + 1] - values[k]).powi(2);
            }
            if j + 1 < n && (interior || !grid.is_boundary(k + n)) {
                acc += (values[k + n] - values[k]).powi(2);
            }
        }
        rows.push(acc);
    }
    super::summation::pairwise_sum(&rows)
}

/// Fast solver for `sigma - c * Laplacian` on interior nodes with zero
/// Dirichlet data, diagonalized by the type-I discrete sine transform.
pub struct DirichletSolver {
    grid: PlaneGrid,
    fft: Arc<dyn Fft<f64>>,
    eig: Vec<f64>,
}

impl std::fmt::Debug for DirichletSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DirichletSolver")
            .field("grid", &self.grid)
            .finish_non_exhaustive()
    }
}

impl DirichletSolver {
    pub fn new(grid: PlaneGrid) -> Self {
        let m = grid.n - 2;
        let fft = FftPlanner::new().plan_fft_forward(2 * (m + 1));
        let h2 = grid.spacing().powi(2);
        let eig = (1..=m)
            .map(|k| {
                let s = (std::f64::consts::PI * k as f64 / (2.0 * (m + 1) as f64)).sin();
                4.0 * s * s / h2
            })
            .collect();
        Self { grid, fft, eig }
    }

    /// Unnormalized DST-I of each length-`m` line in `lines`.
    fn dst_lines(&self, lines: &mut [f64], m: usize) {
        let len = 2 * (m + 1);
        let mut buf = vec![Complex64::new(0.0, 0.0); len];
        for line in lines.chunks_mut(m) {
            buf.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
            for (j, &x) in line.iter().enumerate() {
                buf[j + 1].re = x;
                buf[len - j - 1].re = -x;
            }
            self.fft.process(&mut buf);
            for (k, out) in line.iter_mut().enumerate() {
                *out = -0.5 * buf[k + 1].im;
            }
        }
    }

    fn dst2(&self, data: &mut [f64]) {
        let m = self.grid.n - 2;
        self.dst_lines(data, m);
        let mut t = vec![0.0; m * m];
        for r in 0..m {
            for c in 0..m {
                t[c * m + r] = data[r * m + c];
            }
        }
        self.dst_lines(&mut t, m);
        for r in 0..m {
            for c in 0..m {
                data[r * m + c] = t[c * m + r];
            }
        }
    }

    /// Applies `(sigma - c * Laplacian)^{-1}` to the interior of `values`;
    /// boundary entries of the result are zero.
    pub fn solve_shifted(&self, values: &[f64], c: f64, sigma: f64) -> Vec<f64> {
        let n = self.grid.n;
        let m = n - 2;
        let mut data = vec![0.0; m * m];
        for j in 0..m {
            for i in 0..m {
                data[j * m + i] = values[(j + 1) * n + i + 1];
            }
        }
        self.dst2(&mut data);
        for j in 0..m {
            for i in 0..m {
                data[j * m + i] /= sigma + c * (self.eig[i] + self.eig[j]);
            }
        }
        self.dst2(&mut data);
        let scale = (2.0 / (m + 1) as f64).powi(2);
        let mut out = vec![0.0; n * n];
        for j in 0..m {
            for i in 0..m {
                out[(j + 1) * n + i + 1] = data[j * m + i] * scale;
            }
        }
        out
    }
}
