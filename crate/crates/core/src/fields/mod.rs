//! Grids, scalar fields, Laplacians, Poisson inversion and quadrature.

pub mod field;
pub mod grid;
pub mod plane;
pub mod spectral;
pub mod summation;

pub use field::{inner_product, integrate, mean, norm_l2, norm_sup, ScalarField};
pub use grid::{Grid, PlaneGrid, TorusGrid};
pub use plane::{laplacian_plane, DirichletSolver};
pub use spectral::{laplacian_torus, poisson_solve_zero_mean, SpectralWorkspace};

use summation::pairwise_sum_by;

/// Discrete operators of one grid, as used by the energy functionals and solvers.
///
/// On the plane only interior nodes are degrees of freedom; the "energy
/// measure" gives them weight `h^2` and the boundary ring weight zero.
#[derive(Debug)]
pub enum Operators {
    Torus(SpectralWorkspace),
    Plane(PlaneGrid, DirichletSolver),
}

impl Operators {
    pub fn new(grid: Grid) -> Self {
        match grid {
            Grid::Torus(g) => Operators::Torus(SpectralWorkspace::new(g)),
            Grid::Plane(g) => Operators::Plane(g, DirichletSolver::new(g)),
        }
    }

    pub fn grid(&self) -> Grid {
        match self {
            Operators::Torus(ws) => Grid::Torus(*ws.grid()),
            Operators::Plane(g, _) => Grid::Plane(*g),
        }
    }

    pub fn len(&self) -> usize {
        self.grid().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn laplacian(&self, values: &[f64]) -> Vec<f64> {
        match self {
            Operators::Torus(ws) => ws.laplacian_values(values),
            Operators::Plane(g, _) => plane::laplacian_dirichlet(g, values),
        }
    }

    /// `||grad x||^2` in the discretization whose L2 gradient is `-2 Laplacian x`.
    pub fn dirichlet_energy(&self, values: &[f64]) -> f64 {
        match self {
            Operators::Torus(_) => {
                let lap = self.laplacian(values);
                -self.measure_sum(values.len(), |k| values[k] * lap[k])
            }
            Operators::Plane(g, _) => plane::dirichlet_energy(g, values),
        }
    }

    /// Weight of node `k` in the energy measure.
    pub fn weight(&self, k: usize) -> f64 {
        match self {
            Operators::Torus(ws) => ws.grid().dx() * ws.grid().dy(),
            Operators::Plane(g, _) => {
                if g.is_boundary(k) {
                    0.0
                } else {
                    g.spacing().powi(2)
                }
            }
        }
    }

    pub fn is_free(&self, k: usize) -> bool {
        match self {
            Operators::Torus(_) => true,
            Operators::Plane(g, _) => !g.is_boundary(k),
        }
    }

    /// `sum_k weight(k) * f(k)` with pairwise summation.
    pub fn measure_sum(&self, len: usize, f: impl Fn(usize) -> f64) -> f64 {
        match self {
            Operators::Torus(ws) => ws.grid().dx() * ws.grid().dy() * pairwise_sum_by(len, f),
            Operators::Plane(g, _) => {
                let h2 = g.spacing().powi(2);
                h2 * pairwise_sum_by(len, |k| if g.is_boundary(k) { 0.0 } else { f(k) })
            }
        }
    }

    pub fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        self.measure_sum(a.len(), |k| a[k] * b[k])
    }

    /// `(sigma - c * Laplacian)^{-1}`, the constant-coefficient preconditioner.
    pub fn solve_shifted(&self, values: &[f64], c: f64, sigma: f64) -> Vec<f64> {
        match self {
            Operators::Torus(ws) => ws.solve_shifted(values, c, sigma),
            Operators::Plane(_, s) => s.solve_shifted(values, c, sigma),
        }
    }
}
