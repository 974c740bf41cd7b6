use serde::{Deserialize, Serialize};

use super::grid::Grid;
use super::summation::pairwise_sum_by;
use crate::error::{Error, Result};

/// Real samples of one unknown, one value per grid node in storage order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    /// Checked constructor: length must match the grid and every value must be finite.
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                actual: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_vec(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|k| {
                let (x, y) = grid.node(k);
                f(x, y)
            })
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_vec(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.len(), other.len(), "fields live on different grids");
        Self::from_vec(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Quadrature of a field: exact for trigonometric polynomials on the torus,
/// trapezoidal on the plane.
pub fn integrate(field: &ScalarField) -> f64 {
    let grid = field.grid();
    let v = field.values();
    match grid {
        Grid::Torus(g) => g.dx() * g.dy() * pairwise_sum_by(v.len(), |k| v[k]),
        Grid::Plane(_) => pairwise_sum_by(v.len(), |k| grid.quadrature_weight(k) * v[k]),
    }
}

pub fn mean(field: &ScalarField) -> f64 {
    integrate(field) / field.grid().area()
}

pub fn inner_product(a: &ScalarField, b: &ScalarField) -> f64 {
    assert_eq!(a.len(), b.len(), "fields live on different grids");
    let grid = a.grid();
    let (x, y) = (a.values(), b.values());
    match grid {
        Grid::Torus(g) => g.dx() * g.dy() * pairwise_sum_by(x.len(), |k| x[k] * y[k]),
        Grid::Plane(_) => pairwise_sum_by(x.len(), |k| grid.quadrature_weight(k) * x[k] * y[k]),
    }
}

/// L2 norm including the area element: `sqrt(integral of f^2)`.
pub fn norm_l2(field: &ScalarField) -> f64 {
    inner_product(field, field).sqrt()
}

pub fn norm_sup(field: &ScalarField) -> f64 {
    sup_abs(field.values())
}

pub(crate) fn sup_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

pub(crate) fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}
