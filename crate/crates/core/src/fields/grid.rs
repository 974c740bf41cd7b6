use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid on the periodic cell `[0, lx) x [0, ly)`.
///
/// Node `(i, j)` sits at `(i * dx, j * dy)` and is stored at index `j * nx + i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusGrid {
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
}

impl TorusGrid {
    pub fn new(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(lx.is_finite() && ly.is_finite() && lx > 0.0 && ly > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "cell lengths must be positive, got ({lx}, {ly})"
            )));
        }
        for (name, count) in [("nx", nx), ("ny", ny)] {
            if count < 8 || count % 2 != 0 {
                return Err(Error::InvalidGrid(format!(
                    "{name} must be even and at least 8, got {count}"
                )));
            }
        }
        Ok(Self { lx, ly, nx, ny })
    }

    /// Square cell of the given area.
    pub fn square(area: f64, n: usize) -> Result<Self> {
        let side = area.sqrt();
        Self::new(side, side, n, n)
    }

    pub fn dx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn node(&self, index: usize) -> (f64, f64) {
        let (i, j) = (index % self.nx, index / self.nx);
        (i as f64 * self.dx(), j as f64 * self.dy())
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        (0.0..self.lx).contains(&p[0]) && (0.0..self.ly).contains(&p[1])
    }
}

/// Uniform grid on the truncated plane `[-R, R]^2` with `n` nodes per axis,
/// endpoints included. The outer ring of nodes carries Dirichlet data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneGrid {
    pub half_width: f64,
    pub n: usize,
}

impl PlaneGrid {
    pub fn new(half_width: f64, n: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half-width must be positive, got {half_width}"
            )));
        }
        if n < 16 {
            return Err(Error::InvalidGrid(format!(
                "plane grid needs at least 16 nodes per axis, got {n}"
            )));
        }
        Ok(Self { half_width, n })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.n - 1) as f64
    }

    pub fn area(&self) -> f64 {
        4.0 * self.half_width * self.half_width
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }

    pub fn node(&self, index: usize) -> (f64, f64) {
        (self.coord(index % self.n), self.coord(index / self.n))
    }

    pub fn is_boundary(&self, index: usize) -> bool {
        let (i, j) = (index % self.n, index / self.n);
        i == 0 || j == 0 || i == self.n - 1 || j == self.n - 1
    }

    /// Open square `(-R, R)^2`.
    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0].abs() < self.half_width && p[1].abs() < self.half_width
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grid {
    Torus(TorusGrid),
    Plane(PlaneGrid),
}

impl Grid {
    pub fn len(&self) -> usize {
        match self {
            Grid::Torus(g) => g.len(),
            Grid::Plane(g) => g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn area(&self) -> f64 {
        match self {
            Grid::Torus(g) => g.area(),
            Grid::Plane(g) => g.area(),
        }
    }

    pub fn node(&self, index: usize) -> (f64, f64) {
        match self {
            Grid::Torus(g) => g.node(index),
            Grid::Plane(g) => g.node(index),
        }
    }

    /// Row length in storage order.
    pub fn row_len(&self) -> usize {
        match self {
            Grid::Torus(g) => g.nx,
            Grid::Plane(g) => g.n,
        }
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        match self {
            Grid::Torus(g) => g.contains(p),
            Grid::Plane(g) => g.contains(p),
        }
    }

    pub fn as_torus(&self) -> Option<&TorusGrid> {
        match self {
            Grid::Torus(g) => Some(g),
            Grid::Plane(_) => None,
        }
    }

    pub fn as_plane(&self) -> Option<&PlaneGrid> {
        match self {
            Grid::Plane(g) => Some(g),
            Grid::Torus(_) => None,
        }
    }

    /// Quadrature weight of each node: uniform on the torus, trapezoidal on the plane.
    pub fn quadrature_weight(&self, index: usize) -> f64 {
        match self {
            Grid::Torus(g) => g.dx() * g.dy(),
            Grid::Plane(g) => {
                let h = g.spacing();
                let (i, j) = (index % g.n, index / g.n);
                let edge = |k: usize| if k == 0 || k == g.n - 1 { 0.5 } else { 1.0 };
                h * h * edge(i) * edge(j)
            }
        }
    }
}

impl From<TorusGrid> for Grid {
    fn from(g: TorusGrid) -> Self {
        Grid::Torus(g)
    }
}

impl From<PlaneGrid> for Grid {
    fn from(g: PlaneGrid) -> Self {
        Grid::Plane(g)
    }
}
