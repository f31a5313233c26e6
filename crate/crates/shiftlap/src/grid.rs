//! Uniform square grids on the domain (0, s)^2 and the two-level hierarchy.
//!
//! A level with index `l` carries `2^l` square cells per side of width
//! `h = s * 2^-l`. Degrees of freedom are the tensor-product Lagrange nodes
//! of order `p`, numbered lexicographically (x fastest, y-major).

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridLevel<T: Real> {
    /// Refinement index; cells_per_side = 2^level_index.
    pub level_index: u32,
    /// Polynomial order p of the tensor-product Lagrange elements (1..=3).
    pub order: usize,
    /// Side length s of the square domain.
    pub domain_size: T,
    pub cells_per_side: usize,
    /// Cell width h = s * 2^-level_index.
    pub mesh_size: T,
}

impl<T: Real> GridLevel<T> {
    pub fn new(level_index: u32, order: usize, domain_size: T) -> Result<Self> {
        if !(1..=3).contains(&order) {
            return Err(Error::config(format!(
                "element order must be 1, 2 or 3, got {order}"
            )));
        }
        if level_index < 1 {
            return Err(Error::config("level index must be at least 1"));
        }
        if level_index > 20 {
            return Err(Error::config(format!(
                "level index {level_index} is unreasonably large"
            )));
        }
        if !(domain_size > T::zero()) || !domain_size.is_finite() {
            return Err(Error::config("domain size must be positive and finite"));
        }
        let cells_per_side = 1usize << level_index;
        let mesh_size = domain_size / T::of(cells_per_side as f64);
        Ok(GridLevel {
            level_index,
            order,
            domain_size,
            cells_per_side,
            mesh_size,
        })
    }

    #[inline]
    pub fn nodes_per_side(&self) -> usize {
        self.order * self.cells_per_side + 1
    }

    #[inline]
    pub fn dof_count(&self) -> usize {
        let n = self.nodes_per_side();
        n * n
    }

    #[inline]
    pub fn node_index(&self, iy: usize, ix: usize) -> usize {
        iy * self.nodes_per_side() + ix
    }

    /// Physical coordinates of node (iy, ix).
    #[inline]
    pub fn node_coords(&self, iy: usize, ix: usize) -> (T, T) {
        let dx = self.mesh_size / T::of(self.order as f64);
        (T::of(ix as f64) * dx, T::of(iy as f64) * dx)
    }
}

/// Build the (coarse, fine) pair for a twogrid solve: the fine level at
/// `level_index` and its uniform coarsening at `level_index - 1`.
pub fn build_hierarchy<T: Real>(
    level_index: u32,
    order: usize,
    domain_size: T,
) -> Result<(GridLevel<T>, GridLevel<T>)> {
    if level_index < 2 {
        return Err(Error::config(
            "twogrid hierarchy needs level_index >= 2 so the coarse level is refined at least once",
        ));
    }
    let fine = GridLevel::new(level_index, order, domain_size)?;
    let coarse = GridLevel::new(level_index - 1, order, domain_size)?;
    Ok((coarse, fine))
}
