//! Fourth-order central differences on the interior of a grid.
//!
//! Nodes closer than [`RING`] to a face get the value 0 and must be left out
//! of every norm (see [`crate::grid::interior_norm`]).

use crate::grid::{Field, GridSpec};
use crate::par;

/// Width of the boundary ring the stencils cannot reach.
pub const RING: usize = 2;

fn stride(grid: &GridSpec, axis: usize) -> usize {
    grid.points_per_axis().pow((grid.dim() - 1 - axis) as u32)
}

/// `∂_axis f` on the interior.
pub fn gradient(field: &Field, axis: usize) -> Vec<f64> {
    let grid = *field.grid();
    let v = field.values();
    let s = stride(&grid, axis);
    let c = 1.0 / (12.0 * grid.spacing());
    par::map_range(v.len(), |i| {
        if !grid.is_interior(i, RING) {
            return 0.0;
        }
        c * (-v[i + 2 * s] + 8.0 * v[i + s] - 8.0 * v[i - s] + v[i - 2 * s])
    })
}

/// `Δf` on the interior.
pub fn laplacian(field: &Field) -> Vec<f64> {
    let grid = *field.grid();
    let v = field.values();
    let c = 1.0 / (12.0 * grid.spacing().powi(2));
    let strides: Vec<usize> = (0..grid.dim()).map(|a| stride(&grid, a)).collect();
    par::map_range(v.len(), |i| {
        if !grid.is_interior(i, RING) {
            return 0.0;
        }
        strides
            .iter()
            .map(|&s| {
                c * (-v[i + 2 * s] + 16.0 * v[i + s] - 30.0 * v[i] + 16.0 * v[i - s] - v[i - 2 * s])
            })
            .sum()
    })
}
