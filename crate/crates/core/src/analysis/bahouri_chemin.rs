//! Velocity asymptotics of the Bahouri-Chemin patch near the origin:
//! -u1/x1 = c (ln(1/x2) + r1) for 0 < x1 < x2 small.

use super::stats::{linear_fit, LinearFit};
use crate::error::{Error, Result};
use crate::initial_data::make_bahouri_chemin;
use crate::spectral::{velocity_from_vorticity, Grid};

#[derive(Clone, Debug, PartialEq)]
pub struct BcFitAtGrid {
    pub m: usize,
    pub fit: LinearFit,
    /// max |c r1| over the sample points, with c r1 = -u1/x1 - c ln(1/x2).
    pub residual_max: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BcFit {
    pub per_grid: Vec<BcFitAtGrid>,
    /// |c(M_last) - c(M_prev)| / c(M_last), if at least two grids.
    pub relative_change: Option<f64>,
}

impl BcFit {
    pub fn estimate(&self) -> f64 {
        self.per_grid.last().map(|g| g.fit.slope).unwrap_or(f64::NAN)
    }
}

/// Grid nodes with `min_cells` h <= x1 < x2 <= x_max.
pub fn fit_bc_at(grid: Grid, x_max: f64, min_cells: f64) -> Result<BcFitAtGrid> {
    let w = make_bahouri_chemin(grid);
    let u = velocity_from_vorticity(&w)?;
    let h = grid.spacing();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for i1 in 0..grid.size() {
        let x1 = grid.coord(i1);
        if x1 < min_cells * h {
            continue;
        }
        for i2 in 0..grid.size() {
            let x2 = grid.coord(i2);
            if x2 <= x1 || x2 > x_max {
                continue;
            }
            let k = grid.index(i1, i2);
            xs.push((1.0 / x2).ln());
            ys.push(-u.u1()[k] / x1);
        }
    }
    if xs.len() < 3 {
        return Err(Error::invalid(format!(
            "only {} sample points for M={} in the fit region",
            xs.len(),
            grid.size()
        )));
    }
    let fit = linear_fit(&xs, &ys)?;
    let residual_max = xs
        .iter()
        .zip(&ys)
        .fold(0.0f64, |a, (x, y)| a.max((y - fit.slope * x).abs()));
    Ok(BcFitAtGrid {
        m: grid.size(),
        fit,
        residual_max,
        points: xs.len(),
    })
}

pub fn fit_bc_constant(sizes: &[usize]) -> Result<BcFit> {
    let per_grid = sizes
        .iter()
        .map(|&m| fit_bc_at(Grid::new(m)?, 0.05, 4.0))
        .collect::<Result<Vec<_>>>()?;
    let relative_change = match per_grid.len() {
        0 | 1 => None,
        n => {
            let (a, b) = (per_grid[n - 2].fit.slope, per_grid[n - 1].fit.slope);
            Some(((b - a) / b).abs())
        }
    };
    Ok(BcFit {
        per_grid,
        relative_change,
    })
}
