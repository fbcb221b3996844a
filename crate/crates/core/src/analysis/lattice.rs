//! Direct evaluation of the periodic Biot-Savart image sum
//!
//!   u(x) = 1/(2 pi) sum_n int (x - y - 2n)^perp / |x - y - 2n|^2 w(y) dy,
//!
//! with (v1, v2)^perp = (v2, -v1), matching the spectral velocity.
//!
//! truncated at |n_i| <= n_max, as an FFT-free oracle for the spectral velocity.
//!
//! The nearest image is split with a Gaussian of width sigma:
//! (1 - G) K is smooth and summed by the trapezoid rule over grid nodes, while
//! G K w is integrated in polar coordinates around the target, where the 1/r
//! singularity cancels against the area element. The remaining images are
//! tabulated once on a fine lattice and interpolated. Truncations at n_max,
//! n_max/2 and n_max/4 are Richardson-extrapolated assuming an n^-2 tail.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use super::quadrature::gauss_legendre;
use crate::error::{Error, Result};
use crate::fields::{bicubic, keys_weights, Point, VorticityField};
use crate::spectral::MEAN_ZERO_TOL;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatticeSumConfig {
    /// Largest image index; must be a multiple of 4.
    pub n_max: usize,
    /// Gaussian split width in grid cells.
    pub sigma_cells: f64,
    /// Spacing of the image-sum table.
    pub table_spacing: f64,
    /// Allowed change of the extrapolated result between n_max/2 and n_max.
    pub stability_tol: f64,
    pub angles: usize,
}

impl Default for LatticeSumConfig {
    fn default() -> Self {
        LatticeSumConfig {
            n_max: 16,
            sigma_cells: 4.0,
            table_spacing: 1.0 / 128.0,
            stability_tol: 1e-6,
            angles: 256,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LatticeVelocity {
    /// Extrapolated from the n_max and n_max/2 truncations.
    pub velocities: Vec<Point>,
    /// Extrapolated from n_max/2 and n_max/4.
    pub coarse: Vec<Point>,
    /// Raw truncation at n_max.
    pub truncated: Vec<Point>,
    /// max |velocities - coarse|.
    pub stability: f64,
}

#[inline]
fn kernel(z: Point) -> Point {
    let r2 = z[0] * z[0] + z[1] * z[1];
    let c = 1.0 / (2.0 * PI * r2);
    [z[1] * c, -z[0] * c]
}

/// Sum of K(z - 2n) over 0 < max|n_i| <= n on a square lattice covering
/// [-1 - 3s, 1 + 3s]^2, stored for three nested truncations.
struct ImageTable {
    origin: f64,
    spacing: f64,
    size: usize,
    /// [level][component][i1 * size + i2]; levels are n/4, n/2, n.
    values: [[Vec<f64>; 2]; 3],
}

impl ImageTable {
    fn build(n: usize, spacing: f64) -> Self {
        let origin = -1.0 - 3.0 * spacing;
        let size = ((2.0 - 2.0 * origin) / spacing).ceil() as usize + 1;
        let levels = [n / 4, n / 2, n];
        let mut values: [[Vec<f64>; 2]; 3] = Default::default();
        for lv in values.iter_mut() {
            lv[0] = vec![0.0; size * size];
            lv[1] = vec![0.0; size * size];
        }
        let ni = n as i64;
        for i1 in 0..size {
            let z1 = origin + i1 as f64 * spacing;
            for i2 in 0..size {
                let z2 = origin + i2 as f64 * spacing;
                let mut acc = [[0.0f64; 2]; 3];
                for n1 in -ni..=ni {
                    for n2 in -ni..=ni {
                        let shell = n1.abs().max(n2.abs()) as usize;
                        if shell == 0 {
                            continue;
                        }
                        let k = kernel([z1 - 2.0 * n1 as f64, z2 - 2.0 * n2 as f64]);
                        for (l, lim) in levels.iter().enumerate() {
                            if shell <= *lim {
                                acc[l][0] += k[0];
                                acc[l][1] += k[1];
                            }
                        }
                    }
                }
                for l in 0..3 {
                    values[l][0][i1 * size + i2] = acc[l][0];
                    values[l][1][i1 * size + i2] = acc[l][1];
                }
            }
        }
        ImageTable {
            origin,
            spacing,
            size,
            values,
        }
    }

    fn cached(n: usize, spacing: f64) -> Arc<ImageTable> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, u64), Arc<ImageTable>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let key = (n, spacing.to_bits());
        if let Some(t) = cache.lock().unwrap_or_else(|e| e.into_inner()).get(&key) {
            return t.clone();
        }
        let table = Arc::new(ImageTable::build(n, spacing));
        cache
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .insert(key, table.clone());
        table
    }

    /// Interpolated image sums at all three levels.
    #[inline]
    fn eval(&self, z: Point) -> [[f64; 2]; 3] {
        let u1 = (z[0] - self.origin) / self.spacing;
        let u2 = (z[1] - self.origin) / self.spacing;
        let f1 = u1.floor();
        let f2 = u2.floor();
        let w1 = keys_weights(u1 - f1);
        let w2 = keys_weights(u2 - f2);
        let b1 = f1 as usize - 1;
        let b2 = f2 as usize - 1;
        let mut out = [[0.0; 2]; 3];
        for (a, wa) in w1.iter().enumerate() {
            let row = (b1 + a) * self.size + b2;
            for (c, wc) in w2.iter().enumerate() {
                let w = wa * wc;
                for (l, o) in out.iter_mut().enumerate() {
                    o[0] += w * self.values[l][0][row + c];
                    o[1] += w * self.values[l][1][row + c];
                }
            }
        }
        out
    }
}

#[inline]
fn wrap(d: f64) -> f64 {
    d - 2.0 * (d * 0.5).round()
}

/// Velocity at each point by the truncated image sum, with the default
/// configuration.
pub fn lattice_biot_savart(omega: &VorticityField, points: &[Point]) -> Result<Vec<Point>> {
    Ok(lattice_biot_savart_with(omega, points, &LatticeSumConfig::default())?.velocities)
}

pub fn lattice_biot_savart_with(
    omega: &VorticityField,
    points: &[Point],
    cfg: &LatticeSumConfig,
) -> Result<LatticeVelocity> {
    if cfg.n_max < 4 || cfg.n_max % 4 != 0 {
        return Err(Error::config(format!("n_max={} must be a positive multiple of 4", cfg.n_max)));
    }
    let grid = omega.grid();
    let h = grid.spacing();
    let sigma = cfg.sigma_cells * h;
    if 6.0 * sigma >= 1.0 {
        return Err(Error::config(format!("split width {sigma} too wide for the torus")));
    }
    let samples = omega.samples();
    let mean = omega.mean();
    if mean.abs() > MEAN_ZERO_TOL {
        return Err(Error::invalid(format!(
            "image sum diverges for nonzero mean {mean:.3e}"
        )));
    }
    let table = ImageTable::cached(cfg.n_max, cfg.table_spacing);
    let sources: Vec<(Point, f64)> = (0..grid.size())
        .flat_map(|i1| (0..grid.size()).map(move |i2| (i1, i2)))
        .filter_map(|(i1, i2)| {
            let w = samples[grid.index(i1, i2)];
            (w != 0.0).then(|| ([grid.coord(i1), grid.coord(i2)], w * h * h))
        })
        .collect();

    // Radial Gauss-Legendre panels of width h/2 out to 6 sigma.
    let (gx, gw) = gauss_legendre(4);
    let r_max = 6.0 * sigma;
    let panels = (r_max / (0.5 * h)).ceil() as usize;
    let dr = r_max / panels as f64;
    let mut radial = Vec::with_capacity(panels * 4);
    for p in 0..panels {
        for (x, w) in gx.iter().zip(&gw) {
            let r = dr * (p as f64 + 0.5 * (x + 1.0));
            radial.push((r, 0.5 * dr * w * (-(r * r) / (sigma * sigma)).exp()));
        }
    }
    let dtheta = 2.0 * PI / cfg.angles as f64;
    let dirs: Vec<(f64, f64)> = (0..cfg.angles)
        .map(|a| {
            let t = a as f64 * dtheta;
            (t.cos(), t.sin())
        })
        .collect();

    let inv_s2 = 1.0 / (sigma * sigma);
    let mut levels: Vec<[Point; 3]> = Vec::with_capacity(points.len());
    for &x in points {
        let mut acc = [[0.0f64; 2]; 3];
        for &(y, w) in &sources {
            let z = [wrap(x[0] - y[0]), wrap(x[1] - y[1])];
            let r2 = z[0] * z[0] + z[1] * z[1];
            let mut near = [0.0, 0.0];
            if r2 > 0.0 {
                let k = kernel(z);
                let s = -(-r2 * inv_s2).exp_m1();
                near = [s * k[0], s * k[1]];
            }
            let img = table.eval(z);
            for l in 0..3 {
                acc[l][0] += w * (near[0] + img[l][0]);
                acc[l][1] += w * (near[1] + img[l][1]);
            }
        }
        // Near part: -(1/2pi) int G(r) int (sin, -cos) w(x + r e) dtheta dr.
        let mut near = [0.0, 0.0];
        for &(r, wr) in &radial {
            let mut s = [0.0, 0.0];
            for &(c, sn) in &dirs {
                let v = bicubic(grid, samples, x[0] + r * c, x[1] + r * sn);
                s[0] += sn * v;
                s[1] -= c * v;
            }
            near[0] += wr * s[0] * dtheta;
            near[1] += wr * s[1] * dtheta;
        }
        for l in acc.iter_mut() {
            l[0] -= near[0] / (2.0 * PI);
            l[1] -= near[1] / (2.0 * PI);
        }
        levels.push(acc);
    }

    let extrap = |fine: Point, coarse: Point| -> Point {
        [(4.0 * fine[0] - coarse[0]) / 3.0, (4.0 * fine[1] - coarse[1]) / 3.0]
    };
    let velocities: Vec<Point> = levels.iter().map(|l| extrap(l[2], l[1])).collect();
    let coarse: Vec<Point> = levels.iter().map(|l| extrap(l[1], l[0])).collect();
    let truncated: Vec<Point> = levels.iter().map(|l| l[2]).collect();
    let stability = velocities
        .iter()
        .zip(&coarse)
        .fold(0.0f64, |a, (p, q)| a.max((p[0] - q[0]).abs()).max((p[1] - q[1]).abs()));
    if !(stability <= cfg.stability_tol) {
        return Err(Error::numerical(format!(
            "image sum not stable between n_max={} and {}: change {stability:.3e}",
            cfg.n_max / 2,
            cfg.n_max
        )));
    }
    Ok(LatticeVelocity {
        velocities,
        coarse,
        truncated,
        stability,
    })
}
