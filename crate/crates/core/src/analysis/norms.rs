//! Critical-norm instrumentation: H^1 (full, annulus-restricted, polar
//! split), W^{s,p} quasi-norms and a membership indicator for log-singular data.

use std::f64::consts::PI;

use super::stats::{linear_fit, LinearFit};
use crate::error::{Error, Result};
use crate::fields::{bicubic, lp_norm, VorticityField};
use crate::spectral::{fractional_derivative, inverse_transform, Grid};

/// Spectral gradient (d1 w, d2 w) on the grid.
pub fn gradient(omega: &VorticityField) -> (Vec<f64>, Vec<f64>) {
    let spec = omega.spectrum();
    (inverse_transform(&spec.partial(0)), inverse_transform(&spec.partial(1)))
}

/// int_{|y| > delta} |grad w|^2 by masked grid quadrature.
pub fn annulus_h1_sq(grid: Grid, gx: &[f64], gy: &[f64], delta: f64) -> f64 {
    let m = grid.size();
    let h2 = grid.spacing().powi(2);
    let d2 = delta * delta;
    let mut acc = 0.0;
    for i1 in 0..m {
        let x1 = grid.coord(i1);
        for i2 in 0..m {
            let x2 = grid.coord(i2);
            if x1 * x1 + x2 * x2 > d2 {
                let k = i1 * m + i2;
                acc += gx[k] * gx[k] + gy[k] * gy[k];
            }
        }
    }
    acc * h2
}

/// (int | |grad|^s w |^p)^{1/p}.
pub fn wsp_norm(omega: &VorticityField, s: f64, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::config(format!("exponent p={p} must be >= 1")));
    }
    let g = inverse_transform(&fractional_derivative(omega.spectrum(), s)?);
    Ok(lp_norm(omega.grid(), &g, p))
}

/// Radial and angular parts of |grad w|_2^2 over the disc r <= r_max:
/// int int r |d_r w|^2 dr dtheta and int int (1/r) |d_theta w|^2 dr dtheta.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolarConfig {
    pub r_min: f64,
    pub r_max: f64,
    pub radii: usize,
    pub angles: usize,
}

impl PolarConfig {
    pub fn for_grid(grid: Grid) -> Self {
        PolarConfig {
            r_min: 0.25 * grid.spacing(),
            r_max: 1.0,
            radii: 1024,
            angles: 1024,
        }
    }
}

pub fn polar_h1_parts(grid: Grid, gx: &[f64], gy: &[f64], cfg: &PolarConfig) -> Result<(f64, f64)> {
    if !(cfg.r_min > 0.0 && cfg.r_max > cfg.r_min && cfg.r_max <= 1.0) {
        return Err(Error::Domain(format!(
            "polar radii [{}, {}] must satisfy 0 < r_min < r_max <= 1",
            cfg.r_min, cfg.r_max
        )));
    }
    let (s0, s1) = (cfg.r_min.ln(), cfg.r_max.ln());
    let ds = (s1 - s0) / cfg.radii as f64;
    let dt = 2.0 * PI / cfg.angles as f64;
    let dirs: Vec<(f64, f64)> = (0..cfg.angles)
        .map(|a| {
            let t = (a as f64 + 0.5) * dt;
            (t.cos(), t.sin())
        })
        .collect();
    let (mut radial, mut angular) = (0.0, 0.0);
    for j in 0..cfg.radii {
        let r = (s0 + (j as f64 + 0.5) * ds).exp();
        for &(c, s) in &dirs {
            let (x1, x2) = (r * c, r * s);
            let a = bicubic(grid, gx, x1, x2);
            let b = bicubic(grid, gy, x1, x2);
            let dr = c * a + s * b;
            let dth = r * (-s * a + c * b);
            // dr = r ds
            radial += r * r * dr * dr;
            angular += dth * dth;
        }
    }
    Ok((radial * ds * dt, angular * ds * dt))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WspValue {
    pub s: f64,
    pub p: f64,
    pub value: f64,
    /// Whether s p = 2 (scale-critical pair).
    pub critical: bool,
}

#[derive(Clone, Debug, Default)]
pub struct NormConfig {
    pub wsp: Vec<(f64, f64)>,
    pub deltas: Vec<f64>,
    pub polar: Option<PolarConfig>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormReport {
    pub t: f64,
    pub linf: f64,
    /// |grad w|_2.
    pub h1: f64,
    /// (delta, int_{|y|>delta} |grad w|^2).
    pub annulus_h1_sq: Vec<(f64, f64)>,
    pub wsp: Vec<WspValue>,
    /// (radial, angular) parts of |grad w|_2^2, if requested.
    pub polar: Option<(f64, f64)>,
}

pub fn norm_report(omega: &VorticityField, cfg: &NormConfig) -> Result<NormReport> {
    let grid = omega.grid();
    let (gx, gy) = gradient(omega);
    let annulus = cfg
        .deltas
        .iter()
        .map(|&d| (d, annulus_h1_sq(grid, &gx, &gy, d)))
        .collect();
    let wsp = cfg
        .wsp
        .iter()
        .map(|&(s, p)| {
            Ok(WspValue {
                s,
                p,
                value: wsp_norm(omega, s, p)?,
                critical: (s * p - 2.0).abs() < 1e-9,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let polar = match &cfg.polar {
        Some(pc) => Some(polar_h1_parts(grid, &gx, &gy, pc)?),
        None => None,
    };
    Ok(NormReport {
        t: omega.time(),
        linf: omega.linf(),
        h1: omega.h1_seminorm(),
        annulus_h1_sq: annulus,
        wsp,
        polar,
    })
}

/// Decay of the per-log-radius density of | |grad|^s w |^p near the origin.
///
/// For data behaving like (ln 1/r)^{-alpha} near 0 with s p = 2 the density
/// behaves like (ln 1/r)^{-gamma} with gamma = alpha p, so the quasi-norm is
/// finite iff gamma > 1.
#[derive(Clone, Debug, PartialEq)]
pub struct MembershipIndicator {
    pub s: f64,
    pub p: f64,
    /// (ln 1/r at shell center, density per unit ln r).
    pub shells: Vec<(f64, f64)>,
    pub gamma: f64,
    pub fit: LinearFit,
    pub member: bool,
}

pub fn wsp_membership(
    omega: &VorticityField,
    s: f64,
    p: f64,
    r_lo: f64,
    r_hi: f64,
    shells: usize,
) -> Result<MembershipIndicator> {
    if !(r_lo > 0.0 && r_hi > r_lo && r_hi < 1.0) || shells < 3 {
        return Err(Error::config(format!(
            "membership shells need 0 < r_lo < r_hi < 1 and >= 3 shells (got {r_lo}, {r_hi}, {shells})"
        )));
    }
    let grid = omega.grid();
    let g = inverse_transform(&fractional_derivative(omega.spectrum(), s)?);
    let (l0, l1) = (r_lo.ln(), r_hi.ln());
    let dl = (l1 - l0) / shells as f64;
    let mut acc = vec![0.0; shells];
    let m = grid.size();
    let h2 = grid.spacing().powi(2);
    for i1 in 0..m {
        let x1 = grid.coord(i1);
        for i2 in 0..m {
            let x2 = grid.coord(i2);
            let r = x1.hypot(x2);
            if r < r_lo || r >= r_hi {
                continue;
            }
            let k = (((r.ln() - l0) / dl) as usize).min(shells - 1);
            acc[k] += g[i1 * m + i2].abs().powf(p) * h2;
        }
    }
    let shells: Vec<(f64, f64)> = acc
        .iter()
        .enumerate()
        .map(|(k, &v)| (-(l0 + (k as f64 + 0.5) * dl), v / dl))
        .collect();
    let xs: Vec<f64> = shells.iter().map(|s| s.0.ln()).collect();
    let ys: Vec<f64> = shells
        .iter()
        .map(|s| s.1.max(f64::MIN_POSITIVE).ln())
        .collect();
    let fit = linear_fit(&xs, &ys)?;
    let gamma = -fit.slope;
    Ok(MembershipIndicator {
        s,
        p,
        shells,
        gamma,
        fit,
        member: gamma > 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Symmetry;
    use crate::initial_data::{make_bump_data, BumpDataParams};

    fn single_mode() -> VorticityField {
        let g = Grid::new(64).unwrap();
        VorticityField::new(
            g,
            g.sample(|x, y| (PI * x).sin() * (PI * y).sin()),
            Symmetry::OddOdd,
            0.0,
        )
    }

    #[test]
    fn single_mode_identities() {
        let w = single_mode();
        let cfg = NormConfig {
            wsp: vec![(1.0, 2.0)],
            deltas: vec![0.0, 0.3],
            polar: None,
        };
        let r = norm_report(&w, &cfg).unwrap();
        assert!((w.l2_norm().powi(2) - 1.0).abs() < 1e-12);
        assert!((r.h1 * r.h1 - 2.0 * PI * PI).abs() < 1e-10);
        assert!((r.wsp[0].value - r.h1).abs() < 1e-8);
        assert!(r.wsp[0].critical);
        assert!((r.annulus_h1_sq[0].1 - r.h1 * r.h1).abs() < 1e-10);
        assert!(r.annulus_h1_sq[1].1 <= r.annulus_h1_sq[0].1);
    }

    #[test]
    fn empty_annulus_is_zero() {
        let w = single_mode();
        let (gx, gy) = gradient(&w);
        assert_eq!(annulus_h1_sq(w.grid(), &gx, &gy, 2.0), 0.0);
    }

    #[test]
    fn polar_parts_sum_to_h1() {
        let g = Grid::new(512).unwrap();
        let w = make_bump_data(BumpDataParams::new(16).unwrap(), g).unwrap();
        let (gx, gy) = gradient(&w);
        let pc = PolarConfig::for_grid(g);
        let (rad, ang) = polar_h1_parts(g, &gx, &gy, &pc).unwrap();
        let h1 = w.h1_seminorm().powi(2);
        assert!(((rad + ang) - h1).abs() < 0.01 * h1, "{rad} + {ang} vs {h1}");
        assert!(ang > rad);
    }

    #[test]
    fn wsp_rejects_bad_orders() {
        let w = single_mode();
        assert!(wsp_norm(&w, 2.5, 2.0).is_err());
        assert!(wsp_norm(&w, 1.0, 0.5).is_err());
    }
}
