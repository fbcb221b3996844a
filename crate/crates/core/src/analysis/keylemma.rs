//! Decomposition u^i(x)/x_i = (-1)^i (4/pi) Q(x) + B_i(x) with
//!
//!   Q(x) = int_{[2x1,1) x [2x2,1)} y1 y2 / |y|^4  w(y) dy.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use super::lattice::{lattice_biot_savart_with, LatticeSumConfig};
use super::quadrature::integrate;
use crate::error::{Error, Result};
use crate::fields::{bicubic, Point, Symmetry, VorticityField};

/// Q over [a,1) x [b,1) for an arbitrary integrand, by nested adaptive
/// quadrature in (theta, ln r).
pub fn quadrant_integral<F: Fn(f64, f64) -> f64>(w: F, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0 && a < 1.0 && b < 1.0) {
        return Err(Error::Domain(format!("quadrant corner ({a}, {b}) outside (0,1)^2")));
    }
    let t_lo = b.atan2(1.0);
    let t_hi = 1.0f64.atan2(a);
    let corner = b.atan2(a);
    // Inner rays only need accuracy relative to the size of Q, bounded by
    // sup |w| times Q of the unit field; relative accuracy on rays where w is
    // tiny would exhaust the bisection budget on interpolated fields.
    let w_scale = (0..=64)
        .flat_map(|i| (0..=64).map(move |j| (i, j)))
        .map(|(i, j)| {
            let t = t_lo + (t_hi - t_lo) * i as f64 / 64.0;
            let (c, s) = (t.cos(), t.sin());
            let (r0, r1) = ((a / c).max(b / s), (1.0 / c).min(1.0 / s));
            let r = r0 * (r1 / r0).powf(j as f64 / 64.0);
            w(r * c, r * s).abs()
        })
        .fold(0.0f64, f64::max);
    let inner_abs = (0.1 * rel_tol * w_scale * quadrant_integral_unit(a, b)).max(1e-14);
    let mut inner_err: Option<Error> = None;
    let outer = integrate(
        |t| {
            let (c, s) = (t.cos(), t.sin());
            let s_lo = (a / c).max(b / s).ln();
            let s_hi = (1.0 / c).min(1.0 / s).ln();
            if s_hi <= s_lo {
                return 0.0;
            }
            let inner = integrate(
                |u| {
                    let r = u.exp();
                    w(r * c, r * s)
                },
                s_lo,
                s_hi,
                &[],
                inner_abs,
                0.1 * rel_tol,
            );
            match inner {
                Ok(v) => c * s * v,
                Err(e) => {
                    inner_err.get_or_insert(e);
                    0.0
                }
            }
        },
        t_lo,
        t_hi,
        &[corner, FRAC_PI_4],
        1e-14,
        rel_tol,
    )?;
    match inner_err {
        Some(e) => Err(e),
        None => Ok(outer),
    }
}

/// Q for w = 1 on [a,1) x [b,1), in closed form.
pub fn quadrant_integral_unit(a: f64, b: f64) -> f64 {
    0.25 * ((1.0 + b * b).ln() - 2f64.ln() - (a * a + b * b).ln() + (1.0 + a * a).ln())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComponentReport {
    /// u^i(x) / x_i.
    pub ratio: f64,
    pub q: f64,
    /// B_i = ratio - (-1)^i (4/pi) Q.
    pub remainder: f64,
    /// |w|_inf (1 + ln(1 + x_{3-i}/x_i)).
    pub bound: f64,
    /// |B_i| / bound.
    pub bound_ratio: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KeyLemmaReport {
    pub x: Point,
    pub omega_inf: f64,
    pub velocity: Point,
    pub components: [ComponentReport; 2],
}

impl KeyLemmaReport {
    /// Q / max_i |B_i|: how far the integral term dominates the remainder.
    pub fn dominance(&self) -> f64 {
        let b = self.components[0].remainder.abs().max(self.components[1].remainder.abs());
        self.components[0].q / b
    }

    pub fn max_bound_ratio(&self) -> f64 {
        self.components[0].bound_ratio.max(self.components[1].bound_ratio)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KeyLemmaConfig {
    pub rel_tol: f64,
    pub lattice: LatticeSumConfig,
}

impl Default for KeyLemmaConfig {
    fn default() -> Self {
        KeyLemmaConfig {
            rel_tol: 1e-6,
            lattice: LatticeSumConfig {
                stability_tol: 1e-4,
                ..LatticeSumConfig::default()
            },
        }
    }
}

fn check_point(omega: &VorticityField, x: Point) -> Result<()> {
    let h = omega.grid().spacing();
    if !(x[0] > 0.0 && x[1] > 0.0 && x[0] < 0.5 && x[1] < 0.5) {
        return Err(Error::Domain(format!("point ({}, {}) outside (0,1/2)^2", x[0], x[1])));
    }
    if x[0] < 2.0 * h || x[1] < 2.0 * h {
        return Err(Error::Domain(format!(
            "point ({}, {}) within two grid cells of an axis (h={h})",
            x[0], x[1]
        )));
    }
    Ok(())
}

/// Q at x for the bicubic interpolant of `omega`.
pub fn integral_term(omega: &VorticityField, x: Point, rel_tol: f64) -> Result<f64> {
    let g = omega.grid();
    let s = omega.samples();
    quadrant_integral(|y1, y2| bicubic(g, s, y1, y2), 2.0 * x[0], 2.0 * x[1], rel_tol)
}

pub fn key_lemma_decompose(omega: &VorticityField, x: Point) -> Result<KeyLemmaReport> {
    Ok(key_lemma_decompose_many(omega, &[x], &KeyLemmaConfig::default())?[0])
}

/// Batched decomposition; the velocity comes from the image-sum oracle.
pub fn key_lemma_decompose_many(
    omega: &VorticityField,
    points: &[Point],
    cfg: &KeyLemmaConfig,
) -> Result<Vec<KeyLemmaReport>> {
    if omega.symmetry() != Symmetry::OddOdd {
        return Err(Error::invalid("decomposition requires an odd-odd field"));
    }
    for &x in points {
        check_point(omega, x)?;
    }
    let omega_inf = omega.linf();
    let u = lattice_biot_savart_with(omega, points, &cfg.lattice)?.velocities;
    points
        .iter()
        .zip(&u)
        .map(|(&x, &v)| {
            let q = if omega_inf == 0.0 { 0.0 } else { integral_term(omega, x, cfg.rel_tol)? };
            let comp = |i: usize| {
                let ratio = v[i] / x[i];
                let sign = if i == 0 { -1.0 } else { 1.0 };
                let remainder = ratio - sign * 4.0 / PI * q;
                let bound = omega_inf * (1.0 + (1.0 + x[1 - i] / x[i]).ln());
                ComponentReport {
                    ratio,
                    q,
                    remainder,
                    bound,
                    bound_ratio: if bound == 0.0 { 0.0 } else { remainder.abs() / bound },
                }
            };
            Ok(KeyLemmaReport {
                x,
                omega_inf,
                velocity: v,
                components: [comp(0), comp(1)],
            })
        })
        .collect()
}

/// min over placements I = [a, a + L] in [0, pi/2] of int_I sin cos, with
/// L = 1/(2M), by a dense scan over a. Returns (scan, closed form sin^2(L)/2).
pub fn c_m(growth_target: f64) -> Result<(f64, f64)> {
    let len = 1.0 / (2.0 * growth_target);
    if !(len > 0.0 && len <= FRAC_PI_2) {
        return Err(Error::config(format!("growth target {growth_target} gives interval length {len}")));
    }
    let value = |a: f64| 0.25 * ((2.0 * a).cos() - (2.0 * (a + len)).cos());
    let span = FRAC_PI_2 - len;
    let n = 10_000;
    let numeric = (0..=n)
        .map(|j| value(span * j as f64 / n as f64))
        .fold(f64::INFINITY, f64::min);
    Ok((numeric, 0.5 * len.sin().powi(2)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial_data::make_bahouri_chemin;
    use crate::spectral::Grid;

    #[test]
    fn unit_quadrant_closed_form() {
        for (a, b) in [(0.02, 0.02), (0.01, 0.3), (0.4, 0.05)] {
            let q = quadrant_integral(|_, _| 1.0, a, b, 1e-10).unwrap();
            let e = quadrant_integral_unit(a, b);
            assert!((q - e).abs() < 1e-9 * e, "{q} vs {e}");
        }
        let a: f64 = 0.02;
        let diag = 0.5 * ((1.0 + a * a) / (2.0 * a)).ln();
        assert!((quadrant_integral_unit(a, a) - diag).abs() < 1e-14);
    }

    #[test]
    fn brute_force_cartesian_agrees() {
        // Midpoint rule in (ln y1, ln y2) as an independent oracle.
        let (a, b): (f64, f64) = (0.02, 0.02);
        let n = 2000;
        let (la, lb) = (a.ln(), b.ln());
        let (da, db) = (-la / n as f64, -lb / n as f64);
        let mut s = 0.0;
        for i in 0..n {
            let y1 = (la + (i as f64 + 0.5) * da).exp();
            for j in 0..n {
                let y2 = (lb + (j as f64 + 0.5) * db).exp();
                let r2 = y1 * y1 + y2 * y2;
                s += (y1 * y2).powi(2) / (r2 * r2) * da * db;
            }
        }
        let q = quadrant_integral(|_, _| 1.0, a, b, 1e-10).unwrap();
        assert!((q - s).abs() < 1e-6, "{q} vs {s}");
    }

    #[test]
    fn zero_field() {
        let g = Grid::new(64).unwrap();
        let r = key_lemma_decompose(&VorticityField::zeros(g), [0.1, 0.2]).unwrap();
        for c in r.components {
            assert_eq!(c.q, 0.0);
            assert_eq!(c.remainder, 0.0);
        }
    }

    #[test]
    fn patch_flow_is_hyperbolic() {
        let g = Grid::new(512).unwrap();
        let w = make_bahouri_chemin(g);
        let r = key_lemma_decompose(&w, [0.01, 0.02]).unwrap();
        assert!(r.velocity[0] < 0.0 && r.velocity[1] > 0.0, "{:?}", r.velocity);
        assert!(r.components[0].q > 0.0);
        assert!(r.max_bound_ratio() < 1.0);
    }

    #[test]
    fn rejects_points_near_axis() {
        let g = Grid::new(64).unwrap();
        let w = make_bahouri_chemin(g);
        assert!(key_lemma_decompose(&w, [0.01, 0.2]).is_err());
        assert!(key_lemma_decompose(&w, [0.2, 0.6]).is_err());
    }

    #[test]
    fn c_m_matches_closed_form() {
        for m in [1.0, 2.0, 10.0, 100.0] {
            let (num, closed) = c_m(m).unwrap();
            assert!((num - closed).abs() < 1e-14, "{num} {closed}");
        }
        assert!(c_m(0.1).is_err());
    }
}
