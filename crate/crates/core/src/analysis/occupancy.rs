//! Angular measure |I(t,r)| of the set {theta in [0, pi/2] : w(r,theta) >= level}.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::fields::{bicubic, VorticityField};

pub const DEFAULT_ANGLES: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub struct AngularOccupancy {
    pub t: f64,
    pub level: f64,
    pub angles: usize,
    pub radii: Vec<f64>,
    /// |I(t, r)| per radius, in radians.
    pub measures: Vec<f64>,
}

/// Threshold set membership on `angles` cell-centered angles per radius.
pub fn angular_occupancy(omega: &VorticityField, radii: &[f64], level: f64) -> Result<AngularOccupancy> {
    angular_occupancy_with(omega, radii, level, DEFAULT_ANGLES)
}

pub fn angular_occupancy_with(
    omega: &VorticityField,
    radii: &[f64],
    level: f64,
    angles: usize,
) -> Result<AngularOccupancy> {
    if let Some(r) = radii.iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
        return Err(Error::Domain(format!("radius {r} outside (0, 1)")));
    }
    if angles == 0 {
        return Err(Error::config("need at least one angle"));
    }
    let g = omega.grid();
    let s = omega.samples();
    let dt = FRAC_PI_2 / angles as f64;
    let dirs: Vec<(f64, f64)> = (0..angles)
        .map(|a| {
            let t = (a as f64 + 0.5) * dt;
            (t.cos(), t.sin())
        })
        .collect();
    let measures = radii
        .iter()
        .map(|&r| {
            let hits = dirs
                .iter()
                .filter(|(c, sn)| bicubic(g, s, r * c, r * sn) >= level)
                .count();
            hits as f64 * dt
        })
        .collect();
    Ok(AngularOccupancy {
        t: omega.time(),
        level,
        angles,
        radii: radii.to_vec(),
        measures,
    })
}

impl AngularOccupancy {
    /// Weights of each radius for the measure dr/r (cells between midpoints in ln r).
    pub fn haar_weights(&self) -> Vec<f64> {
        let l: Vec<f64> = self.radii.iter().map(|r| r.ln()).collect();
        let n = l.len();
        (0..n)
            .map(|j| {
                let lo = if j == 0 { l[0] } else { 0.5 * (l[j - 1] + l[j]) };
                let hi = if j + 1 == n { l[n - 1] } else { 0.5 * (l[j] + l[j + 1]) };
                if n == 1 {
                    1.0
                } else {
                    (hi - lo).abs()
                }
            })
            .collect()
    }

    fn weighted<F: Fn(f64, f64) -> bool>(&self, r_lo: f64, r_hi: f64, pick: F) -> (f64, f64) {
        let w = self.haar_weights();
        let mut total = 0.0;
        let mut acc = 0.0;
        for ((&r, &m), &wj) in self.radii.iter().zip(&self.measures).zip(&w) {
            if r >= r_lo && r <= r_hi {
                total += wj;
                if pick(r, m) {
                    acc += wj * m;
                }
            }
        }
        (acc, total)
    }

    /// Haar average of |I(t,r)| over r in [r_lo, r_hi].
    pub fn haar_average(&self, r_lo: f64, r_hi: f64) -> f64 {
        let (acc, total) = self.weighted(r_lo, r_hi, |_, _| true);
        if total == 0.0 {
            0.0
        } else {
            acc / total
        }
    }

    /// Haar fraction of radii in [r_lo, r_hi] with |I(t,r)| <= threshold.
    pub fn haar_fraction_below(&self, r_lo: f64, r_hi: f64, threshold: f64) -> f64 {
        let w = self.haar_weights();
        let mut total = 0.0;
        let mut hit = 0.0;
        for ((&r, &m), &wj) in self.radii.iter().zip(&self.measures).zip(&w) {
            if r >= r_lo && r <= r_hi {
                total += wj;
                if m <= threshold {
                    hit += wj;
                }
            }
        }
        if total == 0.0 {
            0.0
        } else {
            hit / total
        }
    }

    /// Membership in A(t) = {r in [N^{-1/4}, a0/2] : |I(t,r)| >= (ln 1/r)^{-alpha/3} / M}.
    pub fn a_mask(&self, n: f64, a0: f64, growth_target: f64, alpha: f64) -> Vec<bool> {
        let lo = n.powf(-0.25);
        let hi = 0.5 * a0;
        self.radii
            .iter()
            .zip(&self.measures)
            .map(|(&r, &m)| {
                r >= lo && r <= hi && m >= (1.0 / r).ln().powf(-alpha / 3.0) / growth_target
            })
            .collect()
    }
}
