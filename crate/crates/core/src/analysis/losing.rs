//! The losing exponent q(t) = 2 / (1 + 2 C |w0|_inf t), solution of
//! q' = -C |w0|_inf q^2 with q(0) = 2, and the gradient norms it controls.

use crate::error::{Error, Result};
use crate::evolution::prepare;
use crate::fields::{lp_norm, VorticityField};

use super::norms::gradient;

#[derive(Clone, Debug, PartialEq)]
pub struct LosingExponent {
    pub c: f64,
    pub omega_inf: f64,
    pub times: Vec<f64>,
    pub q: Vec<f64>,
    /// RK4 solution of the ODE at the same times.
    pub q_numeric: Vec<f64>,
    pub max_deviation: f64,
}

pub fn closed_form(c: f64, omega_inf: f64, t: f64) -> f64 {
    2.0 / (1.0 + 2.0 * c * omega_inf * t)
}

pub fn losing_exponent_curve(c: f64, omega_inf: f64, times: &[f64]) -> Result<LosingExponent> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::config(format!("losing constant C={c} must be positive")));
    }
    if !(omega_inf >= 0.0) {
        return Err(Error::config(format!("|w0|_inf={omega_inf} must be >= 0")));
    }
    if times.iter().any(|t| !(*t >= 0.0)) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::config("times must be nonnegative and nondecreasing"));
    }
    let k = c * omega_inf;
    let rhs = |q: f64| -k * q * q;
    let mut q_numeric = Vec::with_capacity(times.len());
    let (mut t, mut q) = (0.0, 2.0);
    for &target in times {
        let span = target - t;
        let steps = ((span * k * 2.0).abs() * 2000.0).ceil().max(1.0) as usize;
        let h = span / steps as f64;
        for _ in 0..steps {
            let a = rhs(q);
            let b = rhs(q + 0.5 * h * a);
            let cc = rhs(q + 0.5 * h * b);
            let d = rhs(q + h * cc);
            q += h / 6.0 * (a + 2.0 * b + 2.0 * cc + d);
        }
        t = target;
        q_numeric.push(q);
    }
    let q: Vec<f64> = times.iter().map(|&t| closed_form(c, omega_inf, t)).collect();
    let max_deviation = q
        .iter()
        .zip(&q_numeric)
        .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
    Ok(LosingExponent {
        c,
        omega_inf,
        times: times.to_vec(),
        q,
        q_numeric,
        max_deviation,
    })
}

/// |grad w|_{L^q} with the Euclidean gradient magnitude.
pub fn gradient_lq_norm(omega: &VorticityField, q: f64) -> f64 {
    let (gx, gy) = gradient(omega);
    let mag: Vec<f64> = gx.iter().zip(&gy).map(|(a, b)| a.hypot(*b)).collect();
    lp_norm(omega.grid(), &mag, q)
}

/// Streaming check of |grad w(t)|_{q(t)} <= |grad w0|_2 for a list of
/// candidate constants.
#[derive(Clone, Debug)]
pub struct LosingTracker {
    pub candidates: Vec<f64>,
    pub omega_inf: f64,
    pub initial: f64,
    /// Per snapshot: (t, |grad w|_{q_C(t)} / |grad w0|_2 for each candidate).
    pub rows: Vec<(f64, Vec<f64>)>,
}

impl LosingTracker {
    /// The reference norms are taken from the integrator's starting field.
    pub fn new(omega0: &VorticityField, candidates: Vec<f64>) -> Self {
        let w0 = prepare(omega0);
        LosingTracker {
            candidates,
            omega_inf: w0.linf(),
            initial: w0.h1_seminorm(),
            rows: Vec::new(),
        }
    }

    pub fn observe(&mut self, omega: &VorticityField) {
        let t = omega.time();
        let (gx, gy) = gradient(omega);
        let mag: Vec<f64> = gx.iter().zip(&gy).map(|(a, b)| a.hypot(*b)).collect();
        let ratios = self
            .candidates
            .iter()
            .map(|&c| lp_norm(omega.grid(), &mag, closed_form(c, self.omega_inf, t)) / self.initial)
            .collect();
        self.rows.push((t, ratios));
    }

    /// max over snapshots of the ratio for candidate `k`.
    pub fn max_ratio(&self, k: usize) -> f64 {
        self.rows.iter().fold(0.0f64, |a, r| a.max(r.1[k]))
    }

    /// Smallest candidate whose ratio stays below 1 + tol at every snapshot.
    pub fn smallest_admissible(&self, tol: f64) -> Option<f64> {
        let mut order: Vec<usize> = (0..self.candidates.len()).collect();
        order.sort_by(|a, b| self.candidates[*a].total_cmp(&self.candidates[*b]));
        order
            .into_iter()
            .find(|&k| self.max_ratio(k) <= 1.0 + tol)
            .map(|k| self.candidates[k])
    }
}
