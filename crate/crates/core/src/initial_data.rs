//! Initial vorticities: two-scale bump data, log-singular continuum data,
//! the Bahouri-Chemin quadrant patch, and the Euler scaling symmetry.
//!
//! Every constructor defines the field on the closed first quadrant and
//! extends it oddly in x1 and x2. Nodes on the axes and on the periodic
//! seam x_i = -1 therefore carry the value 0.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fields::{Symmetry, VorticityField};
use crate::spectral::Grid;

/// Quintic smoothstep 10t^3 - 15t^4 + 6t^5, clamped to [0, 1].
#[inline]
pub fn smoothstep(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
    }
}

/// Rises from 0 at `a` to 1 at `b`.
#[inline]
fn ramp_up(x: f64, a: f64, b: f64) -> f64 {
    smoothstep((x - a) / (b - a))
}

/// Angular profile: 1 on [pi/4, pi/3], 0 outside [pi/6, 5pi/12].
pub fn angular_bump(theta: f64) -> f64 {
    if (PI / 4.0..=PI / 3.0).contains(&theta) {
        1.0
    } else if theta < PI / 4.0 {
        ramp_up(theta, PI / 6.0, PI / 4.0)
    } else {
        1.0 - ramp_up(theta, PI / 3.0, 5.0 * PI / 12.0)
    }
}

#[inline]
fn odd_sign(x: f64) -> f64 {
    // Zero on the axis and on the periodic seam x = -1 (identified with +1).
    if x == 0.0 || x <= -1.0 {
        0.0
    } else {
        x.signum()
    }
}

/// Extends `quadrant(r, theta)` (given on [0,1]^2) to an odd-odd grid field.
fn odd_odd_polar<F: Fn(f64, f64) -> f64>(grid: Grid, quadrant: F) -> Vec<f64> {
    grid.sample(|x1, x2| {
        let s = odd_sign(x1) * odd_sign(x2);
        if s == 0.0 {
            return 0.0;
        }
        let (a, b) = (x1.abs(), x2.abs());
        s * quadrant(a.hypot(b), b.atan2(a))
    })
}

/// Two-scale parameter for the bump data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BumpDataParams {
    pub n: u32,
}

impl BumpDataParams {
    pub fn new(n: u32) -> Result<Self> {
        if n < 8 {
            return Err(Error::config(format!("bump parameter N={n} must be >= 8")));
        }
        Ok(BumpDataParams { n })
    }

    fn nf(&self) -> f64 {
        self.n as f64
    }

    /// Radial profile: 1 on [1/N, N^{-1/2}], 0 outside [1/(2N), 2 N^{-1/2}].
    pub fn radial(&self, r: f64) -> f64 {
        let n = self.nf();
        let (inner, outer) = (1.0 / n, n.powf(-0.5));
        if (inner..=outer).contains(&r) {
            1.0
        } else if r < inner {
            ramp_up(r, 0.5 * inner, inner)
        } else {
            1.0 - ramp_up(r, outer, 2.0 * outer)
        }
    }

    /// Value at polar coordinates (r, theta) of the first quadrant.
    pub fn value(&self, r: f64, theta: f64) -> f64 {
        self.radial(r) * angular_bump(theta)
    }

    /// Smallest admissible grid size: h <= 1/(8N), i.e. the inner transition
    /// [1/(2N), 1/N] spans at least four cells.
    pub fn required_grid_size(&self) -> usize {
        (16 * self.n as usize).next_power_of_two().max(Grid::MIN_SIZE)
    }
}

/// Two-scale bump vorticity chi(r) psi(theta), extended odd-odd.
pub fn make_bump_data(params: BumpDataParams, grid: Grid) -> Result<VorticityField> {
    let need = params.required_grid_size();
    if grid.size() < need {
        return Err(Error::config(format!(
            "grid M={} too coarse for N={}: need M >= {need}",
            grid.size(),
            params.n
        )));
    }
    let samples = odd_odd_polar(grid, |r, t| params.value(r, t));
    Ok(VorticityField::new(grid, samples, Symmetry::OddOdd, 0.0))
}

/// Parameters of the log-singular data (ln 1/r)^{-alpha} psi(theta) xi(r).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContinuumDataParams {
    pub alpha: f64,
    /// Outer cutoff: xi = 1 on [0, eps/2], 0 beyond 2 eps/3.
    pub epsilon: f64,
    /// Inner regularization radius; `None` means 2h of the target grid.
    pub r_min: Option<f64>,
    /// Shrink epsilon until |grad w|_2 <= 1.
    pub normalize: bool,
}

impl ContinuumDataParams {
    pub fn new(alpha: f64, epsilon: f64) -> Result<Self> {
        let p = ContinuumDataParams {
            alpha,
            epsilon,
            r_min: None,
            normalize: false,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.5 && self.alpha < 0.6) {
            return Err(Error::config(format!(
                "alpha={} outside the admissible window (1/2, 3/5)",
                self.alpha
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 0.5) {
            return Err(Error::config(format!("epsilon={} outside (0, 1/2]", self.epsilon)));
        }
        Ok(())
    }

    pub fn r_min_for(&self, grid: Grid) -> f64 {
        self.r_min.unwrap_or(2.0 * grid.spacing())
    }

    /// Radial factor (ln 1/r)^{-alpha} xi(r), frozen below `r_min`.
    pub fn radial(&self, r: f64, r_min: f64) -> f64 {
        let eps = self.epsilon;
        let cut = 1.0 - ramp_up(r, 0.5 * eps, 2.0 * eps / 3.0);
        if cut == 0.0 {
            return 0.0;
        }
        let rr = r.max(r_min);
        (1.0 / rr).ln().powf(-self.alpha) * cut
    }

    pub fn value(&self, r: f64, theta: f64, r_min: f64) -> f64 {
        self.radial(r, r_min) * angular_bump(theta)
    }
}

fn build_continuum(params: &ContinuumDataParams, grid: Grid, r_min: f64) -> VorticityField {
    let samples = odd_odd_polar(grid, |r, t| params.value(r, t, r_min));
    VorticityField::new(grid, samples, Symmetry::OddOdd, 0.0)
}

/// Log-singular continuum data, regularized at `r_min`.
pub fn make_continuum_data(params: ContinuumDataParams, grid: Grid) -> Result<VorticityField> {
    params.validate()?;
    let r_min = params.r_min_for(grid);
    if r_min < 2.0 * grid.spacing() * (1.0 - 1e-12) {
        return Err(Error::config(format!(
            "r_min={r_min} below two grid cells ({})",
            2.0 * grid.spacing()
        )));
    }
    let field = build_continuum(&params, grid, r_min);
    if !params.normalize || field.h1_seminorm() <= 1.0 {
        return Ok(field);
    }
    // Bisect on epsilon; the outer cutoff must stay clear of the inner scale.
    let floor = 8.0 * r_min;
    let mut trial = params;
    trial.epsilon = floor;
    let low = build_continuum(&trial, grid, r_min);
    if low.h1_seminorm() > 1.0 {
        return Err(Error::config(format!(
            "cannot normalize |grad w|_2 <= 1 by shrinking epsilon: at the floor eps={floor:.3e} the norm is {:.3}",
            low.h1_seminorm()
        )));
    }
    let (mut lo, mut hi) = (floor, params.epsilon);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        trial.epsilon = mid;
        if build_continuum(&trial, grid, r_min).h1_seminorm() <= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    trial.epsilon = lo;
    Ok(build_continuum(&trial, grid, r_min))
}

/// Odd-odd extension of the indicator of [0,1]^2.
pub fn make_bahouri_chemin(grid: Grid) -> VorticityField {
    let samples = grid.sample(|x1, x2| odd_sign(x1) * odd_sign(x2));
    VorticityField::new(grid, samples, Symmetry::OddOdd, 0.0)
}

/// Positive scaling factor for the Euler symmetry.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingParam(f64);

impl ScalingParam {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::config(format!("scaling factor {lambda} must be positive")));
        }
        Ok(ScalingParam(lambda))
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

/// lambda * w. If w is the solution at time t, the result is the rescaled
/// solution lambda w(lambda s) at s = t / lambda, which is the stamp returned.
pub fn rescale_solution(omega: &VorticityField, lambda: ScalingParam) -> VorticityField {
    omega.scaled(lambda.0).with_time(omega.time() / lambda.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn polar(field: &VorticityField, r: f64, theta: f64) -> f64 {
        field.sample_at(&[[r * theta.cos(), r * theta.sin()]])[0]
    }

    #[test]
    fn smoothstep_is_c2_at_ends() {
        assert_eq!(smoothstep(0.0), 0.0);
        assert_eq!(smoothstep(1.0), 1.0);
        assert_eq!(smoothstep(0.5), 0.5);
        let d = 1e-5;
        let slope0 = smoothstep(d) / d;
        let slope1 = (1.0 - smoothstep(1.0 - d)) / d;
        assert!(slope0 < 1e-8 && slope1 < 1e-8);
    }

    #[test]
    fn bump_plateau_and_support() {
        let p = BumpDataParams::new(16).unwrap();
        assert_eq!(p.value(0.1, 0.3 * PI), 1.0);
        assert_eq!(p.value(0.1, PI / 8.0), 0.0);
        assert_eq!(p.value(0.02, 0.3 * PI), 0.0);
        assert_eq!(p.value(0.6, 0.3 * PI), 0.0);
        assert!(BumpDataParams::new(4).is_err());
        assert_eq!(p.required_grid_size(), 256);
    }

    #[test]
    fn bump_field_properties() {
        let p = BumpDataParams::new(16).unwrap();
        let g = Grid::new(256).unwrap();
        let w = make_bump_data(p, g).unwrap();
        assert_eq!(w.antisymmetry_residual(), 0.0);
        assert!(w.mean().abs() < 1e-12);
        // Interior of both plateaus, through the interpolant.
        let v = polar(&w, 16f64.powf(-0.75), PI / 4.0 * 1.1);
        assert!((v - 1.0).abs() < 1e-3, "{v}");
        assert!(polar(&w, 0.1, PI / 8.0).abs() < 1e-5);

        let err = make_bump_data(p, Grid::new(128).unwrap()).unwrap_err();
        assert!(err.to_string().contains("256"), "{err}");
    }

    #[test]
    fn continuum_values() {
        let mut p = ContinuumDataParams::new(0.55, 0.5).unwrap();
        p.r_min = Some(1e-3);
        let r = (-4.0f64).exp();
        assert!((p.value(r, 0.3 * PI, 1e-3) - 4f64.powf(-0.55)).abs() < 1e-15);
        assert!((p.value(r, 0.3 * PI, 1e-3) - 0.4665).abs() < 1e-4);
        assert_eq!(p.value(r, PI / 8.0, 1e-3), 0.0);
        assert_eq!(p.value(1e-5, 0.3 * PI, 1e-3), p.value(1e-3, 0.3 * PI, 1e-3));
        assert!(ContinuumDataParams::new(0.5, 0.5).is_err());
        assert!(ContinuumDataParams::new(0.61, 0.5).is_err());
        assert!(ContinuumDataParams::new(0.55, 0.7).is_err());
    }

    #[test]
    fn continuum_monotone_on_plateau() {
        let p = ContinuumDataParams::new(0.55, 0.5).unwrap();
        let r_min: f64 = 0.004;
        let mut prev = 0.0;
        for j in 0..200 {
            let r = r_min * (0.25 / r_min).powf(j as f64 / 199.0);
            let v = p.value(r, 0.3 * PI, r_min);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn continuum_field_is_odd_odd_and_bounded() {
        let g = Grid::new(128).unwrap();
        let p = ContinuumDataParams::new(0.55, 0.5).unwrap();
        let w = make_continuum_data(p, g).unwrap();
        assert_eq!(w.antisymmetry_residual(), 0.0);
        assert!(w.linf() <= 1.0);
        let mut bad = p;
        bad.r_min = Some(g.spacing());
        assert!(make_continuum_data(bad, g).is_err());
    }

    #[test]
    fn normalization_shrinks_epsilon() {
        let g = Grid::new(256).unwrap();
        let mut p = ContinuumDataParams::new(0.55, 0.5).unwrap();
        p.normalize = true;
        match make_continuum_data(p, g) {
            Ok(w) => assert!(w.h1_seminorm() <= 1.0 + 1e-9),
            Err(e) => assert!(e.to_string().contains("cannot normalize")),
        }
    }

    #[test]
    fn bahouri_chemin_signs() {
        let g = Grid::new(64).unwrap();
        let w = make_bahouri_chemin(g);
        assert_eq!(w.at(48, 48), 1.0); // (0.5, 0.5)
        assert_eq!(w.at(16, 48), -1.0); // (-0.5, 0.5)
        assert_eq!(w.at(32, 48), 0.0); // x1 = 0
        assert_eq!(w.at(0, 48), 0.0); // x1 = -1
        assert_eq!(w.antisymmetry_residual(), 0.0);
        assert_eq!(w.mean(), 0.0);
    }

    #[test]
    fn rescaling() {
        let g = Grid::new(256).unwrap();
        let w = make_bump_data(BumpDataParams::new(16).unwrap(), g).unwrap().with_time(0.2);
        let one = rescale_solution(&w, ScalingParam::new(1.0).unwrap());
        assert_eq!(one.samples(), w.samples());
        assert_eq!(one.time(), 0.2);
        let two = rescale_solution(&w, ScalingParam::new(2.0).unwrap());
        assert_eq!(two.linf(), 2.0 * w.linf());
        assert!((two.h1_seminorm() - 2.0 * w.h1_seminorm()).abs() < 1e-12 * w.h1_seminorm());
        assert_eq!(two.time(), 0.1);
        assert!(ScalingParam::new(0.0).is_err());
        assert!(ScalingParam::new(-1.0).is_err());
    }
}
