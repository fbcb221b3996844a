//! Time integration of vorticity transport with optional partial viscosity
//! nu * d_{x1 x1}.
//!
//! The state is kept as a 2/3-truncated spectrum, so the semi-discrete system
//! is an exact Galerkin truncation. Time stepping is RK4 in Lawson form: the
//! viscous factor exp(-nu pi^2 k1^2 t) is applied exactly between stages.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fields::{bicubic, Point, Symmetry, VorticityField};
use crate::flow_map::FlowState;
use crate::spectral::{
    dealias_in_place, forward_transform, inverse_transform, velocity_spectra, Grid, SpectralField,
};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolveConfig {
    /// Initial step size; halved whenever the CFL bound is violated.
    pub dt: f64,
    pub t_final: f64,
    pub nu: f64,
    pub cfl_max: f64,
    /// Record a snapshot every this many steps (the final state is always kept).
    pub record_every: usize,
}

impl EvolveConfig {
    pub fn new(dt: f64, t_final: f64) -> Self {
        EvolveConfig {
            dt,
            t_final,
            nu: 0.0,
            cfl_max: 0.5,
            record_every: 1,
        }
    }

    pub fn with_nu(mut self, nu: f64) -> Self {
        self.nu = nu;
        self
    }

    pub fn with_record_every(mut self, n: usize) -> Self {
        self.record_every = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config(format!("time step {} must be positive", self.dt)));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::config(format!("final time {} must be >= 0", self.t_final)));
        }
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            return Err(Error::config(format!("viscosity {} must be >= 0", self.nu)));
        }
        if !(self.cfl_max > 0.0) {
            return Err(Error::config(format!("cfl_max {} must be positive", self.cfl_max)));
        }
        if self.record_every == 0 {
            return Err(Error::config("record_every must be >= 1"));
        }
        Ok(())
    }
}

/// A CFL-triggered step size reduction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Halving {
    pub t: f64,
    pub dt: f64,
    pub cfl: f64,
}

#[derive(Clone, Debug, Default)]
pub struct EvolveSummary {
    pub steps: usize,
    pub final_time: f64,
    pub final_dt: f64,
    pub halvings: Vec<Halving>,
}

/// Recorded snapshots of one run.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub snapshots: Vec<VorticityField>,
    pub summary: EvolveSummary,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.time()).collect()
    }

    pub fn last(&self) -> &VorticityField {
        self.snapshots.last().expect("trajectory is never empty")
    }
}

/// Physical velocity of one stage, kept for coupled particle tracing.
struct StageVelocity {
    u1: Vec<f64>,
    u2: Vec<f64>,
}

struct Rhs {
    value: SpectralField,
    velocity: StageVelocity,
    max_speed: f64,
}

/// -u.grad(w), dealiased.
fn rhs(w: &SpectralField) -> Result<Rhs> {
    let grid = w.grid();
    let (u1h, u2h) = velocity_spectra(w)?;
    let u1 = inverse_transform(&u1h);
    let u2 = inverse_transform(&u2h);
    let wx = inverse_transform(&w.partial(0));
    let wy = inverse_transform(&w.partial(1));
    let mut max_speed: f64 = 0.0;
    let prod: Vec<f64> = (0..grid.len())
        .map(|i| {
            max_speed = max_speed.max(u1[i].hypot(u2[i]));
            -(u1[i] * wx[i] + u2[i] * wy[i])
        })
        .collect();
    let mut value = forward_transform(grid, &prod)?;
    dealias_in_place(&mut value);
    Ok(Rhs {
        value,
        velocity: StageVelocity { u1, u2 },
        max_speed,
    })
}

fn axpy(y: &SpectralField, a: f64, x: &SpectralField) -> SpectralField {
    let mut out = y.clone();
    for (o, v) in out.raw_mut().iter_mut().zip(x.raw()) {
        *o += v * a;
    }
    out
}

/// Viscous integrating factor exp(-nu pi^2 k1^2 tau).
fn viscous(field: &SpectralField, nu: f64, tau: f64) -> SpectralField {
    let mut out = field.clone();
    if nu > 0.0 {
        out.apply_real_multiplier(|k1, _| (-nu * PI * PI * (k1 * k1) as f64 * tau).exp());
    }
    out
}

fn check_finite(w: &SpectralField, t: f64) -> Result<()> {
    if let Some(pos) = w.raw().iter().position(|c| !(c.re.is_finite() && c.im.is_finite())) {
        let m = w.grid().size();
        return Err(Error::numerical(format!(
            "non-finite coefficient at t={t:.6e}: bin (k2={}, r1={}) of M={m}",
            pos / m,
            pos % m
        )));
    }
    Ok(())
}

/// One Lawson RK4 step of size dt, given the first stage already evaluated.
/// Particles, if any, are advanced with the same stages.
fn rk4_step(
    w: &SpectralField,
    k1: Rhs,
    dt: f64,
    nu: f64,
    particles: Option<&mut [Point]>,
) -> Result<SpectralField> {
    let half = 0.5 * dt;
    let s2 = viscous(&axpy(w, half, &k1.value), nu, half);
    let k2 = rhs(&s2)?;
    let s3 = axpy(&viscous(w, nu, half), half, &k2.value);
    let k3 = rhs(&s3)?;
    let s4 = axpy(&viscous(w, nu, dt), dt, &viscous(&k3.value, nu, half));
    let k4 = rhs(&s4)?;

    if let Some(points) = particles {
        let grid = w.grid();
        trace_rk4(grid, points, [&k1.velocity, &k2.velocity, &k3.velocity, &k4.velocity], dt);
    }

    let mut acc = viscous(&k1.value, nu, dt);
    let mid = axpy(&k2.value, 1.0, &k3.value);
    let mid = viscous(&mid, nu, half);
    for ((a, m), d) in acc.raw_mut().iter_mut().zip(mid.raw()).zip(k4.value.raw()) {
        *a = (*a + m * 2.0 + d) * (dt / 6.0);
    }
    let mut next = viscous(w, nu, dt);
    for (n, a) in next.raw_mut().iter_mut().zip(acc.raw()) {
        *n += a;
    }
    Ok(next)
}

fn wrap(x: f64) -> f64 {
    (x + 1.0).rem_euclid(2.0) - 1.0
}

fn sample_velocity(grid: Grid, v: &StageVelocity, p: Point) -> Point {
    [bicubic(grid, &v.u1, p[0], p[1]), bicubic(grid, &v.u2, p[0], p[1])]
}

fn trace_rk4(grid: Grid, points: &mut [Point], stages: [&StageVelocity; 4], dt: f64) {
    for p in points.iter_mut() {
        let a = sample_velocity(grid, stages[0], *p);
        let q = [p[0] + 0.5 * dt * a[0], p[1] + 0.5 * dt * a[1]];
        let b = sample_velocity(grid, stages[1], q);
        let q = [p[0] + 0.5 * dt * b[0], p[1] + 0.5 * dt * b[1]];
        let c = sample_velocity(grid, stages[2], q);
        let q = [p[0] + dt * c[0], p[1] + dt * c[1]];
        let d = sample_velocity(grid, stages[3], q);
        for i in 0..2 {
            p[i] = wrap(p[i] + dt / 6.0 * (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i]));
        }
    }
}

/// Integrator state shared by [`step`], [`evolve`] and the observer variants.
struct Stepper {
    w: SpectralField,
    symmetry: Symmetry,
    t: f64,
    dt: f64,
    nu: f64,
    cfl_max: f64,
    halvings: Vec<Halving>,
}

impl Stepper {
    fn new(omega0: &VorticityField, cfg: &EvolveConfig) -> Result<Self> {
        cfg.validate()?;
        let mut w = omega0.spectrum().clone();
        dealias_in_place(&mut w);
        if omega0.symmetry() == Symmetry::OddOdd {
            w = w.project_odd_odd();
        }
        check_finite(&w, omega0.time())?;
        Ok(Stepper {
            w,
            symmetry: omega0.symmetry(),
            t: omega0.time(),
            dt: cfg.dt,
            nu: cfg.nu,
            cfl_max: cfg.cfl_max,
            halvings: Vec::new(),
        })
    }

    /// Advances by min(dt, remaining), halving dt first if the CFL bound fails.
    fn advance(&mut self, remaining: f64, particles: Option<&mut [Point]>) -> Result<f64> {
        let k1 = rhs(&self.w)?;
        let h = self.w.grid().spacing();
        while self.dt * k1.max_speed / h > self.cfl_max {
            self.dt *= 0.5;
            self.halvings.push(Halving {
                t: self.t,
                dt: self.dt,
                cfl: 2.0 * self.dt * k1.max_speed / h,
            });
            if self.dt < 1e-14 {
                return Err(Error::numerical(format!(
                    "step size underflow at t={:.6e}, max speed {:.3e}",
                    self.t, k1.max_speed
                )));
            }
        }
        let dt = self.dt.min(remaining);
        let mut next = rk4_step(&self.w, k1, dt, self.nu, particles)?;
        if self.symmetry == Symmetry::OddOdd {
            next = next.project_odd_odd();
        }
        check_finite(&next, self.t + dt)?;
        self.w = next;
        self.t += dt;
        Ok(dt)
    }

    fn snapshot(&self) -> VorticityField {
        VorticityField::from_spectrum(self.w.clone(), self.symmetry, self.t)
    }

    fn summary(&self, steps: usize) -> EvolveSummary {
        EvolveSummary {
            steps,
            final_time: self.t,
            final_dt: self.dt,
            halvings: self.halvings.clone(),
        }
    }
}

/// The field the integrator actually starts from: dealiased and, for odd-odd
/// data, projected. This is snapshot 0 of every trajectory.
pub fn prepare(omega0: &VorticityField) -> VorticityField {
    let mut w = omega0.spectrum().clone();
    dealias_in_place(&mut w);
    if omega0.symmetry() == Symmetry::OddOdd {
        w = w.project_odd_odd();
    }
    VorticityField::from_spectrum(w, omega0.symmetry(), omega0.time())
}

/// One step of size `cfg.dt` (split into CFL-admissible substeps if needed).
pub fn step(omega: &VorticityField, cfg: &EvolveConfig) -> Result<VorticityField> {
    let mut s = Stepper::new(omega, cfg)?;
    let end = omega.time() + cfg.dt;
    while end - s.t > 1e-12 * cfg.dt {
        s.advance(end - s.t, None)?;
    }
    Ok(s.snapshot())
}

/// Runs to `t_final`, passing every recorded snapshot (including the initial
/// and final states) to `observer` instead of storing them.
pub fn evolve_with<F>(omega0: &VorticityField, cfg: &EvolveConfig, observer: F) -> Result<EvolveSummary>
where
    F: FnMut(&VorticityField) -> Result<()>,
{
    run(omega0, cfg, None, observer)
}

/// Like [`evolve_with`], with particles advected by the same RK4 stages as
/// the vorticity. `tracers.t` must equal the initial time.
pub fn evolve_with_tracers<F>(
    omega0: &VorticityField,
    cfg: &EvolveConfig,
    tracers: &mut FlowState,
    mut observer: F,
) -> Result<EvolveSummary>
where
    F: FnMut(&VorticityField, &FlowState) -> Result<()>,
{
    if (tracers.t - omega0.time()).abs() > 1e-12 {
        return Err(Error::config(format!(
            "tracers at t={} but field at t={}",
            tracers.t,
            omega0.time()
        )));
    }
    let cell = std::cell::RefCell::new(tracers);
    run(omega0, cfg, Some(&cell), |snap| {
        let mut st = cell.borrow_mut();
        st.t = snap.time();
        observer(snap, &st)
    })
}

fn run<F>(
    omega0: &VorticityField,
    cfg: &EvolveConfig,
    tracers: Option<&std::cell::RefCell<&mut FlowState>>,
    mut observer: F,
) -> Result<EvolveSummary>
where
    F: FnMut(&VorticityField) -> Result<()>,
{
    let mut s = Stepper::new(omega0, cfg)?;
    let end = omega0.time() + cfg.t_final;
    observer(&s.snapshot())?;
    let mut steps = 0;
    let mut since_record = 0;
    while end - s.t > 1e-12 * cfg.dt.max(1.0) {
        let remaining = end - s.t;
        match tracers {
            Some(cell) => {
                let mut st = cell.borrow_mut();
                s.advance(remaining, Some(&mut st.positions))?;
            }
            None => {
                s.advance(remaining, None)?;
            }
        }
        steps += 1;
        since_record += 1;
        let last = end - s.t <= 1e-12 * cfg.dt.max(1.0);
        if since_record == cfg.record_every || last {
            since_record = 0;
            observer(&s.snapshot())?;
        }
    }
    Ok(s.summary(steps))
}

/// Stores every recorded snapshot.
pub fn evolve(omega0: &VorticityField, cfg: &EvolveConfig) -> Result<Trajectory> {
    let mut snapshots = Vec::new();
    let summary = evolve_with(omega0, cfg, |w| {
        snapshots.push(w.clone());
        Ok(())
    })?;
    Ok(Trajectory { snapshots, summary })
}

/// Per-interval residual of d/dt |w|_2^2 + 2 nu |d1 w|_2^2 = 0, with the
/// dissipation averaged over each interval.
#[derive(Clone, Debug)]
pub struct EnergyBalance {
    /// (t_start, t_end, residual, dissipation) per interval.
    pub intervals: Vec<(f64, f64, f64, f64)>,
    pub max_residual: f64,
    pub mean_residual: f64,
    /// Largest |residual| / dissipation over intervals with nonzero dissipation.
    pub max_relative: f64,
    /// True if |w|_2^2 never increases between records.
    pub monotone: bool,
}

/// Mean of x over an interval where x decays or grows exponentially between
/// the end values a and b.
fn log_mean(a: f64, b: f64) -> f64 {
    if a <= 0.0 || b <= 0.0 {
        return 0.5 * (a + b);
    }
    let r = a / b;
    if (r - 1.0).abs() < 1e-8 {
        0.5 * (a + b)
    } else {
        (a - b) / r.ln()
    }
}

/// Time average of |d1 w|_2^2 over an interval, mode by mode with a log-mean,
/// which is exact for modes in pure viscous decay.
fn mean_dissipation(a: &SpectralField, b: &SpectralField) -> f64 {
    let g = a.grid();
    let m = g.size();
    let nyq = m / 2;
    let (ca, cb) = (a.raw(), b.raw());
    let mut total = 0.0;
    for k2 in 0..g.half() {
        let mult = if k2 == 0 || k2 == nyq { 1.0 } else { 2.0 };
        for r1 in 0..m {
            let k1 = g.wavenumber(r1) as f64;
            if k1 == 0.0 {
                continue;
            }
            let i = k2 * m + r1;
            total += mult * k1 * k1 * log_mean(ca[i].norm_sqr(), cb[i].norm_sqr());
        }
    }
    4.0 * PI * PI * total
}

pub fn energy_balance(trajectory: &[VorticityField], nu: f64) -> Result<EnergyBalance> {
    if !(nu >= 0.0) {
        return Err(Error::config(format!("viscosity {nu} must be >= 0")));
    }
    let mut intervals = Vec::new();
    let mut monotone = true;
    for pair in trajectory.windows(2) {
        let (s0, s1) = (pair[0].spectrum(), pair[1].spectrum());
        let (t0, t1) = (pair[0].time(), pair[1].time());
        let (e0, e1) = (s0.l2_norm_sq(), s1.l2_norm_sq());
        if e1 > e0 * (1.0 + 1e-14) {
            monotone = false;
        }
        let dt = t1 - t0;
        if dt <= 0.0 {
            continue;
        }
        let diss = if nu == 0.0 { 0.0 } else { 2.0 * nu * mean_dissipation(s0, s1) };
        intervals.push((t0, t1, (e1 - e0) / dt + diss, diss));
    }
    let n = intervals.len().max(1) as f64;
    let max_residual = intervals.iter().fold(0.0f64, |a, iv| a.max(iv.2.abs()));
    let mean_residual = intervals.iter().map(|iv| iv.2.abs()).sum::<f64>() / n;
    let max_relative = intervals
        .iter()
        .filter(|iv| iv.3 > 0.0)
        .fold(0.0f64, |a, iv| a.max(iv.2.abs() / iv.3));
    Ok(EnergyBalance {
        intervals,
        max_residual,
        mean_residual,
        max_relative,
        monotone,
    })
}

/// One row of the conserved-quantity time series.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConservedQuantities {
    pub t: f64,
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
    /// |u|_2, computed spectrally.
    pub energy: f64,
    pub h1: f64,
    pub symmetry_residual: f64,
}

impl ConservedQuantities {
    pub const HEADER: [&'static str; 7] = ["t", "L1", "L2", "Linf", "energy", "H1", "symmetry_residual"];

    pub fn of(w: &VorticityField) -> Self {
        ConservedQuantities {
            t: w.time(),
            l1: w.lp_norm(1.0),
            l2: w.l2_norm(),
            linf: w.linf(),
            energy: velocity_l2(w.spectrum()),
            h1: w.h1_seminorm(),
            symmetry_residual: w.antisymmetry_residual(),
        }
    }

    pub fn values(&self) -> [f64; 7] {
        [self.t, self.l1, self.l2, self.linf, self.energy, self.h1, self.symmetry_residual]
    }
}

/// |u|_2 for u = curl^{-1} w, by Parseval.
pub fn velocity_l2(w: &SpectralField) -> f64 {
    let e = w.weighted_energy(|k1, k2| {
        let kk = (k1 * k1 + k2 * k2) as f64;
        if kk == 0.0 {
            0.0
        } else {
            1.0 / (PI * PI * kk)
        }
    });
    (4.0 * e).sqrt()
}
