//! Particle trajectories of the flow map and empirical checks of the
//! quasi-Lipschitz flow estimates.

use crate::error::{Error, Result};
use crate::fields::{bicubic, Point, VelocityField, VorticityField};
use crate::spectral::velocity_from_vorticity;

/// Labeled particles with their launch positions.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowState {
    pub launch: Vec<Point>,
    pub positions: Vec<Point>,
    pub t: f64,
    /// Empty, or one tag per particle.
    pub labels: Vec<String>,
}

impl FlowState {
    /// Particles launched at t = 0.
    pub fn new(points: Vec<Point>) -> Self {
        Self::at_time(points, 0.0)
    }

    pub fn at_time(points: Vec<Point>, t: f64) -> Self {
        let points: Vec<Point> = points.into_iter().map(wrap_point).collect();
        FlowState {
            launch: points.clone(),
            positions: points,
            t,
            labels: Vec::new(),
        }
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.launch.len() {
            return Err(Error::config(format!(
                "{} labels for {} particles",
                labels.len(),
                self.launch.len()
            )));
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.launch.len()
    }

    pub fn is_empty(&self) -> bool {
        self.launch.is_empty()
    }

    pub fn label(&self, i: usize) -> &str {
        self.labels.get(i).map(String::as_str).unwrap_or("")
    }
}

/// Maps a point into [-1, 1)^2.
pub fn wrap_point(p: Point) -> Point {
    [(p[0] + 1.0).rem_euclid(2.0) - 1.0, (p[1] + 1.0).rem_euclid(2.0) - 1.0]
}

/// Source of velocities at arbitrary times and positions.
pub trait VelocityProvider {
    /// Closed interval of admissible times.
    fn time_range(&self) -> (f64, f64);
    fn velocity(&self, t: f64, points: &[Point]) -> Result<Vec<Point>>;
}

/// Velocities of a stored trajectory, bicubic in space and linear in time.
pub struct SnapshotProvider {
    times: Vec<f64>,
    fields: Vec<VelocityField>,
}

impl SnapshotProvider {
    pub fn new(fields: Vec<VelocityField>) -> Result<Self> {
        if fields.is_empty() {
            return Err(Error::config("velocity provider needs at least one snapshot"));
        }
        let times: Vec<f64> = fields.iter().map(|f| f.time()).collect();
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("snapshot times must be strictly increasing"));
        }
        Ok(SnapshotProvider { times, fields })
    }

    pub fn from_trajectory(trajectory: &[VorticityField]) -> Result<Self> {
        let fields = trajectory
            .iter()
            .map(velocity_from_vorticity)
            .collect::<Result<Vec<_>>>()?;
        Self::new(fields)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }
}

fn sample(field: &VelocityField, p: Point) -> Point {
    let g = field.grid();
    [bicubic(g, field.u1(), p[0], p[1]), bicubic(g, field.u2(), p[0], p[1])]
}

impl VelocityProvider for SnapshotProvider {
    fn time_range(&self) -> (f64, f64) {
        (self.times[0], *self.times.last().unwrap())
    }

    fn velocity(&self, t: f64, points: &[Point]) -> Result<Vec<Point>> {
        let (t0, t1) = self.time_range();
        let slack = 1e-12 * (1.0 + t1.abs());
        if t < t0 - slack || t > t1 + slack {
            return Err(Error::Domain(format!(
                "time {t} outside the stored range [{t0}, {t1}]"
            )));
        }
        if self.times.len() == 1 {
            return Ok(points.iter().map(|&p| sample(&self.fields[0], p)).collect());
        }
        let j = match self.times.partition_point(|&s| s <= t) {
            0 => 0,
            k => (k - 1).min(self.times.len() - 2),
        };
        let (a, b) = (self.times[j], self.times[j + 1]);
        let s = ((t - a) / (b - a)).clamp(0.0, 1.0);
        Ok(points
            .iter()
            .map(|&p| {
                let va = sample(&self.fields[j], p);
                if s == 0.0 {
                    return va;
                }
                let vb = sample(&self.fields[j + 1], p);
                [va[0] + s * (vb[0] - va[0]), va[1] + s * (vb[1] - va[1])]
            })
            .collect())
    }
}

/// Velocity given by a closure, e.g. an analytic test field.
pub struct SyntheticProvider<F> {
    f: F,
    range: (f64, f64),
}

impl<F: Fn(f64, Point) -> Point> SyntheticProvider<F> {
    pub fn new(f: F, range: (f64, f64)) -> Self {
        SyntheticProvider { f, range }
    }
}

impl<F: Fn(f64, Point) -> Point> VelocityProvider for SyntheticProvider<F> {
    fn time_range(&self) -> (f64, f64) {
        self.range
    }

    fn velocity(&self, t: f64, points: &[Point]) -> Result<Vec<Point>> {
        if t < self.range.0 || t > self.range.1 {
            return Err(Error::Domain(format!(
                "time {t} outside [{}, {}]",
                self.range.0, self.range.1
            )));
        }
        Ok(points.iter().map(|&p| (self.f)(t, p)).collect())
    }
}

fn shifted(points: &[Point], k: &[Point], a: f64) -> Vec<Point> {
    points
        .iter()
        .zip(k)
        .map(|(p, v)| [p[0] + a * v[0], p[1] + a * v[1]])
        .collect()
}

/// RK4 from `state.t` to `t_end` (either direction) with steps of at most `dt`.
pub fn advect_particles(
    state: &FlowState,
    provider: &dyn VelocityProvider,
    dt: f64,
    t_end: f64,
) -> Result<FlowState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::config(format!("step {dt} must be positive")));
    }
    let (lo, hi) = provider.time_range();
    let slack = 1e-12 * (1.0 + hi.abs());
    for t in [state.t, t_end] {
        if t < lo - slack || t > hi + slack {
            return Err(Error::Domain(format!("time {t} outside velocity range [{lo}, {hi}]")));
        }
    }
    let span = t_end - state.t;
    let steps = (span.abs() / dt).ceil().max(if span == 0.0 { 0.0 } else { 1.0 }) as usize;
    let mut out = state.clone();
    if steps == 0 {
        return Ok(out);
    }
    let h = span / steps as f64;
    let mut x = state.positions.clone();
    for n in 0..steps {
        let t = state.t + n as f64 * h;
        let tm = t + 0.5 * h;
        // Keep substage times inside the range despite rounding.
        let t1 = if n + 1 == steps { t_end } else { t + h };
        let k1 = provider.velocity(t, &x)?;
        let k2 = provider.velocity(tm, &shifted(&x, &k1, 0.5 * h))?;
        let k3 = provider.velocity(tm, &shifted(&x, &k2, 0.5 * h))?;
        let k4 = provider.velocity(t1, &shifted(&x, &k3, h))?;
        for (i, p) in x.iter_mut().enumerate() {
            let v = [
                k1[i][0] + 2.0 * k2[i][0] + 2.0 * k3[i][0] + k4[i][0],
                k1[i][1] + 2.0 * k2[i][1] + 2.0 * k3[i][1] + k4[i][1],
            ];
            *p = wrap_point([p[0] + h / 6.0 * v[0], p[1] + h / 6.0 * v[1]]);
        }
    }
    out.positions = x;
    out.t = t_end;
    Ok(out)
}

/// Statistics of |w(t, Phi(t,x)) - w0(x)| over particles.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransportReport {
    pub t: f64,
    pub max: f64,
    pub mean: f64,
    pub count: usize,
}

/// Compares the vorticity carried by each particle with its launch value.
/// `trajectory[0]` is the launch field; the snapshot at `state.t` is looked up.
pub fn transport_consistency(trajectory: &[VorticityField], state: &FlowState) -> Result<TransportReport> {
    let first = trajectory
        .first()
        .ok_or_else(|| Error::config("empty trajectory"))?;
    let tol = 1e-9 * (1.0 + state.t.abs());
    let current = trajectory
        .iter()
        .find(|w| (w.time() - state.t).abs() <= tol)
        .ok_or_else(|| Error::Domain(format!("no snapshot at t={}", state.t)))?;
    Ok(transport_residual(first, current, state))
}

/// Residual between two given fields, without snapshot lookup.
pub fn transport_residual(omega0: &VorticityField, omega_t: &VorticityField, state: &FlowState) -> TransportReport {
    let before = omega0.sample_at(&state.launch);
    let after = omega_t.sample_at(&state.positions);
    let diffs: Vec<f64> = before.iter().zip(&after).map(|(a, b)| (a - b).abs()).collect();
    let n = diffs.len();
    TransportReport {
        t: state.t,
        max: diffs.iter().fold(0.0, |a: f64, &d| a.max(d)),
        mean: if n == 0 { 0.0 } else { diffs.iter().sum::<f64>() / n as f64 },
        count: n,
    }
}

/// Exponent beta = ln d(t) / ln d(0) for one pair (or one particle and the origin).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairExponent {
    pub first: usize,
    /// `None` for the origin, which is a stagnation point of odd-odd flows.
    pub second: Option<usize>,
    pub d0: f64,
    pub dt: f64,
    pub beta: f64,
}

/// Fitted constants of the two-sided Hölder bounds
/// exp(-upper t |w|_inf) <= beta <= exp(lower t |w|_inf).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowConstants {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug)]
pub struct QuasiLipschitzReport {
    pub t: f64,
    pub omega_inf: f64,
    pub exponents: Vec<PairExponent>,
    /// Pairs whose distances were not both below 1.
    pub skipped: Vec<(usize, Option<usize>)>,
    /// Smallest constants that make the bounds hold on this data.
    pub fitted: FlowConstants,
    /// Whether every exponent lies within the bounds given by the supplied constants.
    pub holds: Option<bool>,
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Measures beta(t) for the given pairs and, if `constants` is supplied,
/// checks it against the two-sided bound.
pub fn check_quasi_lipschitz(
    state: &FlowState,
    pairs: &[(usize, Option<usize>)],
    omega_inf: f64,
    constants: Option<FlowConstants>,
) -> Result<QuasiLipschitzReport> {
    let n = state.len();
    let mut exponents = Vec::new();
    let mut skipped = Vec::new();
    for &(i, j) in pairs {
        if i >= n || j.is_some_and(|j| j >= n) {
            return Err(Error::config(format!("pair ({i}, {j:?}) out of range for {n} particles")));
        }
        let (d0, dt) = match j {
            Some(j) => (
                dist(state.launch[i], state.launch[j]),
                dist(state.positions[i], state.positions[j]),
            ),
            None => (dist(state.launch[i], [0.0; 2]), dist(state.positions[i], [0.0; 2])),
        };
        if !(d0 > 0.0 && d0 < 1.0 && dt > 0.0 && dt < 1.0) {
            skipped.push((i, j));
            continue;
        }
        exponents.push(PairExponent {
            first: i,
            second: j,
            d0,
            dt,
            beta: dt.ln() / d0.ln(),
        });
    }
    let scale = state.t * omega_inf;
    let mut fitted = FlowConstants { lower: 0.0, upper: 0.0 };
    if scale > 0.0 {
        for e in &exponents {
            let lb = e.beta.ln() / scale;
            fitted.lower = fitted.lower.max(lb);
            fitted.upper = fitted.upper.max(-lb);
        }
    }
    let holds = constants.map(|c| {
        exponents.iter().all(|e| {
            let lo = (-c.upper * scale).exp();
            let hi = (c.lower * scale).exp();
            e.beta >= lo * (1.0 - 1e-12) && e.beta <= hi * (1.0 + 1e-12)
        })
    });
    Ok(QuasiLipschitzReport {
        t: state.t,
        omega_inf,
        exponents,
        skipped,
        fitted,
        holds,
    })
}

/// Exponents of the radial ratio |Phi(t,x)| / |x| against ln N at
/// t = tau ln ln N / ln N: ratio = (ln N)^{e tau}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialBound {
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// max over particles of -log_{ln N}(ratio) / tau.
    pub contraction: f64,
    /// max over particles of log_{ln N}(ratio) / tau.
    pub expansion: f64,
}

pub fn radial_bound(state: &FlowState, n: f64, tau: f64) -> Result<RadialBound> {
    if !(n > std::f64::consts::E) || !(tau > 0.0) {
        return Err(Error::config(format!("radial bound needs N > e and tau > 0 (N={n}, tau={tau})")));
    }
    let lln = n.ln().ln();
    let mut out = RadialBound {
        min_ratio: f64::INFINITY,
        max_ratio: 0.0,
        contraction: 0.0,
        expansion: 0.0,
    };
    for (x, p) in state.launch.iter().zip(&state.positions) {
        let r0 = dist(*x, [0.0; 2]);
        if r0 == 0.0 {
            continue;
        }
        let ratio = dist(*p, [0.0; 2]) / r0;
        out.min_ratio = out.min_ratio.min(ratio);
        out.max_ratio = out.max_ratio.max(ratio);
        let e = ratio.ln() / (lln * tau);
        out.expansion = out.expansion.max(e);
        out.contraction = out.contraction.max(-e);
    }
    Ok(out)
}

/// Five-point stencils (center, +-delta e1, +-delta e2) around each center.
pub fn stencil_points(centers: &[Point], delta: f64) -> Vec<Point> {
    centers
        .iter()
        .flat_map(|c| {
            [
                *c,
                [c[0] + delta, c[1]],
                [c[0] - delta, c[1]],
                [c[0], c[1] + delta],
                [c[0], c[1] - delta],
            ]
        })
        .collect()
}

/// Centered-difference Jacobian determinant of the flow map at each stencil
/// laid out by [`stencil_points`].
pub fn jacobian_determinants(state: &FlowState, delta: f64) -> Result<Vec<f64>> {
    if state.len() % 5 != 0 {
        return Err(Error::config("state is not a list of five-point stencils"));
    }
    let unwrap = |a: f64, b: f64| {
        let d = a - b;
        d - 2.0 * (d / 2.0).round()
    };
    Ok(state
        .positions
        .chunks(5)
        .map(|s| {
            let a11 = unwrap(s[1][0], s[2][0]) / (2.0 * delta);
            let a21 = unwrap(s[1][1], s[2][1]) / (2.0 * delta);
            let a12 = unwrap(s[3][0], s[4][0]) / (2.0 * delta);
            let a22 = unwrap(s[3][1], s[4][1]) / (2.0 * delta);
            a11 * a22 - a12 * a21
        })
        .collect())
}

/// Max distance between launch positions and the result of flowing forward
/// to `t_end` and back.
pub fn forward_backward_error(
    state: &FlowState,
    provider: &dyn VelocityProvider,
    dt: f64,
    t_end: f64,
) -> Result<f64> {
    let fwd = advect_particles(state, provider, dt, t_end)?;
    let back = advect_particles(&fwd, provider, dt, state.t)?;
    Ok(back
        .positions
        .iter()
        .zip(&state.positions)
        .fold(0.0, |a: f64, (p, q)| a.max(dist(*p, *q))))
}

/// The diagonal segment {(h,h): lower <= h <= upper}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SegmentSpec {
    pub lower: f64,
    pub upper: f64,
    pub nodes: usize,
}

impl SegmentSpec {
    pub fn new(lower: f64, upper: f64, nodes: usize) -> Result<Self> {
        if !(lower > 0.0 && upper > lower && upper < 1.0) || nodes < 2 {
            return Err(Error::config(format!(
                "segment needs 0 < lower < upper < 1 and >= 2 nodes (got {lower}, {upper}, {nodes})"
            )));
        }
        Ok(SegmentSpec { lower, upper, nodes })
    }

    /// From 1/N to N^{-7/10}.
    pub fn for_n(n: f64, nodes: usize) -> Result<Self> {
        Self::new(1.0 / n, n.powf(-0.7), nodes)
    }

    /// Nodes spaced uniformly in ln h.
    pub fn points(&self) -> Vec<Point> {
        let (a, b) = (self.lower.ln(), self.upper.ln());
        (0..self.nodes)
            .map(|j| {
                let h = (a + (b - a) * j as f64 / (self.nodes - 1) as f64).exp();
                [h, h]
            })
            .collect()
    }

    pub fn state(&self) -> FlowState {
        let labels = (0..self.nodes).map(|j| format!("segment node {j}")).collect();
        FlowState::new(self.points())
            .with_labels(labels)
            .expect("one label per node")
    }
}

/// Fraction of the given circles r = r0 crossed by the polyline through
/// `positions` (in order).
pub fn circle_coverage(positions: &[Point], radii: &[f64]) -> f64 {
    if radii.is_empty() {
        return 1.0;
    }
    let r: Vec<f64> = positions.iter().map(|p| p[0].hypot(p[1])).collect();
    let hit = radii
        .iter()
        .filter(|&&r0| {
            r.windows(2)
                .any(|w| (w[0] - r0) * (w[1] - r0) <= 0.0)
        })
        .count();
    hit as f64 / radii.len() as f64
}
