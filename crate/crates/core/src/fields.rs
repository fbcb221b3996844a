//! Physical field containers, off-grid sampling and the VRT1 snapshot format.

use std::f64::consts::FRAC_PI_2;
use std::io::{Read, Write};
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::spectral::{forward_transform, Grid, SpectralField};

/// A point (x1, x2) of the torus.
pub type Point = [f64; 2];

/// Residual below which a field counts as odd-odd.
pub const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symmetry {
    OddOdd,
    None,
}

/// Scalar vorticity on the grid, with its Fourier coefficients computed lazily.
#[derive(Clone, Debug)]
pub struct VorticityField {
    grid: Grid,
    samples: Vec<f64>,
    symmetry: Symmetry,
    time: f64,
    spectrum: OnceLock<SpectralField>,
}

impl VorticityField {
    /// Panics if `samples.len() != M^2`; use [`VorticityField::from_samples`]
    /// for untrusted input.
    pub fn new(grid: Grid, samples: Vec<f64>, symmetry: Symmetry, time: f64) -> Self {
        assert_eq!(samples.len(), grid.len(), "sample count does not match grid");
        VorticityField {
            grid,
            samples,
            symmetry,
            time,
            spectrum: OnceLock::new(),
        }
    }

    pub fn from_samples(grid: Grid, samples: Vec<f64>, symmetry: Symmetry, time: f64) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::config(format!(
                "expected {} samples, got {}",
                grid.len(),
                samples.len()
            )));
        }
        Ok(Self::new(grid, samples, symmetry, time))
    }

    pub fn from_spectrum(spec: SpectralField, symmetry: Symmetry, time: f64) -> Self {
        let grid = spec.grid();
        let samples = crate::spectral::inverse_transform(&spec);
        let cell = OnceLock::new();
        let _ = cell.set(spec);
        VorticityField {
            grid,
            samples,
            symmetry,
            time,
            spectrum: cell,
        }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::new(grid, vec![0.0; grid.len()], Symmetry::OddOdd, 0.0)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn spectrum(&self) -> &SpectralField {
        self.spectrum.get_or_init(|| {
            forward_transform(self.grid, &self.samples).expect("sample count checked at construction")
        })
    }

    pub fn at(&self, i1: usize, i2: usize) -> f64 {
        self.samples[self.grid.index(i1, i2)]
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    pub fn linf(&self) -> f64 {
        self.samples.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// (int |w|^p)^{1/p} by grid quadrature; p = inf gives the max norm.
    pub fn lp_norm(&self, p: f64) -> f64 {
        lp_norm(self.grid, &self.samples, p)
    }

    /// |w|_2 by grid quadrature.
    pub fn l2_norm(&self) -> f64 {
        self.lp_norm(2.0)
    }

    /// |grad w|_2 by Parseval.
    pub fn h1_seminorm(&self) -> f64 {
        self.spectrum().h1_seminorm_sq().sqrt()
    }

    /// max |w(x1,x2) + w(-x1,x2)| and the same for x2, on the grid.
    pub fn antisymmetry_residual(&self) -> f64 {
        antisymmetry_residual(self.grid, &self.samples)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::new(
            self.grid,
            self.samples.iter().map(|v| v * factor).collect(),
            self.symmetry,
            self.time,
        )
    }

    pub fn sample_at(&self, points: &[Point]) -> Vec<f64> {
        sample_at(self.grid, &self.samples, points)
    }
}

pub(crate) fn lp_norm(grid: Grid, samples: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return samples.iter().fold(0.0, |a, v| a.max(v.abs()));
    }
    let h2 = grid.spacing().powi(2);
    (samples.iter().map(|v| v.abs().powf(p)).sum::<f64>() * h2).powf(1.0 / p)
}

pub fn antisymmetry_residual(grid: Grid, samples: &[f64]) -> f64 {
    let m = grid.size();
    let mut worst = 0.0f64;
    for i1 in 0..m {
        let j1 = grid.mirror(i1);
        for i2 in 0..m {
            let j2 = grid.mirror(i2);
            let v = samples[i1 * m + i2];
            worst = worst
                .max((v + samples[j1 * m + i2]).abs())
                .max((v + samples[i1 * m + j2]).abs());
        }
    }
    worst
}

/// Two-component velocity on the grid.
#[derive(Clone, Debug)]
pub struct VelocityField {
    grid: Grid,
    u1: Vec<f64>,
    u2: Vec<f64>,
    time: f64,
}

impl VelocityField {
    pub fn new(grid: Grid, u1: Vec<f64>, u2: Vec<f64>, time: f64) -> Self {
        assert_eq!(u1.len(), grid.len());
        assert_eq!(u2.len(), grid.len());
        VelocityField { grid, u1, u2, time }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::new(grid, vec![0.0; grid.len()], vec![0.0; grid.len()], 0.0)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn u1(&self) -> &[f64] {
        &self.u1
    }

    pub fn u2(&self) -> &[f64] {
        &self.u2
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn max_speed(&self) -> f64 {
        self.u1
            .iter()
            .zip(&self.u2)
            .fold(0.0, |a, (x, y)| a.max(x.hypot(*y)))
    }

    /// |u|_2 by grid quadrature.
    pub fn l2_norm(&self) -> f64 {
        let h2 = self.grid.spacing().powi(2);
        (self
            .u1
            .iter()
            .zip(&self.u2)
            .map(|(a, b)| a * a + b * b)
            .sum::<f64>()
            * h2)
            .sqrt()
    }

    /// Max-norm of the spectral divergence.
    pub fn divergence_max(&self) -> f64 {
        let d1 = forward_transform(self.grid, &self.u1).expect("sized").partial(0);
        let d2 = forward_transform(self.grid, &self.u2).expect("sized").partial(1);
        let a = crate::spectral::inverse_transform(&d1);
        let b = crate::spectral::inverse_transform(&d2);
        a.iter().zip(&b).fold(0.0, |acc, (x, y)| acc.max((x + y).abs()))
    }

    /// Spectral vorticity d2 u1 - d1 u2 (clockwise positive).
    pub fn vorticity(&self) -> Vec<f64> {
        let d1 = forward_transform(self.grid, &self.u2).expect("sized").partial(0);
        let d2 = forward_transform(self.grid, &self.u1).expect("sized").partial(1);
        let a = crate::spectral::inverse_transform(&d1);
        let b = crate::spectral::inverse_transform(&d2);
        a.iter().zip(&b).map(|(x, y)| y - x).collect()
    }

    pub fn sample_at(&self, points: &[Point]) -> Vec<Point> {
        points
            .iter()
            .map(|p| {
                [
                    bicubic(self.grid, &self.u1, p[0], p[1]),
                    bicubic(self.grid, &self.u2, p[0], p[1]),
                ]
            })
            .collect()
    }
}

/// Catmull-Rom (Keys, a = -1/2) weights for offsets -1, 0, 1, 2.
#[inline]
pub(crate) fn keys_weights(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        0.5 * (-t3 + 2.0 * t2 - t),
        0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
        0.5 * (-3.0 * t3 + 4.0 * t2 + t),
        0.5 * (t3 - t2),
    ]
}

/// Piecewise-bicubic (cubic convolution) interpolation with periodic wrap.
/// Interpolating: reproduces node values exactly.
#[inline]
pub fn bicubic(grid: Grid, samples: &[f64], x1: f64, x2: f64) -> f64 {
    let m = grid.size();
    let inv_h = m as f64 / 2.0;
    let u1 = (x1 + 1.0) * inv_h;
    let u2 = (x2 + 1.0) * inv_h;
    let f1 = u1.floor();
    let f2 = u2.floor();
    let w1 = keys_weights(u1 - f1);
    let w2 = keys_weights(u2 - f2);
    let mi = m as i64;
    let b1 = f1 as i64;
    let b2 = f2 as i64;
    let mut cols = [0usize; 4];
    for (c, slot) in cols.iter_mut().enumerate() {
        *slot = (b2 + c as i64 - 1).rem_euclid(mi) as usize;
    }
    let mut acc = 0.0;
    for (a, wa) in w1.iter().enumerate() {
        let row = (b1 + a as i64 - 1).rem_euclid(mi) as usize * m;
        let mut r = 0.0;
        for (c, wc) in w2.iter().enumerate() {
            r += wc * samples[row + cols[c]];
        }
        acc += wa * r;
    }
    acc
}

pub fn sample_at(grid: Grid, samples: &[f64], points: &[Point]) -> Vec<f64> {
    points.iter().map(|p| bicubic(grid, samples, p[0], p[1])).collect()
}

/// Values of a field on a (radius, angle) lattice in the first quadrant.
#[derive(Clone, Debug)]
pub struct PolarPatch {
    radii: Vec<f64>,
    angles: Vec<f64>,
    /// Row-major: `values[j * angles.len() + a]` at (radii[j], angles[a]).
    values: Vec<f64>,
}

impl PolarPatch {
    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, j: usize) -> &[f64] {
        let n = self.angles.len();
        &self.values[j * n..(j + 1) * n]
    }

    pub fn value(&self, j: usize, a: usize) -> f64 {
        self.values[j * self.angles.len() + a]
    }

    /// Cartesian points of the lattice, in storage order.
    pub fn points(&self) -> Vec<Point> {
        polar_points(&self.radii, &self.angles)
    }
}

fn polar_points(radii: &[f64], angles: &[f64]) -> Vec<Point> {
    let mut pts = Vec::with_capacity(radii.len() * angles.len());
    for &r in radii {
        for &a in angles {
            pts.push([r * a.cos(), r * a.sin()]);
        }
    }
    pts
}

/// `n` log-spaced radii from `r0` to `r1` inclusive.
pub fn log_radii(r0: f64, r1: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && r0 > 0.0 && r1 > r0);
    let (l0, l1) = (r0.ln(), r1.ln());
    (0..n)
        .map(|j| (l0 + (l1 - l0) * j as f64 / (n - 1) as f64).exp())
        .collect()
}

/// `n` uniform angles covering [0, pi/2] inclusive.
pub fn quadrant_angles(n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n).map(|a| FRAC_PI_2 * a as f64 / (n - 1) as f64).collect()
}

/// Samples `samples` at (r cos a, r sin a) for every radius and angle.
pub fn resample_polar(grid: Grid, samples: &[f64], radii: &[f64], angles: &[f64]) -> Result<PolarPatch> {
    if radii.is_empty() || angles.is_empty() {
        return Err(Error::config("polar patch needs at least one radius and one angle"));
    }
    if let Some(r) = radii.iter().find(|r| !(**r > 0.0 && **r <= 1.0)) {
        return Err(Error::Domain(format!("radius {r} outside (0, 1]")));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config("radii must be strictly increasing"));
    }
    if angles.iter().any(|a| !(0.0..=FRAC_PI_2 + 1e-15).contains(a))
        || angles.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(Error::config("angles must increase strictly within [0, pi/2]"));
    }
    let pts = polar_points(radii, angles);
    Ok(PolarPatch {
        radii: radii.to_vec(),
        angles: angles.to_vec(),
        values: sample_at(grid, samples, &pts),
    })
}

const VRT1_MAGIC: &[u8; 4] = b"VRT1";

/// Writes a VRT1 snapshot: magic, u32 LE M, f64 LE time, M*M f64 LE samples.
pub fn write_vrt1<W: Write>(mut out: W, field: &VorticityField) -> Result<()> {
    let m = field.grid().size();
    let mut buf = Vec::with_capacity(16 + 8 * m * m);
    buf.extend_from_slice(VRT1_MAGIC);
    buf.extend_from_slice(&(m as u32).to_le_bytes());
    buf.extend_from_slice(&field.time().to_le_bytes());
    for v in field.samples() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

/// Reads a VRT1 snapshot. The symmetry flag is inferred from the data.
pub fn read_vrt1<R: Read>(mut input: R) -> Result<VorticityField> {
    let mut head = [0u8; 16];
    input
        .read_exact(&mut head)
        .map_err(|_| Error::Format("truncated VRT1 header".into()))?;
    if &head[..4] != VRT1_MAGIC {
        return Err(Error::Format("bad magic, expected VRT1".into()));
    }
    let m = u32::from_le_bytes(head[4..8].try_into().expect("4 bytes")) as usize;
    let time = f64::from_le_bytes(head[8..16].try_into().expect("8 bytes"));
    let grid = Grid::new(m).map_err(|e| Error::Format(format!("VRT1 size: {e}")))?;
    let mut body = Vec::new();
    input.read_to_end(&mut body)?;
    if body.len() != 8 * m * m {
        return Err(Error::Format(format!(
            "VRT1 body has {} bytes, expected {}",
            body.len(),
            8 * m * m
        )));
    }
    let samples: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let symmetry = if antisymmetry_residual(grid, &samples) < SYMMETRY_TOL {
        Symmetry::OddOdd
    } else {
        Symmetry::None
    };
    Ok(VorticityField::new(grid, samples, symmetry, time))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sinsin(g: Grid) -> VorticityField {
        VorticityField::new(
            g,
            g.sample(|x, y| (PI * x).sin() * (PI * y).sin()),
            Symmetry::OddOdd,
            0.0,
        )
    }

    #[test]
    fn exact_at_nodes() {
        let g = Grid::new(64).unwrap();
        let w = sinsin(g);
        for (i1, i2) in [(0, 0), (5, 17), (63, 1), (32, 40)] {
            let v = w.sample_at(&[[g.coord(i1), g.coord(i2)]])[0];
            assert!((v - w.at(i1, i2)).abs() < 1e-15);
        }
    }

    #[test]
    fn analytic_value_off_grid() {
        let g = Grid::new(256).unwrap();
        let v = sinsin(g).sample_at(&[[0.25, 0.25]])[0];
        assert!((v - 0.5).abs() < 1e-6);
    }

    #[test]
    fn interpolation_is_third_order() {
        let pts: Vec<Point> = (0..200)
            .map(|i| {
                let t = i as f64 * 0.6180339887;
                [(t.fract() * 2.0 - 1.0) * 0.999, ((t * 1.37).fract() * 2.0 - 1.0) * 0.999]
            })
            .collect();
        let err = |m: usize| {
            let w = sinsin(Grid::new(m).unwrap());
            w.sample_at(&pts)
                .iter()
                .zip(&pts)
                .map(|(v, p)| (v - (PI * p[0]).sin() * (PI * p[1]).sin()).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(64), err(128));
        let order = (e1 / e2).log2();
        assert!(order >= 2.9, "measured order {order}");
    }

    #[test]
    fn wraps_around_the_torus() {
        let g = Grid::new(64).unwrap();
        let w = sinsin(g);
        let a = w.sample_at(&[[0.999, -0.999]])[0];
        let b = w.sample_at(&[[-1.001, 1.001]])[0];
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn polar_resampling() {
        let g = Grid::new(256).unwrap();
        let c = vec![3.0; g.len()];
        let radii = log_radii(0.01, 1.0, 20);
        let angles = quadrant_angles(17);
        let patch = resample_polar(g, &c, &radii, &angles).unwrap();
        assert!(patch.values().iter().all(|v| (v - 3.0).abs() < 1e-14));

        let radial = g.sample(|x, y| (-(x * x + y * y) * 4.0).exp());
        let patch = resample_polar(g, &radial, &log_radii(0.05, 0.9, 12), &angles).unwrap();
        for j in 0..12 {
            let row = patch.row(j);
            let spread = row.iter().fold(f64::MIN, |a, v| a.max(*v))
                - row.iter().fold(f64::MAX, |a, v| a.min(*v));
            assert!(spread < 1e-6, "row {j} spread {spread}");
        }
        // Re-sampling the patch's own point set reproduces its values.
        let again = sample_at(g, &radial, &patch.points());
        assert_eq!(again, patch.values());

        assert!(matches!(
            resample_polar(g, &c, &[0.5, 1.2], &angles),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn vrt1_round_trip_and_validation() {
        let g = Grid::new(64).unwrap();
        let w = sinsin(g).with_time(0.125);
        let mut buf = Vec::new();
        write_vrt1(&mut buf, &w).unwrap();
        assert_eq!(&buf[..4], b"VRT1");
        assert_eq!(u32::from_le_bytes(buf[4..8].try_into().unwrap()), 64);
        assert_eq!(buf.len(), 16 + 8 * 64 * 64);
        let back = read_vrt1(buf.as_slice()).unwrap();
        assert_eq!(back.samples(), w.samples());
        assert_eq!(back.time(), 0.125);
        assert_eq!(back.symmetry(), Symmetry::OddOdd);

        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_vrt1(bad.as_slice()), Err(Error::Format(_))));
        assert!(matches!(read_vrt1(&buf[..buf.len() - 8]), Err(Error::Format(_))));
    }

    #[test]
    fn velocity_diagnostics_on_single_mode() {
        let g = Grid::new(64).unwrap();
        let w = sinsin(g);
        let u = crate::spectral::velocity_from_vorticity(&w).unwrap();
        assert!(u.divergence_max() < 1e-10);
        let back = u.vorticity();
        let err = back.iter().zip(w.samples()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12);
        // |u|_2^2 = |w|_2^2 / (2 pi^2) for an eigenmode with |w|_2 = 1.
        assert!((u.l2_norm().powi(2) - 1.0 / (2.0 * PI * PI)).abs() < 1e-13);
    }
}
