//! Discrete Fourier space on the torus [-1,1)^2.
//!
//! Convention used everywhere in the crate: a real field f sampled at
//! x_j = -1 + j h, h = 2/M, is represented as
//!
//! ```text
//! f(x) = sum_k c_k exp(i pi k . x),    k in {-M/2, ..., M/2-1}^2
//! ```
//!
//! so d/dx_i multiplies c_k by `i pi k_i` and -Laplacian by `pi^2 |k|^2`.
//! Integrals are taken against unnormalized Lebesgue measure on the torus
//! (area 4), hence `int |f|^2 = 4 sum |c_k|^2`.
//!
//! Only the half plane k2 >= 0 is stored (the field is real). The storage
//! is column-major in k: index `k2 * M + r1`, where `r1` is the DFT bin of
//! k1 (k1 = r1 for r1 < M/2, k1 = r1 - M otherwise).

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::fields::{Symmetry, VelocityField, VorticityField};

/// Absolute tolerance below which a mean mode is silently zeroed.
pub const MEAN_ZERO_TOL: f64 = 1e-12;

/// Uniform M x M grid on [-1,1)^2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Grid {
    m: usize,
}

impl Grid {
    pub const MIN_SIZE: usize = 64;

    pub fn new(m: usize) -> Result<Self> {
        if m < Self::MIN_SIZE || !m.is_power_of_two() {
            return Err(Error::config(format!(
                "grid size {m} must be a power of two >= {}",
                Self::MIN_SIZE
            )));
        }
        Ok(Grid { m })
    }

    /// Points per axis.
    #[inline]
    pub fn size(&self) -> usize {
        self.m
    }

    /// Total number of samples, M^2.
    #[inline]
    pub fn len(&self) -> usize {
        self.m * self.m
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        2.0 / self.m as f64
    }

    /// Coordinate of node j along either axis.
    #[inline]
    pub fn coord(&self, j: usize) -> f64 {
        -1.0 + j as f64 * self.spacing()
    }

    /// Row-major sample index; the row index runs along x1.
    #[inline]
    pub fn index(&self, i1: usize, i2: usize) -> usize {
        i1 * self.m + i2
    }

    /// Index of the node mirrored through x_i -> -x_i.
    #[inline]
    pub fn mirror(&self, j: usize) -> usize {
        (self.m - j) % self.m
    }

    /// Samples `f(x1, x2)` at every node.
    pub fn sample<F: Fn(f64, f64) -> f64>(&self, f: F) -> Vec<f64> {
        let m = self.m;
        let mut out = Vec::with_capacity(m * m);
        for i1 in 0..m {
            let x1 = self.coord(i1);
            for i2 in 0..m {
                out.push(f(x1, self.coord(i2)));
            }
        }
        out
    }

    /// Number of stored complex coefficients per k1 column (M/2 + 1).
    #[inline]
    pub fn half(&self) -> usize {
        self.m / 2 + 1
    }

    /// Signed wavenumber of DFT bin r.
    #[inline]
    pub fn wavenumber(&self, r: usize) -> i64 {
        let m = self.m as i64;
        let r = r as i64;
        if r < m / 2 {
            r
        } else {
            r - m
        }
    }

    #[inline]
    fn bin(&self, k: i64) -> usize {
        k.rem_euclid(self.m as i64) as usize
    }
}

struct Plans {
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

fn plans(m: usize) -> Arc<Plans> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Plans>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut cache = cache.lock().unwrap_or_else(|e| e.into_inner());
    cache
        .entry(m)
        .or_insert_with(|| {
            let mut real = RealFftPlanner::<f64>::new();
            let mut cplx = FftPlanner::<f64>::new();
            Arc::new(Plans {
                r2c: real.plan_fft_forward(m),
                c2r: real.plan_fft_inverse(m),
                fwd: cplx.plan_fft_forward(m),
                inv: cplx.plan_fft_inverse(m),
            })
        })
        .clone()
}

fn transpose<T: Copy>(src: &[T], rows: usize, cols: usize, dst: &mut [T]) {
    const B: usize = 32;
    for r0 in (0..rows).step_by(B) {
        for c0 in (0..cols).step_by(B) {
            for r in r0..(r0 + B).min(rows) {
                for c in c0..(c0 + B).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}

#[inline]
fn parity_sign(k1: i64, k2: i64) -> f64 {
    if (k1 + k2).rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Fourier coefficients of a real field.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: Grid) -> Self {
        SpectralField {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.half() * grid.size()],
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Raw half-plane storage (index `k2 * M + r1`).
    pub fn raw(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn raw_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Coefficient of exp(i pi k.x) for any k in [-M/2, M/2)^2.
    pub fn coefficient(&self, k1: i64, k2: i64) -> Complex64 {
        let g = self.grid;
        let half = (g.size() / 2) as i64;
        if k2 >= 0 && k2 <= half {
            self.coeffs[k2 as usize * g.size() + g.bin(k1)]
        } else {
            self.coeffs[(-k2) as usize * g.size() + g.bin(-k1)].conj()
        }
    }

    /// Sets the coefficient at (k1,k2) with 0 <= k2 <= M/2. The conjugate
    /// partner is implied by the half-plane storage.
    pub fn set_coefficient(&mut self, k1: i64, k2: i64, value: Complex64) {
        let g = self.grid;
        assert!(k2 >= 0 && k2 as usize <= g.size() / 2, "k2 out of stored half plane");
        self.coeffs[k2 as usize * g.size() + g.bin(k1)] = value;
    }

    pub fn mean(&self) -> Complex64 {
        self.coeffs[0]
    }

    /// Multiplies each coefficient by `f(k1, k2)`.
    pub fn apply_real_multiplier<F: Fn(i64, i64) -> f64>(&mut self, f: F) {
        let g = self.grid;
        let m = g.size();
        for k2 in 0..g.half() {
            let row = &mut self.coeffs[k2 * m..(k2 + 1) * m];
            for (r1, c) in row.iter_mut().enumerate() {
                *c *= f(g.wavenumber(r1), k2 as i64);
            }
        }
    }

    /// Multiplies each coefficient by `i * f(k1, k2)` (odd derivative symbols).
    pub fn apply_imag_multiplier<F: Fn(i64, i64) -> f64>(&mut self, f: F) {
        let g = self.grid;
        let m = g.size();
        let nyq = (m / 2) as i64;
        for k2 in 0..g.half() {
            let row = &mut self.coeffs[k2 * m..(k2 + 1) * m];
            for (r1, c) in row.iter_mut().enumerate() {
                let k1 = g.wavenumber(r1);
                // Odd symbols are not representable on the Nyquist lines.
                if k1 == -nyq || k2 as i64 == nyq {
                    *c = Complex64::new(0.0, 0.0);
                    continue;
                }
                let s = f(k1, k2 as i64);
                *c = Complex64::new(-c.im * s, c.re * s);
            }
        }
    }

    /// Spectral partial derivative along axis 0 (x1) or 1 (x2).
    pub fn partial(&self, axis: usize) -> SpectralField {
        let mut out = self.clone();
        match axis {
            0 => out.apply_imag_multiplier(|k1, _| PI * k1 as f64),
            1 => out.apply_imag_multiplier(|_, k2| PI * k2 as f64),
            _ => panic!("axis must be 0 or 1"),
        }
        out
    }

    /// Spectral Laplacian, multiplier -(pi |k|)^2.
    pub fn laplacian(&self) -> SpectralField {
        let mut out = self.clone();
        out.apply_real_multiplier(|k1, k2| -PI * PI * (k1 * k1 + k2 * k2) as f64);
        out
    }

    /// Sum over all k of w(k) |c_k|^2, accounting for the implied half plane.
    pub fn weighted_energy<F: Fn(i64, i64) -> f64>(&self, w: F) -> f64 {
        let g = self.grid;
        let m = g.size();
        let nyq = m / 2;
        let mut total = 0.0;
        for k2 in 0..g.half() {
            let mult = if k2 == 0 || k2 == nyq { 1.0 } else { 2.0 };
            let row = &self.coeffs[k2 * m..(k2 + 1) * m];
            let mut acc = 0.0;
            for (r1, c) in row.iter().enumerate() {
                acc += w(g.wavenumber(r1), k2 as i64) * c.norm_sqr();
            }
            total += mult * acc;
        }
        total
    }

    /// int |f|^2 over the torus by Parseval.
    pub fn l2_norm_sq(&self) -> f64 {
        4.0 * self.weighted_energy(|_, _| 1.0)
    }

    /// int |grad f|^2 over the torus by Parseval.
    pub fn h1_seminorm_sq(&self) -> f64 {
        4.0 * PI * PI * self.weighted_energy(|k1, k2| (k1 * k1 + k2 * k2) as f64)
    }

    /// Odd-odd projection in coefficient space. Agrees exactly with the
    /// grid antisymmetrization of [`project_odd_odd`].
    pub fn project_odd_odd(&self) -> SpectralField {
        let g = self.grid;
        let m = g.size();
        let mut out = SpectralField::zeros(g);
        for k2 in 0..g.half() {
            for r1 in 0..m {
                let mirror = (m - r1) % m;
                let a = self.coeffs[k2 * m + r1];
                let b = self.coeffs[k2 * m + mirror];
                // P c(k) = [c(k1,k2) - c(-k1,k2) - c(k1,-k2) + c(-k1,-k2)] / 4
                // with c(k1,-k2) = conj c(-k1,k2), c(-k1,-k2) = conj c(k1,k2).
                let v = (a - b - b.conj() + a.conj()) * 0.25;
                out.coeffs[k2 * m + r1] = v;
            }
        }
        // k2 = 0 and k2 = M/2 rows are their own mirror in k2; the formula
        // above already produces 0 there for odd-in-x2 fields.
        out
    }
}

/// Forward transform of M x M real samples.
pub fn forward_transform(grid: Grid, samples: &[f64]) -> Result<SpectralField> {
    let m = grid.size();
    if samples.len() != grid.len() {
        return Err(Error::config(format!(
            "expected {} samples for M={m}, got {}",
            grid.len(),
            samples.len()
        )));
    }
    let h = grid.half();
    let p = plans(m);
    let mut rows = vec![Complex64::new(0.0, 0.0); m * h];
    let mut input = p.r2c.make_input_vec();
    let mut scratch = p.r2c.make_scratch_vec();
    for i1 in 0..m {
        input.copy_from_slice(&samples[i1 * m..(i1 + 1) * m]);
        p.r2c
            .process_with_scratch(&mut input, &mut rows[i1 * h..(i1 + 1) * h], &mut scratch)
            .map_err(|e| Error::numerical(format!("real FFT failed: {e}")))?;
    }
    let mut coeffs = vec![Complex64::new(0.0, 0.0); m * h];
    transpose(&rows, m, h, &mut coeffs);
    p.fwd.process(&mut coeffs);
    let norm = 1.0 / (m * m) as f64;
    for k2 in 0..h {
        for r1 in 0..m {
            let s = parity_sign(grid.wavenumber(r1), k2 as i64) * norm;
            coeffs[k2 * m + r1] *= s;
        }
    }
    Ok(SpectralField { grid, coeffs })
}

/// Inverse transform back to M x M real samples.
pub fn inverse_transform(field: &SpectralField) -> Vec<f64> {
    let grid = field.grid;
    let m = grid.size();
    let h = grid.half();
    let p = plans(m);
    let mut cols = field.coeffs.clone();
    for k2 in 0..h {
        for r1 in 0..m {
            cols[k2 * m + r1] *= parity_sign(grid.wavenumber(r1), k2 as i64);
        }
    }
    p.inv.process(&mut cols);
    let mut rows = vec![Complex64::new(0.0, 0.0); m * h];
    transpose(&cols, h, m, &mut rows);
    let mut out = vec![0.0; m * m];
    let mut scratch = p.c2r.make_scratch_vec();
    for i1 in 0..m {
        let row = &mut rows[i1 * h..(i1 + 1) * h];
        row[0].im = 0.0;
        row[h - 1].im = 0.0;
        // The only failure mode is nonzero imaginary DC/Nyquist, cleared above.
        p.c2r
            .process_with_scratch(row, &mut out[i1 * m..(i1 + 1) * m], &mut scratch)
            .expect("inverse real FFT");
    }
    out
}

fn check_mean_zero(field: &SpectralField) -> Result<SpectralField> {
    let mean = field.mean();
    if mean.norm() > MEAN_ZERO_TOL {
        return Err(Error::invalid(format!(
            "Biot-Savart requires a mean-zero field, mean mode = {:.3e}",
            mean.norm()
        )));
    }
    let mut out = field.clone();
    out.coeffs[0] = Complex64::new(0.0, 0.0);
    Ok(out)
}

/// Streamfunction psi with Laplacian(psi) = omega and zero mean.
pub fn invert_laplacian(omega: &SpectralField) -> Result<SpectralField> {
    let mut psi = check_mean_zero(omega)?;
    psi.apply_real_multiplier(|k1, k2| {
        let kk = (k1 * k1 + k2 * k2) as f64;
        if kk == 0.0 {
            0.0
        } else {
            -1.0 / (PI * PI * kk)
        }
    });
    Ok(psi)
}

/// Spectral coefficients of u = (d2 psi, -d1 psi), so that w = d2 u1 - d1 u2
/// (positive vorticity turns clockwise).
pub fn velocity_spectra(omega: &SpectralField) -> Result<(SpectralField, SpectralField)> {
    let psi = invert_laplacian(omega)?;
    let u1 = psi.partial(1);
    let mut u2 = psi.partial(0);
    u2.apply_real_multiplier(|_, _| -1.0);
    Ok((u1, u2))
}

/// Biot-Savart law on the torus, evaluated through the streamfunction.
pub fn velocity_from_vorticity(omega: &VorticityField) -> Result<VelocityField> {
    let spec = omega.spectrum();
    let (u1, u2) = velocity_spectra(spec)?;
    Ok(VelocityField::new(
        omega.grid(),
        inverse_transform(&u1),
        inverse_transform(&u2),
        omega.time(),
    ))
}

/// Fourier multiplier (pi |k|)^s for s in (0, 2].
pub fn fractional_derivative(field: &SpectralField, s: f64) -> Result<SpectralField> {
    if !(s > 0.0 && s <= 2.0) {
        return Err(Error::config(format!("fractional order s={s} outside (0,2]")));
    }
    let mut out = field.clone();
    out.apply_real_multiplier(|k1, k2| {
        let k = ((k1 * k1 + k2 * k2) as f64).sqrt();
        (PI * k).powf(s)
    });
    Ok(out)
}

/// 2/3-rule truncation: zero every mode with max(|k1|,|k2|) > M/3.
pub fn dealias(field: &SpectralField) -> SpectralField {
    let mut out = field.clone();
    dealias_in_place(&mut out);
    out
}

pub(crate) fn dealias_in_place(field: &mut SpectralField) {
    let g = field.grid;
    let m = g.size();
    let cutoff = m as f64 / 3.0;
    for k2 in 0..g.half() {
        for r1 in 0..m {
            let k1 = g.wavenumber(r1);
            if (k1.unsigned_abs() as f64) > cutoff || (k2 as f64) > cutoff {
                field.coeffs[k2 * m + r1] = Complex64::new(0.0, 0.0);
            }
        }
    }
}

/// Antisymmetrization g(x) = [f(x1,x2) - f(-x1,x2) - f(x1,-x2) + f(-x1,-x2)]/4
/// on grid samples.
pub fn project_odd_odd(grid: Grid, samples: &[f64]) -> Vec<f64> {
    let m = grid.size();
    let mut out = vec![0.0; m * m];
    for i1 in 0..m {
        let j1 = grid.mirror(i1);
        for i2 in 0..m {
            let j2 = grid.mirror(i2);
            out[i1 * m + i2] = 0.25
                * (samples[i1 * m + i2] - samples[j1 * m + i2] - samples[i1 * m + j2]
                    + samples[j1 * m + j2]);
        }
    }
    out
}

/// Projects a vorticity field and marks it odd-odd.
pub fn project_field_odd_odd(field: &VorticityField) -> VorticityField {
    let g = field.grid();
    VorticityField::new(
        g,
        project_odd_odd(g, field.samples()),
        Symmetry::OddOdd,
        field.time(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(grid: Grid, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    fn sinsin(grid: Grid) -> Vec<f64> {
        grid.sample(|x, y| (PI * x).sin() * (PI * y).sin())
    }

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn grid_rejects_bad_sizes() {
        assert!(Grid::new(32).is_err());
        assert!(Grid::new(96).is_err());
        assert!(Grid::new(64).is_ok());
        let g = Grid::new(64).unwrap();
        assert_eq!(g.coord(32), 0.0);
        assert_eq!(g.mirror(0), 0);
        assert_eq!(g.mirror(1), 63);
    }

    #[test]
    fn constant_field_has_only_mean_mode() {
        let g = Grid::new(64).unwrap();
        let f = forward_transform(g, &vec![1.0; g.len()]).unwrap();
        assert!((f.coefficient(0, 0).re - 1.0).abs() < 1e-14);
        let others = f.weighted_energy(|k1, k2| if k1 == 0 && k2 == 0 { 0.0 } else { 1.0 });
        assert!(others < 1e-28);
    }

    #[test]
    fn single_mode_has_four_coefficients() {
        let g = Grid::new(64).unwrap();
        let f = forward_transform(g, &sinsin(g)).unwrap();
        // sin(pi x) sin(pi y) = -(1/4) sum_{s1,s2} s1 s2 e^{i pi (s1 x + s2 y)}
        for (k1, k2) in [(1, 1), (-1, -1), (1, -1), (-1, 1)] {
            let expect = -0.25 * (k1 * k2) as f64;
            let c = f.coefficient(k1, k2);
            assert!((c.re - expect).abs() < 1e-14 && c.im.abs() < 1e-14, "{k1},{k2}: {c}");
        }
        let rest = f.weighted_energy(|k1, k2| if k1.abs() == 1 && k2.abs() == 1 { 0.0 } else { 1.0 });
        assert!(rest < 1e-28);
    }

    #[test]
    fn round_trip_and_parseval_on_random_field() {
        let g = Grid::new(128).unwrap();
        let f = random_field(g, 7);
        let spec = forward_transform(g, &f).unwrap();
        let back = inverse_transform(&spec);
        let scale = f.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(max_abs_diff(&f, &back) / scale < 1e-12);
        // Direct summation oracle.
        let h = g.spacing();
        let direct: f64 = f.iter().map(|v| v * v).sum::<f64>() * h * h;
        let parseval = spec.l2_norm_sq();
        assert!(((direct - parseval) / direct).abs() < 1e-10);
    }

    #[test]
    fn dimension_mismatch_is_config_error() {
        let g = Grid::new(64).unwrap();
        assert!(matches!(forward_transform(g, &[0.0; 10]), Err(Error::Config(_))));
    }

    #[test]
    fn invert_laplacian_eigenfunction() {
        let g = Grid::new(64).unwrap();
        let mut w = SpectralField::zeros(g);
        w.set_coefficient(1, 1, Complex64::new(1.0, 0.0));
        let psi = invert_laplacian(&w).unwrap();
        let expect = -1.0 / (2.0 * PI * PI);
        assert!((psi.coefficient(1, 1).re - expect).abs() < 1e-15);

        let zero = invert_laplacian(&SpectralField::zeros(g)).unwrap();
        assert!(zero.raw().iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn invert_laplacian_rejects_mean() {
        let g = Grid::new(64).unwrap();
        let spec = forward_transform(g, &vec![1e-6; g.len()]).unwrap();
        assert!(matches!(invert_laplacian(&spec), Err(Error::InvalidInput(_))));
        let tiny = forward_transform(g, &vec![1e-14; g.len()]).unwrap();
        let psi = invert_laplacian(&tiny).unwrap();
        assert_eq!(psi.mean().norm(), 0.0);
    }

    #[test]
    fn single_mode_velocity() {
        let g = Grid::new(64).unwrap();
        let w = VorticityField::new(g, sinsin(g), Symmetry::OddOdd, 0.0);
        let u = velocity_from_vorticity(&w).unwrap();
        let e1 = g.sample(|x, y| -(PI * x).sin() * (PI * y).cos() / (2.0 * PI));
        let e2 = g.sample(|x, y| (PI * x).cos() * (PI * y).sin() / (2.0 * PI));
        assert!(max_abs_diff(u.u1(), &e1) < 1e-14);
        assert!(max_abs_diff(u.u2(), &e2) < 1e-14);
    }

    #[test]
    fn fractional_derivative_symbols() {
        let g = Grid::new(64).unwrap();
        let mut w = SpectralField::zeros(g);
        w.set_coefficient(1, 1, Complex64::new(1.0, 0.0));
        let d2 = fractional_derivative(&w, 2.0).unwrap();
        assert!((d2.coefficient(1, 1).re - 2.0 * PI * PI).abs() < 1e-12);
        assert!(fractional_derivative(&w, 0.0).is_err());
        assert!(fractional_derivative(&w, 2.5).is_err());

        let spec = forward_transform(g, &random_field(g, 3)).unwrap();
        let once = fractional_derivative(&spec, 2.0).unwrap();
        let twice =
            fractional_derivative(&fractional_derivative(&spec, 1.0).unwrap(), 1.0).unwrap();
        for (a, b) in once.raw().iter().zip(twice.raw()) {
            assert!((a - b).norm() <= 1e-12 * a.norm().max(1.0));
        }
        // s = 2 is minus the spectral Laplacian.
        let lap = spec.laplacian();
        for (a, b) in once.raw().iter().zip(lap.raw()) {
            assert!((a + b).norm() <= 1e-12 * a.norm().max(1.0));
        }
    }

    #[test]
    fn odd_odd_projection() {
        let g = Grid::new(64).unwrap();
        let s = sinsin(g);
        let p = project_odd_odd(g, &s);
        assert!(max_abs_diff(&s, &p) < 1e-15);
        let c = project_odd_odd(g, &vec![1.0; g.len()]);
        assert!(c.iter().all(|v| *v == 0.0));

        let r = random_field(g, 11);
        let p1 = project_odd_odd(g, &r);
        let p2 = project_odd_odd(g, &p1);
        assert!(max_abs_diff(&p1, &p2) < 1e-15);
        for i1 in 0..g.size() {
            for i2 in 0..g.size() {
                let v = p1[g.index(i1, i2)];
                assert_eq!(v, -p1[g.index(g.mirror(i1), i2)]);
                assert_eq!(v, -p1[g.index(i1, g.mirror(i2))]);
            }
        }
        // Coefficient-space projection matches the grid projection.
        let spec = forward_transform(g, &r).unwrap().project_odd_odd();
        assert!(max_abs_diff(&inverse_transform(&spec), &p1) < 1e-13);
    }

    #[test]
    fn dealias_rule() {
        let g = Grid::new(64).unwrap();
        let mut w = SpectralField::zeros(g);
        w.set_coefficient(31, 0, Complex64::new(1.0, 0.0));
        w.set_coefficient(1, 1, Complex64::new(1.0, 0.0));
        w.set_coefficient(-22, 5, Complex64::new(1.0, 0.0));
        let d = dealias(&w);
        assert_eq!(d.coefficient(31, 0).norm(), 0.0);
        assert_eq!(d.coefficient(-22, 5).norm(), 0.0);
        assert_eq!(d.coefficient(1, 1).re, 1.0);
        assert_eq!(dealias(&d), d);
    }
}
