//! Globally adaptive Gauss-Kronrod (7/15) quadrature on intervals.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Kronrod estimate and |Kronrod - Gauss| on [a, b].
fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Integral of `f` over [a, b] to within max(abs_tol, rel_tol * |I|).
/// `breaks` are interior points where `f` may be non-smooth.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if !(a < b) {
        return Err(Error::config(format!("integration interval [{a}, {b}] is reversed")));
    }
    let mut pts = vec![a];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    inner.sort_by(|x, y| x.total_cmp(y));
    pts.extend(inner);
    pts.push(b);

    // (a, b, value, error)
    let mut panels: Vec<(f64, f64, f64, f64)> = pts
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| {
            let (v, e) = gk15(&mut f, w[0], w[1]);
            (w[0], w[1], v, e)
        })
        .collect();
    for _ in 0..4000 {
        let total: f64 = panels.iter().map(|p| p.2).sum();
        let err: f64 = panels.iter().map(|p| p.3).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(total);
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("nonempty");
        let (pa, pb, _, _) = panels.swap_remove(worst);
        let mid = 0.5 * (pa + pb);
        if !(mid > pa && mid < pb) {
            break;
        }
        let (v1, e1) = gk15(&mut f, pa, mid);
        let (v2, e2) = gk15(&mut f, mid, pb);
        panels.push((pa, mid, v1, e1));
        panels.push((mid, pb, v2, e2));
    }
    let total: f64 = panels.iter().map(|p| p.2).sum();
    let err: f64 = panels.iter().map(|p| p.3).sum();
    Err(Error::numerical(format!(
        "adaptive quadrature did not converge on [{a}, {b}]: estimate {total:.6e}, error {err:.3e}"
    )))
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}
