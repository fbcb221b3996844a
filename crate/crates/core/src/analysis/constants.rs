//! Constants fitted once on calibration runs and frozen. Checks on fresh
//! configurations allow a factor [`SLACK`].

use crate::flow_map::FlowConstants;

pub const SLACK: f64 = 2.0;

/// Key Lemma remainder: |B_i| <= C_B |w|_inf (1 + ln(1 + x_{3-i}/x_i)).
/// Calibration: Bahouri-Chemin at M = 512, 2048 and bump data N = 16..128
/// (M = 16N), points x1 in {0.003, 0.01, 0.03, 0.1}, x2/x1 in
/// {1, 2, 5, 10, 20, 50, 100}; worst ratio 0.842.
pub const KEY_LEMMA_CB: f64 = 0.85;

/// Two-sided Hölder exponents of the flow map. Calibration: bump data N = 32,
/// M = 512, t = t*(1, 32), 84 probes on 12 radii in [1/N, N^-1/2]; fitted
/// (0.158, 0.207).
pub const FLOW: FlowConstants = FlowConstants {
    lower: 0.16,
    upper: 0.21,
};

/// Radial ratio exponents: (ln N)^{-c tau} <= |Phi(t,x)|/|x| <= (ln N)^{C tau}.
/// Same calibration run; fitted (0.162, 0.200).
pub const RADIAL_CONTRACTION: f64 = 0.165;
pub const RADIAL_EXPANSION: f64 = 0.2;

/// Losing-estimate constant: smallest C on a 1/8-decade grid with
/// |grad w(t)|_{q(t)} <= |grad w0|_2 along bump data N = 32 up to t*(1, 32).
pub const LOSING_C: f64 = 0.0057;
