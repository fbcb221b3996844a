//! Quantitative diagnostics: image-sum velocity oracle, quadrant-integral
//! decomposition, norm instrumentation, angular occupancy, flow-geometry
//! reports and the losing-exponent curve.

pub mod bahouri_chemin;
pub mod constants;
pub mod growth;
pub mod keylemma;
pub mod lattice;
pub mod losing;
pub mod norms;
pub mod occupancy;
pub mod quadrature;
pub mod stats;
pub mod wedge;

pub use bahouri_chemin::{fit_bc_constant, BcFit};
pub use growth::{growth_ratio, GrowthSeries};
pub use keylemma::{key_lemma_decompose, KeyLemmaReport};
pub use lattice::lattice_biot_savart;
pub use losing::{losing_exponent_curve, LosingExponent};
pub use norms::{norm_report, NormReport};
pub use occupancy::{angular_occupancy, AngularOccupancy};
pub use wedge::{case_ii_wedge_diagnostic, WedgeReport};
