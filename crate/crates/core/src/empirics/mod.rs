//! Statistical checks run on simulated output.

pub mod angular;
pub mod degeneracy;
pub mod gauss;
pub mod hill;
pub mod integrability;
pub mod stats;

pub use angular::{angular_exceedance_test, AngularReport, AngularStatus};
pub use degeneracy::{fixed_point_degeneracy_check, DegeneracyReport};
pub use gauss::{chi2_diagonal_check, stam_density, stam_p2_check, DiagonalReport, StamReport};
pub use hill::{hill_estimate, hill_stability_scan, StabilityScan, TailFit};
pub use integrability::{integrability_probe, IntegrabilityReport, IntegrabilityTarget};
