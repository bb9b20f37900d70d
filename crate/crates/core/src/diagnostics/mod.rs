//! Run diagnostics: effective sample size, mode discovery, weight
//! convergence, energy barriers and regression risk.

pub mod barrier;
pub mod ess;
pub mod modes;
pub mod quadrature;
pub mod risk;
pub mod theta;

pub use barrier::{barrier_profile, BarrierProfile};
pub use ess::{ess, ess_report, Ess, EssReport};
pub use modes::{frequency_error, linkage_clusters, mode_assignment, mode_report, ModeReport};
pub use quadrature::region_masses;
pub use risk::{min_energy, posterior_risk};
pub use theta::{theta_convergence_check, ThetaConvergence};
