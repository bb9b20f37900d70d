//! Stochastic approximation Hamiltonian Monte Carlo.
//!
//! The sampler runs ordinary HMC on the energy-reweighted density
//! `f_theta(x) ∝ psi(x) / exp(theta[J(U(x))])`, where `J` maps a potential
//! energy to a region of a fixed partition and `theta` is adapted on the fly
//! until every region is visited at its desired frequency. With a single
//! region it reduces to HMC exactly.
//!
//! ```
//! use sahmc::{run_chain, Algorithm, EnergyPartition, GainSchedule, SamplerConfig};
//! use sahmc::targets::bimodal_1d;
//!
//! let target = bimodal_1d(3.0, 1.0);
//! let config = SamplerConfig::new(0.3, 10, 2_000)
//!     .with_partition(EnergyPartition::new(vec![2.5, 4.5]).unwrap())
//!     .with_gain(GainSchedule::new(100.0).unwrap())
//!     .with_seed(1);
//! let record = run_chain(&config, &target, Algorithm::Sahmc).unwrap();
//! assert_eq!(record.len(), 2_000);
//! ```

pub mod adaptation;
pub mod config;
pub mod diagnostics;
mod error;
pub mod integrator;
pub mod mass;
pub mod partition;
pub mod sampler;
pub mod target;
pub mod targets;

pub use adaptation::{GainSchedule, ThetaWeights, DEFAULT_THETA_BOUND};
pub use config::{Algorithm, InitialPosition, SamplerConfig, ThetaFreeze};
pub use error::{Error, Result};
pub use mass::{MassMatrix, MassSpec};
pub use partition::EnergyPartition;
pub use sampler::{run_chain, run_parallel, ChainState, RunRecord, ThetaSnapshot};
pub use target::{gradient_error, FnTarget, StandardNormal, TargetDensity};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/energy-partition.md")]
    mod energy_partition {}
    #[doc = include_str!("../../../book/src/adaptation.md")]
    mod adaptation {}
    #[doc = include_str!("../../../book/src/integrator.md")]
    mod integrator {}
    #[doc = include_str!("../../../book/src/targets.md")]
    mod targets {}
    #[doc = include_str!("../../../book/src/diagnostics.md")]
    mod diagnostics {}
}
