//! Benchmark densities.

pub mod mixture;
pub mod mlp;
pub mod pima;
pub mod sensor;

pub use mixture::{
    bimodal_1d, mixture_8, mixture_8_modes, trimodal_2d, trimodal_spec, GaussianMixture,
    GaussianMixtureSpec,
};
pub use mlp::{f0, simulate_regression, Activation, Dataset, MlpPosterior, MlpSpec, OutputActivation};
pub use pima::{load_pima_csv, PimaSplit};
pub use sensor::{
    generate_sensor_data, Node, PairObservation, SensorNetworkSpec, SensorPosterior,
    DEFAULT_ANCHORS, DEFAULT_SENSORS,
};
