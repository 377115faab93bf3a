//! Feed-forward regressor from `(n_a, n_b, μ_2, …, μ_M)` to the
//! logarithmic negativity.
//!
//! Dense layers with relu/elu/linear activations, one linear output unit
//! clamped at zero, mean-squared-error training with Adam, exact input
//! gradients for error propagation, and a text model format.

mod io;
mod network;
mod train;

pub use io::{load_model, model_from_str, model_to_string, save_model, MODEL_FORMAT_VERSION};
pub use network::{
    init_network, input_gradient, propagate_error, Activation, InputGradient, Layer, NetworkModel, NetworkSpec,
    Standardization, TrainingMeta,
};
pub use train::{train, Family, Provenance, TrainParams, TrainingHistory, TrainingSample};
