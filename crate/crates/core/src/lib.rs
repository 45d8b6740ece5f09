//! Sub-layered hierarchical pyramidal neural networks (HPNN).
//!
//! A pyramidal layer arranges its neurons on a grid. Each neuron sees a
//! fixed `r × r` receptive field of the previous layer, adjacent fields
//! overlap by `o` rows/columns, and weights are tied to *input* positions:
//! the weight on input neuron `(k, i, j)` is shared by every output neuron
//! of a sub-layer whose field covers `(i, j)`. Each of the `S` sub-layers of
//! a layer owns its own input-sized weight tensor, which is what lets a
//! pyramidal layer detect more than one pattern per region. With `S = 1`
//! everywhere the network reduces to the classic PyraNet.
//!
//! The crate is organised bottom-up:
//!
//! * [`feature_map`]: feature maps, activations, softmax cross-entropy.
//! * [`pyramidal`], [`dense`], [`network`]: layers, assembly,
//!   initialisation, parameter counting.
//! * [`serialize`]: the `HPNN` binary model container.
//! * [`trainer`]: SGD with momentum, early stopping, evaluation and the
//!   finite-difference gradient checker.
//! * [`data`]: PGM decoding, resizing, blur, dataset indices,
//!   subject-independent folds and a synthetic corpus generator.
//! * [`experiment`] and [`cli`]: cross-validation, blur sweeps and the
//!   `hpnn` command-line front end.
//!
//! All arithmetic is `f64`. Every source of randomness is a [`rng::SplitMix64`]
//! seeded explicitly, so runs are bitwise reproducible.

pub mod cli;
pub mod data;
pub mod dense;
pub mod error;
pub mod experiment;
pub mod feature_map;
pub mod network;
pub mod precise;
pub mod pyramidal;
pub mod rng;
pub mod serialize;
pub mod trainer;

pub use dense::{DenseCache, DenseLayerSpec, DenseParams};
pub use error::{Error, Result};
pub use feature_map::{ActivationKind, ClassDistribution, FeatureMap, SoftmaxXent};
pub use network::{
    count_params, init_params, network_backward, network_forward, ForwardPass, GradientSet, Network,
    NetworkParams, NetworkSpec, ParamCount,
};
pub use pyramidal::{
    output_grid_shape, BiasScheme, LayerCache, PyramidalLayerSpec, PyramidalParams,
};
pub use rng::SplitMix64;
pub use trainer::{evaluate, gradient_check, sgd_step, train, EvalReport, Sample, TrainConfig, TrainHistory};
