//! Finite-alphabet MIMO linear precoding toolkit.
//!
//! Computes capacity-optimal (water-filling) and finite-alphabet-optimal
//! linear precoders for small MIMO channels, estimates constellation-
//! constrained mutual information by exact symbol enumeration plus Monte-Carlo
//! noise averaging, and trains a small fully-connected network that maps
//! water-filling precoders to finite-alphabet-optimal ones so that new
//! channels need only a single forward pass.
//!
//! Everything stochastic is seeded and reproducible; see the module docs for
//! each piece's determinism contract.

pub mod capacity;
pub mod constellation;
pub mod dataset;
pub mod error;
pub mod matrix;
pub mod mimo;
pub mod neural;
pub mod optimizer;
pub mod quadrature;
pub mod rng;

pub use capacity::{
    mi_finite_alphabet, mi_gradient, mi_scalar_quadrature, mi_with_draws, mmse_matrix,
    mmse_scalar_quadrature, mmse_with_draws, MiEstimate, MmseMatrix, MAX_SYMBOL_VECTORS,
};
pub use constellation::{
    make_constellation, make_constellation_named, Constellation, ConstellationKind,
};
pub use dataset::{
    build_dataset, canonicalize_label, gen_rayleigh_channel, load_dataset, sample_channel,
    split_train_test, ChannelSample, DatasetHeader,
};
pub use error::{Error, Result};
pub use matrix::ComplexMatrix;
pub use mimo::{
    gaussian_mi, normalize_matrix_power, normalize_power, svd, water_fill, wf_precoder,
    ChannelMatrix, Precoder, Svd, POWER_TOL, SVD_TOL,
};
pub use neural::{
    devectorize_precoder, infer_precoder, init_xavier, train_sgd, vectorize_precoder, Activation,
    LayerSpec, MlpModel, TrainConfig,
};
pub use optimizer::{
    identity_precoder, optimize_precoder, IterationRecord, OptimConfig, OptimTrace,
};
pub use rng::{derive_seed, NoiseSampler};
