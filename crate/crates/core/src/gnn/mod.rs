//! Edge-feature graph network mapping per-user covariance first rows to
//! multi-user precoders, with hand-written reverse-mode gradients and an
//! Adam training loop on the negative sum-rate.

mod io;
mod layer;
mod model;
mod network;
mod optim;
mod train;

pub use io::{GnnHeader, GNN_FILE_VERSION};
pub use layer::EdgeFeatures;
pub use model::{Activation, EdgeLayer, FeatureExtractor, GnnConfig, GnnModel};
pub use network::{batch_gradient, extract_features, forward, scenario_gradient, BatchGradient, TrainingSample};
pub use optim::Adam;
pub use train::{
    noise_variance_from_snr_db, regroup_users, LrSchedule, train, EpochRecord, StatisticsResolver, StatisticsSource, TrainConfig,
    TrainingLog,
};
