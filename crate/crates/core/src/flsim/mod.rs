//! Federated-learning simulator: per-block data, a small softmax model,
//! stochastic trajectories and uploads, and weighted aggregation.

mod data;
mod model;
mod sim;

pub use data::{synthesize_block_data, BlockData, FeatureModel};
pub use model::{local_sgd, softmax, Dataset, ToyModel};
pub use sim::{
    aggregate, draw_trajectory, realize_round, run_training, write_csv, Realization, RoundLog, SimConfig,
    Simulation, Strategy, VehicleRound,
};
