//! Trajectory-aware vehicle selection and data collection for vehicular
//! federated learning.
//!
//! Vehicles gather labelled data while driving through street blocks whose
//! class mixes differ. Each round the server picks `S` vehicles and tells each
//! one after how many blocks to stop collecting and start training. The
//! choice trades data quality (how close the collected label mix is to the
//! regional target) against the chance that the trained model is uploaded
//! before the round deadline.
//!
//! * [`scenario`]: world model, JSON schema, synthetic generator.
//! * [`divergence`]: class-distribution mixtures and the L1 divergence.
//! * [`timing`]: latency model and reception probability.
//! * [`objective`]: per-decision divergence breakdown and the loss bound.
//! * [`optimizer`]: bisection + local search selector and a brute-force oracle.
//! * [`baselines`]: reference selection strategies.
//! * [`flsim`]: small federated training loop on a softmax classifier.
//! * [`cli`]: batch command-line front end.

// `!(x > 0.0)` style checks deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod cli;
pub mod divergence;
pub mod error;
pub mod flsim;
pub mod objective;
pub mod optimizer;
pub mod rng;
pub mod scenario;
#[doc(hidden)]
pub mod testkit;
pub mod timing;

pub use error::{Error, Result};
