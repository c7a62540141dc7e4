//! Q-learning over macro-augmented action spaces with a similarity penalty.
//!
//! The crate is organized bottom-up:
//!
//! - [`numcore`]: dense matrices and a small MLP with exact gradients and
//!   Jacobian-vector products.
//! - [`envs`]: deterministic gridworld / fighting-lane / chain environments
//!   and the trajectory recording format.
//! - [`mining`]: frequent action-subsequence mining, the augmented action
//!   space, and macro corruption for noise ablations.
//! - [`agent`]: replay buffer, macro execution with n-step accumulation,
//!   epsilon-greedy selection and the TD loss.
//! - [`masp`]: the similarity penalty, similarity-matrix projection and
//!   entropy regularization, the one-step meta-gradient and the training loop.
//! - [`harness`]: experiment configs, metrics, checkpoints and the
//!   `mine`/`train`/`eval`/`sweep`/`transfer` commands behind the CLI.
//!
//! Runnable walkthroughs for each capability live in `examples/`.

pub mod agent;
pub mod envs;
pub mod error;
pub mod harness;
pub mod masp;
pub mod mining;
pub mod numcore;
pub mod streams;

pub use error::{Error, Result};
