//! Macro-action similarity penalty and meta-learning of the similarity matrix.
//!
//! The penalty `η · mean_i ‖q_i − Σ q_i‖²` pulls Q-values of similar actions
//! together. `Σ` itself is learned by differentiating the TD loss on a fresh
//! batch through one SGD step of the regularized loss, then projected back to
//! a symmetric `[0, 1]` matrix.

mod meta;
mod penalty;
mod sigma;
mod train;

pub use meta::{meta_gradient, MetaProblem};
pub use penalty::{masp_loss, regularized_td, BatchLoss};
pub use sigma::{
    embed_sigma, entropy_reg, meta_update, project_sigma, EmbeddingMap, SigmaStats, SimilarityMatrix,
    DEFAULT_NORM_OFFSET,
};
pub use train::{
    evaluate, train_loop, Counters, EvalSummary, MetricsRecord, TrainConfig, TrainOutcome, Trainer,
    TrainerState,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::JvpMode;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaspConfig {
    /// Penalty weight `η`.
    pub eta: f64,
    /// Meta learning rate `β`; 0 freezes `Σ`.
    pub beta: f64,
    /// Entropy coefficient `λ_H` on the row-normalized `Σ`.
    pub entropy_coef: f64,
    pub norm_offset: f64,
    /// Width of `e_Σ`; 0 disables the conditioning input.
    pub embed_dim: usize,
    /// Upper bound of the off-diagonal noise in the initial `Σ`.
    pub sigma_init_noise: f64,
    pub jvp: JvpMode,
}

impl Default for MaspConfig {
    fn default() -> Self {
        Self {
            eta: 0.1,
            beta: 0.001,
            entropy_coef: 1e-3,
            norm_offset: DEFAULT_NORM_OFFSET,
            embed_dim: 8,
            sigma_init_noise: 0.05,
            jvp: JvpMode::Exact,
        }
    }
}

impl MaspConfig {
    /// Penalty and meta-learning switched off.
    pub fn disabled() -> Self {
        Self {
            eta: 0.0,
            beta: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, field: &str, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::config(format!("masp.{field}"), msg))
            }
        };
        check(self.eta >= 0.0 && self.eta.is_finite(), "eta", "must be finite and >= 0")?;
        check(self.beta >= 0.0 && self.beta.is_finite(), "beta", "must be finite and >= 0")?;
        check(self.entropy_coef >= 0.0, "entropy_coef", "must be >= 0")?;
        check(self.norm_offset > 0.0, "norm_offset", "must be > 0")?;
        check(
            (0.0..=1.0).contains(&self.sigma_init_noise),
            "sigma_init_noise",
            "must lie in [0, 1]",
        )?;
        if let JvpMode::FiniteDifference { step } = self.jvp {
            check(step > 0.0, "jvp.step", "must be > 0")?;
        }
        Ok(())
    }
}
