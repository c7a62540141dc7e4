//! Dense linear algebra and a small MLP with exact reverse-mode gradients.
//!
//! Everything here is a pure function over value types; the training code
//! clones parameters freely instead of sharing mutable state.

mod matrix;
mod mlp;

pub use matrix::{axpy, dot, Matrix};
pub use mlp::{Activation, Dense, Gradients, Mlp, Trace};

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// How Jacobian-vector products are evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum JvpMode {
    /// Forward-mode tangent propagation.
    #[default]
    Exact,
    /// Symmetric differences over the parameters.
    FiniteDifference { step: f64 },
}

impl JvpMode {
    pub fn apply(self, net: &Mlp, input: &[f64], direction: &Gradients) -> Result<Vec<f64>> {
        match self {
            JvpMode::Exact => net.jvp(input, direction),
            JvpMode::FiniteDifference { step } => net.jvp_fd(input, direction, step),
        }
    }

    /// Network output and directional derivative in one call.
    pub fn forward_and_apply(self, net: &Mlp, input: &[f64], direction: &Gradients) -> Result<(Vec<f64>, Vec<f64>)> {
        match self {
            JvpMode::Exact => net.forward_jvp(input, direction),
            JvpMode::FiniteDifference { step } => Ok((net.forward(input)?, net.jvp_fd(input, direction, step)?)),
        }
    }
}
