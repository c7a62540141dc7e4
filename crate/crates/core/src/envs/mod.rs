//! Deterministic, seedable environments and the primitive MDP interface.
//!
//! Every environment owns its state; `reset(seed)` fully determines the
//! episode layout and `step` is a pure function of (state, action).

mod chain;
mod combo;
mod keydoor;
mod trajectory;

pub use chain::ChainWalk;
pub use combo::{Combo, ComboArena};
pub use keydoor::{Cell, KeyDoorGrid};
pub use trajectory::{read_trajectories, rollout, write_trajectories, EpisodeRecord};

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Index of a primitive action in an environment's native action set.
pub type ActionId = usize;

#[derive(Clone, Debug, PartialEq)]
pub struct EnvState {
    pub observation: Vec<f64>,
    pub done: bool,
    pub step_count: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub next_observation: Vec<f64>,
    pub reward: f64,
    pub done: bool,
}

pub trait Environment {
    fn action_names(&self) -> &'static [&'static str];

    fn num_actions(&self) -> usize {
        self.action_names().len()
    }

    fn observation_dim(&self) -> usize;

    fn reset(&mut self, seed: u64) -> EnvState;

    /// Errors with a contract violation when the episode already ended or the
    /// action is outside the primitive set.
    fn step(&mut self, action: ActionId) -> Result<StepResult>;

    fn state(&self) -> EnvState;

    /// Whether the finished episode counts as solved.
    fn success(&self) -> bool;

    /// Upper bound on a single-step reward.
    fn max_reward(&self) -> f64;
}

/// Declarative environment choice, as it appears in experiment configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvSpec {
    KeyDoor {
        #[serde(default = "default_grid_size")]
        size: usize,
        #[serde(default = "default_grid_cap")]
        max_steps: usize,
    },
    Combo {
        #[serde(default = "default_combo_cap")]
        max_steps: usize,
    },
    Chain {
        #[serde(default = "default_chain_states")]
        states: usize,
        #[serde(default = "default_chain_cap")]
        max_steps: usize,
    },
}

fn default_grid_size() -> usize {
    6
}
fn default_grid_cap() -> usize {
    200
}
fn default_combo_cap() -> usize {
    300
}
fn default_chain_states() -> usize {
    5
}
fn default_chain_cap() -> usize {
    50
}

impl Default for EnvSpec {
    fn default() -> Self {
        EnvSpec::KeyDoor {
            size: default_grid_size(),
            max_steps: default_grid_cap(),
        }
    }
}

impl EnvSpec {
    pub fn build(&self) -> Result<Env> {
        Ok(match *self {
            EnvSpec::KeyDoor { size, max_steps } => Env::KeyDoor(KeyDoorGrid::new(size, max_steps)?),
            EnvSpec::Combo { max_steps } => Env::Combo(ComboArena::new(max_steps)),
            EnvSpec::Chain { states, max_steps } => Env::Chain(ChainWalk::new(states, max_steps)?),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            EnvSpec::KeyDoor { .. } => "key_door",
            EnvSpec::Combo { .. } => "combo",
            EnvSpec::Chain { .. } => "chain",
        }
    }
}

/// Closed set of environments, so training code can clone and dispatch
/// statically.
#[derive(Clone, Debug)]
pub enum Env {
    KeyDoor(KeyDoorGrid),
    Combo(ComboArena),
    Chain(ChainWalk),
}

macro_rules! dispatch {
    ($self:ident, $e:ident => $body:expr) => {
        match $self {
            Env::KeyDoor($e) => $body,
            Env::Combo($e) => $body,
            Env::Chain($e) => $body,
        }
    };
}

impl Environment for Env {
    fn action_names(&self) -> &'static [&'static str] {
        dispatch!(self, e => e.action_names())
    }
    fn observation_dim(&self) -> usize {
        dispatch!(self, e => e.observation_dim())
    }
    fn reset(&mut self, seed: u64) -> EnvState {
        dispatch!(self, e => e.reset(seed))
    }
    fn step(&mut self, action: ActionId) -> Result<StepResult> {
        dispatch!(self, e => e.step(action))
    }
    fn state(&self) -> EnvState {
        dispatch!(self, e => e.state())
    }
    fn success(&self) -> bool {
        dispatch!(self, e => e.success())
    }
    fn max_reward(&self) -> f64 {
        dispatch!(self, e => e.max_reward())
    }
}

impl Env {
    /// A hand-written policy that solves (or plays reasonably in) the current
    /// episode; used to seed macro-mining corpora.
    pub fn scripted_action(&self) -> ActionId {
        match self {
            Env::KeyDoor(e) => e.scripted_action(),
            Env::Combo(e) => e.scripted_action(),
            Env::Chain(_) => ChainWalk::RIGHT,
        }
    }
}
