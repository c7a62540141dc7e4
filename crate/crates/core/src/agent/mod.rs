//! DQN-style agent over an augmented action space.
//!
//! Macros run as one decision: their primitive rewards are folded into an
//! n-step return and the bootstrap is discounted by `γ^L`, where `L` is the
//! number of primitives that actually ran.

mod buffer;
mod td;

pub use buffer::ReplayBuffer;
pub use td::{td_loss, td_targets};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::envs::{EnvState, Environment};
use crate::error::{Error, Result};
use crate::mining::{ActionSpace, AugmentedAction};
use crate::numcore::{Activation, Mlp};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: usize,
    /// `Σ_{i<L} γ^i r_i` over the executed primitives.
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub done: bool,
    /// `L`, the number of primitives executed.
    pub discount_exponent: u32,
}

/// Linear decay from `start` to `end` over `decay_steps`, flat afterwards.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub decay_steps: usize,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self {
            start: 0.2,
            end: 0.01,
            decay_steps: 50_000,
        }
    }
}

impl EpsilonSchedule {
    pub fn value(&self, step: usize) -> f64 {
        if self.decay_steps == 0 {
            return self.end;
        }
        if step >= self.decay_steps {
            return self.end;
        }
        let frac = step as f64 / self.decay_steps as f64;
        self.start + (self.end - self.start) * frac
    }
}

/// Online and target Q-networks over an augmented action space. The network
/// input is the state features followed by the similarity embedding.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QAgent {
    pub online: Mlp,
    pub target: Mlp,
    pub space: ActionSpace,
    pub gamma: f64,
}

impl QAgent {
    pub fn new<R: Rng + ?Sized>(
        state_dim: usize,
        embed_dim: usize,
        hidden: &[usize],
        activation: Activation,
        space: ActionSpace,
        gamma: f64,
        rng: &mut R,
    ) -> Self {
        let mut sizes = vec![state_dim + embed_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(space.len());
        let online = Mlp::init(&sizes, activation, rng);
        Self {
            target: online.clone(),
            online,
            space,
            gamma,
        }
    }

    /// Wraps an existing network; the target starts as a copy.
    pub fn from_network(online: Mlp, space: ActionSpace, gamma: f64) -> Result<Self> {
        if online.output_dim() != space.len() {
            return Err(Error::shape("QAgent::from_network", space.len(), online.output_dim()));
        }
        Ok(Self {
            target: online.clone(),
            online,
            space,
            gamma,
        })
    }

    pub fn q_values(&self, state: &[f64], e_sigma: &[f64]) -> Result<Vec<f64>> {
        self.online.forward(&network_input(state, e_sigma))
    }

    pub fn sync_target(&mut self) {
        self.target = self.online.clone();
    }
}

/// `state ⊕ e_sigma`.
pub fn network_input(state: &[f64], e_sigma: &[f64]) -> Vec<f64> {
    let mut x = Vec::with_capacity(state.len() + e_sigma.len());
    x.extend_from_slice(state);
    x.extend_from_slice(e_sigma);
    x
}

/// Index of the largest entry, lowest index on ties.
pub fn greedy(q: &[f64]) -> Result<usize> {
    if q.is_empty() {
        return Err(Error::Contract("cannot select from an empty Q vector".into()));
    }
    let mut best = 0;
    for (i, &v) in q.iter().enumerate().skip(1) {
        if v > q[best] {
            best = i;
        }
    }
    Ok(best)
}

/// Epsilon-greedy: uniform over all augmented actions with probability
/// `epsilon`, greedy otherwise. Always consumes one uniform draw.
pub fn select_action<R: Rng + ?Sized>(q: &[f64], epsilon: f64, rng: &mut R) -> Result<usize> {
    if q.is_empty() {
        return Err(Error::Contract("cannot select from an empty Q vector".into()));
    }
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::Contract(format!("epsilon must lie in [0, 1], got {epsilon}")));
    }
    if rng.gen::<f64>() < epsilon {
        Ok(rng.gen_range(0..q.len()))
    } else {
        greedy(q)
    }
}

/// Result of running one augmented action.
#[derive(Clone, Debug, PartialEq)]
pub struct Executed {
    pub transition: Transition,
    pub next_state: EnvState,
    /// Raw per-primitive rewards, for undiscounted episode returns.
    pub rewards: Vec<f64>,
}

pub fn execute_action<E: Environment + ?Sized>(
    env: &mut E,
    action: usize,
    space: &ActionSpace,
    gamma: f64,
) -> Result<Executed> {
    let start = env.state();
    if start.done {
        return Err(Error::Contract("cannot act in a finished episode".into()));
    }
    let single;
    let primitives: &[usize] = match space.decode(action) {
        Some(AugmentedAction::Primitive(a)) => {
            single = [a];
            &single
        }
        Some(AugmentedAction::Macro(_)) => space.primitives_of(action).unwrap_or(&[]),
        None => {
            return Err(Error::Contract(format!(
                "action {action} outside augmented space of size {}",
                space.len()
            )))
        }
    };
    let mut rewards = Vec::with_capacity(primitives.len());
    let mut ret = 0.0;
    let mut discount = 1.0;
    let mut done = false;
    let mut next_obs = start.observation.clone();
    for &p in primitives {
        let step = env.step(p)?;
        ret += discount * step.reward;
        discount *= gamma;
        rewards.push(step.reward);
        next_obs = step.next_observation;
        done = step.done;
        if done {
            break;
        }
    }
    let next_state = env.state();
    debug_assert_eq!(next_state.observation, next_obs);
    Ok(Executed {
        transition: Transition {
            state: start.observation,
            action,
            reward: ret,
            next_state: next_obs,
            done,
            discount_exponent: rewards.len() as u32,
        },
        next_state,
        rewards,
    })
}


/// Agent and optimizer hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    pub gamma: f64,
    pub epsilon: EpsilonSchedule,
    pub buffer_capacity: usize,
    pub batch_size: usize,
    /// Transitions collected before the first update.
    pub learning_starts: usize,
    /// Decisions between updates.
    pub update_period: usize,
    /// Decisions between target syncs.
    pub target_period: usize,
    /// SGD step size, shared by the inner and main updates.
    pub lr: f64,
    pub hidden: Vec<usize>,
    pub activation: Activation,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            epsilon: EpsilonSchedule::default(),
            buffer_capacity: 50_000,
            batch_size: 32,
            learning_starts: 1_000,
            update_period: 4,
            target_period: 1_000,
            lr: 0.05,
            hidden: vec![64],
            activation: Activation::Relu,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: &str| Err(Error::config(format!("agent.{field}"), msg));
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("gamma", "must lie in [0, 1]");
        }
        let e = &self.epsilon;
        if !(0.0..=1.0).contains(&e.start) || !(0.0..=1.0).contains(&e.end) {
            return bad("epsilon", "start and end must lie in [0, 1]");
        }
        if self.buffer_capacity == 0 {
            return bad("buffer_capacity", "must be positive");
        }
        if self.batch_size == 0 || self.batch_size > self.buffer_capacity {
            return bad("batch_size", "must be positive and at most buffer_capacity");
        }
        if self.update_period == 0 {
            return bad("update_period", "must be positive");
        }
        if self.target_period == 0 {
            return bad("target_period", "must be positive");
        }
        if self.lr.is_nan() || self.lr <= 0.0 {
            return bad("lr", "must be > 0");
        }
        if self.hidden.contains(&0) {
            return bad("hidden", "layer widths must be positive");
        }
        Ok(())
    }
}
