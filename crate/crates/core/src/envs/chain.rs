use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ActionId, EnvState, Environment, StepResult};
use crate::error::{Error, Result};

const ACTIONS: &[&str] = &["left", "right"];

/// Deterministic corridor of `n` states. Moving right from the last state
/// pays 1 and ends the episode; every other transition pays 0. Episodes
/// start in a seeded uniformly random state so every state is visited.
#[derive(Clone, Debug)]
pub struct ChainWalk {
    states: usize,
    max_steps: usize,
    position: usize,
    steps: usize,
    done: bool,
    solved: bool,
}

impl ChainWalk {
    pub const LEFT: ActionId = 0;
    pub const RIGHT: ActionId = 1;

    pub fn new(states: usize, max_steps: usize) -> Result<Self> {
        if states < 2 {
            return Err(Error::config("env.states", "chain needs at least 2 states"));
        }
        Ok(Self {
            states,
            max_steps,
            position: 0,
            steps: 0,
            done: false,
            solved: false,
        })
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn position(&self) -> usize {
        self.position
    }

    /// Successor state and reward; `None` successor means termination.
    pub fn transition(&self, state: usize, action: ActionId) -> (Option<usize>, f64) {
        match action {
            Self::RIGHT if state + 1 == self.states => (None, 1.0),
            Self::RIGHT => (Some(state + 1), 0.0),
            _ => (Some(state.saturating_sub(1)), 0.0),
        }
    }

    fn observe(&self) -> Vec<f64> {
        let mut obs = vec![0.0; self.states];
        obs[self.position] = 1.0;
        obs
    }
}

impl Environment for ChainWalk {
    fn action_names(&self) -> &'static [&'static str] {
        ACTIONS
    }

    fn observation_dim(&self) -> usize {
        self.states
    }

    fn reset(&mut self, seed: u64) -> EnvState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.position = rng.gen_range(0..self.states);
        self.steps = 0;
        self.done = false;
        self.solved = false;
        self.state()
    }

    fn step(&mut self, action: ActionId) -> Result<StepResult> {
        if self.done {
            return Err(Error::Contract("step called on a finished chain episode".into()));
        }
        if action >= ACTIONS.len() {
            return Err(Error::Contract(format!("unknown chain action {action}")));
        }
        self.steps += 1;
        let (next, reward) = self.transition(self.position, action);
        match next {
            Some(s) => self.position = s,
            None => {
                self.solved = true;
                self.done = true;
            }
        }
        if self.steps >= self.max_steps {
            self.done = true;
        }
        Ok(StepResult {
            next_observation: self.observe(),
            reward,
            done: self.done,
        })
    }

    fn state(&self) -> EnvState {
        EnvState {
            observation: self.observe(),
            done: self.done,
            step_count: self.steps,
        }
    }

    fn success(&self) -> bool {
        self.solved
    }

    fn max_reward(&self) -> f64 {
        1.0
    }
}
