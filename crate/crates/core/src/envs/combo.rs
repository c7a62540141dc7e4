use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ActionId, EnvState, Environment, StepResult};
use crate::error::{Error, Result};

const ACTIONS: &[&str] = &["advance", "retreat", "punch", "kick", "guard", "special"];
const LANE: usize = 10;
const START_HEALTH: u32 = 20;
const HISTORY: usize = 3;

/// A primitive sequence that deals `bonus` damage when its last element
/// lands in range.
#[derive(Clone, Debug, PartialEq)]
pub struct Combo {
    pub sequence: Vec<ActionId>,
    pub bonus: u32,
}

/// One-lane fighting game against a scripted opponent.
///
/// Punch and kick deal 1 damage within range (distance ≤ 1) unless the
/// opponent guards that step. Finishing a combo in range deals its bonus
/// instead, and clears the combo history. The episode succeeds when the
/// opponent's health reaches 0 before the step cap.
#[derive(Clone, Debug)]
pub struct ComboArena {
    max_steps: usize,
    combos: Vec<Combo>,
    agent_pos: usize,
    opponent_pos: usize,
    health: u32,
    /// Agent primitives since the last completed combo, oldest first.
    combo_history: Vec<ActionId>,
    agent_recent: [Option<ActionId>; HISTORY],
    opponent_recent: [Option<ActionId>; HISTORY],
    opponent_script: Vec<ActionId>,
    steps: usize,
    done: bool,
}

impl ComboArena {
    pub const ADVANCE: ActionId = 0;
    pub const RETREAT: ActionId = 1;
    pub const PUNCH: ActionId = 2;
    pub const KICK: ActionId = 3;
    pub const GUARD: ActionId = 4;
    pub const SPECIAL: ActionId = 5;

    pub fn new(max_steps: usize) -> Self {
        Self::with_combos(max_steps, Self::default_combos())
    }

    pub fn with_combos(max_steps: usize, combos: Vec<Combo>) -> Self {
        let mut arena = Self {
            max_steps,
            combos,
            agent_pos: 0,
            opponent_pos: LANE - 1,
            health: START_HEALTH,
            combo_history: Vec::new(),
            agent_recent: [None; HISTORY],
            opponent_recent: [None; HISTORY],
            opponent_script: vec![Self::GUARD],
            steps: 0,
            done: false,
        };
        arena.reset(0);
        arena
    }

    pub fn default_combos() -> Vec<Combo> {
        vec![
            Combo {
                sequence: vec![Self::PUNCH, Self::PUNCH, Self::SPECIAL],
                bonus: 5,
            },
            Combo {
                sequence: vec![Self::KICK, Self::PUNCH, Self::KICK],
                bonus: 4,
            },
            Combo {
                sequence: vec![Self::PUNCH, Self::KICK, Self::SPECIAL, Self::KICK],
                bonus: 7,
            },
        ]
    }

    pub fn health(&self) -> u32 {
        self.health
    }

    pub fn positions(&self) -> (usize, usize) {
        (self.agent_pos, self.opponent_pos)
    }

    /// Overrides the opponent's cyclic script and positions for the current
    /// episode.
    pub fn set_opponent(&mut self, agent_pos: usize, opponent_pos: usize, script: Vec<ActionId>) -> Result<()> {
        if agent_pos >= opponent_pos || opponent_pos >= LANE {
            return Err(Error::Contract(format!(
                "need agent < opponent < {LANE}, got {agent_pos} and {opponent_pos}"
            )));
        }
        if script.is_empty() || script.iter().any(|&a| a >= ACTIONS.len()) {
            return Err(Error::Contract("opponent script must be non-empty and valid".into()));
        }
        self.agent_pos = agent_pos;
        self.opponent_pos = opponent_pos;
        self.opponent_script = script;
        Ok(())
    }

    fn in_range(&self) -> bool {
        self.opponent_pos - self.agent_pos <= 1
    }

    fn opponent_action(&self) -> ActionId {
        self.opponent_script[self.steps % self.opponent_script.len()]
    }

    fn push_recent(buf: &mut [Option<ActionId>; HISTORY], a: ActionId) {
        buf.rotate_left(1);
        buf[HISTORY - 1] = Some(a);
    }

    /// Closes distance, then strings the longest combo it can.
    pub fn scripted_action(&self) -> ActionId {
        if !self.in_range() {
            return Self::ADVANCE;
        }
        let best = self
            .combos
            .iter()
            .max_by_key(|c| c.bonus)
            .map(|c| c.sequence.clone())
            .unwrap_or_else(|| vec![Self::PUNCH]);
        // Continue the combo if the history is a prefix of it.
        let h = &self.combo_history;
        for k in (0..best.len()).rev() {
            if h.len() >= k && h[h.len() - k..] == best[..k] {
                return best[k];
            }
        }
        best[0]
    }

    fn observe(&self) -> Vec<f64> {
        let n = ACTIONS.len();
        let mut obs = vec![0.0; 3 + 2 * HISTORY * n];
        obs[0] = self.agent_pos as f64 / (LANE - 1) as f64;
        obs[1] = self.opponent_pos as f64 / (LANE - 1) as f64;
        obs[2] = f64::from(self.health) / f64::from(START_HEALTH);
        for (slot, a) in self.opponent_recent.iter().enumerate() {
            if let Some(a) = a {
                obs[3 + slot * n + a] = 1.0;
            }
        }
        let base = 3 + HISTORY * n;
        for (slot, a) in self.agent_recent.iter().enumerate() {
            if let Some(a) = a {
                obs[base + slot * n + a] = 1.0;
            }
        }
        obs
    }
}

impl Environment for ComboArena {
    fn action_names(&self) -> &'static [&'static str] {
        ACTIONS
    }

    fn observation_dim(&self) -> usize {
        3 + 2 * HISTORY * ACTIONS.len()
    }

    fn reset(&mut self, seed: u64) -> EnvState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.agent_pos = rng.gen_range(0..3);
        self.opponent_pos = LANE - 1 - rng.gen_range(0..2);
        let period = rng.gen_range(3..=5);
        self.opponent_script = (0..period).map(|_| rng.gen_range(0..ACTIONS.len())).collect();
        self.health = START_HEALTH;
        self.combo_history.clear();
        self.agent_recent = [None; HISTORY];
        self.opponent_recent = [None; HISTORY];
        self.steps = 0;
        self.done = false;
        self.state()
    }

    fn step(&mut self, action: ActionId) -> Result<StepResult> {
        if self.done {
            return Err(Error::Contract("step called on a finished combo episode".into()));
        }
        if action >= ACTIONS.len() {
            return Err(Error::Contract(format!("unknown combo action {action}")));
        }
        let opponent = self.opponent_action();
        let guarded = opponent == Self::GUARD;
        self.steps += 1;

        match action {
            Self::ADVANCE if self.opponent_pos - self.agent_pos > 1 => self.agent_pos += 1,
            Self::RETREAT => self.agent_pos = self.agent_pos.saturating_sub(1),
            _ => {}
        }
        self.combo_history.push(action);
        let longest = self.combos.iter().map(|c| c.sequence.len()).max().unwrap_or(0);
        if self.combo_history.len() > longest {
            self.combo_history.remove(0);
        }

        let mut damage = 0;
        if self.in_range() && !guarded {
            let h = &self.combo_history;
            let bonus = self
                .combos
                .iter()
                .filter(|c| h.ends_with(&c.sequence))
                .map(|c| c.bonus)
                .max();
            if let Some(b) = bonus {
                damage = b;
                self.combo_history.clear();
            } else if action == Self::PUNCH || action == Self::KICK {
                damage = 1;
            }
        }
        let dealt = damage.min(self.health);
        self.health -= dealt;

        match opponent {
            Self::ADVANCE if self.opponent_pos - self.agent_pos > 1 => self.opponent_pos -= 1,
            Self::RETREAT if self.opponent_pos + 1 < LANE => self.opponent_pos += 1,
            _ => {}
        }
        Self::push_recent(&mut self.agent_recent, action);
        Self::push_recent(&mut self.opponent_recent, opponent);

        if self.health == 0 || self.steps >= self.max_steps {
            self.done = true;
        }
        Ok(StepResult {
            next_observation: self.observe(),
            reward: f64::from(dealt),
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
        self.health == 0
    }

    fn max_reward(&self) -> f64 {
        f64::from(self.combos.iter().map(|c| c.bonus).max().unwrap_or(1).max(1))
    }
}
