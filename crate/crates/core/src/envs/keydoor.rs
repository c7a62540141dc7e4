use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ActionId, EnvState, Environment, StepResult};
use crate::error::{Error, Result};

/// `(x, y)` grid coordinate; `y` grows downward.
pub type Cell = (usize, usize);

const ACTIONS: &[&str] = &["up", "down", "left", "right", "pickup", "toggle"];
const CHANNELS: usize = 5;

/// Two rooms split by a wall column with a locked door. The key lies in the
/// agent's room, the goal behind the door. Sparse reward: 1 on reaching the
/// goal, 0 otherwise.
#[derive(Clone, Debug)]
pub struct KeyDoorGrid {
    size: usize,
    max_steps: usize,
    walls: Vec<bool>,
    agent: Cell,
    key: Option<Cell>,
    door: Cell,
    goal: Cell,
    has_key: bool,
    door_open: bool,
    steps: usize,
    done: bool,
    reached_goal: bool,
}

impl KeyDoorGrid {
    pub const UP: ActionId = 0;
    pub const DOWN: ActionId = 1;
    pub const LEFT: ActionId = 2;
    pub const RIGHT: ActionId = 3;
    pub const PICKUP: ActionId = 4;
    pub const TOGGLE: ActionId = 5;

    pub fn new(size: usize, max_steps: usize) -> Result<Self> {
        if size < 5 {
            return Err(Error::config("env.size", format!("key-door grid needs size >= 5, got {size}")));
        }
        if max_steps == 0 {
            return Err(Error::config("env.max_steps", "must be positive"));
        }
        let mut grid = Self {
            size,
            max_steps,
            walls: vec![false; size * size],
            agent: (1, 1),
            key: None,
            door: (2, 1),
            goal: (size - 2, size - 2),
            has_key: false,
            door_open: false,
            steps: 0,
            done: false,
            reached_goal: false,
        };
        grid.reset(0);
        Ok(grid)
    }

    pub fn agent(&self) -> Cell {
        self.agent
    }
    pub fn key(&self) -> Option<Cell> {
        self.key
    }
    pub fn door(&self) -> Cell {
        self.door
    }
    pub fn goal(&self) -> Cell {
        self.goal
    }
    pub fn has_key(&self) -> bool {
        self.has_key
    }
    pub fn door_open(&self) -> bool {
        self.door_open
    }
    pub fn is_wall(&self, c: Cell) -> bool {
        self.walls[c.1 * self.size + c.0]
    }

    /// Places the agent and item state directly. Intended for tests and
    /// examples that need a specific configuration; walls and door stay put.
    pub fn set_state(&mut self, agent: Cell, has_key: bool, door_open: bool) -> Result<()> {
        if self.is_wall(agent) || (agent == self.door && !door_open) {
            return Err(Error::Contract(format!("agent cannot occupy {agent:?}")));
        }
        if door_open && !has_key {
            return Err(Error::Contract("door can only be open when the key was held".into()));
        }
        self.agent = agent;
        self.has_key = has_key;
        if has_key {
            self.key = None;
        }
        self.door_open = door_open;
        Ok(())
    }

    fn generate(&mut self, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.size;
        loop {
            let wall_x = rng.gen_range(2..=n - 3);
            let door_y = rng.gen_range(1..=n - 2);
            self.walls = vec![false; n * n];
            for i in 0..n {
                for (x, y) in [(i, 0), (i, n - 1), (0, i), (n - 1, i)] {
                    self.walls[y * n + x] = true;
                }
            }
            for y in 1..n - 1 {
                if y != door_y {
                    self.walls[y * n + wall_x] = true;
                }
            }
            self.door = (wall_x, door_y);
            let left: Vec<Cell> = (1..n - 1)
                .flat_map(|y| (1..wall_x).map(move |x| (x, y)))
                .collect();
            let right: Vec<Cell> = (1..n - 1)
                .flat_map(|y| (wall_x + 1..n - 1).map(move |x| (x, y)))
                .collect();
            self.agent = left[rng.gen_range(0..left.len())];
            let key = left[rng.gen_range(0..left.len())];
            self.goal = right[rng.gen_range(0..right.len())];
            if key == self.agent {
                continue;
            }
            self.key = Some(key);
            if self.solvable() {
                return;
            }
        }
    }

    /// Key reachable with the door shut, door approachable from the key,
    /// goal reachable once the door is open.
    fn solvable(&self) -> bool {
        let Some(key) = self.key else { return false };
        let closed = self.distances(self.agent, false);
        let open = self.distances(key, true);
        let idx = |c: Cell| c.1 * self.size + c.0;
        let door_side = self
            .neighbors(self.door)
            .any(|c| closed[idx(c)].is_some());
        closed[idx(key)].is_some() && door_side && open[idx(self.goal)].is_some()
    }

    fn neighbors(&self, c: Cell) -> impl Iterator<Item = Cell> + '_ {
        [Self::UP, Self::DOWN, Self::LEFT, Self::RIGHT]
            .into_iter()
            .filter_map(move |a| self.offset(c, a))
    }

    fn offset(&self, (x, y): Cell, action: ActionId) -> Option<Cell> {
        let next = match action {
            Self::UP if y > 0 => (x, y - 1),
            Self::DOWN if y + 1 < self.size => (x, y + 1),
            Self::LEFT if x > 0 => (x - 1, y),
            Self::RIGHT if x + 1 < self.size => (x + 1, y),
            _ => return None,
        };
        Some(next)
    }

    fn passable(&self, c: Cell, door_open: bool) -> bool {
        !self.is_wall(c) && (c != self.door || door_open)
    }

    fn distances(&self, from: Cell, door_open: bool) -> Vec<Option<usize>> {
        let idx = |c: Cell| c.1 * self.size + c.0;
        let mut dist = vec![None; self.size * self.size];
        dist[idx(from)] = Some(0);
        let mut queue = VecDeque::from([from]);
        while let Some(c) = queue.pop_front() {
            let d = dist[idx(c)].unwrap_or(0);
            for nb in self.neighbors(c) {
                if self.passable(nb, door_open) && dist[idx(nb)].is_none() {
                    dist[idx(nb)] = Some(d + 1);
                    queue.push_back(nb);
                }
            }
        }
        dist
    }

    /// First move of a shortest path to any cell satisfying `target`.
    fn first_move(&self, target: impl Fn(Cell) -> bool) -> Option<ActionId> {
        let idx = |c: Cell| c.1 * self.size + c.0;
        let mut first: Vec<Option<ActionId>> = vec![None; self.size * self.size];
        let mut seen = vec![false; self.size * self.size];
        seen[idx(self.agent)] = true;
        let mut queue = VecDeque::new();
        for a in [Self::UP, Self::DOWN, Self::LEFT, Self::RIGHT] {
            if let Some(nb) = self.offset(self.agent, a) {
                if self.passable(nb, self.door_open) && !seen[idx(nb)] {
                    seen[idx(nb)] = true;
                    first[idx(nb)] = Some(a);
                    queue.push_back(nb);
                }
            }
        }
        while let Some(c) = queue.pop_front() {
            if target(c) {
                return first[idx(c)];
            }
            for nb in self.neighbors(c) {
                if self.passable(nb, self.door_open) && !seen[idx(nb)] {
                    seen[idx(nb)] = true;
                    first[idx(nb)] = first[idx(c)];
                    queue.push_back(nb);
                }
            }
        }
        None
    }

    fn adjacent(a: Cell, b: Cell) -> bool {
        a.0.abs_diff(b.0) + a.1.abs_diff(b.1) == 1
    }

    /// Shortest-path solver: fetch key, open door, walk to goal.
    pub fn scripted_action(&self) -> ActionId {
        if !self.has_key {
            match self.key {
                Some(k) if k == self.agent => Self::PICKUP,
                Some(k) => self.first_move(|c| c == k).unwrap_or(Self::UP),
                None => Self::UP,
            }
        } else if !self.door_open {
            if Self::adjacent(self.agent, self.door) {
                Self::TOGGLE
            } else {
                let door = self.door;
                self.first_move(|c| Self::adjacent(c, door)).unwrap_or(Self::UP)
            }
        } else {
            let goal = self.goal;
            self.first_move(|c| c == goal).unwrap_or(Self::UP)
        }
    }

    fn observe(&self) -> Vec<f64> {
        let inner = self.size - 2;
        let cells = inner * inner;
        let mut obs = vec![0.0; CHANNELS * cells + 2];
        let slot = |c: Cell| (c.1 - 1) * inner + (c.0 - 1);
        for y in 1..self.size - 1 {
            for x in 1..self.size - 1 {
                if self.is_wall((x, y)) {
                    obs[slot((x, y))] = 1.0;
                }
            }
        }
        obs[cells + slot(self.agent)] = 1.0;
        if let Some(k) = self.key {
            obs[2 * cells + slot(k)] = 1.0;
        }
        obs[3 * cells + slot(self.door)] = 1.0;
        obs[4 * cells + slot(self.goal)] = 1.0;
        obs[CHANNELS * cells] = f64::from(u8::from(self.has_key));
        obs[CHANNELS * cells + 1] = f64::from(u8::from(self.door_open));
        obs
    }
}

impl Environment for KeyDoorGrid {
    fn action_names(&self) -> &'static [&'static str] {
        ACTIONS
    }

    fn observation_dim(&self) -> usize {
        CHANNELS * (self.size - 2) * (self.size - 2) + 2
    }

    fn reset(&mut self, seed: u64) -> EnvState {
        self.generate(seed);
        self.has_key = false;
        self.door_open = false;
        self.steps = 0;
        self.done = false;
        self.reached_goal = false;
        self.state()
    }

    fn step(&mut self, action: ActionId) -> Result<StepResult> {
        if self.done {
            return Err(Error::Contract("step called on a finished key-door episode".into()));
        }
        if action >= ACTIONS.len() {
            return Err(Error::Contract(format!("unknown key-door action {action}")));
        }
        self.steps += 1;
        match action {
            Self::PICKUP => {
                if self.key == Some(self.agent) {
                    self.key = None;
                    self.has_key = true;
                }
            }
            Self::TOGGLE => {
                if self.has_key && Self::adjacent(self.agent, self.door) {
                    self.door_open = true;
                }
            }
            mv => {
                if let Some(next) = self.offset(self.agent, mv) {
                    if self.passable(next, self.door_open) {
                        self.agent = next;
                    }
                }
            }
        }
        let mut reward = 0.0;
        if self.agent == self.goal {
            reward = 1.0;
            self.reached_goal = true;
            self.done = true;
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
        self.reached_goal
    }

    fn max_reward(&self) -> f64 {
        1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(seed: u64) -> KeyDoorGrid {
        let mut g = KeyDoorGrid::new(6, 200).unwrap();
        g.reset(seed);
        g
    }

    #[test]
    fn reset_is_deterministic() {
        assert_eq!(grid(0).state(), grid(0).state());
    }

    #[test]
    fn different_seeds_give_different_layouts() {
        let (a, b) = (grid(0), grid(1));
        assert!(a.key != b.key || a.goal != b.goal || a.agent != b.agent || a.door != b.door);
    }

    #[test]
    fn moving_into_wall_is_a_noop() {
        let mut g = grid(0);
        // Border cells are walls: push up until stuck.
        let start = g.agent();
        let top = (start.0, 1);
        g.set_state(top, false, false).unwrap();
        let r = g.step(KeyDoorGrid::UP).unwrap();
        assert_eq!(g.agent(), top);
        assert_eq!(r.reward, 0.0);
        assert!(!r.done);
    }

    #[test]
    fn closed_door_blocks_movement() {
        let mut g = grid(2);
        let (dx, dy) = g.door();
        g.set_state((dx - 1, dy), false, false).unwrap();
        g.step(KeyDoorGrid::RIGHT).unwrap();
        assert_eq!(g.agent(), (dx - 1, dy));
    }

    #[test]
    fn stepping_onto_goal_ends_episode() {
        let mut g = grid(3);
        let goal = g.goal();
        let (from, action) = [
            (KeyDoorGrid::DOWN, KeyDoorGrid::UP),
            (KeyDoorGrid::UP, KeyDoorGrid::DOWN),
            (KeyDoorGrid::RIGHT, KeyDoorGrid::LEFT),
            (KeyDoorGrid::LEFT, KeyDoorGrid::RIGHT),
        ]
        .into_iter()
        .find_map(|(action, back)| {
            g.offset(goal, back)
                .filter(|&c| g.passable(c, true))
                .map(|c| (c, action))
        })
        .unwrap();
        g.set_state(from, true, true).unwrap();
        let r = g.step(action).unwrap();
        assert_eq!(r.reward, 1.0);
        assert!(r.done);
        assert!(g.success());
    }

    #[test]
    fn stepping_done_state_is_a_contract_violation() {
        let mut g = KeyDoorGrid::new(6, 1).unwrap();
        g.reset(0);
        g.step(KeyDoorGrid::UP).unwrap();
        assert!(matches!(g.step(KeyDoorGrid::UP), Err(Error::Contract(_))));
    }

    #[test]
    fn cap_without_goal_is_failure() {
        let mut g = KeyDoorGrid::new(6, 5).unwrap();
        g.reset(4);
        while !g.state().done {
            g.step(KeyDoorGrid::PICKUP).unwrap();
        }
        assert!(!g.success());
        assert_eq!(g.state().step_count, 5);
    }

    #[test]
    fn toggle_requires_key() {
        let mut g = grid(5);
        let (dx, dy) = g.door();
        g.set_state((dx - 1, dy), false, false).unwrap();
        g.step(KeyDoorGrid::TOGGLE).unwrap();
        assert!(!g.door_open());
        g.set_state((dx - 1, dy), true, false).unwrap();
        g.step(KeyDoorGrid::TOGGLE).unwrap();
        assert!(g.door_open());
    }

    #[test]
    fn scripted_solver_reaches_goal_on_every_layout() {
        for seed in 0..200 {
            let mut g = grid(seed);
            while !g.state().done {
                let a = g.scripted_action();
                g.step(a).unwrap();
            }
            assert!(g.success(), "seed {seed}");
        }
    }

    #[test]
    fn observation_has_declared_dim() {
        let g = grid(0);
        assert_eq!(g.state().observation.len(), g.observation_dim());
        assert_eq!(g.observation_dim(), 5 * 16 + 2);
    }
}
