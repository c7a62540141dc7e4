//! Fits a linear Q-network on the 5-state chain with uniform exploration and
//! compares it to Q* from value iteration.
//!
//! ```text
//! cargo run --release --example tabular_chain
//! ```

use masp_lab::agent::{AgentConfig, EpsilonSchedule};
use masp_lab::envs::{ChainWalk, EnvSpec};
use masp_lab::masp::{MaspConfig, TrainConfig, Trainer};
use masp_lab::mining::ActionSpace;

fn main() -> masp_lab::Result<()> {
    let gamma = 0.9;
    let states = 5;
    let agent = AgentConfig {
        hidden: vec![],
        lr: 0.1,
        gamma,
        learning_starts: 100,
        target_period: 100,
        update_period: 1,
        epsilon: EpsilonSchedule { start: 1.0, end: 1.0, decay_steps: 1 },
        ..AgentConfig::default()
    };
    let tc = TrainConfig {
        env: EnvSpec::Chain { states, max_steps: 50 },
        seed: 0,
        total_steps: 20_000,
        space: ActionSpace::primitives_only(2),
        agent,
        masp: MaspConfig { embed_dim: 0, ..MaspConfig::disabled() },
        frozen_sigma: None,
    };
    let mut trainer = Trainer::new(tc)?;
    trainer.run(|_| Ok(()))?;

    let chain = ChainWalk::new(states, 50)?;
    let mut q_star = vec![[0.0f64; 2]; states];
    for _ in 0..1000 {
        let prev = q_star.clone();
        for (s, row) in q_star.iter_mut().enumerate() {
            for (a, q) in row.iter_mut().enumerate() {
                let (next, r) = chain.transition(s, a);
                *q = r + next.map_or(0.0, |n| gamma * prev[n][0].max(prev[n][1]));
            }
        }
    }
    let mut worst: f64 = 0.0;
    for (s, want) in q_star.iter().enumerate() {
        let mut x = vec![0.0; states];
        x[s] = 1.0;
        let q = trainer.agent().q_values(&x, &[])?;
        worst = worst.max((q[0] - want[0]).abs()).max((q[1] - want[1]).abs());
        println!("state {s}: learned [{:.3}, {:.3}], optimal [{:.3}, {:.3}]", q[0], q[1], want[0], want[1]);
    }
    println!("max |Q - Q*| = {worst:.4}");
    Ok(())
}
