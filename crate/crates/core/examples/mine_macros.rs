//! Mines the most frequent action subsequences from scripted key-door
//! episodes, builds the augmented action space and corrupts it with noise.
//!
//! ```text
//! cargo run --example mine_macros -- [k] [p_replace]
//! ```

use masp_lab::envs::{rollout, EnvSpec, Environment};
use masp_lab::mining::{build_action_space, inject_noise, mine_macros, SubsequenceCounts};

fn main() -> masp_lab::Result<()> {
    let mut args = std::env::args().skip(1);
    let k: usize = args.next().map_or(8, |s| s.parse().expect("k"));
    let p: f64 = args.next().map_or(0.5, |s| s.parse().expect("p_replace"));

    let mut env = EnvSpec::default().build()?;
    let names = env.action_names();
    let corpus: Vec<Vec<usize>> = (0..200)
        .map(|seed| rollout(&mut env, seed, |e| e.scripted_action()).map(|ep| ep.actions))
        .collect::<masp_lab::Result<_>>()?;

    let mut counts = SubsequenceCounts::default();
    for t in &corpus {
        counts.add(t, 2, 4);
    }
    let macros = mine_macros(&corpus, k, 2, 4)?;
    println!("{} distinct subsequences; top {k}:", counts.distinct());
    for m in &macros {
        let label: Vec<&str> = m.primitives().iter().map(|&a| names[a]).collect();
        println!("  {:>5}  {}", counts.get(m.primitives()), label.join("-"));
    }

    let built = build_action_space(env.num_actions(), &macros)?;
    println!("augmented action space: {} actions", built.space.len());
    for (orig, noisy) in macros.iter().zip(inject_noise(&macros, p, env.num_actions(), 7)?) {
        if &noisy != orig {
            println!("  p={p}: {:?} -> {:?}", orig.primitives(), noisy.primitives());
        }
    }
    Ok(())
}
