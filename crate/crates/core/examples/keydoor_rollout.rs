//! Rolls out the scripted key-door solver on a few layouts, records the
//! episodes in the trajectory JSON-lines format and reads them back.
//!
//! ```text
//! cargo run --example keydoor_rollout -- [episodes] [out.jsonl]
//! ```

use masp_lab::envs::{read_trajectories, rollout, write_trajectories, EnvSpec, Environment};

fn main() -> masp_lab::Result<()> {
    let mut args = std::env::args().skip(1);
    let episodes: u64 = args.next().map_or(5, |s| s.parse().expect("episodes"));
    let path = args
        .next()
        .map_or_else(|| std::env::temp_dir().join("keydoor_corpus.jsonl"), Into::into);

    let mut env = EnvSpec::default().build()?;
    let names = env.action_names();
    let mut records = Vec::new();
    for seed in 0..episodes {
        let ep = rollout(&mut env, seed, |e| e.scripted_action())?;
        let plan: Vec<&str> = ep.actions.iter().map(|&a| names[a]).collect();
        println!("seed {seed}: {} steps, success {}: {}", ep.actions.len(), ep.success, plan.join(" "));
        records.push(ep);
    }
    write_trajectories(&path, &records)?;
    let back = read_trajectories(&path)?;
    assert_eq!(back, records);
    println!("wrote {} episodes to {}", back.len(), path.display());
    Ok(())
}
