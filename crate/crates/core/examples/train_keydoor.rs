//! Trains the baseline, macro-augmented and MASP agents from `configs/` on
//! one seed and prints greedy success rates.
//!
//! ```text
//! cargo run --release --example train_keydoor -- [steps] [seed] [p_replace]
//! ```

use std::path::Path;
use std::time::Instant;

use masp_lab::harness::{resolve_macros, train_config, ExperimentConfig, SweepAxis};
use masp_lab::masp::{evaluate, train_loop};

fn main() -> masp_lab::Result<()> {
    let mut args = std::env::args().skip(1);
    let steps: usize = args.next().map_or(200_000, |s| s.parse().expect("steps"));
    let seed: u64 = args.next().map_or(0, |s| s.parse().expect("seed"));
    let p: f64 = args.next().map_or(0.0, |s| s.parse().expect("p_replace"));

    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    for name in ["keydoor_baseline.json", "keydoor_macro.json", "keydoor_masp.json"] {
        let mut cfg = ExperimentConfig::load(&configs.join(name))?;
        cfg.total_steps = steps;
        if cfg.macros.is_some() {
            cfg = cfg.with_axis(SweepAxis::PReplace, p)?;
        }
        let macros = resolve_macros(&cfg)?.map(|m| m.macro_actions());
        let start = Instant::now();
        let out = train_loop(train_config(&cfg, seed, macros.as_deref())?)?;
        let s = &out.state;
        let eval = evaluate(&s.agent, &s.sigma, &s.embedding, &cfg.env, cfg.eval_episodes, seed)?;
        let last: Vec<_> = out.metrics.iter().rev().take(100).collect();
        let recent = last.iter().filter(|m| m.success).count() as f64 / last.len().max(1) as f64;
        println!(
            "{:?}: {:.0}s, {} episodes, recent train success {recent:.2}, eval success {:.2}, sigma {:?}",
            cfg.mode,
            start.elapsed().as_secs_f64(),
            s.counters.episodes,
            eval.success_rate,
            s.sigma.stats(),
        );
    }
    Ok(())
}
