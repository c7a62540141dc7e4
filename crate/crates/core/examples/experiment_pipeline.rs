//! The CLI workflow as library calls: mine a macro set, train MASP agents,
//! transfer the learned similarity matrix with it frozen, and sweep the
//! macro noise level. Budgets are tiny; see `configs/` for full-size runs.
//!
//! ```text
//! cargo run --release --example experiment_pipeline -- [out_dir]
//! ```

use std::path::{Path, PathBuf};

use masp_lab::harness::{cmd_mine, cmd_sweep, cmd_train, cmd_transfer, read_sigma_csv, ExperimentConfig};

fn main() -> masp_lab::Result<()> {
    let out: PathBuf = std::env::args()
        .nth(1)
        .map_or_else(|| std::env::temp_dir().join("masp-lab-pipeline"), Into::into);
    let cfg = ExperimentConfig::from_json(
        r#"{
            "seeds": [0, 1],
            "total_steps": 20000,
            "eval_episodes": 20,
            "macros": {"k": 8},
            "masp": {"eta": 0.03, "beta": 1.0, "entropy_coef": 1e-4},
            "agent": {"gamma": 0.9, "lr": 0.5, "update_period": 1, "learning_starts": 2000}
        }"#,
        Path::new("."),
    )?;

    cmd_mine(&cfg, &out.join("mine"))?;
    let runs = cmd_train(&cfg, &out.join("train"))?;
    let sigma = read_sigma_csv(&out.join("train/sigma_seed0.csv"))?;
    println!("learned sigma ({} actions), stats {:?}", sigma.size(), sigma.stats());

    let summary = cmd_transfer(&cfg, &out.join("train/checkpoint_seed0.json"), &out.join("transfer"))?;
    let scratch: f64 = runs.iter().map(|r| r.eval.success_rate).sum::<f64>() / runs.len() as f64;
    println!("from scratch {scratch:.3}, frozen transfer {:.3}", summary.mean_success);

    let sweep = ExperimentConfig::from_json(
        r#"{"seeds": [0], "total_steps": 20000, "eval_episodes": 20,
            "masp": {"eta": 0.03, "beta": 1.0, "entropy_coef": 1e-4},
            "agent": {"gamma": 0.9, "lr": 0.5, "update_period": 1, "learning_starts": 2000},
            "sweep": {"axis": "p_replace", "values": [0.0, 0.5]}}"#,
        Path::new("."),
    )?;
    cmd_sweep(&sweep, &out.join("sweep"))?;
    println!("artifacts in {}", out.display());
    Ok(())
}
