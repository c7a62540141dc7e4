//! Experiment configs, output files and the `mine`/`train`/`eval`/`sweep`/
//! `transfer` commands.
//!
//! Every command takes a parsed [`ExperimentConfig`] and an output directory
//! and writes deterministic, per-seed file names (see [`RunPaths`]).

mod config;
mod io;

pub use config::{ExperimentConfig, MacroSource, Mode, SweepAxis, SweepConfig};
pub use io::{
    load_sigma, mean_stderr, read_metrics, read_sigma_csv, sidecar_path, write_sigma, Checkpoint, MetricsWriter,
    RunPaths,
};

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::envs::{read_trajectories, rollout, Environment};
use crate::error::{Error, Result};
use crate::masp::{evaluate, EvalSummary, TrainConfig, Trainer, TrainerState};
use crate::mining::{build_action_space, inject_noise_with, mine_macros, ActionSpace, MacroAction, MacroManifest};
use crate::streams::{stream, Stream};

/// File written by `mine`.
pub const MANIFEST_FILE: &str = "macros.json";

/// Produces the clean macro set a config asks for. `None` when the config
/// has no macro section.
pub fn resolve_macros(cfg: &ExperimentConfig) -> Result<Option<MacroManifest>> {
    let Some(src) = &cfg.macros else {
        return Ok(None);
    };
    let primitives = cfg.env.build()?.num_actions();
    if let Some(path) = &src.manifest {
        let manifest = MacroManifest::read(path)?;
        if manifest.primitives != primitives {
            return Err(Error::Validation(format!(
                "manifest {} is for {} primitives, environment `{}` has {primitives}",
                path.display(),
                manifest.primitives,
                cfg.env.name()
            )));
        }
        return Ok(Some(manifest));
    }
    let corpus: Vec<Vec<usize>> = match &src.corpus {
        Some(path) => read_trajectories(path)?.into_iter().map(|e| e.actions).collect(),
        None => scripted_corpus(cfg, src.corpus_episodes, src.corpus_seed)?,
    };
    let macros = mine_macros(&corpus, src.k, src.l_min, src.l_max)?;
    Ok(Some(MacroManifest::new(primitives, &macros, src.k, src.l_min, src.l_max)))
}

/// Scripted-policy rollouts; layouts drawn from the corpus stream of `seed`.
pub fn scripted_corpus(cfg: &ExperimentConfig, episodes: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    let mut env = cfg.env.build()?;
    let mut rng = stream(seed, Stream::Corpus);
    (0..episodes)
        .map(|_| Ok(rollout(&mut env, rng.gen(), |e| e.scripted_action())?.actions))
        .collect()
}

/// The per-seed training job for `cfg`: action space (with macro noise drawn
/// from the seed's own stream), frozen `Σ` if any.
pub fn train_config(cfg: &ExperimentConfig, seed: u64, macros: Option<&[MacroAction]>) -> Result<TrainConfig> {
    let primitives = cfg.env.build()?.num_actions();
    let space = match (cfg.mode, macros) {
        (crate::harness::Mode::Baseline, _) | (_, None) => ActionSpace::primitives_only(primitives),
        (_, Some(macros)) if cfg.p_replace > 0.0 => {
            let noisy = inject_noise_with(macros, cfg.p_replace, primitives, &mut stream(seed, Stream::MacroNoise))?;
            ActionSpace::with_noisy_macros(primitives, noisy)?
        }
        (_, Some(macros)) => build_action_space(primitives, macros)?.space,
    };
    let frozen_sigma = cfg.frozen_sigma.as_deref().map(load_sigma).transpose()?;
    Ok(TrainConfig {
        env: cfg.env.clone(),
        seed,
        total_steps: cfg.total_steps,
        space,
        agent: cfg.agent.clone(),
        masp: cfg.masp.clone(),
        frozen_sigma,
    })
}

/// Result of one seeded run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub seed: u64,
    pub eval: EvalSummary,
}

/// Trains one seed, writing metrics, checkpoint, `Σ` export and the greedy
/// evaluation into `dir`.
pub fn run_seed(cfg: &ExperimentConfig, tc: TrainConfig, dir: &Path) -> Result<(TrainerState, RunResult)> {
    let seed = tc.seed;
    let paths = RunPaths::new(dir, seed);
    let mut metrics = MetricsWriter::create(&paths.metrics)?;
    let mut trainer = Trainer::new(tc)?;
    trainer.run(|m| metrics.write(m))?;
    let state = trainer.state();
    Checkpoint {
        env: cfg.env.clone(),
        seed,
        total_steps: cfg.total_steps,
        agent_config: cfg.agent.clone(),
        masp: cfg.masp.clone(),
        state: state.clone(),
    }
    .save(&paths.checkpoint)?;
    let names = cfg.env.build()?.action_names();
    write_sigma(&paths.sigma, &state.sigma, &state.agent.space.labels(names), state.counters.env_steps)?;
    let eval = evaluate(&state.agent, &state.sigma, &state.embedding, &cfg.env, cfg.eval_episodes, seed)?;
    write_json(&paths.eval, &eval)?;
    log::info!(
        "seed {seed}: {} episodes, eval success {:.3}, return {:.3}",
        state.counters.episodes,
        eval.success_rate,
        eval.mean_return
    );
    Ok((state, RunResult { seed, eval }))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Mines the macro set and writes it to `out/macros.json`.
pub fn cmd_mine(cfg: &ExperimentConfig, out: &Path) -> Result<MacroManifest> {
    let Some(manifest) = resolve_macros(cfg)? else {
        return Err(Error::config("macros", "mine needs a macro section"));
    };
    std::fs::create_dir_all(out)?;
    let path = out.join(MANIFEST_FILE);
    manifest.write(&path)?;
    let hist: Vec<String> = manifest
        .length_histogram()
        .iter()
        .map(|(l, c)| format!("{l}:{c}"))
        .collect();
    println!(
        "mined {} macros (k={}) -> {}; lengths {}",
        manifest.macros.len(),
        manifest.k,
        path.display(),
        hist.join(" ")
    );
    Ok(manifest)
}

/// Trains every seed. Returns the per-seed evaluation results.
pub fn cmd_train(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<RunResult>> {
    let manifest = resolve_macros(cfg)?;
    let macros = manifest.as_ref().map(MacroManifest::macro_actions);
    // Build every job first so config problems surface before compute.
    let jobs = cfg
        .seeds
        .iter()
        .map(|&s| train_config(cfg, s, macros.as_deref()))
        .collect::<Result<Vec<_>>>()?;
    std::fs::create_dir_all(out)?;
    if let Some(m) = &manifest {
        m.write(&out.join(MANIFEST_FILE))?;
    }
    let mut results = Vec::new();
    for tc in jobs {
        let (_, r) = run_seed(cfg, tc, out)?;
        println!(
            "seed {}: success {:.3} return {:.3}",
            r.seed, r.eval.success_rate, r.eval.mean_return
        );
        results.push(r);
    }
    Ok(results)
}

/// Greedy evaluation of `checkpoint` on the config's environment, once per
/// config seed.
pub fn cmd_eval(cfg: &ExperimentConfig, checkpoint: &Path, out: &Path) -> Result<Vec<RunResult>> {
    let ck = Checkpoint::load(checkpoint)?;
    let env_actions = cfg.env.build()?.num_actions();
    if ck.state.agent.space.num_primitives() != env_actions || ck.env.name() != cfg.env.name() {
        return Err(Error::Validation(format!(
            "checkpoint was trained on `{}` with {} primitive actions; config env `{}` has {env_actions}",
            ck.env.name(),
            ck.state.agent.space.num_primitives(),
            cfg.env.name()
        )));
    }
    std::fs::create_dir_all(out)?;
    let mut results = Vec::new();
    for &seed in &cfg.seeds {
        let s = &ck.state;
        let eval = evaluate(&s.agent, &s.sigma, &s.embedding, &cfg.env, cfg.eval_episodes, seed)?;
        write_json(&out.join(format!("eval_seed{seed}.json")), &eval)?;
        println!("{}", serde_json::to_string(&eval)?);
        results.push(RunResult { seed, eval });
    }
    Ok(results)
}

/// One row of the sweep table.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub axis_value: f64,
    pub seed: u64,
    pub success: f64,
    pub ret: f64,
}

/// Train + eval for every (axis value, seed); writes `sweep_<axis>.csv`
/// with one row per run followed by mean ± stderr rows per axis value.
pub fn cmd_sweep(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<SweepRow>> {
    let sweep = cfg
        .sweep
        .clone()
        .ok_or_else(|| Error::config("sweep", "sweep needs an axis and values"))?;
    let variants = sweep
        .values
        .iter()
        .map(|&v| cfg.with_axis(sweep.axis, v).map(|c| (v, c)))
        .collect::<Result<Vec<_>>>()?;
    // p_replace and eta sweeps share one clean macro set.
    let shared = match sweep.axis {
        SweepAxis::K => None,
        _ => Some(resolve_macros(cfg)?),
    };
    std::fs::create_dir_all(out)?;
    let mut rows = Vec::new();
    for (value, vcfg) in &variants {
        let manifest = match &shared {
            Some(m) => m.clone(),
            None => resolve_macros(vcfg)?,
        };
        let macros = manifest.as_ref().map(MacroManifest::macro_actions);
        let dir = out.join(format!("{}_{value}", sweep.axis.name()));
        std::fs::create_dir_all(&dir)?;
        for &seed in &vcfg.seeds {
            let tc = train_config(vcfg, seed, macros.as_deref())?;
            let (_, r) = run_seed(vcfg, tc, &dir)?;
            rows.push(SweepRow {
                axis_value: *value,
                seed,
                success: r.eval.success_rate,
                ret: r.eval.mean_return,
            });
        }
    }
    let csv = sweep_csv(sweep.axis, &sweep.values, &rows);
    let path = out.join(format!("sweep_{}.csv", sweep.axis.name()));
    std::fs::write(&path, &csv)?;
    print!("{csv}");
    Ok(rows)
}

/// Renders sweep rows: `row,axis_value,seed,success,return,success_stderr,return_stderr`.
pub fn sweep_csv(axis: SweepAxis, values: &[f64], rows: &[SweepRow]) -> String {
    let mut s = format!("# axis={}\nrow,axis_value,seed,success,return,success_stderr,return_stderr\n", axis.name());
    for r in rows {
        let _ = writeln!(s, "run,{},{},{},{},,", r.axis_value, r.seed, r.success, r.ret);
    }
    for &v in values {
        let group: Vec<&SweepRow> = rows.iter().filter(|r| r.axis_value == v).collect();
        let (sm, se) = mean_stderr(&group.iter().map(|r| r.success).collect::<Vec<_>>());
        let (rm, re) = mean_stderr(&group.iter().map(|r| r.ret).collect::<Vec<_>>());
        let _ = writeln!(s, "summary,{v},mean,{sm},{rm},{se},{re}");
    }
    s
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferSummary {
    pub source: String,
    pub actions: usize,
    pub runs: Vec<RunResult>,
    pub mean_success: f64,
    pub stderr_success: f64,
}

/// Relearns the policy on the config's environment with `Σ` frozen to the
/// one stored in `source`.
pub fn cmd_transfer(cfg: &ExperimentConfig, source: &Path, out: &Path) -> Result<TransferSummary> {
    let ck = Checkpoint::load(source)?;
    let sigma = ck.state.sigma.clone();
    let mut cfg = cfg.clone();
    if cfg.mode != Mode::Masp {
        return Err(Error::config("mode", "transfer trains a MASP agent; set mode to \"masp\""));
    }
    if cfg.masp.beta != 0.0 {
        log::warn!("transfer keeps sigma frozen: forcing masp.beta from {} to 0", cfg.masp.beta);
        cfg.masp.beta = 0.0;
    }
    cfg.frozen_sigma = None;
    let macros = match resolve_macros(&cfg)? {
        Some(m) => m.macro_actions(),
        None => ck.state.agent.space.macros().to_vec(),
    };
    let mut jobs = Vec::new();
    for &seed in &cfg.seeds {
        let mut tc = train_config(&cfg, seed, Some(&macros))?;
        if tc.space.len() != sigma.size() {
            return Err(Error::Validation(format!(
                "source sigma is {0}x{0} but the target action space has {1} actions",
                sigma.size(),
                tc.space.len()
            )));
        }
        tc.frozen_sigma = Some(sigma.clone());
        jobs.push(tc);
    }
    std::fs::create_dir_all(out)?;
    let mut runs = Vec::new();
    for tc in jobs {
        runs.push(run_seed(&cfg, tc, out)?.1);
    }
    let (mean_success, stderr_success) = mean_stderr(&runs.iter().map(|r| r.eval.success_rate).collect::<Vec<_>>());
    let summary = TransferSummary {
        source: source.display().to_string(),
        actions: sigma.size(),
        runs,
        mean_success,
        stderr_success,
    };
    write_json(&out.join("transfer_summary.json"), &summary)?;
    println!("transfer: success {mean_success:.3} ± {stderr_success:.3}");
    Ok(summary)
}

/// Loads a checkpoint and continues training it with the config's budget.
pub fn resume(cfg: &ExperimentConfig, checkpoint: &Path, macros: Option<&[MacroAction]>) -> Result<Trainer> {
    let ck = Checkpoint::load(checkpoint)?;
    let tc = train_config(cfg, ck.seed, macros)?;
    Trainer::from_state(tc, ck.state)
}
