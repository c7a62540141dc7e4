use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ActionId, Environment};
use crate::error::{Error, Result};

/// One recorded episode, serialized as a single JSON-lines record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpisodeRecord {
    pub seed: u64,
    pub actions: Vec<ActionId>,
    pub rewards: Vec<f64>,
    pub success: bool,
}

/// Runs one episode from `seed` with a primitive-action policy.
pub fn rollout<E, P>(env: &mut E, seed: u64, mut policy: P) -> Result<EpisodeRecord>
where
    E: Environment + ?Sized,
    P: FnMut(&E) -> ActionId,
{
    env.reset(seed);
    let mut actions = Vec::new();
    let mut rewards = Vec::new();
    while !env.state().done {
        let a = policy(env);
        let r = env.step(a)?;
        actions.push(a);
        rewards.push(r.reward);
    }
    Ok(EpisodeRecord {
        seed,
        actions,
        rewards,
        success: env.success(),
    })
}

pub fn write_trajectories(path: &Path, episodes: &[EpisodeRecord]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for ep in episodes {
        serde_json::to_writer(&mut out, ep)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_trajectories(path: &Path) -> Result<Vec<EpisodeRecord>> {
    let file = File::open(path).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
        hint: " (record a corpus first, or set `corpus.generate` in the config)",
    })?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let ep = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: format!("line {}: {e}", i + 1),
        })?;
        out.push(ep);
    }
    Ok(out)
}
