use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agent::AgentConfig;
use crate::envs::EnvSpec;
use crate::error::{Error, Result};
use crate::masp::{MaspConfig, MetricsRecord, SimilarityMatrix, TrainerState};
use crate::numcore::Matrix;

/// JSON-lines metrics stream, flushed after every record.
pub struct MetricsWriter {
    out: BufWriter<File>,
    last_step: usize,
}

impl MetricsWriter {
    pub fn create(path: &Path) -> Result<Self> {
        Ok(Self {
            out: BufWriter::new(File::create(path)?),
            last_step: 0,
        })
    }

    pub fn write(&mut self, record: &MetricsRecord) -> Result<()> {
        if record.step < self.last_step {
            return Err(Error::Contract(format!(
                "metrics step went backwards: {} after {}",
                record.step, self.last_step
            )));
        }
        self.last_step = record.step;
        serde_json::to_writer(&mut self.out, record)?;
        self.out.write_all(b"\n")?;
        self.out.flush()?;
        Ok(())
    }
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRecord>> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                message: format!("line {}: {e}", i + 1),
            })
        })
        .collect()
}

/// Everything needed to evaluate, resume or transfer from a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub env: EnvSpec,
    pub seed: u64,
    pub total_steps: usize,
    pub agent_config: AgentConfig,
    pub masp: MaspConfig,
    pub state: TrainerState,
}

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::File {
            path: path.to_path_buf(),
            source,
            hint: " (run `masp-lab train` first, or fix the checkpoint path)",
        })?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

/// Writes `Σ` as CSV (17 significant digits) and the label sidecar next to
/// it (same stem, `.json`).
pub fn write_sigma(path: &Path, sigma: &SimilarityMatrix, labels: &[String], step: usize) -> Result<()> {
    let n = sigma.size();
    if labels.len() != n {
        return Err(Error::shape("write_sigma labels", n, labels.len()));
    }
    let mut text = String::new();
    for r in 0..n {
        let row: Vec<String> = (0..n).map(|c| format!("{:.16e}", sigma.get(r, c))).collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    std::fs::write(path, text)?;
    let sidecar = serde_json::json!({ "action_labels": labels, "step": step });
    std::fs::write(sidecar_path(path), format!("{sidecar}\n"))?;
    Ok(())
}

pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

pub fn read_sigma_csv(path: &Path) -> Result<SimilarityMatrix> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
        hint: " (export one with `masp-lab train`)",
    })?;
    let parse_err = |message: String| Error::Parse {
        path: path.to_path_buf(),
        message,
    };
    let rows = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, line)| {
            line.split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|e| parse_err(format!("row {}: {e}", i + 1))))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let m = Matrix::from_rows(&rows).map_err(|e| parse_err(e.to_string()))?;
    SimilarityMatrix::try_from(m).map_err(|e| parse_err(e.to_string()))
}

/// `Σ` from either a checkpoint (`.json`) or an exported CSV.
pub fn load_sigma(path: &Path) -> Result<SimilarityMatrix> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        read_sigma_csv(path)
    } else {
        Ok(Checkpoint::load(path)?.state.sigma)
    }
}

/// Deterministic per-seed output names inside one output directory.
#[derive(Clone, Debug)]
pub struct RunPaths {
    pub metrics: PathBuf,
    pub checkpoint: PathBuf,
    pub sigma: PathBuf,
    pub eval: PathBuf,
}

impl RunPaths {
    pub fn new(dir: &Path, seed: u64) -> Self {
        Self {
            metrics: dir.join(format!("metrics_seed{seed}.jsonl")),
            checkpoint: dir.join(format!("checkpoint_seed{seed}.json")),
            sigma: dir.join(format!("sigma_seed{seed}.csv")),
            eval: dir.join(format!("eval_seed{seed}.json")),
        }
    }
}

/// Sample mean and standard error (`s / √n`, 0 for a single value).
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}
