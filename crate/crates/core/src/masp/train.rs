use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::meta::{meta_gradient, MetaProblem};
use super::penalty::regularized_td;
use super::sigma::{entropy_reg, meta_update, EmbeddingMap, SimilarityMatrix};
use super::MaspConfig;
use crate::agent::{execute_action, greedy, select_action, AgentConfig, QAgent, ReplayBuffer, Transition};
use crate::envs::{Env, EnvSpec, Environment};
use crate::error::{Error, Result};
use crate::mining::ActionSpace;
use crate::streams::{stream, Stream};

/// Everything one training run needs, already resolved (macros mined and
/// corrupted, frozen `Σ` loaded).
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub env: EnvSpec,
    pub seed: u64,
    /// Budget in primitive environment steps.
    pub total_steps: usize,
    pub space: ActionSpace,
    pub agent: AgentConfig,
    pub masp: MaspConfig,
    /// Fixed `Σ` for transfer runs; requires `masp.beta == 0`.
    pub frozen_sigma: Option<SimilarityMatrix>,
}

/// One record per finished episode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    /// Primitive environment steps taken so far.
    pub step: usize,
    pub episode: usize,
    #[serde(rename = "return")]
    pub episode_return: f64,
    pub success: bool,
    pub length: usize,
    pub epsilon: f64,
    /// Mean over the updates made during the episode (0 if none).
    pub td_loss: f64,
    pub masp_loss: f64,
    pub sigma_mean_offdiag: f64,
    pub sigma_max: f64,
    pub sigma_row_entropy: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub env_steps: usize,
    pub decisions: usize,
    pub updates: usize,
    pub episodes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct RunRngs {
    env: ChaCha8Rng,
    policy: ChaCha8Rng,
    replay: ChaCha8Rng,
    meta: ChaCha8Rng,
}

/// Serializable learner state: parameters, `Σ`, `W_emb`, RNG positions and
/// counters. The replay buffer is not part of it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainerState {
    pub agent: QAgent,
    pub sigma: SimilarityMatrix,
    pub embedding: EmbeddingMap,
    pub counters: Counters,
    rngs: RunRngs,
}

#[derive(Clone, Debug, Default)]
struct EpisodeAcc {
    ret: f64,
    length: usize,
    td: f64,
    masp: f64,
    updates: usize,
}

/// The training loop: ε-greedy acting, replay, regularized SGD on `θ` and
/// `W_emb`, the meta step on `Σ`, and periodic target syncs.
pub struct Trainer {
    config: TrainConfig,
    env: Env,
    agent: QAgent,
    sigma: SimilarityMatrix,
    embedding: EmbeddingMap,
    buffer: ReplayBuffer,
    rngs: RunRngs,
    counters: Counters,
    e_sigma: Vec<f64>,
    episode: EpisodeAcc,
    needs_reset: bool,
}

impl Trainer {
    pub fn new(config: TrainConfig) -> Result<Self> {
        config.agent.validate()?;
        config.masp.validate()?;
        if config.frozen_sigma.is_some() && config.masp.beta != 0.0 {
            return Err(Error::config("masp.beta", "must be 0 when sigma is frozen"));
        }
        let env = config.env.build()?;
        if env.num_actions() != config.space.num_primitives() {
            return Err(Error::Validation(format!(
                "action space has {} primitives, environment `{}` has {}",
                config.space.num_primitives(),
                config.env.name(),
                env.num_actions()
            )));
        }
        let n = config.space.len();
        let seed = config.seed;
        let agent = QAgent::new(
            env.observation_dim(),
            config.masp.embed_dim,
            &config.agent.hidden,
            config.agent.activation,
            config.space.clone(),
            config.agent.gamma,
            &mut stream(seed, Stream::NetworkInit),
        );
        let sigma = match &config.frozen_sigma {
            Some(s) => {
                if s.size() != n {
                    return Err(Error::Validation(format!(
                        "frozen sigma is {0}x{0} but the action space has {n} actions",
                        s.size()
                    )));
                }
                s.clone()
            }
            // A Σ that is never learned starts (and stays) at the identity.
            None if config.masp.beta == 0.0 => SimilarityMatrix::identity(n),
            None => SimilarityMatrix::near_identity(
                n,
                config.masp.sigma_init_noise,
                &mut stream(seed, Stream::SigmaInit),
            ),
        };
        let embedding = EmbeddingMap::init(config.masp.embed_dim, n, &mut stream(seed, Stream::EmbeddingInit));
        let rngs = RunRngs {
            env: stream(seed, Stream::EnvLayout),
            policy: stream(seed, Stream::Policy),
            replay: stream(seed, Stream::Replay),
            meta: stream(seed, Stream::MetaReplay),
        };
        let e_sigma = embedding.embed(sigma.as_matrix())?;
        Ok(Self {
            buffer: ReplayBuffer::new(config.agent.buffer_capacity),
            config,
            env,
            agent,
            sigma,
            embedding,
            rngs,
            counters: Counters::default(),
            e_sigma,
            episode: EpisodeAcc::default(),
            needs_reset: true,
        })
    }

    /// Rebuilds a trainer from saved state. The replay buffer starts empty and
    /// a fresh episode begins.
    pub fn from_state(config: TrainConfig, state: TrainerState) -> Result<Self> {
        let mut t = Self::new(config)?;
        if state.agent.space != t.config.space {
            return Err(Error::Validation("checkpoint action space differs from config".into()));
        }
        if state.agent.online.sizes() != t.agent.online.sizes() {
            return Err(Error::Validation("checkpoint network shape differs from config".into()));
        }
        t.e_sigma = state.embedding.embed(state.sigma.as_matrix())?;
        t.agent = state.agent;
        t.sigma = state.sigma;
        t.embedding = state.embedding;
        t.counters = state.counters;
        t.rngs = state.rngs;
        Ok(t)
    }

    pub fn state(&self) -> TrainerState {
        TrainerState {
            agent: self.agent.clone(),
            sigma: self.sigma.clone(),
            embedding: self.embedding.clone(),
            counters: self.counters,
            rngs: self.rngs.clone(),
        }
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }
    pub fn agent(&self) -> &QAgent {
        &self.agent
    }
    pub fn sigma(&self) -> &SimilarityMatrix {
        &self.sigma
    }
    pub fn embedding(&self) -> &EmbeddingMap {
        &self.embedding
    }
    pub fn counters(&self) -> Counters {
        self.counters
    }
    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }
    pub fn e_sigma(&self) -> &[f64] {
        &self.e_sigma
    }

    fn meta_enabled(&self) -> bool {
        self.config.masp.beta > 0.0
    }

    /// Runs until the step budget is spent, calling `sink` after every
    /// finished episode.
    pub fn run(&mut self, mut sink: impl FnMut(&MetricsRecord) -> Result<()>) -> Result<()> {
        while self.counters.env_steps < self.config.total_steps {
            if let Some(record) = self.decide()? {
                sink(&record)?;
            }
        }
        Ok(())
    }

    /// One decision of the agent, plus any update or target sync it
    /// triggers. Returns the metrics record if the episode ended.
    pub fn decide(&mut self) -> Result<Option<MetricsRecord>> {
        if self.needs_reset {
            let seed = self.rngs.env.gen::<u64>();
            self.env.reset(seed);
            self.episode = EpisodeAcc::default();
            self.needs_reset = false;
        }
        let cfg = &self.config.agent;
        // Uniform actions until the buffer holds `learning_starts` transitions.
        let epsilon = if self.buffer.len() < cfg.learning_starts {
            1.0
        } else {
            cfg.epsilon.value(self.counters.env_steps)
        };
        let obs = self.env.state().observation;
        let q = self.agent.q_values(&obs, &self.e_sigma)?;
        let action = select_action(&q, epsilon, &mut self.rngs.policy)?;
        let executed = execute_action(&mut self.env, action, &self.agent.space, self.agent.gamma)?;

        let steps = executed.rewards.len();
        self.counters.env_steps += steps;
        self.counters.decisions += 1;
        self.episode.length += steps;
        self.episode.ret += executed.rewards.iter().sum::<f64>();
        let done = executed.transition.done;
        self.buffer.push(executed.transition);

        let (batch, warmup, update_period, target_period) =
            (cfg.batch_size, cfg.learning_starts, cfg.update_period, cfg.target_period);
        if self.counters.decisions.is_multiple_of(update_period) && self.buffer.len() >= batch.max(warmup) {
            self.update()?;
        }
        if self.counters.decisions.is_multiple_of(target_period) {
            self.agent.sync_target();
        }

        if !done {
            return Ok(None);
        }
        self.needs_reset = true;
        self.counters.episodes += 1;
        let acc = &self.episode;
        let mean = |x: f64| if acc.updates > 0 { x / acc.updates as f64 } else { 0.0 };
        let stats = self.sigma.stats();
        Ok(Some(MetricsRecord {
            step: self.counters.env_steps,
            episode: self.counters.episodes,
            episode_return: acc.ret,
            success: self.env.success(),
            length: acc.length,
            epsilon,
            td_loss: mean(acc.td),
            masp_loss: mean(acc.masp),
            sigma_mean_offdiag: stats.mean_offdiag,
            sigma_max: stats.max,
            sigma_row_entropy: stats.row_entropy,
        }))
    }

    /// One update: regularized SGD on `θ` and `W_emb`, then (if `β > 0`) the
    /// meta step on `Σ`.
    pub fn update(&mut self) -> Result<()> {
        let n = self.config.agent.batch_size;
        let lr = self.config.agent.lr;
        let masp = &self.config.masp;
        let inner_idx = self.buffer.sample_indices(n, &mut self.rngs.replay)?;
        let inner: Vec<&Transition> = inner_idx.iter().filter_map(|&i| self.buffer.get(i)).collect();
        let loss = regularized_td(
            &self.agent.online,
            &self.agent.target,
            self.agent.gamma,
            &inner,
            &self.e_sigma,
            self.sigma.as_matrix(),
            masp.eta,
        )?;
        let theta = self.meta_enabled().then(|| self.agent.online.clone());
        self.agent.online.sgd_step(&loss.grads, lr)?;
        if self.embedding.dim() > 0 {
            self.embedding.sgd_step(&loss.embedding_grad, self.sigma.as_matrix(), lr)?;
        }

        if let Some(theta) = theta {
            let outer_idx = self.buffer.sample_indices(n, &mut self.rngs.meta)?;
            let outer: Vec<&Transition> = outer_idx.iter().filter_map(|&i| self.buffer.get(i)).collect();
            let problem = MetaProblem {
                theta: &theta,
                target: &self.agent.target,
                gamma: self.agent.gamma,
                inner: &inner,
                outer: &outer,
                e_sigma: &self.e_sigma,
            };
            let meta = meta_gradient(&problem, &self.agent.online, self.sigma.as_matrix(), masp.eta, lr, masp.jvp)?;
            let (_, entropy) = entropy_reg(self.sigma.as_matrix(), masp.entropy_coef, masp.norm_offset)?;
            self.sigma = meta_update(&self.sigma, &meta, &entropy, masp.beta)?;
        }
        self.e_sigma = self.embedding.embed(self.sigma.as_matrix())?;

        self.counters.updates += 1;
        self.episode.updates += 1;
        self.episode.td += loss.td_loss;
        self.episode.masp += loss.masp_loss;
        Ok(())
    }

    /// Test hook: push a transition without acting.
    pub fn push_transition(&mut self, t: Transition) {
        self.buffer.push(t);
    }
}

pub struct TrainOutcome {
    pub state: TrainerState,
    pub metrics: Vec<MetricsRecord>,
}

/// Runs a full training job, collecting metrics in memory.
pub fn train_loop(config: TrainConfig) -> Result<TrainOutcome> {
    let mut trainer = Trainer::new(config)?;
    let mut metrics = Vec::new();
    trainer.run(|m| {
        metrics.push(m.clone());
        Ok(())
    })?;
    Ok(TrainOutcome {
        state: trainer.state(),
        metrics,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub episodes: usize,
    pub mean_return: f64,
    pub success_rate: f64,
    pub mean_length: f64,
}

/// Greedy (ε = 0) rollouts. Episode layouts come from `seed`'s evaluation
/// stream.
pub fn evaluate(
    agent: &QAgent,
    sigma: &SimilarityMatrix,
    embedding: &EmbeddingMap,
    env: &EnvSpec,
    episodes: usize,
    seed: u64,
) -> Result<EvalSummary> {
    if episodes == 0 {
        return Err(Error::config("episodes", "must be at least 1"));
    }
    let mut env = env.build()?;
    if env.num_actions() != agent.space.num_primitives() {
        return Err(Error::Validation(format!(
            "checkpoint expects {} primitive actions, environment has {}",
            agent.space.num_primitives(),
            env.num_actions()
        )));
    }
    let e_sigma = embedding.embed(sigma.as_matrix())?;
    let mut rng = stream(seed, Stream::Evaluation);
    let (mut ret, mut wins, mut len) = (0.0, 0usize, 0usize);
    for _ in 0..episodes {
        env.reset(rng.gen::<u64>());
        while !env.state().done {
            let q = agent.q_values(&env.state().observation, &e_sigma)?;
            let executed = execute_action(&mut env, greedy(&q)?, &agent.space, agent.gamma)?;
            ret += executed.rewards.iter().sum::<f64>();
            len += executed.rewards.len();
        }
        wins += usize::from(env.success());
    }
    let n = episodes as f64;
    Ok(EvalSummary {
        episodes,
        mean_return: ret / n,
        success_rate: wins as f64 / n,
        mean_length: len as f64 / n,
    })
}
