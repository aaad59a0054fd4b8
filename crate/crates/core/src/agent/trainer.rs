//! Episode loop: rollouts feed the replay buffer, each simulated year is
//! followed by mini-batch updates of all three networks and soft target
//! updates, and ε decays per episode.

use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::TrainingConfig;
use super::episode::{Episode, EpisodeMetrics};
use super::features::FeatureScales;
use super::learner::Learner;
use super::model::TrainedModel;
use super::replay::ReplayBuffer;
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::metrics::discounted_average;
use crate::network::NetworkState;

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub episode: usize,
    pub episode_return: f64,
    /// Mean losses over the episode's updates; NaN when no update ran.
    pub q_loss: f64,
    pub v_loss: f64,
    pub pi_loss: f64,
    pub epsilon: f64,
    /// HALoS of the noiseless greedy plan, on evaluation episodes only.
    pub greedy_halos: Option<f64>,
    /// The same plan's LoS series averaged with weights `γ^(t−1)`; the
    /// checkpoint with the highest score is kept. Equals `greedy_halos`
    /// at `γ = 1`.
    pub greedy_score: Option<f64>,
    pub metrics: EpisodeMetrics,
}

pub const TRAINING_CSV_HEADER: &str = "episode,return,q_loss,v_loss,epsilon,greedy_halos,greedy_score";

pub fn training_csv(log: &[EpisodeLog]) -> String {
    let mut out = Vec::new();
    writeln!(out, "{TRAINING_CSV_HEADER}").unwrap();
    for l in log {
        let opt = |v: Option<f64>| v.map(|h| h.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            l.episode,
            l.episode_return,
            l.q_loss,
            l.v_loss,
            l.epsilon,
            opt(l.greedy_halos),
            opt(l.greedy_score)
        )
        .unwrap();
    }
    String::from_utf8(out).unwrap()
}

pub fn write_training_csv(log: &[EpisodeLog], path: &Path) -> Result<()> {
    write_atomic(path, training_csv(log).as_bytes())
}

pub struct Trainer {
    pub learner: Learner,
    pub buffer: ReplayBuffer,
    pub config: TrainingConfig,
    pub scales: FeatureScales,
    network: NetworkState,
    rng: ChaCha8Rng,
    episode: usize,
    /// (score, HALoS, model) of the best evaluated checkpoint.
    best: Option<(f64, f64, TrainedModel)>,
}

#[derive(Default)]
struct LossAcc {
    q: f64,
    v: f64,
    pi: f64,
    n: usize,
}

impl Trainer {
    pub fn new(network: &NetworkState, config: TrainingConfig) -> Result<Self> {
        config.validate()?;
        network.validate()?;
        if network.year != 0 {
            return Err(Error::InvalidConfig("training starts from a year-0 network".into()));
        }
        Ok(Self {
            learner: Learner::new(&config)?,
            buffer: ReplayBuffer::new(config.buffer_capacity),
            scales: FeatureScales::of(network),
            network: network.clone(),
            rng: ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(0x5eed)),
            episode: 0,
            best: None,
            config,
        })
    }

    pub fn episodes_done(&self) -> usize {
        self.episode
    }

    pub fn is_finished(&self) -> bool {
        self.episode >= self.config.episodes
    }

    pub fn run_episode(&mut self) -> Result<EpisodeLog> {
        let epsilon = self.config.epsilon_at(self.episode);
        let mut ep = Episode::new(&self.network, self.scales, "dql", true)?;
        let mut acc = LossAcc::default();
        while !ep.is_done() {
            let transitions = ep.step_year(
                &self.learner.q,
                Some(&self.learner.policy),
                epsilon,
                &mut self.rng,
            )?;
            self.buffer.extend(transitions);
            if self.buffer.len() < self.config.batch_size {
                continue;
            }
            for _ in 0..self.config.updates_per_year {
                let batch = self.buffer.sample(self.config.batch_size, &mut self.rng);
                acc.q += self.learner.update_q(&batch)?;
                acc.v += self.learner.update_value(&batch)?;
                acc.pi += self.learner.update_policy(&batch)?;
                acc.n += 1;
                self.learner.soft_update_targets()?;
            }
        }
        let (_, _, metrics) = ep.finish()?;
        let n = if acc.n == 0 { f64::NAN } else { acc.n as f64 };
        let every = self.config.eval_every;
        let last = self.episode + 1 == self.config.episodes;
        let (greedy_halos, greedy_score) = if every > 0 && ((self.episode + 1).is_multiple_of(every) || last) {
            let candidate = self.current_model();
            let (_, traj) = candidate.greedy_plan(&self.network)?;
            let halos = traj.halos()?;
            let score = discounted_average(&traj.los_series()?, traj.horizon(), self.config.gamma)?;
            if self.best.as_ref().is_none_or(|(b, _, _)| score > *b) {
                self.best = Some((score, halos, candidate));
            }
            (Some(halos), Some(score))
        } else {
            (None, None)
        };
        let log = EpisodeLog {
            episode: self.episode,
            episode_return: metrics.episode_return,
            q_loss: acc.q / n,
            v_loss: acc.v / n,
            pi_loss: acc.pi / n,
            epsilon,
            greedy_halos,
            greedy_score,
            metrics,
        };
        self.episode += 1;
        Ok(log)
    }

    /// The best evaluated model when evaluation is enabled, otherwise the
    /// current weights.
    pub fn model(&self) -> TrainedModel {
        match &self.best {
            Some((_, _, m)) => m.clone(),
            None => self.current_model(),
        }
    }

    /// Greedy-plan HALoS of the model [`Trainer::model`] returns, if any
    /// evaluation has run.
    pub fn best_halos(&self) -> Option<f64> {
        self.best.as_ref().map(|(_, h, _)| *h)
    }

    pub fn current_model(&self) -> TrainedModel {
        TrainedModel {
            q: self.learner.q.clone(),
            policy: self.learner.policy.clone(),
            value: self.learner.value.clone(),
            scales: self.scales,
            config: self.config.clone(),
        }
    }
}

/// Trains for the configured number of episodes, calling `progress` after
/// each one.
pub fn train_with(
    network: &NetworkState,
    config: TrainingConfig,
    mut progress: impl FnMut(&EpisodeLog),
) -> Result<(TrainedModel, Vec<EpisodeLog>)> {
    let mut trainer = Trainer::new(network, config)?;
    let mut log = Vec::with_capacity(trainer.config.episodes);
    while !trainer.is_finished() {
        let entry = trainer.run_episode()?;
        progress(&entry);
        log.push(entry);
    }
    Ok((trainer.model(), log))
}

pub fn train(
    network: &NetworkState,
    config: TrainingConfig,
) -> Result<(TrainedModel, Vec<EpisodeLog>)> {
    train_with(network, config, |_| {})
}
