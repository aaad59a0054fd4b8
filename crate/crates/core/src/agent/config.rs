use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Algorithm;

/// Bootstrap rule for the local Q target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetRule {
    /// `Σ_a' π(a'|s')·Q⁻(s',a')`
    ExpectedSarsa,
    /// `max_a' Q⁻(s',a')`
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

impl OptimizerKind {
    pub fn algorithm(self) -> Algorithm {
        match self {
            OptimizerKind::Sgd => Algorithm::Sgd,
            OptimizerKind::Adam => Algorithm::adam(),
        }
    }
}

/// Exponential decay from `start` to `end`, reaching the floor after
/// `decay_fraction` of the episodes and staying there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub decay_fraction: f64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self {
            start: 1.0,
            end: 0.1,
            decay_fraction: 0.6,
        }
    }
}

impl EpsilonSchedule {
    pub fn validate(&self) -> Result<()> {
        let ok = (0.0..=1.0).contains(&self.start)
            && (0.0..=1.0).contains(&self.end)
            && self.end <= self.start
            && self.decay_fraction > 0.0
            && self.decay_fraction <= 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("bad epsilon schedule {self:?}")))
        }
    }

    /// ε for 0-based `episode` out of `episodes`.
    pub fn value(&self, episode: usize, episodes: usize) -> f64 {
        let decay = ((self.decay_fraction * episodes as f64).round() as usize).max(1);
        if episode >= decay {
            return self.end;
        }
        if self.end > 0.0 {
            let factor = (self.end / self.start).powf(1.0 / decay as f64);
            (self.start * factor.powi(episode as i32)).max(self.end)
        } else {
            self.start * (1.0 - episode as f64 / decay as f64)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub gamma: f64,
    pub episodes: usize,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub epsilon: EpsilonSchedule,
    /// Soft target update rate.
    pub tau: f64,
    pub target_rule: TargetRule,
    pub lr_q: f64,
    pub lr_v: f64,
    pub lr_pi: f64,
    pub optimizer: OptimizerKind,
    pub hidden: Vec<usize>,
    /// Mini-batch updates of each network per simulated year.
    pub updates_per_year: usize,
    /// Greedy-plan evaluation period in episodes. The evaluated model whose
    /// plan has the highest γ-discounted mean LoS is the one returned; 0
    /// keeps the final weights.
    pub eval_every: usize,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            episodes: 300,
            batch_size: 256,
            buffer_capacity: 200_000,
            epsilon: EpsilonSchedule::default(),
            tau: 0.01,
            target_rule: TargetRule::ExpectedSarsa,
            lr_q: 3e-4,
            lr_v: 1e-3,
            lr_pi: 3e-5,
            optimizer: OptimizerKind::Adam,
            hidden: vec![64, 64],
            updates_per_year: 4,
            eval_every: 5,
            seed: 0,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad(format!("gamma {} outside (0, 1]", self.gamma));
        }
        if self.episodes == 0 {
            return bad("episodes must be positive".into());
        }
        if self.batch_size == 0 || self.buffer_capacity < self.batch_size {
            return bad(format!(
                "batch size {} must be positive and no larger than buffer capacity {}",
                self.batch_size, self.buffer_capacity
            ));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return bad(format!("tau {} outside (0, 1]", self.tau));
        }
        for (name, lr) in [("lr_q", self.lr_q), ("lr_v", self.lr_v), ("lr_pi", self.lr_pi)] {
            if !(lr > 0.0) {
                return bad(format!("{name} must be positive"));
            }
        }
        if self.hidden.contains(&0) {
            return bad("hidden layers must be non-empty".into());
        }
        self.epsilon.validate()
    }

    pub fn epsilon_at(&self, episode: usize) -> f64 {
        self.epsilon.value(episode, self.episodes)
    }
}
