//! The three jointly trained networks and their losses.

use rand::Rng;

use super::config::{TargetRule, TrainingConfig};
use super::features::{AugmentedState, FEATURE_DIM};
use super::replay::Transition;
use crate::error::{Error, Result};
use crate::network::ActionKind;
use crate::nn::{soft_update, DenseNet, Gradients, Head, OptimizerState};
use crate::{Net, Optimizer};

/// Floor applied inside the policy log-likelihood.
pub const LOG_FLOOR: f64 = 1e-12;

pub fn layer_dims(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    let mut d = Vec::with_capacity(hidden.len() + 2);
    d.push(input);
    d.extend_from_slice(hidden);
    d.push(output);
    d
}

/// Index of the largest entry; ties go to the lower index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Draws an index from a discrete distribution by inversion.
pub fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Rounding left u above the cumulative sum: return the last supported entry.
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

/// Candidate choice from precomputed Q values. With probability `epsilon`
/// the action is drawn from the policy distribution (computed lazily),
/// otherwise it is the Q argmax. No random numbers are consumed when
/// `epsilon` is zero.
pub fn choose<R: Rng + ?Sized>(
    q_values: &[f64],
    policy: impl FnOnce() -> Result<Vec<f64>>,
    epsilon: f64,
    rng: &mut R,
) -> Result<ActionKind> {
    let idx = if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        sample_index(&policy()?, rng)
    } else {
        argmax(q_values)
    };
    Ok(ActionKind::from_index(idx).expect("network output width matches action count"))
}

pub fn select_candidate<R: Rng + ?Sized>(
    q_net: &Net,
    policy_net: &Net,
    state: &AugmentedState,
    epsilon: f64,
    rng: &mut R,
) -> Result<ActionKind> {
    let q = q_net.forward(state.as_slice())?;
    choose(&q, || policy_net.forward(state.as_slice()), epsilon, rng)
}

/// `r_local + γ(1−d)·B(s')` with `B` the policy expectation or the max of
/// the target Q values.
pub fn q_target(
    t: &Transition,
    q_target_net: &Net,
    policy_net: &Net,
    gamma: f64,
    rule: TargetRule,
) -> Result<f64> {
    if t.done {
        return Ok(t.local_reward);
    }
    let q_next = q_target_net.forward(t.next_state.as_slice())?;
    let boot = match rule {
        TargetRule::Max => q_next.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        TargetRule::ExpectedSarsa => {
            let pi = policy_net.forward(t.next_state.as_slice())?;
            pi.iter().zip(&q_next).map(|(p, q)| p * q).sum()
        }
    };
    Ok(t.local_reward + gamma * boot)
}

pub struct Learner {
    pub q: Net,
    pub q_target: Net,
    pub policy: Net,
    pub value: Net,
    pub value_target: Net,
    pub opt_q: Optimizer,
    pub opt_v: Optimizer,
    pub opt_pi: Optimizer,
    pub gamma: f64,
    pub rule: TargetRule,
    pub tau: f64,
}

impl Learner {
    pub fn new(config: &TrainingConfig) -> Result<Self> {
        config.validate()?;
        let n_act = ActionKind::COUNT;
        let q = DenseNet::new(&layer_dims(FEATURE_DIM, &config.hidden, n_act), Head::Linear, config.seed)?;
        let policy = DenseNet::new(
            &layer_dims(FEATURE_DIM, &config.hidden, n_act),
            Head::Softmax,
            config.seed.wrapping_add(1),
        )?;
        let value = DenseNet::new(
            &layer_dims(FEATURE_DIM, &config.hidden, 1),
            Head::Linear,
            config.seed.wrapping_add(2),
        )?;
        Self::from_nets(q, policy, value, config)
    }

    pub fn from_nets(q: Net, policy: Net, value: Net, config: &TrainingConfig) -> Result<Self> {
        let alg = config.optimizer.algorithm();
        Ok(Self {
            opt_q: OptimizerState::new(alg, config.lr_q, q.num_params())?,
            opt_v: OptimizerState::new(alg, config.lr_v, value.num_params())?,
            opt_pi: OptimizerState::new(alg, config.lr_pi, policy.num_params())?,
            q_target: q.clone(),
            value_target: value.clone(),
            q,
            policy,
            value,
            gamma: config.gamma,
            rule: config.target_rule,
            tau: config.tau,
        })
    }

    /// Mean squared TD error before the step; then one optimizer step on
    /// the Q network.
    pub fn update_q(&mut self, batch: &[&Transition]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let n = batch.len() as f64;
        let mut grads = Gradients::zeros(self.q.num_params());
        let mut loss = 0.0;
        for t in batch {
            let y = q_target(t, &self.q_target, &self.policy, self.gamma, self.rule)?;
            let trace = self.q.trace(t.state.as_slice())?;
            let a = t.action.index();
            let err = trace.output[a] - y;
            loss += err * err;
            let mut g = [0.0; ActionKind::COUNT];
            g[a] = 2.0 * err / n;
            self.q.backward_into(&trace, &g, &mut grads)?;
        }
        self.opt_q.apply(&mut self.q, &grads)?;
        Ok(loss / n)
    }

    /// Value regression onto `r_global + γ(1−d)·V⁻(s')`.
    pub fn update_value(&mut self, batch: &[&Transition]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let n = batch.len() as f64;
        let mut grads = Gradients::zeros(self.value.num_params());
        let mut loss = 0.0;
        for t in batch {
            let y = self.value_target_for(t)?;
            let trace = self.value.trace(t.state.as_slice())?;
            let err = trace.output[0] - y;
            loss += err * err;
            self.value.backward_into(&trace, &[2.0 * err / n], &mut grads)?;
        }
        self.opt_v.apply(&mut self.value, &grads)?;
        Ok(loss / n)
    }

    pub fn value_target_for(&self, t: &Transition) -> Result<f64> {
        if t.done {
            return Ok(t.global_reward);
        }
        Ok(t.global_reward + self.gamma * self.value_target.forward(t.next_state.as_slice())?[0])
    }

    /// One-step advantage under the online value network.
    pub fn advantage(&self, t: &Transition) -> Result<f64> {
        let next = if t.done {
            0.0
        } else {
            self.value.forward(t.next_state.as_slice())?[0]
        };
        let here = self.value.forward(t.state.as_slice())?[0];
        Ok(t.global_reward + self.gamma * next - here)
    }

    /// `−mean(log π(a|s) · A)` with advantages held constant.
    pub fn update_policy(&mut self, batch: &[&Transition]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let n = batch.len() as f64;
        let mut grads = Gradients::zeros(self.policy.num_params());
        let mut loss = 0.0;
        for t in batch {
            let adv = self.advantage(t)?;
            let trace = self.policy.trace(t.state.as_slice())?;
            let a = t.action.index();
            let p = trace.output[a];
            loss -= p.max(LOG_FLOOR).ln() * adv;
            if p > LOG_FLOOR && adv != 0.0 {
                let mut g = [0.0; ActionKind::COUNT];
                g[a] = -adv / (p * n);
                self.policy.backward_into(&trace, &g, &mut grads)?;
            }
        }
        self.opt_pi.apply(&mut self.policy, &grads)?;
        Ok(loss / n)
    }

    pub fn soft_update_targets(&mut self) -> Result<()> {
        soft_update(&mut self.q_target, &self.q, self.tau)?;
        soft_update(&mut self.value_target, &self.value, self.tau)
    }
}
