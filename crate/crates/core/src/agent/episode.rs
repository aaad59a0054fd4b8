//! Year-by-year rollout of the learned policy with budget allocation.

use rand::Rng;

use super::features::{feature_matrix, AugmentedState, FeatureScales, FEATURE_DIM};
use super::learner::choose;
use super::replay::Transition;
use crate::allocator::greedy_knapsack;
use crate::deterioration::transition;
use crate::error::{Error, Result};
use crate::money::Money;
use crate::network::{ActionKind, NetworkState, Trajectory, YearCost};
use crate::plan::MaintenancePlan;
use crate::rewards::local_reward_from;
use crate::{Candidate, Net};

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeMetrics {
    /// Sum of post-decision LoS over the horizon.
    pub episode_return: f64,
    pub halos: f64,
    pub ehlos: f64,
    pub annual: Vec<YearCost>,
    pub budgets: Vec<Money>,
}

impl EpisodeMetrics {
    /// Years whose spend exceeds the budget (always zero when produced by
    /// [`Episode`], which refuses infeasible years).
    pub fn budget_violations(&self) -> usize {
        self.annual
            .iter()
            .zip(&self.budgets)
            .filter(|(c, b)| c.total() > **b)
            .count()
    }
}

fn row(m: &[f64], i: usize) -> AugmentedState {
    let mut a = [0.0; FEATURE_DIM];
    a.copy_from_slice(&m[i * FEATURE_DIM..(i + 1) * FEATURE_DIM]);
    AugmentedState(a)
}

pub struct Episode {
    state: NetworkState,
    trajectory: Trajectory,
    plan: MaintenancePlan,
    scales: FeatureScales,
    features: Vec<f64>,
    record: bool,
    episode_return: f64,
}

impl Episode {
    /// `record` controls whether [`step_year`](Self::step_year) builds
    /// replay transitions.
    pub fn new(
        network: &NetworkState,
        scales: FeatureScales,
        strategy: &str,
        record: bool,
    ) -> Result<Self> {
        network.validate()?;
        Ok(Self {
            features: feature_matrix(network, &scales)?,
            trajectory: Trajectory::new(network.clone()),
            plan: MaintenancePlan::empty(strategy, network.len()),
            state: network.clone(),
            scales,
            record,
            episode_return: 0.0,
        })
    }

    pub fn state(&self) -> &NetworkState {
        &self.state
    }

    pub fn is_done(&self) -> bool {
        self.state.is_terminal()
    }

    /// Candidate selection, knapsack funding with `ε`-scaled noise,
    /// execution, and (optionally) transition recording for one year.
    pub fn step_year<R: Rng + ?Sized>(
        &mut self,
        q: &Net,
        policy: Option<&Net>,
        epsilon: f64,
        rng: &mut R,
    ) -> Result<Vec<Transition>> {
        if self.is_done() {
            return Err(Error::InvalidPlan("episode already finished".into()));
        }
        let n = self.state.len();
        let n_act = ActionKind::COUNT;
        let q_all = q.forward_batch(&self.features)?;

        let mut proposed = Vec::with_capacity(n);
        let mut candidates = Vec::new();
        for (i, seg) in self.state.segments.iter().enumerate() {
            let qi = &q_all[i * n_act..(i + 1) * n_act];
            let feats = &self.features[i * FEATURE_DIM..(i + 1) * FEATURE_DIM];
            let a = choose(
                qi,
                || match policy {
                    Some(p) => p.forward(feats),
                    None => Err(Error::InvalidConfig("exploration requires a policy network".into())),
                },
                epsilon,
                rng,
            )?;
            proposed.push(a);
            if a != ActionKind::DoNothing {
                candidates.push(Candidate {
                    segment_id: seg.id,
                    action: a,
                    score: qi[a.index()],
                    cost: seg.cost(a),
                });
            }
        }
        let seed = if epsilon > 0.0 { rng.random() } else { 0 };
        let funded = greedy_knapsack(&candidates, self.state.current_budget(), epsilon, seed)?;
        let actions: Vec<ActionKind> = self
            .state
            .segments
            .iter()
            .zip(&proposed)
            .map(|(s, &a)| {
                if a != ActionKind::DoNothing && funded.is_funded(s.id) {
                    a
                } else {
                    ActionKind::DoNothing
                }
            })
            .collect();

        let (next, cost) = self.state.step(&actions)?;
        let next_features = feature_matrix(&next, &self.scales)?;
        let next_los = next.los()?;
        self.episode_return += next_los;

        let mut out = Vec::new();
        if self.record {
            let global = crate::rewards::global_reward(&next)?;
            let done = next.is_terminal();
            out.reserve(n);
            for (i, (seg, &a)) in self.state.segments.iter().zip(&actions).enumerate() {
                let local = if a == ActionKind::DoNothing {
                    0.0
                } else {
                    let idle = transition(seg, ActionKind::DoNothing).pqi;
                    local_reward_from(next.segments[i].pqi, idle, seg.costs.for_action(a), a)?
                };
                out.push(Transition {
                    state: row(&self.features, i),
                    action: a,
                    local_reward: local,
                    global_reward: global,
                    next_state: row(&next_features, i),
                    done,
                });
            }
        }

        self.plan.push_year(&actions, cost);
        self.trajectory.push(next.clone());
        self.state = next;
        self.features = next_features;
        Ok(out)
    }

    pub fn finish(self) -> Result<(MaintenancePlan, Trajectory, EpisodeMetrics)> {
        let metrics = EpisodeMetrics {
            episode_return: self.episode_return,
            halos: self.trajectory.halos()?,
            ehlos: self.trajectory.ehlos()?,
            annual: self.plan.annual.clone(),
            budgets: self.trajectory.states[0].budgets.clone(),
        };
        Ok((self.plan, self.trajectory, metrics))
    }
}

/// Full exploratory rollout without learning.
pub fn run_episode<R: Rng + ?Sized>(
    network: &NetworkState,
    q: &Net,
    policy: &Net,
    scales: FeatureScales,
    epsilon: f64,
    rng: &mut R,
) -> Result<(Trajectory, Vec<Transition>, EpisodeMetrics)> {
    let mut ep = Episode::new(network, scales, "dql", true)?;
    let mut all = Vec::with_capacity(network.len() * network.horizon);
    while !ep.is_done() {
        all.extend(ep.step_year(q, Some(policy), epsilon, rng)?);
    }
    let (_, traj, metrics) = ep.finish()?;
    Ok((traj, all, metrics))
}

/// Deterministic rollout: Q argmax candidates, noiseless knapsack.
pub fn greedy_plan(
    q: &Net,
    scales: FeatureScales,
    network: &NetworkState,
) -> Result<(MaintenancePlan, Trajectory)> {
    let mut ep = Episode::new(network, scales, "dql", false)?;
    // Never drawn from at ε = 0.
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0);
    while !ep.is_done() {
        ep.step_year(q, None, 0.0, &mut rng)?;
    }
    let (plan, traj, _) = ep.finish()?;
    Ok((plan, traj))
}
