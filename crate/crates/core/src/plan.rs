//! Maintenance plans: the (segment × year) action matrix with cost
//! accounting, budget validation, re-simulation, and the plan file.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::money::Money;
use crate::network::{ActionKind, NetworkState, Trajectory, YearCost};

#[derive(Debug, Clone, PartialEq)]
pub struct MaintenancePlan {
    pub strategy: String,
    /// `actions[i][t]` is the action for segment `i` in year `t + 1`.
    pub actions: Vec<Vec<ActionKind>>,
    pub annual: Vec<YearCost>,
}

impl MaintenancePlan {
    pub fn empty(strategy: impl Into<String>, segments: usize) -> Self {
        Self {
            strategy: strategy.into(),
            actions: vec![Vec::new(); segments],
            annual: Vec::new(),
        }
    }

    pub fn years(&self) -> usize {
        self.annual.len()
    }

    pub fn push_year(&mut self, actions: &[ActionKind], cost: YearCost) {
        for (row, &a) in self.actions.iter_mut().zip(actions) {
            row.push(a);
        }
        self.annual.push(cost);
    }

    pub fn year_actions(&self, year: usize) -> Vec<ActionKind> {
        self.actions.iter().map(|row| row[year]).collect()
    }

    /// Checks shape, recomputes each year's cost from the network and
    /// rejects any year whose spend exceeds its budget by even one cent.
    pub fn validate(&self, network: &NetworkState) -> Result<()> {
        if self.actions.len() != network.len() {
            return Err(Error::InvalidPlan(format!(
                "plan covers {} segments, network has {}",
                self.actions.len(),
                network.len()
            )));
        }
        let years = self.years();
        if years > network.horizon - network.year {
            return Err(Error::InvalidPlan(format!(
                "plan spans {years} years, only {} remain",
                network.horizon - network.year
            )));
        }
        if self.actions.iter().any(|row| row.len() != years) {
            return Err(Error::InvalidPlan("ragged action matrix".into()));
        }
        for t in 0..years {
            let mut cost = YearCost::default();
            for (s, row) in network.segments.iter().zip(&self.actions) {
                cost.add(row[t], s.cost(row[t]));
            }
            let budget = network.budgets[network.year + t];
            if cost.total() > budget {
                return Err(Error::BudgetViolation {
                    year: network.year + t + 1,
                    spent: cost.total().cents(),
                    budget: budget.cents(),
                });
            }
            if cost != self.annual[t] {
                return Err(Error::InvalidPlan(format!(
                    "year {}: recorded cost {:?} differs from recomputed {:?}",
                    t + 1,
                    self.annual[t],
                    cost
                )));
            }
        }
        Ok(())
    }

    pub fn total_spend(&self) -> Money {
        self.annual.iter().map(YearCost::total).sum()
    }
}

/// Replays a plan from `network`, validating budgets along the way.
pub fn simulate(network: &NetworkState, plan: &MaintenancePlan) -> Result<Trajectory> {
    plan.validate(network)?;
    let mut traj = Trajectory::new(network.clone());
    for t in 0..plan.years() {
        let (next, _) = traj.last().step(&plan.year_actions(t))?;
        traj.push(next);
    }
    Ok(traj)
}

const PLAN_FORMAT: &str = "pavenet-plan";
const PLAN_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanFile {
    pub format: String,
    pub version: u32,
    pub strategy: String,
    pub segment_ids: Vec<u64>,
    /// One string per segment, one digit (action code) per year.
    pub actions: Vec<String>,
    pub annual: Vec<YearCost>,
    pub los: Vec<f64>,
    pub halos: f64,
    pub ehlos: f64,
}

impl PlanFile {
    pub fn new(plan: &MaintenancePlan, network: &NetworkState, traj: &Trajectory) -> Result<Self> {
        let los = traj.los_series()?;
        let h = plan.years();
        Ok(Self {
            format: PLAN_FORMAT.into(),
            version: PLAN_VERSION,
            strategy: plan.strategy.clone(),
            segment_ids: network.segments.iter().map(|s| s.id).collect(),
            actions: plan
                .actions
                .iter()
                .map(|row| row.iter().map(|a| char::from(b'0' + a.index() as u8)).collect())
                .collect(),
            annual: plan.annual.clone(),
            halos: crate::metrics::horizon_average(&los, h)?,
            ehlos: crate::metrics::end_of_horizon(&los, h)?,
            los,
        })
    }

    pub fn to_plan(&self) -> Result<MaintenancePlan> {
        if self.format != PLAN_FORMAT || self.version != PLAN_VERSION {
            return Err(Error::InvalidPlan(format!(
                "unsupported plan file {} v{}",
                self.format, self.version
            )));
        }
        let actions = self
            .actions
            .iter()
            .map(|row| {
                row.bytes()
                    .map(|b| {
                        b.checked_sub(b'0')
                            .and_then(|d| ActionKind::from_index(d as usize))
                            .ok_or_else(|| Error::InvalidPlan(format!("bad action code {:?}", b as char)))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MaintenancePlan {
            strategy: self.strategy.clone(),
            actions,
            annual: self.annual.clone(),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("plan serializes");
        write_atomic(path.as_ref(), text.as_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::format(path, e))
    }
}
