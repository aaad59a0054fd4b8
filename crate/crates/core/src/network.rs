//! Domain types for a pavement network: segments, road classes, actions,
//! the year-indexed network state and its trajectory.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::deterioration::{transition, WeibullCurve};
use crate::error::{Error, Result};
use crate::metrics;
use crate::money::Money;
use crate::rewards::action_cost;

pub const PQI_MAX: f64 = 10.0;
pub const HISTOGRAM_BINS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoadClass {
    Arterial,
    Collector,
    Local,
}

impl RoadClass {
    pub const ALL: [RoadClass; 3] = [RoadClass::Arterial, RoadClass::Collector, RoadClass::Local];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            RoadClass::Arterial => "arterial",
            RoadClass::Collector => "collector",
            RoadClass::Local => "local",
        }
    }
}

/// Per-square-metre unit costs of the two paid treatments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitCosts {
    pub rehab: f64,
    pub recon: f64,
}

impl UnitCosts {
    pub fn new(rehab: f64, recon: f64) -> Result<Self> {
        let c = Self { rehab, recon };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rehab > 0.0) {
            return Err(Error::NonPositiveCost {
                action: "rehabilitation",
                cost: self.rehab,
            });
        }
        if !(self.recon > self.rehab) {
            return Err(Error::InvalidConfig(format!(
                "reconstruction unit cost {} must exceed rehabilitation unit cost {}",
                self.recon, self.rehab
            )));
        }
        Ok(())
    }

    pub fn for_action(&self, action: ActionKind) -> f64 {
        match action {
            ActionKind::DoNothing => 0.0,
            ActionKind::Rehabilitation => self.rehab,
            ActionKind::Reconstruction => self.recon,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostTable {
    pub arterial: UnitCosts,
    pub collector: UnitCosts,
    pub local: UnitCosts,
}

impl Default for CostTable {
    /// Arterial and Local endpoints as published; Collector at the midpoints.
    fn default() -> Self {
        Self {
            arterial: UnitCosts {
                rehab: 40.0,
                recon: 200.0,
            },
            collector: UnitCosts {
                rehab: 30.0,
                recon: 175.0,
            },
            local: UnitCosts {
                rehab: 20.0,
                recon: 150.0,
            },
        }
    }
}

impl CostTable {
    pub fn get(&self, class: RoadClass) -> UnitCosts {
        match class {
            RoadClass::Arterial => self.arterial,
            RoadClass::Collector => self.collector,
            RoadClass::Local => self.local,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for class in RoadClass::ALL {
            self.get(class).validate()?;
        }
        Ok(())
    }

    pub fn max_recon(&self) -> f64 {
        RoadClass::ALL
            .iter()
            .map(|&c| self.get(c).recon)
            .fold(f64::MIN, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum ActionKind {
    DoNothing = 0,
    Rehabilitation = 1,
    Reconstruction = 2,
}

impl ActionKind {
    pub const COUNT: usize = 3;
    pub const ALL: [ActionKind; 3] = [
        ActionKind::DoNothing,
        ActionKind::Rehabilitation,
        ActionKind::Reconstruction,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ActionKind::DoNothing => "do-nothing",
            ActionKind::Rehabilitation => "rehabilitation",
            ActionKind::Reconstruction => "reconstruction",
        }
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A single pavement segment. The effective age is the canonical
/// deterioration state and `pqi` always equals the curve evaluated there
/// (except for the initial condition, which is the observed value the age
/// was inverted from).
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub id: u64,
    pub class: RoadClass,
    /// Pavement area in m², used as the LoS weight.
    pub area: f64,
    pub lambda: f64,
    pub k: f64,
    pub pqi: f64,
    pub effective_age: f64,
    pub costs: UnitCosts,
}

impl Segment {
    pub fn new(
        id: u64,
        class: RoadClass,
        area: f64,
        lambda: f64,
        k: f64,
        pqi: f64,
        costs: UnitCosts,
    ) -> Result<Self> {
        if !(area > 0.0) || !area.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "segment {id}: area must be positive, got {area}"
            )));
        }
        costs.validate()?;
        let curve = WeibullCurve::new(lambda, k)?;
        let effective_age = curve.effective_age(pqi)?;
        Ok(Self {
            id,
            class,
            area,
            lambda,
            k,
            pqi,
            effective_age,
            costs,
        })
    }

    pub fn curve(&self) -> WeibullCurve<f64> {
        WeibullCurve {
            lambda: self.lambda,
            k: self.k,
            pqi_max: PQI_MAX,
        }
    }

    pub fn cost(&self, action: ActionKind) -> Money {
        action_cost(self, action)
    }
}

/// Spend in one year split by treatment.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct YearCost {
    pub rehab: Money,
    pub recon: Money,
}

impl YearCost {
    pub fn total(&self) -> Money {
        self.rehab + self.recon
    }

    pub fn add(&mut self, action: ActionKind, cost: Money) {
        match action {
            ActionKind::DoNothing => {}
            ActionKind::Rehabilitation => self.rehab += cost,
            ActionKind::Reconstruction => self.recon += cost,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub segments: Vec<Segment>,
    pub year: usize,
    pub horizon: usize,
    /// One budget per planning year.
    pub budgets: Vec<Money>,
    pub spent_to_date: Money,
    pub costs: CostTable,
}

impl NetworkState {
    pub fn new(
        segments: Vec<Segment>,
        horizon: usize,
        budgets: Vec<Money>,
        costs: CostTable,
    ) -> Result<Self> {
        let state = Self {
            segments,
            year: 0,
            horizon,
            budgets,
            spent_to_date: Money::ZERO,
            costs,
        };
        state.validate()?;
        Ok(state)
    }

    /// Convenience for a constant annual budget.
    pub fn with_constant_budget(
        segments: Vec<Segment>,
        horizon: usize,
        annual: Money,
        costs: CostTable,
    ) -> Result<Self> {
        Self::new(segments, horizon, vec![annual; horizon], costs)
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::EmptyNetwork);
        }
        if self.horizon == 0 {
            return Err(Error::InvalidConfig("horizon must be at least one year".into()));
        }
        if self.budgets.len() != self.horizon {
            return Err(Error::InvalidConfig(format!(
                "{} budgets given for a {}-year horizon",
                self.budgets.len(),
                self.horizon
            )));
        }
        if self.budgets.iter().any(|b| b.cents() < 0) {
            return Err(Error::InvalidConfig("budgets must be non-negative".into()));
        }
        if self.year > self.horizon {
            return Err(Error::InvalidConfig(format!(
                "year {} beyond horizon {}",
                self.year, self.horizon
            )));
        }
        let elapsed: Money = self.budgets[..self.year].iter().copied().sum();
        if self.spent_to_date > elapsed {
            return Err(Error::InvalidConfig(format!(
                "spent {} exceeds budgets of elapsed years {}",
                self.spent_to_date, elapsed
            )));
        }
        self.costs.validate()?;
        let mut ids = HashSet::with_capacity(self.segments.len());
        for s in &self.segments {
            if !ids.insert(s.id) {
                return Err(Error::DuplicateSegment(s.id));
            }
            if !(0.0..=PQI_MAX).contains(&s.pqi) {
                return Err(Error::AboveMaximum {
                    pqi: s.pqi,
                    max: PQI_MAX,
                });
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    fn weighted(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.segments.iter().map(|s| (s.area, s.pqi))
    }

    pub fn los(&self) -> Result<f64> {
        metrics::level_of_service(self.weighted())
    }

    pub fn condition_histogram(&self, bins: usize) -> Result<Vec<f64>> {
        metrics::condition_histogram(self.weighted(), bins, PQI_MAX)
    }

    pub fn total_area(&self) -> f64 {
        self.segments.iter().map(|s| s.area).sum()
    }

    pub fn max_area(&self) -> f64 {
        self.segments.iter().map(|s| s.area).fold(0.0, f64::max)
    }

    pub fn max_lambda(&self) -> f64 {
        self.segments.iter().map(|s| s.lambda).fold(0.0, f64::max)
    }

    pub fn total_budget(&self) -> Money {
        self.budgets.iter().copied().sum()
    }

    pub fn remaining_budget(&self) -> Money {
        self.total_budget() - self.spent_to_date
    }

    /// Budget of the current decision year, zero once the horizon is done.
    pub fn current_budget(&self) -> Money {
        self.budgets.get(self.year).copied().unwrap_or(Money::ZERO)
    }

    pub fn is_terminal(&self) -> bool {
        self.year >= self.horizon
    }

    /// Same segments with a different budget profile, restarted at year 0.
    pub fn with_budgets(&self, budgets: Vec<Money>) -> Result<Self> {
        let mut s = self.clone();
        s.horizon = budgets.len();
        s.budgets = budgets;
        s.year = 0;
        s.spent_to_date = Money::ZERO;
        s.validate()?;
        Ok(s)
    }

    /// Applies one action per segment for the current year. Fails without
    /// changing anything if the year's spend would exceed its budget.
    pub fn step(&self, actions: &[ActionKind]) -> Result<(NetworkState, YearCost)> {
        if actions.len() != self.segments.len() {
            return Err(Error::DimensionMismatch {
                expected: self.segments.len(),
                got: actions.len(),
            });
        }
        if self.is_terminal() {
            return Err(Error::InvalidPlan(format!(
                "no decisions left after year {}",
                self.horizon
            )));
        }
        let mut cost = YearCost::default();
        for (s, &a) in self.segments.iter().zip(actions) {
            cost.add(a, s.cost(a));
        }
        let budget = self.current_budget();
        if cost.total() > budget {
            return Err(Error::BudgetViolation {
                year: self.year + 1,
                spent: cost.total().cents(),
                budget: budget.cents(),
            });
        }
        let segments = self
            .segments
            .iter()
            .zip(actions)
            .map(|(s, &a)| transition(s, a))
            .collect();
        let next = NetworkState {
            segments,
            year: self.year + 1,
            horizon: self.horizon,
            budgets: self.budgets.clone(),
            spent_to_date: self.spent_to_date + cost.total(),
            costs: self.costs,
        };
        Ok((next, cost))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = self.to_file_string();
        crate::io::write_atomic(path, text.as_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_file_str(&text).map_err(|e| match e {
            Error::Format { source, .. } => Error::format(path, source),
            other => other,
        })
    }

    /// Serialized network file: a JSON object with one segment per line.
    pub fn to_file_string(&self) -> String {
        let header = FileHeader {
            format: NETWORK_FORMAT.to_string(),
            version: NETWORK_VERSION,
            year: self.year,
            horizon: self.horizon,
            budgets: self.budgets.clone(),
            spent_to_date: self.spent_to_date,
            cost_table: self.costs,
        };
        let mut out = Vec::new();
        let head = serde_json::to_string_pretty(&header).expect("header serializes");
        // Reopen the object to append the segment array.
        let head = head.trim_end().trim_end_matches('}').trim_end();
        writeln!(out, "{head},").unwrap();
        writeln!(out, "  \"segments\": [").unwrap();
        let n = self.segments.len();
        for (i, s) in self.segments.iter().enumerate() {
            let rec = SegmentRecord {
                id: s.id,
                class: s.class,
                area: s.area,
                lambda: s.lambda,
                k: s.k,
                pqi0: s.pqi,
                age: Some(s.effective_age),
            };
            let line = serde_json::to_string(&rec).expect("segment serializes");
            let sep = if i + 1 < n { "," } else { "" };
            writeln!(out, "    {line}{sep}").unwrap();
        }
        writeln!(out, "  ]").unwrap();
        writeln!(out, "}}").unwrap();
        String::from_utf8(out).unwrap()
    }

    pub fn from_file_str(text: &str) -> Result<Self> {
        let file: NetworkFile =
            serde_json::from_str(text).map_err(|e| Error::format("<network>", e))?;
        if file.header.format != NETWORK_FORMAT {
            return Err(Error::InvalidConfig(format!(
                "not a network file (format {:?})",
                file.header.format
            )));
        }
        if file.header.version != NETWORK_VERSION {
            return Err(Error::InvalidConfig(format!(
                "unsupported network file version {}",
                file.header.version
            )));
        }
        let table = file.header.cost_table;
        let mut segments = Vec::with_capacity(file.segments.len());
        for r in file.segments {
            let mut s = Segment::new(r.id, r.class, r.area, r.lambda, r.k, r.pqi0, table.get(r.class))?;
            if let Some(age) = r.age {
                if age < 0.0 || !age.is_finite() {
                    return Err(Error::NegativeAge(age));
                }
                s.effective_age = age;
            }
            segments.push(s);
        }
        let state = NetworkState {
            segments,
            year: file.header.year,
            horizon: file.header.horizon,
            budgets: file.header.budgets,
            spent_to_date: file.header.spent_to_date,
            costs: table,
        };
        state.validate()?;
        Ok(state)
    }
}

const NETWORK_FORMAT: &str = "pavenet-network";
const NETWORK_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct FileHeader {
    format: String,
    version: u32,
    year: usize,
    horizon: usize,
    budgets: Vec<Money>,
    spent_to_date: Money,
    cost_table: CostTable,
}

#[derive(Serialize, Deserialize)]
struct SegmentRecord {
    id: u64,
    class: RoadClass,
    area: f64,
    lambda: f64,
    k: f64,
    pqi0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    age: Option<f64>,
}

#[derive(Deserialize)]
struct NetworkFile {
    #[serde(flatten)]
    header: FileHeader,
    segments: Vec<SegmentRecord>,
}

impl FromStr for NetworkState {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::from_file_str(s)
    }
}

/// Year-by-year record of network states; `states[0]` is the initial
/// network and `states[t]` the state after the decisions of year `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<NetworkState>,
}

impl Trajectory {
    pub fn new(initial: NetworkState) -> Self {
        Self {
            states: vec![initial],
        }
    }

    pub fn push(&mut self, state: NetworkState) {
        self.states.push(state);
    }

    pub fn last(&self) -> &NetworkState {
        self.states.last().expect("trajectory is never empty")
    }

    pub fn horizon(&self) -> usize {
        self.states[0].horizon
    }

    pub fn los_series(&self) -> Result<Vec<f64>> {
        self.states.iter().map(NetworkState::los).collect()
    }

    pub fn halos(&self) -> Result<f64> {
        halos(&self.states, self.horizon())
    }

    pub fn ehlos(&self) -> Result<f64> {
        ehlos(&self.states, self.horizon())
    }
}

/// Horizon-averaged LoS over the post-decision states `1..=h`.
pub fn halos(states: &[NetworkState], h: usize) -> Result<f64> {
    if states.len() < h + 1 {
        return Err(Error::TrajectoryTooShort {
            needed: h + 1,
            got: states.len(),
        });
    }
    let series: Vec<f64> = states[..=h].iter().map(NetworkState::los).collect::<Result<_>>()?;
    metrics::horizon_average(&series, h)
}

pub fn ehlos(states: &[NetworkState], h: usize) -> Result<f64> {
    if states.len() < h + 1 {
        return Err(Error::TrajectoryTooShort {
            needed: h + 1,
            got: states.len(),
        });
    }
    states[h].los()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub fn local(id: u64, area: f64, pqi: f64) -> Segment {
        Segment::new(
            id,
            RoadClass::Local,
            area,
            0.01,
            2.0,
            pqi,
            CostTable::default().local,
        )
        .unwrap()
    }

    pub fn small_network(budget: Money) -> NetworkState {
        NetworkState::with_constant_budget(
            vec![local(0, 1.0, 10.0), local(1, 3.0, 6.0)],
            2,
            budget,
            CostTable::default(),
        )
        .unwrap()
    }

    #[test]
    fn los_examples() {
        let n = small_network(Money::ZERO);
        assert_eq!(n.los().unwrap(), 7.0);
        let all_new = NetworkState::with_constant_budget(
            (0..5).map(|i| local(i, 10.0 + i as f64, 10.0)).collect(),
            1,
            Money::ZERO,
            CostTable::default(),
        )
        .unwrap();
        assert_eq!(all_new.los().unwrap(), 10.0);
    }

    #[test]
    fn empty_network_rejected() {
        let err = NetworkState::new(vec![], 1, vec![Money::ZERO], CostTable::default());
        assert!(matches!(err, Err(Error::EmptyNetwork)));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let err = NetworkState::with_constant_budget(
            vec![local(3, 1.0, 5.0), local(3, 1.0, 6.0)],
            1,
            Money::ZERO,
            CostTable::default(),
        );
        assert!(matches!(err, Err(Error::DuplicateSegment(3))));
    }

    #[test]
    fn step_enforces_budget() {
        let n = small_network(Money::from_dollars(10.0));
        // Rehabilitating segment 0 (1 m² at $20) exceeds $10.
        let err = n.step(&[ActionKind::Rehabilitation, ActionKind::DoNothing]);
        assert!(matches!(err, Err(Error::BudgetViolation { year: 1, .. })));
        let (next, cost) = n.step(&[ActionKind::DoNothing; 2]).unwrap();
        assert_eq!(cost.total(), Money::ZERO);
        assert_eq!(next.year, 1);
    }

    #[test]
    fn unit_cost_ordering_enforced() {
        assert!(UnitCosts::new(20.0, 10.0).is_err());
        assert!(UnitCosts::new(0.0, 10.0).is_err());
    }

    #[test]
    fn file_round_trip_is_bit_exact() {
        let mut n = small_network(Money::from_cents(123_456));
        n.segments[1].pqi = 6.123_456_789_012_345;
        n.segments[1].effective_age = 0.1 + 0.2;
        let text = n.to_file_string();
        let back: NetworkState = text.parse().unwrap();
        assert_eq!(back, n);
        assert_eq!(back.to_file_string(), text);
    }

    #[test]
    fn wrong_format_rejected() {
        let text = small_network(Money::ZERO)
            .to_file_string()
            .replace("pavenet-network", "something-else");
        assert!(text.parse::<NetworkState>().is_err());
    }
}
