//! Annual budget allocation.
//!
//! Training and the learned policy use [`greedy_knapsack`]: one candidate
//! treatment per segment, ranked by (optionally noise-perturbed) score and
//! funded in order while the budget lasts. The myopic baseline uses
//! [`multichoice_allocate`], a greedy multiple-choice knapsack over full
//! per-segment action menus. [`exact_knapsack`] is the optimal 0/1 solution
//! used to check the greedy rule on small instances.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::money::Money;
use crate::network::ActionKind;
use crate::scalar::Real;

/// One segment's proposed treatment. `score` is a per-unit-cost value, so
/// `score × cost` is the benefit the candidate contributes when funded.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate<T> {
    pub segment_id: u64,
    pub action: ActionKind,
    pub score: T,
    pub cost: Money,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationResult<T> {
    pub funded: BTreeSet<u64>,
    pub total_cost: Money,
    pub objective_value: T,
}

impl<T: Real> AllocationResult<T> {
    fn empty() -> Self {
        Self {
            funded: BTreeSet::new(),
            total_cost: Money::ZERO,
            objective_value: T::zero(),
        }
    }

    pub fn is_funded(&self, id: u64) -> bool {
        self.funded.contains(&id)
    }
}

fn benefit<T: Real>(score: T, cost: Money) -> T {
    score * T::lit(cost.dollars())
}

fn check_unique<T>(candidates: &[Candidate<T>]) -> Result<()> {
    let mut seen = HashSet::with_capacity(candidates.len());
    for c in candidates {
        if !seen.insert(c.segment_id) {
            return Err(Error::DuplicateSegment(c.segment_id));
        }
        if c.cost.cents() < 0 {
            return Err(Error::InvalidConfig(format!(
                "candidate {} has negative cost",
                c.segment_id
            )));
        }
    }
    Ok(())
}

/// Extra greedy passes, each forced to fund one high-value candidate first.
pub const GREEDY_ANCHORS: usize = 8;

/// Ranks candidates by `score · (1 + εᵢ)` with `εᵢ ~ N(0, noise_sigma)` and
/// funds them in descending order, skipping any that no longer fit. The
/// pass is repeated with each of up to [`GREEDY_ANCHORS`] high-value
/// candidates funded first and the best fill is returned.
/// Candidates whose perturbed score is not positive are never funded.
/// Ties are broken by lower cost, then lower segment id.
pub fn greedy_knapsack<T: Real>(
    candidates: &[Candidate<T>],
    budget: Money,
    noise_sigma: T,
    seed: u64,
) -> Result<AllocationResult<T>> {
    check_unique(candidates)?;
    if budget.cents() < 0 {
        return Err(Error::InvalidConfig("budget must be non-negative".into()));
    }
    let scores: Vec<T> = if noise_sigma > T::zero() {
        let sigma = noise_sigma.to_f64_lossless();
        let normal = Normal::new(0.0, sigma)
            .map_err(|e| Error::InvalidConfig(format!("noise sigma {sigma}: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        candidates
            .iter()
            .map(|c| c.score * (T::one() + T::lit(normal.sample(&mut rng))))
            .collect()
    } else {
        candidates.iter().map(|c| c.score).collect()
    };

    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(Ordering::Equal)
            .then(candidates[a].cost.cmp(&candidates[b].cost))
            .then(candidates[a].segment_id.cmp(&candidates[b].segment_id))
    });

    let mut result = fill_in_order(candidates, &scores, &order, budget, None);
    // Ratio order alone can strand a large, valuable item, so the fill is
    // repeated starting from each of the most valuable affordable
    // candidates the first pass left out, keeping the best.
    let mut anchors: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&i| {
            scores[i] > T::zero()
                && candidates[i].cost <= budget
                && !result.is_funded(candidates[i].segment_id)
        })
        .collect();
    anchors.sort_by(|&a, &b| {
        benefit(scores[b], candidates[b].cost)
            .partial_cmp(&benefit(scores[a], candidates[a].cost))
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    for &j in anchors.iter().take(GREEDY_ANCHORS) {
        let alt = fill_in_order(candidates, &scores, &order, budget, Some(j));
        if alt.objective_value > result.objective_value {
            result = alt;
        }
    }
    Ok(result)
}

fn fill_in_order<T: Real>(
    candidates: &[Candidate<T>],
    scores: &[T],
    order: &[usize],
    budget: Money,
    first: Option<usize>,
) -> AllocationResult<T> {
    let mut result = AllocationResult::empty();
    let mut remaining = budget;
    for i in first.into_iter().chain(order.iter().copied().filter(|&i| Some(i) != first)) {
        let s = scores[i];
        if !(s > T::zero()) {
            if first == Some(i) {
                continue;
            }
            break;
        }
        let c = &candidates[i];
        if c.cost <= remaining {
            remaining -= c.cost;
            result.total_cost += c.cost;
            result.objective_value += benefit(s, c.cost);
            result.funded.insert(c.segment_id);
        }
    }
    result
}

/// Largest capacity, in rescaled units, for the dense table.
pub const ORACLE_MAX_UNITS: u64 = 1_000_000;
/// Largest item count for the sparse (Pareto frontier) table.
pub const ORACLE_MAX_ITEMS: usize = 30;

/// Optimal 0/1 knapsack maximising `Σ score·cost` subject to the budget.
///
/// Costs are rescaled by their common divisor. When the rescaled capacity
/// is small a dense table is used; otherwise, for at most
/// [`ORACLE_MAX_ITEMS`] items, a dominance-pruned frontier of
/// `(cost, value)` states is propagated instead.
pub fn exact_knapsack<T: Real>(
    candidates: &[Candidate<T>],
    budget: Money,
) -> Result<AllocationResult<T>> {
    check_unique(candidates)?;
    let items: Vec<&Candidate<T>> = candidates
        .iter()
        .filter(|c| c.score > T::zero() && c.cost <= budget)
        .collect();
    if items.is_empty() {
        return Ok(AllocationResult::empty());
    }
    let total: i64 = items.iter().map(|c| c.cost.cents()).sum();
    let cap_cents = budget.cents().min(total);
    let g = items
        .iter()
        .map(|c| c.cost.cents() as u64)
        .fold(cap_cents as u64, gcd)
        .max(1);
    let units = cap_cents as u64 / g;

    let chosen: Vec<usize> = if units <= ORACLE_MAX_UNITS {
        dense_table(&items, g, units as usize)
    } else if items.len() <= ORACLE_MAX_ITEMS {
        frontier(&items, cap_cents)
    } else {
        return Err(Error::OracleScaleExceeded {
            items: items.len(),
            units,
        });
    };

    let mut result = AllocationResult::empty();
    for i in chosen {
        let c = items[i];
        result.funded.insert(c.segment_id);
        result.total_cost += c.cost;
        result.objective_value += benefit(c.score, c.cost);
    }
    Ok(result)
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn dense_table<T: Real>(items: &[&Candidate<T>], g: u64, units: usize) -> Vec<usize> {
    let n = items.len();
    let mut best = vec![T::zero(); units + 1];
    let mut take = vec![false; n * (units + 1)];
    for (i, c) in items.iter().enumerate() {
        let w = (c.cost.cents() as u64 / g) as usize;
        let v = benefit(c.score, c.cost);
        let row = &mut take[i * (units + 1)..(i + 1) * (units + 1)];
        for cap in (w..=units).rev() {
            let with = best[cap - w] + v;
            if with > best[cap] {
                best[cap] = with;
                row[cap] = true;
            }
        }
    }
    let mut cap = units;
    let mut chosen = Vec::new();
    for i in (0..n).rev() {
        if take[i * (units + 1) + cap] {
            chosen.push(i);
            cap -= (items[i].cost.cents() as u64 / g) as usize;
        }
    }
    chosen
}

fn frontier<T: Real>(items: &[&Candidate<T>], cap: i64) -> Vec<usize> {
    // (cost, value, membership bitmask), sorted by cost with strictly
    // increasing value.
    let mut states: Vec<(i64, T, u64)> = vec![(0, T::zero(), 0)];
    for (i, c) in items.iter().enumerate() {
        let w = c.cost.cents();
        let v = benefit(c.score, c.cost);
        let mut merged: Vec<(i64, T, u64)> = states
            .iter()
            .copied()
            .chain(
                states
                    .iter()
                    .filter(|s| s.0 + w <= cap)
                    .map(|s| (s.0 + w, s.1 + v, s.2 | (1u64 << i))),
            )
            .collect();
        merged.sort_by(|a, b| {
            a.0.cmp(&b.0)
                .then(b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal))
        });
        states.clear();
        for s in merged {
            if states.last().is_none_or(|l| s.1 > l.1) {
                states.push(s);
            }
        }
    }
    let best = states.last().expect("frontier keeps the empty state");
    (0..items.len()).filter(|i| best.2 & (1u64 << i) != 0).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MenuOption<T> {
    pub action: ActionKind,
    pub benefit: T,
    pub cost: Money,
}

/// All treatment options for one segment. Must include a zero-cost,
/// zero-benefit do-nothing entry.
#[derive(Debug, Clone, PartialEq)]
pub struct Menu<T> {
    pub segment_id: u64,
    pub options: Vec<MenuOption<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultichoiceResult<T> {
    /// One action per menu, in menu order.
    pub actions: Vec<ActionKind>,
    pub total_cost: Money,
    pub total_benefit: T,
}

struct Increment<T> {
    menu: usize,
    /// Index into the segment's hull.
    level: usize,
    cost: Money,
    efficiency: T,
}

/// Extra multiple-choice passes, each forced to take one high-value option.
pub const MULTICHOICE_ANCHORS: usize = 8;

/// Greedy multiple-choice knapsack.
///
/// Each menu is reduced to the upper concave frontier of its
/// `(cost, benefit)` points; the frontier steps of all segments are funded
/// in order of decreasing incremental efficiency. A step that no longer
/// fits freezes its segment. Leftover budget is then spent on the single
/// best-gain option switch that fits, repeatedly, until none remains.
/// The whole fill is repeated with each of up to [`MULTICHOICE_ANCHORS`]
/// high-benefit options fixed in advance, and the best result is kept.
pub fn multichoice_allocate<T: Real>(
    menus: &[Menu<T>],
    budget: Money,
) -> Result<MultichoiceResult<T>> {
    let mut ids = HashSet::with_capacity(menus.len());
    let mut base = Vec::with_capacity(menus.len());
    for m in menus {
        if !ids.insert(m.segment_id) {
            return Err(Error::DuplicateSegment(m.segment_id));
        }
        let idle = m.options.iter().position(|o| {
            o.action == ActionKind::DoNothing && o.cost == Money::ZERO && o.benefit == T::zero()
        });
        match idle {
            Some(i) => base.push(i),
            None => return Err(Error::MissingDoNothing(m.segment_id)),
        }
        if m.options.iter().any(|o| o.cost.cents() < 0) {
            return Err(Error::InvalidConfig(format!(
                "segment {} has a negative-cost option",
                m.segment_id
            )));
        }
    }

    // Upper concave hull per menu, as option indices starting at do-nothing.
    let hulls: Vec<Vec<usize>> = menus
        .iter()
        .zip(&base)
        .map(|(m, &idle)| concave_hull(&m.options, idle, budget))
        .collect();

    let mut increments = Vec::new();
    for (mi, hull) in hulls.iter().enumerate() {
        let opts = &menus[mi].options;
        for level in 1..hull.len() {
            let (a, b) = (&opts[hull[level - 1]], &opts[hull[level]]);
            let dc = b.cost - a.cost;
            let db = b.benefit - a.benefit;
            let efficiency = if dc == Money::ZERO {
                T::infinity()
            } else {
                db / T::lit(dc.dollars())
            };
            increments.push(Increment {
                menu: mi,
                level,
                cost: dc,
                efficiency,
            });
        }
    }
    increments.sort_by(|a, b| {
        b.efficiency
            .partial_cmp(&a.efficiency)
            .unwrap_or(Ordering::Equal)
            .then(a.cost.cmp(&b.cost))
            .then(menus[a.menu].segment_id.cmp(&menus[b.menu].segment_id))
            .then(a.level.cmp(&b.level))
    });

    let value = |chosen: &[usize]| -> T {
        menus
            .iter()
            .zip(chosen)
            .fold(T::zero(), |acc, (m, &oi)| acc + m.options[oi].benefit)
    };
    let mut chosen = fill_menus(menus, &hulls, &increments, &base, budget, None);
    let mut best_value = value(&chosen);
    // Seed alternative fills with the most valuable affordable options the
    // first fill did not pick, as in the single-candidate allocator.
    let mut anchors: Vec<(usize, usize)> = menus
        .iter()
        .enumerate()
        .flat_map(|(mi, m)| {
            m.options
                .iter()
                .enumerate()
                .filter(move |(_, o)| o.benefit > T::zero() && o.cost <= budget)
                .map(move |(oi, _)| (mi, oi))
        })
        .filter(|&(mi, oi)| chosen[mi] != oi)
        .collect();
    anchors.sort_by(|&(ma, oa), &(mb, ob)| {
        menus[mb].options[ob]
            .benefit
            .partial_cmp(&menus[ma].options[oa].benefit)
            .unwrap_or(Ordering::Equal)
            .then((ma, oa).cmp(&(mb, ob)))
    });
    for &anchor in anchors.iter().take(MULTICHOICE_ANCHORS) {
        let alt = fill_menus(menus, &hulls, &increments, &base, budget, Some(anchor));
        let v = value(&alt);
        if v > best_value {
            best_value = v;
            chosen = alt;
        }
    }

    let mut result = MultichoiceResult {
        actions: Vec::with_capacity(menus.len()),
        total_cost: Money::ZERO,
        total_benefit: T::zero(),
    };
    for (m, &oi) in menus.iter().zip(&chosen) {
        let o = &m.options[oi];
        result.actions.push(o.action);
        result.total_cost += o.cost;
        result.total_benefit += o.benefit;
    }
    debug_assert!(result.total_cost <= budget);
    Ok(result)
}

/// Hull-step greedy followed by the best-gain repair pass. `forced`, if
/// given, fixes one segment's option before anything else is funded.
fn fill_menus<T: Real>(
    menus: &[Menu<T>],
    hulls: &[Vec<usize>],
    increments: &[Increment<T>],
    base: &[usize],
    budget: Money,
    forced: Option<(usize, usize)>,
) -> Vec<usize> {
    let mut level = vec![0usize; menus.len()];
    let mut frozen = vec![false; menus.len()];
    let mut remaining = budget;
    if let Some((mi, oi)) = forced {
        remaining -= menus[mi].options[oi].cost;
        frozen[mi] = true;
    }
    for inc in increments {
        if frozen[inc.menu] || level[inc.menu] + 1 != inc.level {
            continue;
        }
        if inc.cost <= remaining {
            remaining -= inc.cost;
            level[inc.menu] = inc.level;
        } else {
            frozen[inc.menu] = true;
        }
    }

    let mut chosen: Vec<usize> = (0..menus.len()).map(|i| hulls[i][level[i]]).collect();
    if let Some((mi, oi)) = forced {
        debug_assert_eq!(chosen[mi], base[mi]);
        chosen[mi] = oi;
    }

    loop {
        let mut best: Option<(usize, usize, T)> = None;
        for (mi, m) in menus.iter().enumerate() {
            let cur = &m.options[chosen[mi]];
            for (oi, o) in m.options.iter().enumerate() {
                let gain = o.benefit - cur.benefit;
                if gain > T::zero()
                    && o.cost - cur.cost <= remaining
                    && best.as_ref().is_none_or(|b| gain > b.2)
                {
                    best = Some((mi, oi, gain));
                }
            }
        }
        match best {
            Some((mi, oi, _)) => {
                let old = &menus[mi].options[chosen[mi]];
                let new = &menus[mi].options[oi];
                remaining = remaining - new.cost + old.cost;
                chosen[mi] = oi;
            }
            None => break,
        }
    }
    chosen
}

fn concave_hull<T: Real>(options: &[MenuOption<T>], idle: usize, budget: Money) -> Vec<usize> {
    let mut pts: Vec<usize> = (0..options.len())
        .filter(|&i| i != idle && options[i].benefit > T::zero() && options[i].cost <= budget)
        .collect();
    pts.sort_by(|&a, &b| {
        options[a].cost.cmp(&options[b].cost).then(
            options[b]
                .benefit
                .partial_cmp(&options[a].benefit)
                .unwrap_or(Ordering::Equal),
        )
    });
    let mut hull = vec![idle];
    for i in pts {
        let p = &options[i];
        let last = &options[*hull.last().unwrap()];
        if p.benefit <= last.benefit {
            continue;
        }
        // Pop points that fall on or below the segment to the new point.
        while hull.len() >= 2 {
            let a = &options[hull[hull.len() - 2]];
            let b = &options[hull[hull.len() - 1]];
            let lhs = (b.benefit - a.benefit) * T::lit((p.cost - a.cost).dollars());
            let rhs = (p.benefit - a.benefit) * T::lit((b.cost - a.cost).dollars());
            if lhs <= rhs {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    hull
}
