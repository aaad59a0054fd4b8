//! Comparison strategies: worst-first reconstruction, the myopic
//! progressive allocation, and the learned-first-year hybrid.

use std::cmp::Ordering;

use crate::agent::TrainedModel;
use crate::allocator::{multichoice_allocate, Menu, MenuOption};
use crate::deterioration::transition;
use crate::error::Result;
use crate::network::{ActionKind, NetworkState, Trajectory};
use crate::plan::MaintenancePlan;

/// Runs `decide` once per remaining year and records the result.
pub fn rollout(
    network: &NetworkState,
    strategy: &str,
    mut decide: impl FnMut(&NetworkState) -> Result<Vec<ActionKind>>,
) -> Result<(MaintenancePlan, Trajectory)> {
    network.validate()?;
    let mut plan = MaintenancePlan::empty(strategy, network.len());
    let mut traj = Trajectory::new(network.clone());
    while !traj.last().is_terminal() {
        let actions = decide(traj.last())?;
        let (next, cost) = traj.last().step(&actions)?;
        plan.push_year(&actions, cost);
        traj.push(next);
    }
    Ok((plan, traj))
}

/// Reconstructs segments in increasing condition order (ties by id) while
/// the year's budget allows; a segment that does not fit is skipped.
pub fn worst_first_year(state: &NetworkState) -> Vec<ActionKind> {
    let mut order: Vec<usize> = (0..state.len()).collect();
    order.sort_by(|&a, &b| {
        let (sa, sb) = (&state.segments[a], &state.segments[b]);
        sa.pqi
            .partial_cmp(&sb.pqi)
            .unwrap_or(Ordering::Equal)
            .then(sa.id.cmp(&sb.id))
    });
    let mut remaining = state.current_budget();
    let mut actions = vec![ActionKind::DoNothing; state.len()];
    for i in order {
        let c = state.segments[i].cost(ActionKind::Reconstruction);
        if c <= remaining {
            remaining -= c;
            actions[i] = ActionKind::Reconstruction;
        }
    }
    actions
}

pub fn worst_first_plan(network: &NetworkState) -> Result<(MaintenancePlan, Trajectory)> {
    rollout(network, "worst_first", |s| Ok(worst_first_year(s)))
}

/// Per-segment menus whose benefit is the area-weighted next-year
/// condition gain over doing nothing.
pub fn next_year_menus(state: &NetworkState) -> Vec<Menu<f64>> {
    state
        .segments
        .iter()
        .map(|s| {
            let idle = transition(s, ActionKind::DoNothing).pqi;
            Menu {
                segment_id: s.id,
                options: ActionKind::ALL
                    .iter()
                    .map(|&a| MenuOption {
                        action: a,
                        benefit: if a == ActionKind::DoNothing {
                            0.0
                        } else {
                            s.area * (transition(s, a).pqi - idle)
                        },
                        cost: s.cost(a),
                    })
                    .collect(),
            }
        })
        .collect()
}

pub fn progressive_year(state: &NetworkState) -> Result<Vec<ActionKind>> {
    Ok(multichoice_allocate(&next_year_menus(state), state.current_budget())?.actions)
}

/// Each year maximises next-year weighted condition under that year's
/// budget, with no look-ahead.
pub fn progressive_lp_plan(network: &NetworkState) -> Result<(MaintenancePlan, Trajectory)> {
    rollout(network, "progressive_lp", progressive_year)
}

/// First year from the learned greedy plan, remaining years progressive.
pub fn hybrid_first_year_plan(
    model: &TrainedModel,
    network: &NetworkState,
) -> Result<(MaintenancePlan, Trajectory)> {
    let (learned, _) = model.greedy_plan(network)?;
    let first = network.year;
    rollout(network, "hybrid", |s| {
        if s.year == first {
            Ok(learned.year_actions(0))
        } else {
            progressive_year(s)
        }
    })
}
