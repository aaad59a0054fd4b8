//! Cost-normalised local rewards, the shared global reward, and treatment
//! cost accounting.

use crate::deterioration::transition;
use crate::error::{Error, Result};
use crate::money::Money;
use crate::network::{ActionKind, NetworkState, Segment, PQI_MAX};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardRecord {
    pub local: f64,
    pub global: f64,
    pub cost: Money,
}

/// Condition gained over doing nothing, per unit cost of the treatment.
/// Both outcomes use the full one-year transition, so the segment area
/// cancels out.
pub fn local_reward(segment: &Segment, action: ActionKind) -> Result<f64> {
    if action == ActionKind::DoNothing {
        return Ok(0.0);
    }
    let unit = segment.costs.for_action(action);
    local_reward_from(
        transition(segment, action).pqi,
        transition(segment, ActionKind::DoNothing).pqi,
        unit,
        action,
    )
}

/// The reward formula on precomputed transition outcomes.
pub fn local_reward_from(
    treated_pqi: f64,
    idle_pqi: f64,
    unit_cost: f64,
    action: ActionKind,
) -> Result<f64> {
    if action == ActionKind::DoNothing {
        return Ok(0.0);
    }
    if !(unit_cost > 0.0) {
        return Err(Error::NonPositiveCost {
            action: action.name(),
            cost: unit_cost,
        });
    }
    Ok((treated_pqi - idle_pqi) / unit_cost)
}

/// Normalised network LoS after the year's transitions.
pub fn global_reward(next_state: &NetworkState) -> Result<f64> {
    Ok(next_state.los()? / PQI_MAX)
}

/// Area times the class unit cost, rounded to the cent.
pub fn action_cost(segment: &Segment, action: ActionKind) -> Money {
    match action {
        ActionKind::DoNothing => Money::ZERO,
        a => Money::from_dollars(segment.area * segment.costs.for_action(a)),
    }
}

pub fn reward_record(
    segment: &Segment,
    action: ActionKind,
    next_state: &NetworkState,
) -> Result<RewardRecord> {
    Ok(RewardRecord {
        local: local_reward(segment, action)?,
        global: global_reward(next_state)?,
        cost: action_cost(segment, action),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::tests::{local, small_network};
    use crate::network::{CostTable, RoadClass, UnitCosts};

    #[test]
    fn do_nothing_reward_is_zero() {
        assert_eq!(local_reward(&local(0, 10.0, 4.0), ActionKind::DoNothing).unwrap(), 0.0);
    }

    #[test]
    fn hand_evaluated_reward() {
        let r = local_reward_from(7.0, 5.5, 20.0, ActionKind::Rehabilitation).unwrap();
        assert!((r - 0.075).abs() < 1e-15);
        assert!(local_reward_from(7.0, 5.5, 0.0, ActionKind::Rehabilitation).is_err());
        assert!(local_reward_from(7.0, 5.5, -3.0, ActionKind::Reconstruction).is_err());
    }

    #[test]
    fn reward_ignores_area() {
        let a = local_reward(&local(0, 10.0, 5.0), ActionKind::Rehabilitation).unwrap();
        let b = local_reward(&local(0, 9000.0, 5.0), ActionKind::Rehabilitation).unwrap();
        assert_eq!(a, b);
        assert!(a > 0.0);
    }

    #[test]
    fn published_costs() {
        let table = CostTable::default();
        let art = Segment::new(0, RoadClass::Arterial, 1000.0, 0.01, 2.0, 5.0, table.arterial)
            .unwrap();
        assert_eq!(action_cost(&art, ActionKind::Reconstruction), Money::from_dollars(200_000.0));
        let loc = Segment::new(1, RoadClass::Local, 500.0, 0.01, 2.0, 5.0, table.local).unwrap();
        assert_eq!(action_cost(&loc, ActionKind::Rehabilitation), Money::from_dollars(10_000.0));
        assert_eq!(action_cost(&loc, ActionKind::DoNothing), Money::ZERO);
    }

    #[test]
    fn global_reward_is_normalised_los() {
        let n = small_network(Money::ZERO);
        assert!((global_reward(&n).unwrap() - 0.7).abs() < 1e-15);
        let mut rev = n.clone();
        rev.segments.reverse();
        assert_eq!(global_reward(&rev).unwrap(), global_reward(&n).unwrap());
    }

    #[test]
    fn reward_scales_inverse_with_cost() {
        let s = local(0, 10.0, 5.0);
        let mut cheap = s.clone();
        cheap.costs = UnitCosts::new(10.0, 150.0).unwrap();
        let full = local_reward(&s, ActionKind::Rehabilitation).unwrap();
        let half = local_reward(&cheap, ActionKind::Rehabilitation).unwrap();
        assert!((half - 2.0 * full).abs() < 1e-15);
    }
}
