//! Weibull condition curves and the one-year segment transition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{ActionKind, Segment, PQI_MAX};
use crate::scalar::Real;

/// `pqi(τ) = pqi_max · exp(−λ·τ^k)` where τ is years since the last
/// major intervention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeibullCurve<T> {
    pub lambda: T,
    pub k: T,
    pub pqi_max: T,
}

impl<T: Real> WeibullCurve<T> {
    pub fn new(lambda: T, k: T) -> Result<Self> {
        Self::with_max(lambda, k, T::lit(PQI_MAX))
    }

    pub fn with_max(lambda: T, k: T, pqi_max: T) -> Result<Self> {
        if !(lambda > T::zero()) || !(k > T::zero()) || !(pqi_max > T::zero()) {
            return Err(Error::InvalidConfig(format!(
                "Weibull parameters must be positive (lambda={lambda}, k={k}, max={pqi_max})"
            )));
        }
        Ok(Self { lambda, k, pqi_max })
    }

    pub fn pqi_at_age(&self, tau: T) -> Result<T> {
        if tau < T::zero() || tau.is_nan() {
            return Err(Error::NegativeAge(tau.to_f64_lossless()));
        }
        Ok(self.pqi_max * (-self.lambda * tau.powf(self.k)).exp())
    }

    /// Inverse of [`pqi_at_age`](Self::pqi_at_age).
    pub fn effective_age(&self, pqi: T) -> Result<T> {
        if !(pqi > T::zero()) {
            return Err(Error::BelowSupport(pqi.to_f64_lossless()));
        }
        if pqi > self.pqi_max {
            return Err(Error::AboveMaximum {
                pqi: pqi.to_f64_lossless(),
                max: self.pqi_max.to_f64_lossless(),
            });
        }
        if pqi == self.pqi_max {
            return Ok(T::zero());
        }
        let x = -(pqi / self.pqi_max).ln() / self.lambda;
        Ok(x.powf(self.k.recip()))
    }
}

/// Rehabilitation lifts the condition by `delta · pqi / cap`, never above
/// `cap`. A segment already above the cap keeps its condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RehabEffect<T> {
    pub delta: T,
    pub cap: T,
}

impl<T: Real> Default for RehabEffect<T> {
    fn default() -> Self {
        Self {
            delta: T::lit(2.5),
            cap: T::lit(9.5),
        }
    }
}

impl<T: Real> RehabEffect<T> {
    /// Condition immediately after the treatment, before the year's wear.
    pub fn apply(&self, pqi: T) -> T {
        let lifted = (pqi + self.delta * pqi / self.cap).min(self.cap);
        lifted.max(pqi)
    }
}

/// One-year transition of a segment under `action`: the intervention is
/// applied and then a full year of deterioration follows.
pub fn transition(segment: &Segment, action: ActionKind) -> Segment {
    transition_with(segment, action, &RehabEffect::default())
}

pub fn transition_with(segment: &Segment, action: ActionKind, rehab: &RehabEffect<f64>) -> Segment {
    let curve = segment.curve();
    let start_age = match action {
        ActionKind::DoNothing => segment.effective_age,
        ActionKind::Reconstruction => 0.0,
        ActionKind::Rehabilitation => {
            let lifted = rehab.apply(segment.pqi);
            if lifted > segment.pqi {
                // lifted > 0 and ≤ cap ≤ max, so the inverse is defined.
                curve.effective_age(lifted).unwrap_or(segment.effective_age)
            } else {
                segment.effective_age
            }
        }
    };
    let age = start_age + 1.0;
    let pqi = curve
        .pqi_at_age(age)
        .expect("age is non-negative by construction");
    Segment {
        effective_age: age,
        pqi,
        ..segment.clone()
    }
}
