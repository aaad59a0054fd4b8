//! Network-level performance measures, written over `(weight, condition)`
//! pairs so they are independent of the segment representation.

use crate::error::{Error, Result};
use crate::scalar::{weighted_mean, Real};

/// Area-weighted mean condition.
pub fn level_of_service<T: Real>(pairs: impl IntoIterator<Item = (T, T)>) -> Result<T> {
    weighted_mean(pairs).ok_or(Error::EmptyNetwork)
}

/// Mean of the post-decision LoS values. `series[0]` is the state before
/// the first decision; entries `1..=horizon` are averaged.
pub fn horizon_average<T: Real>(series: &[T], horizon: usize) -> Result<T> {
    check_len(series.len(), horizon)?;
    if horizon == 0 {
        return Err(Error::InvalidConfig("horizon must be at least one year".into()));
    }
    let sum: T = series[1..=horizon].iter().copied().sum();
    Ok(sum / T::from_usize(horizon).unwrap())
}

/// Mean of the post-decision values `1..=horizon` with weights
/// `γ^(t−1)`. At `γ = 1` this is [`horizon_average`], bit for bit.
pub fn discounted_average<T: Real>(series: &[T], horizon: usize, gamma: T) -> Result<T> {
    check_len(series.len(), horizon)?;
    if horizon == 0 {
        return Err(Error::InvalidConfig("horizon must be at least one year".into()));
    }
    let (mut w, mut sum, mut norm) = (T::one(), T::zero(), T::zero());
    for &x in &series[1..=horizon] {
        sum += w * x;
        norm += w;
        w *= gamma;
    }
    Ok(sum / norm)
}

/// LoS at the end of the horizon.
pub fn end_of_horizon<T: Real>(series: &[T], horizon: usize) -> Result<T> {
    check_len(series.len(), horizon)?;
    Ok(series[horizon])
}

fn check_len(got: usize, horizon: usize) -> Result<()> {
    if got < horizon + 1 {
        Err(Error::TrajectoryTooShort {
            needed: horizon + 1,
            got,
        })
    } else {
        Ok(())
    }
}

/// Area-weighted fraction of the network in each of `bins` equal-width
/// condition bands over `[0, max]`. The top band is closed on the right, so
/// a condition equal to `max` lands in the last bin.
pub fn condition_histogram<T: Real>(
    pairs: impl IntoIterator<Item = (T, T)>,
    bins: usize,
    max: T,
) -> Result<Vec<T>> {
    if bins == 0 {
        return Err(Error::InvalidConfig("histogram needs at least one bin".into()));
    }
    let mut hist = vec![T::zero(); bins];
    let mut total = T::zero();
    let nb = T::from_usize(bins).unwrap();
    for (w, x) in pairs {
        let idx = (x * nb / max).floor().to_usize().unwrap_or(0).min(bins - 1);
        hist[idx] += w;
        total += w;
    }
    if total == T::zero() {
        return Err(Error::EmptyNetwork);
    }
    for h in &mut hist {
        *h /= total;
    }
    Ok(hist)
}
