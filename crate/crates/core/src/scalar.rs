//! Scalar abstraction shared by the numerical modules.
//!
//! Everything that is pure arithmetic (the deterioration curve, the dense
//! approximators, weighted metrics, allocation scores) is written against
//! [`Real`] so it can run in `f32` or `f64`. The planning layer fixes the
//! scalar to `f64`; see the aliases at the crate root.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Width in bytes of the in-memory representation, recorded in weight files.
    const WIDTH: u8;

    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    fn to_f64_lossless(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }

    fn to_le_vec(self) -> Vec<u8>;

    fn from_le_slice(bytes: &[u8]) -> Self;
}

impl Real for f32 {
    const WIDTH: u8 = 4;

    fn to_le_vec(self) -> Vec<u8> {
        self.to_le_bytes().to_vec()
    }

    fn from_le_slice(bytes: &[u8]) -> Self {
        let mut b = [0u8; 4];
        b.copy_from_slice(bytes);
        f32::from_le_bytes(b)
    }
}

impl Real for f64 {
    const WIDTH: u8 = 8;

    fn to_le_vec(self) -> Vec<u8> {
        self.to_le_bytes().to_vec()
    }

    fn from_le_slice(bytes: &[u8]) -> Self {
        let mut b = [0u8; 8];
        b.copy_from_slice(bytes);
        f64::from_le_bytes(b)
    }
}

/// Weighted arithmetic mean `Σ wᵢ·xᵢ / Σ wᵢ`; `None` when there are no
/// pairs or the weights sum to zero.
pub fn weighted_mean<T: Real>(pairs: impl IntoIterator<Item = (T, T)>) -> Option<T> {
    let mut num = T::zero();
    let mut den = T::zero();
    let mut seen = false;
    for (w, x) in pairs {
        num += w * x;
        den += w;
        seen = true;
    }
    if !seen || den == T::zero() {
        None
    } else {
        Some(num / den)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weighted_mean_matches_hand_value() {
        let m = weighted_mean([(1.0f64, 10.0), (3.0, 6.0)]).unwrap();
        assert_eq!(m, 7.0);
        let m32 = weighted_mean([(1.0f32, 10.0), (3.0, 6.0)]).unwrap();
        assert_eq!(m32, 7.0);
    }

    #[test]
    fn weighted_mean_empty() {
        assert!(weighted_mean::<f64>([]).is_none());
    }

    #[test]
    fn le_bytes_round_trip() {
        let x = 0.1f64 + 0.2;
        assert_eq!(f64::from_le_slice(&x.to_le_vec()).to_bits(), x.to_bits());
        let y = 1.0e-30f32;
        assert_eq!(f32::from_le_slice(&y.to_le_vec()).to_bits(), y.to_bits());
    }
}
