use serde::{Deserialize, Serialize};

use super::{DenseNet, Gradients};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Algorithm {
    Sgd,
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl Algorithm {
    pub fn adam() -> Self {
        Algorithm::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState<T> {
    pub algorithm: Algorithm,
    pub learning_rate: T,
    m: Vec<T>,
    v: Vec<T>,
    pub step: u64,
}

impl<T: Real> OptimizerState<T> {
    pub fn new(algorithm: Algorithm, learning_rate: T, num_params: usize) -> Result<Self> {
        if !(learning_rate > T::zero()) {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be positive, got {learning_rate}"
            )));
        }
        let moments = match algorithm {
            Algorithm::Sgd => 0,
            Algorithm::Adam { .. } => num_params,
        };
        Ok(Self {
            algorithm,
            learning_rate,
            m: vec![T::zero(); moments],
            v: vec![T::zero(); moments],
            step: 0,
        })
    }

    pub fn sgd(learning_rate: T, num_params: usize) -> Result<Self> {
        Self::new(Algorithm::Sgd, learning_rate, num_params)
    }

    pub fn adam(learning_rate: T, num_params: usize) -> Result<Self> {
        Self::new(Algorithm::adam(), learning_rate, num_params)
    }

    /// One descent step `θ ← θ − α·update(∇)`.
    pub fn apply(&mut self, net: &mut DenseNet<T>, grads: &Gradients<T>) -> Result<()> {
        let n = net.num_params();
        if grads.0.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: grads.0.len(),
            });
        }
        self.step += 1;
        let lr = self.learning_rate;
        match self.algorithm {
            Algorithm::Sgd => {
                for (p, &g) in net.params_mut().iter_mut().zip(&grads.0) {
                    *p -= lr * g;
                }
            }
            Algorithm::Adam { beta1, beta2, eps } => {
                if self.m.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: self.m.len(),
                        got: n,
                    });
                }
                let (b1, b2, eps) = (T::lit(beta1), T::lit(beta2), T::lit(eps));
                let t = self.step as i32;
                let c1 = T::one() - b1.powi(t);
                let c2 = T::one() - b2.powi(t);
                let one = T::one();
                for (((p, &g), m), v) in net
                    .params_mut()
                    .iter_mut()
                    .zip(&grads.0)
                    .zip(self.m.iter_mut())
                    .zip(self.v.iter_mut())
                {
                    *m = b1 * *m + (one - b1) * g;
                    *v = b2 * *v + (one - b2) * g * g;
                    let mh = *m / c1;
                    let vh = *v / c2;
                    *p -= lr * mh / (vh.sqrt() + eps);
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Head;

    #[test]
    fn sgd_one_step() {
        let mut net = DenseNet::<f64>::from_parts(&[1, 1], Head::Linear, vec![1.0, 0.0]).unwrap();
        let mut opt = OptimizerState::sgd(0.1, net.num_params()).unwrap();
        opt.apply(&mut net, &Gradients(vec![2.0, 0.0])).unwrap();
        assert!((net.params()[0] - 0.8).abs() < 1e-15);
        assert_eq!(net.params()[1], 0.0);
        assert_eq!(opt.step, 1);
        let before = net.clone();
        opt.apply(&mut net, &Gradients(vec![0.0, 0.0])).unwrap();
        assert_eq!(net, before);
    }

    #[test]
    fn adam_first_step_is_sign_scaled() {
        let mut net =
            DenseNet::<f64>::from_parts(&[1, 1], Head::Linear, vec![1.0, -1.0]).unwrap();
        let mut opt = OptimizerState::adam(0.01, 2).unwrap();
        opt.apply(&mut net, &Gradients(vec![3.0, -0.5])).unwrap();
        // m̂ = g and v̂ = g² at t = 1, so Δ = −lr·g/(|g|+eps).
        let d0 = 0.01 * 3.0 / (3.0 + 1e-8);
        let d1 = 0.01 * -0.5 / (0.5 + 1e-8);
        assert!((net.params()[0] - (1.0 - d0)).abs() < 1e-15);
        assert!((net.params()[1] - (-1.0 - d1)).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_learning_rate() {
        assert!(OptimizerState::<f64>::sgd(0.0, 1).is_err());
        assert!(OptimizerState::<f64>::adam(-1.0, 1).is_err());
    }
}
