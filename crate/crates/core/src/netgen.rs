//! Seeded synthetic networks with the class mix, cost table and budget
//! density of a large metropolitan case study. Distribution parameters are
//! synthetic defaults.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::money::Money;
use crate::network::{CostTable, NetworkState, RoadClass, Segment, PQI_MAX};

/// $200M a year over 59,856,743.2 m².
pub const DEFAULT_BUDGET_PER_M2: f64 = 200e6 / 59_856_743.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub n_segments: usize,
    /// Target area shares of arterial, collector and local roads.
    pub class_area_shares: [f64; 3],
    pub area_median: f64,
    pub area_sigma_log: f64,
    pub pqi_mean: f64,
    pub pqi_sd: f64,
    pub pqi_min: f64,
    pub pqi_max: f64,
    pub k_min: f64,
    pub k_max: f64,
    /// Years for an untreated segment to fall from 10 to 5.
    pub life_min: f64,
    pub life_max: f64,
    pub costs: CostTable,
    pub budget_per_m2_per_year: f64,
    pub horizon: usize,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            n_segments: 5000,
            class_area_shares: [0.304, 0.199, 0.497],
            area_median: 600.0,
            area_sigma_log: 0.8,
            pqi_mean: 6.5,
            pqi_sd: 1.5,
            pqi_min: 2.0,
            pqi_max: 10.0,
            k_min: 1.2,
            k_max: 2.5,
            life_min: 15.0,
            life_max: 40.0,
            costs: CostTable::default(),
            budget_per_m2_per_year: DEFAULT_BUDGET_PER_M2,
            horizon: 20,
            seed: 0,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.n_segments == 0 {
            return bad("n_segments must be at least 1");
        }
        let share_sum: f64 = self.class_area_shares.iter().sum();
        if self.class_area_shares.iter().any(|&s| s < 0.0) || (share_sum - 1.0).abs() > 1e-9 {
            return bad("class area shares must be non-negative and sum to 1");
        }
        if !(self.area_median > 0.0) || !(self.area_sigma_log >= 0.0) {
            return bad("area distribution needs a positive median and non-negative spread");
        }
        if !(self.pqi_min > 0.0 && self.pqi_min < self.pqi_max && self.pqi_max <= PQI_MAX)
            || !(self.pqi_sd > 0.0)
        {
            return bad("initial condition range must satisfy 0 < min < max <= 10 with positive sd");
        }
        if !(self.k_min > 0.0 && self.k_min <= self.k_max) {
            return bad("shape range must be positive and ordered");
        }
        if !(self.life_min > 0.0 && self.life_min <= self.life_max) {
            return bad("service life range must be positive and ordered");
        }
        if !(self.budget_per_m2_per_year > 0.0) {
            return bad("budget per m² must be positive");
        }
        if self.horizon == 0 {
            return bad("horizon must be at least one year");
        }
        self.costs.validate()
    }
}

fn uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

pub fn generate(config: &GeneratorConfig) -> Result<NetworkState> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let area_dist = LogNormal::new(config.area_median.ln(), config.area_sigma_log)
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let pqi_dist = Normal::new(config.pqi_mean, config.pqi_sd)
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;

    struct Draw {
        area: f64,
        pqi: f64,
        k: f64,
        life: f64,
    }
    let mut draws = Vec::with_capacity(config.n_segments);
    for _ in 0..config.n_segments {
        let area = area_dist.sample(&mut rng);
        let mut pqi = pqi_dist.sample(&mut rng);
        let mut tries = 0;
        while !(config.pqi_min..=config.pqi_max).contains(&pqi) {
            tries += 1;
            if tries > 10_000 {
                return Err(Error::InvalidConfig(
                    "initial condition distribution has negligible mass in range".into(),
                ));
            }
            pqi = pqi_dist.sample(&mut rng);
        }
        let k = uniform(&mut rng, config.k_min, config.k_max);
        let life = uniform(&mut rng, config.life_min, config.life_max);
        draws.push(Draw { area, pqi, k, life });
    }

    // Classes go to whichever class is furthest below its target share,
    // visiting segments in shuffled order.
    let mut order: Vec<usize> = (0..draws.len()).collect();
    order.shuffle(&mut rng);
    let mut class_of = vec![RoadClass::Local; draws.len()];
    let mut class_area = [0.0f64; 3];
    let mut total = 0.0;
    for i in order {
        total += draws[i].area;
        let c = (0..3)
            .max_by(|&a, &b| {
                let da = config.class_area_shares[a] * total - class_area[a];
                let db = config.class_area_shares[b] * total - class_area[b];
                da.partial_cmp(&db).unwrap().then(b.cmp(&a))
            })
            .unwrap();
        class_area[c] += draws[i].area;
        class_of[i] = RoadClass::ALL[c];
    }

    let half = std::f64::consts::LN_2;
    let segments = draws
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let lambda = half / d.life.powf(d.k);
            let class = class_of[i];
            Segment::new(i as u64, class, d.area, lambda, d.k, d.pqi, config.costs.get(class))
        })
        .collect::<Result<Vec<_>>>()?;
    let total_area: f64 = segments.iter().map(|s| s.area).sum();
    let budget = Money::from_dollars(config.budget_per_m2_per_year * total_area);
    NetworkState::with_constant_budget(segments, config.horizon, budget, config.costs)
}

/// Realised area share of each class, in [`RoadClass::ALL`] order.
pub fn class_area_shares(network: &NetworkState) -> [f64; 3] {
    let mut a = [0.0; 3];
    for s in &network.segments {
        a[s.class.index()] += s.area;
    }
    let t: f64 = a.iter().sum();
    a.map(|x| x / t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_budget_density() {
        assert!((DEFAULT_BUDGET_PER_M2 - 3.3413).abs() < 1e-4);
    }

    #[test]
    fn determinism() {
        let cfg = GeneratorConfig {
            n_segments: 200,
            ..Default::default()
        };
        let a = generate(&cfg).unwrap();
        assert_eq!(a, generate(&cfg).unwrap());
        let b = generate(&GeneratorConfig { seed: 1, ..cfg }).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn segments_valid_and_budget_derived() {
        let cfg = GeneratorConfig {
            n_segments: 500,
            ..Default::default()
        };
        let n = generate(&cfg).unwrap();
        for s in &n.segments {
            assert!(s.area > 0.0 && s.lambda > 0.0 && s.k > 0.0);
            assert!((2.0..=10.0).contains(&s.pqi));
            let back = s.curve().pqi_at_age(s.effective_age).unwrap();
            assert!((back - s.pqi).abs() < 1e-9);
            // Half condition at the drawn service life.
            let life = (std::f64::consts::LN_2 / s.lambda).powf(1.0 / s.k);
            assert!((15.0..=40.0).contains(&(life + 1e-9)));
        }
        let expected = Money::from_dollars(DEFAULT_BUDGET_PER_M2 * n.total_area());
        assert!(n.budgets.iter().all(|&b| b == expected));
        assert_eq!(n.horizon, 20);
    }

    #[test]
    fn invalid_config_rejected() {
        let mut cfg = GeneratorConfig::default();
        cfg.class_area_shares = [0.5, 0.5, 0.5];
        assert!(generate(&cfg).is_err());
        cfg = GeneratorConfig::default();
        cfg.n_segments = 0;
        assert!(generate(&cfg).is_err());
    }
}
