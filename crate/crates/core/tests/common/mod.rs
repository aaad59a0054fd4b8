//! Oracles shared by the numerics suite and the acceptance harness.

#![allow(dead_code)]

use pavenet::allocator::{exact_knapsack, greedy_knapsack, multichoice_allocate, MenuOption};
use pavenet::nn::{DenseNet, Head};
use pavenet::{ActionKind, Candidate, Menu, Money};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Straight-line forward pass written independently of the library:
/// weights are stored input-major, `w[i * fan_out + o]`, followed by biases.
pub fn oracle_forward(net: &DenseNet<f64>, x: &[f64]) -> Vec<f64> {
    let dims = net.dims();
    let p = net.params();
    let mut act = x.to_vec();
    let mut off = 0;
    for l in 0..dims.len() - 1 {
        let (fi, fo) = (dims[l], dims[l + 1]);
        let mut y = vec![0.0; fo];
        for (o, yo) in y.iter_mut().enumerate() {
            let mut s = p[off + fi * fo + o];
            for (i, &xi) in act.iter().enumerate() {
                s += xi * p[off + i * fo + o];
            }
            *yo = if l + 2 < dims.len() { s.max(0.0) } else { s };
        }
        off += fi * fo + fo;
        act = y;
    }
    if net.head() == Head::Softmax {
        let m = act.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = act.iter().map(|v| (v - m).exp()).sum();
        act = act.iter().map(|v| (v - m).exp() / z).collect();
    }
    act
}

/// Largest relative error between the analytic gradient of
/// `⟨g, f(x)⟩` and a central finite difference, over every parameter and
/// several random inputs.
pub fn gradient_check(dims: &[usize], head: Head, seed: u64, inputs: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let net = DenseNet::<f64>::new(dims, head, seed).unwrap();
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for _ in 0..inputs {
        let x: Vec<f64> = (0..dims[0]).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g: Vec<f64> = (0..*dims.last().unwrap())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let analytic = net.backward(&x, &g).unwrap().0;
        let loss = |n: &DenseNet<f64>| -> f64 {
            n.forward(&x).unwrap().iter().zip(&g).map(|(a, b)| a * b).sum()
        };
        let mut probe = net.clone();
        for (j, &a) in analytic.iter().enumerate() {
            let orig = probe.params()[j];
            probe.params_mut()[j] = orig + h;
            let up = loss(&probe);
            probe.params_mut()[j] = orig - h;
            let down = loss(&probe);
            probe.params_mut()[j] = orig;
            let numeric = (up - down) / (2.0 * h);
            let err = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-6);
            worst = worst.max(err);
        }
    }
    worst
}

#[derive(Debug, Default)]
pub struct KnapsackStats {
    pub instances: usize,
    /// Instances where greedy reached at least 95% of the optimum.
    pub near_optimal: usize,
    pub infeasible: usize,
    pub non_maximal: usize,
}

/// Seeded single-candidate instances, `n ≤ max_n`, comparing zero-noise
/// greedy against the exact oracle.
pub fn knapsack_stats(instances: usize, max_n: usize, seed: u64) -> KnapsackStats {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = KnapsackStats {
        instances,
        ..Default::default()
    };
    for _ in 0..instances {
        let n = rng.random_range(1..=max_n);
        let cands: Vec<Candidate> = (0..n)
            .map(|i| Candidate {
                segment_id: i as u64,
                action: ActionKind::Rehabilitation,
                score: rng.random_range(0.05..2.0),
                cost: Money::from_cents(rng.random_range(1_000..500_000)),
            })
            .collect();
        let total: i64 = cands.iter().map(|c| c.cost.cents()).sum();
        let budget = Money::from_cents((total as f64 * rng.random_range(0.1..0.7)) as i64);
        let greedy = greedy_knapsack(&cands, budget, 0.0, 0).unwrap();
        let exact = exact_knapsack(&cands, budget).unwrap();
        if greedy.total_cost > budget {
            stats.infeasible += 1;
        }
        let left = budget - greedy.total_cost;
        if cands
            .iter()
            .any(|c| !greedy.is_funded(c.segment_id) && c.cost <= left)
        {
            stats.non_maximal += 1;
        }
        if greedy.objective_value >= 0.95 * exact.objective_value - 1e-9 {
            stats.near_optimal += 1;
        }
    }
    stats
}

#[derive(Debug, Default)]
pub struct MultichoiceStats {
    pub instances: usize,
    /// Instances where greedy was within 5% of the exhaustive optimum.
    pub within_tolerance: usize,
    pub infeasible: usize,
}

fn exhaustive(menus: &[Menu], budget: Money) -> f64 {
    let n = menus.len();
    let mut best = 0.0f64;
    let combos = 3usize.pow(n as u32);
    for code in 0..combos {
        let (mut c, mut cost, mut value) = (code, Money::ZERO, 0.0);
        for m in menus {
            let o = &m.options[c % 3];
            c /= 3;
            cost += o.cost;
            value += o.benefit;
        }
        if cost <= budget {
            best = best.max(value);
        }
    }
    best
}

/// Seeded three-action instances with `n ≤ max_n` segments, checked
/// against exhaustive enumeration.
pub fn multichoice_stats(instances: usize, max_n: usize, seed: u64) -> MultichoiceStats {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = MultichoiceStats {
        instances,
        ..Default::default()
    };
    for _ in 0..instances {
        let n = rng.random_range(1..=max_n);
        let menus: Vec<Menu> = (0..n)
            .map(|i| {
                let area = rng.random_range(100.0..3000.0);
                let rehab = Money::from_dollars(area * rng.random_range(20.0..40.0));
                let recon = Money::from_dollars(area * rng.random_range(80.0..140.0));
                let pqi: f64 = rng.random_range(2.0..9.0);
                Menu {
                    segment_id: i as u64,
                    options: vec![
                        MenuOption {
                            action: ActionKind::DoNothing,
                            benefit: 0.0,
                            cost: Money::ZERO,
                        },
                        MenuOption {
                            action: ActionKind::Rehabilitation,
                            benefit: area * (2.5 * pqi / 9.5).min(9.5 - pqi).max(0.0),
                            cost: rehab,
                        },
                        MenuOption {
                            action: ActionKind::Reconstruction,
                            benefit: area * (10.0 - pqi),
                            cost: recon,
                        },
                    ],
                }
            })
            .collect();
        let total: i64 = menus.iter().map(|m| m.options[2].cost.cents()).sum();
        let budget = Money::from_cents((total as f64 * rng.random_range(0.05..0.6)) as i64);
        let got = multichoice_allocate(&menus, budget).unwrap();
        if got.total_cost > budget {
            stats.infeasible += 1;
        }
        let opt = exhaustive(&menus, budget);
        if got.total_benefit >= 0.95 * opt - 1e-9 {
            stats.within_tolerance += 1;
        }
    }
    stats
}
