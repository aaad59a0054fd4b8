use pavenet::agent::learner::{argmax, choose};
use pavenet::agent::{
    q_target, run_episode, select_candidate, AugmentedState, FeatureScales, Learner, OptimizerKind,
    TargetRule, TrainingConfig, Transition, FEATURE_DIM,
};
use pavenet::deterioration::transition;
use pavenet::netgen::{generate, GeneratorConfig};
use pavenet::nn::{DenseNet, Head};
use pavenet::{ActionKind, Error, Money, Net, NetworkState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Single-layer net whose output ignores the input: zero weights, given biases.
fn constant_net(bias: &[f64], head: Head) -> Net {
    let mut params = vec![0.0; FEATURE_DIM * bias.len()];
    params.extend_from_slice(bias);
    DenseNet::from_parts(&[FEATURE_DIM, bias.len()], head, params).unwrap()
}

fn state(seed: u64) -> AugmentedState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = [0.0; FEATURE_DIM];
    for x in &mut s {
        *x = rng.random_range(0.0..1.0);
    }
    AugmentedState(s)
}

fn transition_with(action: ActionKind, local: f64, global: f64, done: bool) -> Transition {
    Transition {
        state: state(1),
        action,
        local_reward: local,
        global_reward: global,
        next_state: state(2),
        done,
    }
}

fn sgd_config(gamma: f64, lr: f64) -> TrainingConfig {
    TrainingConfig {
        gamma,
        optimizer: OptimizerKind::Sgd,
        lr_q: lr,
        lr_v: lr,
        lr_pi: lr,
        ..Default::default()
    }
}

const UNIFORM: [f64; 3] = [0.0, 0.0, 0.0];
// exp(-800) underflows to exactly zero.
const ONLY_FIRST: [f64; 3] = [0.0, -800.0, -800.0];

#[test]
fn greedy_selection_is_argmax() {
    let q = constant_net(&[0.1, 0.9, 0.3], Head::Linear);
    let pi = constant_net(&UNIFORM, Head::Softmax);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let a = select_candidate(&q, &pi, &state(0), 0.0, &mut rng).unwrap();
    assert_eq!(a, ActionKind::Rehabilitation);
    assert_eq!(argmax(&[0.5, 0.5, 0.1]), 0);
}

#[test]
fn degenerate_policy_always_first_action() {
    let q = constant_net(&[0.0, 0.0, 9.0], Head::Linear);
    let pi = constant_net(&ONLY_FIRST, Head::Softmax);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..2000 {
        let a = select_candidate(&q, &pi, &state(0), 1.0, &mut rng).unwrap();
        assert_eq!(a, ActionKind::DoNothing);
    }
}

#[test]
fn uniform_policy_frequencies() {
    let q = constant_net(&[0.0, 0.0, 9.0], Head::Linear);
    let pi = constant_net(&UNIFORM, Head::Softmax);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut counts = [0usize; 3];
    let draws = 30_000;
    for _ in 0..draws {
        counts[select_candidate(&q, &pi, &state(0), 1.0, &mut rng).unwrap().index()] += 1;
    }
    for c in counts {
        assert!((c as f64 / draws as f64 - 1.0 / 3.0).abs() <= 0.02, "{counts:?}");
    }
}

#[test]
fn zero_epsilon_consumes_no_randomness() {
    let mut a = ChaCha8Rng::seed_from_u64(5);
    let b = a.clone();
    choose(&[0.0, 1.0, 0.0], || panic!("policy not needed"), 0.0, &mut a).unwrap();
    assert_eq!(a, b);
}

#[test]
fn max_rule_target() {
    let qn = constant_net(&[0.1, 0.4, 0.2], Head::Linear);
    let pi = constant_net(&UNIFORM, Head::Softmax);
    let t = transition_with(ActionKind::Rehabilitation, 0.05, 0.0, false);
    let y = q_target(&t, &qn, &pi, 0.9, TargetRule::Max).unwrap();
    assert!((y - 0.41).abs() < 1e-12, "{y}");
}

#[test]
fn terminal_target_is_reward() {
    let qn = constant_net(&[5.0, 7.0, 9.0], Head::Linear);
    let pi = constant_net(&UNIFORM, Head::Softmax);
    let t = transition_with(ActionKind::Reconstruction, 0.123, 0.0, true);
    for rule in [TargetRule::Max, TargetRule::ExpectedSarsa] {
        assert_eq!(q_target(&t, &qn, &pi, 0.9, rule).unwrap(), 0.123);
    }
}

#[test]
fn expected_sarsa_collapses_to_max() {
    let qn = constant_net(&[0.1, 0.4, 0.2], Head::Linear);
    let on_argmax = constant_net(&[-800.0, 0.0, -800.0], Head::Softmax);
    let t = transition_with(ActionKind::DoNothing, 0.05, 0.0, false);
    let es = q_target(&t, &qn, &on_argmax, 0.9, TargetRule::ExpectedSarsa).unwrap();
    let mx = q_target(&t, &qn, &on_argmax, 0.9, TargetRule::Max).unwrap();
    assert!((es - mx).abs() < 1e-15);
    let uniform = constant_net(&UNIFORM, Head::Softmax);
    let es_u = q_target(&t, &qn, &uniform, 0.9, TargetRule::ExpectedSarsa).unwrap();
    assert!((es_u - (0.05 + 0.9 * 0.7 / 3.0)).abs() < 1e-12);
}

fn learner(q: Net, pi: Net, v: Net, cfg: &TrainingConfig) -> Learner {
    Learner::from_nets(q, pi, v, cfg).unwrap()
}

#[test]
fn empty_batches_rejected() {
    let cfg = sgd_config(0.9, 0.1);
    let mut l = learner(
        constant_net(&UNIFORM, Head::Linear),
        constant_net(&UNIFORM, Head::Softmax),
        constant_net(&[0.0], Head::Linear),
        &cfg,
    );
    assert!(matches!(l.update_q(&[]), Err(Error::EmptyBatch)));
    assert!(matches!(l.update_value(&[]), Err(Error::EmptyBatch)));
    assert!(matches!(l.update_policy(&[]), Err(Error::EmptyBatch)));
}

#[test]
fn q_update_at_fixed_point_is_noop() {
    let cfg = sgd_config(0.9, 0.1);
    let mut l = learner(
        constant_net(&[0.5, 0.5, 0.5], Head::Linear),
        constant_net(&UNIFORM, Head::Softmax),
        constant_net(&[0.0], Head::Linear),
        &cfg,
    );
    let before = l.q.clone();
    let t = transition_with(ActionKind::Rehabilitation, 0.5, 0.0, true);
    let loss = l.update_q(&[&t]).unwrap();
    assert_eq!(loss, 0.0);
    assert_eq!(l.q, before);
}

#[test]
fn q_loss_by_hand() {
    let cfg = sgd_config(0.9, 0.1);
    let mut l = learner(
        constant_net(&[0.0, 0.2, 0.0], Head::Linear),
        constant_net(&UNIFORM, Head::Softmax),
        constant_net(&[0.0], Head::Linear),
        &cfg,
    );
    let t = transition_with(ActionKind::Rehabilitation, 0.5, 0.0, true);
    assert!((l.update_q(&[&t]).unwrap() - 0.09).abs() < 1e-12);

    // Bootstrapped: target net (0.1, 0.4, 0.2) under a uniform policy.
    l.q = constant_net(&[0.0, 0.2, 0.0], Head::Linear);
    l.q_target = constant_net(&[0.1, 0.4, 0.2], Head::Linear);
    let t = transition_with(ActionKind::Rehabilitation, 0.05, 0.0, false);
    let y: f64 = 0.05 + 0.9 * (0.1 + 0.4 + 0.2) / 3.0;
    let expected = (y - 0.2).powi(2);
    assert!((l.update_q(&[&t]).unwrap() - expected).abs() < 1e-12);
}

fn random_batch(n: usize, seed: u64) -> Vec<Transition> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| Transition {
            state: state(seed * 1000 + i as u64),
            action: ActionKind::from_index(rng.random_range(0..3)).unwrap(),
            local_reward: rng.random_range(-1.0..1.0),
            global_reward: rng.random_range(0.0..1.0),
            next_state: state(seed * 1000 + 500 + i as u64),
            done: rng.random_bool(0.3),
        })
        .collect()
}

fn random_learner(cfg: &TrainingConfig) -> Learner {
    let q = DenseNet::new(&[FEATURE_DIM, 16, 3], Head::Linear, 1).unwrap();
    let pi = DenseNet::new(&[FEATURE_DIM, 16, 3], Head::Softmax, 2).unwrap();
    let v = DenseNet::new(&[FEATURE_DIM, 16, 1], Head::Linear, 3).unwrap();
    learner(q, pi, v, cfg)
}

#[test]
fn q_and_value_losses_decrease_on_fixed_batch() {
    let cfg = TrainingConfig {
        gamma: 0.9,
        ..Default::default()
    };
    let mut l = random_learner(&cfg);
    let batch = random_batch(16, 4);
    let refs: Vec<&Transition> = batch.iter().collect();
    let q0 = l.update_q(&refs).unwrap();
    let v0 = l.update_value(&refs).unwrap();
    let (mut q1, mut v1) = (q0, v0);
    for _ in 0..100 {
        q1 = l.update_q(&refs).unwrap();
        v1 = l.update_value(&refs).unwrap();
    }
    assert!(q1 < q0, "{q0} -> {q1}");
    assert!(v1 < v0, "{v0} -> {v1}");
}

#[test]
fn value_targets_and_loss_by_hand() {
    let cfg = sgd_config(0.9, 0.1);
    let mut l = learner(
        constant_net(&UNIFORM, Head::Linear),
        constant_net(&UNIFORM, Head::Softmax),
        constant_net(&[0.3], Head::Linear),
        &cfg,
    );
    let done = transition_with(ActionKind::DoNothing, 0.0, 0.8, true);
    assert_eq!(l.value_target_for(&done).unwrap(), 0.8);
    assert!((l.update_value(&[&done]).unwrap() - 0.25).abs() < 1e-12);

    l.value = constant_net(&[0.3], Head::Linear);
    l.value_target = constant_net(&[0.3], Head::Linear);
    let mid = transition_with(ActionKind::DoNothing, 0.0, 0.5, false);
    let y: f64 = 0.5 + 0.9 * 0.3;
    assert!((l.update_value(&[&mid]).unwrap() - (0.3 - y).powi(2)).abs() < 1e-12);
}

#[test]
fn zero_advantage_leaves_policy_unchanged() {
    let cfg = sgd_config(0.9, 0.5);
    let pi = DenseNet::new(&[FEATURE_DIM, 8, 3], Head::Softmax, 9).unwrap();
    let mut l = learner(
        constant_net(&UNIFORM, Head::Linear),
        pi.clone(),
        constant_net(&[0.4], Head::Linear),
        &cfg,
    );
    let t = transition_with(ActionKind::Reconstruction, 0.0, 0.4, true);
    assert_eq!(l.advantage(&t).unwrap(), 0.0);
    l.update_policy(&[&t]).unwrap();
    assert_eq!(l.policy, pi);
}

#[test]
fn positive_advantage_raises_probability() {
    let cfg = sgd_config(0.9, 0.01);
    let mut l = learner(
        constant_net(&UNIFORM, Head::Linear),
        DenseNet::new(&[FEATURE_DIM, 8, 3], Head::Softmax, 21).unwrap(),
        constant_net(&[0.0], Head::Linear),
        &cfg,
    );
    for a in ActionKind::ALL {
        let t = transition_with(a, 0.0, 1.0, true);
        let before = l.policy.forward(t.state.as_slice()).unwrap()[a.index()];
        l.update_policy(&[&t]).unwrap();
        let after = l.policy.forward(t.state.as_slice()).unwrap()[a.index()];
        assert!(after > before, "{a:?}: {before} -> {after}");
    }
}

#[test]
fn policy_loss_by_hand() {
    let cfg = sgd_config(0.9, 0.01);
    let mut l = learner(
        constant_net(&UNIFORM, Head::Linear),
        constant_net(&[0.0, 0.0, -800.0], Head::Softmax),
        constant_net(&[0.0], Head::Linear),
        &cfg,
    );
    let t = transition_with(ActionKind::DoNothing, 0.0, 2.0, true);
    let loss = l.update_policy(&[&t]).unwrap();
    assert!((loss - 1.386_294_361_1).abs() < 1e-9, "{loss}");

    // Zero probability is floored inside the logarithm.
    let mut l = learner(
        constant_net(&UNIFORM, Head::Linear),
        constant_net(&[0.0, 0.0, -800.0], Head::Softmax),
        constant_net(&[0.0], Head::Linear),
        &cfg,
    );
    let t = transition_with(ActionKind::Reconstruction, 0.0, 1.0, true);
    let loss = l.update_policy(&[&t]).unwrap();
    assert!((loss - 1e-12f64.ln().abs()).abs() < 1e-9 && loss.is_finite());
}

fn small_generated(n: usize, h: usize, seed: u64) -> NetworkState {
    generate(&GeneratorConfig {
        n_segments: n,
        horizon: h,
        seed,
        ..Default::default()
    })
    .unwrap()
}

fn random_nets(seed: u64) -> (Net, Net) {
    (
        DenseNet::new(&[FEATURE_DIM, 16, 3], Head::Linear, seed).unwrap(),
        DenseNet::new(&[FEATURE_DIM, 16, 3], Head::Softmax, seed + 1).unwrap(),
    )
}

#[test]
fn zero_budget_episode_is_pure_deterioration() {
    let base = small_generated(40, 6, 1);
    let net = base.with_budgets(vec![Money::ZERO; 6]).unwrap();
    let (q, pi) = random_nets(2);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (traj, transitions, metrics) =
        run_episode(&net, &q, &pi, FeatureScales::of(&net), 0.7, &mut rng).unwrap();
    assert!(transitions.iter().all(|t| t.action == ActionKind::DoNothing));
    assert!(metrics.annual.iter().all(|c| c.total() == Money::ZERO));
    let mut segs = net.segments.clone();
    for year in 1..=6 {
        segs = segs
            .iter()
            .map(|s| transition(s, ActionKind::DoNothing))
            .collect();
        for (a, b) in segs.iter().zip(&traj.states[year].segments) {
            assert!((a.pqi - b.pqi).abs() < 1e-12);
        }
    }
}

#[test]
fn episodes_are_reproducible() {
    let net = small_generated(60, 5, 2);
    let (q, pi) = random_nets(7);
    for eps in [0.0, 0.4] {
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            run_episode(&net, &q, &pi, FeatureScales::of(&net), eps, &mut rng).unwrap()
        };
        let (t1, x1, m1) = run(3);
        let (t2, x2, m2) = run(3);
        assert_eq!(t1, t2);
        assert_eq!(x1, x2);
        assert_eq!(m1, m2);
    }
}

#[test]
fn episodes_respect_budgets_and_mark_terminal_year() {
    let h = 5;
    for seed in 0..6 {
        let net = small_generated(80, h, seed);
        let (q, pi) = random_nets(seed + 100);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (traj, transitions, metrics) =
            run_episode(&net, &q, &pi, FeatureScales::of(&net), 0.5, &mut rng).unwrap();
        assert_eq!(metrics.budget_violations(), 0);
        for (c, b) in metrics.annual.iter().zip(&net.budgets) {
            assert!(c.total() <= *b);
        }
        assert_eq!(transitions.len(), 80 * h);
        for (i, t) in transitions.iter().enumerate() {
            assert_eq!(t.done, i / 80 == h - 1);
        }
        let ret: f64 = traj.states[1..].iter().map(|s| s.los().unwrap()).sum();
        assert!((ret - metrics.episode_return).abs() < 1e-9);
    }
}
