use ropnet::optim::{AdamConfig, AdamState, PlateauState};
use ropnet::{Error, Tensor};

fn scalar_state() -> (AdamState, Tensor) {
    let mut adam = AdamState::new(AdamConfig::default());
    adam.initialize(&[vec![1]]);
    (adam, Tensor::scalar(1.0))
}

fn step_square(adam: &mut AdamState, theta: &mut Tensor) {
    let grad = theta.scale(2.0);
    adam.step(&mut [theta], &[&grad]).unwrap();
}

/// Reference recurrence for one scalar parameter.
struct ScalarAdam {
    m: f64,
    v: f64,
    i: i32,
}

impl ScalarAdam {
    fn step(&mut self, theta: f64, g: f64) -> f64 {
        let (alpha, b1, b2, eta) = (0.001, 0.9, 0.999, 1e-7);
        self.i += 1;
        self.m = b1 * self.m + (1.0 - b1) * g;
        self.v = b2 * self.v + (1.0 - b2) * g * g;
        let m_hat = self.m / (1.0 - b1.powi(self.i));
        let v_hat = self.v / (1.0 - b2.powi(self.i));
        theta - alpha * m_hat / (v_hat.sqrt() + eta)
    }
}

#[test]
fn one_step_matches_hand_trace() {
    let (mut adam, mut theta) = scalar_state();
    step_square(&mut adam, &mut theta);
    let expected = 1.0 - 0.001 * 2.0 / (2.0 + 1e-7);
    assert!((theta.data()[0] - expected).abs() < 1e-12, "{}", theta.data()[0]);
    assert_eq!(adam.step_count(), 1);
    assert!((adam.first_moments()[0].data()[0] - 0.2).abs() < 1e-15);
    assert!((adam.second_moments()[0].data()[0] - 0.004).abs() < 1e-15);
}

#[test]
fn trajectory_matches_scalar_reference() {
    let (mut adam, mut theta) = scalar_state();
    let mut reference = ScalarAdam { m: 0.0, v: 0.0, i: 0 };
    let mut t = 1.0;
    for i in 0..2000 {
        t = reference.step(t, 2.0 * t);
        step_square(&mut adam, &mut theta);
        assert!((theta.data()[0] - t).abs() < 1e-12, "step {i}: {} vs {t}", theta.data()[0]);
    }
}

#[test]
fn converges_on_a_square_within_ten_thousand_steps() {
    let (mut adam, mut theta) = scalar_state();
    let hit = (1..=10_000).find(|_| {
        step_square(&mut adam, &mut theta);
        theta.data()[0].abs() < 1e-3
    });
    assert!(hit.is_some(), "|theta| = {}", theta.data()[0].abs());
}

#[test]
fn zero_gradient_leaves_parameters() {
    let mut adam = AdamState::new(AdamConfig::default());
    adam.initialize(&[vec![2, 3]]);
    let mut p = Tensor::full(&[2, 3], 0.7);
    let g = Tensor::zeros(&[2, 3]);
    for _ in 0..5 {
        adam.step(&mut [&mut p], &[&g]).unwrap();
    }
    assert_eq!(p, Tensor::full(&[2, 3], 0.7));
}

#[test]
fn moments_stay_sane_under_constant_gradient() {
    let mut adam = AdamState::new(AdamConfig::default());
    adam.initialize(&[vec![3]]);
    let mut p = Tensor::zeros(&[3]);
    let g = Tensor::from_vec(&[3], vec![-1.5, 0.25, 3.0]).unwrap();
    for _ in 0..200 {
        adam.step(&mut [&mut p], &[&g]).unwrap();
        assert!(adam.second_moments()[0].data().iter().all(|&v| v >= 0.0));
    }
    let i = adam.step_count() as i32;
    let correction = 1.0 - 0.9f64.powi(i);
    for (m, g) in adam.first_moments()[0].data().iter().zip(g.data()) {
        assert!((m / correction - g).abs() < 1e-9);
    }
}

#[test]
fn stepping_requires_initialization_and_matching_shapes() {
    let mut adam = AdamState::new(AdamConfig::default());
    let mut p = Tensor::zeros(&[2]);
    let g = Tensor::zeros(&[2]);
    assert!(matches!(adam.step(&mut [&mut p], &[&g]), Err(Error::Usage(_))));
    adam.initialize(&[vec![2]]);
    assert!(adam.step(&mut [&mut p], &[&Tensor::zeros(&[3])]).is_err());
}

fn run_trace(losses: &[f64]) -> (AdamState, PlateauState) {
    let mut adam = AdamState::new(AdamConfig::default());
    let mut plateau = PlateauState::default();
    for &l in losses {
        plateau.update(l, &mut adam);
    }
    (adam, plateau)
}

#[test]
fn plateau_reduces_after_five_stalls() {
    let (adam, plateau) = run_trace(&[1.0, 0.9, 0.91, 0.92, 0.93, 0.94, 0.95]);
    assert_eq!(adam.alpha, 0.001 * 0.8);
    assert_eq!(plateau.reductions(), 1);
    let (adam, _) = run_trace(&[1.0, 0.9, 0.91, 0.92, 0.93, 0.94]);
    assert_eq!(adam.alpha, 0.001);
}

#[test]
fn plateau_ten_stalled_epochs_reduce_twice() {
    // A baseline epoch followed by ten epochs that never improve on it.
    let mut losses = vec![0.5];
    losses.extend([0.5; 10]);
    let (adam, plateau) = run_trace(&losses);
    assert_eq!(plateau.reductions(), 2);
    assert_eq!(adam.alpha, 0.001 * 0.8 * 0.8);
}

#[test]
fn plateau_first_epoch_always_improves() {
    // Ten identical losses: the first sets the best, nine stall.
    let (adam, plateau) = run_trace(&[0.5; 10]);
    assert_eq!(plateau.reductions(), 1);
    assert_eq!(adam.alpha, 0.001 * 0.8);
}

#[test]
fn plateau_never_fires_on_strict_improvement() {
    let losses: Vec<f64> = (0..50).map(|i| 1.0 / (i + 1) as f64).collect();
    let (adam, plateau) = run_trace(&losses);
    assert_eq!(plateau.reductions(), 0);
    assert_eq!(adam.alpha, 0.001);
}

#[test]
fn learning_rate_is_a_power_of_the_factor() {
    let mut adam = AdamState::new(AdamConfig::default());
    let mut plateau = PlateauState::default();
    let mut seed = 17u64;
    for _ in 0..300 {
        seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        plateau.update((seed >> 40) as f64, &mut adam);
        let expected = (0..plateau.reductions()).fold(0.001, |a, _| a * 0.8);
        assert_eq!(adam.alpha, expected);
    }
}

#[test]
fn plateau_rejects_bad_settings() {
    assert!(PlateauState::new(1.0, 5).is_err());
    assert!(PlateauState::new(0.0, 5).is_err());
    assert!(PlateauState::new(0.8, 0).is_err());
}
