use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sppb_forecast::learners::DenseNet;

/// Near cbrt(machine epsilon), which balances the O(h^2) truncation error of
/// central differences against round-off in the loss, O(eps / h).
const STEP: f64 = 6e-6;

/// Max relative error between the analytic gradient and central differences.
/// Below `FLOOR` the comparison is absolute: a parameter whose true gradient
/// is zero still sees round-off of a few ulps of the loss divided by
/// `2 * STEP`, around 1e-9.
const FLOOR: f64 = 1e-4;

fn worst_relative_error(net: &DenseNet<f64>, x: &Array2<f64>, y: &[f64]) -> f64 {
    let (_, grad) = net.loss_and_gradient(x, y);
    let mut worst = 0.0f64;
    for i in 0..net.params.len() {
        let mut plus = net.clone();
        plus.params[i] += STEP;
        let mut minus = net.clone();
        minus.params[i] -= STEP;
        let numeric = (plus.batch_loss(x, y) - minus.batch_loss(x, y)) / (2.0 * STEP);
        let denom = grad[i].abs().max(numeric.abs()).max(FLOOR);
        worst = worst.max((grad[i] - numeric).abs() / denom);
    }
    worst
}

fn perturbed_net(n_inputs: usize, sizes: &[usize], seed: u64) -> DenseNet<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = DenseNet::init(n_inputs, sizes, 7.0, &mut rng);
    // Move gamma/beta and biases off their initial values so their gradients
    // are exercised away from the symmetric starting point.
    for p in &mut net.params {
        *p += rng.random_range(-0.3..0.3);
    }
    net
}

#[test]
fn three_layer_net_on_five_sample_batches() {
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let x = Array2::from_shape_fn((5, 6), |_| rng.random::<f64>());
        let y: Vec<f64> = (0..5).map(|_| rng.random_range(0.0..12.0)).collect();
        let net = perturbed_net(6, &[8, 16, 8], seed);
        let err = worst_relative_error(&net, &x, &y);
        assert!(err < 1e-4, "seed {seed}: relative error {err:e}");
    }
}

#[test]
fn single_layer_and_no_hidden_layer() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let x = Array2::from_shape_fn((5, 3), |_| rng.random::<f64>());
    let y = [1.0, 4.0, 9.0, 11.0, 6.0];
    for sizes in [vec![], vec![4]] {
        let net = perturbed_net(3, &sizes, 1);
        assert!(worst_relative_error(&net, &x, &y) < 1e-4);
    }
}
