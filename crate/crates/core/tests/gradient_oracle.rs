mod common;

use common::finite_difference_gradient;
use custvec_core::network::{
    backward, batch_gradients, forward, init_params, loss, ActivationKind, LayerSpec, NetworkParams,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ACTIVATIONS: [ActivationKind; 4] = [
    ActivationKind::Sigmoid,
    ActivationKind::Tanh,
    ActivationKind::Relu,
    ActivationKind::LeakyRelu { alpha: 0.01 },
];

fn random_case(seed: u64, act: ActivationKind) -> (LayerSpec, NetworkParams, Vec<f64>, u8) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = LayerSpec::new(rng.random_range(1..=8))
        .with_hidden(rng.random_range(1..=5), rng.random_range(1..=6))
        .with_activation(act);
    let mut params = init_params(&spec, seed).unwrap();
    for b in params.bias1.iter_mut().chain(params.bias2.iter_mut()) {
        *b = rng.random_range(-0.5..0.5);
    }
    params.bias3 = rng.random_range(-0.5..0.5);
    let x = (0..spec.input_dim).map(|_| rng.random_range(-2.0..2.0)).collect();
    (spec, params, x, rng.random_range(0..=1))
}

#[test]
fn analytic_matches_central_differences() {
    let mut checked = 0usize;
    for act in ACTIVATIONS {
        for seed in 0..100 {
            let (spec, params, x, y) = random_case(seed, act);
            let trace = forward(&params, &spec, &x).unwrap();
            let analytic = backward(&trace, &params, &spec, &x, y).unwrap();
            let numeric = finite_difference_gradient(&params, &spec, &x, y, 1e-6);
            for (block, (a, n)) in analytic.slices().iter().zip(&numeric).enumerate() {
                for (i, (&a, n)) in a.iter().zip(n).enumerate() {
                    let Some(n) = *n else { continue };
                    let tol = 1e-8 + 1e-5 * a.abs().max(n.abs());
                    assert!(
                        (a - n).abs() <= tol,
                        "{} seed {seed} block {block}[{i}]: analytic {a} numeric {n}",
                        act.name()
                    );
                    checked += 1;
                }
            }
        }
    }
    assert!(checked > 10_000, "only {checked} coordinates checked");
}

#[test]
fn batch_gradient_is_the_mean_of_example_gradients() {
    let (spec, params, _, _) = random_case(3, ActivationKind::Tanh);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let xs: Vec<Vec<f64>> = (0..7)
        .map(|_| (0..spec.input_dim).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let ys: Vec<u8> = (0..7).map(|i| (i % 2) as u8).collect();
    let refs: Vec<&[f64]> = xs.iter().map(|x| x.as_slice()).collect();
    let (batch, mean_loss) = batch_gradients(&params, &spec, &refs, &ys).unwrap();

    let probs: Vec<f64> = xs.iter().map(|x| forward(&params, &spec, x).unwrap().w3).collect();
    assert!((mean_loss - loss(&probs, &ys).unwrap()).abs() < 1e-12);
    for (block, g) in batch.slices().iter().enumerate() {
        for i in 0..g.len() {
            let mean = xs
                .iter()
                .zip(&ys)
                .map(|(x, &y)| {
                    let t = forward(&params, &spec, x).unwrap();
                    backward(&t, &params, &spec, x, y).unwrap().slices()[block][i]
                })
                .sum::<f64>()
                / 7.0;
            assert!((g[i] - mean).abs() < 1e-12);
        }
    }
}

#[test]
fn small_step_against_the_gradient_lowers_the_loss() {
    for act in ACTIVATIONS {
        for seed in 0..20 {
            let (spec, mut params, x, y) = random_case(seed, act);
            let trace = forward(&params, &spec, &x).unwrap();
            let before = loss(&[trace.w3], &[y]).unwrap();
            let g = backward(&trace, &params, &spec, &x, y).unwrap();
            let norm: f64 = g.slices().iter().flat_map(|s| s.iter()).map(|v| v * v).sum();
            if norm < 1e-12 {
                continue;
            }
            for (p, d) in params.slices_mut().into_iter().zip(g.slices()) {
                for (w, dw) in p.iter_mut().zip(d) {
                    *w -= 1e-4 * dw;
                }
            }
            let after = loss(&[forward(&params, &spec, &x).unwrap().w3], &[y]).unwrap();
            assert!(after < before, "{} seed {seed}: {before} -> {after}", act.name());
        }
    }
}
