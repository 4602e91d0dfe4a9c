mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::fixtures::{check_gradient, random_record, random_state};
use sai::goban::{BoardState, Color, Komi, Symmetry};
use sai::network::{InputPlanes, Network, NetworkConfig, Trainer, TrainingRecord};

#[test]
fn gradients_match_finite_differences() {
    let cfg = NetworkConfig { board_size: 5, blocks: 2, filters: 4, value_hidden: 5, l2_coeff: 1e-3, ..NetworkConfig::default() };
    let mut net = Network::random(cfg, 11).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    // Zero biases on binary inputs put pre-activations exactly on the ReLU kink.
    for t in net.weights_mut().tensors_mut() {
        t.iter_mut().for_each(|x| *x += rng.random_range(-0.05..0.05));
    }
    let records: Vec<_> = (0..4).map(|_| random_record(&mut rng, 5)).collect();
    let sizes: Vec<usize> = net.weights().tensors().iter().map(|t| t.len()).collect();
    let coords: Vec<(usize, usize)> = sizes.iter().enumerate().flat_map(|(t, &n)| (0..n).map(move |i| (t, i))).collect();
    let kinks = check_gradient(&net, &records, &coords);
    assert!(kinks * 100 <= coords.len(), "{kinks} of {} coordinates on a kink", coords.len());
}

#[test]
fn symmetrized_forward_is_invariant() {
    let cfg = NetworkConfig { board_size: 7, blocks: 1, filters: 6, ..NetworkConfig::default() };
    let net = Network::random(cfg, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let planes = InputPlanes::encode(&random_state(&mut rng, 7, 9), 17);
    let base = net.forward_symmetrized(&planes).unwrap();
    for sym in Symmetry::all() {
        let out = net.forward_symmetrized(&planes.transformed(sym)).unwrap();
        assert!((out.alpha - base.alpha).abs() < 1e-5);
        assert!((out.beta - base.beta).abs() < 1e-5);
        for j in 0..50 {
            assert!((out.policy[sym.apply_index(j, 7)] - base.policy[j]).abs() < 1e-5);
        }
    }
}

#[test]
fn training_reduces_loss_on_fixed_batch() {
    let cfg = NetworkConfig { board_size: 5, blocks: 1, filters: 8, value_hidden: 8, ..NetworkConfig::default() };
    let mut net = Network::random(cfg, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let batch: Vec<_> = (0..8).map(|_| random_record(&mut rng, 5)).collect();
    let mut trainer = Trainer::new(net.config(), 0.9);
    let first = net.loss(&batch).unwrap().total;
    for _ in 0..200 {
        trainer.step(&mut net, &batch, 0.01).unwrap();
    }
    assert!(net.loss(&batch).unwrap().total < first);
}

#[test]
fn overfits_small_dataset() {
    let cfg = NetworkConfig { board_size: 5, blocks: 1, filters: 8, value_hidden: 8, l2_coeff: 0.0, ..NetworkConfig::default() };
    let mut net = Network::random(cfg, 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    // The entropy bound is only reachable when no two records share a position.
    let mut batch: Vec<TrainingRecord> = Vec::new();
    while batch.len() < 8 {
        let r = random_record(&mut rng, 5);
        if batch.iter().all(|b| b.planes != r.planes) {
            batch.push(r);
        }
    }
    let entropy: f64 = batch
        .iter()
        .map(|r| r.policy_target(26).iter().filter(|&&t| t > 0.0).map(|t| -t * t.ln()).sum::<f64>())
        .sum::<f64>()
        / batch.len() as f64;
    let mut trainer = Trainer::new(net.config(), 0.9);
    for _ in 0..2000 {
        trainer.step(&mut net, &batch, 0.03).unwrap();
    }
    let loss = net.loss(&batch).unwrap();
    assert!(loss.total < entropy + 0.05, "loss {loss:?} vs entropy {entropy}");
}

#[test]
fn value_perspective_uses_signed_komi() {
    // Swapping the side to move flips the sign of the komi term in the loss.
    let cfg = NetworkConfig { board_size: 5, blocks: 1, filters: 3, value_hidden: 3, l2_coeff: 0.0, ..NetworkConfig::default() };
    let net = Network::random(cfg, 8).unwrap();
    let planes = InputPlanes::encode(&BoardState::new(5).unwrap(), 17);
    let out = net.forward(&planes).unwrap();
    let komi = Komi::new(6.5).unwrap();
    for (to_move, kbar) in [(Color::Black, -6.5), (Color::White, 6.5)] {
        let record = TrainingRecord::new(planes.clone(), vec![(0, 1)], komi, to_move, 1);
        let rho = 1.0 / (1.0 + (-out.beta * (out.alpha + kbar)).exp());
        let value = net.loss(&[record]).unwrap().value;
        assert!((value - (1.0 - rho).powi(2)).abs() < 1e-12);
    }
}

