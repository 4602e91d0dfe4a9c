//! Random positions and records, and the finite-difference gradient check.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use sai::goban::{BoardState, Komi, Move};
use sai::network::{InputPlanes, Network, TrainingRecord};

pub fn random_state(rng: &mut ChaCha8Rng, size: usize, plies: usize) -> BoardState {
    let mut s = BoardState::new(size).unwrap();
    for _ in 0..plies {
        let moves = s.legal_moves().unwrap();
        let plays: Vec<Move> = moves.iter().copied().filter(|m| *m != Move::Pass).collect();
        let mv = if plays.is_empty() { Move::Pass } else { plays[rng.random_range(0..plays.len())] };
        s = s.play(mv).unwrap();
    }
    s
}

pub fn random_record(rng: &mut ChaCha8Rng, size: usize) -> TrainingRecord {
    let plies = rng.random_range(0..12);
    let s = random_state(rng, size, plies);
    let visits = (0..4).map(|_| (rng.random_range(0..=size * size) as u16, rng.random_range(1..50))).collect();
    let komi = Komi::from_floor(rng.random_range(-8..8));
    TrainingRecord::new(InputPlanes::encode(&s, 17), visits, komi, s.to_move(), rng.random_range(0..2))
}

/// Central differences on `(tensor, index)` coordinates, compared with the
/// analytic gradient. Coordinates whose one-sided differences disagree sit on
/// a ReLU kink, where the loss has no derivative; those are skipped and
/// counted.
pub fn check_gradient(net: &Network, records: &[TrainingRecord], coords: &[(usize, usize)]) -> usize {
    let (base, grad) = net.loss_and_gradient(records).unwrap();
    let analytic = grad.tensors();
    let h = 1e-5;
    let mut kinks = 0;
    for &(t, i) in coords {
        let mut plus = net.clone();
        plus.weights_mut().tensors_mut()[t][i] += h;
        let mut minus = net.clone();
        minus.weights_mut().tensors_mut()[t][i] -= h;
        let (lp, lm) = (plus.loss(records).unwrap().total, minus.loss(records).unwrap().total);
        let (forward, backward) = ((lp - base.total) / h, (base.total - lm) / h);
        if (forward - backward).abs() > 1e-3 * forward.abs().max(backward.abs()).max(1e-4) {
            kinks += 1;
            continue;
        }
        let numeric = (lp - lm) / (2.0 * h);
        let a = analytic[t][i];
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
        assert!(rel <= 1e-4, "tensor {t} index {i}: analytic {a}, numeric {numeric}, rel {rel}");
    }
    kinks
}
