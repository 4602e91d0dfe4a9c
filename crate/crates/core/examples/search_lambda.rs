//! One search at several λ values on the same position: how far the agent
//! shifts its target and which move it settles on.
//!
//!     cargo run --release --example search_lambda

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sai::mcts::{genmove, NetEvaluator, SearchConfig, SymmetryMode};
use sai::network::{Network, NetworkConfig};
use sai::{BoardState, Komi, Move};

fn main() {
    let net = Network::random(NetworkConfig { blocks: 1, filters: 16, ..NetworkConfig::default() }, 3).unwrap();
    let evaluator = NetEvaluator::new(Arc::new(net), SymmetryMode::Average);
    let mut state = BoardState::new(7).unwrap();
    for m in ["D4", "C3", "E5"] {
        state = state.play(Move::from_gtp(m, 7).unwrap()).unwrap();
    }
    let komi = Komi::new(7.5).unwrap();
    println!("{state}");
    for lambda in [0.0, 0.5, 1.0] {
        let cfg = SearchConfig { max_visits: 400, lambda, ..SearchConfig::default() };
        let (mv, stats) = genmove(&state, komi, &cfg, &evaluator, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let best = stats.children.iter().max_by_key(|c| c.visits).unwrap();
        println!(
            "lambda {lambda:.1}: move {} (visits {}, q {:.3}), xbar {:+.2}, alpha {:.2}, beta {:.3}",
            mv.to_gtp(7),
            best.visits,
            best.q.unwrap_or(f64::NAN),
            stats.xbar,
            stats.root_alpha,
            stats.root_beta
        );
    }
}
