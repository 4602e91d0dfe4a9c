//! A few generations of the full loop — self-play, then training on the
//! most recent positions — on a tiny net, printing how the empty-board
//! curve moves.
//!
//!     cargo run --release --example training_pipeline [generations] [data-dir]

use sai::mcts::SearchConfig;
use sai::network::{InputPlanes, Network, NetworkConfig};
use sai::selfplay::SelfplayConfig;
use sai::training::{run_pipeline, PipelineConfig, TrainingConfig};
use sai::BoardState;

fn empty_board(net: &Network) -> (f64, f64) {
    let out = net.forward_symmetrized(&InputPlanes::encode(&BoardState::new(7).unwrap(), 17)).unwrap();
    (out.alpha, out.beta)
}

fn main() {
    let mut args = std::env::args().skip(1);
    let generations = args.next().and_then(|a| a.parse().ok()).unwrap_or(2);
    let dir = args.next().map(std::path::PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("sai-pipeline"));
    let _ = std::fs::remove_dir_all(&dir);
    let cfg = PipelineConfig {
        net: NetworkConfig { blocks: 1, filters: 16, ..NetworkConfig::default() },
        selfplay: SelfplayConfig {
            games_per_generation: 12,
            search: SearchConfig { max_visits: 50, ..SearchConfig::selfplay() },
            ..SelfplayConfig::default()
        },
        training: TrainingConfig { steps: 200, ..TrainingConfig::default() },
        generations,
        ..PipelineConfig::default()
    };
    let net = run_pipeline(&cfg, &dir, |s| {
        println!(
            "generation {}: {} games + {} branches, mean length {:.1}, loss {:.3} (policy {:.3}, value {:.3})",
            s.generation, s.report.games, s.report.branches, s.report.mean_game_length, s.final_loss.total, s.final_loss.policy, s.final_loss.value
        );
    })
    .unwrap();
    let (alpha, beta) = empty_board(&net);
    println!("empty board after training: alpha {alpha:.2}, beta {beta:.4}");
    println!("data in {}", dir.display());
}
