//! One small self-play generation with branching, written to disk in the
//! usual `generations/<id>/` layout.
//!
//!     cargo run --release --example selfplay_generation [out-dir]

use std::sync::Arc;

use sai::mcts::{NetEvaluator, SearchConfig, SymmetryMode};
use sai::network::{read_records, Network, NetworkConfig};
use sai::selfplay::{run_generation, KomiSource, SelfplayConfig};
use sai::Komi;

fn main() {
    let out = std::env::args().nth(1).map(std::path::PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("sai-selfplay"));
    let net = Network::random(NetworkConfig { blocks: 1, filters: 16, ..NetworkConfig::default() }, 0).unwrap();
    let evaluator = NetEvaluator::new(Arc::new(net), SymmetryMode::Hashed);
    let cfg = SelfplayConfig {
        games_per_generation: 8,
        // Branch more often than usual so that a small run shows some.
        c_branch: 0.05,
        komi_source: KomiSource::Fixed(Komi::new(9.5).unwrap()),
        search: SearchConfig { max_visits: 50, ..SearchConfig::selfplay() },
        rng_seed: 1,
        ..SelfplayConfig::default()
    };
    let generation = run_generation(&evaluator, &cfg, &out, 0).unwrap();
    print!("{}", generation.report.to_text());
    for g in generation.games.iter().map(|g| &g.record).filter(|g| g.branch_parent.is_some()).take(3) {
        let parent = g.branch_parent.as_ref().unwrap();
        println!("branch {} from game {} at move {}, komi {}", g.id, parent.game_id, parent.move_index, g.komi);
    }
    let dir = out.join("generations/0000");
    let records = read_records(&dir.join("data.records")).unwrap();
    println!("{} training records in {}", records.len(), dir.display());
    assert_eq!(records.len(), generation.records.len());
}
