//! A round robin between three agents, maximum-likelihood Elo from the
//! results, and a check for rock-paper-scissors cycles.
//!
//!     cargo run --release --example match_elo

use sai::evaluation::{mle_elo, round_robin, three_cycles, MatchConfig};
use sai::mcts::RandomEvaluator;
use sai::Komi;

fn main() {
    let komi = Komi::new(7.5).unwrap();
    // Random evaluators with different seeds are different (weak) players.
    let entrants: Vec<(String, RandomEvaluator)> = (0..3).map(|i| (format!("random-{i}"), RandomEvaluator::new(komi, i))).collect();
    let cfg = MatchConfig::new(7, 10, komi, 32, 0);
    let results = round_robin(&entrants, &cfg).unwrap();
    for r in &results {
        println!("{r}");
    }
    match mle_elo(&results, 400.0) {
        Ok(scores) => {
            for (name, s) in scores {
                println!("{name:>10}  {s:+7.1}");
            }
        }
        Err(e) => println!("no finite ratings: {e}"),
    }
    for [a, b, c] in three_cycles(&results) {
        println!("cycle: {a} > {b} > {c} > {a}");
    }
}
