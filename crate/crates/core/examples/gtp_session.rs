//! A scripted GTP session against the engine, as a controller would send it.
//!
//!     cargo run --release --example gtp_session

use std::io::Cursor;
use std::sync::Arc;

use sai::gtp::{gtp_loop, Engine};
use sai::mcts::{NetEvaluator, SymmetryMode};
use sai::network::{Network, NetworkConfig};

const SCRIPT: &str = "\
1 name
2 komi 9.5
3 play b D4
4 genmove w
5 sai-params
6 sai-winrate 0
7 sai-lambda 0.5
8 genmove b
9 showboard
10 final_score
11 quit
";

fn main() {
    let net = Network::random(NetworkConfig { blocks: 1, filters: 16, ..NetworkConfig::default() }, 0).unwrap();
    let mut engine = Engine::new(Arc::new(NetEvaluator::new(Arc::new(net), SymmetryMode::Average)), 7, 0).unwrap();
    engine.search.max_visits = 100;
    let mut out = Vec::new();
    gtp_loop(&mut engine, Cursor::new(SCRIPT), &mut out).unwrap();
    print!("{}", String::from_utf8(out).unwrap());
}
