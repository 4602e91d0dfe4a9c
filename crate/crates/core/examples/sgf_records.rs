//! Game records: SGF round trip of a game and of a branch game that starts
//! from a position of its parent.
//!
//!     cargo run --example sgf_records

use sai::goban::BranchParent;
use sai::sgf::{parse_collection, serialize_collection};
use sai::{GameRecord, Komi, Move};

fn main() {
    let moves: Vec<Move> = ["D4", "C3", "E3", "C5", "pass", "pass"].iter().map(|m| Move::from_gtp(m, 7).unwrap()).collect();
    let mut game = GameRecord::new(1, 7, Komi::new(9.5).unwrap());
    game.moves = moves.clone();
    game.result = Some(game.final_state().unwrap().winner(game.komi).unwrap());

    let mut branch = GameRecord::new(2, 7, Komi::new(3.5).unwrap());
    branch.setup = moves[..3].to_vec();
    branch.branch_parent = Some(BranchParent { game_id: 1, move_index: 3 });
    branch.moves = ["B5", "pass", "pass"].iter().map(|m| Move::from_gtp(m, 7).unwrap()).collect();
    branch.result = Some(branch.final_state().unwrap().winner(branch.komi).unwrap());

    let text = serialize_collection([&game, &branch]);
    println!("{text}");
    let parsed = parse_collection(&text).unwrap();
    assert_eq!(parsed, vec![game, branch]);
    println!("parsed {} games back unchanged", parsed.len());
}
