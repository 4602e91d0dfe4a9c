//! Exhaustive win/loss solver for tiny boards, shared by the search tests.

#![allow(dead_code)]

pub mod fixtures;
pub mod margin;

use std::collections::HashMap;

use sai::goban::{BoardState, Color, Komi, Move};

/// Small solved positions: (layout, side to move, komi). Each has exactly one
/// winning move for the side to move; the first four win by capturing.
pub const PUZZLES: [(&[&str], Color, f64); 8] = [
    (&["XXO", "O.O", "OX."], Color::Black, -0.5),
    (&["XXX", "O..", "XXO"], Color::White, 0.5),
    (&["X.O", "X.X", ".OX"], Color::White, -3.5),
    (&["OX.", "O.O", "XXX"], Color::Black, -3.5),
    (&[".X.", "O.O", "XX."], Color::Black, -2.5),
    (&[".O.", "X.X", "OO."], Color::White, -1.5),
    (&[".O.", "X.X", ".O."], Color::White, 0.5),
    (&["XX.", "O.O", "XX."], Color::Black, 3.5),
];


/// Order-independent digest of the set of positions already seen, so that
/// two move orders reaching the same superko constraints share a memo entry.
fn history_digest(state: &BoardState) -> u64 {
    state.position_history().iter().fold(0u64, |acc, &h| {
        let mut z = h.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        acc.wrapping_add(z ^ (z >> 31))
    })
}

/// Search gave up after visiting its node budget.
#[derive(Debug)]
pub struct TooLarge;

pub struct Solver {
    pub komi: Komi,
    memo: HashMap<(u64, u64, u8, u8), bool>,
    pub nodes: u64,
    pub budget: u64,
}

impl Solver {
    pub fn new(komi: Komi, budget: u64) -> Solver {
        Solver { komi, memo: HashMap::new(), nodes: 0, budget }
    }

    /// Whether the player to move wins with perfect play.
    pub fn wins(&mut self, state: &BoardState) -> Result<bool, TooLarge> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(TooLarge);
        }
        if state.is_over() {
            return Ok(state.winner(self.komi).unwrap() == state.to_move());
        }
        let key = (state.hash(), history_digest(state), state.consecutive_passes(), state.to_move() as u8);
        if let Some(&v) = self.memo.get(&key) {
            return Ok(v);
        }
        let mut result = false;
        let mut successors = state.legal_successors().unwrap();
        // Pass first: ending or threatening to end the game settles most
        // lines immediately.
        successors.rotate_right(1);
        for (_, next) in successors {
            if !self.wins(&next)? {
                result = true;
                break;
            }
        }
        self.memo.insert(key, result);
        Ok(result)
    }

    /// Legal moves after which the mover wins.
    pub fn winning_moves(&mut self, state: &BoardState) -> Result<Vec<Move>, TooLarge> {
        let mut out = Vec::new();
        for (mv, next) in state.legal_successors().unwrap() {
            if !self.wins(&next)? {
                out.push(mv);
            }
        }
        Ok(out)
    }
}
