//! Small-board Go engine built around a sigmoid winrate curve.
//!
//! The evaluator predicts, for every position, the current player's expected
//! lead `alpha` and a steepness `beta`, giving the winrate for any komi with
//! a single evaluation. On top of that sit a λ-parameterised tree search,
//! multi-komi self-play with branching, and strength evaluation tools.

pub mod evaluation;
pub mod goban;
pub mod gtp;
pub mod mcts;
pub mod network;
pub mod selfplay;
pub mod sgf;
pub mod sigmoid;
pub mod training;

pub use goban::{BoardState, Color, GameRecord, GoError, Komi, Move, Point};
pub use sigmoid::{KomiContext, SigmoidParams};
