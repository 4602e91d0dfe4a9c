//! A position with two winning captures of different margins, and an
//! evaluator that sees one capture ahead.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sai::goban::{BoardState, Color, Komi, Move};
use sai::mcts::{genmove, Evaluation, Evaluator, SearchConfig, SearchError};
use sai::sigmoid::SigmoidParams;

/// Uniform policy; `alpha` is the area lead of the side to move after its
/// best immediate capture (or the current lead if that is better).
pub struct CaptureAreaEvaluator {
    pub beta: f64,
}

pub fn lead(state: &BoardState, player: Color) -> f64 {
    let score = f64::from(state.area_score());
    if player == Color::Black { score } else { -score }
}

impl Evaluator for CaptureAreaEvaluator {
    fn evaluate(&self, state: &BoardState) -> Result<Evaluation, SearchError> {
        let me = state.to_move();
        let stones = |s: &BoardState| s.stones().iter().filter(|c| c.is_some()).count();
        let mut alpha = lead(state, me);
        for (_, next) in state.legal_successors()? {
            if stones(&next) <= stones(state) {
                alpha = alpha.max(lead(&next, me));
            }
        }
        let n = state.size() * state.size() + 1;
        Ok(Evaluation { policy: vec![1.0 / n as f64; n], params: SigmoidParams::new(alpha, self.beta).unwrap() })
    }
}

/// Black owns the board except for two White groups in atari: capturing the
/// single stone at the bottom wins by 1.5, the pair at the top by 3.5, and
/// every other move leaves Black behind. White has no legal move but pass.
pub const MARGIN_LAYOUT: [&str; 5] = [".XOO.", "XXXXX", "X.X.X", "XXXXX", "O.X.X"];
pub const MARGIN_KOMI: f64 = 18.5;

pub fn margin_choice_rate(lambda: f64, calls: u64) -> (f64, Move, Move) {
    let state = BoardState::from_layout(&MARGIN_LAYOUT, Color::Black).unwrap();
    let small = Move::play(4, 1);
    let large = Move::play(0, 4);
    let komi = Komi::new(MARGIN_KOMI).unwrap();
    let e = CaptureAreaEvaluator { beta: 3.0 };
    let cfg = SearchConfig {
        max_visits: 100,
        lambda,
        root_noise: true,
        gibbs_temp: 1.0,
        random_temp_moves: u32::MAX,
        ..SearchConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(lambda.to_bits());
    let mut large_count = 0;
    for _ in 0..calls {
        let (mv, _) = genmove(&state, komi, &cfg, &e, &mut rng).unwrap();
        if mv == large {
            large_count += 1;
        }
    }
    (large_count as f64 / calls as f64, small, large)
}
