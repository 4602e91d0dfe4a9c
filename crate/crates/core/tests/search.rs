mod common;

use common::margin::{lead, margin_choice_rate, CaptureAreaEvaluator, MARGIN_KOMI, MARGIN_LAYOUT};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sai::goban::{BoardState, Color, Komi, Move};
use sai::mcts::{Evaluator, FpuRule, Search, SearchConfig, UniformEvaluator};

#[test]
fn search_finds_the_unique_winning_move() {
    for (layout, to_move, komi) in common::PUZZLES {
        let state = BoardState::from_layout(layout, to_move).unwrap();
        let komi = Komi::new(komi).unwrap();
        let mut solver = common::Solver::new(komi, 5_000_000);
        let wins = solver.winning_moves(&state).expect("solvable");
        assert_eq!(wins.len(), 1, "{layout:?}");

        let cfg = SearchConfig { max_visits: 10_000, ..SearchConfig::default() };
        let e = UniformEvaluator::neutral();
        let mut search = Search::new(state, komi, &cfg, &e, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        search.run().unwrap();
        search.check_invariants().unwrap();
        let stats = search.stats();
        let best = stats.children.iter().max_by_key(|c| c.visits).unwrap();
        assert_eq!(best.mv, wins[0], "{layout:?}: {stats:?}");
    }
}

#[test]
fn finished_lines_count_exactly_for_each_side() {
    // White just passed; Black owns the board, so passing back ends the game
    // with a Black win and that child must be worth exactly 1 to Black.
    let state = BoardState::from_layout(&["X.X", ".X.", "X.X"], Color::White).unwrap().play(Move::Pass).unwrap();
    let komi = Komi::new(0.5).unwrap();
    let e = UniformEvaluator::neutral();
    for fpu_rule in [FpuRule::Agz, FpuRule::Lz] {
        let cfg = SearchConfig { max_visits: 500, fpu_rule, ..SearchConfig::default() };
        let mut search = Search::new(state.clone(), komi, &cfg, &e, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        search.run().unwrap();
        search.check_invariants().unwrap();
        let stats = search.stats();
        let pass = stats.children.iter().find(|c| c.mv == Move::Pass).unwrap();
        assert!(pass.visits > 0);
        assert_eq!(pass.q, Some(1.0));
        for child in &stats.children {
            let q = child.q.unwrap_or(0.5);
            assert!((0.0..=1.0).contains(&q));
        }
    }
}

#[test]
fn margin_layout_has_two_winning_captures() {
    let state = BoardState::from_layout(&MARGIN_LAYOUT, Color::Black).unwrap();
    let komi = Komi::new(MARGIN_KOMI).unwrap();
    let e = CaptureAreaEvaluator { beta: 3.0 };
    let mut winning = Vec::new();
    for (mv, next) in state.legal_successors().unwrap() {
        let white = e.evaluate(&next).unwrap().params;
        let kbar = sai::sigmoid::KomiContext::new(komi, Color::White).signed_komi();
        if white.rho(0.0, kbar) < 0.5 {
            winning.push((mv, lead(&next, Color::Black) - komi.value()));
        }
    }
    assert_eq!(winning, vec![(Move::play(0, 4), 3.5), (Move::play(4, 1), 1.5)]);
}

#[test]
fn lambda_prefers_larger_margins() {
    let rates: Vec<f64> = [0.0, 0.5, 1.0].iter().map(|&l| margin_choice_rate(l, 200).0).collect();
    println!("{rates:?}");
    assert!(rates[0] <= rates[1] && rates[1] <= rates[2]);
}

