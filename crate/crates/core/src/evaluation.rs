//! Strength measurement: matches between evaluators, maximum-likelihood Elo
//! over round robins and panel evaluation by principal components.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::goban::{BoardState, Color, GameRecord, Komi, Move};
use crate::mcts::{genmove, Evaluator, SearchConfig, SearchError};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error("result graph is disconnected: {0} cannot be compared with {1}")]
    Disconnected(String, String),
    #[error("no finite maximum-likelihood scores: some group of nets won or lost every game against the rest")]
    NotConverged,
    #[error("malformed match result line: {0}")]
    Parse(String),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, EvalError> {
    Err(EvalError::Invalid(msg.into()))
}

/// Probability that a player rated `s1` beats one rated `s2`:
/// `1 / (1 + exp((s2 - s1) / c))`.
pub fn elo_win_prob(s1: f64, s2: f64, c: f64) -> Result<f64, EvalError> {
    if !(c > 0.0) {
        return invalid(format!("Elo scale must be positive, got {c}"));
    }
    Ok(1.0 / (1.0 + ((s2 - s1) / c).exp()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchConfig {
    pub board_size: usize,
    pub games: usize,
    pub komi: Komi,
    pub search: SearchConfig,
    /// Plies past which both sides pass.
    pub max_moves: usize,
    pub seed: u64,
}

impl MatchConfig {
    /// No noise; the first two plies are sampled in proportion to visits so
    /// that repeated games differ, everything after is argmax.
    pub fn new(board_size: usize, games: usize, komi: Komi, visits: u32, seed: u64) -> MatchConfig {
        MatchConfig {
            board_size,
            games,
            komi,
            search: SearchConfig {
                max_visits: visits,
                root_noise: false,
                gibbs_temp: 1.0,
                random_temp_moves: 2,
                ..SearchConfig::default()
            },
            max_moves: 3 * board_size * board_size,
            seed,
        }
    }
}

/// Plays one game. The search configuration is shared by both sides.
pub fn play_game<B: Evaluator + ?Sized, W: Evaluator + ?Sized>(
    black: &B,
    white: &W,
    cfg: &MatchConfig,
    game_index: u64,
) -> Result<GameRecord, EvalError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(game_index);
    let mut record = GameRecord::new(game_index, cfg.board_size, cfg.komi);
    let mut state = BoardState::new(cfg.board_size).map_err(SearchError::from)?;
    while !state.is_over() {
        let mv = if record.moves.len() >= cfg.max_moves {
            Move::Pass
        } else if state.to_move() == Color::Black {
            genmove(&state, cfg.komi, &cfg.search, black, &mut rng)?.0
        } else {
            genmove(&state, cfg.komi, &cfg.search, white, &mut rng)?.0
        };
        state = state.play(mv).map_err(SearchError::from)?;
        record.moves.push(mv);
    }
    record.result = Some(state.winner(cfg.komi).map_err(SearchError::from)?);
    Ok(record)
}

/// `cfg.games` games with fixed colours, in parallel; deterministic given
/// the seed.
pub fn play_games<B: Evaluator + ?Sized, W: Evaluator + ?Sized>(
    black: &B,
    white: &W,
    cfg: &MatchConfig,
) -> Result<Vec<GameRecord>, EvalError> {
    (0..cfg.games as u64).into_par_iter().map(|i| play_game(black, white, cfg, i)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchResult {
    pub net_a: String,
    pub net_b: String,
    pub games: usize,
    pub a_wins_as_white: usize,
    pub a_wins_as_black: usize,
    pub komi: Komi,
    /// False when an engine failure cut the match short; `games` then counts
    /// the games actually finished.
    pub complete: bool,
}

impl MatchResult {
    pub fn a_wins(&self) -> usize {
        self.a_wins_as_white + self.a_wins_as_black
    }

    /// Fraction of `a`'s games as White that it won.
    pub fn a_white_rate(&self) -> f64 {
        self.a_wins_as_white as f64 / (self.games / 2).max(1) as f64
    }
}

impl fmt::Display for MatchResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.net_a,
            self.net_b,
            self.games,
            self.a_wins_as_white,
            self.a_wins_as_black,
            self.komi,
            if self.complete { "complete" } else { "partial" }
        )
    }
}

impl FromStr for MatchResult {
    type Err = EvalError;

    /// Parses the tab-separated line written by `Display`.
    fn from_str(line: &str) -> Result<MatchResult, EvalError> {
        let bad = || EvalError::Parse(line.to_string());
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 7 {
            return Err(bad());
        }
        let num = |s: &str| s.parse::<usize>().map_err(|_| bad());
        let r = MatchResult {
            net_a: f[0].to_string(),
            net_b: f[1].to_string(),
            games: num(f[2])?,
            a_wins_as_white: num(f[3])?,
            a_wins_as_black: num(f[4])?,
            komi: f[5].parse().map_err(|_| bad())?,
            complete: match f[6] {
                "complete" => true,
                "partial" => false,
                _ => return Err(bad()),
            },
        };
        if r.a_wins() > r.games {
            return Err(bad());
        }
        Ok(r)
    }
}

/// An even number of games, `a` taking White in the even-numbered ones.
pub fn run_match<A: Evaluator + ?Sized, B: Evaluator + ?Sized>(
    a: (&str, &A),
    b: (&str, &B),
    cfg: &MatchConfig,
) -> Result<MatchResult, EvalError> {
    if cfg.games == 0 || cfg.games % 2 != 0 {
        return invalid(format!("a match needs a positive even number of games, got {}", cfg.games));
    }
    let outcomes: Vec<Result<(bool, Color), EvalError>> = (0..cfg.games as u64)
        .into_par_iter()
        .map(|i| {
            let a_white = i % 2 == 0;
            let game = if a_white { play_game(b.1, a.1, cfg, i)? } else { play_game(a.1, b.1, cfg, i)? };
            Ok((a_white, game.result.expect("finished game")))
        })
        .collect();
    let mut result = MatchResult {
        net_a: a.0.to_string(),
        net_b: b.0.to_string(),
        games: 0,
        a_wins_as_white: 0,
        a_wins_as_black: 0,
        komi: cfg.komi,
        complete: true,
    };
    for outcome in outcomes {
        match outcome {
            Ok((a_white, winner)) => {
                result.games += 1;
                match (a_white, winner) {
                    (true, Color::White) => result.a_wins_as_white += 1,
                    (false, Color::Black) => result.a_wins_as_black += 1,
                    _ => {}
                }
            }
            Err(e) => {
                log::error!("match {} vs {} aborted: {e}", a.0, b.0);
                result.complete = false;
                break;
            }
        }
    }
    Ok(result)
}

/// Maximum-likelihood scores under [`elo_win_prob`], the first net (in
/// name order) anchored at 0. Newton iterations until the gradient norm is
/// below 1e-8.
pub fn mle_elo(results: &[MatchResult], c: f64) -> Result<BTreeMap<String, f64>, EvalError> {
    elo_win_prob(0.0, 0.0, c)?;
    let names: BTreeSet<&str> = results.iter().flat_map(|r| [r.net_a.as_str(), r.net_b.as_str()]).collect();
    let names: Vec<&str> = names.into_iter().collect();
    if names.len() < 2 {
        return invalid("need results between at least two nets");
    }
    let idx = |s: &str| names.binary_search(&s).expect("known name");

    // wins[i][j]: games i won against j
    let n = names.len();
    let mut wins = vec![vec![0.0; n]; n];
    for r in results {
        if r.net_a == r.net_b {
            continue;
        }
        let (i, j) = (idx(&r.net_a), idx(&r.net_b));
        wins[i][j] += r.a_wins() as f64;
        wins[j][i] += (r.games - r.a_wins()) as f64;
    }

    let reach = |edge: &dyn Fn(usize, usize) -> bool| {
        let mut reached = vec![false; n];
        let mut stack = vec![0];
        reached[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                if !reached[j] && edge(i, j) {
                    reached[j] = true;
                    stack.push(j);
                }
            }
        }
        reached
    };
    if let Some(j) = reach(&|a, b| wins[a][b] + wins[b][a] > 0.0).iter().position(|r| !r) {
        return Err(EvalError::Disconnected(names[0].to_string(), names[j].to_string()));
    }
    // A finite maximum exists only if every net beat, and was beaten by,
    // some chain of others.
    let all = |r: Vec<bool>| r.into_iter().all(|x| x);
    if !all(reach(&|a, b| wins[a][b] > 0.0)) || !all(reach(&|a, b| wins[b][a] > 0.0)) {
        return Err(EvalError::NotConverged);
    }

    let mut s = vec![0.0; n];
    for _ in 0..200 {
        let mut grad = DVector::<f64>::zeros(n - 1);
        let mut hess = DMatrix::<f64>::zeros(n - 1, n - 1);
        for i in 0..n {
            for j in i + 1..n {
                let games = wins[i][j] + wins[j][i];
                if games == 0.0 {
                    continue;
                }
                let p = 1.0 / (1.0 + ((s[j] - s[i]) / c).exp());
                let g = (wins[i][j] - games * p) / c;
                let h = games * p * (1.0 - p) / (c * c);
                if i > 0 {
                    grad[i - 1] += g;
                    hess[(i - 1, i - 1)] += h;
                }
                if j > 0 {
                    grad[j - 1] -= g;
                    hess[(j - 1, j - 1)] += h;
                }
                if i > 0 && j > 0 {
                    hess[(i - 1, j - 1)] -= h;
                    hess[(j - 1, i - 1)] -= h;
                }
            }
        }
        if grad.norm() < 1e-8 {
            return Ok(names.iter().map(|s| s.to_string()).zip(s).collect());
        }
        let step = hess.cholesky().ok_or(EvalError::NotConverged)?.solve(&grad);
        for k in 1..n {
            s[k] += step[k - 1];
        }
        if s.iter().any(|v| !v.is_finite() || v.abs() > 1e6) {
            return Err(EvalError::NotConverged);
        }
    }
    Err(EvalError::NotConverged)
}

/// Principal direction of a panel's win-rate history.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelWeights {
    /// Unit norm, nonnegative sum.
    pub weights: Vec<f64>,
    /// Column means of the fitted history; scores are centred on these.
    pub mean: Vec<f64>,
    /// Largest covariance eigenvalue, the variance of the fitted scores.
    pub variance: f64,
}

impl PanelWeights {
    /// Three lines: `weights`, `mean` and `variance`, space separated.
    pub fn to_text(&self) -> String {
        let join = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(" ");
        format!("weights {}\nmean {}\nvariance {}\n", join(&self.weights), join(&self.mean), self.variance)
    }

    pub fn from_text(text: &str) -> Result<PanelWeights, EvalError> {
        let bad = |what: &str| EvalError::Parse(format!("panel weights: {what}"));
        let mut fields = BTreeMap::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let mut words = line.split_whitespace();
            let key = words.next().expect("nonblank line");
            let values = words.map(str::parse::<f64>).collect::<Result<Vec<_>, _>>().map_err(|_| bad(key))?;
            fields.insert(key.to_string(), values);
        }
        let mut take = |k: &str| fields.remove(k).ok_or_else(|| bad(&format!("missing {k}")));
        let (weights, mean, variance) = (take("weights")?, take("mean")?, take("variance")?);
        if weights.is_empty() || weights.len() != mean.len() || variance.len() != 1 {
            return Err(bad("inconsistent lengths"));
        }
        Ok(PanelWeights { weights, mean, variance: variance[0] })
    }
}

/// Covariance PCA of the rows (one row per evaluated net, one column per
/// panel net, entries are White-side win rates).
pub fn fit_panel_weights(rows: &[Vec<f64>]) -> Result<PanelWeights, EvalError> {
    if rows.len() < 2 {
        return invalid("panel fit needs at least two rows");
    }
    let cols = rows[0].len();
    if cols == 0 || rows.iter().any(|r| r.len() != cols) {
        return invalid("panel rows must share a nonzero length");
    }
    if rows.iter().flatten().any(|v| !(0.0..=1.0).contains(v)) {
        return invalid("win rates must lie in [0, 1]");
    }
    let m = DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]);
    let mean: Vec<f64> = m.column_iter().map(|c| c.mean()).collect();
    let centred = DMatrix::from_fn(rows.len(), cols, |i, j| m[(i, j)] - mean[j]);
    let cov = centred.transpose() * &centred / (rows.len() - 1) as f64;
    if cov.iter().all(|&v| v == 0.0) {
        return invalid("win rates have no variance");
    }
    let eig = SymmetricEigen::new(cov);
    let top = eig.eigenvalues.imax();
    let mut weights: Vec<f64> = eig.eigenvectors.column(top).iter().copied().collect();
    let norm = weights.iter().map(|w| w * w).sum::<f64>().sqrt();
    let sign = if weights.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
    weights.iter_mut().for_each(|w| *w *= sign / norm);
    Ok(PanelWeights { weights, mean, variance: eig.eigenvalues[top] })
}

/// Projection of a centred results row on the panel weights.
pub fn panel_evaluate(row: &[f64], panel: &PanelWeights) -> Result<f64, EvalError> {
    if row.len() != panel.weights.len() {
        return invalid(format!("row has {} entries, panel has {}", row.len(), panel.weights.len()));
    }
    Ok(row.iter().zip(&panel.mean).zip(&panel.weights).map(|((r, m), w)| (r - m) * w).sum())
}

/// White-side win rate of `candidate` against each panel member, over
/// matches of `cfg.games` games.
pub fn panel_row<C: Evaluator + ?Sized, P: Evaluator>(
    candidate: &C,
    panel: &[P],
    cfg: &MatchConfig,
) -> Result<Vec<f64>, EvalError> {
    panel
        .iter()
        .enumerate()
        .map(|(i, p)| Ok(run_match(("candidate", candidate), (&format!("panel{i}") as &str, p), cfg)?.a_white_rate()))
        .collect()
}

/// Every ordered round-robin pair plays one match.
pub fn round_robin<E: Evaluator>(entrants: &[(String, E)], cfg: &MatchConfig) -> Result<Vec<MatchResult>, EvalError> {
    let mut out = Vec::new();
    for i in 0..entrants.len() {
        for j in i + 1..entrants.len() {
            let (a, b) = (&entrants[i], &entrants[j]);
            out.push(run_match((&a.0, &a.1), (&b.0, &b.1), cfg)?);
        }
    }
    Ok(out)
}

/// Triples `a > b > c > a` where `x > y` means `x` won the majority of
/// their games.
pub fn three_cycles(results: &[MatchResult]) -> Vec<[String; 3]> {
    let mut beats: BTreeSet<(&str, &str)> = BTreeSet::new();
    let mut names: BTreeSet<&str> = BTreeSet::new();
    for r in results {
        names.insert(&r.net_a);
        names.insert(&r.net_b);
        if 2 * r.a_wins() > r.games {
            beats.insert((&r.net_a, &r.net_b));
        } else if 2 * r.a_wins() < r.games {
            beats.insert((&r.net_b, &r.net_a));
        }
    }
    let names: Vec<&str> = names.into_iter().collect();
    let mut out = Vec::new();
    for (i, a) in names.iter().enumerate() {
        for b in &names[i + 1..] {
            for c in &names[i + 1..] {
                if b != c && beats.contains(&(*a, *b)) && beats.contains(&(*b, *c)) && beats.contains(&(*c, *a)) {
                    out.push([a.to_string(), b.to_string(), c.to_string()]);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mcts::{RandomEvaluator, UniformEvaluator};

    fn result(a: &str, b: &str, games: usize, a_wins: usize) -> MatchResult {
        MatchResult {
            net_a: a.into(),
            net_b: b.into(),
            games,
            a_wins_as_white: a_wins / 2,
            a_wins_as_black: a_wins - a_wins / 2,
            komi: Komi::new(9.5).unwrap(),
            complete: true,
        }
    }

    #[test]
    fn elo_probability_basics() {
        assert_eq!(elo_win_prob(100.0, 100.0, 400.0).unwrap(), 0.5);
        let p = elo_win_prob(400.0, 0.0, 400.0).unwrap();
        assert!((p - 1.0 / (1.0 + (-1.0f64).exp())).abs() < 1e-15);
        assert!((p + elo_win_prob(0.0, 400.0, 400.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(elo_win_prob(0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn two_net_mle_is_the_logit() {
        let s = mle_elo(&[result("a", "b", 100, 75)], 400.0).unwrap();
        assert_eq!(s["a"], 0.0);
        assert!((s["a"] - s["b"] - 400.0 * 3f64.ln()).abs() < 0.1);
    }

    #[test]
    fn symmetric_results_give_equal_scores() {
        let rs = [result("a", "b", 10, 5), result("b", "c", 10, 5), result("a", "c", 10, 5)];
        let s = mle_elo(&rs, 400.0).unwrap();
        assert!(s.values().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn mle_rejects_disconnected_and_perfect_records() {
        let rs = [result("a", "b", 10, 5), result("c", "d", 10, 5)];
        assert!(matches!(mle_elo(&rs, 400.0), Err(EvalError::Disconnected(..))));
        assert!(matches!(mle_elo(&[result("a", "b", 10, 10)], 400.0), Err(EvalError::NotConverged)));
    }

    #[test]
    fn result_lines_round_trip() {
        let r = result("nets/a.w", "nets/b.w", 100, 61);
        assert_eq!(r.to_string().parse::<MatchResult>().unwrap(), r);
        assert!("a\tb\t2\t3\t0\t9.5\tcomplete".parse::<MatchResult>().is_err());
    }

    #[test]
    fn panel_fit_centres_and_orients() {
        let rows = vec![vec![0.2, 0.5, 0.1], vec![0.4, 0.5, 0.3], vec![0.9, 0.5, 0.4]];
        let w = fit_panel_weights(&rows).unwrap();
        assert!((w.weights.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(w.weights.iter().sum::<f64>() >= 0.0);
        assert!(panel_evaluate(&w.mean, &w).unwrap().abs() < 1e-15);
        let mut better = w.mean.clone();
        better[0] += 0.1;
        assert!(panel_evaluate(&better, &w).unwrap() > 0.0);
        assert!(panel_evaluate(&[0.1], &w).is_err());
        assert!(fit_panel_weights(&[vec![0.3, 0.3], vec![0.3, 0.3]]).is_err());
        assert!(fit_panel_weights(&rows[..1]).is_err());
        assert_eq!(PanelWeights::from_text(&w.to_text()).unwrap(), w);
        assert!(PanelWeights::from_text("weights 1\nmean 0 0\nvariance 1").is_err());
    }

    #[test]
    fn cycles_are_reported_once() {
        let rs = [result("a", "b", 10, 8), result("b", "c", 10, 8), result("c", "a", 10, 8), result("a", "d", 10, 8)];
        assert_eq!(three_cycles(&rs), vec![["a".to_string(), "b".to_string(), "c".to_string()]]);
    }

    #[test]
    fn matches_alternate_colours_and_repeat() {
        let cfg = MatchConfig { max_moves: 40, ..MatchConfig::new(5, 4, Komi::new(0.5).unwrap(), 8, 3) };
        let a = UniformEvaluator::neutral();
        let b = RandomEvaluator::new(cfg.komi, 1);
        let r1 = run_match(("a", &a), ("b", &b), &cfg).unwrap();
        assert_eq!(r1, run_match(("a", &a), ("b", &b), &cfg).unwrap());
        assert_eq!(r1.games, 4);
        assert!(r1.a_wins_as_white <= 2 && r1.a_wins_as_black <= 2);
        assert!(run_match(("a", &a), ("b", &b), &MatchConfig { games: 3, ..cfg.clone() }).is_err());
        assert!(run_match(("a", &a), ("b", &b), &MatchConfig { games: 0, ..cfg }).is_err());
    }
}
