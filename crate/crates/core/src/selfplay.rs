//! Multi-komi self-play: games from the empty board with a komi drawn from
//! the evaluator's own estimate, and branches restarted from visited
//! positions with the komi that evens them out.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::goban::{BoardState, BranchParent, GameRecord, Komi, Move};
use crate::mcts::{genmove, Evaluator, SearchConfig, SearchError};
use crate::network::{InputPlanes, NetworkError, RecordWriter, TrainingRecord};
use crate::sgf;
use crate::sigmoid::{branch_komi, sample_komi, KomiContext, SigmoidParams};

#[derive(Debug, Error)]
pub enum SelfplayError {
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid self-play configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KomiSource {
    /// Drawn around the evaluator's empty-board `alpha`.
    NetSampled,
    Fixed(Komi),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchRule {
    /// Every visited position branches with probability `c_branch`.
    Constant,
    /// Only positions with `d = |alpha + k̄| > 3` branch, with probability
    /// `min(1, d / 50)`.
    Threshold,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelfplayConfig {
    pub board_size: usize,
    pub input_planes: usize,
    pub c_branch: f64,
    pub branch_rule: BranchRule,
    /// Branches of branches are followed up to this depth.
    pub max_branch_depth: u32,
    pub games_per_generation: usize,
    pub komi_source: KomiSource,
    /// Root komi is drawn with `beta` raised to at least this, so that an
    /// unsure net does not start games whose outcome the komi alone decides.
    pub sampling_beta_floor: f64,
    pub search: SearchConfig,
    /// Plies after which both sides pass without searching.
    pub max_moves: usize,
    pub rng_seed: u64,
    /// Worker threads; 0 uses the rayon default.
    pub threads: usize,
}

impl Default for SelfplayConfig {
    fn default() -> SelfplayConfig {
        SelfplayConfig {
            board_size: 7,
            input_planes: 17,
            c_branch: 0.025,
            branch_rule: BranchRule::Constant,
            max_branch_depth: 4,
            games_per_generation: 100,
            komi_source: KomiSource::NetSampled,
            sampling_beta_floor: 0.2,
            search: SearchConfig::selfplay(),
            max_moves: 3 * 7 * 7,
            rng_seed: 0,
            threads: 0,
        }
    }
}

impl SelfplayConfig {
    pub fn validate(&self) -> Result<(), SelfplayError> {
        if !(0.0..=1.0).contains(&self.c_branch) {
            return Err(SelfplayError::Config(format!("c_branch {} outside [0, 1]", self.c_branch)));
        }
        if !(self.sampling_beta_floor >= 0.0) {
            return Err(SelfplayError::Config("sampling_beta_floor must be nonnegative".into()));
        }
        if self.max_moves == 0 {
            return Err(SelfplayError::Config("max_moves must be positive".into()));
        }
        self.search.validate()?;
        Ok(())
    }
}

/// Root statistics of one searched position.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionStats {
    /// `(move index, visits)` for visited root children.
    pub visits: Vec<(u16, u32)>,
    pub params: SigmoidParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlayedGame {
    pub record: GameRecord,
    /// One entry per state from the initial one to the final one; `None` for
    /// states that were not searched (the final state and forced passes).
    pub stats: Vec<Option<PositionStats>>,
    /// 0 for games from the empty board, parent depth + 1 for branches.
    pub depth: u32,
}

/// Plays `start` (its setup and komi) to the end. Moves past
/// `cfg.max_moves` are forced passes.
pub fn play_selfplay_game<E: Evaluator + ?Sized, R: Rng + ?Sized>(
    evaluator: &E,
    cfg: &SelfplayConfig,
    start: GameRecord,
    depth: u32,
    rng: &mut R,
) -> Result<PlayedGame, SelfplayError> {
    let mut record = start;
    record.moves.clear();
    let mut state = record.initial_state().map_err(SearchError::from)?;
    let n = state.size();
    let mut stats = Vec::new();
    while !state.is_over() {
        let ply = record.setup.len() + record.moves.len();
        let (mv, entry) = if ply >= cfg.max_moves {
            (Move::Pass, None)
        } else {
            let (mv, s) = genmove(&state, record.komi, &cfg.search, evaluator, rng)?;
            let visits = s
                .children
                .iter()
                .filter(|c| c.visits > 0)
                .map(|c| (c.mv.index(n) as u16, c.visits))
                .collect();
            let params = SigmoidParams::new(s.root_alpha, s.root_beta).map_err(|e| SelfplayError::Config(e.to_string()))?;
            (mv, Some(PositionStats { visits, params }))
        };
        stats.push(entry);
        state = state.play(mv).map_err(SearchError::from)?;
        record.moves.push(mv);
    }
    stats.push(None);
    record.result = Some(state.winner(record.komi).map_err(SearchError::from)?);
    Ok(PlayedGame { record, stats, depth })
}

/// Positions to restart from, as `(state index within the game, komi)`.
/// The first state of a branch is never chosen again.
pub fn branch_candidates<R: Rng + ?Sized>(game: &PlayedGame, cfg: &SelfplayConfig, rng: &mut R) -> Vec<(usize, Komi)> {
    let first = usize::from(game.record.branch_parent.is_some());
    let mut out = Vec::new();
    let mut to_move = match game.record.initial_state() {
        Ok(s) => s.to_move(),
        Err(_) => return out,
    };
    for (i, entry) in game.stats.iter().enumerate() {
        if let (true, Some(stats)) = (i >= first, entry) {
            let selected = match cfg.branch_rule {
                BranchRule::Constant => rng.random_bool(cfg.c_branch),
                BranchRule::Threshold => {
                    let kbar = KomiContext::new(game.record.komi, to_move).signed_komi();
                    let d = (stats.params.alpha() + kbar).abs();
                    d > 3.0 && rng.random_bool((d / 50.0).min(1.0))
                }
            };
            if selected {
                out.push((i, branch_komi(&stats.params, to_move)));
            }
        }
        to_move = to_move.opposite();
    }
    out
}

/// Training records for every searched position, labelled with the game's
/// own komi and winner.
pub fn training_records(game: &PlayedGame, planes: usize) -> Result<Vec<TrainingRecord>, SelfplayError> {
    let winner = game.record.result.ok_or_else(|| SelfplayError::Config("game has no result".into()))?;
    let states = game.record.states().map_err(SearchError::from)?;
    let mut out = Vec::new();
    for (state, entry) in states.iter().zip(&game.stats) {
        if let Some(stats) = entry {
            let z = u8::from(state.to_move() == winner);
            out.push(TrainingRecord::new(
                InputPlanes::encode(state, planes),
                stats.visits.clone(),
                game.record.komi,
                state.to_move(),
                z,
            ));
        }
    }
    Ok(out)
}

/// Writes the records of `game` to `sink` and returns how many were written.
pub fn emit_training_data<W: Write>(game: &PlayedGame, sink: &mut RecordWriter<W>, planes: usize) -> Result<usize, SelfplayError> {
    let records = training_records(game, planes)?;
    for r in &records {
        sink.write(r)?;
    }
    Ok(records.len())
}

/// Komi for a fresh game from the empty board.
pub fn root_komi<E: Evaluator + ?Sized, R: Rng + ?Sized>(
    evaluator: &E,
    cfg: &SelfplayConfig,
    rng: &mut R,
) -> Result<Komi, SelfplayError> {
    match cfg.komi_source {
        KomiSource::Fixed(k) => Ok(k),
        KomiSource::NetSampled => {
            let empty = BoardState::new(cfg.board_size).map_err(SearchError::from)?;
            let raw = evaluator.evaluate(&empty)?.params;
            let params = SigmoidParams::new(raw.alpha(), raw.beta().max(cfg.sampling_beta_floor))
                .map_err(|e| SelfplayError::Config(e.to_string()))?;
            let u: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
            sample_komi(&params, u).map_err(|e| SelfplayError::Config(e.to_string()))
        }
    }
}

/// One root game and every branch grown from it, in the order played.
fn play_family<E: Evaluator + ?Sized>(evaluator: &E, cfg: &SelfplayConfig, index: usize) -> Result<Vec<PlayedGame>, SelfplayError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    rng.set_stream(index as u64);
    let komi = root_komi(evaluator, cfg, &mut rng)?;
    let root = play_selfplay_game(evaluator, cfg, GameRecord::new(0, cfg.board_size, komi), 0, &mut rng)?;
    let mut family = vec![root];
    let mut next = 0;
    while next < family.len() {
        let parent = &family[next];
        if parent.depth < cfg.max_branch_depth {
            let mut starts = Vec::new();
            for (i, komi) in branch_candidates(parent, cfg, &mut rng) {
                let mut start = GameRecord::new(family.len() as u64 + starts.len() as u64, cfg.board_size, komi);
                start.setup = parent.record.setup.iter().chain(&parent.record.moves[..i]).copied().collect();
                start.branch_parent = Some(BranchParent { game_id: parent.record.id, move_index: start.setup.len() });
                starts.push((start, parent.depth + 1));
            }
            for (start, depth) in starts {
                let game = play_selfplay_game(evaluator, cfg, start, depth, &mut rng)?;
                family.push(game);
            }
        }
        next += 1;
    }
    Ok(family)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GenerationReport {
    pub games: usize,
    pub branches: usize,
    pub failed_games: usize,
    pub positions_emitted: usize,
    /// Root-game komi counts.
    pub komi_histogram: BTreeMap<Komi, usize>,
    /// Mean number of moves over root games and branches.
    pub mean_game_length: f64,
}

impl GenerationReport {
    /// `key=value` lines; the histogram as `komi.<k>=<count>`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "games={}", self.games);
        let _ = writeln!(out, "branches={}", self.branches);
        let _ = writeln!(out, "failed_games={}", self.failed_games);
        let _ = writeln!(out, "positions_emitted={}", self.positions_emitted);
        let _ = writeln!(out, "mean_game_length={}", self.mean_game_length);
        for (k, n) in &self.komi_histogram {
            let _ = writeln!(out, "komi.{k}={n}");
        }
        out
    }
}

/// Where a generation's files live under a data directory.
pub fn generation_dir(data_dir: &Path, generation: u32) -> PathBuf {
    data_dir.join("generations").join(format!("{generation:04}"))
}

/// Games and records of one generation, in deterministic order.
pub struct Generation {
    pub games: Vec<PlayedGame>,
    pub records: Vec<TrainingRecord>,
    pub report: GenerationReport,
}

/// Plays `cfg.games_per_generation` root games plus all their branches.
/// Families run in parallel; ids are assigned afterwards in family order,
/// so the result depends only on the configuration. A failing family is
/// logged and counted, not fatal.
pub fn play_generation<E: Evaluator + ?Sized>(evaluator: &E, cfg: &SelfplayConfig) -> Result<Generation, SelfplayError> {
    cfg.validate()?;
    let run = || -> Vec<Result<Vec<PlayedGame>, SelfplayError>> {
        (0..cfg.games_per_generation).into_par_iter().map(|i| play_family(evaluator, cfg, i)).collect()
    };
    let families = if cfg.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| SelfplayError::Config(e.to_string()))?
            .install(run)
    } else {
        run()
    };

    let mut report = GenerationReport::default();
    let mut games = Vec::new();
    for (i, family) in families.into_iter().enumerate() {
        let family = match family {
            Ok(f) => f,
            Err(e) => {
                log::warn!("self-play game {i} failed: {e}");
                report.failed_games += 1;
                continue;
            }
        };
        let base = games.len() as u64;
        for mut game in family {
            game.record.id += base;
            if let Some(parent) = &mut game.record.branch_parent {
                parent.game_id += base;
            } else {
                report.games += 1;
                *report.komi_histogram.entry(game.record.komi).or_default() += 1;
            }
            games.push(game);
        }
    }
    report.branches = games.len() - report.games;
    let mut records = Vec::new();
    for g in &games {
        records.extend(training_records(g, cfg.input_planes)?);
    }
    report.positions_emitted = records.len();
    if !games.is_empty() {
        report.mean_game_length = games.iter().map(|g| g.record.moves.len()).sum::<usize>() as f64 / games.len() as f64;
    }
    Ok(Generation { games, records, report })
}

/// [`play_generation`], then writes `games.sgf`, `data.records` and `report`
/// under `generations/<id>/`.
pub fn run_generation<E: Evaluator + ?Sized>(
    evaluator: &E,
    cfg: &SelfplayConfig,
    data_dir: &Path,
    generation: u32,
) -> Result<Generation, SelfplayError> {
    let out = play_generation(evaluator, cfg)?;
    let dir = generation_dir(data_dir, generation);
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("games.sgf"), sgf::serialize_collection(out.games.iter().map(|g| &g.record)))?;
    let mut writer = RecordWriter::new(BufWriter::new(fs::File::create(dir.join("data.records"))?), cfg.board_size, cfg.input_planes)?;
    for r in &out.records {
        writer.write(r)?;
    }
    writer.finish()?;
    fs::write(dir.join("report"), out.report.to_text())?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mcts::{RandomEvaluator, UniformEvaluator};

    fn quick_cfg() -> SelfplayConfig {
        SelfplayConfig {
            board_size: 5,
            games_per_generation: 4,
            komi_source: KomiSource::Fixed(Komi::new(5.5).unwrap()),
            search: SearchConfig { max_visits: 16, ..SearchConfig::selfplay() },
            max_moves: 60,
            threads: 1,
            ..SelfplayConfig::default()
        }
    }

    fn game(seed: u64) -> PlayedGame {
        let cfg = quick_cfg();
        let e = RandomEvaluator::new(Komi::new(5.5).unwrap(), seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        play_selfplay_game(&e, &cfg, GameRecord::new(0, 5, Komi::new(5.5).unwrap()), 0, &mut rng).unwrap()
    }

    #[test]
    fn games_finish_with_consistent_bookkeeping() {
        for seed in 0..3 {
            let g = game(seed);
            assert_eq!(g.stats.len(), g.record.moves.len() + 1);
            assert!(g.stats.last().unwrap().is_none());
            g.record.validate().unwrap();
            assert!(g.record.final_state().unwrap().is_over());
        }
    }

    #[test]
    fn outcomes_alternate_between_records() {
        let g = game(7);
        let records = training_records(&g, 17).unwrap();
        assert_eq!(records.len(), g.stats.iter().filter(|s| s.is_some()).count());
        for pair in records.windows(2) {
            assert_ne!(pair[0].to_move, pair[1].to_move);
            assert_ne!(pair[0].z, pair[1].z);
        }
    }

    #[test]
    fn branch_probability_extremes() {
        let g = game(3);
        let mut cfg = quick_cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        cfg.c_branch = 0.0;
        assert!(branch_candidates(&g, &cfg, &mut rng).is_empty());
        cfg.c_branch = 1.0;
        let all = branch_candidates(&g, &cfg, &mut rng);
        assert_eq!(all.len(), g.stats.iter().filter(|s| s.is_some()).count());
    }

    #[test]
    fn branch_komi_evens_the_position() {
        let g = game(5);
        let mut cfg = quick_cfg();
        cfg.c_branch = 1.0;
        let states = g.record.states().unwrap();
        for (i, komi) in branch_candidates(&g, &cfg, &mut ChaCha8Rng::seed_from_u64(1)) {
            let params = g.stats[i].as_ref().unwrap().params;
            let kbar = KomiContext::new(komi, states[i].to_move()).signed_komi();
            assert!((params.alpha() + kbar).abs() <= 1.0);
        }
    }

    #[test]
    fn generation_is_deterministic_and_branches_replay() {
        let mut cfg = quick_cfg();
        cfg.c_branch = 0.05;
        let e = UniformEvaluator { params: SigmoidParams::new(1.0, 0.5).unwrap() };
        let a = play_generation(&e, &cfg).unwrap();
        let b = play_generation(&e, &cfg).unwrap();
        assert_eq!(a.report, b.report);
        assert_eq!(a.records, b.records);
        assert!(a.report.branches > 0);
        for g in &a.games {
            if let Some(parent) = &g.record.branch_parent {
                let p = &a.games[parent.game_id as usize];
                assert!(p.record.id < g.record.id);
                let parent_moves: Vec<Move> = p.record.setup.iter().chain(&p.record.moves).copied().collect();
                assert_eq!(&parent_moves[..parent.move_index], &g.record.setup[..]);
            }
        }
        assert_eq!(a.report.komi_histogram.values().sum::<usize>(), 4);
    }
}
