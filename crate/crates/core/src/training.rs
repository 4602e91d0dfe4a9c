//! The generation loop: self-play with the current net, then train the next
//! net on a window of the most recent positions.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::goban::{Komi, Symmetry};
use crate::mcts::{NetEvaluator, SymmetryMode};
use crate::network::{load_weights, read_records, save_weights, LossBreakdown, Network, NetworkConfig, NetworkError, Trainer, TrainingRecord};
use crate::selfplay::{generation_dir, run_generation, GenerationReport, KomiSource, SelfplayConfig, SelfplayError};

#[derive(Debug, Error)]
pub enum TrainingError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Selfplay(#[from] SelfplayError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("no training data in {0}")]
    NoData(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    pub steps: usize,
    pub batch_size: usize,
    pub lr: f64,
    /// The rate is cosine-annealed from `lr` down to this fraction of it
    /// over the steps of one call.
    pub final_lr_fraction: f64,
    /// The returned weights are the plain average of the iterates over this
    /// final fraction of the steps; 0 returns the last iterate.
    pub average_tail: f64,
    pub momentum: f64,
    pub clip_norm: f64,
    /// Most recent positions sampled from.
    pub window: usize,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> TrainingConfig {
        TrainingConfig {
            steps: 1000,
            batch_size: 32,
            lr: 0.01,
            final_lr_fraction: 0.1,
            average_tail: 0.5,
            momentum: 0.9,
            clip_norm: Trainer::DEFAULT_CLIP_NORM,
            window: 60_000,
            seed: 0,
        }
    }
}

/// Generation ids present under `data_dir`, ascending.
pub fn generations(data_dir: &Path) -> Result<Vec<u32>, TrainingError> {
    let dir = data_dir.join("generations");
    if !dir.exists() {
        return Ok(Vec::new());
    }
    let mut ids: Vec<u32> = fs::read_dir(dir)?
        .filter_map(|e| e.ok()?.file_name().to_str()?.parse().ok())
        .collect();
    ids.sort_unstable();
    Ok(ids)
}

/// Up to `window` records, newest generations first, generations at or
/// below `upto`.
pub fn load_window(data_dir: &Path, upto: u32, window: usize) -> Result<Vec<TrainingRecord>, TrainingError> {
    let mut out: Vec<TrainingRecord> = Vec::new();
    for id in generations(data_dir)?.into_iter().rev().filter(|&g| g <= upto) {
        let path = generation_dir(data_dir, id).join("data.records");
        if !path.exists() {
            continue;
        }
        let mut recs = read_records(&path)?;
        let room = window - out.len();
        if recs.len() > room {
            recs.drain(..recs.len() - room);
        }
        out.extend(recs);
        if out.len() >= window {
            break;
        }
    }
    if out.is_empty() {
        return Err(TrainingError::NoData(data_dir.display().to_string()));
    }
    Ok(out)
}

/// Minibatch SGD over `records`, sampled with replacement, each record under
/// a random board symmetry, then tail averaging of the weights (see
/// [`TrainingConfig::average_tail`]). Returns the loss of every step.
pub fn train_network(net: &mut Network, records: &[TrainingRecord], cfg: &TrainingConfig) -> Result<Vec<LossBreakdown>, TrainingError> {
    if records.is_empty() {
        return Err(TrainingError::NoData("empty record set".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut trainer = Trainer::new(net.config(), cfg.momentum);
    trainer.clip_norm = cfg.clip_norm;
    let mut losses = Vec::with_capacity(cfg.steps);
    let mut batch = Vec::with_capacity(cfg.batch_size);
    let tail_start = cfg.steps - ((cfg.steps as f64 * cfg.average_tail.clamp(0.0, 1.0)) as usize).min(cfg.steps);
    let mut sum: Option<Vec<Vec<f64>>> = None;
    for step in 0..cfg.steps {
        batch.clear();
        for _ in 0..cfg.batch_size {
            let r = &records[rng.random_range(0..records.len())];
            batch.push(r.transformed(Symmetry::from_id(rng.random_range(0..8))));
        }
        let progress = step as f64 / cfg.steps.max(2).saturating_sub(1) as f64;
        let cosine = 0.5 * (1.0 + (std::f64::consts::PI * progress).cos());
        let lr = cfg.lr * (cfg.final_lr_fraction + (1.0 - cfg.final_lr_fraction) * cosine);
        losses.push(trainer.step(net, &batch, lr)?);
        if step >= tail_start {
            let tensors = net.weights().tensors();
            match &mut sum {
                None => sum = Some(tensors.into_iter().cloned().collect()),
                Some(sum) => {
                    for (acc, t) in sum.iter_mut().zip(tensors) {
                        acc.iter_mut().zip(t).for_each(|(a, x)| *a += x);
                    }
                }
            }
        }
    }
    if let Some(sum) = sum {
        let n = (cfg.steps - tail_start) as f64;
        for (t, acc) in net.weights_mut().tensors_mut().into_iter().zip(sum) {
            t.iter_mut().zip(acc).for_each(|(x, a)| *x = a / n);
        }
    }
    Ok(losses)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub net: NetworkConfig,
    pub selfplay: SelfplayConfig,
    pub training: TrainingConfig,
    pub generations: u32,
    /// Komi of generation 0, whose net is still random.
    pub first_komi: Komi,
    pub symmetry: SymmetryMode,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> PipelineConfig {
        PipelineConfig {
            net: NetworkConfig::default(),
            selfplay: SelfplayConfig::default(),
            training: TrainingConfig::default(),
            generations: 10,
            first_komi: Komi::new(9.5).expect("half-integer"),
            symmetry: SymmetryMode::Hashed,
            seed: 0,
        }
    }
}

pub struct GenerationSummary {
    pub generation: u32,
    pub report: GenerationReport,
    pub final_loss: LossBreakdown,
}

/// Runs `cfg.generations` rounds of self-play and training. Each generation
/// directory holds the net that plays it; the last trained net is saved as
/// the net of the following, not yet played, generation, which is where a
/// later call resumes.
pub fn run_pipeline(
    cfg: &PipelineConfig,
    data_dir: &Path,
    mut on_generation: impl FnMut(&GenerationSummary),
) -> Result<Network, TrainingError> {
    let (mut net, start) = match generations(data_dir)?.last() {
        Some(&g) => (load_weights(&generation_dir(data_dir, g).join("net.weights"))?, g),
        None => (Network::random(cfg.net.clone(), cfg.seed)?, 0),
    };
    for generation in start..start + cfg.generations {
        let dir = generation_dir(data_dir, generation);
        fs::create_dir_all(&dir)?;
        save_weights(&net, &dir.join("net.weights"))?;

        let evaluator = NetEvaluator::new(Arc::new(net.clone()), cfg.symmetry);
        let selfplay = SelfplayConfig {
            komi_source: if generation == 0 { KomiSource::Fixed(cfg.first_komi) } else { cfg.selfplay.komi_source },
            rng_seed: cfg.seed ^ u64::from(generation).wrapping_mul(0x9E37_79B9_7F4A_7C15),
            ..cfg.selfplay.clone()
        };
        let played = run_generation(&evaluator, &selfplay, data_dir, generation)?;

        let window = load_window(data_dir, generation, cfg.training.window)?;
        let training = TrainingConfig { seed: cfg.training.seed ^ u64::from(generation), ..cfg.training.clone() };
        let losses = train_network(&mut net, &window, &training)?;
        let final_loss = losses.last().copied().unwrap_or_default();
        log::info!(
            "generation {generation}: {} games, {} branches, {} positions, loss {:.4}",
            played.report.games,
            played.report.branches,
            played.report.positions_emitted,
            final_loss.total
        );
        on_generation(&GenerationSummary { generation, report: played.report, final_loss });
    }
    let next = generation_dir(data_dir, start + cfg.generations);
    fs::create_dir_all(&next)?;
    save_weights(&net, &next.join("net.weights"))?;
    Ok(net)
}
