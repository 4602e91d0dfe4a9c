use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use super::SearchError;
use crate::goban::{BoardState, Color, Komi, Symmetry};
use crate::network::{InputPlanes, Network};
use crate::sigmoid::{logit, KomiContext, SigmoidParams};

/// What the search needs from a position: a prior over all `N² + 1` move
/// indices (illegal entries are ignored) and the winrate sigmoid of the side
/// to move.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub policy: Vec<f64>,
    pub params: SigmoidParams,
}

pub trait Evaluator: Send + Sync {
    fn evaluate(&self, state: &BoardState) -> Result<Evaluation, SearchError>;

    /// The only board size this evaluator handles, if it is restricted.
    fn board_size(&self) -> Option<usize> {
        None
    }
}

impl<E: Evaluator + ?Sized> Evaluator for &E {
    fn evaluate(&self, state: &BoardState) -> Result<Evaluation, SearchError> {
        (**self).evaluate(state)
    }

    fn board_size(&self) -> Option<usize> {
        (**self).board_size()
    }
}

impl<E: Evaluator + ?Sized> Evaluator for Arc<E> {
    fn evaluate(&self, state: &BoardState) -> Result<Evaluation, SearchError> {
        (**self).evaluate(state)
    }

    fn board_size(&self) -> Option<usize> {
        (**self).board_size()
    }
}

fn uniform_policy(size: usize) -> Vec<f64> {
    let len = size * size + 1;
    vec![1.0 / len as f64; len]
}

/// Uniform policy and one fixed sigmoid everywhere.
#[derive(Debug, Clone, Copy)]
pub struct UniformEvaluator {
    pub params: SigmoidParams,
}

impl UniformEvaluator {
    /// A nearly flat sigmoid: every position looks like a coin flip at any
    /// reasonable komi.
    pub fn neutral() -> UniformEvaluator {
        UniformEvaluator { params: SigmoidParams::new(0.0, crate::sigmoid::BETA_MIN).expect("valid") }
    }
}

impl Evaluator for UniformEvaluator {
    fn evaluate(&self, state: &BoardState) -> Result<Evaluation, SearchError> {
        Ok(Evaluation { policy: uniform_policy(state.size()), params: self.params })
    }
}

/// Uniform policy with a pseudo-random winrate per position: `rho(0)` at the
/// given komi is uniform on (0, 1), derived from the position hash so that
/// repeated evaluations agree.
#[derive(Debug, Clone, Copy)]
pub struct RandomEvaluator {
    pub komi: Komi,
    pub seed: u64,
}

impl RandomEvaluator {
    pub fn new(komi: Komi, seed: u64) -> RandomEvaluator {
        RandomEvaluator { komi, seed }
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Evaluator for RandomEvaluator {
    fn evaluate(&self, state: &BoardState) -> Result<Evaluation, SearchError> {
        let bits = splitmix(state.feature_key() ^ splitmix(self.seed));
        let u = ((bits >> 11) as f64 + 0.5) / (1u64 << 53) as f64;
        let kbar = KomiContext::new(self.komi, state.to_move()).signed_komi();
        let params = SigmoidParams::new(logit(u) - kbar, 1.0).map_err(|e| SearchError::Config(e.to_string()))?;
        Ok(Evaluation { policy: uniform_policy(state.size()), params })
    }
}

/// How a [`NetEvaluator`] uses the board symmetries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymmetryMode {
    /// Average over all eight (exactly invariant, eight times the cost).
    Average,
    /// One symmetry per position, picked from the position hash.
    Hashed,
    Identity,
}

const CACHE_LIMIT: usize = 200_000;

/// Network-backed evaluator with a shared cache keyed by the input planes.
pub struct NetEvaluator {
    net: Arc<Network>,
    mode: SymmetryMode,
    cache: Mutex<HashMap<u64, Evaluation>>,
}

impl NetEvaluator {
    pub fn new(net: Arc<Network>, mode: SymmetryMode) -> NetEvaluator {
        NetEvaluator { net, mode, cache: Mutex::new(HashMap::new()) }
    }

    pub fn network(&self) -> &Arc<Network> {
        &self.net
    }

    pub fn clear_cache(&self) {
        self.cache.lock().expect("cache lock").clear();
    }
}

impl Evaluator for NetEvaluator {
    fn evaluate(&self, state: &BoardState) -> Result<Evaluation, SearchError> {
        let key = state.feature_key();
        if let Some(hit) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(hit.clone());
        }
        let planes = InputPlanes::encode(state, self.net.config().input_planes);
        let out = match self.mode {
            SymmetryMode::Average => self.net.forward_symmetrized(&planes)?,
            SymmetryMode::Hashed => self.net.forward_with_symmetry(&planes, Symmetry::from_id((splitmix(key) % 8) as u8))?,
            SymmetryMode::Identity => self.net.forward(&planes)?,
        };
        let params = SigmoidParams::new(out.alpha, out.beta).map_err(|e| SearchError::Config(e.to_string()))?;
        let eval = Evaluation { policy: out.policy, params };
        let mut cache = self.cache.lock().expect("cache lock");
        if cache.len() >= CACHE_LIMIT {
            cache.clear();
        }
        cache.insert(key, eval.clone());
        Ok(eval)
    }

    fn board_size(&self) -> Option<usize> {
        Some(self.net.config().board_size)
    }
}

/// Winner of a finished game, as seen by the search.
pub(crate) fn terminal_winner(state: &BoardState, komi: Komi) -> Result<Color, SearchError> {
    Ok(state.winner(komi)?)
}
