//! Tree search with sigmoid leaf values.
//!
//! Every node `s` of the tree stores the sum, over all nodes `r` of its
//! subtree, of `v(parent(s), r)`: the winrate of `r` seen from the player to
//! move at the parent of `s`, averaged over a virtual komi interval chosen at
//! that parent. Each visit adds exactly one node (or revisits a finished
//! position) and pushes its value to every ancestor.

mod evaluator;

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use thiserror::Error;

use crate::goban::{BoardState, Color, GoError, Komi, Move};
use crate::network::NetworkError;
use crate::sigmoid::{lambda_extremum_unchecked, KomiContext, SigmoidParams};

pub use evaluator::{Evaluation, Evaluator, NetEvaluator, RandomEvaluator, SymmetryMode, UniformEvaluator};

#[derive(Debug, Error)]
pub enum SearchError {
    #[error(transparent)]
    Go(#[from] GoError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("invalid search configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FpuRule {
    /// Unvisited children are worth 0.5.
    Agz,
    /// Parent's own value minus `c_fpu * sqrt(sum of visited priors)`.
    Lz,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub max_visits: u32,
    pub c_puct: f64,
    pub fpu_rule: FpuRule,
    pub c_fpu: f64,
    pub lambda: f64,
    /// Gibbs temperature for the first `random_temp_moves` plies of a game;
    /// later moves use temperature 0.
    pub gibbs_temp: f64,
    pub random_temp_moves: u32,
    /// Policy logits are divided by this before normalisation.
    pub softmax_temp: f64,
    pub root_noise: bool,
    /// Dirichlet concentration before scaling by `361 / N²`.
    pub dirichlet_alpha_nonscaled: f64,
    pub dirichlet_weight: f64,
}

impl Default for SearchConfig {
    fn default() -> SearchConfig {
        SearchConfig {
            max_visits: 250,
            c_puct: 0.8,
            fpu_rule: FpuRule::Lz,
            c_fpu: 0.25,
            lambda: 0.0,
            gibbs_temp: 0.0,
            random_temp_moves: 0,
            softmax_temp: 1.0,
            root_noise: false,
            dirichlet_alpha_nonscaled: 0.03,
            dirichlet_weight: 0.25,
        }
    }
}

impl SearchConfig {
    /// Settings for self-play: root noise, early Gibbs sampling, softened
    /// priors.
    pub fn selfplay() -> SearchConfig {
        SearchConfig {
            lambda: 0.5,
            gibbs_temp: 0.8,
            random_temp_moves: 8,
            softmax_temp: 1.5,
            root_noise: true,
            ..SearchConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        let bad = |what: &str| Err(SearchError::Config(what.to_string()));
        if self.max_visits == 0 {
            return bad("max_visits must be at least 1");
        }
        if !(self.c_puct > 0.0) {
            return bad("c_puct must be positive");
        }
        if !(self.c_fpu >= 0.0) {
            return bad("c_fpu must be nonnegative");
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return bad("lambda must lie in [0, 1]");
        }
        if !(self.gibbs_temp >= 0.0) {
            return bad("gibbs_temp must be nonnegative");
        }
        if !(self.softmax_temp > 0.0) {
            return bad("softmax_temp must be positive");
        }
        if !(self.dirichlet_alpha_nonscaled > 0.0) {
            return bad("dirichlet alpha must be positive");
        }
        if !(0.0..=1.0).contains(&self.dirichlet_weight) {
            return bad("dirichlet_weight must lie in [0, 1]");
        }
        Ok(())
    }

    /// Gibbs temperature for a move played from `state`.
    pub fn temperature_at(&self, state: &BoardState) -> f64 {
        if state.move_number() < self.random_temp_moves {
            self.gibbs_temp
        } else {
            0.0
        }
    }
}

/// `Q + c_puct * sqrt(parent_visits - 1) * prior / (1 + child_visits)`.
pub fn uct_urgency(q: f64, c_puct: f64, parent_visits: u32, prior: f64, child_visits: u32) -> f64 {
    let explore = f64::from(parent_visits.saturating_sub(1)).sqrt();
    q + c_puct * explore * prior / (1.0 + f64::from(child_visits))
}

/// Value of an unvisited child.
pub fn first_play_urgency(rule: FpuRule, parent_self_value: f64, visited_prior_sum: f64, c_fpu: f64) -> f64 {
    match rule {
        FpuRule::Agz => 0.5,
        FpuRule::Lz => parent_self_value - c_fpu * visited_prior_sum.sqrt(),
    }
}

/// Winrate of the position evaluated by `leaf` (with `leaf_player` to move)
/// from the point of view of `parent_player`, averaged over the virtual
/// komi interval `[0, xbar]` that was chosen for the parent player. When
/// the players differ the interval is mirrored, since a bonus for one side is
/// a malus for the other.
pub fn leaf_value_with_xbar(xbar: f64, parent_player: Color, leaf: &SigmoidParams, leaf_player: Color, komi: Komi) -> f64 {
    let kbar = KomiContext::new(komi, leaf_player).signed_komi();
    if parent_player == leaf_player {
        leaf.mu(xbar, kbar)
    } else {
        1.0 - leaf.mu(-xbar, kbar)
    }
}

/// `v(s, r)`: the interval end `xbar` is computed from the parent's
/// sigmoid and `lambda`, then the leaf's sigmoid is averaged over it.
pub fn leaf_value(
    parent: &SigmoidParams,
    parent_player: Color,
    leaf: &SigmoidParams,
    leaf_player: Color,
    komi: Komi,
    lambda: f64,
) -> f64 {
    let xbar = lambda_extremum_unchecked(lambda, KomiContext::new(komi, parent_player).signed_komi(), parent);
    leaf_value_with_xbar(xbar, parent_player, leaf, leaf_player, komi)
}

/// Selection probabilities proportional to `exp(visits / temp)`; with
/// `temp == 0` all mass goes to the most visited entry (lowest index on
/// ties).
pub fn gibbs_probabilities(visits: &[u32], temp: f64) -> Vec<f64> {
    let mut probs = vec![0.0; visits.len()];
    if visits.is_empty() {
        return probs;
    }
    if temp == 0.0 {
        probs[argmax_first(visits.iter().map(|&v| f64::from(v)))] = 1.0;
        return probs;
    }
    let top = f64::from(*visits.iter().max().expect("nonempty"));
    for (p, &v) in probs.iter_mut().zip(visits) {
        *p = ((f64::from(v) - top) / temp).exp();
    }
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    probs
}

pub fn gibbs_choice<R: Rng + ?Sized>(visits: &[u32], temp: f64, rng: &mut R) -> usize {
    let probs = gibbs_probabilities(visits, temp);
    if temp == 0.0 {
        return probs.iter().position(|&p| p == 1.0).expect("one-hot");
    }
    let mut u: f64 = rng.random();
    for (i, p) in probs.iter().enumerate() {
        if u < *p {
            return i;
        }
        u -= p;
    }
    probs.iter().rposition(|&p| p > 0.0).expect("some mass")
}

fn argmax_first(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

#[derive(Debug, Clone)]
struct Edge {
    mv: Move,
    prior: f64,
    child: Option<usize>,
}

#[derive(Debug, Clone)]
enum NodeKind {
    Terminal(Color),
    Inner {
        params: SigmoidParams,
        /// Komi correction interval end for this node's player.
        xbar: f64,
        /// `v(s, s)`.
        self_value: f64,
        edges: Vec<Edge>,
    },
}

#[derive(Debug, Clone)]
struct Node {
    state: BoardState,
    parent: Option<usize>,
    visits: u32,
    value_sum: f64,
    kind: NodeKind,
}

/// Per-child summary of a finished search.
#[derive(Debug, Clone, PartialEq)]
pub struct ChildStats {
    pub mv: Move,
    pub visits: u32,
    /// Mean value from the root player's view; `None` if unvisited.
    pub q: Option<f64>,
    pub prior: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchStats {
    /// Legal root moves in index order (pass last).
    pub children: Vec<ChildStats>,
    pub root_visits: u32,
    pub root_alpha: f64,
    pub root_beta: f64,
    /// Average of `v(root, r)` over the whole tree.
    pub root_value: f64,
    pub xbar: f64,
    pub nodes: usize,
}

/// One decision tree rooted at a position.
pub struct Search<'e, E: Evaluator + ?Sized> {
    cfg: SearchConfig,
    komi: Komi,
    evaluator: &'e E,
    nodes: Vec<Node>,
}

impl<'e, E: Evaluator + ?Sized> Search<'e, E> {
    /// Evaluates the root. Root noise is mixed in when `cfg.root_noise` is
    /// set, drawing from `rng`.
    pub fn new<R: Rng + ?Sized>(
        root: BoardState,
        komi: Komi,
        cfg: &SearchConfig,
        evaluator: &'e E,
        rng: &mut R,
    ) -> Result<Search<'e, E>, SearchError> {
        cfg.validate()?;
        if root.is_over() {
            return Err(GoError::GameOver.into());
        }
        let mut search = Search { cfg: cfg.clone(), komi, evaluator, nodes: Vec::new() };
        let node = search.make_node(root, None)?;
        search.nodes.push(node);
        let self_value = match &search.nodes[0].kind {
            NodeKind::Inner { self_value, .. } => *self_value,
            NodeKind::Terminal(_) => unreachable!("root is not over"),
        };
        search.nodes[0].visits = 1;
        search.nodes[0].value_sum = self_value;
        if cfg.root_noise {
            search.add_root_noise(rng)?;
        }
        Ok(search)
    }

    fn make_node(&self, state: BoardState, parent: Option<usize>) -> Result<Node, SearchError> {
        let kind = if state.is_over() {
            NodeKind::Terminal(evaluator::terminal_winner(&state, self.komi)?)
        } else {
            let eval = self.evaluator.evaluate(&state)?;
            let n = state.size();
            if eval.policy.len() != n * n + 1 {
                return Err(SearchError::Config(format!("policy has {} entries, expected {}", eval.policy.len(), n * n + 1)));
            }
            let moves = state.legal_moves()?;
            let inv_temp = 1.0 / self.cfg.softmax_temp;
            let mut priors: Vec<f64> = moves
                .iter()
                .map(|mv| {
                    let p = eval.policy[mv.index(n)];
                    if inv_temp == 1.0 { p } else { p.powf(inv_temp) }
                })
                .collect();
            let total: f64 = priors.iter().sum();
            if total > 0.0 && total.is_finite() {
                priors.iter_mut().for_each(|p| *p /= total);
            } else {
                priors.fill(1.0 / moves.len() as f64);
            }
            let edges = moves.into_iter().zip(priors).map(|(mv, prior)| Edge { mv, prior, child: None }).collect();
            let me = state.to_move();
            let kbar = KomiContext::new(self.komi, me).signed_komi();
            let xbar = lambda_extremum_unchecked(self.cfg.lambda, kbar, &eval.params);
            let self_value = leaf_value_with_xbar(xbar, me, &eval.params, me, self.komi);
            NodeKind::Inner { params: eval.params, xbar, self_value, edges }
        };
        Ok(Node { state, parent, visits: 0, value_sum: 0.0, kind })
    }

    fn add_root_noise<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<(), SearchError> {
        let n = self.nodes[0].state.size();
        let alpha = self.cfg.dirichlet_alpha_nonscaled * 361.0 / (n * n) as f64;
        let gamma = Gamma::new(alpha, 1.0).map_err(|e| SearchError::Config(e.to_string()))?;
        let weight = self.cfg.dirichlet_weight;
        let NodeKind::Inner { edges, .. } = &mut self.nodes[0].kind else { return Ok(()) };
        let mut noise: Vec<f64> = edges.iter().map(|_| gamma.sample(rng)).collect();
        let total: f64 = noise.iter().sum();
        if !(total > 0.0) {
            // Every draw underflowed; put the mass on one random edge.
            noise.fill(0.0);
            let i = rng.random_range(0..noise.len());
            noise[i] = 1.0;
        } else {
            noise.iter_mut().for_each(|x| *x /= total);
        }
        for (edge, eta) in edges.iter_mut().zip(noise) {
            edge.prior = (1.0 - weight) * edge.prior + weight * eta;
        }
        Ok(())
    }

    /// `v(s, r)` for tree nodes `s` (inner) and `r`.
    fn value(&self, s: usize, r: usize) -> f64 {
        let parent = &self.nodes[s];
        let NodeKind::Inner { xbar, .. } = parent.kind else { unreachable!("parents are inner nodes") };
        let leaf = &self.nodes[r];
        match &leaf.kind {
            NodeKind::Terminal(winner) => {
                if *winner == parent.state.to_move() {
                    1.0
                } else {
                    0.0
                }
            }
            NodeKind::Inner { params, .. } => {
                leaf_value_with_xbar(xbar, parent.state.to_move(), params, leaf.state.to_move(), self.komi)
            }
        }
    }

    /// Index of the edge a playout follows from inner node `s`.
    fn select(&self, s: usize) -> usize {
        let node = &self.nodes[s];
        let NodeKind::Inner { self_value, edges, .. } = &node.kind else { unreachable!("select on inner node") };
        let visited_prior: f64 = edges.iter().filter(|e| e.child.is_some()).map(|e| e.prior).sum();
        let fpu = first_play_urgency(self.cfg.fpu_rule, *self_value, visited_prior, self.cfg.c_fpu);
        argmax_first(edges.iter().map(|e| {
            let (q, visits) = match e.child {
                Some(c) => {
                    let child = &self.nodes[c];
                    (child.value_sum / f64::from(child.visits), child.visits)
                }
                None => (fpu, 0),
            };
            uct_urgency(q, self.cfg.c_puct, node.visits, e.prior, visits)
        }))
    }

    /// One playout: descend by maximal urgency until leaving the tree (the
    /// new node is added and evaluated) or reaching a finished position
    /// (its exact value is counted again).
    pub fn run_visit(&mut self) -> Result<(), SearchError> {
        let mut current = 0;
        let leaf = loop {
            let edge = self.select(current);
            let NodeKind::Inner { edges, .. } = &self.nodes[current].kind else { unreachable!() };
            match edges[edge].child {
                Some(child) => {
                    if matches!(self.nodes[child].kind, NodeKind::Terminal(_)) {
                        break child;
                    }
                    current = child;
                }
                None => {
                    let mv = edges[edge].mv;
                    let state = self.nodes[current].state.play(mv)?;
                    let node = self.make_node(state, Some(current))?;
                    let id = self.nodes.len();
                    self.nodes.push(node);
                    let NodeKind::Inner { edges, .. } = &mut self.nodes[current].kind else { unreachable!() };
                    edges[edge].child = Some(id);
                    break id;
                }
            }
        };
        let mut node = leaf;
        while let Some(parent) = self.nodes[node].parent {
            let v = self.value(parent, leaf);
            let n = &mut self.nodes[node];
            n.visits += 1;
            n.value_sum += v;
            node = parent;
        }
        let v = self.value(0, leaf);
        self.nodes[0].visits += 1;
        self.nodes[0].value_sum += v;
        Ok(())
    }

    /// Visits until the root has `max_visits`.
    pub fn run(&mut self) -> Result<(), SearchError> {
        while self.nodes[0].visits < self.cfg.max_visits {
            self.run_visit()?;
        }
        Ok(())
    }

    pub fn root_visits(&self) -> u32 {
        self.nodes[0].visits
    }

    /// Number of distinct positions in the tree.
    pub fn tree_size(&self) -> usize {
        self.nodes.len()
    }

    /// Checks that every expanded node's visits are one more than the sum of
    /// its children's (plus terminal revisits, which only touch visits).
    pub fn check_invariants(&self) -> Result<(), String> {
        for (i, node) in self.nodes.iter().enumerate() {
            if !(0.0..=f64::from(node.visits) + 1e-9).contains(&node.value_sum) {
                return Err(format!("node {i}: value sum {} outside [0, {}]", node.value_sum, node.visits));
            }
            if let NodeKind::Inner { edges, .. } = &node.kind {
                let below: u32 = edges.iter().filter_map(|e| e.child).map(|c| self.nodes[c].visits).sum();
                if node.visits != 1 + below {
                    return Err(format!("node {i}: {} visits but children hold {below}", node.visits));
                }
            }
        }
        Ok(())
    }

    pub fn stats(&self) -> SearchStats {
        let root = &self.nodes[0];
        let NodeKind::Inner { params, xbar, edges, .. } = &root.kind else { unreachable!("root is inner") };
        let children = edges
            .iter()
            .map(|e| {
                let (visits, q) = match e.child {
                    Some(c) => (self.nodes[c].visits, Some(self.nodes[c].value_sum / f64::from(self.nodes[c].visits))),
                    None => (0, None),
                };
                ChildStats { mv: e.mv, visits, q, prior: e.prior }
            })
            .collect();
        SearchStats {
            children,
            root_visits: root.visits,
            root_alpha: params.alpha(),
            root_beta: params.beta(),
            root_value: root.value_sum / f64::from(root.visits),
            xbar: *xbar,
            nodes: self.nodes.len(),
        }
    }

    /// Picks a root move with the Gibbs rule at temperature `temp`.
    pub fn choose<R: Rng + ?Sized>(&self, temp: f64, rng: &mut R) -> Move {
        let NodeKind::Inner { edges, .. } = &self.nodes[0].kind else { unreachable!("root is inner") };
        let visits: Vec<u32> = edges.iter().map(|e| e.child.map_or(0, |c| self.nodes[c].visits)).collect();
        edges[gibbs_choice(&visits, temp, rng)].mv
    }
}

/// Builds a fresh tree at `state`, searches to `cfg.max_visits` and picks a
/// move at the temperature for this ply.
pub fn genmove<E: Evaluator + ?Sized, R: Rng + ?Sized>(
    state: &BoardState,
    komi: Komi,
    cfg: &SearchConfig,
    evaluator: &E,
    rng: &mut R,
) -> Result<(Move, SearchStats), SearchError> {
    let mut search = Search::new(state.clone(), komi, cfg, evaluator, rng)?;
    search.run()?;
    let mv = search.choose(cfg.temperature_at(state), rng);
    Ok((mv, search.stats()))
}
