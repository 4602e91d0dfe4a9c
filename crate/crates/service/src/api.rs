//! HTTP/JSON analysis API. Every request carries the full position; the
//! active net is swapped atomically by `/nets/load`.

use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use axum::extract::{Json, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::cors::CorsLayer;

use sai::gtp::seeded_genmove;
use sai::mcts::{Evaluator, NetEvaluator, SearchConfig, SearchStats, SymmetryMode};
use sai::network::{load_weights, NetworkError};
use sai::{BoardState, Color, Komi, KomiContext, Move};

pub const DEFAULT_VISIT_CAP: u32 = 10_000;
pub const CURVE_POINTS: usize = 61;
const POLICY_TOP: usize = 10;

pub struct LoadedNet {
    pub path: String,
    pub evaluator: NetEvaluator,
}

pub struct AppState {
    active: RwLock<Option<Arc<LoadedNet>>>,
    pub visit_cap: u32,
    /// Directory listed by `GET /nets`.
    pub nets_dir: Option<PathBuf>,
}

impl AppState {
    pub fn new(visit_cap: u32, nets_dir: Option<PathBuf>) -> AppState {
        AppState { active: RwLock::new(None), visit_cap, nets_dir }
    }

    /// Loads a weight file and makes it the active net.
    pub fn load(&self, path: &Path) -> Result<(), ApiError> {
        if !path.is_file() {
            return Err(ApiError::new(StatusCode::NOT_FOUND, format!("no such file: {}", path.display())));
        }
        let net = load_weights(path).map_err(|e| match e {
            NetworkError::Io(e) => ApiError::new(StatusCode::NOT_FOUND, e.to_string()),
            e => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()),
        })?;
        let loaded = LoadedNet { path: path.display().to_string(), evaluator: NetEvaluator::new(Arc::new(net), SymmetryMode::Average) };
        *self.active.write().expect("net lock") = Some(Arc::new(loaded));
        Ok(())
    }

    pub fn active(&self) -> Option<Arc<LoadedNet>> {
        self.active.read().expect("net lock").clone()
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
    move_index: Option<usize>,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> ApiError {
        ApiError { status, message: message.into(), move_index: None }
    }

    fn unprocessable(message: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, message)
    }
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} ({})", self.message, self.status)
    }
}

impl ApiError {
    pub fn status(&self) -> StatusCode {
        self.status
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.message });
        if let Some(i) = self.move_index {
            body["move_index"] = json!(i);
        }
        (self.status, Json(body)).into_response()
    }
}

/// A position given either as moves from the empty board or as a layout.
#[derive(Debug, Clone, Deserialize, Serialize, Default)]
pub struct PositionRequest {
    #[serde(default)]
    pub moves: Vec<String>,
    /// Rows top to bottom, `X` Black, `O` White, `.` empty.
    pub layout: Option<Vec<String>>,
    pub komi: f64,
    pub to_move: Option<String>,
    /// Defaults to the active net's board size.
    pub size: Option<usize>,
}

impl PositionRequest {
    fn build(&self, net_size: usize) -> Result<(BoardState, Komi), ApiError> {
        let komi = Komi::new(self.komi).map_err(|e| ApiError::unprocessable(e.to_string()))?;
        let size = self.size.unwrap_or(net_size);
        if size != net_size {
            return Err(ApiError::unprocessable(format!("the active net plays {net_size}x{net_size}")));
        }
        let to_move = match &self.to_move {
            None => None,
            Some(c) => Some(c.parse::<Color>().map_err(|_| ApiError::unprocessable(format!("bad colour {c:?}")))?),
        };
        let state = match &self.layout {
            Some(rows) => {
                if !self.moves.is_empty() {
                    return Err(ApiError::unprocessable("give either moves or layout, not both"));
                }
                let rows: Vec<&str> = rows.iter().map(String::as_str).collect();
                let state = BoardState::from_layout(&rows, to_move.unwrap_or(Color::Black))
                    .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e.to_string()))?;
                if state.size() != net_size {
                    return Err(ApiError::unprocessable(format!("the active net plays {net_size}x{net_size}")));
                }
                state
            }
            None => {
                let mut state = BoardState::new(size).map_err(|e| ApiError::unprocessable(e.to_string()))?;
                for (i, text) in self.moves.iter().enumerate() {
                    let illegal = |e: String| ApiError { status: StatusCode::BAD_REQUEST, message: e, move_index: Some(i) };
                    let mv = Move::from_gtp(text, size).map_err(|e| illegal(e.to_string()))?;
                    if mv == Move::Resign {
                        return Err(illegal("resign is not a board move".into()));
                    }
                    state = state.play(mv).map_err(|e| illegal(format!("illegal move {text}: {e}")))?;
                }
                if to_move.is_some_and(|c| c != state.to_move()) {
                    return Err(ApiError::new(StatusCode::BAD_REQUEST, "to_move disagrees with the move sequence"));
                }
                state
            }
        };
        Ok((state, komi))
    }
}

fn default_seed() -> u64 {
    0
}

fn default_curve_range() -> f64 {
    15.0
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct AnalyzeRequest {
    #[serde(flatten)]
    pub position: PositionRequest,
    #[serde(default)]
    pub visits: u32,
    #[serde(default)]
    pub lambdas: Vec<f64>,
    #[serde(default = "default_curve_range")]
    pub curve_range: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct GenmoveRequest {
    #[serde(flatten)]
    pub position: PositionRequest,
    #[serde(default)]
    pub lambda: f64,
    pub visits: u32,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CurvePoint {
    pub x: f64,
    pub winrate: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MovePrior {
    #[serde(rename = "move")]
    pub mv: String,
    pub prior: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ChildReport {
    #[serde(rename = "move")]
    pub mv: String,
    pub visits: u32,
    pub q: Option<f64>,
    pub prior: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StatsReport {
    pub root_visits: u32,
    pub alpha: f64,
    pub beta: f64,
    pub root_value: f64,
    pub xbar: f64,
    pub children: Vec<ChildReport>,
}

impl StatsReport {
    fn new(stats: &SearchStats, size: usize) -> StatsReport {
        StatsReport {
            root_visits: stats.root_visits,
            alpha: stats.root_alpha,
            beta: stats.root_beta,
            root_value: stats.root_value,
            xbar: stats.xbar,
            children: stats
                .children
                .iter()
                .map(|c| ChildReport { mv: c.mv.to_gtp(size), visits: c.visits, q: c.q, prior: c.prior })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LambdaInfo {
    pub lambda: f64,
    pub xbar: f64,
    #[serde(rename = "move")]
    pub mv: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AnalysisResponse {
    pub to_move: String,
    pub komi: f64,
    pub alpha: f64,
    pub beta: f64,
    /// `rho(0)`, the winrate of the side to move at the game komi.
    pub winrate: f64,
    pub winrate_curve: Vec<CurvePoint>,
    pub policy_top: Vec<MovePrior>,
    /// Search with λ = 0; absent when `visits` is 0.
    pub search_stats: Option<StatsReport>,
    pub lambda_info: Vec<LambdaInfo>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GenmoveResponse {
    #[serde(rename = "move")]
    pub mv: String,
    pub stats: StatsReport,
}

/// Argmax search, no noise, at the requested λ and budget.
pub fn request_search_config(visits: u32, lambda: f64) -> SearchConfig {
    SearchConfig { max_visits: visits, lambda, ..SearchConfig::default() }
}

fn check_visits(state: &AppState, visits: u32) -> Result<(), ApiError> {
    if visits > state.visit_cap {
        return Err(ApiError::unprocessable(format!("visits {visits} exceeds the cap of {}", state.visit_cap)));
    }
    Ok(())
}

fn check_lambda(lambda: f64) -> Result<(), ApiError> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(ApiError::unprocessable(format!("lambda {lambda} outside [0, 1]")));
    }
    Ok(())
}

fn active_net(state: &AppState) -> Result<Arc<LoadedNet>, ApiError> {
    state.active().ok_or_else(|| ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "no net loaded"))
}

fn internal(e: impl ToString) -> ApiError {
    ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
}

pub fn analyze(state: &AppState, req: &AnalyzeRequest) -> Result<AnalysisResponse, ApiError> {
    check_visits(state, req.visits)?;
    req.lambdas.iter().try_for_each(|&l| check_lambda(l))?;
    if !(req.curve_range > 0.0 && req.curve_range.is_finite()) {
        return Err(ApiError::unprocessable("curve_range must be positive"));
    }
    let net = active_net(state)?;
    let evaluator = &net.evaluator;
    let size = evaluator.board_size().expect("net evaluators know their size");
    let (position, komi) = req.position.build(size)?;
    if position.is_over() && (req.visits > 0 || !req.lambdas.is_empty()) {
        return Err(ApiError::unprocessable("the game is over; nothing to search"));
    }

    let eval = evaluator.evaluate(&position).map_err(internal)?;
    let kbar = KomiContext::new(komi, position.to_move()).signed_komi();
    let winrate_curve = (0..CURVE_POINTS)
        .map(|i| {
            let x = -req.curve_range + 2.0 * req.curve_range * i as f64 / (CURVE_POINTS - 1) as f64;
            CurvePoint { x, winrate: eval.params.rho(x, kbar) }
        })
        .collect();
    let mut policy: Vec<(usize, f64)> = eval.policy.iter().copied().enumerate().filter(|&(i, _)| position.is_legal(Move::from_index(i, size))).collect();
    policy.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let policy_top = policy.iter().take(POLICY_TOP).map(|&(i, p)| MovePrior { mv: Move::from_index(i, size).to_gtp(size), prior: p }).collect();

    let search_stats = if req.visits > 0 {
        let (_, stats) = seeded_genmove(&position, komi, &request_search_config(req.visits, 0.0), evaluator, req.seed).map_err(internal)?;
        Some(StatsReport::new(&stats, size))
    } else {
        None
    };
    let lambda_info = req
        .lambdas
        .iter()
        .map(|&lambda| {
            let (mv, stats) = seeded_genmove(&position, komi, &request_search_config(req.visits.max(1), lambda), evaluator, req.seed).map_err(internal)?;
            Ok(LambdaInfo { lambda, xbar: stats.xbar, mv: mv.to_gtp(size) })
        })
        .collect::<Result<_, ApiError>>()?;

    Ok(AnalysisResponse {
        to_move: position.to_move().to_string(),
        komi: komi.value(),
        alpha: eval.params.alpha(),
        beta: eval.params.beta(),
        winrate: eval.params.rho(0.0, kbar),
        winrate_curve,
        policy_top,
        search_stats,
        lambda_info,
    })
}

pub fn genmove(state: &AppState, req: &GenmoveRequest) -> Result<GenmoveResponse, ApiError> {
    check_visits(state, req.visits)?;
    check_lambda(req.lambda)?;
    if req.visits == 0 {
        return Err(ApiError::unprocessable("visits must be positive"));
    }
    let net = active_net(state)?;
    let size = net.evaluator.board_size().expect("net evaluators know their size");
    let (position, komi) = req.position.build(size)?;
    if position.is_over() {
        return Err(ApiError::unprocessable("the game is over"));
    }
    let (mv, stats) = seeded_genmove(&position, komi, &request_search_config(req.visits, req.lambda), &net.evaluator, req.seed).map_err(internal)?;
    Ok(GenmoveResponse { mv: mv.to_gtp(size), stats: StatsReport::new(&stats, size) })
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct NetsResponse {
    pub active: Option<String>,
    pub available: Vec<String>,
}

pub fn list_nets(state: &AppState) -> NetsResponse {
    let mut available = Vec::new();
    if let Some(dir) = &state.nets_dir {
        if let Ok(entries) = std::fs::read_dir(dir) {
            available = entries
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "weights"))
                .map(|p| p.display().to_string())
                .collect();
            available.sort();
        }
    }
    NetsResponse { active: state.active().map(|n| n.path.clone()), available }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct LoadRequest {
    pub path: String,
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.map_err(internal)?
}

async fn analyze_handler(State(state): State<Arc<AppState>>, Json(req): Json<AnalyzeRequest>) -> Result<Json<AnalysisResponse>, ApiError> {
    blocking(move || analyze(&state, &req)).await.map(Json)
}

async fn genmove_handler(State(state): State<Arc<AppState>>, Json(req): Json<GenmoveRequest>) -> Result<Json<GenmoveResponse>, ApiError> {
    blocking(move || genmove(&state, &req)).await.map(Json)
}

async fn nets_handler(State(state): State<Arc<AppState>>) -> Json<NetsResponse> {
    Json(list_nets(&state))
}

async fn load_handler(State(state): State<Arc<AppState>>, Json(req): Json<LoadRequest>) -> Result<Json<NetsResponse>, ApiError> {
    blocking(move || {
        state.load(Path::new(&req.path))?;
        Ok(list_nets(&state))
    })
    .await
    .map(Json)
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/analyze", post(analyze_handler))
        .route("/genmove", post(genmove_handler))
        .route("/nets", get(nets_handler))
        .route("/nets/load", post(load_handler))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

/// Serves until Ctrl-C.
pub async fn serve(state: Arc<AppState>, port: u16) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
