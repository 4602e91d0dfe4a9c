//! Closed-form mathematics of the sigmoid winrate curve.
//!
//! A position is summarised by a pair `(alpha, beta)`: the current player's
//! expected lead in board points and the steepness of the winrate curve.
//! With signed komi `k̄` (komi from the current player's point of view) the
//! winrate after a virtual bonus of `x` points is
//!
//! ```text
//! rho(x) = 1 / (1 + exp(-beta * (alpha + k̄ + x)))
//! ```
//!
//! Everything the search and the self-play pipeline need (interval averages,
//! the λ-dependent correction bound, komi samplers) is derived from `rho`.

use thiserror::Error;

use crate::goban::{Color, Komi};

pub const BETA_MIN: f64 = 1e-4;
pub const BETA_MAX: f64 = 1e3;

/// Below this `|beta * y|` the interval average switches to its Taylor
/// expansion around `y = 0`.
const SERIES_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum SigmoidError {
    #[error("beta must be positive, got {0}")]
    NonPositiveBeta(f64),
    #[error("non-finite parameter {0}")]
    NonFinite(f64),
    #[error("probability {0} outside (0, 1)")]
    ProbabilityOutOfRange(f64),
    #[error("lambda {0} outside [0, 1]")]
    LambdaOutOfRange(f64),
}

/// Standard logistic function, stable for large `|z|`.
pub fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(logistic(z))` without overflow or loss of precision in either tail.
pub fn log_logistic(z: f64) -> f64 {
    if z >= 0.0 {
        -(-z).exp().ln_1p()
    } else {
        z - z.exp().ln_1p()
    }
}

pub fn logit(p: f64) -> f64 {
    p.ln() - (-p).ln_1p()
}

fn check_probability(u: f64) -> Result<(), SigmoidError> {
    if u > 0.0 && u < 1.0 {
        Ok(())
    } else {
        Err(SigmoidError::ProbabilityOutOfRange(u))
    }
}

/// `1 / (1 + exp(-beta * (alpha + x)))`.
pub fn sigma(x: f64, alpha: f64, beta: f64) -> Result<f64, SigmoidError> {
    if !(beta > 0.0) {
        return Err(SigmoidError::NonPositiveBeta(beta));
    }
    Ok(logistic(beta * (alpha + x)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmoidParams {
    alpha: f64,
    beta: f64,
}

impl SigmoidParams {
    /// Validates `beta > 0` and clamps it into `[BETA_MIN, BETA_MAX]`.
    pub fn new(alpha: f64, beta: f64) -> Result<SigmoidParams, SigmoidError> {
        if !alpha.is_finite() {
            return Err(SigmoidError::NonFinite(alpha));
        }
        if beta.is_nan() || beta <= 0.0 {
            return Err(SigmoidError::NonPositiveBeta(beta));
        }
        Ok(SigmoidParams { alpha, beta: beta.clamp(BETA_MIN, BETA_MAX) })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Winrate of the current player after a bonus of `x` points.
    pub fn rho(&self, x: f64, signed_komi: f64) -> f64 {
        logistic(self.beta * (self.alpha + (x + signed_komi)))
    }

    /// Average of `rho` over `[0, y]` (or `[y, 0]`).
    pub fn mu(&self, y: f64, signed_komi: f64) -> f64 {
        mu_unchecked(y, self.alpha, self.beta, signed_komi)
    }
}

/// The game komi seen from the side to move.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KomiContext {
    pub komi: Komi,
    pub current_player: Color,
}

impl KomiContext {
    pub fn new(komi: Komi, current_player: Color) -> KomiContext {
        KomiContext { komi, current_player }
    }

    /// `+komi` when White is to move, `-komi` when Black is.
    pub fn signed_komi(&self) -> f64 {
        match self.current_player {
            Color::White => self.komi.value(),
            Color::Black => -self.komi.value(),
        }
    }
}

pub fn rho(x: f64, ctx: &KomiContext, params: &SigmoidParams) -> f64 {
    params.rho(x, ctx.signed_komi())
}

/// The correction `x` with `rho(x) = u`.
pub fn invert_rho(u: f64, ctx: &KomiContext, params: &SigmoidParams) -> Result<f64, SigmoidError> {
    check_probability(u)?;
    Ok(logit(u) / params.beta - params.alpha - ctx.signed_komi())
}

fn mu_unchecked(y: f64, alpha: f64, beta: f64, signed_komi: f64) -> f64 {
    if (beta * y).abs() < SERIES_THRESHOLD {
        mu_series(y, alpha + signed_komi, beta)
    } else {
        mu_closed(y, alpha + signed_komi, beta)
    }
}

/// Third-order expansion: `rho` integrated term by term and divided by `y`.
fn mu_series(y: f64, shift: f64, beta: f64) -> f64 {
    let s = logistic(beta * shift);
    let d1 = beta * s * (1.0 - s);
    let d2 = beta * d1 * (1.0 - 2.0 * s);
    let d3 = beta * beta * d1 * (1.0 - 6.0 * s + 6.0 * s * s);
    s + y * (d1 / 2.0 + y * (d2 / 6.0 + y * d3 / 24.0))
}

fn mu_closed(y: f64, shift: f64, beta: f64) -> f64 {
    let end = shift + y;
    let a = shift.abs();
    let b = end.abs();
    // (b - a) / 2y is exactly ±1/2 unless the interval crosses the midpoint.
    let linear = if shift >= 0.0 && end >= 0.0 {
        1.0
    } else if shift <= 0.0 && end <= 0.0 {
        0.0
    } else {
        0.5 + (b - a) / (2.0 * y)
    };
    linear + (log_logistic(beta * a) - log_logistic(beta * b)) / (beta * y)
}

/// Average of `sigma(x + signed_komi, alpha_hat, beta_hat)` for `x` between
/// 0 and `y`; equals the winrate itself at `y = 0`.
pub fn mu(y: f64, alpha_hat: f64, beta_hat: f64, signed_komi: f64) -> Result<f64, SigmoidError> {
    if !(beta_hat > 0.0) {
        return Err(SigmoidError::NonPositiveBeta(beta_hat));
    }
    for v in [y, alpha_hat, beta_hat, signed_komi] {
        if !v.is_finite() {
            return Err(SigmoidError::NonFinite(v));
        }
    }
    Ok(mu_unchecked(y, alpha_hat, beta_hat, signed_komi))
}

/// The correction `x̄` at which the winrate equals
/// `(1 - lambda) * rho(0) + lambda / 2`. Positive when the current player is
/// behind, negative when ahead, zero at `lambda = 0`.
pub fn lambda_extremum(lambda: f64, ctx: &KomiContext, params: &SigmoidParams) -> Result<f64, SigmoidError> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(SigmoidError::LambdaOutOfRange(lambda));
    }
    Ok(lambda_extremum_unchecked(lambda, ctx.signed_komi(), params))
}

pub(crate) fn lambda_extremum_unchecked(lambda: f64, signed_komi: f64, params: &SigmoidParams) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    let shift = params.alpha + signed_komi;
    if lambda == 1.0 {
        return -shift;
    }
    let target = (1.0 - lambda) * params.rho(0.0, signed_komi) + 0.5 * lambda;
    logit(target) / params.beta - shift
}

/// Komi for a fresh game: `0.5 + floor(alpha - logit(u) / beta)`, i.e. an
/// approximately logistic draw centred on the komi the evaluator considers
/// fair for the empty board (`params` evaluated with Black to move).
pub fn sample_komi(params: &SigmoidParams, u: f64) -> Result<Komi, SigmoidError> {
    check_probability(u)?;
    let raw = params.alpha - logit(u) / params.beta;
    Ok(Komi::from_floor(raw.floor() as i64))
}

/// Komi that makes the branching position even for the evaluator:
/// `0.5 + floor(alpha)` with Black to move, `0.5 + floor(-alpha)` with White.
pub fn branch_komi(params: &SigmoidParams, current_player: Color) -> Komi {
    let lead = match current_player {
        Color::Black => params.alpha,
        Color::White => -params.alpha,
    };
    Komi::from_floor(lead.floor() as i64)
}
