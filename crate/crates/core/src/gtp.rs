//! GTP v2 engine session with a few `sai-` extensions for the sigmoid
//! evaluation.

use std::io::{self, BufRead, Write};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::goban::{BoardState, Color, Komi, Move, MAX_SIZE, MIN_SIZE};
use crate::mcts::{genmove, Evaluator, SearchConfig, SearchError, SearchStats};
use crate::sigmoid::KomiContext;

pub const COMMANDS: &[&str] = &[
    "protocol_version",
    "name",
    "version",
    "known_command",
    "list_commands",
    "quit",
    "boardsize",
    "clear_board",
    "komi",
    "play",
    "genmove",
    "undo",
    "final_score",
    "showboard",
    "time_settings",
    "time_left",
    "sai-params",
    "sai-lambda",
    "sai-winrate",
];

/// Searches `state` with a generator seeded from `seed` alone, so equal
/// requests give equal moves wherever they come from.
pub fn seeded_genmove<E: Evaluator + ?Sized>(
    state: &BoardState,
    komi: Komi,
    cfg: &SearchConfig,
    evaluator: &E,
    seed: u64,
) -> Result<(Move, SearchStats), SearchError> {
    genmove(state, komi, cfg, evaluator, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Result line for an area score (Black minus White) at `komi`.
pub fn score_text(area: i32, komi: Komi) -> String {
    let margin = f64::from(area) - komi.value();
    if margin > 0.0 {
        format!("B+{margin}")
    } else {
        format!("W+{}", -margin)
    }
}

pub struct Engine {
    evaluator: Arc<dyn Evaluator>,
    pub search: SearchConfig,
    pub seed: u64,
    /// Largest board `boardsize` accepts.
    pub max_size: usize,
    size: usize,
    komi: Komi,
    moves: Vec<Move>,
    state: BoardState,
    resigned: Option<Color>,
}

enum Reply {
    Ok(String),
    Err(String),
    Quit,
}

impl Engine {
    /// λ 0, no noise, argmax moves.
    pub fn new(evaluator: Arc<dyn Evaluator>, size: usize, seed: u64) -> Result<Engine, SearchError> {
        Ok(Engine {
            evaluator,
            search: SearchConfig::default(),
            seed,
            max_size: MAX_SIZE,
            size,
            komi: Komi::default(),
            moves: Vec::new(),
            state: BoardState::new(size)?,
            resigned: None,
        })
    }

    pub fn state(&self) -> &BoardState {
        &self.state
    }

    pub fn komi(&self) -> Komi {
        self.komi
    }

    /// Handles one command line; `None` for blank and comment lines.
    pub fn handle(&mut self, line: &str) -> Option<(String, bool)> {
        let line = line.split('#').next().unwrap_or("").replace('\t', " ");
        let mut words = line.split_whitespace().peekable();
        let id = words.next_if(|w| w.chars().all(|c| c.is_ascii_digit())).unwrap_or("").to_string();
        let command = words.next()?;
        let args: Vec<&str> = words.collect();
        let (text, quit) = match self.execute(command, &args) {
            Reply::Ok(s) => (format!("={id} {s}"), false),
            Reply::Err(s) => (format!("?{id} {s}"), false),
            Reply::Quit => (format!("={id}"), true),
        };
        Some((format!("{}\n\n", text.trim_end()), quit))
    }

    fn execute(&mut self, command: &str, args: &[&str]) -> Reply {
        use Reply::{Err, Ok};
        match command {
            "protocol_version" => Ok("2".into()),
            "name" => Ok("sai".into()),
            "version" => Ok(env!("CARGO_PKG_VERSION").into()),
            "known_command" => Ok(COMMANDS.contains(&args.first().copied().unwrap_or("")).to_string()),
            "list_commands" => Ok(COMMANDS.join("\n")),
            "quit" => Reply::Quit,
            "boardsize" => match args.first().and_then(|a| a.parse::<usize>().ok()) {
                None => Err("boardsize needs an integer".into()),
                Some(n) if n < MIN_SIZE || n > self.max_size || self.evaluator.board_size().is_some_and(|m| m != n) => {
                    Err("unacceptable size".into())
                }
                Some(n) => {
                    self.size = n;
                    self.reset();
                    Ok(String::new())
                }
            },
            "clear_board" => {
                self.reset();
                Ok(String::new())
            }
            "komi" => match args.first().map(|a| a.parse::<Komi>()) {
                Some(Result::Ok(k)) => {
                    self.komi = k;
                    Ok(String::new())
                }
                _ => Err("komi must be a half-integer".into()),
            },
            "play" => {
                let (Some(color), Some(vertex)) = (args.first(), args.get(1)) else {
                    return Err("syntax: play <color> <vertex>".into());
                };
                match self.play(color, vertex) {
                    Result::Ok(()) => Ok(String::new()),
                    Result::Err(e) => Err(e),
                }
            }
            "genmove" => match self.genmove(args.first().copied().unwrap_or("")) {
                Result::Ok(mv) => Ok(mv.to_gtp(self.size)),
                Result::Err(e) => Err(e),
            },
            "undo" => match self.moves.pop() {
                None => Err("cannot undo".into()),
                Some(_) => {
                    self.resigned = None;
                    self.state = crate::goban::replay(self.size, &self.moves).expect("replaying legal moves");
                    Ok(String::new())
                }
            },
            "final_score" => Ok(match self.resigned {
                Some(c) => format!("{}+Resign", c.opposite().letter()),
                None => score_text(self.state.area_score(), self.komi),
            }),
            "showboard" => Ok(format!("\n{}", self.state)),
            "time_settings" | "time_left" => Ok(String::new()),
            "sai-params" => match self.evaluator.evaluate(&self.state) {
                Result::Ok(e) => Ok(format!("{} {}", e.params.alpha(), e.params.beta())),
                Result::Err(e) => Err(e.to_string()),
            },
            "sai-lambda" => match args.first().and_then(|a| a.parse::<f64>().ok()) {
                Some(l) if (0.0..=1.0).contains(&l) => {
                    self.search.lambda = l;
                    Ok(String::new())
                }
                _ => Err("lambda must be a number in [0, 1]".into()),
            },
            "sai-winrate" => {
                let Some(x) = args.first().map_or(Some(0.0), |a| a.parse::<f64>().ok()) else {
                    return Err("sai-winrate takes a real komi correction".into());
                };
                match self.evaluator.evaluate(&self.state) {
                    Result::Ok(e) => {
                        let kbar = KomiContext::new(self.komi, self.state.to_move()).signed_komi();
                        Ok(e.params.rho(x, kbar).to_string())
                    }
                    Result::Err(e) => Err(e.to_string()),
                }
            }
            _ => Err("unknown command".into()),
        }
    }

    fn reset(&mut self) {
        self.moves.clear();
        self.resigned = None;
        self.state = BoardState::new(self.size).expect("size validated");
    }

    fn check_turn(&self, color: &str) -> Result<Color, String> {
        let color: Color = color.parse().map_err(|_| format!("invalid color {color:?}"))?;
        if self.resigned.is_some() || self.state.is_over() {
            return Err("game is over".into());
        }
        if color != self.state.to_move() {
            return Err(format!("it is {}'s turn", self.state.to_move()));
        }
        Ok(color)
    }

    fn play(&mut self, color: &str, vertex: &str) -> Result<(), String> {
        let color = self.check_turn(color)?;
        let mv = Move::from_gtp(vertex, self.size).map_err(|e| e.to_string())?;
        if mv == Move::Resign {
            self.resigned = Some(color);
            return Ok(());
        }
        self.state = self.state.play(mv).map_err(|e| format!("illegal move: {e}"))?;
        self.moves.push(mv);
        Ok(())
    }

    fn genmove(&mut self, color: &str) -> Result<Move, String> {
        self.check_turn(color)?;
        let (mv, _) = seeded_genmove(&self.state, self.komi, &self.search, &*self.evaluator, self.seed).map_err(|e| e.to_string())?;
        self.state = self.state.play(mv).map_err(|e| e.to_string())?;
        self.moves.push(mv);
        Ok(mv)
    }
}

/// Reads commands until `quit` or end of input. Bad commands get an error
/// reply and never end the session.
pub fn gtp_loop<R: BufRead, W: Write>(engine: &mut Engine, input: R, mut output: W) -> io::Result<()> {
    for line in input.lines() {
        if let Some((reply, quit)) = engine.handle(&line?) {
            output.write_all(reply.as_bytes())?;
            output.flush()?;
            if quit {
                break;
            }
        }
    }
    Ok(())
}
