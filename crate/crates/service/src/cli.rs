//! `sai` command line: GTP engine, self-play, training, matches, panel
//! evaluation and the analysis server.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{CommandFactory, Parser, Subcommand};

use sai::evaluation::{self, fit_panel_weights, mle_elo, panel_evaluate, three_cycles, MatchConfig, MatchResult, PanelWeights};
use sai::gtp::{gtp_loop, Engine};
use sai::mcts::{Evaluator, NetEvaluator, SearchConfig, SymmetryMode, UniformEvaluator};
use sai::network::{load_weights, save_weights, Network, NetworkConfig};
use sai::selfplay::{generation_dir, run_generation, KomiSource, SelfplayConfig};
use sai::training::{generations, load_window, train_network, TrainingConfig};
use sai::Komi;

use crate::api::{self, AppState};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "sai", version, about = "Multi-komi Go engine with sigmoid winrate curves", arg_required_else_help = true)]
pub struct Cli {
    /// Key-value file of default flag values (`key = value`, one per line).
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// GTP engine on stdin/stdout.
    Gtp {
        /// Weight file; without one the engine searches with a flat evaluator.
        #[arg(long)]
        net: Option<PathBuf>,
        #[arg(long, default_value_t = 400)]
        visits: u32,
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
        #[arg(long, default_value_t = 7)]
        size: usize,
        #[arg(long, default_value_t = 19)]
        max_size: usize,
    },
    /// Play one generation of self-play games.
    Selfplay {
        /// Weight file; without one a random net is drawn from the seed.
        #[arg(long)]
        net: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        games: usize,
        #[arg(long, default_value_t = 0.025)]
        c_branch: f64,
        #[arg(long, default_value = "data")]
        data: PathBuf,
        /// Generation id; defaults to the one after the newest present.
        #[arg(long)]
        generation: Option<u32>,
        #[arg(long, default_value_t = 100)]
        visits: u32,
        /// Fixed komi; otherwise sampled from the net (9.5 for a random net).
        #[arg(long)]
        komi: Option<f64>,
        #[arg(long, default_value_t = 0)]
        threads: usize,
        #[arg(long, default_value_t = 1)]
        blocks: usize,
        #[arg(long, default_value_t = 16)]
        filters: usize,
    },
    /// Train a net on the most recent self-play positions.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Starting weights; without them a random net is drawn from the seed.
        #[arg(long)]
        net: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        #[arg(long, default_value_t = 32)]
        batch: usize,
        #[arg(long, default_value_t = 0.01)]
        lr: f64,
        #[arg(long, default_value_t = 0.9)]
        momentum: f64,
        #[arg(long, default_value_t = 60_000)]
        window: usize,
        #[arg(long, default_value_t = 1)]
        blocks: usize,
        #[arg(long, default_value_t = 16)]
        filters: usize,
    },
    /// Match between two nets with alternating colours.
    Match {
        #[arg(long)]
        net_a: PathBuf,
        #[arg(long)]
        net_b: PathBuf,
        #[arg(long, default_value_t = 100)]
        games: usize,
        #[arg(long, default_value_t = 9.5)]
        komi: f64,
        #[arg(long, default_value_t = 100)]
        visits: u32,
        /// Result lines are appended here.
        #[arg(long)]
        results: Option<PathBuf>,
    },
    /// Round robin over the nets of a manifest, with maximum-likelihood Elo.
    Tournament {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        results: Option<PathBuf>,
    },
    /// Panel evaluation.
    #[command(subcommand)]
    Panel(PanelCommand),
    /// HTTP analysis service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long)]
        net: Option<PathBuf>,
        /// Directory listed by GET /nets.
        #[arg(long)]
        nets_dir: Option<PathBuf>,
        #[arg(long, default_value_t = api::DEFAULT_VISIT_CAP)]
        visit_cap: u32,
    },
}

#[derive(Debug, Subcommand)]
pub enum PanelCommand {
    /// Fit weights from a history of White-side win-rate rows.
    Fit {
        /// One row per line, rates separated by commas or spaces.
        #[arg(long)]
        history: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a net, or a precomputed row, against fitted weights.
    Eval {
        #[arg(long)]
        weights: PathBuf,
        #[arg(long, conflicts_with = "net")]
        row: Option<String>,
        #[arg(long, requires = "panel")]
        net: Option<PathBuf>,
        /// Manifest listing the panel nets in column order.
        #[arg(long)]
        panel: Option<PathBuf>,
    },
}

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct CliError(String);

macro_rules! fail {
    ($($t:tt)*) => { CliError(format!($($t)*)) };
}

fn err<E: std::fmt::Display>(context: &str) -> impl FnOnce(E) -> CliError + '_ {
    move |e| CliError(format!("{context}: {e}"))
}

/// `key = value` lines; blank lines and `#` comments skipped.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| fail!("line {}: expected key = value", i + 1))?;
        out.push((k.trim().replace('_', "-"), v.trim().to_string()));
    }
    Ok(out)
}

/// Appends config-file values as flags of the selected subcommand, unless
/// the command line already sets them.
fn apply_config(args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let strings: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let config = strings.iter().enumerate().find_map(|(i, a)| {
        a.strip_prefix("--config=").map(str::to_string).or_else(|| (a == "--config").then(|| strings.get(i + 1).cloned()).flatten())
    });
    let Some(config) = config else { return Ok(args) };
    let text = fs::read_to_string(&config).map_err(err(&format!("reading {config}")))?;

    let mut cmd = Cli::command();
    let mut known: BTreeSet<String> = BTreeSet::new();
    for word in strings.iter().skip(1).filter(|a| !a.starts_with('-')) {
        match cmd.find_subcommand(word.as_str()) {
            Some(sub) => cmd = sub.clone(),
            None => continue,
        }
        known = cmd.get_arguments().filter_map(|a| a.get_long().map(str::to_string)).collect();
    }
    known.insert("seed".into());
    let mut args = args;
    for (key, value) in parse_key_values(&text)? {
        let flag = format!("--{key}");
        let present = strings.iter().any(|a| *a == flag || a.starts_with(&format!("{flag}=")));
        if known.contains(&key) && !present {
            args.push(flag.into());
            args.push(value.into());
        }
    }
    Ok(args)
}

/// Entry point: parses `args` (program name first) and runs the command.
/// Returns the process exit code.
pub fn run<I: IntoIterator<Item = OsString>>(args: I) -> i32 {
    let args: Vec<OsString> = args.into_iter().collect();
    let args = match apply_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    }
}

fn load_net(path: &Path) -> Result<Network, CliError> {
    load_weights(path).map_err(err(&format!("loading {}", path.display())))
}

fn net_evaluator(path: &Path) -> Result<NetEvaluator, CliError> {
    Ok(NetEvaluator::new(Arc::new(load_net(path)?), SymmetryMode::Average))
}

fn komi(value: f64) -> Result<Komi, CliError> {
    Komi::new(value).map_err(err("komi"))
}

fn small_net(blocks: usize, filters: usize) -> NetworkConfig {
    NetworkConfig { blocks, filters, ..NetworkConfig::default() }
}

fn append_results(path: Option<&Path>, results: &[MatchResult]) -> Result<(), CliError> {
    if let Some(path) = path {
        let mut f = OpenOptions::new().create(true).append(true).open(path).map_err(err(&format!("opening {}", path.display())))?;
        for r in results {
            writeln!(f, "{r}").map_err(err("writing results"))?;
        }
    }
    Ok(())
}

/// Tournament or panel manifest: `net = <path>` lines plus optional
/// `games`, `komi` and `visits`.
pub struct Manifest {
    pub nets: Vec<PathBuf>,
    pub games: usize,
    pub komi: f64,
    pub visits: u32,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Manifest, CliError> {
        let text = fs::read_to_string(path).map_err(err(&format!("reading {}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut m = Manifest { nets: Vec::new(), games: 20, komi: 9.5, visits: 100 };
        for (key, value) in parse_key_values(&text)? {
            let bad = |_| fail!("manifest: bad value for {key}: {value}");
            match key.as_str() {
                "net" => m.nets.push(base.join(&value)),
                "games" => m.games = value.parse().map_err(bad)?,
                "komi" => m.komi = value.parse().map_err(|_| fail!("manifest: bad komi {value}"))?,
                "visits" => m.visits = value.parse().map_err(bad)?,
                _ => return Err(fail!("manifest: unknown key {key}")),
            }
        }
        Ok(m)
    }
}

fn parse_row(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| fail!("bad win rate {s:?}")))
        .collect()
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let seed = cli.seed;
    match cli.command {
        Command::Gtp { net, visits, lambda, size, max_size } => {
            let evaluator: Arc<dyn Evaluator> = match &net {
                Some(p) => Arc::new(net_evaluator(p)?),
                None => Arc::new(UniformEvaluator::neutral()),
            };
            let size = evaluator.board_size().unwrap_or(size);
            let mut engine = Engine::new(evaluator, size, seed).map_err(err("engine"))?;
            engine.search = SearchConfig { max_visits: visits, lambda, ..SearchConfig::default() };
            engine.search.validate().map_err(err("search configuration"))?;
            engine.max_size = max_size;
            gtp_loop(&mut engine, io::stdin().lock(), io::stdout().lock()).map_err(err("gtp"))
        }
        Command::Selfplay { net, games, c_branch, data, generation, visits, komi: fixed, threads, blocks, filters } => {
            let network = match &net {
                Some(p) => load_net(p)?,
                None => Network::random(small_net(blocks, filters), seed).map_err(err("network"))?,
            };
            let komi_source = match (fixed, &net) {
                (Some(k), _) => KomiSource::Fixed(komi(k)?),
                (None, Some(_)) => KomiSource::NetSampled,
                (None, None) => KomiSource::Fixed(komi(9.5)?),
            };
            let size = network.config().board_size;
            let cfg = SelfplayConfig {
                board_size: size,
                input_planes: network.config().input_planes,
                c_branch,
                games_per_generation: games,
                komi_source,
                search: SearchConfig { max_visits: visits, ..SearchConfig::selfplay() },
                max_moves: 3 * size * size,
                rng_seed: seed,
                threads,
                ..SelfplayConfig::default()
            };
            let id = match generation {
                Some(g) => g,
                None => generations(&data).map_err(err("data directory"))?.last().map_or(0, |g| g + 1),
            };
            let dir = generation_dir(&data, id);
            fs::create_dir_all(&dir).map_err(err("creating generation directory"))?;
            save_weights(&network, &dir.join("net.weights")).map_err(err("saving net"))?;
            let evaluator = NetEvaluator::new(Arc::new(network), SymmetryMode::Hashed);
            let out = run_generation(&evaluator, &cfg, &data, id).map_err(err("self-play"))?;
            print!("{}", out.report.to_text());
            println!("directory={}", dir.display());
            Ok(())
        }
        Command::Train { data, out, net, steps, batch, lr, momentum, window, blocks, filters } => {
            let mut network = match &net {
                Some(p) => load_net(p)?,
                None => Network::random(small_net(blocks, filters), seed).map_err(err("network"))?,
            };
            let latest = *generations(&data).map_err(err("data directory"))?.last().ok_or_else(|| fail!("no generations under {}", data.display()))?;
            let records = load_window(&data, latest, window).map_err(err("loading records"))?;
            let cfg = TrainingConfig { steps, batch_size: batch, lr, momentum, window, seed, ..TrainingConfig::default() };
            let losses = train_network(&mut network, &records, &cfg).map_err(err("training"))?;
            save_weights(&network, &out).map_err(err("saving net"))?;
            if let Some(last) = losses.last() {
                println!("records={} steps={} loss={:.6} policy={:.6} value={:.6}", records.len(), steps, last.total, last.policy, last.value);
            }
            Ok(())
        }
        Command::Match { net_a, net_b, games, komi: k, visits, results } => {
            let (a, b) = (net_evaluator(&net_a)?, net_evaluator(&net_b)?);
            let size = a.board_size().expect("net size");
            if b.board_size() != Some(size) {
                return Err(fail!("the nets play different board sizes"));
            }
            let cfg = MatchConfig::new(size, games, komi(k)?, visits, seed);
            let r = evaluation::run_match((&net_a.display().to_string(), &a), (&net_b.display().to_string(), &b), &cfg).map_err(err("match"))?;
            println!("{r}");
            append_results(results.as_deref(), std::slice::from_ref(&r))
        }
        Command::Tournament { manifest, results } => {
            let m = Manifest::read(&manifest)?;
            if m.nets.len() < 2 {
                return Err(fail!("a tournament needs at least two nets"));
            }
            let entrants = m.nets.iter().map(|p| Ok((p.display().to_string(), net_evaluator(p)?))).collect::<Result<Vec<_>, CliError>>()?;
            let size = entrants[0].1.board_size().expect("net size");
            let cfg = MatchConfig::new(size, m.games, komi(m.komi)?, m.visits, seed);
            let rs = evaluation::round_robin(&entrants, &cfg).map_err(err("tournament"))?;
            for r in &rs {
                println!("{r}");
            }
            append_results(results.as_deref(), &rs)?;
            match mle_elo(&rs, 400.0) {
                Ok(scores) => scores.iter().for_each(|(n, s)| println!("elo\t{n}\t{s:.1}")),
                Err(e) => println!("elo unavailable: {e}"),
            }
            for [a, b, c] in three_cycles(&rs) {
                println!("cycle\t{a} > {b} > {c} > {a}");
            }
            Ok(())
        }
        Command::Panel(PanelCommand::Fit { history, out }) => {
            let text = fs::read_to_string(&history).map_err(err(&format!("reading {}", history.display())))?;
            let rows = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#')).map(parse_row).collect::<Result<Vec<_>, _>>()?;
            let w = fit_panel_weights(&rows).map_err(err("panel fit"))?;
            fs::write(&out, w.to_text()).map_err(err(&format!("writing {}", out.display())))?;
            print!("{}", w.to_text());
            Ok(())
        }
        Command::Panel(PanelCommand::Eval { weights, row, net, panel }) => {
            let w = PanelWeights::from_text(&fs::read_to_string(&weights).map_err(err(&format!("reading {}", weights.display())))?)
                .map_err(err("panel weights"))?;
            let row = match (row, net, panel) {
                (Some(r), _, _) => parse_row(&r)?,
                (None, Some(net), Some(panel)) => {
                    let m = Manifest::read(&panel)?;
                    let candidate = net_evaluator(&net)?;
                    let members = m.nets.iter().map(|p| net_evaluator(p)).collect::<Result<Vec<_>, _>>()?;
                    let size = candidate.board_size().expect("net size");
                    let cfg = MatchConfig::new(size, m.games, komi(m.komi)?, m.visits, seed);
                    evaluation::panel_row(&candidate, &members, &cfg).map_err(err("panel matches"))?
                }
                _ => return Err(fail!("panel eval needs --row or --net with --panel")),
            };
            let score = panel_evaluate(&row, &w).map_err(err("panel eval"))?;
            println!("row={}", row.iter().map(f64::to_string).collect::<Vec<_>>().join(","));
            println!("score={score}");
            Ok(())
        }
        Command::Serve { port, net, nets_dir, visit_cap } => {
            let state = Arc::new(AppState::new(visit_cap, nets_dir));
            if let Some(p) = &net {
                state.load(p).map_err(err(&format!("loading {}", p.display())))?;
            }
            let runtime = tokio::runtime::Runtime::new().map_err(err("runtime"))?;
            runtime.block_on(api::serve(state, port)).map_err(err("server"))
        }
    }
}
