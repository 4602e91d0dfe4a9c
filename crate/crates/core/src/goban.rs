//! Rules engine for N×N Go.
//!
//! Positions are immutable values: [`BoardState::play`] returns a new state.
//! Legality uses positional superko (a play may not recreate any earlier
//! whole-board position, regardless of side to move). Two consecutive passes
//! end the game, which is then scored by Tromp-Taylor area counting.

use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use thiserror::Error;

pub const MIN_SIZE: usize = 2;
pub const MAX_SIZE: usize = 19;
pub const DEFAULT_SIZE: usize = 7;

/// Number of past board layouts (including the current one) kept for
/// feature extraction.
pub const HISTORY_LAYOUTS: usize = 8;

const GTP_COLUMNS: &[u8] = b"ABCDEFGHJKLMNOPQRST";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GoError {
    #[error("board size {0} outside {MIN_SIZE}..={MAX_SIZE}")]
    InvalidSize(usize),
    #[error("point ({row}, {col}) is off the board")]
    OutOfBounds { row: usize, col: usize },
    #[error("point is occupied")]
    Occupied,
    #[error("suicide")]
    Suicide,
    #[error("play recreates an earlier position (superko)")]
    Superko,
    #[error("game is over")]
    GameOver,
    #[error("game is not over")]
    GameNotOver,
    #[error("resignation is not a board move")]
    Resign,
    #[error("komi {0} is not a half-integer")]
    InvalidKomi(f64),
    #[error("cannot parse move {0:?}")]
    BadCoordinate(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Color {
    Black,
    White,
}

impl Color {
    pub fn opposite(self) -> Color {
        match self {
            Color::Black => Color::White,
            Color::White => Color::Black,
        }
    }

    fn index(self) -> usize {
        match self {
            Color::Black => 0,
            Color::White => 1,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Color::Black => 'B',
            Color::White => 'W',
        }
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Color::Black => "black",
            Color::White => "white",
        })
    }
}

impl FromStr for Color {
    type Err = GoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "b" | "black" => Ok(Color::Black),
            "w" | "white" => Ok(Color::White),
            _ => Err(GoError::BadCoordinate(s.to_string())),
        }
    }
}

/// Komi stored as twice its value so that only half-integers are
/// representable. Positive komi is a bonus for White.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Komi(i32);

impl Komi {
    pub fn new(value: f64) -> Result<Komi, GoError> {
        let doubled = value * 2.0;
        if !doubled.is_finite() || doubled.fract() != 0.0 || (doubled as i64).rem_euclid(2) != 1 {
            return Err(GoError::InvalidKomi(value));
        }
        Ok(Komi(doubled as i32))
    }

    /// `floor + 0.5`, the only constructor used by the komi samplers.
    pub fn from_floor(floor: i64) -> Komi {
        Komi((2 * floor + 1) as i32)
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 2.0
    }

    pub fn doubled(self) -> i32 {
        self.0
    }
}

impl Default for Komi {
    fn default() -> Self {
        Komi(19)
    }
}

impl fmt::Display for Komi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

impl FromStr for Komi {
    type Err = GoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let v: f64 = s.trim().parse().map_err(|_| GoError::InvalidKomi(f64::NAN))?;
        Komi::new(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    pub row: u8,
    pub col: u8,
}

impl Point {
    pub fn new(row: usize, col: usize) -> Point {
        Point { row: row as u8, col: col as u8 }
    }

    pub fn index(self, size: usize) -> usize {
        self.row as usize * size + self.col as usize
    }

    pub fn from_index(index: usize, size: usize) -> Point {
        Point::new(index / size, index % size)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Move {
    Play(Point),
    Pass,
    Resign,
}

impl Move {
    pub fn play(row: usize, col: usize) -> Move {
        Move::Play(Point::new(row, col))
    }

    /// Index into a policy vector of length `size² + 1`; pass is last.
    /// Resign has no policy slot and maps to the pass slot.
    pub fn index(self, size: usize) -> usize {
        match self {
            Move::Play(p) => p.index(size),
            Move::Pass | Move::Resign => size * size,
        }
    }

    pub fn from_index(index: usize, size: usize) -> Move {
        if index >= size * size {
            Move::Pass
        } else {
            Move::Play(Point::from_index(index, size))
        }
    }

    /// GTP vertex, row 1 at the bottom and the column letters skipping `I`.
    pub fn to_gtp(self, size: usize) -> String {
        match self {
            Move::Pass => "pass".to_string(),
            Move::Resign => "resign".to_string(),
            Move::Play(p) => {
                format!("{}{}", GTP_COLUMNS[p.col as usize] as char, size - p.row as usize)
            }
        }
    }

    pub fn from_gtp(text: &str, size: usize) -> Result<Move, GoError> {
        let t = text.trim().to_ascii_uppercase();
        match t.as_str() {
            "PASS" => return Ok(Move::Pass),
            "RESIGN" => return Ok(Move::Resign),
            _ => {}
        }
        let bad = || GoError::BadCoordinate(text.to_string());
        let mut chars = t.chars();
        let letter = chars.next().ok_or_else(bad)?;
        let col = GTP_COLUMNS.iter().position(|&c| c as char == letter).ok_or_else(bad)?;
        let number: usize = chars.as_str().parse().map_err(|_| bad())?;
        if col >= size || number == 0 || number > size {
            return Err(bad());
        }
        Ok(Move::play(size - number, col))
    }
}

/// The eight symmetries of the square board.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Symmetry(u8);

impl Symmetry {
    pub const IDENTITY: Symmetry = Symmetry(0);

    pub fn all() -> impl Iterator<Item = Symmetry> {
        (0..8).map(Symmetry)
    }

    pub fn from_id(id: u8) -> Symmetry {
        Symmetry(id % 8)
    }

    pub fn id(self) -> u8 {
        self.0
    }

    pub fn apply(self, p: Point, size: usize) -> Point {
        let n = size - 1;
        let (mut r, mut c) = (p.row as usize, p.col as usize);
        if self.0 & 4 != 0 {
            std::mem::swap(&mut r, &mut c);
        }
        if self.0 & 1 != 0 {
            r = n - r;
        }
        if self.0 & 2 != 0 {
            c = n - c;
        }
        Point::new(r, c)
    }

    pub fn inverse(self) -> Symmetry {
        // Transposition conjugates the two flips.
        if self.0 & 4 != 0 {
            let flips = self.0 & 3;
            let swapped = ((flips & 1) << 1) | ((flips & 2) >> 1);
            Symmetry(4 | swapped)
        } else {
            self
        }
    }

    pub fn apply_index(self, index: usize, size: usize) -> usize {
        if index >= size * size {
            index
        } else {
            self.apply(Point::from_index(index, size), size).index(size)
        }
    }
}

fn zobrist_table() -> &'static [[u64; 2]] {
    static TABLE: OnceLock<Vec<[u64; 2]>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut state: u64 = 0x5A1_7A7E_C0FF_EE00;
        let mut next = || {
            // splitmix64
            state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            z ^ (z >> 31)
        };
        (0..MAX_SIZE * MAX_SIZE).map(|_| [next(), next()]).collect()
    })
}

pub type Layout = Arc<[Option<Color>]>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoardState {
    size: usize,
    stones: Layout,
    to_move: Color,
    hash: u64,
    /// Hashes of every whole-board position seen so far, including the
    /// current one.
    position_history: Vec<u64>,
    /// Previous layouts, most recent first, at most `HISTORY_LAYOUTS - 1`.
    previous: Vec<Layout>,
    consecutive_passes: u8,
    move_number: u32,
    last_move: Option<Move>,
}

impl BoardState {
    pub fn new(size: usize) -> Result<BoardState, GoError> {
        if !(MIN_SIZE..=MAX_SIZE).contains(&size) {
            return Err(GoError::InvalidSize(size));
        }
        Ok(BoardState {
            size,
            stones: vec![None; size * size].into(),
            to_move: Color::Black,
            hash: 0,
            position_history: vec![0],
            previous: Vec::new(),
            consecutive_passes: 0,
            move_number: 0,
            last_move: None,
        })
    }

    /// Builds a position from rows of `.`, `X` (Black) and `O` (White),
    /// top row first. The history holds only this position.
    pub fn from_layout(rows: &[&str], to_move: Color) -> Result<BoardState, GoError> {
        let size = rows.len();
        let mut state = BoardState::new(size)?;
        let mut stones = vec![None; size * size];
        let mut hash = 0;
        for (r, row) in rows.iter().enumerate() {
            let cells: Vec<char> = row.chars().filter(|c| !c.is_whitespace()).collect();
            if cells.len() != size {
                return Err(GoError::InvalidSize(cells.len()));
            }
            for (c, ch) in cells.into_iter().enumerate() {
                let color = match ch {
                    'X' | 'x' | 'B' => Some(Color::Black),
                    'O' | 'o' | 'W' => Some(Color::White),
                    '.' | '+' => None,
                    _ => return Err(GoError::BadCoordinate(row.to_string())),
                };
                if let Some(color) = color {
                    stones[r * size + c] = Some(color);
                    hash ^= zobrist_table()[r * size + c][color.index()];
                }
            }
        }
        state.stones = stones.into();
        state.hash = hash;
        state.position_history = vec![hash];
        state.to_move = to_move;
        for group_start in 0..size * size {
            if state.stones[group_start].is_some() && !state.group_has_liberty(&state.stones, group_start) {
                return Err(GoError::Suicide);
            }
        }
        Ok(state)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn to_move(&self) -> Color {
        self.to_move
    }

    pub fn hash(&self) -> u64 {
        self.hash
    }

    pub fn consecutive_passes(&self) -> u8 {
        self.consecutive_passes
    }

    pub fn move_number(&self) -> u32 {
        self.move_number
    }

    pub fn last_move(&self) -> Option<Move> {
        self.last_move
    }

    pub fn is_over(&self) -> bool {
        self.consecutive_passes >= 2
    }

    pub fn stone(&self, p: Point) -> Option<Color> {
        self.stones[p.index(self.size)]
    }

    pub fn stones(&self) -> &[Option<Color>] {
        &self.stones
    }

    pub fn position_history(&self) -> &[u64] {
        &self.position_history
    }

    /// Layout `age` plies ago (0 = current). `None` before the game start.
    pub fn layout(&self, age: usize) -> Option<&[Option<Color>]> {
        if age == 0 {
            Some(&self.stones)
        } else {
            self.previous.get(age - 1).map(|l| &l[..])
        }
    }

    /// Hash combining the recent layouts and side to move; identifies a
    /// network input exactly.
    pub fn feature_key(&self) -> u64 {
        let mut key = self.hash ^ if self.to_move == Color::White { 0x9E37_79B9_7F4A_7C15 } else { 0 };
        for (age, layout) in self.previous.iter().enumerate() {
            let h = layout_hash(layout);
            key = key.rotate_left(7) ^ h.wrapping_mul(0x100_0000_01B3 + age as u64);
        }
        key
    }

    fn neighbors(&self, index: usize) -> impl Iterator<Item = usize> {
        let n = self.size;
        let (r, c) = (index / n, index % n);
        let up = (r > 0).then(|| index - n);
        let down = (r + 1 < n).then(|| index + n);
        let left = (c > 0).then(|| index - 1);
        let right = (c + 1 < n).then(|| index + 1);
        [up, down, left, right].into_iter().flatten()
    }

    fn group_has_liberty(&self, stones: &[Option<Color>], start: usize) -> bool {
        let color = stones[start];
        let mut seen = vec![false; stones.len()];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(i) = stack.pop() {
            for nb in self.neighbors(i) {
                match stones[nb] {
                    None => return true,
                    c if c == color && !seen[nb] => {
                        seen[nb] = true;
                        stack.push(nb);
                    }
                    _ => {}
                }
            }
        }
        false
    }

    /// Removes the group at `start` and returns the hash delta.
    fn remove_group(&self, stones: &mut [Option<Color>], start: usize) -> u64 {
        let Some(color) = stones[start] else { return 0 };
        let mut delta = 0;
        let mut stack = vec![start];
        stones[start] = None;
        while let Some(i) = stack.pop() {
            delta ^= zobrist_table()[i][color.index()];
            for nb in self.neighbors(i) {
                if stones[nb] == Some(color) {
                    stones[nb] = None;
                    stack.push(nb);
                }
            }
        }
        delta
    }

    /// Applies `mv` without the game-over check. Superko is enforced.
    fn apply(&self, mv: Move) -> Result<BoardState, GoError> {
        match mv {
            Move::Resign => Err(GoError::Resign),
            Move::Pass => {
                let mut next = self.clone();
                next.push_previous(self.stones.clone());
                next.to_move = self.to_move.opposite();
                next.consecutive_passes = self.consecutive_passes + 1;
                next.move_number += 1;
                next.last_move = Some(Move::Pass);
                Ok(next)
            }
            Move::Play(p) => {
                let n = self.size;
                if p.row as usize >= n || p.col as usize >= n {
                    return Err(GoError::OutOfBounds { row: p.row as usize, col: p.col as usize });
                }
                let index = p.index(n);
                if self.stones[index].is_some() {
                    return Err(GoError::Occupied);
                }
                let me = self.to_move;
                let mut stones: Vec<Option<Color>> = self.stones.to_vec();
                stones[index] = Some(me);
                let mut hash = self.hash ^ zobrist_table()[index][me.index()];
                for nb in self.neighbors(index) {
                    if stones[nb] == Some(me.opposite()) && !self.group_has_liberty(&stones, nb) {
                        hash ^= self.remove_group(&mut stones, nb);
                    }
                }
                if !self.group_has_liberty(&stones, index) {
                    return Err(GoError::Suicide);
                }
                if self.position_history.contains(&hash) {
                    return Err(GoError::Superko);
                }
                let mut next = self.clone();
                next.push_previous(self.stones.clone());
                next.stones = stones.into();
                next.hash = hash;
                next.position_history.push(hash);
                next.to_move = me.opposite();
                next.consecutive_passes = 0;
                next.move_number += 1;
                next.last_move = Some(mv);
                Ok(next)
            }
        }
    }

    fn push_previous(&mut self, layout: Layout) {
        self.previous.insert(0, layout);
        self.previous.truncate(HISTORY_LAYOUTS - 1);
    }

    pub fn is_legal(&self, mv: Move) -> bool {
        !self.is_over() && mv != Move::Resign && self.apply(mv).is_ok()
    }

    /// Plays on every legal point plus pass, ordered by policy index.
    pub fn legal_moves(&self) -> Result<Vec<Move>, GoError> {
        Ok(self.legal_successors()?.into_iter().map(|(mv, _)| mv).collect())
    }

    /// Legal moves together with the states they lead to.
    pub fn legal_successors(&self) -> Result<Vec<(Move, BoardState)>, GoError> {
        if self.is_over() {
            return Err(GoError::GameOver);
        }
        let mut out = Vec::with_capacity(self.size * self.size + 1);
        for index in 0..self.size * self.size {
            if self.stones[index].is_some() {
                continue;
            }
            let mv = Move::Play(Point::from_index(index, self.size));
            if let Ok(next) = self.apply(mv) {
                out.push((mv, next));
            }
        }
        out.push((Move::Pass, self.apply(Move::Pass)?));
        Ok(out)
    }

    pub fn play(&self, mv: Move) -> Result<BoardState, GoError> {
        if self.is_over() {
            return Err(GoError::GameOver);
        }
        self.apply(mv)
    }

    /// Tromp-Taylor area score of the current layout, Black minus White,
    /// without komi. Empty regions bordering both colors are neutral.
    pub fn area_score(&self) -> i32 {
        let n2 = self.size * self.size;
        let mut score = 0i32;
        let mut seen = vec![false; n2];
        for start in 0..n2 {
            match self.stones[start] {
                Some(Color::Black) => score += 1,
                Some(Color::White) => score -= 1,
                None if !seen[start] => {
                    let mut region = 0i32;
                    let (mut touches_black, mut touches_white) = (false, false);
                    let mut stack = vec![start];
                    seen[start] = true;
                    while let Some(i) = stack.pop() {
                        region += 1;
                        for nb in self.neighbors(i) {
                            match self.stones[nb] {
                                Some(Color::Black) => touches_black = true,
                                Some(Color::White) => touches_white = true,
                                None if !seen[nb] => {
                                    seen[nb] = true;
                                    stack.push(nb);
                                }
                                None => {}
                            }
                        }
                    }
                    match (touches_black, touches_white) {
                        (true, false) => score += region,
                        (false, true) => score -= region,
                        _ => {}
                    }
                }
                None => {}
            }
        }
        score
    }

    pub fn final_score(&self) -> Result<i32, GoError> {
        if !self.is_over() {
            return Err(GoError::GameNotOver);
        }
        Ok(self.area_score())
    }

    pub fn winner(&self, komi: Komi) -> Result<Color, GoError> {
        Ok(winner_for_score(self.final_score()?, komi))
    }

    /// Copy of the position with colors swapped (stones and side to move).
    pub fn color_swapped(&self) -> BoardState {
        let swap = |l: &[Option<Color>]| -> Layout { l.iter().map(|c| c.map(Color::opposite)).collect() };
        let stones = swap(&self.stones);
        let hash = layout_hash(&stones);
        BoardState {
            size: self.size,
            hash,
            position_history: vec![hash],
            previous: self.previous.iter().map(|l| swap(l)).collect(),
            to_move: self.to_move.opposite(),
            stones,
            consecutive_passes: self.consecutive_passes,
            move_number: self.move_number,
            last_move: self.last_move,
        }
    }
}

pub fn winner_for_score(score: i32, komi: Komi) -> Color {
    if f64::from(score) - komi.value() > 0.0 {
        Color::Black
    } else {
        Color::White
    }
}

fn layout_hash(layout: &[Option<Color>]) -> u64 {
    let table = zobrist_table();
    layout
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.map(|c| table[i][c.index()]))
        .fold(0, |h, z| h ^ z)
}

impl fmt::Display for BoardState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.size;
        for r in 0..n {
            write!(f, "{:>2} ", n - r)?;
            for c in 0..n {
                let ch = match self.stones[r * n + c] {
                    Some(Color::Black) => 'X',
                    Some(Color::White) => 'O',
                    None => '.',
                };
                write!(f, "{ch} ")?;
            }
            writeln!(f)?;
        }
        write!(f, "   ")?;
        for c in 0..n {
            write!(f, "{} ", GTP_COLUMNS[c] as char)?;
        }
        writeln!(f)
    }
}

/// Lineage of a branched game: the parent's id and the ply (counted from
/// the empty board) at which the branch starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BranchParent {
    pub game_id: u64,
    pub move_index: usize,
}

/// A game as played from `initial_state()`. Branch games carry the moves
/// leading from the empty board to their start position in `setup`, so
/// the superko history of the branch point is reproducible.
#[derive(Debug, Clone, PartialEq)]
pub struct GameRecord {
    pub id: u64,
    pub size: usize,
    pub komi: Komi,
    pub setup: Vec<Move>,
    pub moves: Vec<Move>,
    pub result: Option<Color>,
    pub branch_parent: Option<BranchParent>,
}

impl GameRecord {
    pub fn new(id: u64, size: usize, komi: Komi) -> GameRecord {
        GameRecord { id, size, komi, setup: Vec::new(), moves: Vec::new(), result: None, branch_parent: None }
    }

    pub fn initial_state(&self) -> Result<BoardState, GoError> {
        replay(self.size, &self.setup)
    }

    /// Every state from the initial one to the last, `moves.len() + 1` in total.
    pub fn states(&self) -> Result<Vec<BoardState>, GoError> {
        let mut states = vec![self.initial_state()?];
        for &mv in &self.moves {
            let next = states.last().expect("nonempty").play(mv)?;
            states.push(next);
        }
        Ok(states)
    }

    pub fn final_state(&self) -> Result<BoardState, GoError> {
        let mut state = self.initial_state()?;
        for &mv in &self.moves {
            state = state.play(mv)?;
        }
        Ok(state)
    }

    /// Replays the game and checks the stored result against the scorer.
    pub fn validate(&self) -> Result<(), GoError> {
        let last = self.final_state()?;
        if let Some(result) = self.result {
            if last.winner(self.komi)? != result {
                return Err(GoError::GameNotOver);
            }
        }
        Ok(())
    }
}

pub fn replay(size: usize, moves: &[Move]) -> Result<BoardState, GoError> {
    let mut state = BoardState::new(size)?;
    for &mv in moves {
        state = state.play(mv)?;
    }
    Ok(state)
}
