//! SGF dialect for game records.
//!
//! One game is a single main line:
//!
//! ```text
//! game     := '(' node+ ')'
//! node     := ';' property*
//! property := IDENT ('[' value ']')+
//! ```
//!
//! The root node carries `SZ` (board size), `KM` (komi), optionally `RE`
//! (`B+` or `W+`) and `C` with the lineage `id=<n>[;parent=<n>;at=<ply>]`.
//! Every following node holds exactly one `B` or `W` move with lowercase
//! coordinates (`B[]` or `B[tt]` for a pass). For a branch, the first `at`
//! moves lead from the empty board to the branch position. Unknown root
//! properties are ignored. Values escape `]` and `\` with a backslash.

use std::fmt::Write as _;

use thiserror::Error;

use crate::goban::{BranchParent, Color, GameRecord, Komi, Move, Point, MAX_SIZE, MIN_SIZE};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("sgf error at byte {offset}: {message}")]
pub struct SgfError {
    pub offset: usize,
    pub message: String,
}

fn coord(mv: Move) -> String {
    match mv {
        Move::Play(p) => format!("{}{}", (b'a' + p.col) as char, (b'a' + p.row) as char),
        Move::Pass | Move::Resign => String::new(),
    }
}

pub fn serialize_game(game: &GameRecord) -> String {
    let mut out = String::new();
    write!(out, "(;GM[1]FF[4]CA[UTF-8]SZ[{}]KM[{}]", game.size, game.komi).unwrap();
    if let Some(winner) = game.result {
        write!(out, "RE[{}+]", winner.letter()).unwrap();
    }
    write!(out, "C[id={}", game.id).unwrap();
    if let Some(parent) = game.branch_parent {
        write!(out, ";parent={};at={}", parent.game_id, parent.move_index).unwrap();
    }
    out.push(']');
    let mut color = Color::Black;
    for &mv in game.setup.iter().chain(&game.moves) {
        write!(out, ";{}[{}]", color.letter(), coord(mv)).unwrap();
        color = color.opposite();
    }
    out.push(')');
    out
}

pub fn serialize_collection<'a>(games: impl IntoIterator<Item = &'a GameRecord>) -> String {
    let mut out = String::new();
    for game in games {
        out.push_str(&serialize_game(game));
        out.push('\n');
    }
    out
}

struct Parser<'a> {
    text: &'a [u8],
    pos: usize,
}

type Node = Vec<(String, Vec<String>, usize)>;

impl<'a> Parser<'a> {
    fn err<T>(&self, offset: usize, message: impl Into<String>) -> Result<T, SgfError> {
        Err(SgfError { offset, message: message.into() })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.text.len() && self.text[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.text.get(self.pos).copied()
    }

    fn expect(&mut self, byte: u8) -> Result<(), SgfError> {
        match self.peek() {
            Some(b) if b == byte => {
                self.pos += 1;
                Ok(())
            }
            Some(b) => self.err(self.pos, format!("expected '{}', found '{}'", byte as char, b as char)),
            None => self.err(self.pos, format!("expected '{}', found end of input", byte as char)),
        }
    }

    fn value(&mut self) -> Result<String, SgfError> {
        self.expect(b'[')?;
        let mut bytes = Vec::new();
        loop {
            match self.text.get(self.pos) {
                None => return self.err(self.pos, "unterminated property value"),
                Some(b'\\') => {
                    match self.text.get(self.pos + 1) {
                        Some(&b) => bytes.push(b),
                        None => return self.err(self.pos + 1, "unterminated escape"),
                    }
                    self.pos += 2;
                }
                Some(b']') => {
                    self.pos += 1;
                    break;
                }
                Some(&b) => {
                    bytes.push(b);
                    self.pos += 1;
                }
            }
        }
        String::from_utf8(bytes).or_else(|_| self.err(self.pos, "value is not UTF-8"))
    }

    fn node(&mut self) -> Result<Node, SgfError> {
        self.expect(b';')?;
        let mut props = Vec::new();
        while let Some(b) = self.peek() {
            if !b.is_ascii_uppercase() {
                break;
            }
            let start = self.pos;
            while self.pos < self.text.len() && self.text[self.pos].is_ascii_uppercase() {
                self.pos += 1;
            }
            let ident = String::from_utf8_lossy(&self.text[start..self.pos]).into_owned();
            let mut values = vec![self.value()?];
            while self.peek() == Some(b'[') {
                values.push(self.value()?);
            }
            props.push((ident, values, start));
        }
        Ok(props)
    }

    fn game(&mut self) -> Result<GameRecord, SgfError> {
        self.expect(b'(')?;
        let root_at = self.pos;
        let root = self.node()?;
        let mut size = None;
        let mut komi = None;
        let mut result = None;
        let mut lineage: Option<(u64, Option<BranchParent>)> = None;
        for (ident, values, at) in &root {
            let v = values[0].as_str();
            match ident.as_str() {
                "SZ" => match v.parse::<usize>() {
                    Ok(n) if (MIN_SIZE..=MAX_SIZE).contains(&n) => size = Some(n),
                    _ => return self.err(*at, format!("bad board size {v:?}")),
                },
                "KM" => match v.parse::<Komi>() {
                    Ok(k) => komi = Some(k),
                    Err(_) => return self.err(*at, format!("bad komi {v:?}")),
                },
                "RE" => {
                    result = match v.chars().next() {
                        Some('B') => Some(Color::Black),
                        Some('W') => Some(Color::White),
                        _ => return self.err(*at, format!("bad result {v:?}")),
                    }
                }
                "C" => match parse_lineage(v) {
                    Some(l) => lineage = Some(l),
                    None => return self.err(*at, format!("bad lineage comment {v:?}")),
                },
                "B" | "W" => return self.err(*at, "move in root node"),
                _ => {}
            }
        }
        let Some(size) = size else { return self.err(root_at, "missing SZ") };
        let Some(komi) = komi else { return self.err(root_at, "missing KM") };
        let (id, branch_parent) = lineage.unwrap_or((0, None));

        let mut all_moves = Vec::new();
        let mut color = Color::Black;
        while self.peek() == Some(b';') {
            let node_at = self.pos;
            let node = self.node()?;
            let [(ident, values, at)] = node.as_slice() else {
                return self.err(node_at, "expected exactly one move per node");
            };
            let expected = color.letter().to_string();
            if *ident != expected {
                return self.err(*at, format!("expected {expected} move, found {ident}"));
            }
            all_moves.push(parse_coord(&values[0], size).ok_or_else(|| SgfError {
                offset: *at,
                message: format!("bad coordinate {:?}", values[0]),
            })?);
            color = color.opposite();
        }
        self.expect(b')')?;

        let setup_len = branch_parent.map_or(0, |p| p.move_index);
        if setup_len > all_moves.len() {
            return self.err(root_at, "branch point beyond the recorded moves");
        }
        let moves = all_moves.split_off(setup_len);
        Ok(GameRecord { id, size, komi, setup: all_moves, moves, result, branch_parent })
    }
}

fn parse_lineage(text: &str) -> Option<(u64, Option<BranchParent>)> {
    let mut id = None;
    let mut parent = None;
    let mut at = None;
    for part in text.split(';') {
        let (key, value) = part.trim().split_once('=')?;
        match key {
            "id" => id = Some(value.parse().ok()?),
            "parent" => parent = Some(value.parse().ok()?),
            "at" => at = Some(value.parse().ok()?),
            _ => return None,
        }
    }
    match (id, parent, at) {
        (Some(id), None, None) => Some((id, None)),
        (Some(id), Some(game_id), Some(move_index)) => Some((id, Some(BranchParent { game_id, move_index }))),
        _ => None,
    }
}

fn parse_coord(text: &str, size: usize) -> Option<Move> {
    let bytes = text.as_bytes();
    match bytes {
        [] => Some(Move::Pass),
        [b't', b't'] if size <= 19 => Some(Move::Pass),
        [c, r] if c.is_ascii_lowercase() && r.is_ascii_lowercase() => {
            let (col, row) = ((c - b'a') as usize, (r - b'a') as usize);
            (col < size && row < size).then(|| Move::Play(Point::new(row, col)))
        }
        _ => None,
    }
}

pub fn parse_game(text: &str) -> Result<GameRecord, SgfError> {
    let mut parser = Parser { text: text.as_bytes(), pos: 0 };
    let game = parser.game()?;
    if parser.peek().is_some() {
        return parser.err(parser.pos, "trailing data after game");
    }
    Ok(game)
}

pub fn parse_collection(text: &str) -> Result<Vec<GameRecord>, SgfError> {
    let mut parser = Parser { text: text.as_bytes(), pos: 0 };
    let mut games = Vec::new();
    while parser.peek().is_some() {
        games.push(parser.game()?);
    }
    Ok(games)
}
