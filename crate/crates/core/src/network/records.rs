//! Training data file: a header line `sai-records 1 size=<n> planes=<p>`
//! followed by one record per line,
//!
//! ```text
//! <planes as hex> <index:visits,...> <komi> <B|W> <z>
//! ```
//!
//! where the policy target is the sparse root visit distribution and `z` is
//! 1 when the side to move went on to win.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{InputPlanes, NetworkError};
use crate::goban::{Color, Komi, Symmetry};

const HEADER: &str = "sai-records 1";

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingRecord {
    pub planes: InputPlanes,
    /// `(policy index, visits)` pairs with nonzero visits, ascending index.
    pub visits: Vec<(u16, u32)>,
    pub komi: Komi,
    pub to_move: Color,
    pub z: u8,
}

impl TrainingRecord {
    /// Repeated indices are merged by summing their visits.
    pub fn new(planes: InputPlanes, mut visits: Vec<(u16, u32)>, komi: Komi, to_move: Color, z: u8) -> TrainingRecord {
        visits.retain(|&(_, v)| v > 0);
        visits.sort_unstable();
        visits.dedup_by(|next, kept| {
            let same = next.0 == kept.0;
            if same {
                kept.1 += next.1;
            }
            same
        });
        TrainingRecord { planes, visits, komi, to_move, z }
    }

    /// Normalised visit distribution over `len` moves.
    pub fn policy_target(&self, len: usize) -> Vec<f64> {
        let total: u64 = self.visits.iter().map(|&(_, v)| u64::from(v)).sum();
        let mut target = vec![0.0; len];
        if total > 0 {
            for &(i, v) in &self.visits {
                target[i as usize] = f64::from(v) / total as f64;
            }
        }
        target
    }

    pub fn transformed(&self, sym: Symmetry) -> TrainingRecord {
        let size = self.planes.size;
        let visits = self
            .visits
            .iter()
            .map(|&(i, v)| (sym.apply_index(i as usize, size) as u16, v))
            .collect();
        TrainingRecord::new(self.planes.transformed(sym), visits, self.komi, self.to_move, self.z)
    }

    fn to_line(&self) -> String {
        let visits: Vec<String> = self.visits.iter().map(|(i, v)| format!("{i}:{v}")).collect();
        format!("{} {} {} {} {}", self.planes.to_hex(), visits.join(","), self.komi, self.to_move.letter(), self.z)
    }

    fn from_line(line: &str, planes: usize, size: usize) -> Result<TrainingRecord, String> {
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [hex, visits, komi, to_move, z] = fields.as_slice() else {
            return Err(format!("expected 5 fields, found {}", fields.len()));
        };
        let planes = InputPlanes::from_hex(hex, planes, size).ok_or("bad plane bitmap")?;
        let mut pairs = Vec::new();
        for pair in visits.split(',') {
            let (i, v) = pair.split_once(':').ok_or_else(|| format!("bad visit pair {pair:?}"))?;
            let i: u16 = i.parse().map_err(|_| format!("bad move index {i:?}"))?;
            if i as usize > size * size {
                return Err(format!("move index {i} out of range"));
            }
            pairs.push((i, v.parse().map_err(|_| format!("bad visit count {v:?}"))?));
        }
        let komi: Komi = komi.parse().map_err(|_| format!("bad komi {komi:?}"))?;
        let to_move = match *to_move {
            "B" => Color::Black,
            "W" => Color::White,
            other => return Err(format!("bad color {other:?}")),
        };
        let z = match *z {
            "0" => 0,
            "1" => 1,
            other => return Err(format!("bad outcome {other:?}")),
        };
        Ok(TrainingRecord::new(planes, pairs, komi, to_move, z))
    }
}

pub struct RecordWriter<W: Write> {
    out: W,
    planes: usize,
    size: usize,
    written: usize,
}

impl<W: Write> RecordWriter<W> {
    pub fn new(mut out: W, size: usize, planes: usize) -> std::io::Result<RecordWriter<W>> {
        writeln!(out, "{HEADER} size={size} planes={planes}")?;
        Ok(RecordWriter { out, planes, size, written: 0 })
    }

    pub fn write(&mut self, record: &TrainingRecord) -> std::io::Result<()> {
        if record.planes.planes != self.planes || record.planes.size != self.size {
            return Err(std::io::Error::new(std::io::ErrorKind::InvalidInput, "record shape differs from file header"));
        }
        writeln!(self.out, "{}", record.to_line())?;
        self.written += 1;
        Ok(())
    }

    pub fn written(&self) -> usize {
        self.written
    }

    pub fn finish(mut self) -> std::io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

pub struct RecordReader<R: BufRead> {
    lines: std::io::Lines<R>,
    line: usize,
    planes: usize,
    size: usize,
}

impl<R: BufRead> RecordReader<R> {
    pub fn new(input: R) -> Result<RecordReader<R>, NetworkError> {
        let mut lines = input.lines();
        let format_err = |message: &str| NetworkError::Format { line: 1, message: message.to_string() };
        let header = lines.next().ok_or_else(|| format_err("empty record file"))??;
        let rest = header.strip_prefix(HEADER).ok_or_else(|| format_err("missing or unsupported header"))?;
        let (mut size, mut planes) = (None, None);
        for field in rest.split_whitespace() {
            match field.split_once('=') {
                Some(("size", v)) => size = v.parse().ok(),
                Some(("planes", v)) => planes = v.parse().ok(),
                _ => return Err(format_err("bad header field")),
            }
        }
        match (size, planes) {
            (Some(size), Some(planes)) => Ok(RecordReader { lines, line: 1, planes, size }),
            _ => Err(format_err("header lacks size or planes")),
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn planes(&self) -> usize {
        self.planes
    }
}

impl<R: BufRead> Iterator for RecordReader<R> {
    type Item = Result<TrainingRecord, NetworkError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(line) => line,
                Err(e) => return Some(Err(e.into())),
            };
            self.line += 1;
            if line.trim().is_empty() {
                continue;
            }
            return Some(
                TrainingRecord::from_line(&line, self.planes, self.size)
                    .map_err(|message| NetworkError::Format { line: self.line, message }),
            );
        }
    }
}

pub fn write_records(path: &Path, records: &[TrainingRecord], size: usize, planes: usize) -> Result<(), NetworkError> {
    let mut writer = RecordWriter::new(BufWriter::new(File::create(path)?), size, planes)?;
    for record in records {
        writer.write(record)?;
    }
    writer.finish()?;
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<TrainingRecord>, NetworkError> {
    RecordReader::new(BufReader::new(File::open(path)?))?.collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::goban::{BoardState, Move};

    fn record() -> TrainingRecord {
        let s = BoardState::new(7).unwrap().play(Move::play(3, 3)).unwrap();
        TrainingRecord::new(InputPlanes::encode(&s, 17), vec![(49, 3), (10, 90), (4, 0)], Komi::new(-2.5).unwrap(), Color::White, 0)
    }

    #[test]
    fn zero_visits_dropped_and_sorted() {
        assert_eq!(record().visits, vec![(10, 90), (49, 3)]);
        let t = record().policy_target(50);
        assert!((t.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(t[10], 90.0 / 93.0);
        let merged = TrainingRecord::new(record().planes, vec![(3, 1), (3, 2), (1, 1)], Komi::default(), Color::Black, 1);
        assert_eq!(merged.visits, vec![(1, 1), (3, 3)]);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.records");
        let records = vec![record(), record().transformed(Symmetry::from_id(5))];
        write_records(&path, &records, 7, 17).unwrap();
        assert_eq!(read_records(&path).unwrap(), records);
    }

    #[test]
    fn malformed_lines_report_position() {
        let text = format!("{HEADER} size=7 planes=17\n{}\nnot a record\n", record().to_line());
        let results: Vec<_> = RecordReader::new(text.as_bytes()).unwrap().collect();
        assert!(results[0].is_ok());
        assert!(matches!(results[1], Err(NetworkError::Format { line: 3, .. })));
        assert!(RecordReader::new("".as_bytes()).is_err());
        assert!(RecordReader::new("garbage\n".as_bytes()).is_err());
    }
}
