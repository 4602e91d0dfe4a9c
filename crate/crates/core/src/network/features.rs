use crate::goban::{BoardState, Color, Symmetry, HISTORY_LAYOUTS};

/// Binary feature planes fed to the network: `HISTORY_LAYOUTS` planes of the
/// side to move's stones (current layout first), as many for the opponent,
/// then either one side-to-move plane (17 planes, ones when Black is to move)
/// or two complementary color planes (18 planes). Komi is not an input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputPlanes {
    pub planes: usize,
    pub size: usize,
    pub bits: Vec<u8>,
}

impl InputPlanes {
    pub fn encode(state: &BoardState, planes: usize) -> InputPlanes {
        assert!(planes == 17 || planes == 18, "unsupported plane count {planes}");
        let size = state.size();
        let area = size * size;
        let mut bits = vec![0u8; planes * area];
        let me = state.to_move();
        for age in 0..HISTORY_LAYOUTS {
            let Some(layout) = state.layout(age) else { break };
            for (i, stone) in layout.iter().enumerate() {
                match stone {
                    Some(c) if *c == me => bits[age * area + i] = 1,
                    Some(_) => bits[(HISTORY_LAYOUTS + age) * area + i] = 1,
                    None => {}
                }
            }
        }
        let color_plane = 2 * HISTORY_LAYOUTS;
        match (planes, me) {
            (17, Color::Black) | (18, Color::Black) => bits[color_plane * area..(color_plane + 1) * area].fill(1),
            (18, Color::White) => bits[(color_plane + 1) * area..(color_plane + 2) * area].fill(1),
            _ => {}
        }
        InputPlanes { planes, size, bits }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.bits.iter().map(|&b| f64::from(b)).collect()
    }

    pub fn transformed(&self, sym: Symmetry) -> InputPlanes {
        let area = self.size * self.size;
        let mut bits = vec![0u8; self.bits.len()];
        for plane in 0..self.planes {
            for i in 0..area {
                bits[plane * area + sym.apply_index(i, self.size)] = self.bits[plane * area + i];
            }
        }
        InputPlanes { planes: self.planes, size: self.size, bits }
    }

    /// Plane bits packed MSB-first into bytes, as lowercase hex.
    pub fn to_hex(&self) -> String {
        self.bits
            .chunks(8)
            .map(|chunk| {
                let byte = chunk.iter().enumerate().fold(0u8, |acc, (i, &b)| acc | (b << (7 - i)));
                format!("{byte:02x}")
            })
            .collect()
    }

    pub fn from_hex(text: &str, planes: usize, size: usize) -> Option<InputPlanes> {
        let total = planes * size * size;
        if text.len() != total.div_ceil(8) * 2 || !text.is_ascii() {
            return None;
        }
        let mut bits = Vec::with_capacity(total);
        for pair in text.as_bytes().chunks(2) {
            let byte = u8::from_str_radix(std::str::from_utf8(pair).ok()?, 16).ok()?;
            for i in 0..8 {
                if bits.len() < total {
                    bits.push((byte >> (7 - i)) & 1);
                }
            }
        }
        Some(InputPlanes { planes, size, bits })
    }
}
