//! Versioned text weight format:
//!
//! ```text
//! sai-weights 1
//! board_size=7 blocks=3 filters=128 input_planes=17 value_hidden=32 c_alpha=10 c_beta=0.1 l2_coeff=0.0001
//! <one tensor per line, row-major, space-separated>
//! ```
//!
//! Tensors appear in [`Weights::tensors`] order. Floats are written in
//! shortest round-trip form, so a load reproduces the saved bits.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{Network, NetworkConfig, NetworkError, Weights};

pub const WEIGHTS_VERSION: u32 = 1;
const MAGIC: &str = "sai-weights";

fn format_err(line: usize, message: impl Into<String>) -> NetworkError {
    NetworkError::Format { line, message: message.into() }
}

pub fn save_weights(net: &Network, path: &Path) -> Result<(), NetworkError> {
    let cfg = net.config();
    let mut out = String::new();
    out.push_str(&format!("{MAGIC} {WEIGHTS_VERSION}\n"));
    out.push_str(&format!(
        "board_size={} blocks={} filters={} input_planes={} value_hidden={} c_alpha={} c_beta={} l2_coeff={}\n",
        cfg.board_size, cfg.blocks, cfg.filters, cfg.input_planes, cfg.value_hidden, cfg.c_alpha, cfg.c_beta, cfg.l2_coeff
    ));
    for tensor in net.weights().tensors() {
        let line: Vec<String> = tensor.iter().map(|x| x.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    let mut file = fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

fn parse_config(line: &str) -> Result<NetworkConfig, NetworkError> {
    let mut cfg = NetworkConfig::default();
    let mut seen = 0;
    for field in line.split_whitespace() {
        let (key, value) = field.split_once('=').ok_or_else(|| format_err(2, format!("bad field {field:?}")))?;
        let bad = || format_err(2, format!("bad value for {key}: {value:?}"));
        match key {
            "board_size" => cfg.board_size = value.parse().map_err(|_| bad())?,
            "blocks" => cfg.blocks = value.parse().map_err(|_| bad())?,
            "filters" => cfg.filters = value.parse().map_err(|_| bad())?,
            "input_planes" => cfg.input_planes = value.parse().map_err(|_| bad())?,
            "value_hidden" => cfg.value_hidden = value.parse().map_err(|_| bad())?,
            "c_alpha" => cfg.c_alpha = value.parse().map_err(|_| bad())?,
            "c_beta" => cfg.c_beta = value.parse().map_err(|_| bad())?,
            "l2_coeff" => cfg.l2_coeff = value.parse().map_err(|_| bad())?,
            _ => return Err(format_err(2, format!("unknown field {key:?}"))),
        }
        seen += 1;
    }
    if seen != 8 {
        return Err(format_err(2, "header must list all eight configuration fields"));
    }
    cfg.validate().map_err(|e| format_err(2, e.to_string()))?;
    Ok(cfg)
}

pub fn load_weights(path: &Path) -> Result<Network, NetworkError> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let magic = lines.next().ok_or_else(|| format_err(1, "empty weight file"))?;
    match magic.split_once(' ') {
        Some((MAGIC, version)) if version.trim() == WEIGHTS_VERSION.to_string() => {}
        Some((MAGIC, version)) => return Err(format_err(1, format!("unsupported version {version}"))),
        _ => return Err(format_err(1, "not a weight file")),
    }
    let cfg = parse_config(lines.next().ok_or_else(|| format_err(2, "missing configuration line"))?)?;
    let mut weights = Weights::zeros(&cfg);
    for (i, tensor) in weights.tensors_mut().into_iter().enumerate() {
        let line_no = i + 3;
        let line = lines.next().ok_or_else(|| format_err(line_no, "truncated file"))?;
        let values: Vec<f64> = line
            .split_whitespace()
            .map(|v| v.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| format_err(line_no, e.to_string()))?;
        if values.len() != tensor.len() {
            return Err(format_err(line_no, format!("expected {} values, found {}", tensor.len(), values.len())));
        }
        *tensor = values;
    }
    if lines.any(|l| !l.trim().is_empty()) {
        return Err(format_err(0, "trailing data after the last tensor"));
    }
    Network::new(cfg, weights)
}
