//! Panel evaluation: fit weights from a history of win-rate rows against a
//! fixed panel, then score new rows along the first principal direction.
//!
//!     cargo run --example panel_evaluation

use sai::evaluation::{fit_panel_weights, panel_evaluate};

fn main() {
    // Win rates (as White) of six past nets against a four-net panel.
    let history = vec![
        vec![0.10, 0.05, 0.20, 0.02],
        vec![0.25, 0.15, 0.35, 0.08],
        vec![0.40, 0.30, 0.50, 0.20],
        vec![0.55, 0.45, 0.60, 0.30],
        vec![0.70, 0.60, 0.80, 0.45],
        vec![0.85, 0.75, 0.90, 0.60],
    ];
    let fit = fit_panel_weights(&history).unwrap();
    println!("{}", fit.to_text());
    for row in [vec![0.30, 0.20, 0.40, 0.10], vec![0.90, 0.85, 0.95, 0.70]] {
        println!("{row:?} -> {:+.4}", panel_evaluate(&row, &fit).unwrap());
    }
}
