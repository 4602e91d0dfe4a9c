//! The sigmoid winrate model: how a pair (alpha, beta) turns into a winrate
//! curve over bonus points, its interval average, and the λ target.
//!
//!     cargo run --example winrate_curve

use sai::sigmoid::{lambda_extremum, sample_komi, KomiContext, SigmoidParams};
use sai::{Color, Komi};

fn main() {
    // Black to move on an empty 7x7 board, thought to be 9 points ahead.
    let params = SigmoidParams::new(9.0, 0.4).unwrap();
    let ctx = KomiContext::new(Komi::new(7.5).unwrap(), Color::Black);
    let kbar = ctx.signed_komi();

    println!("bonus  winrate  mean winrate over [0, bonus]");
    for x in (-12..=12).step_by(3) {
        let x = f64::from(x);
        println!("{x:>5}  {:.4}   {:.4}", params.rho(x, kbar), params.mu(x, kbar));
    }

    println!("\nlambda  xbar     target winrate");
    for lambda in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let xbar = lambda_extremum(lambda, &ctx, &params).unwrap();
        println!("{lambda:>5}   {xbar:>7.3}  {:.4}", params.rho(xbar, kbar));
    }

    // Self-play komi drawn around the fair value.
    let draws: Vec<String> = [0.05, 0.25, 0.5, 0.75, 0.95].iter().map(|&u| sample_komi(&params, u).unwrap().to_string()).collect();
    println!("\nkomi at quantiles 5%..95%: {}", draws.join(" "));
}
