//! Tail index `alpha` as a function of `xi = eta / b`, and the critical
//! `xi_1` beyond which the stationary law has infinite mean.

use heavytail::mc::McConfig;
use heavytail::model::ModelSpec;
use heavytail::tail::{alpha_curve, AlphaOptions};

fn main() -> heavytail::Result<()> {
    let spec = ModelSpec::rank1_gauss(2, 8, 1.0)?;
    let xi_grid: Vec<f64> = (1..=10).map(|i| 0.03 * i as f64).collect();
    let curve = alpha_curve(&spec, &xi_grid, &AlphaOptions::default(), 200_000, &McConfig::new(11));
    if let Some(x) = &curve.xi1 {
        println!("xi_1 = {:.5} (eta_1 = {:.4})", x.xi1, x.xi1 * spec.b() as f64);
    }
    for p in &curve.points {
        println!("xi {:.3}  alpha {:>8.4} +- {:.3}  {:?}", p.xi, p.alpha, p.stderr_alpha, p.status);
    }
    println!("strictly decreasing: {}", curve.monotonicity.strictly_decreasing);
    Ok(())
}
