//! Truncated draws of the stationary solution `R` for a two-dimensional
//! Gaussian model, with the truncation error estimate.

use heavytail::mc::McConfig;
use heavytail::model::ModelSpec;
use heavytail::recursion::{sample_r_batch, StopRule};

fn main() -> heavytail::Result<()> {
    let spec = ModelSpec::rank1_gauss(2, 8, 0.8)?;
    let cfg = McConfig::new(7);
    let draws = sample_r_batch(&spec, StopRule::default(), 10_000, &cfg);
    let mut norms: Vec<f64> = draws.iter().map(|d| d.norm()).collect();
    norms.sort_by(f64::total_cmp);
    let mean_steps = draws.iter().map(|d| d.n as f64).sum::<f64>() / draws.len() as f64;
    let worst = draws.iter().map(|d| d.error_bound()).fold(0.0, f64::max);
    println!("{} draws, mean truncation index {mean_steps:.1}, worst error bound {worst:.2e}", draws.len());
    for q in [0.5, 0.9, 0.99, 0.999] {
        println!("  |R| quantile {q}: {:.3}", norms[(q * norms.len() as f64) as usize]);
    }
    println!("  first draw: {:?}", draws[0].r);
    Ok(())
}
