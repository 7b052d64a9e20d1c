//! Hill estimate of the tail index from simulated `|R|`, compared with the
//! quadrature root of `E|1 - eta a^2|^s = 1`.

use heavytail::empirics::{hill_estimate, hill_stability_scan};
use heavytail::empirics::hill::default_k;
use heavytail::mc::McConfig;
use heavytail::model::ModelSpec;
use heavytail::recursion::{sample_r_batch, StopRule};
use heavytail::tail::{solve_alpha, AlphaOptions};

fn main() -> heavytail::Result<()> {
    // E(1 - eta a^2)^2 = 1 - 2 eta + 3 eta^2, so eta = 2/3 puts the root at 2
    let spec = ModelSpec::rank1_gauss(1, 1, 2.0 / 3.0)?;
    let cfg = McConfig::new(21);
    let alpha = solve_alpha(&spec, &AlphaOptions::default(), 500_000, &cfg.derive(1));
    let norms: Vec<f64> = sample_r_batch(&spec, StopRule::default(), 200_000, &cfg).iter().map(|r| r.norm()).collect();
    let fit = hill_estimate(&norms, default_k(norms.len()))?;
    println!("solved alpha {:.4} +- {:.4}", alpha.alpha, alpha.stderr_alpha);
    println!("hill alpha {:.4}, 95% CI [{:.3}, {:.3}], k = {}", fit.alpha_hat, fit.ci.0, fit.ci.1, fit.k_order);
    let scan = hill_stability_scan(&norms)?;
    for f in &scan.fits {
        println!("  k = {:>5}: {:.4}", f.k_order, f.alpha_hat);
    }
    println!("drifting: {} (z = {:.2})", scan.drifting, scan.drift_z);
    Ok(())
}
