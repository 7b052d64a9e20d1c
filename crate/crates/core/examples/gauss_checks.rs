//! Distributional checks of the Gaussian law: chi-square diagonals of `H`
//! and the inner product of two uniform unit vectors.

use heavytail::empirics::{chi2_diagonal_check, stam_p2_check};
use heavytail::mc::McConfig;
use heavytail::model::ModelSpec;

fn main() -> heavytail::Result<()> {
    let cfg = McConfig::new(8);
    let spec = ModelSpec::rank1_gauss(3, 8, 0.1)?;
    let diag = chi2_diagonal_check(&spec, 50_000, &cfg)?;
    for d in &diag.diagonals {
        println!("H[{0}][{0}]: mean {1:.3}, var {2:.3}, KS p {3:.3}", d.index, d.mean, d.variance, d.ks.p_value);
    }
    for b in [4, 6, 10] {
        let r = stam_p2_check(b, 50_000, &cfg.derive(b as u64))?;
        println!("b = {b}: variance {:.4} (1/b = {:.4}), chi-square p {:.3}", r.variance, 1.0 / b as f64, r.gof.p_value);
    }
    Ok(())
}
