//! Finite-`n` behaviour of the partial sums `R_n`: `E|R_n|^alpha` growth
//! and the exceedance curve of `|R_n|`.

use heavytail::mc::McConfig;
use heavytail::model::two_point_scalar;
use heavytail::recursion::{finite_iteration_tail, moment_growth_curve};

fn main() -> heavytail::Result<()> {
    // H in {0.5, 2.5} with xi = 1 gives A in {0.5, -1.5}, so alpha = 1 exactly
    let spec = two_point_scalar(0.5, 2.5, 1.0)?;
    let cfg = McConfig::new(2);
    for p in moment_growth_curve(&spec, 1.0, &[50, 100, 200, 400], 100_000, &cfg)? {
        let (m, se) = p.per_step();
        println!("n = {:>4}: (1/n) E|R_n| = {m:.4} +- {se:.4}", p.n);
    }
    let tb = finite_iteration_tail(&spec, 1.0, 0.5, 20, None, 200_000, &cfg.derive(1))?;
    println!("n = 20 top-decade slope {:.3} (target {:.1})", tb.slope, tb.target_slope);
    Ok(())
}
