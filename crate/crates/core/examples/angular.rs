//! Directions of large draws of `R` are uniform on the circle under a
//! rotation-invariant law.

use heavytail::empirics::angular_exceedance_test;
use heavytail::mc::McConfig;
use heavytail::model::ModelSpec;
use heavytail::recursion::{sample_r_batch, StopRule};

fn main() -> heavytail::Result<()> {
    let spec = ModelSpec::rank1_gauss(2, 8, 0.8)?;
    let draws = sample_r_batch(&spec, StopRule::default(), 200_000, &McConfig::new(4));
    let points: Vec<[f64; 2]> = draws.iter().map(|d| [d.r[0], d.r[1]]).collect();
    let rep = angular_exceedance_test(&points, 0.99, 0.01)?;
    println!("threshold {:.3}, {} exceedances, {:?}", rep.threshold, rep.exceedances, rep.status);
    if let (Some(ks), Some(r)) = (rep.ks, rep.rayleigh) {
        println!("KS D = {:.4} (p {:.3}), resultant length {:.4} (p {:.3})", ks.statistic, ks.p_value, r.resultant_length, r.p_value);
    }
    Ok(())
}
