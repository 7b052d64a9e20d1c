//! Truncated-mean ladders for negative moments of `det A`, the smallest
//! singular value of `A`, and an off-diagonal entry of `H`.

use heavytail::empirics::integrability::DEFAULT_CAPS;
use heavytail::empirics::{integrability_probe, IntegrabilityTarget};
use heavytail::mc::McConfig;
use heavytail::model::ModelSpec;

fn main() -> heavytail::Result<()> {
    let spec = ModelSpec::rank1_gauss(2, 8, 0.3)?;
    let cfg = McConfig::new(6);
    for (target, delta) in [
        (IntegrabilityTarget::DetA, 0.25),
        (IntegrabilityTarget::InvNormA, 0.25),
        (IntegrabilityTarget::OffDiagonal, 0.5),
    ] {
        let rep = integrability_probe(&spec, target, delta, 200_000, &DEFAULT_CAPS, &cfg)?;
        let ladder: Vec<String> = rep.truncated_means.iter().map(|m| format!("{:.4}", m.mean)).collect();
        println!("{} delta {delta}: [{}] stabilized {}", target.name(), ladder.join(", "), rep.stabilized);
    }
    Ok(())
}
