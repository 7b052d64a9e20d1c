//! Discretized transfer operator on the circle: leading eigenvalue, angular
//! eigenmeasure and the eigenfunction representation.

use heavytail::mc::McConfig;
use heavytail::model::ModelSpec;
use heavytail::spectral::h_closed_form;
use heavytail::transfer::{build_operator, eigenfunction_representation_check, power_iterate, quarter_arc_masses};

fn main() -> heavytail::Result<()> {
    let spec = ModelSpec::rank1_gauss(2, 8, 0.3)?;
    let cfg = McConfig::new(9);
    let op = build_operator(&spec, 1.0, 64, 5_000, false, &cfg)?;
    let adj = build_operator(&spec, 1.0, 64, 5_000, true, &cfg)?;
    let sp = power_iterate(&op, 1e-12, 100_000)?;
    let sa = power_iterate(&adj, 1e-12, 100_000)?;
    let h = h_closed_form(&spec, 1.0, 500_000, &cfg)?;
    println!("eigenvalue {:.5} after {} iterations, closed form {:.5}", sp.eigenvalue, sp.iterations, h.mean);
    println!("quarter-arc masses {:?}", quarter_arc_masses(&sp.eigenmeasure).map(|m| (m * 1e4).round() / 1e4));
    let rep = eigenfunction_representation_check(&sp, &sa, 1.0);
    println!("eigenfunction representation: c = {:.4}, max deviation {:.3}", rep.c, rep.max_rel_deviation);
    Ok(())
}
