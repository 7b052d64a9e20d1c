//! `k(s)` for the one-dimensional Gaussian model by three routes: the
//! closed form, the product limit, and deterministic quadrature.

use heavytail::mc::McConfig;
use heavytail::model::ModelSpec;
use heavytail::spectral::{lyapunov, spectral_curve, CurveMethod, LyapunovMethod};

fn main() -> heavytail::Result<()> {
    let spec = ModelSpec::rank1_gauss(1, 1, 0.5)?;
    let cfg = McConfig::new(3);
    let s_grid = [0.5, 1.0, 2.0, 3.0];
    let curves = [CurveMethod::ClosedForm, CurveMethod::ProductLimit { n: 20 }, CurveMethod::Quadrature]
        .into_iter()
        .map(|m| spectral_curve(&spec, &s_grid, m, 10.0, 200_000, &cfg))
        .collect::<heavytail::Result<Vec<_>>>()?;
    println!("{:>5} {:>22} {:>22} {:>12}", "s", "closed", "product n=20", "quadrature");
    for (j, s) in s_grid.iter().enumerate() {
        let cell = |c: usize| format!("{:.5} +- {:.1e}", curves[c].values[j].mean, curves[c].values[j].stderr);
        println!("{s:>5} {:>22} {:>22} {:>12.6}", cell(0), cell(1), curves[2].values[j].mean);
    }
    let g = lyapunov(&spec, LyapunovMethod::ClosedForm, 200_000, &cfg)?;
    println!("gamma = {:.5} +- {:.1e}", g.gamma, g.stderr);
    Ok(())
}
