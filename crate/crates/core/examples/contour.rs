//! `h = 1` contour over batch size and moment order, written as SVG.

use heavytail::contour::{is_monotone, render_svg};
use heavytail::mc::McConfig;
use heavytail::model::ModelSpec;
use heavytail::tail::{contour_grid, ContourParam};

fn main() -> heavytail::Result<()> {
    let spec = ModelSpec::rank1_gauss(2, 1, 0.75)?;
    let s_grid: Vec<f64> = (1..=40).map(|i| 0.2 * i as f64).collect();
    let grid = contour_grid(&spec, &ContourParam::BatchSize((1..=12).collect()), &s_grid, 50_000, &McConfig::new(5))?;
    let main = grid.main_contour().cloned().unwrap_or_default();
    println!("{} contour line(s); main has {} points, monotone in b: {}", grid.contour.len(), main.len(), is_monotone(&main, 1.0));
    for (b, s) in main.iter().step_by(4) {
        println!("  b = {b:.2}  s = {s:.3}");
    }
    let path = std::env::temp_dir().join("heavytail_contour.svg");
    std::fs::write(&path, render_svg(&grid, "h = 1 over (b, s)", 4.0))?;
    println!("wrote {}", path.display());
    Ok(())
}
