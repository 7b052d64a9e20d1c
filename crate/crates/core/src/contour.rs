//! Marching-squares isocontours and a self-contained SVG heat map.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::tail::ContourGrid;

pub type Polyline = Vec<(f64, f64)>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Edge {
    /// Between nodes `(i, j)` and `(i + 1, j)`.
    H(usize, usize),
    /// Between nodes `(i, j)` and `(i, j + 1)`.
    V(usize, usize),
}

/// Level set `f = level` of the node values `f[i][j] = f(xs[i], ys[j])`,
/// as polylines. Cells with a NaN corner are skipped; saddles are resolved
/// by the cell-centre average.
pub fn marching_squares(xs: &[f64], ys: &[f64], f: &[Vec<f64>], level: f64) -> Vec<Polyline> {
    let (nx, ny) = (xs.len(), ys.len());
    let above = |v: f64| v > level;
    let mut segments: Vec<(Edge, Edge)> = Vec::new();
    for i in 0..nx.saturating_sub(1) {
        for j in 0..ny.saturating_sub(1) {
            let c = [f[i][j], f[i + 1][j], f[i + 1][j + 1], f[i][j + 1]];
            if c.iter().any(|v| v.is_nan()) {
                continue;
            }
            // edges: bottom, right, top, left
            let edges = [Edge::H(i, j), Edge::V(i + 1, j), Edge::H(i, j + 1), Edge::V(i, j)];
            let crossing = [
                above(c[0]) != above(c[1]),
                above(c[1]) != above(c[2]),
                above(c[3]) != above(c[2]),
                above(c[0]) != above(c[3]),
            ];
            let hits: Vec<usize> = (0..4).filter(|&k| crossing[k]).collect();
            match hits.len() {
                2 => segments.push((edges[hits[0]], edges[hits[1]])),
                4 => {
                    let centre = 0.25 * c.iter().sum::<f64>();
                    if above(centre) == above(c[0]) {
                        segments.push((edges[0], edges[1]));
                        segments.push((edges[2], edges[3]));
                    } else {
                        segments.push((edges[0], edges[3]));
                        segments.push((edges[1], edges[2]));
                    }
                }
                _ => {}
            }
        }
    }

    let point = |e: Edge| -> (f64, f64) {
        let lerp = |a: f64, b: f64, fa: f64, fb: f64| a + (b - a) * (level - fa) / (fb - fa);
        match e {
            Edge::H(i, j) => (lerp(xs[i], xs[i + 1], f[i][j], f[i + 1][j]), ys[j]),
            Edge::V(i, j) => (xs[i], lerp(ys[j], ys[j + 1], f[i][j], f[i][j + 1])),
        }
    };

    let mut adjacency: HashMap<Edge, Vec<usize>> = HashMap::new();
    for (k, (a, b)) in segments.iter().enumerate() {
        adjacency.entry(*a).or_default().push(k);
        adjacency.entry(*b).or_default().push(k);
    }
    let mut used = vec![false; segments.len()];
    let mut lines = Vec::new();
    // start from open ends first so open curves come out whole
    let mut order: Vec<usize> = (0..segments.len()).collect();
    order.sort_by_key(|&k| {
        let (a, b) = segments[k];
        let open = adjacency[&a].len() == 1 || adjacency[&b].len() == 1;
        (!open, k)
    });
    for start in order {
        if used[start] {
            continue;
        }
        used[start] = true;
        let (a, b) = segments[start];
        let (first, mut tip) = if adjacency[&a].len() == 1 { (a, b) } else { (b, a) };
        let mut chain = vec![first, tip];
        while let Some(&next) = adjacency[&tip].iter().find(|&&k| !used[k]) {
            used[next] = true;
            let (p, q) = segments[next];
            tip = if p == tip { q } else { p };
            chain.push(tip);
        }
        lines.push(chain.into_iter().map(point).collect());
    }
    lines
}

/// Every segment satisfies `sign * dx * dy >= 0`: `sign = 1` for an
/// increasing curve, `-1` for a decreasing one.
pub fn is_monotone(line: &[(f64, f64)], sign: f64) -> bool {
    line.windows(2).all(|w| sign * (w[1].0 - w[0].0) * (w[1].1 - w[0].1) >= 0.0)
}

/// Eight steps of the viridis palette.
pub const PALETTE: [&str; 8] = ["#440154", "#46327e", "#365c8d", "#277f8e", "#1fa187", "#4ac16d", "#a0da39", "#fde725"];

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 130.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 70.0;

/// Cell boundaries around node coordinates (midpoints, extended at the ends).
fn cell_edges(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    if n == 1 {
        return vec![v[0] - 0.5, v[0] + 0.5];
    }
    let mut e = Vec::with_capacity(n + 1);
    e.push(v[0] - 0.5 * (v[1] - v[0]));
    for w in v.windows(2) {
        e.push(0.5 * (w[0] + w[1]));
    }
    e.push(v[n - 1] + 0.5 * (v[n - 1] - v[n - 2]));
    e
}

/// SVG heat map of the grid clipped at `clip`, with the level-1 contour.
pub fn render_svg(grid: &ContourGrid, title: &str, clip: f64) -> String {
    let xe = cell_edges(&grid.param_values);
    let ye = cell_edges(&grid.s_grid);
    let (x0, x1) = (xe[0], xe[xe.len() - 1]);
    let (y0, y1) = (ye[0], ye[ye.len() - 1]);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * plot_w;
    let py = |y: f64| TOP + plot_h - (y - y0) / (y1 - y0) * plot_h;
    let clipped = grid.clipped(clip);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{:.1}" y="28" text-anchor="middle" font-size="16">{}</text>"#, WIDTH / 2.0, escape(title));
    for (i, row) in clipped.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let fill = if v.is_nan() {
                "#cccccc"
            } else {
                PALETTE[((v / clip * 8.0).floor().max(0.0) as usize).min(7)]
            };
            let (xa, xb) = (px(xe[i]), px(xe[i + 1]));
            let (ya, yb) = (py(ye[j + 1]), py(ye[j]));
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{fill}" shape-rendering="crispEdges"/>"#,
                xa,
                ya,
                xb - xa,
                yb - ya
            );
        }
    }
    for line in &grid.contour {
        let pts: Vec<String> = line.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="black" stroke-width="2"/>"#, pts.join(" "));
    }
    // axes
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    for t in ticks(x0, x1, 8) {
        let x = px(t);
        let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{0:.2}" x2="{x:.2}" y2="{1:.2}" stroke="black"/>"#, TOP + plot_h, TOP + plot_h + 5.0);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, TOP + plot_h + 20.0, fmt_tick(t));
    }
    for t in ticks(y0, y1, 8) {
        let y = py(t);
        let _ = writeln!(s, r#"<line x1="{0:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/>"#, LEFT - 5.0);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 8.0, y + 4.0, fmt_tick(t));
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 25.0,
        grid.param_name
    );
    let _ = writeln!(
        s,
        r#"<text x="25" y="{0:.1}" text-anchor="middle" font-size="14" transform="rotate(-90 25 {0:.1})">s</text>"#,
        TOP + plot_h / 2.0
    );
    // legend
    let lx = WIDTH - RIGHT + 30.0;
    let box_h = plot_h / 8.0;
    for (k, colour) in PALETTE.iter().enumerate() {
        let y = TOP + plot_h - (k + 1) as f64 * box_h;
        let _ = writeln!(s, r#"<rect x="{lx:.1}" y="{y:.2}" width="20" height="{box_h:.2}" fill="{colour}"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.2}">{:.2}</text>"#,
            lx + 26.0,
            y + box_h + 4.0,
            clip * k as f64 / 8.0
        );
    }
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.2}">{:.2}</text>"#, lx + 26.0, TOP + 4.0, clip);
    s.push_str("</svg>\n");
    s
}

fn ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let raw = (hi - lo) / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0].iter().map(|m| m * mag).find(|&s| s >= raw).unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step {
        out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    out
}

fn fmt_tick(t: f64) -> String {
    let s = format!("{t:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_line_contour() {
        // f = x + y, level 1: the line y = 1 - x
        let xs: Vec<f64> = (0..5).map(|i| i as f64 * 0.25).collect();
        let f: Vec<Vec<f64>> = xs.iter().map(|&x| xs.iter().map(|&y| x + y).collect()).collect();
        let lines = marching_squares(&xs, &xs, &f, 1.0 + 1e-9);
        assert_eq!(lines.len(), 1);
        for &(x, y) in &lines[0] {
            assert!((x + y - 1.0).abs() < 1e-8);
        }
        assert!(is_monotone(&lines[0], -1.0));
        assert!(!is_monotone(&lines[0], 1.0));
    }

    #[test]
    fn closed_circle() {
        let xs: Vec<f64> = (0..41).map(|i| -1.0 + i as f64 * 0.05).collect();
        let f: Vec<Vec<f64>> = xs.iter().map(|&x| xs.iter().map(|&y| x * x + y * y).collect()).collect();
        let lines = marching_squares(&xs, &xs, &f, 0.25);
        assert_eq!(lines.len(), 1);
        let l = &lines[0];
        assert_eq!(l.first(), l.last());
        for &(x, y) in l {
            assert!((x.hypot(y) - 0.5).abs() < 0.01);
        }
    }

    #[test]
    fn nan_cells_are_skipped() {
        let xs = [0.0, 1.0, 2.0];
        let f = vec![vec![0.0, 0.0, 0.0], vec![2.0, f64::NAN, 2.0], vec![2.0, 2.0, 2.0]];
        let lines = marching_squares(&xs, &xs, &f, 1.0);
        assert!(lines.iter().all(|l| l.iter().all(|p| p.0.is_finite() && p.1.is_finite())));
    }

    #[test]
    fn tick_formatting() {
        assert_eq!(ticks(0.0, 10.0, 5), vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
        assert_eq!(fmt_tick(2.5), "2.5");
        assert_eq!(fmt_tick(3.0), "3");
    }
}
