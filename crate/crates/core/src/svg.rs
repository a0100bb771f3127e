//! Deformation-grid rendering.
//!
//! Produces a self-contained SVG showing a deformed grid as polylines with
//! the source landmarks drawn hollow and the target landmarks filled. All
//! layout constants are fixed and coordinates are emitted with three
//! decimals, so the output is byte-deterministic for identical inputs.

use std::fmt::Write;

use crate::tps::DeformedGrid;

/// Canvas width and height in pixels.
pub const CANVAS: f64 = 640.0;
/// Blank border inside the canvas, in pixels.
pub const MARGIN: f64 = 40.0;
/// Stroke width of grid lines.
pub const GRID_STROKE: f64 = 1.0;
/// Stroke width of landmark circles.
pub const LANDMARK_STROKE: f64 = 1.5;
/// Radius of landmark circles.
pub const LANDMARK_RADIUS: f64 = 4.0;
/// Grid line color.
pub const GRID_COLOR: &str = "#8a8a8a";
/// Source landmark color (hollow circles).
pub const SOURCE_COLOR: &str = "#1f77b4";
/// Target landmark color (filled circles).
pub const TARGET_COLOR: &str = "#d62728";

struct Canvas {
    scale: f64,
    x0: f64,
    y0: f64,
    cx: f64,
    cy: f64,
}

impl Canvas {
    /// Isotropic map from data space onto the canvas, y axis flipped so
    /// larger data y is drawn higher.
    fn fit(points: impl Iterator<Item = [f64; 2]>) -> Self {
        let mut min = [f64::INFINITY; 2];
        let mut max = [f64::NEG_INFINITY; 2];
        for p in points {
            for a in 0..2 {
                min[a] = min[a].min(p[a]);
                max[a] = max[a].max(p[a]);
            }
        }
        let span = (max[0] - min[0]).max(max[1] - min[1]).max(1e-12);
        let scale = (CANVAS - 2.0 * MARGIN) / span;
        Self {
            scale,
            x0: (min[0] + max[0]) / 2.0,
            y0: (min[1] + max[1]) / 2.0,
            cx: CANVAS / 2.0,
            cy: CANVAS / 2.0,
        }
    }

    fn map(&self, p: [f64; 2]) -> (f64, f64) {
        (
            self.cx + (p[0] - self.x0) * self.scale,
            self.cy - (p[1] - self.y0) * self.scale,
        )
    }
}

/// Renders a deformed grid with its source and target landmarks.
///
/// Grid rows and columns become polylines through the deformed node
/// positions; source landmarks are hollow circles, target landmarks filled
/// ones. The view is scaled isotropically to fit everything inside the
/// fixed canvas.
pub fn deformation_svg(grid: &DeformedGrid, source: &[[f64; 2]], target: &[[f64; 2]]) -> String {
    let canvas = Canvas::fit(
        grid.nodes
            .iter()
            .chain(source.iter())
            .chain(target.iter())
            .copied(),
    );
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{CANVAS}\" height=\"{CANVAS}\" viewBox=\"0 0 {CANVAS} {CANVAS}\">"
    );

    let polyline = |out: &mut String, nodes: &[usize]| {
        let mut points = String::new();
        for (n, &idx) in nodes.iter().enumerate() {
            let (x, y) = canvas.map(grid.nodes[idx]);
            if n > 0 {
                points.push(' ');
            }
            let _ = write!(points, "{x:.3},{y:.3}");
        }
        let _ = writeln!(
            out,
            "  <polyline points=\"{points}\" fill=\"none\" stroke=\"{GRID_COLOR}\" stroke-width=\"{GRID_STROKE}\"/>"
        );
    };
    for i in 0..grid.rows {
        let nodes: Vec<usize> = (0..grid.cols).map(|j| grid.index(i, j)).collect();
        polyline(&mut out, &nodes);
    }
    for j in 0..grid.cols {
        let nodes: Vec<usize> = (0..grid.rows).map(|i| grid.index(i, j)).collect();
        polyline(&mut out, &nodes);
    }

    for &p in source {
        let (x, y) = canvas.map(p);
        let _ = writeln!(
            out,
            "  <circle cx=\"{x:.3}\" cy=\"{y:.3}\" r=\"{LANDMARK_RADIUS}\" fill=\"none\" stroke=\"{SOURCE_COLOR}\" stroke-width=\"{LANDMARK_STROKE}\"/>"
        );
    }
    for &p in target {
        let (x, y) = canvas.map(p);
        let _ = writeln!(
            out,
            "  <circle cx=\"{x:.3}\" cy=\"{y:.3}\" r=\"{LANDMARK_RADIUS}\" fill=\"{TARGET_COLOR}\" stroke=\"none\"/>"
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shape::ConfigurationMatrix;
    use crate::tps;

    fn square_fit() -> (DeformedGrid, Vec<[f64; 2]>, Vec<[f64; 2]>) {
        let source_pts = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let target_pts = vec![[0.0, 0.0], [1.1, 0.1], [1.0, 1.2], [-0.1, 0.9]];
        let source = ConfigurationMatrix::from_points(&source_pts).unwrap();
        let target = ConfigurationMatrix::from_points(&target_pts).unwrap();
        let fit = tps::fit(&source, &target).unwrap();
        (fit.grid(5, 7, 0.1).unwrap(), source_pts, target_pts)
    }

    #[test]
    fn svg_contains_one_polyline_per_row_and_column_and_all_landmarks() {
        let (grid, source, target) = square_fit();
        let svg = deformation_svg(&grid, &source, &target);
        assert_eq!(svg.matches("<polyline").count(), 5 + 7);
        assert_eq!(svg.matches("fill=\"none\" stroke=\"#1f77b4\"").count(), 4);
        assert_eq!(svg.matches("fill=\"#d62728\"").count(), 4);
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn output_is_byte_deterministic() {
        let (grid, source, target) = square_fit();
        let a = deformation_svg(&grid, &source, &target);
        let b = deformation_svg(&grid, &source, &target);
        assert_eq!(a, b);
    }

    #[test]
    fn all_coordinates_stay_on_the_canvas() {
        let (grid, source, target) = square_fit();
        let svg = deformation_svg(&grid, &source, &target);
        for chunk in svg.split(|c: char| c == '"' || c == ' ' || c == ',') {
            if let Ok(v) = chunk.parse::<f64>() {
                assert!((-0.001..=CANVAS + 0.001).contains(&v), "coordinate {v} escapes");
            }
        }
    }

    #[test]
    fn landmarks_of_a_degenerate_extent_still_render() {
        let grid = DeformedGrid {
            rows: 2,
            cols: 2,
            source_nodes: vec![[0.5, 0.5]; 4],
            nodes: vec![[0.5, 0.5]; 4],
        };
        let svg = deformation_svg(&grid, &[[0.5, 0.5]], &[[0.5, 0.5]]);
        assert!(svg.contains("320.000"));
    }
}
