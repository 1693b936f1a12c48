//! Static SVG scatter plots of the first two embedding dimensions.

use manifold_core::Embedding;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 640.0;
const MARGIN: f64 = 40.0;

/// Fixed palette cycled by class index.
const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

/// Renders the first two dimensions as an SVG scatter, colored by class
/// labels when given (colors assigned in order of first appearance).
/// One-dimensional embeddings plot against a zero ordinate.
pub fn scatter_svg(emb: &Embedding, labels: Option<&[String]>) -> String {
    let n = emb.len();
    let xs: Vec<f64> = (0..n).map(|j| emb.coordinates()[(0, j)]).collect();
    let ys: Vec<f64> = (0..n)
        .map(|j| {
            if emb.dim() >= 2 {
                emb.coordinates()[(1, j)]
            } else {
                0.0
            }
        })
        .collect();
    let (x_lo, x_hi) = bounds(&xs);
    let (y_lo, y_hi) = bounds(&ys);
    let sx = (WIDTH - 2.0 * MARGIN) / (x_hi - x_lo);
    let sy = (HEIGHT - 2.0 * MARGIN) / (y_hi - y_lo);

    let mut class_of: Vec<usize> = vec![0; n];
    if let Some(labels) = labels {
        let mut seen: Vec<&str> = Vec::new();
        for (j, label) in labels.iter().enumerate() {
            let idx = match seen.iter().position(|s| *s == label.as_str()) {
                Some(i) => i,
                None => {
                    seen.push(label);
                    seen.len() - 1
                }
            };
            class_of[j] = idx;
        }
    }

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    for j in 0..n {
        let px = MARGIN + (xs[j] - x_lo) * sx;
        // SVG y axis points down
        let py = HEIGHT - MARGIN - (ys[j] - y_lo) * sy;
        let color = PALETTE[class_of[j] % PALETTE.len()];
        svg.push_str(&format!(
            "<circle cx=\"{px:.2}\" cy=\"{py:.2}\" r=\"2.5\" fill=\"{color}\" fill-opacity=\"0.75\"/>\n"
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

fn bounds(values: &[f64]) -> (f64, f64) {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(lo.is_finite() && hi.is_finite()) || lo == hi {
        (lo.min(0.0) - 1.0, hi.max(0.0) + 1.0)
    } else {
        (lo, hi)
    }
}
