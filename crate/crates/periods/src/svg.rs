//! SVG rendering of translation surfaces and slit diagrams.
//!
//! This is the one module that leaves exact arithmetic: coordinates are
//! converted to f64 at the very end and printed with fixed precision, so
//! identical inputs always produce byte-identical documents. Nothing here
//! feeds back into any decision or construction.

use std::fmt::Write as _;

use crate::builder::{SlitDiagram, SlitGluing};
use crate::surface::{EdgeRef, MarkedCurve, TranslationSurface};

/// Colors cycled through for marked curves and slit roles.
const PALETTE: [&str; 8] = [
    "#c62828", "#1565c0", "#2e7d32", "#ef6c00", "#6a1b9a", "#00838f", "#ad1457", "#4e342e",
];

const FILL: &str = "#eef3fa";
const OUTLINE: &str = "#37474f";

/// Canvas width the drawing is scaled to; height follows the aspect ratio.
const TARGET_WIDTH: f64 = 900.0;
const MARGIN: f64 = 36.0;

fn fmt_len(x: f64) -> String {
    // Round first so that -0.0004 prints as "0", not "-0".
    let r = (x * 1000.0).round() / 1000.0;
    let r = if r == 0.0 { 0.0 } else { r };
    if r == r.trunc() {
        format!("{}", r as i64)
    } else {
        format!("{:.3}", r)
    }
}

/// A plane drawing transform: world coordinates (y up) to canvas (y down).
struct View {
    scale: f64,
    min_x: f64,
    max_y: f64,
    width: f64,
    height: f64,
}

impl View {
    fn fit(points: &[(f64, f64)]) -> View {
        let mut min_x = f64::INFINITY;
        let mut max_x = f64::NEG_INFINITY;
        let mut min_y = f64::INFINITY;
        let mut max_y = f64::NEG_INFINITY;
        for &(x, y) in points {
            min_x = min_x.min(x);
            max_x = max_x.max(x);
            min_y = min_y.min(y);
            max_y = max_y.max(y);
        }
        let w = (max_x - min_x).max(1e-9);
        let h = (max_y - min_y).max(1e-9);
        let scale = (TARGET_WIDTH - 2.0 * MARGIN) / w;
        View {
            scale,
            min_x,
            max_y,
            width: TARGET_WIDTH,
            height: h * scale + 2.0 * MARGIN,
        }
    }

    fn map(&self, p: (f64, f64)) -> (f64, f64) {
        (
            MARGIN + (p.0 - self.min_x) * self.scale,
            MARGIN + (self.max_y - p.1) * self.scale,
        )
    }
}

fn header(view: &View) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {} {}\" \
         font-family=\"monospace\" font-size=\"12\">\n",
        fmt_len(view.width),
        fmt_len(view.height)
    )
}

/// Absolute vertex chains of every polygon, laid out left to right with a
/// uniform gap so the pieces never overlap.
fn layout(surface: &TranslationSurface) -> Vec<Vec<(f64, f64)>> {
    let mut chains: Vec<Vec<(f64, f64)>> = Vec::new();
    for poly in surface.polygons() {
        let mut v = vec![(0.0, 0.0)];
        for e in poly {
            let (dx, dy) = e.approx();
            let last = *v.last().unwrap();
            v.push((last.0 + dx, last.1 + dy));
        }
        v.pop();
        chains.push(v);
    }
    // Gap proportional to the largest piece so labels stay legible.
    let mut max_w: f64 = 0.0;
    for c in &chains {
        let min = c.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let max = c.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
        max_w = max_w.max(max - min);
    }
    let gap = 0.25 * max_w.max(1e-9);
    let mut cursor = 0.0;
    for c in &mut chains {
        let min_x = c.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let shift = cursor - min_x;
        for p in c.iter_mut() {
            p.0 += shift;
        }
        let max_x = c.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
        cursor = max_x + gap;
    }
    chains
}

/// Midpoint of an edge, nudged toward the polygon interior for labels.
fn label_pos(chain: &[(f64, f64)], edge: usize, inward: f64, offset: f64) -> (f64, f64) {
    let a = chain[edge];
    let b = chain[(edge + 1) % chain.len()];
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len = (dx * dx + dy * dy).sqrt().max(1e-9);
    // Left normal of the directed edge; interior side for positive area.
    let (nx, ny) = (-dy / len * inward, dx / len * inward);
    (
        (a.0 + b.0) / 2.0 + nx * offset,
        (a.1 + b.1) / 2.0 + ny * offset,
    )
}

fn signed_area(chain: &[(f64, f64)]) -> f64 {
    let mut s = 0.0;
    for i in 0..chain.len() {
        let a = chain[i];
        let b = chain[(i + 1) % chain.len()];
        s += a.0 * b.1 - a.1 * b.0;
    }
    s / 2.0
}

/// Renders a translation surface: polygons side by side, matching edge pairs
/// tagged with the same number, marked curves stroked in the palette colors
/// with a legend.
pub fn render_surface(
    surface: &TranslationSurface,
    curves: &[(String, MarkedCurve)],
) -> String {
    let chains = layout(surface);
    let all: Vec<(f64, f64)> = chains.iter().flatten().copied().collect();
    let view = View::fit(&all);
    let mut out = header(&view);

    // Polygon bodies.
    for chain in &chains {
        let pts: Vec<String> = chain
            .iter()
            .map(|&p| {
                let (x, y) = view.map(p);
                format!("{},{}", fmt_len(x), fmt_len(y))
            })
            .collect();
        let _ = writeln!(
            out,
            "<polygon points=\"{}\" fill=\"{}\" stroke=\"{}\" stroke-width=\"1.5\"/>",
            pts.join(" "),
            FILL,
            OUTLINE
        );
    }

    // Marked curves under the pair labels, one palette color each.
    let mut legend_y = 16.0;
    for (ci, (name, curve)) in curves.iter().enumerate() {
        let color = PALETTE[ci % PALETTE.len()];
        for e in &curve.edges {
            let chain = &chains[e.poly];
            let a = view.map(chain[e.edge]);
            let b = view.map(chain[(e.edge + 1) % chain.len()]);
            let _ = writeln!(
                out,
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" \
                 stroke-width=\"4\" stroke-opacity=\"0.45\"/>",
                fmt_len(a.0),
                fmt_len(a.1),
                fmt_len(b.0),
                fmt_len(b.1),
                color
            );
        }
        let _ = writeln!(
            out,
            "<text x=\"6\" y=\"{}\" fill=\"{}\">{}</text>",
            fmt_len(legend_y),
            color,
            name
        );
        legend_y += 14.0;
    }

    // Edge pair tags: the same number on both members of a glued pair.
    let mut tag = 0usize;
    for (pi, chain) in chains.iter().enumerate() {
        let inward = if signed_area(chain) >= 0.0 { 1.0 } else { -1.0 };
        for ei in 0..chain.len() {
            let here = EdgeRef::new(pi, ei);
            let there = surface.pair(here);
            if (there.poly, there.edge) < (pi, ei) {
                continue;
            }
            tag += 1;
            for e in [here, there] {
                let c = &chains[e.poly];
                let inw = if e.poly == pi {
                    inward
                } else if signed_area(c) >= 0.0 {
                    1.0
                } else {
                    -1.0
                };
                let p = label_pos(c, e.edge, inw, 14.0 / view.scale);
                let (x, y) = view.map(p);
                let _ = writeln!(
                    out,
                    "<text x=\"{}\" y=\"{}\" fill=\"{}\" text-anchor=\"middle\" \
                     dominant-baseline=\"middle\">{}</text>",
                    fmt_len(x),
                    fmt_len(y),
                    OUTLINE,
                    tag
                );
            }
        }
    }

    out.push_str("</svg>\n");
    out
}

/// Renders a slit diagram: the base parallelogram with every cut drawn and
/// tagged by its gluing role (h = handle, x = cross, c = chain).
pub fn render_diagram(diagram: &SlitDiagram) -> String {
    let a = diagram.base_a.approx();
    let b = diagram.base_b.approx();
    let corners = [
        (0.0, 0.0),
        a,
        (a.0 + b.0, a.1 + b.1),
        b,
    ];
    let mut all: Vec<(f64, f64)> = corners.to_vec();
    let mut segments: Vec<((f64, f64), (f64, f64))> = Vec::new();
    for s in &diagram.slits {
        let p = s.anchor.approx();
        let v = s.vector.approx();
        let q = (p.0 + v.0, p.1 + v.1);
        all.push(p);
        all.push(q);
        segments.push((p, q));
    }
    let view = View::fit(&all);
    let mut out = header(&view);

    let pts: Vec<String> = corners
        .iter()
        .map(|&p| {
            let (x, y) = view.map(p);
            format!("{},{}", fmt_len(x), fmt_len(y))
        })
        .collect();
    let _ = writeln!(
        out,
        "<polygon points=\"{}\" fill=\"{}\" stroke=\"{}\" stroke-width=\"1.5\"/>",
        pts.join(" "),
        FILL,
        OUTLINE
    );

    // Role letter per slit index, from the gluing list.
    let mut role = vec!["?"; diagram.slits.len()];
    for g in &diagram.gluings {
        match g {
            SlitGluing::Chain { members } => {
                for &m in members {
                    role[m] = "c";
                }
            }
            SlitGluing::Handle { slit, .. } => role[*slit] = "h",
            SlitGluing::Cross { slit, .. } => role[*slit] = "x",
        }
    }

    for (i, &(p, q)) in segments.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let (x1, y1) = view.map(p);
        let (x2, y2) = view.map(q);
        let _ = writeln!(
            out,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"2.5\"/>",
            fmt_len(x1),
            fmt_len(y1),
            fmt_len(x2),
            fmt_len(y2),
            color
        );
        for (x, y) in [(x1, y1), (x2, y2)] {
            let _ = writeln!(
                out,
                "<circle cx=\"{}\" cy=\"{}\" r=\"2.5\" fill=\"{}\"/>",
                fmt_len(x),
                fmt_len(y),
                color
            );
        }
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" fill=\"{}\" text-anchor=\"middle\">{}{}</text>",
            fmt_len((x1 + x2) / 2.0),
            fmt_len((y1 + y2) / 2.0 - 6.0),
            color,
            role[i],
            i
        );
    }

    out.push_str("</svg>\n");
    out
}
