//! Graph export for visual inspection of the filtered patient network.
//!
//! Two formats: Graphviz DOT and GraphML. Both carry the same styling so a
//! cohort looks identical whichever tool renders it:
//!
//! * edge thickness grows linearly with kernel weight, 0.5pt for the
//!   weakest surviving edge up to 5pt for the strongest;
//! * edge color sweeps from cool blue to warm red over the same range;
//! * positive samples are squares, the rest circles;
//! * node fill fades from white to red with the sample's score.
//!
//! Edges with weight exactly zero were removed by the filter and are not
//! drawn. A graph whose surviving weights (or scores) are all equal has no
//! range to map, so every element sits at the midpoint of its scale.

use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::tsv::write_atomic;

const EDGE_COOL: (u8, u8, u8) = (0x3B, 0x4C, 0xC0);
const EDGE_HOT: (u8, u8, u8) = (0xB4, 0x04, 0x26);
const FILL_LOW: (u8, u8, u8) = (0xFF, 0xFF, 0xFF);
const FILL_HIGH: (u8, u8, u8) = (0xB4, 0x04, 0x26);
const WIDTH_MIN: f64 = 0.5;
const WIDTH_MAX: f64 = 5.0;

fn blend(a: (u8, u8, u8), b: (u8, u8, u8), t: f64) -> String {
    let ch = |x: u8, y: u8| (x as f64 + t * (y as f64 - x as f64)).round() as u8;
    format!("#{:02X}{:02X}{:02X}", ch(a.0, b.0), ch(a.1, b.1), ch(a.2, b.2))
}

/// Position of `v` in [lo, hi] as a fraction; 0.5 when the range collapses.
fn unit_pos(v: f64, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        (v - lo) / (hi - lo)
    } else {
        0.5
    }
}

struct NodeView {
    id: String,
    positive: bool,
    score: f64,
    fill: String,
}

struct EdgeView {
    a: usize,
    b: usize,
    weight: f64,
    width: f64,
    color: String,
}

struct GraphView {
    nodes: Vec<NodeView>,
    edges: Vec<EdgeView>,
}

fn build_view(
    sample_ids: &[String],
    positive: &[bool],
    scores: &[f64],
    kernel: &Array2<f64>,
) -> Result<GraphView> {
    let n = sample_ids.len();
    if positive.len() != n || scores.len() != n {
        return Err(Error::invalid(format!(
            "{} ids, {} labels, {} scores — all three must match",
            n,
            positive.len(),
            scores.len()
        )));
    }
    if kernel.nrows() != n || kernel.ncols() != n {
        return Err(Error::invalid(format!(
            "kernel is {}x{} but there are {} samples",
            kernel.nrows(),
            kernel.ncols(),
            n
        )));
    }
    if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::invalid(format!("non-finite score {bad}")));
    }

    // collect surviving edges first so the weight range reflects only what
    // is actually drawn
    let mut raw = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let w = kernel[(i, j)];
            if !w.is_finite() {
                return Err(Error::invalid(format!("non-finite weight {w} at ({i}, {j})")));
            }
            if w != 0.0 {
                raw.push((i, j, w));
            }
        }
    }
    let (w_lo, w_hi) = raw.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |acc, e| {
        (acc.0.min(e.2), acc.1.max(e.2))
    });
    let edges = raw
        .into_iter()
        .map(|(a, b, weight)| {
            let t = unit_pos(weight, w_lo, w_hi);
            EdgeView {
                a,
                b,
                weight,
                width: WIDTH_MIN + t * (WIDTH_MAX - WIDTH_MIN),
                color: blend(EDGE_COOL, EDGE_HOT, t),
            }
        })
        .collect();

    let (s_lo, s_hi) = scores.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |acc, &s| {
        (acc.0.min(s), acc.1.max(s))
    });
    let nodes = (0..n)
        .map(|i| NodeView {
            id: sample_ids[i].clone(),
            positive: positive[i],
            score: scores[i],
            fill: blend(FILL_LOW, FILL_HIGH, unit_pos(scores[i], s_lo, s_hi)),
        })
        .collect();

    Ok(GraphView { nodes, edges })
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
        .replace('\'', "&apos;")
}

/// Writes the cohort graph in Graphviz DOT form.
pub fn export_dot(
    path: &Path,
    sample_ids: &[String],
    positive: &[bool],
    scores: &[f64],
    kernel: &Array2<f64>,
) -> Result<()> {
    let view = build_view(sample_ids, positive, scores, kernel)?;
    let mut out = String::new();
    out.push_str("graph cohort {\n");
    out.push_str("  node [style=filled, fontname=\"Helvetica\"];\n");
    for node in &view.nodes {
        let shape = if node.positive { "box" } else { "ellipse" };
        out.push_str(&format!(
            "  \"{}\" [shape={}, fillcolor=\"{}\", label=\"{}\\n{}\"];\n",
            dot_escape(&node.id),
            shape,
            node.fill,
            dot_escape(&node.id),
            node.score
        ));
    }
    for e in &view.edges {
        out.push_str(&format!(
            "  \"{}\" -- \"{}\" [penwidth={}, color=\"{}\", tooltip=\"{}\"];\n",
            dot_escape(&view.nodes[e.a].id),
            dot_escape(&view.nodes[e.b].id),
            e.width,
            e.color,
            e.weight
        ));
    }
    out.push_str("}\n");
    write_atomic(path, out.as_bytes())
}

/// Writes the cohort graph as GraphML with the styling stored in data keys.
pub fn export_graphml(
    path: &Path,
    sample_ids: &[String],
    positive: &[bool],
    scores: &[f64],
    kernel: &Array2<f64>,
) -> Result<()> {
    let view = build_view(sample_ids, positive, scores, kernel)?;
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str("<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n");
    out.push_str("  <key id=\"positive\" for=\"node\" attr.name=\"positive\" attr.type=\"boolean\"/>\n");
    out.push_str("  <key id=\"score\" for=\"node\" attr.name=\"score\" attr.type=\"double\"/>\n");
    out.push_str("  <key id=\"shape\" for=\"node\" attr.name=\"shape\" attr.type=\"string\"/>\n");
    out.push_str("  <key id=\"fill\" for=\"node\" attr.name=\"fill\" attr.type=\"string\"/>\n");
    out.push_str("  <key id=\"weight\" for=\"edge\" attr.name=\"weight\" attr.type=\"double\"/>\n");
    out.push_str("  <key id=\"width\" for=\"edge\" attr.name=\"width\" attr.type=\"double\"/>\n");
    out.push_str("  <key id=\"color\" for=\"edge\" attr.name=\"color\" attr.type=\"string\"/>\n");
    out.push_str("  <graph id=\"cohort\" edgedefault=\"undirected\">\n");
    for node in &view.nodes {
        let shape = if node.positive { "square" } else { "circle" };
        out.push_str(&format!(
            "    <node id=\"{}\">\n      <data key=\"positive\">{}</data>\n      <data key=\"score\">{}</data>\n      <data key=\"shape\">{}</data>\n      <data key=\"fill\">{}</data>\n    </node>\n",
            xml_escape(&node.id),
            node.positive,
            node.score,
            shape,
            node.fill
        ));
    }
    for e in &view.edges {
        out.push_str(&format!(
            "    <edge source=\"{}\" target=\"{}\">\n      <data key=\"weight\">{}</data>\n      <data key=\"width\">{}</data>\n      <data key=\"color\">{}</data>\n    </edge>\n",
            xml_escape(&view.nodes[e.a].id),
            xml_escape(&view.nodes[e.b].id),
            e.weight,
            e.width,
            e.color
        ));
    }
    out.push_str("  </graph>\n</graphml>\n");
    write_atomic(path, out.as_bytes())
}
