//! Graphviz export.

use std::fmt::Write as _;

use crate::canon::CanonicalOrder;
use crate::model::{ArchGraph, NodeSpec};

fn summary(spec: &NodeSpec) -> String {
    match spec {
        NodeSpec::Conv(c) => format!(
            "conv {}x{}/{} {}x{}x{}",
            c.kernel.width,
            c.kernel.height,
            c.stride.vertical,
            c.out_size.width,
            c.out_size.height,
            c.out_size.channels
        ),
        NodeSpec::Pool(p) => format!(
            "{}Pool {}x{}/{} {}x{}x{}",
            p.pool_type,
            p.kernel.width,
            p.kernel.height,
            p.stride.vertical,
            p.out_size.width,
            p.out_size.height,
            p.out_size.channels
        ),
        NodeSpec::Full(f) => match &f.act_fun {
            Some(a) => format!("full {}->{} {a}", f.in_size, f.out_size),
            None => format!("full {}->{}", f.in_size, f.out_size),
        },
        NodeSpec::Mf(m) => m.op_name.clone(),
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Nodes are emitted by position and edges by (from, to) position pairs.
/// Nodes missing from `order` are placed after all positioned ones, by name.
pub fn export_dot(g: &ArchGraph, order: &CanonicalOrder) -> String {
    let mut idx: Vec<usize> = (0..g.len()).collect();
    let key = |i: usize| (order.position(g.name(i)).unwrap_or(usize::MAX), g.name(i));
    idx.sort_by(|&a, &b| key(a).cmp(&key(b)));
    let mut rank = vec![0usize; g.len()];
    for (k, &i) in idx.iter().enumerate() {
        rank[i] = k + 1;
    }

    let mut out = String::from("digraph arctext {\n  node [shape=box];\n");
    for &i in &idx {
        writeln!(
            out,
            "  u{} [label=\"id:{}\\n{}\"];",
            rank[i],
            rank[i],
            escape(&summary(g.spec_at(i)))
        )
        .unwrap();
    }
    let mut edges: Vec<(usize, usize)> = g
        .edge_indices()
        .iter()
        .map(|&(a, b)| (rank[a], rank[b]))
        .collect();
    edges.sort_unstable();
    for (a, b) in edges {
        writeln!(out, "  u{a} -> u{b};").unwrap();
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canon::assign_positions;
    use crate::model::{build_graph, MfShape, MfSpec};

    #[test]
    fn two_node_chain() {
        let s = MfShape::Flat(3);
        let g = build_graph(
            [
                (
                    "b",
                    NodeSpec::Mf(MfSpec::new("BN", s, s, Vec::<String>::new())),
                ),
                (
                    "a",
                    NodeSpec::Mf(MfSpec::new("Re\"LU", s, s, Vec::<String>::new())),
                ),
            ],
            [("a", "b")],
        )
        .unwrap();
        let dot = export_dot(&g, &assign_positions(&g).unwrap());
        assert_eq!(
            dot,
            "digraph arctext {\n  node [shape=box];\n  u1 [label=\"id:1\\nRe\\\"LU\"];\n  u2 [label=\"id:2\\nBN\"];\n  u1 -> u2;\n}\n"
        );
    }
}
