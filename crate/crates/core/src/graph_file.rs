//! JSON graph files.
//!
//! ```json
//! {
//!   "nodes": [
//!     {"name":"S","kind":"conv","in_size":[32,32,3],"out_size":[32,32,3],"kernel":[1,1],
//!      "stride":[1,1],"padding":[[0,0],[0,0],[0,0],[0,0]],"dilation":1,"groups":1,"bias_used":false},
//!     {"name":"E","kind":"mf","op_name":"Dropout","in_size":[512],"out_size":[512],"values":["0.5"]}
//!   ],
//!   "edges": [["S","E"]]
//! }
//! ```
//!
//! Conv padding is four `[value, count]` pairs (up, down, left, right); pool
//! padding is four counts. Unknown keys are rejected.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canon::CanonicalOrder;
use crate::model::{
    build_graph, ArchGraph, ConvSpec, FullSpec, GraphError, Kernel, MfShape, MfSpec, NodeSpec,
    PadEntry, PoolSpec, PoolType, Shape3, Sides, Stride,
};

#[derive(Debug, Error)]
pub enum GraphFileError {
    #[error("{0}: file not found")]
    FileNotFound(PathBuf),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error in {location}: {message}")]
    Schema { location: String, message: String },
    #[error("{location}: {source}")]
    Graph {
        location: String,
        source: GraphError,
    },
}

impl GraphFileError {
    pub fn code(&self) -> &'static str {
        match self {
            GraphFileError::FileNotFound(_) => "FileNotFound",
            GraphFileError::Io { .. } => "IoError",
            GraphFileError::Syntax { .. } => "SyntaxError",
            GraphFileError::Schema { .. } => "SchemaError",
            GraphFileError::Graph { source, .. } => source.code(),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    nodes: Vec<serde_json::Value>,
    edges: Vec<(String, String)>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum NodeRecord {
    Conv(ConvRecord),
    Pool(PoolRecord),
    Full(FullRecord),
    Mf(MfRecord),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConvRecord {
    name: String,
    in_size: [u32; 3],
    out_size: [u32; 3],
    kernel: [u32; 2],
    stride: [u32; 2],
    padding: [[u32; 2]; 4],
    dilation: u32,
    groups: u32,
    bias_used: bool,
}

#[derive(Serialize, Deserialize)]
enum PoolTypeRecord {
    Max,
    Avg,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoolRecord {
    name: String,
    pool_type: PoolTypeRecord,
    in_size: [u32; 3],
    out_size: [u32; 3],
    kernel: [u32; 2],
    stride: [u32; 2],
    padding: [u32; 4],
    dilation: u32,
    bias_used: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FullRecord {
    name: String,
    in_size: u32,
    out_size: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    act_fun: Option<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MfRecord {
    name: String,
    op_name: String,
    in_size: Vec<u32>,
    out_size: Vec<u32>,
    #[serde(default)]
    values: Vec<String>,
}

fn shape3([w, h, c]: [u32; 3]) -> Shape3 {
    Shape3::new(w, h, c)
}

impl NodeRecord {
    fn into_node(self) -> Result<(String, NodeSpec), String> {
        Ok(match self {
            NodeRecord::Conv(r) => {
                let pad = r.padding.map(|[v, c]| PadEntry::new(v, c));
                (
                    r.name,
                    NodeSpec::Conv(ConvSpec {
                        in_size: shape3(r.in_size),
                        out_size: shape3(r.out_size),
                        kernel: Kernel::new(r.kernel[0], r.kernel[1]),
                        stride: Stride::new(r.stride[0], r.stride[1]),
                        padding: Sides::new(pad[0], pad[1], pad[2], pad[3]),
                        dilation: r.dilation,
                        groups: r.groups,
                        bias_used: r.bias_used,
                    }),
                )
            }
            NodeRecord::Pool(r) => {
                let [up, down, left, right] = r.padding;
                (
                    r.name,
                    NodeSpec::Pool(PoolSpec {
                        pool_type: match r.pool_type {
                            PoolTypeRecord::Max => PoolType::Max,
                            PoolTypeRecord::Avg => PoolType::Avg,
                        },
                        in_size: shape3(r.in_size),
                        out_size: shape3(r.out_size),
                        kernel: Kernel::new(r.kernel[0], r.kernel[1]),
                        stride: Stride::new(r.stride[0], r.stride[1]),
                        padding: Sides::new(up, down, left, right),
                        dilation: r.dilation,
                        bias_used: r.bias_used,
                    }),
                )
            }
            NodeRecord::Full(r) => (
                r.name,
                NodeSpec::Full(FullSpec {
                    in_size: r.in_size,
                    out_size: r.out_size,
                    act_fun: r.act_fun,
                }),
            ),
            NodeRecord::Mf(r) => {
                let shape = |key: &str, v: &[u32]| {
                    MfShape::from_slice(v)
                        .ok_or_else(|| format!("{key} must have 1 or 3 entries, found {}", v.len()))
                };
                let spec = MfSpec::new(
                    r.op_name,
                    shape("in_size", &r.in_size)?,
                    shape("out_size", &r.out_size)?,
                    r.values,
                );
                (r.name, NodeSpec::Mf(spec))
            }
        })
    }

    fn from_node(name: &str, spec: &NodeSpec) -> Self {
        let name = name.to_owned();
        match spec {
            NodeSpec::Conv(c) => NodeRecord::Conv(ConvRecord {
                name,
                in_size: [c.in_size.width, c.in_size.height, c.in_size.channels],
                out_size: [c.out_size.width, c.out_size.height, c.out_size.channels],
                kernel: [c.kernel.width, c.kernel.height],
                stride: [c.stride.vertical, c.stride.horizontal],
                padding: c.padding.to_array().map(|p| [p.value, p.count]),
                dilation: c.dilation,
                groups: c.groups,
                bias_used: c.bias_used,
            }),
            NodeSpec::Pool(p) => NodeRecord::Pool(PoolRecord {
                name,
                pool_type: match p.pool_type {
                    PoolType::Max => PoolTypeRecord::Max,
                    PoolType::Avg => PoolTypeRecord::Avg,
                },
                in_size: [p.in_size.width, p.in_size.height, p.in_size.channels],
                out_size: [p.out_size.width, p.out_size.height, p.out_size.channels],
                kernel: [p.kernel.width, p.kernel.height],
                stride: [p.stride.vertical, p.stride.horizontal],
                padding: p.padding.to_array(),
                dilation: p.dilation,
                bias_used: p.bias_used,
            }),
            NodeSpec::Full(f) => NodeRecord::Full(FullRecord {
                name,
                in_size: f.in_size,
                out_size: f.out_size,
                act_fun: f.act_fun.clone(),
            }),
            NodeSpec::Mf(m) => NodeRecord::Mf(MfRecord {
                name,
                op_name: m.op_name.clone(),
                in_size: m.in_size.to_vec(),
                out_size: m.out_size.to_vec(),
                values: m.values.clone(),
            }),
        }
    }
}

fn record_label(i: usize, v: &serde_json::Value) -> String {
    match v.get("name").and_then(|n| n.as_str()) {
        Some(n) => format!("node record {i} ({n:?})"),
        None => format!("node record {i}"),
    }
}

/// Parses graph-file text.
pub fn parse_graph_file(text: &str) -> Result<ArchGraph, GraphFileError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| GraphFileError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
    let doc: Document = serde_json::from_value(value).map_err(|e| GraphFileError::Schema {
        location: "document".into(),
        message: e.to_string(),
    })?;

    let mut nodes = Vec::with_capacity(doc.nodes.len());
    for (i, raw) in doc.nodes.iter().enumerate() {
        let schema_err = |message: String| GraphFileError::Schema {
            location: record_label(i, raw),
            message,
        };
        let rec: NodeRecord =
            serde_json::from_value(raw.clone()).map_err(|e| schema_err(e.to_string()))?;
        nodes.push(rec.into_node().map_err(schema_err)?);
    }

    build_graph(nodes.iter().cloned(), doc.edges.iter().map(|(a, b)| (a, b))).map_err(|source| {
        let location = locate(&source, &nodes, &doc.edges);
        GraphFileError::Graph { location, source }
    })
}

fn locate(err: &GraphError, nodes: &[(String, NodeSpec)], edges: &[(String, String)]) -> String {
    let edge_at = |from: &str, to: &str, nth: usize| {
        edges
            .iter()
            .enumerate()
            .filter(|(_, (a, b))| a == from && b == to)
            .nth(nth)
            .map(|(i, _)| format!("edge {i}"))
    };
    let found = match err {
        GraphError::DuplicateNodeName(n) => nodes
            .iter()
            .enumerate()
            .filter(|(_, (name, _))| name == n)
            .nth(1)
            .map(|(i, _)| format!("node record {i} ({n:?})")),
        GraphError::EmptyNodeName => nodes
            .iter()
            .position(|(n, _)| n.is_empty())
            .map(|i| format!("node record {i}")),
        GraphError::InvalidSpec { node, .. } => nodes
            .iter()
            .position(|(n, _)| n == node)
            .map(|i| format!("node record {i} ({node:?})")),
        GraphError::UnknownEdgeEndpoint { from, to, .. } => edge_at(from, to, 0),
        GraphError::SelfLoop(n) => edge_at(n, n, 0),
        GraphError::DuplicateEdge { from, to } => edge_at(from, to, 1),
        GraphError::CycleDetected(_) => Some("edges".into()),
    };
    found.unwrap_or_else(|| "graph".into())
}

pub fn load_graph_file(path: impl AsRef<Path>) -> Result<ArchGraph, GraphFileError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => GraphFileError::FileNotFound(path.to_owned()),
        _ => GraphFileError::Io {
            path: path.to_owned(),
            source: e,
        },
    })?;
    parse_graph_file(&text)
}

/// Serializes `g`. Nodes are listed by position when `order` is given,
/// otherwise by name; edges follow the same ordering.
pub fn graph_file_string(g: &ArchGraph, order: Option<&CanonicalOrder>) -> String {
    let mut idx: Vec<usize> = (0..g.len()).collect();
    let rank = |i: usize| order.and_then(|o| o.position(g.name(i)));
    idx.sort_by(|&a, &b| (rank(a), g.name(a)).cmp(&(rank(b), g.name(b))));
    let mut slot = vec![0; g.len()];
    for (k, &i) in idx.iter().enumerate() {
        slot[i] = k;
    }
    let mut edges: Vec<(usize, usize)> = g.edge_indices().to_vec();
    edges.sort_by_key(|&(a, b)| (slot[a], slot[b]));

    let mut out = String::from("{\n  \"nodes\": [\n");
    for (k, &i) in idx.iter().enumerate() {
        let rec = NodeRecord::from_node(g.name(i), g.spec_at(i));
        out.push_str("    ");
        out.push_str(&serde_json::to_string(&rec).expect("records serialize"));
        out.push_str(if k + 1 < idx.len() { ",\n" } else { "\n" });
    }
    out.push_str("  ],\n  \"edges\": [\n");
    for (k, &(a, b)) in edges.iter().enumerate() {
        out.push_str("    ");
        out.push_str(&serde_json::to_string(&(g.name(a), g.name(b))).unwrap());
        out.push_str(if k + 1 < edges.len() { ",\n" } else { "\n" });
    }
    out.push_str("  ]\n}\n");
    out
}

pub fn save_graph_file(
    g: &ArchGraph,
    path: impl AsRef<Path>,
    order: Option<&CanonicalOrder>,
) -> Result<(), GraphFileError> {
    let path = path.as_ref();
    fs::write(path, graph_file_string(g, order)).map_err(|source| GraphFileError::Io {
        path: path.to_owned(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"{
      "nodes": [
        {"name":"A","kind":"conv","in_size":[8,8,3],"out_size":[8,8,4],"kernel":[1,1],"stride":[1,1],
         "padding":[[0,0],[0,0],[0,0],[0,0]],"dilation":1,"groups":1,"bias_used":true},
        {"name":"B","kind":"pool","pool_type":"Avg","in_size":[8,8,4],"out_size":[4,4,4],"kernel":[2,2],
         "stride":[2,2],"padding":[0,0,0,0],"dilation":1,"bias_used":false},
        {"name":"C","kind":"full","in_size":64,"out_size":10},
        {"name":"D","kind":"mf","op_name":"Dropout","in_size":[10],"out_size":[10],"values":["0.5"]}
      ],
      "edges": [["A","B"],["B","C"],["C","D"]]
    }"#;

    #[test]
    fn parse_and_round_trip() {
        let g = parse_graph_file(SMALL).unwrap();
        assert_eq!(g.len(), 4);
        assert!(matches!(g.spec("C"), Some(NodeSpec::Full(f)) if f.act_fun.is_none()));
        let again = parse_graph_file(&graph_file_string(&g, None)).unwrap();
        assert_eq!(g, again);
    }

    #[test]
    fn unknown_kind_names_record() {
        let text = SMALL.replace(r#""kind":"full""#, r#""kind":"dense""#);
        let err = parse_graph_file(&text).unwrap_err();
        match err {
            GraphFileError::Schema { location, .. } => {
                assert_eq!(location, "node record 2 (\"C\")")
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn unknown_key_rejected() {
        let text = SMALL.replace(r#""in_size":64"#, r#""in_size":64,"units":3"#);
        assert_eq!(parse_graph_file(&text).unwrap_err().code(), "SchemaError");
        let text = SMALL.replace(r#""edges""#, r#""extra":1,"edges""#);
        assert_eq!(parse_graph_file(&text).unwrap_err().code(), "SchemaError");
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse_graph_file("{\n  \"nodes\": [,\n}").unwrap_err();
        assert!(
            matches!(err, GraphFileError::Syntax { line: 2, .. }),
            "{err:?}"
        );
    }

    #[test]
    fn graph_errors_are_located() {
        let text = SMALL.replace(r#"["C","D"]"#, r#"["C","D"],["B","C"]"#);
        let err = parse_graph_file(&text).unwrap_err();
        assert_eq!(err.code(), "DuplicateEdge");
        assert!(err.to_string().starts_with("edge 3"), "{err}");
    }

    #[test]
    fn bad_mf_arity() {
        let text = SMALL.replace(r#""in_size":[10]"#, r#""in_size":[10,10]"#);
        assert_eq!(parse_graph_file(&text).unwrap_err().code(), "SchemaError");
    }
}
