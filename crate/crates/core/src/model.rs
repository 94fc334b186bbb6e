//! Architecture graph data model.
//!
//! Nodes carry one of four property bags (convolution, pooling, fully
//! connected, multi-function operation). Node names are transport-only: they
//! identify nodes while building a graph but never reach the rendered text.

use std::collections::{HashMap, HashSet};
use std::fmt;

use thiserror::Error;

/// Width, height, channels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Shape3 {
    pub width: u32,
    pub height: u32,
    pub channels: u32,
}

impl Shape3 {
    pub const fn new(width: u32, height: u32, channels: u32) -> Self {
        Self {
            width,
            height,
            channels,
        }
    }

    pub fn to_vec(self) -> Vec<u32> {
        vec![self.width, self.height, self.channels]
    }

    fn all_positive(self) -> bool {
        self.width >= 1 && self.height >= 1 && self.channels >= 1
    }
}

/// Kernel extent as (width, height).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Kernel {
    pub width: u32,
    pub height: u32,
}

impl Kernel {
    pub const fn new(width: u32, height: u32) -> Self {
        Self { width, height }
    }
}

/// Stride as (vertical, horizontal) step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Stride {
    pub vertical: u32,
    pub horizontal: u32,
}

impl Stride {
    pub const fn new(vertical: u32, horizontal: u32) -> Self {
        Self {
            vertical,
            horizontal,
        }
    }
}

/// One direction of convolution padding: the fill value and how many
/// rows/columns of it are added.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct PadEntry {
    pub value: u32,
    pub count: u32,
}

impl PadEntry {
    pub const fn new(value: u32, count: u32) -> Self {
        Self { value, count }
    }
}

/// Padding on the four sides, in the order up, down, left, right.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Sides<T> {
    pub up: T,
    pub down: T,
    pub left: T,
    pub right: T,
}

impl<T: Copy> Sides<T> {
    pub const fn new(up: T, down: T, left: T, right: T) -> Self {
        Self {
            up,
            down,
            left,
            right,
        }
    }

    pub const fn uniform(v: T) -> Self {
        Self::new(v, v, v, v)
    }

    pub fn to_array(self) -> [T; 4] {
        [self.up, self.down, self.left, self.right]
    }
}

pub type ConvPadding = Sides<PadEntry>;
pub type PoolPadding = Sides<u32>;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ConvSpec {
    pub in_size: Shape3,
    pub out_size: Shape3,
    pub kernel: Kernel,
    pub stride: Stride,
    pub padding: ConvPadding,
    pub dilation: u32,
    pub groups: u32,
    pub bias_used: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PoolType {
    Max,
    Avg,
}

impl PoolType {
    pub fn as_str(self) -> &'static str {
        match self {
            PoolType::Max => "Max",
            PoolType::Avg => "Avg",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "Max" => Some(PoolType::Max),
            "Avg" => Some(PoolType::Avg),
            _ => None,
        }
    }
}

impl fmt::Display for PoolType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PoolSpec {
    pub pool_type: PoolType,
    pub in_size: Shape3,
    pub out_size: Shape3,
    pub kernel: Kernel,
    pub stride: Stride,
    pub padding: PoolPadding,
    pub dilation: u32,
    pub bias_used: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FullSpec {
    pub in_size: u32,
    pub out_size: u32,
    pub act_fun: Option<String>,
}

/// Shape of a multi-function operation's input or output: either a flat
/// vector length or a full 3-d tensor shape.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MfShape {
    Flat(u32),
    Spatial(Shape3),
}

impl MfShape {
    pub fn to_vec(self) -> Vec<u32> {
        match self {
            MfShape::Flat(n) => vec![n],
            MfShape::Spatial(s) => s.to_vec(),
        }
    }

    pub fn from_slice(dims: &[u32]) -> Option<Self> {
        match *dims {
            [n] => Some(MfShape::Flat(n)),
            [w, h, c] => Some(MfShape::Spatial(Shape3::new(w, h, c))),
            _ => None,
        }
    }

    fn all_positive(self) -> bool {
        match self {
            MfShape::Flat(n) => n >= 1,
            MfShape::Spatial(s) => s.all_positive(),
        }
    }
}

/// A non-layer operation: activation, batch norm, dropout, merges.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MfSpec {
    pub op_name: String,
    pub in_size: MfShape,
    pub out_size: MfShape,
    /// Kept sorted by byte order.
    pub values: Vec<String>,
}

impl MfSpec {
    pub fn new(
        op_name: impl Into<String>,
        in_size: MfShape,
        out_size: MfShape,
        values: impl IntoIterator<Item = impl Into<String>>,
    ) -> Self {
        let mut values: Vec<String> = values.into_iter().map(Into::into).collect();
        values.sort();
        Self {
            op_name: op_name.into(),
            in_size,
            out_size,
            values,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UnitKind {
    Conv,
    Pool,
    Full,
    Mf,
}

impl UnitKind {
    pub const ALL: [UnitKind; 4] = [UnitKind::Conv, UnitKind::Pool, UnitKind::Full, UnitKind::Mf];

    pub fn as_str(self) -> &'static str {
        match self {
            UnitKind::Conv => "conv",
            UnitKind::Pool => "pool",
            UnitKind::Full => "full",
            UnitKind::Mf => "mf",
        }
    }
}

impl fmt::Display for UnitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum NodeSpec {
    Conv(ConvSpec),
    Pool(PoolSpec),
    Full(FullSpec),
    Mf(MfSpec),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error("{0} must be at least 1")]
    NonPositive(&'static str),
    #[error("{field} token {token:?} is empty or contains one of ';', ':', '-', newline")]
    BadToken { field: &'static str, token: String },
    #[error("MF value \"Null\" is reserved")]
    ReservedNull,
}

/// Whether `s` can appear as an opaque token in a rendered line.
pub fn is_valid_token(s: &str) -> bool {
    !s.is_empty() && !s.contains([';', ':', '-', '\n'])
}

fn check_token(field: &'static str, s: &str) -> Result<(), SpecError> {
    if is_valid_token(s) {
        Ok(())
    } else {
        Err(SpecError::BadToken {
            field,
            token: s.to_owned(),
        })
    }
}

fn positive(field: &'static str, ok: bool) -> Result<(), SpecError> {
    if ok {
        Ok(())
    } else {
        Err(SpecError::NonPositive(field))
    }
}

impl NodeSpec {
    pub fn kind(&self) -> UnitKind {
        match self {
            NodeSpec::Conv(_) => UnitKind::Conv,
            NodeSpec::Pool(_) => UnitKind::Pool,
            NodeSpec::Full(_) => UnitKind::Full,
            NodeSpec::Mf(_) => UnitKind::Mf,
        }
    }

    /// Checks the per-kind invariants that the text grammar relies on.
    pub fn validate(&self) -> Result<(), SpecError> {
        match self {
            NodeSpec::Conv(c) => {
                positive("in_size", c.in_size.all_positive())?;
                positive("out_size", c.out_size.all_positive())?;
                positive("kernel", c.kernel.width >= 1 && c.kernel.height >= 1)?;
                positive("stride", c.stride.vertical >= 1 && c.stride.horizontal >= 1)?;
                positive("dilation", c.dilation >= 1)?;
                positive("groups", c.groups >= 1)
            }
            NodeSpec::Pool(p) => {
                positive("in_size", p.in_size.all_positive())?;
                positive("out_size", p.out_size.all_positive())?;
                positive("kernel", p.kernel.width >= 1 && p.kernel.height >= 1)?;
                positive("stride", p.stride.vertical >= 1 && p.stride.horizontal >= 1)?;
                positive("dilation", p.dilation >= 1)
            }
            NodeSpec::Full(f) => {
                positive("in_size", f.in_size >= 1)?;
                positive("out_size", f.out_size >= 1)?;
                if let Some(a) = &f.act_fun {
                    check_token("act_fun", a)?;
                }
                Ok(())
            }
            NodeSpec::Mf(m) => {
                check_token("name", &m.op_name)?;
                positive("in_size", m.in_size.all_positive())?;
                positive("out_size", m.out_size.all_positive())?;
                for v in &m.values {
                    check_token("value", v)?;
                    if v == "Null" {
                        return Err(SpecError::ReservedNull);
                    }
                }
                Ok(())
            }
        }
    }

    /// Declared output shape as a flat list of dimensions.
    pub fn out_dims(&self) -> Vec<u32> {
        match self {
            NodeSpec::Conv(c) => c.out_size.to_vec(),
            NodeSpec::Pool(p) => p.out_size.to_vec(),
            NodeSpec::Full(f) => vec![f.out_size],
            NodeSpec::Mf(m) => m.out_size.to_vec(),
        }
    }

    pub fn in_dims(&self) -> Vec<u32> {
        match self {
            NodeSpec::Conv(c) => c.in_size.to_vec(),
            NodeSpec::Pool(p) => p.in_size.to_vec(),
            NodeSpec::Full(f) => vec![f.in_size],
            NodeSpec::Mf(m) => m.in_size.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("node names must be non-empty")]
    EmptyNodeName,
    #[error("duplicate node name {0:?}")]
    DuplicateNodeName(String),
    #[error("edge {from:?} -> {to:?} references unknown node {missing:?}")]
    UnknownEdgeEndpoint {
        from: String,
        to: String,
        missing: String,
    },
    #[error("self-loop on {0:?}")]
    SelfLoop(String),
    #[error("duplicate edge {from:?} -> {to:?}")]
    DuplicateEdge { from: String, to: String },
    #[error("cycle detected: {}", .0.join(" -> "))]
    CycleDetected(Vec<String>),
    #[error("node {node:?}: {source}")]
    InvalidSpec { node: String, source: SpecError },
}

impl GraphError {
    pub fn code(&self) -> &'static str {
        match self {
            GraphError::EmptyNodeName => "EmptyNodeName",
            GraphError::DuplicateNodeName(_) => "DuplicateNodeName",
            GraphError::UnknownEdgeEndpoint { .. } => "UnknownEdgeEndpoint",
            GraphError::SelfLoop(_) => "SelfLoop",
            GraphError::DuplicateEdge { .. } => "DuplicateEdge",
            GraphError::CycleDetected(_) => "CycleDetected",
            GraphError::InvalidSpec { .. } => "InvalidSpec",
        }
    }
}

/// A directed acyclic graph of named architecture nodes.
///
/// Nodes and edges remember their insertion order, but equality compares only
/// the name-to-spec map and the edge set.
#[derive(Clone, Debug)]
pub struct ArchGraph {
    names: Vec<String>,
    specs: Vec<NodeSpec>,
    index: HashMap<String, usize>,
    edges: Vec<(usize, usize)>,
    succ: Vec<Vec<usize>>,
    pred: Vec<Vec<usize>>,
}

/// Builds a graph, checking every structural invariant.
pub fn build_graph<N, E, S, T>(nodes: N, edges: E) -> Result<ArchGraph, GraphError>
where
    N: IntoIterator<Item = (S, NodeSpec)>,
    E: IntoIterator<Item = (T, T)>,
    S: Into<String>,
    T: AsRef<str>,
{
    let mut names = Vec::new();
    let mut specs = Vec::new();
    let mut index = HashMap::new();
    for (name, spec) in nodes {
        let name: String = name.into();
        if name.is_empty() {
            return Err(GraphError::EmptyNodeName);
        }
        if index.contains_key(&name) {
            return Err(GraphError::DuplicateNodeName(name));
        }
        spec.validate().map_err(|source| GraphError::InvalidSpec {
            node: name.clone(),
            source,
        })?;
        index.insert(name.clone(), names.len());
        names.push(name);
        specs.push(spec);
    }

    let n = names.len();
    let mut succ = vec![Vec::new(); n];
    let mut pred = vec![Vec::new(); n];
    let mut seen = HashSet::new();
    let mut edge_list = Vec::new();
    for (from, to) in edges {
        let (from, to) = (from.as_ref(), to.as_ref());
        let lookup = |name: &str| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| GraphError::UnknownEdgeEndpoint {
                    from: from.to_owned(),
                    to: to.to_owned(),
                    missing: name.to_owned(),
                })
        };
        let a = lookup(from)?;
        let b = lookup(to)?;
        if a == b {
            return Err(GraphError::SelfLoop(from.to_owned()));
        }
        if !seen.insert((a, b)) {
            return Err(GraphError::DuplicateEdge {
                from: from.to_owned(),
                to: to.to_owned(),
            });
        }
        succ[a].push(b);
        pred[b].push(a);
        edge_list.push((a, b));
    }

    let g = ArchGraph {
        names,
        specs,
        index,
        edges: edge_list,
        succ,
        pred,
    };
    if let Some(cycle) = g.find_cycle() {
        return Err(GraphError::CycleDetected(
            cycle.into_iter().map(|i| g.names[i].clone()).collect(),
        ));
    }
    Ok(g)
}

impl ArchGraph {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Node names in insertion order.
    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, idx: usize) -> &str {
        &self.names[idx]
    }

    pub fn spec_at(&self, idx: usize) -> &NodeSpec {
        &self.specs[idx]
    }

    pub fn spec(&self, name: &str) -> Option<&NodeSpec> {
        self.index.get(name).map(|&i| &self.specs[i])
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// `(name, spec)` pairs in insertion order.
    pub fn nodes(&self) -> impl Iterator<Item = (&str, &NodeSpec)> {
        self.names.iter().map(String::as_str).zip(self.specs.iter())
    }

    /// Edges as index pairs, in insertion order.
    pub fn edge_indices(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Edges by name, in insertion order.
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str)> {
        self.edges
            .iter()
            .map(|&(a, b)| (self.names[a].as_str(), self.names[b].as_str()))
    }

    pub fn successors(&self, idx: usize) -> &[usize] {
        &self.succ[idx]
    }

    pub fn predecessors(&self, idx: usize) -> &[usize] {
        &self.pred[idx]
    }

    pub fn in_degree(&self, idx: usize) -> usize {
        self.pred[idx].len()
    }

    pub fn out_degree(&self, idx: usize) -> usize {
        self.succ[idx].len()
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.succ[from].contains(&to)
    }

    /// Kahn's algorithm; `None` when the graph has a cycle.
    pub fn topo_order(&self) -> Option<Vec<usize>> {
        let n = self.len();
        let mut indeg: Vec<usize> = self.pred.iter().map(Vec::len).collect();
        let mut stack: Vec<usize> = (0..n).rev().filter(|&i| indeg[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = stack.pop() {
            order.push(v);
            for &w in self.succ[v].iter().rev() {
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    stack.push(w);
                }
            }
        }
        (order.len() == n).then_some(order)
    }

    fn find_cycle(&self) -> Option<Vec<usize>> {
        if self.topo_order().is_some() {
            return None;
        }
        // Iterative DFS with colors; the grey stack holds the current path.
        const WHITE: u8 = 0;
        const GREY: u8 = 1;
        const BLACK: u8 = 2;
        let n = self.len();
        let mut color = vec![WHITE; n];
        for root in 0..n {
            if color[root] != WHITE {
                continue;
            }
            let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
            color[root] = GREY;
            while let Some(&mut (v, ref mut next)) = stack.last_mut() {
                if *next < self.succ[v].len() {
                    let w = self.succ[v][*next];
                    *next += 1;
                    match color[w] {
                        WHITE => {
                            color[w] = GREY;
                            stack.push((w, 0));
                        }
                        GREY => {
                            let start = stack.iter().position(|&(u, _)| u == w).unwrap();
                            let mut cycle: Vec<usize> =
                                stack[start..].iter().map(|&(u, _)| u).collect();
                            cycle.push(w);
                            return Some(cycle);
                        }
                        _ => {}
                    }
                } else {
                    color[v] = BLACK;
                    stack.pop();
                }
            }
        }
        None
    }
}

impl PartialEq for ArchGraph {
    fn eq(&self, other: &Self) -> bool {
        if self.len() != other.len() || self.edges.len() != other.edges.len() {
            return false;
        }
        let same_nodes = self
            .nodes()
            .all(|(name, spec)| other.spec(name) == Some(spec));
        same_nodes
            && self
                .edges()
                .all(|(a, b)| match (other.index_of(a), other.index_of(b)) {
                    (Some(x), Some(y)) => other.has_edge(x, y),
                    _ => false,
                })
    }
}

impl Eq for ArchGraph {}

#[cfg(test)]
mod tests {
    use super::*;

    fn relu(c: u32) -> NodeSpec {
        let s = MfShape::Spatial(Shape3::new(8, 8, c));
        NodeSpec::Mf(MfSpec::new("ReLU", s, s, Vec::<String>::new()))
    }

    #[test]
    fn chain_builds() {
        let g = build_graph([("A", relu(1)), ("B", relu(1))], [("A", "B")]).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.successors(0), &[1]);
        assert_eq!(g.topo_order().unwrap(), vec![0, 1]);
    }

    #[test]
    fn two_cycle_is_reported() {
        let err =
            build_graph([("A", relu(1)), ("B", relu(1))], [("A", "B"), ("B", "A")]).unwrap_err();
        match err {
            GraphError::CycleDetected(c) => {
                assert_eq!(c.first(), c.last());
                assert_eq!(c.len(), 3);
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn longer_cycle_sequence_follows_edges() {
        let nodes = ["A", "B", "C", "D"].map(|n| (n, relu(1)));
        let err = build_graph(nodes, [("A", "B"), ("B", "C"), ("C", "D"), ("D", "B")]).unwrap_err();
        assert_eq!(
            err,
            GraphError::CycleDetected(vec!["B".into(), "C".into(), "D".into(), "B".into()])
        );
    }

    #[test]
    fn structural_errors() {
        let dup = build_graph([("A", relu(1)), ("A", relu(2))], Vec::<(&str, &str)>::new());
        assert!(matches!(dup, Err(GraphError::DuplicateNodeName(n)) if n == "A"));

        let unknown = build_graph([("A", relu(1))], [("A", "Z")]);
        assert!(
            matches!(unknown, Err(GraphError::UnknownEdgeEndpoint { missing, .. }) if missing == "Z")
        );

        let selfloop = build_graph([("A", relu(1))], [("A", "A")]);
        assert!(matches!(selfloop, Err(GraphError::SelfLoop(_))));

        let dup_edge = build_graph([("A", relu(1)), ("B", relu(1))], [("A", "B"), ("A", "B")]);
        assert!(matches!(dup_edge, Err(GraphError::DuplicateEdge { .. })));

        let empty = build_graph([("", relu(1))], Vec::<(&str, &str)>::new());
        assert_eq!(empty.unwrap_err(), GraphError::EmptyNodeName);
    }

    #[test]
    fn spec_validation() {
        let s = MfShape::Flat(4);
        let bad = NodeSpec::Mf(MfSpec::new("Re-LU", s, s, Vec::<String>::new()));
        assert!(matches!(bad.validate(), Err(SpecError::BadToken { .. })));
        let null = NodeSpec::Mf(MfSpec::new("Dropout", s, s, ["Null"]));
        assert_eq!(null.validate(), Err(SpecError::ReservedNull));
        let full = NodeSpec::Full(FullSpec {
            in_size: 0,
            out_size: 3,
            act_fun: None,
        });
        assert_eq!(full.validate(), Err(SpecError::NonPositive("in_size")));
    }

    #[test]
    fn mf_values_are_sorted() {
        let s = MfShape::Flat(4);
        let m = MfSpec::new("Op", s, s, ["b", "a", "B"]);
        assert_eq!(m.values, vec!["B", "a", "b"]);
    }

    #[test]
    fn equality_ignores_insertion_order() {
        let a = build_graph(
            [("A", relu(1)), ("B", relu(2)), ("C", relu(3))],
            [("A", "B"), ("B", "C"), ("A", "C")],
        )
        .unwrap();
        let b = build_graph(
            [("C", relu(3)), ("A", relu(1)), ("B", relu(2))],
            [("A", "C"), ("B", "C"), ("A", "B")],
        )
        .unwrap();
        assert_eq!(a, b);
        let c = build_graph(
            [("C", relu(3)), ("A", relu(1)), ("B", relu(2))],
            [("A", "C"), ("B", "C")],
        )
        .unwrap();
        assert_ne!(a, c);
    }
}
