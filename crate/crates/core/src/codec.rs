//! The ArcText line format.
//!
//! One unit per line, fields `key:value` joined by `;`, multi-valued fields
//! joined by `-`. The four unit kinds have fixed field schemas:
//!
//! ```text
//! conv: id;in_size;out_size;kernel;stride;padding;dilation;groups;bias_used;connect_to
//! pool: id;type;in_size;out_size;kernel;stride;padding;dilation;bias_used;connect_to
//! full: id;in_size;out_size[;act_fun];connect_to
//! mf:   id;name;in_size;out_size;value;connect_to
//! ```
//!
//! Lines are joined with a single `\n` and the text has no trailing newline.
//! Parsing is strict: every line must be spelled exactly as the renderer
//! would spell it.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::canon::{assign_positions_with, CanonConfig, CanonError, CanonicalOrder};
use crate::model::{
    build_graph, ArchGraph, ConvSpec, FullSpec, GraphError, Kernel, MfShape, MfSpec, NodeSpec,
    PadEntry, PoolSpec, PoolType, Shape3, Sides, SpecError, Stride, UnitKind,
};

const CONV_KEYS: &[&str] = &[
    "id",
    "in_size",
    "out_size",
    "kernel",
    "stride",
    "padding",
    "dilation",
    "groups",
    "bias_used",
    "connect_to",
];
const POOL_KEYS: &[&str] = &[
    "id",
    "type",
    "in_size",
    "out_size",
    "kernel",
    "stride",
    "padding",
    "dilation",
    "bias_used",
    "connect_to",
];
const FULL_KEYS: &[&str] = &["id", "in_size", "out_size", "connect_to"];
const FULL_ACT_KEYS: &[&str] = &["id", "in_size", "out_size", "act_fun", "connect_to"];
const MF_KEYS: &[&str] = &["id", "name", "in_size", "out_size", "value", "connect_to"];

/// Every field key that can appear in a line.
pub const FIELD_KEYS: &[&str] = &[
    "id",
    "type",
    "name",
    "in_size",
    "out_size",
    "kernel",
    "stride",
    "padding",
    "dilation",
    "groups",
    "bias_used",
    "act_fun",
    "value",
    "connect_to",
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("invalid spec: {0}")]
    InvalidSpec(#[from] SpecError),
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("line {line}: cannot determine unit kind")]
    UnclassifiableLine { line: usize },
    #[error("duplicate id {0}")]
    DuplicateId(u32),
    #[error("ids are not exactly 1..{n}")]
    NonContiguousIds { n: usize },
    #[error("line {line}: ids must be ascending")]
    OutOfOrder { line: usize },
    #[error("line {line}: connect_to references missing id {target}")]
    DanglingConnect { line: usize, target: u32 },
    #[error("more than one unit has connect_to:Null (ids {0:?})")]
    MultipleSinks(Vec<u32>),
    #[error("the connect_to:Null unit must carry the last id")]
    SinkNotLast,
    #[error("empty input")]
    EmptyInput,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Canon(#[from] CanonError),
}

impl CodecError {
    pub fn code(&self) -> &'static str {
        match self {
            CodecError::InvalidSpec(_) => "InvalidSpec",
            CodecError::MalformedLine { .. } => "MalformedLine",
            CodecError::UnclassifiableLine { .. } => "UnclassifiableLine",
            CodecError::DuplicateId(_) => "DuplicateId",
            CodecError::NonContiguousIds { .. } => "NonContiguousIds",
            CodecError::OutOfOrder { .. } => "OutOfOrder",
            CodecError::DanglingConnect { .. } => "DanglingConnect",
            CodecError::MultipleSinks(_) => "MultipleSinks",
            CodecError::SinkNotLast => "SinkNotLast",
            CodecError::EmptyInput => "EmptyInput",
            CodecError::Graph(e) => e.code(),
            CodecError::Canon(e) => e.code(),
        }
    }
}

/// Successor ids of a unit, or `Null` for the sink.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ConnectTo {
    Null,
    Ids(Vec<u32>),
}

impl ConnectTo {
    pub fn ids(&self) -> &[u32] {
        match self {
            ConnectTo::Null => &[],
            ConnectTo::Ids(v) => v,
        }
    }

    pub fn is_null(&self) -> bool {
        matches!(self, ConnectTo::Null)
    }
}

impl fmt::Display for ConnectTo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConnectTo::Null => f.write_str("Null"),
            ConnectTo::Ids(ids) => f.write_str(&join(ids)),
        }
    }
}

/// One rendered unit.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct UnitLine {
    pub id: u32,
    pub spec: NodeSpec,
    pub connect_to: ConnectTo,
}

impl UnitLine {
    pub fn kind(&self) -> UnitKind {
        self.spec.kind()
    }

    /// All fields in schema order, including `id` and `connect_to`.
    pub fn fields(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::with_capacity(10);
        out.push(("id", self.id.to_string()));
        out.extend(basic_fields(&self.spec));
        out.push(("connect_to", self.connect_to.to_string()));
        out
    }
}

impl fmt::Display for UnitLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "id:{};", self.id)?;
        f.write_str(&basic_string(&self.spec))?;
        write!(f, ";connect_to:{}", self.connect_to)
    }
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    let mut s = String::new();
    for (i, v) in items.iter().enumerate() {
        if i > 0 {
            s.push('-');
        }
        write!(s, "{v}").unwrap();
    }
    s
}

fn yes_no(b: bool) -> String {
    if b { "Yes" } else { "No" }.to_owned()
}

/// The basic-property fields of a spec: everything except `id` and
/// `connect_to`, in schema order.
pub fn basic_fields(spec: &NodeSpec) -> Vec<(&'static str, String)> {
    match spec {
        NodeSpec::Conv(c) => {
            let pads: Vec<u32> = c
                .padding
                .to_array()
                .iter()
                .flat_map(|p| [p.value, p.count])
                .collect();
            vec![
                ("in_size", join(&c.in_size.to_vec())),
                ("out_size", join(&c.out_size.to_vec())),
                ("kernel", join(&[c.kernel.width, c.kernel.height])),
                ("stride", join(&[c.stride.vertical, c.stride.horizontal])),
                ("padding", join(&pads)),
                ("dilation", c.dilation.to_string()),
                ("groups", c.groups.to_string()),
                ("bias_used", yes_no(c.bias_used)),
            ]
        }
        NodeSpec::Pool(p) => vec![
            ("type", p.pool_type.as_str().to_owned()),
            ("in_size", join(&p.in_size.to_vec())),
            ("out_size", join(&p.out_size.to_vec())),
            ("kernel", join(&[p.kernel.width, p.kernel.height])),
            ("stride", join(&[p.stride.vertical, p.stride.horizontal])),
            ("padding", join(&p.padding.to_array())),
            ("dilation", p.dilation.to_string()),
            ("bias_used", yes_no(p.bias_used)),
        ],
        NodeSpec::Full(f) => {
            let mut v = vec![
                ("in_size", f.in_size.to_string()),
                ("out_size", f.out_size.to_string()),
            ];
            if let Some(a) = &f.act_fun {
                v.push(("act_fun", a.clone()));
            }
            v
        }
        NodeSpec::Mf(m) => {
            let value = if m.values.is_empty() {
                "Null".to_owned()
            } else {
                let mut vals: Vec<&str> = m.values.iter().map(String::as_str).collect();
                vals.sort_unstable();
                vals.join("-")
            };
            vec![
                ("name", m.op_name.clone()),
                ("in_size", join(&m.in_size.to_vec())),
                ("out_size", join(&m.out_size.to_vec())),
                ("value", value),
            ]
        }
    }
}

/// `key:value` pairs of the basic properties joined by `;`.
pub fn basic_string(spec: &NodeSpec) -> String {
    let mut s = String::new();
    for (i, (k, v)) in basic_fields(spec).into_iter().enumerate() {
        if i > 0 {
            s.push(';');
        }
        s.push_str(k);
        s.push(':');
        s.push_str(&v);
    }
    s
}

pub fn render_unit(
    spec: &NodeSpec,
    id: u32,
    connect_to: ConnectTo,
) -> Result<UnitLine, CodecError> {
    spec.validate()?;
    if id == 0 {
        return Err(CodecError::MalformedLine {
            line: 0,
            reason: "id must be at least 1".into(),
        });
    }
    if let ConnectTo::Ids(ids) = &connect_to {
        let ascending = ids.windows(2).all(|w| w[0] < w[1]);
        if ids.is_empty() || ids[0] == 0 || !ascending {
            return Err(CodecError::MalformedLine {
                line: 0,
                reason: format!(
                    "connect_to {ids:?} must be non-empty, positive and strictly ascending"
                ),
            });
        }
    }
    Ok(UnitLine {
        id,
        spec: spec.clone(),
        connect_to,
    })
}

/// A complete description: units ordered by id plus the joined text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Description {
    pub lines: Vec<UnitLine>,
    pub text: String,
}

impl Description {
    fn from_lines(lines: Vec<UnitLine>) -> Self {
        let mut text = String::new();
        for (i, l) in lines.iter().enumerate() {
            if i > 0 {
                text.push('\n');
            }
            write!(text, "{l}").unwrap();
        }
        Self { lines, text }
    }

    /// Renders `g` using an already computed complete order.
    pub fn with_order(g: &ArchGraph, order: &CanonicalOrder) -> Result<Self, CodecError> {
        let pos: Vec<u32> = (0..g.len())
            .map(|i| {
                order
                    .position(g.name(i))
                    .map(|p| p as u32)
                    .ok_or_else(|| CanonError::UnreachableNode(vec![g.name(i).to_owned()]))
            })
            .collect::<Result<_, _>>()?;
        let mut by_pos: Vec<usize> = (0..g.len()).collect();
        by_pos.sort_by_key(|&i| pos[i]);

        let mut lines = Vec::with_capacity(g.len());
        for i in by_pos {
            let mut targets: Vec<u32> = g.successors(i).iter().map(|&j| pos[j]).collect();
            targets.sort_unstable();
            let connect_to = if targets.is_empty() {
                ConnectTo::Null
            } else {
                ConnectTo::Ids(targets)
            };
            lines.push(render_unit(g.spec_at(i), pos[i], connect_to)?);
        }
        Ok(Self::from_lines(lines))
    }

    /// Parses text strictly. One trailing newline is tolerated.
    pub fn parse(text: &str) -> Result<Self, CodecError> {
        let body = text.strip_suffix('\n').unwrap_or(text);
        if body.is_empty() {
            return Err(CodecError::EmptyInput);
        }
        let lines: Vec<UnitLine> = body
            .split('\n')
            .enumerate()
            .map(|(i, l)| parse_line(l, i + 1))
            .collect::<Result<_, _>>()?;

        let n = lines.len();
        let mut seen = vec![false; n + 1];
        let mut contiguous = true;
        for l in &lines {
            let id = l.id as usize;
            if id <= n {
                if seen[id] {
                    return Err(CodecError::DuplicateId(l.id));
                }
                seen[id] = true;
            } else {
                contiguous = false;
            }
        }
        if !contiguous {
            let mut ids: Vec<u32> = lines.iter().map(|l| l.id).collect();
            ids.sort_unstable();
            if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
                return Err(CodecError::DuplicateId(w[0]));
            }
            return Err(CodecError::NonContiguousIds { n });
        }
        for (i, l) in lines.iter().enumerate() {
            if l.id as usize != i + 1 {
                return Err(CodecError::OutOfOrder { line: i + 1 });
            }
        }
        for (i, l) in lines.iter().enumerate() {
            if let Some(&t) = l.connect_to.ids().iter().find(|&&t| t as usize > n) {
                return Err(CodecError::DanglingConnect {
                    line: i + 1,
                    target: t,
                });
            }
        }
        let sinks: Vec<u32> = lines
            .iter()
            .filter(|l| l.connect_to.is_null())
            .map(|l| l.id)
            .collect();
        if sinks.len() > 1 {
            return Err(CodecError::MultipleSinks(sinks));
        }
        if let [s] = sinks[..] {
            if s as usize != n {
                return Err(CodecError::SinkNotLast);
            }
        }
        Ok(Self::from_lines(lines))
    }

    /// Rebuilds the graph. Nodes are named `n1..nN` after their ids.
    pub fn to_graph(&self) -> Result<(ArchGraph, CanonicalOrder), CodecError> {
        let name = |id: u32| format!("n{id}");
        let nodes = self.lines.iter().map(|l| (name(l.id), l.spec.clone()));
        let edges: Vec<(String, String)> = self
            .lines
            .iter()
            .flat_map(|l| {
                l.connect_to
                    .ids()
                    .iter()
                    .map(move |&t| (name(l.id), name(t)))
            })
            .collect();
        let g = build_graph(nodes, edges)?;
        let positions: BTreeMap<String, usize> = self
            .lines
            .iter()
            .map(|l| (name(l.id), l.id as usize))
            .collect();
        let order =
            CanonicalOrder::from_positions(positions).expect("ids were checked to be exactly 1..n");
        Ok((g, order))
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }
}

impl fmt::Display for Description {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

/// Canonically orders `g` and renders it.
pub fn render_description(g: &ArchGraph) -> Result<Description, CodecError> {
    render_description_with(g, &CanonConfig::default())
}

pub fn render_description_with(
    g: &ArchGraph,
    cfg: &CanonConfig,
) -> Result<Description, CodecError> {
    let order = assign_positions_with(g, cfg)?;
    Description::with_order(g, &order)
}

/// Parses text back into a graph and the order implied by its ids.
pub fn parse_description(text: &str) -> Result<(ArchGraph, CanonicalOrder), CodecError> {
    Description::parse(text)?.to_graph()
}

fn split_fields(line: &str, lineno: usize) -> Result<Vec<(&str, &str)>, CodecError> {
    line.split(';')
        .map(|f| {
            f.split_once(':').ok_or_else(|| CodecError::MalformedLine {
                line: lineno,
                reason: format!("field {f:?} has no ':'"),
            })
        })
        .collect()
}

fn kind_from_keys(keys: &[&str]) -> Option<UnitKind> {
    if keys.contains(&"type") {
        Some(UnitKind::Pool)
    } else if keys.contains(&"name") {
        Some(UnitKind::Mf)
    } else if keys.contains(&"kernel") {
        Some(UnitKind::Conv)
    } else if keys.contains(&"in_size") && keys.iter().all(|k| FULL_ACT_KEYS.contains(k)) {
        Some(UnitKind::Full)
    } else {
        None
    }
}

/// Determines the unit kind of a rendered line from the keys it carries.
pub fn classify_line(line: &str) -> Result<UnitKind, CodecError> {
    let fields = split_fields(line, 1).map_err(|_| CodecError::UnclassifiableLine { line: 1 })?;
    let keys: Vec<&str> = fields.iter().map(|(k, _)| *k).collect();
    kind_from_keys(&keys).ok_or(CodecError::UnclassifiableLine { line: 1 })
}

struct LineReader<'a> {
    lineno: usize,
    fields: Vec<(&'a str, &'a str)>,
}

impl<'a> LineReader<'a> {
    fn err(&self, reason: impl Into<String>) -> CodecError {
        CodecError::MalformedLine {
            line: self.lineno,
            reason: reason.into(),
        }
    }

    fn value(&self, key: &str) -> &'a str {
        // Keys were checked against the schema before any lookup.
        self.fields.iter().find(|(k, _)| *k == key).unwrap().1
    }

    fn uint(&self, key: &str, s: &str) -> Result<u32, CodecError> {
        let canonical = !s.is_empty()
            && s.bytes().all(|b| b.is_ascii_digit())
            && (s == "0" || !s.starts_with('0'));
        if !canonical {
            return Err(self.err(format!("{key}: {s:?} is not a plain non-negative integer")));
        }
        s.parse()
            .map_err(|_| self.err(format!("{key}: {s:?} is out of range")))
    }

    fn uints(&self, key: &str) -> Result<Vec<u32>, CodecError> {
        self.value(key)
            .split('-')
            .map(|s| self.uint(key, s))
            .collect()
    }

    fn fixed<const N: usize>(&self, key: &str) -> Result<[u32; N], CodecError> {
        let v = self.uints(key)?;
        v.as_slice()
            .try_into()
            .map_err(|_| self.err(format!("{key}: expected {N} values, found {}", v.len())))
    }

    fn single(&self, key: &str) -> Result<u32, CodecError> {
        self.uint(key, self.value(key))
    }

    fn shape3(&self, key: &str) -> Result<Shape3, CodecError> {
        let [w, h, c] = self.fixed::<3>(key)?;
        Ok(Shape3::new(w, h, c))
    }

    fn mf_shape(&self, key: &str) -> Result<MfShape, CodecError> {
        let v = self.uints(key)?;
        MfShape::from_slice(&v)
            .ok_or_else(|| self.err(format!("{key}: expected 1 or 3 values, found {}", v.len())))
    }

    fn kernel(&self) -> Result<Kernel, CodecError> {
        let [w, h] = self.fixed::<2>("kernel")?;
        Ok(Kernel::new(w, h))
    }

    fn stride(&self) -> Result<Stride, CodecError> {
        let [v, h] = self.fixed::<2>("stride")?;
        Ok(Stride::new(v, h))
    }

    fn boolean(&self, key: &str) -> Result<bool, CodecError> {
        match self.value(key) {
            "Yes" => Ok(true),
            "No" => Ok(false),
            other => Err(self.err(format!("{key}: expected Yes or No, found {other:?}"))),
        }
    }

    fn connect_to(&self) -> Result<ConnectTo, CodecError> {
        if self.value("connect_to") == "Null" {
            return Ok(ConnectTo::Null);
        }
        let ids = self.uints("connect_to")?;
        if ids.contains(&0) || !ids.windows(2).all(|w| w[0] < w[1]) {
            return Err(self.err("connect_to: ids must be positive and strictly ascending"));
        }
        Ok(ConnectTo::Ids(ids))
    }
}

fn parse_line(line: &str, lineno: usize) -> Result<UnitLine, CodecError> {
    let fields = split_fields(line, lineno)?;
    let keys: Vec<&str> = fields.iter().map(|(k, _)| *k).collect();
    let kind = kind_from_keys(&keys).ok_or(CodecError::UnclassifiableLine { line: lineno })?;
    let schema = match kind {
        UnitKind::Conv => CONV_KEYS,
        UnitKind::Pool => POOL_KEYS,
        UnitKind::Mf => MF_KEYS,
        UnitKind::Full if keys.contains(&"act_fun") => FULL_ACT_KEYS,
        UnitKind::Full => FULL_KEYS,
    };
    if keys != schema {
        return Err(CodecError::MalformedLine {
            line: lineno,
            reason: format!(
                "{kind} unit fields must be {}, found {}",
                schema.join(";"),
                keys.join(";")
            ),
        });
    }

    let r = LineReader { lineno, fields };
    let id = r.single("id")?;
    if id == 0 {
        return Err(r.err("id must be at least 1"));
    }
    let spec = match kind {
        UnitKind::Conv => {
            let p = r.fixed::<8>("padding")?;
            NodeSpec::Conv(ConvSpec {
                in_size: r.shape3("in_size")?,
                out_size: r.shape3("out_size")?,
                kernel: r.kernel()?,
                stride: r.stride()?,
                padding: Sides::new(
                    PadEntry::new(p[0], p[1]),
                    PadEntry::new(p[2], p[3]),
                    PadEntry::new(p[4], p[5]),
                    PadEntry::new(p[6], p[7]),
                ),
                dilation: r.single("dilation")?,
                groups: r.single("groups")?,
                bias_used: r.boolean("bias_used")?,
            })
        }
        UnitKind::Pool => {
            let ty = r.value("type");
            let pool_type = PoolType::parse(ty)
                .ok_or_else(|| r.err(format!("type: expected Max or Avg, found {ty:?}")))?;
            let [up, down, left, right] = r.fixed::<4>("padding")?;
            NodeSpec::Pool(PoolSpec {
                pool_type,
                in_size: r.shape3("in_size")?,
                out_size: r.shape3("out_size")?,
                kernel: r.kernel()?,
                stride: r.stride()?,
                padding: Sides::new(up, down, left, right),
                dilation: r.single("dilation")?,
                bias_used: r.boolean("bias_used")?,
            })
        }
        UnitKind::Full => NodeSpec::Full(FullSpec {
            in_size: r.single("in_size")?,
            out_size: r.single("out_size")?,
            act_fun: keys
                .contains(&"act_fun")
                .then(|| r.value("act_fun").to_owned()),
        }),
        UnitKind::Mf => {
            let raw = r.value("value");
            let values: Vec<&str> = if raw == "Null" {
                Vec::new()
            } else {
                raw.split('-').collect()
            };
            if !values.windows(2).all(|w| w[0] <= w[1]) {
                return Err(r.err("value: parameters must be in ascending byte order"));
            }
            NodeSpec::Mf(MfSpec::new(
                r.value("name"),
                r.mf_shape("in_size")?,
                r.mf_shape("out_size")?,
                values,
            ))
        }
    };
    spec.validate().map_err(|e| r.err(e.to_string()))?;
    Ok(UnitLine {
        id,
        spec,
        connect_to: r.connect_to()?,
    })
}
