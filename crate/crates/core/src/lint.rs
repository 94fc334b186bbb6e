//! Warn-only shape consistency checks.
//!
//! Declared shapes are copied verbatim into descriptions, so nothing here
//! ever blocks rendering. The checks recompute spatial extents with the usual
//! sliding-window arithmetic and compare them to what each node declares.

use std::fmt;

use thiserror::Error;

use crate::model::{ArchGraph, MfShape, NodeSpec};
use crate::validate::{Diagnostics, Severity, Subject};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtentError {
    #[error("{0} must be at least 1")]
    InvalidArgument(&'static str),
    #[error("window does not fit: output extent would be {0}")]
    NonPositiveOutput(i64),
}

/// `floor((in + pad_total - dilation*(kernel-1) - 1) / stride) + 1`
pub fn conv_output_extent(
    input: u32,
    kernel: u32,
    stride: u32,
    pad_total: u32,
    dilation: u32,
) -> Result<u32, ExtentError> {
    for (name, v) in [
        ("in", input),
        ("kernel", kernel),
        ("stride", stride),
        ("dilation", dilation),
    ] {
        if v == 0 {
            return Err(ExtentError::InvalidArgument(name));
        }
    }
    let span = i64::from(dilation) * (i64::from(kernel) - 1) + 1;
    let room = i64::from(input) + i64::from(pad_total) - span;
    let out = room.div_euclid(i64::from(stride)) + 1;
    if out < 1 {
        return Err(ExtentError::NonPositiveOutput(out));
    }
    u32::try_from(out).map_err(|_| ExtentError::NonPositiveOutput(out))
}

/// Pooling windows slide exactly like convolution kernels.
pub fn pool_output_extent(
    input: u32,
    kernel: u32,
    stride: u32,
    pad_total: u32,
    dilation: u32,
) -> Result<u32, ExtentError> {
    conv_output_extent(input, kernel, stride, pad_total, dilation)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShapeStatus {
    Ok,
    Mismatch,
    Unchecked,
}

impl fmt::Display for ShapeStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ShapeStatus::Ok => "ok",
            ShapeStatus::Mismatch => "mismatch",
            ShapeStatus::Unchecked => "unchecked",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShapeEntry {
    pub node: String,
    pub expected: Option<Vec<u32>>,
    pub declared: Vec<u32>,
    pub status: ShapeStatus,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ShapeReport {
    /// One entry per node, sorted by node name.
    pub entries: Vec<ShapeEntry>,
    /// Cross-node findings (currently: Addition operands that disagree).
    pub findings: Diagnostics,
}

impl ShapeReport {
    pub fn mismatches(&self) -> impl Iterator<Item = &ShapeEntry> {
        self.entries
            .iter()
            .filter(|e| e.status == ShapeStatus::Mismatch)
    }

    pub fn is_clean(&self) -> bool {
        self.mismatches().next().is_none() && self.findings.is_empty()
    }

    /// Every mismatch and cross-node finding as a warning.
    pub fn to_diagnostics(&self) -> Diagnostics {
        let mut d = Diagnostics::default();
        for e in self.mismatches() {
            let expected = e
                .expected
                .as_ref()
                .map(|v| dims(v))
                .unwrap_or_else(|| "?".into());
            let mut msg = format!(
                "declared out_size {}, expected {}",
                dims(&e.declared),
                expected
            );
            for n in &e.notes {
                msg.push_str("; ");
                msg.push_str(n);
            }
            d.push(
                Severity::Warning,
                "ShapeMismatch",
                Subject::Node(e.node.clone()),
                msg,
            );
        }
        d.extend(self.findings.clone());
        d
    }
}

fn dims(v: &[u32]) -> String {
    v.iter().map(u32::to_string).collect::<Vec<_>>().join("x")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LintConfig {
    /// MF operations allowed to change shape.
    pub shape_changing_ops: Vec<String>,
}

impl Default for LintConfig {
    fn default() -> Self {
        Self {
            shape_changing_ops: vec!["Concatenation".into(), "Interpolation".into()],
        }
    }
}

pub fn lint_shapes(g: &ArchGraph) -> ShapeReport {
    lint_shapes_with(g, &LintConfig::default())
}

pub fn lint_shapes_with(g: &ArchGraph, cfg: &LintConfig) -> ShapeReport {
    let mut order: Vec<usize> = (0..g.len()).collect();
    order.sort_by(|&a, &b| g.name(a).cmp(g.name(b)));

    let mut report = ShapeReport::default();
    for i in order {
        let name = g.name(i).to_owned();
        let spec = g.spec_at(i);
        report.entries.push(check_node(name.clone(), spec, cfg));

        if let NodeSpec::Mf(m) = spec {
            if m.op_name == "Addition" {
                let mut operands: Vec<(&str, Vec<u32>)> = g
                    .predecessors(i)
                    .iter()
                    .map(|&p| (g.name(p), g.spec_at(p).out_dims()))
                    .collect();
                operands.sort();
                if operands.windows(2).any(|w| w[0].1 != w[1].1) {
                    let listed: Vec<String> = operands
                        .iter()
                        .map(|(n, d)| format!("{n}={}", dims(d)))
                        .collect();
                    report.findings.push(
                        Severity::Warning,
                        "AdditionOperandMismatch",
                        Subject::Node(name),
                        format!("operands disagree: {}", listed.join(", ")),
                    );
                }
            }
        }
    }
    report
}

fn check_node(node: String, spec: &NodeSpec, cfg: &LintConfig) -> ShapeEntry {
    let declared = spec.out_dims();
    let mut notes = Vec::new();
    let expected = match spec {
        NodeSpec::Conv(c) => {
            let p = c.padding;
            let w = conv_output_extent(
                c.in_size.width,
                c.kernel.width,
                c.stride.horizontal,
                p.left.count + p.right.count,
                c.dilation,
            );
            let h = conv_output_extent(
                c.in_size.height,
                c.kernel.height,
                c.stride.vertical,
                p.up.count + p.down.count,
                c.dilation,
            );
            if c.in_size.channels % c.groups != 0 {
                notes.push(format!(
                    "groups {} does not divide {} input channels",
                    c.groups, c.in_size.channels
                ));
            }
            extents(w, h, c.out_size.channels, &mut notes)
        }
        NodeSpec::Pool(p) => {
            let pad = p.padding;
            let w = pool_output_extent(
                p.in_size.width,
                p.kernel.width,
                p.stride.horizontal,
                pad.left + pad.right,
                p.dilation,
            );
            let h = pool_output_extent(
                p.in_size.height,
                p.kernel.height,
                p.stride.vertical,
                pad.up + pad.down,
                p.dilation,
            );
            extents(w, h, p.in_size.channels, &mut notes)
        }
        NodeSpec::Full(_) => None,
        NodeSpec::Mf(m) if cfg.shape_changing_ops.contains(&m.op_name) => None,
        NodeSpec::Mf(m) => Some(match m.in_size {
            MfShape::Flat(n) => vec![n],
            MfShape::Spatial(s) => s.to_vec(),
        }),
    };
    let status = match &expected {
        None if notes.is_empty() => ShapeStatus::Unchecked,
        Some(e) if *e == declared && notes.is_empty() => ShapeStatus::Ok,
        _ => ShapeStatus::Mismatch,
    };
    ShapeEntry {
        node,
        expected,
        declared,
        status,
        notes,
    }
}

fn extents(
    w: Result<u32, ExtentError>,
    h: Result<u32, ExtentError>,
    channels: u32,
    notes: &mut Vec<String>,
) -> Option<Vec<u32>> {
    match (w, h) {
        (Ok(w), Ok(h)) => Some(vec![w, h, channels]),
        (w, h) => {
            for e in [w.err(), h.err()].into_iter().flatten() {
                notes.push(e.to_string());
            }
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::*;

    #[test]
    fn extent_formula() {
        assert_eq!(conv_output_extent(32, 2, 2, 0, 1), Ok(16));
        assert_eq!(conv_output_extent(224, 7, 2, 6, 1), Ok(112));
        assert_eq!(conv_output_extent(17, 1, 1, 0, 1), Ok(17));
        assert_eq!(pool_output_extent(31, 2, 2, 1, 1), Ok(16));
        assert_eq!(pool_output_extent(112, 3, 2, 2, 1), Ok(56));
        assert_eq!(pool_output_extent(56, 56, 1, 0, 1), Ok(1));
        // dilation 2 widens a 3-tap kernel to span 5
        assert_eq!(conv_output_extent(10, 3, 1, 0, 2), Ok(6));
    }

    #[test]
    fn extent_errors() {
        assert_eq!(
            conv_output_extent(2, 5, 1, 0, 1),
            Err(ExtentError::NonPositiveOutput(-2))
        );
        assert_eq!(
            conv_output_extent(4, 1, 0, 0, 1),
            Err(ExtentError::InvalidArgument("stride"))
        );
    }

    fn conv(out_w: u32, groups: u32) -> NodeSpec {
        NodeSpec::Conv(ConvSpec {
            in_size: Shape3::new(32, 32, 6),
            out_size: Shape3::new(out_w, 16, 4),
            kernel: Kernel::new(2, 2),
            stride: Stride::new(2, 2),
            padding: Sides::uniform(PadEntry::new(0, 0)),
            dilation: 1,
            groups,
            bias_used: false,
        })
    }

    #[test]
    fn conv_checks() {
        let cfg = LintConfig::default();
        assert_eq!(
            check_node("c".into(), &conv(16, 1), &cfg).status,
            ShapeStatus::Ok
        );
        let bad = check_node("c".into(), &conv(15, 1), &cfg);
        assert_eq!(bad.status, ShapeStatus::Mismatch);
        assert_eq!(bad.expected, Some(vec![16, 16, 4]));
        let grouped = check_node("c".into(), &conv(16, 4), &cfg);
        assert_eq!(grouped.status, ShapeStatus::Mismatch);
        assert_eq!(grouped.notes.len(), 1);
    }

    #[test]
    fn mf_allowlist_and_addition_operands() {
        let s = |c| MfShape::Spatial(Shape3::new(8, 8, c));
        let mf =
            |name: &str, i, o| NodeSpec::Mf(MfSpec::new(name, s(i), s(o), Vec::<String>::new()));
        let g = build_graph(
            [
                ("S", mf("BN", 4, 4)),
                ("A", mf("ReLU", 4, 4)),
                ("B", mf("Concatenation", 4, 8)),
                ("J", mf("Addition", 4, 4)),
            ],
            [("S", "A"), ("S", "B"), ("A", "J"), ("B", "J")],
        )
        .unwrap();
        let r = lint_shapes(&g);
        let status: Vec<_> = r
            .entries
            .iter()
            .map(|e| (e.node.as_str(), e.status))
            .collect();
        assert_eq!(
            status,
            [
                ("A", ShapeStatus::Ok),
                ("B", ShapeStatus::Unchecked),
                ("J", ShapeStatus::Ok),
                ("S", ShapeStatus::Ok)
            ]
        );
        assert_eq!(r.findings.codes(), ["AdditionOperandMismatch"]);
        assert!(!r.is_clean());
    }
}
