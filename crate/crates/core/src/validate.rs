//! Graph-level checks that run before canonicalization.

use std::fmt;

use crate::model::ArchGraph;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

/// What a finding points at.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Subject {
    Graph,
    Node(String),
    Nodes(Vec<String>),
    Edge(String, String),
    Line(usize),
}

impl fmt::Display for Subject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Subject::Graph => f.write_str("graph"),
            Subject::Node(n) => write!(f, "node {n}"),
            Subject::Nodes(ns) => write!(f, "nodes {}", ns.join(", ")),
            Subject::Edge(a, b) => write!(f, "edge {a} -> {b}"),
            Subject::Line(l) => write!(f, "line {l}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Finding {
    pub severity: Severity,
    pub code: &'static str,
    pub subject: Subject,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}[{}] {}: {}",
            self.severity, self.code, self.subject, self.message
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Diagnostics {
    pub findings: Vec<Finding>,
}

impl Diagnostics {
    pub fn push(
        &mut self,
        severity: Severity,
        code: &'static str,
        subject: Subject,
        message: impl Into<String>,
    ) {
        self.findings.push(Finding {
            severity,
            code,
            subject,
            message: message.into(),
        });
    }

    pub fn errors(&self) -> impl Iterator<Item = &Finding> {
        self.findings
            .iter()
            .filter(|f| f.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Finding> {
        self.findings
            .iter()
            .filter(|f| f.severity == Severity::Warning)
    }

    pub fn has_errors(&self) -> bool {
        self.errors().next().is_some()
    }

    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn codes(&self) -> Vec<&'static str> {
        self.findings.iter().map(|f| f.code).collect()
    }

    pub fn extend(&mut self, other: Diagnostics) {
        self.findings.extend(other.findings);
    }
}

/// Checks the source/sink structure the ordering algorithm depends on.
///
/// Errors: `NoNodes`, `AmbiguousSource`, `AmbiguousSink`.
/// Warnings: `SourceOutdegreeNotOne`, `SinkIndegreeNotOne`, `IsolatedNode`.
pub fn validate_graph(g: &ArchGraph) -> Diagnostics {
    let mut d = Diagnostics::default();
    if g.is_empty() {
        d.push(
            Severity::Error,
            "NoNodes",
            Subject::Graph,
            "graph has no nodes",
        );
        return d;
    }

    // Sorted by name so findings do not depend on insertion order.
    let mut sources: Vec<usize> = (0..g.len()).filter(|&i| g.in_degree(i) == 0).collect();
    let mut sinks: Vec<usize> = (0..g.len()).filter(|&i| g.out_degree(i) == 0).collect();
    sources.sort_by(|&a, &b| g.name(a).cmp(g.name(b)));
    sinks.sort_by(|&a, &b| g.name(a).cmp(g.name(b)));
    let names = |v: &[usize]| v.iter().map(|&i| g.name(i).to_owned()).collect::<Vec<_>>();

    if sources.len() != 1 {
        d.push(
            Severity::Error,
            "AmbiguousSource",
            Subject::Nodes(names(&sources)),
            format!(
                "expected exactly one node with indegree 0, found {}",
                sources.len()
            ),
        );
    }
    if sinks.len() != 1 {
        d.push(
            Severity::Error,
            "AmbiguousSink",
            Subject::Nodes(names(&sinks)),
            format!(
                "expected exactly one node with outdegree 0, found {}",
                sinks.len()
            ),
        );
    }
    if let [s] = sources[..] {
        if g.out_degree(s) != 1 {
            d.push(
                Severity::Warning,
                "SourceOutdegreeNotOne",
                Subject::Node(g.name(s).to_owned()),
                format!("source has outdegree {}", g.out_degree(s)),
            );
        }
    }
    if let [e] = sinks[..] {
        if g.in_degree(e) != 1 {
            d.push(
                Severity::Warning,
                "SinkIndegreeNotOne",
                Subject::Node(g.name(e).to_owned()),
                format!("sink has indegree {}", g.in_degree(e)),
            );
        }
    }
    if g.len() > 1 {
        let mut isolated: Vec<&str> = (0..g.len())
            .filter(|&i| g.in_degree(i) == 0 && g.out_degree(i) == 0)
            .map(|i| g.name(i))
            .collect();
        isolated.sort();
        for name in isolated {
            d.push(
                Severity::Warning,
                "IsolatedNode",
                Subject::Node(name.to_owned()),
                "node has no edges",
            );
        }
    }
    d
}
