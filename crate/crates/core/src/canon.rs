//! Canonical node ordering.
//!
//! The source gets position 1 and the sink position n. Every other node is
//! numbered by repeatedly taking the longest source-to-sink path that still
//! contains an unnumbered node and numbering its unnumbered nodes in path
//! order. When several paths tie on length, the one whose SHA-224 digest
//! (over the basic-property strings of its nodes) is numerically largest
//! wins. Paths with equal digests describe identical unit sequences; the
//! remaining choice among them looks only at renaming-invariant structure
//! (positions already given, refined neighbourhood colors, and the colors a
//! tentative numbering would produce) before falling back to input order.

use std::cell::{OnceCell, RefCell};
use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::codec::basic_string as render_basic;
use crate::digest::{sha224, Digest224};
use crate::model::{ArchGraph, NodeSpec};

pub const DEFAULT_MAX_PATHS: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CanonConfig {
    /// Maximum number of tied longest paths enumerated in one iteration.
    pub max_paths: usize,
}

impl Default for CanonConfig {
    fn default() -> Self {
        Self {
            max_paths: DEFAULT_MAX_PATHS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CanonError {
    #[error("graph has no nodes")]
    NoNodes,
    #[error("expected exactly one source, found {0:?}")]
    AmbiguousSource(Vec<String>),
    #[error("expected exactly one sink, found {0:?}")]
    AmbiguousSink(Vec<String>),
    #[error("more than {limit} longest paths to enumerate")]
    PathExplosion { limit: usize },
    #[error("nodes not on any source-to-sink path: {0:?}")]
    UnreachableNode(Vec<String>),
    #[error("path step {from:?} -> {to:?} is not an edge")]
    BrokenPath { from: String, to: String },
    #[error("unknown node {0:?}")]
    UnknownNode(String),
}

impl CanonError {
    pub fn code(&self) -> &'static str {
        match self {
            CanonError::NoNodes => "NoNodes",
            CanonError::AmbiguousSource(_) => "AmbiguousSource",
            CanonError::AmbiguousSink(_) => "AmbiguousSink",
            CanonError::PathExplosion { .. } => "PathExplosion",
            CanonError::UnreachableNode(_) => "UnreachableNode",
            CanonError::BrokenPath { .. } => "BrokenPath",
            CanonError::UnknownNode(_) => "UnknownNode",
        }
    }
}

/// Node name to position in `1..=n`. May be partial while under
/// construction.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CanonicalOrder {
    positions: BTreeMap<String, usize>,
    n: usize,
}

impl CanonicalOrder {
    /// An empty order over `n` nodes.
    pub fn partial(n: usize) -> Self {
        Self {
            positions: BTreeMap::new(),
            n,
        }
    }

    /// Builds a complete order; `None` unless the positions are exactly
    /// `1..=len`.
    pub fn from_positions(positions: BTreeMap<String, usize>) -> Option<Self> {
        let n = positions.len();
        let mut hit = vec![false; n + 1];
        for &p in positions.values() {
            if p == 0 || p > n || hit[p] {
                return None;
            }
            hit[p] = true;
        }
        Some(Self { positions, n })
    }

    pub fn assign(&mut self, name: impl Into<String>, position: usize) {
        self.positions.insert(name.into(), position);
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.positions.get(name).copied()
    }

    /// Total node count `n`.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn is_complete(&self) -> bool {
        self.positions.len() == self.n
    }

    pub fn positions(&self) -> &BTreeMap<String, usize> {
        &self.positions
    }

    /// Names sorted by position.
    pub fn by_position(&self) -> Vec<&str> {
        let mut v: Vec<(&str, usize)> = self
            .positions
            .iter()
            .map(|(k, &p)| (k.as_str(), p))
            .collect();
        v.sort_by_key(|&(_, p)| p);
        v.into_iter().map(|(k, _)| k).collect()
    }
}

/// A source-to-sink path together with its digest.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathCandidate {
    pub node_sequence: Vec<String>,
    pub digest: Digest224,
    /// The digest input: basic strings of the path's nodes joined by `\n`.
    pub basic_string: String,
}

impl PathCandidate {
    pub fn digest_hex(&self) -> String {
        hex::encode(self.digest)
    }
}

pub fn basic_string(spec: &NodeSpec) -> String {
    render_basic(spec)
}

/// The unique indegree-0 node and the unique outdegree-0 node.
pub fn detect_terminals(g: &ArchGraph) -> Result<(String, String), CanonError> {
    let (s, e) = terminals(g)?;
    Ok((g.name(s).to_owned(), g.name(e).to_owned()))
}

fn terminals(g: &ArchGraph) -> Result<(usize, usize), CanonError> {
    if g.is_empty() {
        return Err(CanonError::NoNodes);
    }
    let sorted_names = |v: Vec<usize>| {
        let mut names: Vec<String> = v.into_iter().map(|i| g.name(i).to_owned()).collect();
        names.sort();
        names
    };
    let sources: Vec<usize> = (0..g.len()).filter(|&i| g.in_degree(i) == 0).collect();
    if sources.len() != 1 {
        return Err(CanonError::AmbiguousSource(sorted_names(sources)));
    }
    let sinks: Vec<usize> = (0..g.len()).filter(|&i| g.out_degree(i) == 0).collect();
    if sinks.len() != 1 {
        return Err(CanonError::AmbiguousSink(sorted_names(sinks)));
    }
    Ok((sources[0], sinks[0]))
}

/// Digests a path given by node names.
pub fn path_digest<S: AsRef<str>>(path: &[S], g: &ArchGraph) -> Result<PathCandidate, CanonError> {
    let idx: Vec<usize> = path
        .iter()
        .map(|n| {
            g.index_of(n.as_ref())
                .ok_or_else(|| CanonError::UnknownNode(n.as_ref().to_owned()))
        })
        .collect::<Result<_, _>>()?;
    for w in idx.windows(2) {
        if !g.has_edge(w[0], w[1]) {
            return Err(CanonError::BrokenPath {
                from: g.name(w[0]).to_owned(),
                to: g.name(w[1]).to_owned(),
            });
        }
    }
    let basic: Vec<String> = idx.iter().map(|&i| render_basic(g.spec_at(i))).collect();
    Ok(candidate(g, &idx, &basic))
}

fn candidate(g: &ArchGraph, path: &[usize], basic: &[String]) -> PathCandidate {
    let text = basic.join("\n");
    PathCandidate {
        node_sequence: path.iter().map(|&i| g.name(i).to_owned()).collect(),
        digest: sha224(text.as_bytes()),
        basic_string: text,
    }
}

/// All maximal-length source-to-sink paths that contain at least one node
/// not yet in `order`.
pub fn longest_unnumbered_paths(
    g: &ArchGraph,
    order: &CanonicalOrder,
    cfg: &CanonConfig,
) -> Result<Vec<PathCandidate>, CanonError> {
    let engine = Engine::new(g)?;
    let numbered: Vec<Option<usize>> = (0..g.len()).map(|i| order.position(g.name(i))).collect();
    let paths = engine.longest_paths(&numbered, cfg.max_paths)?;
    Ok(paths
        .iter()
        .map(|p| {
            let basic: Vec<String> = p.iter().map(|&i| engine.basic(i).to_owned()).collect();
            candidate(g, p, &basic)
        })
        .collect())
}

pub fn assign_positions(g: &ArchGraph) -> Result<CanonicalOrder, CanonError> {
    assign_positions_with(g, &CanonConfig::default())
}

pub fn assign_positions_with(
    g: &ArchGraph,
    cfg: &CanonConfig,
) -> Result<CanonicalOrder, CanonError> {
    let engine = Engine::new(g)?;
    let n = g.len();
    let mut numbered: Vec<Option<usize>> = vec![None; n];
    numbered[engine.source] = Some(1);
    numbered[engine.sink] = Some(n);
    let mut next = 2;

    loop {
        let mut paths = engine.longest_paths(&numbered, cfg.max_paths)?;
        let chosen = match paths.len() {
            0 => break,
            1 => paths.pop().unwrap(),
            _ => engine.pick(paths, &numbered),
        };
        for v in chosen {
            if numbered[v].is_none() {
                numbered[v] = Some(next);
                next += 1;
            }
        }
    }

    let mut missing: Vec<String> = (0..n)
        .filter(|&i| numbered[i].is_none())
        .map(|i| g.name(i).to_owned())
        .collect();
    if !missing.is_empty() {
        missing.sort();
        return Err(CanonError::UnreachableNode(missing));
    }
    let positions = (0..n)
        .map(|i| (g.name(i).to_owned(), numbered[i].unwrap()))
        .collect();
    Ok(CanonicalOrder::from_positions(positions).expect("positions form a bijection"))
}

/// Largest tie set that gets the per-candidate lookahead.
const LOOKAHEAD_LIMIT: usize = 256;

const NONE: i64 = i64::MIN;

struct Engine<'g> {
    g: &'g ArchGraph,
    source: usize,
    sink: usize,
    topo: Vec<usize>,
    /// Longest node count from a node to the sink, `NONE` if unreachable.
    to_sink: Vec<i64>,
    basic: OnceCell<Vec<String>>,
    /// Refined colors and the number of numbered nodes they were seeded with.
    colors: RefCell<Option<(usize, Vec<Digest224>)>>,
}

impl<'g> Engine<'g> {
    fn new(g: &'g ArchGraph) -> Result<Self, CanonError> {
        let (source, sink) = terminals(g)?;
        // build_graph guarantees acyclicity.
        let topo = g.topo_order().expect("graph is acyclic");
        let mut to_sink = vec![NONE; g.len()];
        for &v in topo.iter().rev() {
            to_sink[v] = if v == sink {
                1
            } else {
                g.successors(v)
                    .iter()
                    .map(|&w| to_sink[w])
                    .filter(|&l| l != NONE)
                    .max()
                    .map_or(NONE, |l| l + 1)
            };
        }
        Ok(Self {
            g,
            source,
            sink,
            topo,
            to_sink,
            basic: OnceCell::new(),
            colors: RefCell::new(None),
        })
    }

    fn basic(&self, i: usize) -> &str {
        &self.basic.get_or_init(|| {
            (0..self.g.len())
                .map(|i| render_basic(self.g.spec_at(i)))
                .collect()
        })[i]
    }

    /// Longest paths containing an unnumbered node. Enumeration only follows
    /// steps from which the target length is still exactly reachable, so no
    /// dead ends are explored.
    fn longest_paths(
        &self,
        numbered: &[Option<usize>],
        max_paths: usize,
    ) -> Result<Vec<Vec<usize>>, CanonError> {
        let g = self.g;
        // Longest node count to the sink over paths holding an unnumbered node.
        let mut open_to_sink = vec![NONE; g.len()];
        for &v in self.topo.iter().rev() {
            open_to_sink[v] = if numbered[v].is_none() {
                self.to_sink[v]
            } else {
                g.successors(v)
                    .iter()
                    .map(|&w| open_to_sink[w])
                    .filter(|&l| l != NONE)
                    .max()
                    .map_or(NONE, |l| l + 1)
            };
        }
        let target = open_to_sink[self.source];
        if target == NONE {
            return Ok(Vec::new());
        }

        let mut out = Vec::new();
        let mut path = vec![self.source];
        let mut open = vec![numbered[self.source].is_none()];
        // Each frame is the next successor index to try at that depth.
        let mut cursor = vec![0usize];
        while let Some(&v) = path.last() {
            let depth = path.len();
            if v == self.sink {
                debug_assert_eq!(depth as i64, target);
                out.push(path.clone());
                if out.len() > max_paths {
                    return Err(CanonError::PathExplosion { limit: max_paths });
                }
                path.pop();
                open.pop();
                cursor.pop();
                continue;
            }
            let succ = g.successors(v);
            let c = cursor.last_mut().unwrap();
            let remaining = target - depth as i64;
            let has_open = *open.last().unwrap();
            let mut advanced = false;
            while *c < succ.len() {
                let w = succ[*c];
                *c += 1;
                let w_open = has_open || numbered[w].is_none();
                let reach = if w_open {
                    self.to_sink[w]
                } else {
                    open_to_sink[w]
                };
                if reach == remaining {
                    path.push(w);
                    open.push(w_open);
                    cursor.push(0);
                    advanced = true;
                    break;
                }
            }
            if !advanced {
                path.pop();
                open.pop();
                cursor.pop();
            }
        }
        Ok(out)
    }

    /// Largest digest first; equal digests fall back to the tie key.
    fn pick(&self, paths: Vec<Vec<usize>>, numbered: &[Option<usize>]) -> Vec<usize> {
        let digests: Vec<Digest224> = paths
            .iter()
            .map(|p| {
                let basic: Vec<&str> = p.iter().map(|&i| self.basic(i)).collect();
                sha224(basic.join("\n").as_bytes())
            })
            .collect();
        let top = *digests.iter().max().expect("at least one path");
        let mut tied: Vec<Vec<usize>> = paths
            .into_iter()
            .zip(digests)
            .filter(|(_, d)| *d == top)
            .map(|(p, _)| p)
            .collect();
        if tied.len() > 1 {
            tied = self.break_ties(tied, numbered);
        }
        tied.into_iter().min().expect("at least one path")
    }

    /// Narrows paths with equal digests using only renaming-invariant
    /// information: existing positions along each path, then refined colors,
    /// then the colors that result from tentatively numbering each path.
    fn break_ties(&self, paths: Vec<Vec<usize>>, numbered: &[Option<usize>]) -> Vec<Vec<usize>> {
        let pos = |p: &Vec<usize>| -> Vec<usize> {
            p.iter()
                .map(|&v| numbered[v].unwrap_or(usize::MAX))
                .collect()
        };
        let paths = keep_min_by_key(paths, pos);
        if paths.len() <= 1 {
            return paths;
        }
        let paths = self.with_colors(numbered, |c| {
            keep_min_by_key(paths, |p| p.iter().map(|&v| c[v]).collect::<Vec<_>>())
        });
        if paths.len() <= 1 || paths.len() > LOOKAHEAD_LIMIT {
            return paths;
        }
        keep_min_by_key(paths, |p| {
            let mut trial = numbered.to_vec();
            let mut k = 0;
            for &v in p {
                if trial[v].is_none() {
                    k += 1;
                    trial[v] = Some(usize::MAX - k);
                }
            }
            let mut sig = refine_colors(self.g, &self.seeds(&trial));
            sig.sort_unstable();
            sig
        })
    }

    fn seeds(&self, numbered: &[Option<usize>]) -> Vec<Vec<u8>> {
        (0..self.g.len())
            .map(|i| {
                let mut seed = self.basic(i).as_bytes().to_vec();
                if let Some(p) = numbered[i] {
                    seed.extend_from_slice(format!("\n#{p}").as_bytes());
                }
                seed
            })
            .collect()
    }

    fn with_colors<T>(&self, numbered: &[Option<usize>], f: impl FnOnce(&[Digest224]) -> T) -> T {
        let done = numbered.iter().flatten().count();
        let mut cache = self.colors.borrow_mut();
        if cache.as_ref().is_none_or(|(k, _)| *k != done) {
            *cache = Some((done, refine_colors(self.g, &self.seeds(numbered))));
        }
        f(&cache.as_ref().unwrap().1)
    }
}

fn keep_min_by_key<T, K: Ord>(items: Vec<T>, mut key: impl FnMut(&T) -> K) -> Vec<T> {
    let keyed: Vec<(K, T)> = items.into_iter().map(|t| (key(&t), t)).collect();
    let Some(min) = keyed.iter().map(|(k, _)| k).min() else {
        return Vec::new();
    };
    let min_idx: Vec<bool> = keyed.iter().map(|(k, _)| k == min).collect();
    keyed
        .into_iter()
        .zip(min_idx)
        .filter(|(_, keep)| *keep)
        .map(|((_, t), _)| t)
        .collect()
}

/// Iterated neighbourhood refinement from per-node seeds. Invariant under
/// renaming and input order.
fn refine_colors(g: &ArchGraph, seeds: &[Vec<u8>]) -> Vec<Digest224> {
    let n = g.len();
    let mut colors: Vec<Digest224> = seeds.iter().map(|s| sha224(s)).collect();
    let mut classes = count_classes(&colors);
    for _ in 0..n {
        let next: Vec<Digest224> = (0..n)
            .map(|v| {
                let mut preds: Vec<Digest224> =
                    g.predecessors(v).iter().map(|&u| colors[u]).collect();
                let mut succs: Vec<Digest224> =
                    g.successors(v).iter().map(|&w| colors[w]).collect();
                preds.sort_unstable();
                succs.sort_unstable();
                let mut buf = Vec::with_capacity(28 * (2 + preds.len() + succs.len()) + 2);
                buf.extend_from_slice(&colors[v]);
                buf.push(b'<');
                preds.iter().for_each(|c| buf.extend_from_slice(c));
                buf.push(b'>');
                succs.iter().for_each(|c| buf.extend_from_slice(c));
                sha224(&buf)
            })
            .collect();
        let next_classes = count_classes(&next);
        colors = next;
        if next_classes == classes {
            break;
        }
        classes = next_classes;
    }
    colors
}

fn count_classes(colors: &[Digest224]) -> usize {
    let mut seen: HashMap<&Digest224, ()> = HashMap::new();
    for c in colors {
        seen.insert(c, ());
    }
    seen.len()
}
