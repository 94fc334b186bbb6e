//! Random and structured graph generators for tests and benchmarks.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::model::{
    build_graph, ArchGraph, ConvSpec, FullSpec, Kernel, MfShape, MfSpec, NodeSpec, PadEntry,
    PoolSpec, PoolType, Shape3, Sides, Stride,
};

const OPS: [&str; 6] = [
    "ReLU",
    "BN",
    "Dropout",
    "Addition",
    "Sigmoid",
    "Concatenation",
];

pub fn random_spec<R: Rng + ?Sized>(rng: &mut R) -> NodeSpec {
    let shape = |rng: &mut R| {
        let s = rng.random_range(1..=64);
        Shape3::new(s, s, rng.random_range(1..=512))
    };
    match rng.random_range(0..4) {
        0 => {
            let k = rng.random_range(1..=7);
            let p = rng.random_range(0..=3);
            NodeSpec::Conv(ConvSpec {
                in_size: shape(rng),
                out_size: shape(rng),
                kernel: Kernel::new(k, k),
                stride: Stride::new(rng.random_range(1..=2), rng.random_range(1..=2)),
                padding: Sides::uniform(PadEntry::new(0, p)),
                dilation: 1,
                groups: 1,
                bias_used: rng.random(),
            })
        }
        1 => {
            let input = shape(rng);
            let mut out = shape(rng);
            out.channels = input.channels;
            NodeSpec::Pool(PoolSpec {
                pool_type: if rng.random() {
                    PoolType::Max
                } else {
                    PoolType::Avg
                },
                in_size: input,
                out_size: out,
                kernel: Kernel::new(2, 2),
                stride: Stride::new(2, 2),
                padding: Sides::uniform(rng.random_range(0..=1)),
                dilation: 1,
                bias_used: false,
            })
        }
        2 => NodeSpec::Full(FullSpec {
            in_size: rng.random_range(1..=4096),
            out_size: rng.random_range(1..=4096),
            act_fun: rng.random_bool(0.5).then(|| "ReLU".to_owned()),
        }),
        _ => {
            let op = OPS[rng.random_range(0..OPS.len())];
            let s = MfShape::Spatial(shape(rng));
            let values: Vec<String> = match op {
                "Dropout" => vec!["0.5".into()],
                _ => Vec::new(),
            };
            NodeSpec::Mf(MfSpec::new(op, s, s, values))
        }
    }
}

/// A fixed pool of `variety` specs. Small pools make equal specs, and hence
/// digest ties, common.
pub fn spec_pool<R: Rng + ?Sized>(rng: &mut R, variety: usize) -> Vec<NodeSpec> {
    (0..variety.max(1)).map(|_| random_spec(rng)).collect()
}

fn pick<R: Rng + ?Sized>(rng: &mut R, pool: &[NodeSpec]) -> NodeSpec {
    pool[rng.random_range(0..pool.len())].clone()
}

fn name(i: usize) -> String {
    format!("v{i}")
}

/// Builds a graph from specs in topological order and index edges.
pub fn from_parts(specs: Vec<NodeSpec>, edges: &[(usize, usize)]) -> ArchGraph {
    let nodes = specs.into_iter().enumerate().map(|(i, s)| (name(i), s));
    let edges: Vec<(String, String)> = edges.iter().map(|&(a, b)| (name(a), name(b))).collect();
    build_graph(nodes, edges).expect("generated graph is valid")
}

/// A simple chain of `n` nodes.
pub fn chain<R: Rng + ?Sized>(rng: &mut R, n: usize, pool: &[NodeSpec]) -> ArchGraph {
    let specs = (0..n).map(|_| pick(rng, pool)).collect();
    let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
    from_parts(specs, &edges)
}

/// A chain plus up to `skips` forward skip connections.
pub fn chain_with_skips<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    skips: usize,
    pool: &[NodeSpec],
) -> ArchGraph {
    let specs = (0..n).map(|_| pick(rng, pool)).collect();
    let mut edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
    if n >= 3 {
        for _ in 0..skips {
            let a = rng.random_range(0..n - 2);
            let b = rng.random_range(a + 2..n);
            if !edges.contains(&(a, b)) {
                edges.push((a, b));
            }
        }
    }
    from_parts(specs, &edges)
}

/// A random DAG on `n` nodes with one source and one sink. Every inner node
/// gets one edge in from an earlier node and one edge out to a later node,
/// then `extra` further forward edges are sprinkled in.
pub fn random_dag<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    extra: usize,
    pool: &[NodeSpec],
) -> ArchGraph {
    let specs = (0..n).map(|_| pick(rng, pool)).collect();
    let mut edges = Vec::new();
    let add = |e: (usize, usize), edges: &mut Vec<(usize, usize)>| {
        if !edges.contains(&e) {
            edges.push(e);
        }
    };
    if n >= 2 {
        for i in 1..n - 1 {
            add((rng.random_range(0..i), i), &mut edges);
            add((i, rng.random_range(i + 1..n)), &mut edges);
        }
        add((n - 2, n - 1), &mut edges);
        for _ in 0..extra {
            let a = rng.random_range(0..n - 1);
            let b = rng.random_range(a + 1..n);
            add((a, b), &mut edges);
        }
    }
    from_parts(specs, &edges)
}

/// `k` diamonds in series with identical branches: 2^k equally long paths
/// whose digests all tie.
pub fn braid(k: usize) -> ArchGraph {
    let s = NodeSpec::Mf(MfSpec::new(
        "ReLU",
        MfShape::Flat(8),
        MfShape::Flat(8),
        Vec::<String>::new(),
    ));
    let mut edges = Vec::new();
    for d in 0..k {
        let (top, a, b, bottom) = (3 * d, 3 * d + 1, 3 * d + 2, 3 * d + 3);
        edges.extend([(top, a), (top, b), (a, bottom), (b, bottom)]);
    }
    from_parts(vec![s; 3 * k + 1], &edges)
}

/// Source, two branches of `len` nodes each, a join and a sink.
/// Both branches draw the same spec sequence when `symmetric` is set.
pub fn two_branch<R: Rng + ?Sized>(
    rng: &mut R,
    len: usize,
    symmetric: bool,
    pool: &[NodeSpec],
) -> ArchGraph {
    let left: Vec<NodeSpec> = (0..len).map(|_| pick(rng, pool)).collect();
    let right: Vec<NodeSpec> = if symmetric {
        left.clone()
    } else {
        (0..len).map(|_| pick(rng, pool)).collect()
    };
    let mut specs = vec![pick(rng, pool)];
    specs.extend(left);
    specs.extend(right);
    specs.push(pick(rng, pool));
    specs.push(pick(rng, pool));
    let join = 2 * len + 1;
    let mut edges = Vec::new();
    for branch in 0..2 {
        let first = 1 + branch * len;
        edges.push((0, first));
        for i in first..first + len - 1 {
            edges.push((i, i + 1));
        }
        edges.push((first + len - 1, join));
    }
    edges.push((join, join + 1));
    from_parts(specs, &edges)
}

/// The same graph with fresh node names and shuffled node and edge order.
pub fn relabel<R: Rng + ?Sized>(rng: &mut R, g: &ArchGraph) -> ArchGraph {
    let mut ids: Vec<usize> = (0..g.len()).collect();
    ids.shuffle(rng);
    let fresh = |i: usize| format!("r{}", ids[i]);
    let mut nodes: Vec<(String, NodeSpec)> = (0..g.len())
        .map(|i| (fresh(i), g.spec_at(i).clone()))
        .collect();
    nodes.shuffle(rng);
    let mut edges: Vec<(String, String)> = g
        .edge_indices()
        .iter()
        .map(|&(a, b)| (fresh(a), fresh(b)))
        .collect();
    edges.shuffle(rng);
    build_graph(nodes, edges).expect("relabelled graph is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    use crate::validate::validate_graph;

    #[test]
    fn generated_graphs_are_well_formed() {
        let mut rng = StdRng::seed_from_u64(7);
        let pool = spec_pool(&mut rng, 5);
        for n in 2..30 {
            let c = chain(&mut rng, n, &pool);
            for g in [
                random_dag(&mut rng, n, n / 2, &pool),
                chain_with_skips(&mut rng, n, 3, &pool),
                relabel(&mut rng, &c),
            ] {
                assert!(!validate_graph(&g).has_errors());
                assert_eq!(g.len(), n);
            }
        }
        assert_eq!(braid(3).edges().count(), 12);
        assert_eq!(two_branch(&mut rng, 3, true, &pool).len(), 9);
    }
}
