//! Canonical text descriptions of neural network architectures.
//!
//! An [`ArchGraph`] is a single-source, single-sink DAG whose nodes are
//! convolution, pooling, fully connected or multi-function units. The
//! canonicalizer gives every node a position that depends only on the graph's
//! structure and node properties, and the codec renders one line per node in
//! that order, so isomorphic graphs always produce byte-identical text.

pub mod canon;
pub mod codec;
pub mod diff;
pub mod digest;
pub mod dot;
pub mod graph_file;
pub mod lint;
pub mod model;
#[cfg(feature = "testgen")]
pub mod testgen;
pub mod validate;
pub mod vectorize;

pub use canon::{
    assign_positions, assign_positions_with, detect_terminals, longest_unnumbered_paths,
    path_digest, CanonConfig, CanonError, CanonicalOrder, PathCandidate, DEFAULT_MAX_PATHS,
};
pub use codec::{
    basic_string, classify_line, parse_description, render_description, render_description_with,
    render_unit, CodecError, ConnectTo, Description, UnitLine,
};
pub use diff::{diff_descriptions, DescriptionDiff, DiffEntry};
pub use digest::{sha224, sha224_hex, Digest224};
pub use dot::export_dot;
pub use graph_file::{
    graph_file_string, load_graph_file, parse_graph_file, save_graph_file, GraphFileError,
};
pub use lint::{
    conv_output_extent, lint_shapes, lint_shapes_with, pool_output_extent, ExtentError, LintConfig,
    ShapeEntry, ShapeReport, ShapeStatus,
};
pub use model::{
    build_graph, ArchGraph, ConvPadding, ConvSpec, FullSpec, GraphError, Kernel, MfShape, MfSpec,
    NodeSpec, PadEntry, PoolPadding, PoolSpec, PoolType, Shape3, Sides, SpecError, Stride,
    UnitKind,
};
pub use validate::{validate_graph, Diagnostics, Finding, Severity, Subject};
pub use vectorize::{
    detokenize, tokenize, unit_vector, vectors_csv, Token, TokenStream, VectorizeError, Vocabulary,
    VECTOR_LEN, VECTOR_SLOTS,
};
