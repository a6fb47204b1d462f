//! Dense/sparse matrices, reverse-mode autodiff, and the Adam optimizer.

mod adam;
mod dense;
mod sparse;
mod tape;

pub use adam::{AdamConfig, AdamState};
pub use dense::DenseMatrix;
pub use sparse::SparseMatrix;
pub use tape::{
    bce_value, dropout_mask, segment_softmax_values, Activation, Elementwise, Gradients, Tape, Var,
    BCE_CLAMP, SIGMOID_MARGIN,
};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("{op}: incompatible shapes {}x{} and {}x{}", .lhs.0, .lhs.1, .rhs.0, .rhs.1)]
    Shape {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },
    #[error("buffer of length {len} cannot form a {rows}x{cols} matrix")]
    Length {
        rows: usize,
        cols: usize,
        len: usize,
    },
    #[error("index ({row}, {col}) out of range for {rows}x{cols}")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
    #[error("expected a scalar, got {rows}x{cols}")]
    NotScalar { rows: usize, cols: usize },
    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),
    #[error("probability {0} outside [0, 1)")]
    Probability(f64),
    #[error("segment {0} has no entries")]
    EmptySegment(usize),
    #[error("{0}: empty input")]
    Empty(&'static str),
    #[error("duplicate sparse coordinate")]
    DuplicateEntry,
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("no parameter named {0}")]
    UnknownParameter(String),
}

impl TensorError {
    pub(crate) fn shape(op: &'static str, lhs: (usize, usize), rhs: (usize, usize)) -> Self {
        TensorError::Shape { op, lhs, rhs }
    }
}
