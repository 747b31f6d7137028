use thiserror::Error;

/// Errors raised by the polynomial algebra.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DaError {
    #[error("operands belong to different algebras ({lhs_vars} vars order {lhs_order} vs {rhs_vars} vars order {rhs_order})")]
    ContextMismatch {
        lhs_vars: usize,
        lhs_order: usize,
        rhs_vars: usize,
        rhs_order: usize,
    },

    #[error("variable index {index} out of range for {num_vars} variables")]
    IndexOutOfRange { index: usize, num_vars: usize },

    #[error("{op}: constant part {value} outside the function domain")]
    Domain { op: &'static str, value: f64 },

    #[error("composition arity mismatch: outer map has {expected} variables, {got} inner polynomials given")]
    Arity { expected: usize, got: usize },

    #[error("evaluation point has length {got}, expected {expected}")]
    PointLength { expected: usize, got: usize },

    #[error("order {order} too low: {needed} required")]
    OrderTooLow { order: usize, needed: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
