use thiserror::Error;

pub type Result<T> = std::result::Result<T, NnError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnError {
    #[error("shape mismatch in {op}: got {got:?}, expected {expected:?}")]
    ShapeMismatch {
        op: &'static str,
        got: Vec<usize>,
        expected: Vec<usize>,
    },
    #[error("model width {d_model} is not divisible by {heads} attention heads")]
    IndivisibleHeads { d_model: usize, heads: usize },
    #[error("index {index} out of range in {op} (bound {bound})")]
    IndexOutOfRange {
        op: &'static str,
        index: usize,
        bound: usize,
    },
    #[error("unknown parameter `{0}`")]
    UnknownParam(String),
    #[error("duplicate parameter `{0}`")]
    DuplicateParam(String),
    #[error("backward requires a single-element loss, got shape {0:?}")]
    NonScalarLoss(Vec<usize>),
}
