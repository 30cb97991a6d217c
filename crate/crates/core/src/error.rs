use alloc::string::String;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoeffError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("unknown coordinate `{0}`")]
    UnknownCoordinate(String),
    #[error("division by an expression that normalizes to zero")]
    DivisionByZero,
    #[error("invalid chart: {0}")]
    InvalidChart(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("no value supplied for coordinate `{0}`")]
    MissingCoordinate(String),
    #[error("no value supplied for opaque symbol `{0}`")]
    MissingOpaque(String),
    #[error("division by {0:e}")]
    Singular(f64),
    #[error("{0} outside its domain")]
    Domain(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlgebraError {
    #[error("generator `{0}` is not in the generator set")]
    UnknownGenerator(String),
    #[error("elements belong to different generator sets")]
    MixedGeneratorSets,
    #[error("image of `{symbol}` has degree {found}, expected {expected}")]
    Inhomogeneous {
        symbol: String,
        expected: i32,
        found: i32,
    },
    #[error("duplicate or clashing generator name `{0}`")]
    BadGeneratorName(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("bracket is not antisymmetric in (beta, gamma) = ({beta}, {gamma}) for alpha = {alpha}")]
    BracketNotAntisymmetric {
        alpha: usize,
        beta: usize,
        gamma: usize,
    },
    #[error("zeta is not antisymmetric in (a, b) = ({a}, {b}) for alpha = {alpha}")]
    ZetaNotAntisymmetric { alpha: usize, a: usize, b: usize },
    #[error("Weil differential fails to square to zero on `{0}`")]
    NotNilpotent(String),
    #[error(transparent)]
    Coeff(#[from] CoeffError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CocycleError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("could not find admissible sample points on {0}")]
    Sampling(String),
    #[error("quadrature did not converge (estimated error {0:e})")]
    Quadrature(f64),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Coeff(#[from] CoeffError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CatalogError {
    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),
    #[error("bad parameter for `{fixture}`: {msg}")]
    BadParameter { fixture: String, msg: String },
    #[error("sampling failed: {0}")]
    Sampling(String),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Coeff(#[from] CoeffError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}
