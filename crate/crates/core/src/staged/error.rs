use thiserror::Error;

use crate::fragments::FragmentError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SyntaxError {
    #[error("{line}:{col}: {msg}")]
    At { line: usize, col: usize, msg: String },
    #[error("`let` at {line}:{col} has no body to bind into")]
    UnboundSugar { line: usize, col: usize },
}

impl SyntaxError {
    pub fn at(text: &str, offset: usize, msg: impl Into<String>) -> SyntaxError {
        let (line, col) = line_col(text, offset);
        SyntaxError::At {
            line,
            col,
            msg: msg.into(),
        }
    }
}

pub fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let upto = &text[..offset.min(text.len())];
    let line = upto.matches('\n').count() + 1;
    let col = upto.rfind('\n').map_or(upto.len(), |p| upto.len() - p - 1) + 1;
    (line, col)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("stage expression refers to unbound name `{0}`")]
    UnboundStageName(String),
    #[error("unbound name `{0}`")]
    UnboundName(String),
    #[error("cannot apply {0}: not a closure, fragment or builtin")]
    ApplyNonClosure(String),
    #[error("arity mismatch: {0}")]
    ArityMismatch(String),
    #[error("primitive type error: {0}")]
    PrimTypeError(String),
    #[error("name `{0}` not found in environment")]
    NameNotFound(String),
    #[error("step budget of {0} steps exceeded")]
    StepBudgetExceeded(usize),
    #[error("evaluation reached normal form without invoking return")]
    ReturnNeverCalled,
    #[error("return continuation invoked a second time")]
    ReturnCalledTwice,
    #[error("cannot refine symbolic tuple `{0}`: {1}")]
    CannotRefine(String, String),
    #[error("program requested exit")]
    Halt,
    #[error(transparent)]
    Fragment(#[from] FragmentError),
}
