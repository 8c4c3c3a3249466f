use thiserror::Error;

use crate::staged::SyntaxError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GrammarError {
    #[error("{line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("in action body: {0}")]
    Action(#[from] SyntaxError),
    #[error("unknown template `{0}`")]
    UnknownTemplate(String),
    #[error("template `{name}` expects {expected} arguments, got {got}")]
    TemplateArity { name: String, expected: usize, got: usize },
    #[error("template `{0}` is instantiated recursively")]
    TemplateRecursion(String),
    #[error("template parameter `{param}` is used as {expected} but bound to {got}")]
    KindMismatch { param: String, expected: &'static str, got: &'static str },
    #[error("signature query on `{0}`, which has no known signature")]
    UnknownSignatureQuery(String),
    #[error("rule `{0}` is used but never defined")]
    UnknownRule(String),
    #[error("entry rule `{rule}` would need a new input `{name}`")]
    EntryRuleWouldChange { rule: String, name: String },
    #[error("`{name}` in rule `{rule}` cannot be bound by any default")]
    UnresolvableDefault { rule: String, name: String },
    #[error("{what}: expected {expected} names, got {got}")]
    ArityMismatch { what: String, expected: usize, got: usize },
    #[error("productions of `{rule}` disagree: {detail}")]
    SignatureMismatch { rule: String, detail: String },
    #[error("production {production} of `{rule}` reads `{name}` before it is bound")]
    LAttribute { rule: String, production: usize, name: String },
    #[error("grammar `{0}` has no entry rule")]
    NoEntry(String),
    #[error("no grammar named `{0}` in this file")]
    UnknownGrammar(String),
    #[error("file defines no grammar")]
    Empty,
}
