//! Attributed LL(1) grammars: file reader, templates, default arguments.

pub mod builder;
pub mod error;
pub mod expand;
pub mod model;
pub mod prelude;
pub mod printer;
pub mod reader;

pub use builder::GrammarBuilder;
pub use error::GrammarError;
pub use expand::{check_l_attributed, expand};
pub use model::*;
pub use printer::print_grammar;
pub use reader::{read_action, read_grammar_file};

/// Reads a grammar file and expands the named grammar (or the first one).
pub fn load_grammar(text: &str, name: Option<&str>) -> Result<Grammar, GrammarError> {
    expand(&read_grammar_file(text)?, name)
}
