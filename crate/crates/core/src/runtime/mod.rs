//! Language registry and the syntax-directed executor.

pub mod lexer;
pub mod parser;

use indexmap::IndexMap;
use thiserror::Error;

use crate::grammar::Grammar;
use crate::parsegen::{build_table, validate_foreign_positions, Analysis, ParseGenError, ParseTable};
use crate::staged::{EvalError, SyntaxError};

pub use lexer::{LexSpec, Token};
pub use parser::Session;

/// Name of the built-in language that reads core-calculus bodies.
pub const CORE_LANGUAGE: &str = "Core";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RuntimeError {
    #[error("{lang}: cannot lex {found:?} at {line}:{col}")]
    Lex {
        lang: String,
        line: usize,
        col: usize,
        found: char,
    },
    #[error("{lang}: unexpected {found} at {line}:{col}, expected one of: {}", expected.join(", "))]
    UnexpectedToken {
        lang: String,
        line: usize,
        col: usize,
        found: String,
        expected: Vec<String>,
    },
    #[error("core body in input: {0}")]
    CoreSyntax(SyntaxError),
    #[error("unknown language `{0}`")]
    UnknownLanguage(String),
    #[error("language `{lang}` has no entry rule `{entry}`")]
    UnknownEntry { lang: String, entry: String },
    #[error("`{0}` is refused: {1}")]
    Refused(String, ParseGenError),
    #[error("{what}: expected {expected} values, got {got}")]
    Arity { what: String, expected: usize, got: usize },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl RuntimeError {
    /// Errors caused by the input text rather than by evaluation.
    pub fn is_parse_error(&self) -> bool {
        matches!(
            self,
            RuntimeError::Lex { .. } | RuntimeError::UnexpectedToken { .. } | RuntimeError::CoreSyntax(_)
        )
    }
}

#[derive(Clone, Debug)]
pub struct Language {
    pub grammar: Grammar,
    pub analysis: Analysis,
    pub table: ParseTable,
    pub lex: LexSpec,
}

#[derive(Clone, Debug)]
pub enum LanguageDef {
    Grammar(Box<Language>),
    /// Reads a core body from the input: `Core.Body` takes a tuple of
    /// parameter names and yields a lambda over them.
    Core,
}

#[derive(Clone, Debug)]
pub struct Registry {
    langs: IndexMap<String, LanguageDef>,
    pub warnings: Vec<String>,
}

impl Default for Registry {
    fn default() -> Self {
        Registry::new()
    }
}

impl Registry {
    pub fn new() -> Self {
        let mut langs = IndexMap::new();
        langs.insert(CORE_LANGUAGE.to_string(), LanguageDef::Core);
        Registry {
            langs,
            warnings: Vec::new(),
        }
    }

    /// Builds the parse table and adds the language under its grammar name.
    /// A conflicting grammar is refused; a second registration of a name
    /// replaces the first with a warning.
    pub fn register(&mut self, grammar: Grammar) -> Result<(), RuntimeError> {
        let name = grammar.name.clone();
        let (analysis, table) = build_table(&grammar).map_err(|e| RuntimeError::Refused(name.clone(), e))?;
        for w in validate_foreign_positions(&grammar, &analysis) {
            log::warn!("{name}: {w}");
            self.warnings.push(format!("{name}: {w}"));
        }
        let lex = LexSpec::for_grammar(&grammar);
        let lang = LanguageDef::Grammar(Box::new(Language {
            grammar,
            analysis,
            table,
            lex,
        }));
        if self.langs.insert(name.clone(), lang).is_some() {
            log::warn!("language `{name}` registered again; replacing it");
            self.warnings.push(format!("language `{name}` registered again; replacing it"));
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&LanguageDef, RuntimeError> {
        self.langs
            .get(name)
            .ok_or_else(|| RuntimeError::UnknownLanguage(name.to_string()))
    }

    pub fn language(&self, name: &str) -> Result<&Language, RuntimeError> {
        match self.get(name)? {
            LanguageDef::Grammar(l) => Ok(l),
            LanguageDef::Core => Err(RuntimeError::UnknownEntry {
                lang: name.to_string(),
                entry: "<grammar>".into(),
            }),
        }
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.langs.keys()
    }

    /// Checks that every foreign term names a registered language, an entry
    /// rule of it, and matches its signature.
    pub fn check_links(&self) -> Result<(), RuntimeError> {
        for def in self.langs.values() {
            let LanguageDef::Grammar(l) = def else { continue };
            for p in &l.grammar.productions {
                for s in &p.body {
                    let crate::grammar::Symbol::Foreign { lang, entry, ins, outs } = s else {
                        continue;
                    };
                    let (want_in, want_out) = self.entry_signature(lang, entry)?;
                    if want_in != ins.len() || want_out != outs.len() {
                        return Err(RuntimeError::Arity {
                            what: format!("{lang}.{entry} used in `{}`", p.head),
                            expected: want_in + want_out,
                            got: ins.len() + outs.len(),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn entry_signature(&self, lang: &str, entry: &str) -> Result<(usize, usize), RuntimeError> {
        let unknown = || RuntimeError::UnknownEntry {
            lang: lang.to_string(),
            entry: entry.to_string(),
        };
        match self.get(lang)? {
            LanguageDef::Core if entry == "Body" => Ok((1, 1)),
            LanguageDef::Core => Err(unknown()),
            LanguageDef::Grammar(l) => match l.grammar.rule(entry) {
                Some(r) if r.entry => Ok((r.ins.len(), r.outs.len())),
                _ => Err(unknown()),
            },
        }
    }
}
