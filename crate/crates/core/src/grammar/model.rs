//! Grammar data: the surface form read from files (with template calls and
//! name-list operators) and the expanded form the parser generator consumes.

use indexmap::IndexMap;

use crate::staged::Term;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TokenClass {
    Identifier,
    Integer,
    String,
}

impl TokenClass {
    pub fn from_name(name: &str) -> Option<TokenClass> {
        match name {
            "Identifier" => Some(TokenClass::Identifier),
            "Integer" => Some(TokenClass::Integer),
            "String" => Some(TokenClass::String),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TokenClass::Identifier => "Identifier",
            TokenClass::Integer => "Integer",
            TokenClass::String => "String",
        }
    }

    /// Output name used when a class term has no explicit `|->(x)|`.
    pub fn default_out(self) -> &'static str {
        match self {
            TokenClass::Identifier => "identifier",
            TokenClass::Integer => "integer",
            TokenClass::String => "string",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dir {
    In,
    Out,
}

/// One entry of a surface name list.
#[derive(Clone, Debug, PartialEq)]
pub enum NameItem {
    Name(String),
    /// `p.t`: every name of tuple `t` with `p_` prepended.
    Prefixed { prefix: String, tuple: String },
    /// `|t:in|` or `|t:out|`.
    Query { term: String, dir: Dir },
}

impl NameItem {
    pub fn name(n: impl Into<String>) -> NameItem {
        NameItem::Name(n.into())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ActionCode {
    /// `(params..., return)[parse]{ body }`; `text` is the body as written.
    Lambda {
        term: Term,
        params: Vec<String>,
        text: String,
    },
    /// Produced when `epsilon` stands in for an action that has attributes:
    /// the outputs receive the trailing inputs.
    Forward,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ActionDef {
    pub ins: Vec<NameItem>,
    pub outs: Vec<NameItem>,
    pub code: ActionCode,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CallArg {
    /// A rule, token class, or an enclosing template's parameter.
    Name(String),
    Literal(String),
    Epsilon,
    Action(ActionDef),
    Tuple(Vec<NameItem>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Item {
    Literal(String),
    /// A rule, token class, template parameter or `epsilon`, resolved during
    /// expansion. `None` lists are completed with default arguments.
    Ident {
        name: String,
        ins: Option<Vec<NameItem>>,
        outs: Option<Vec<NameItem>>,
    },
    Foreign {
        lang: String,
        entry: String,
        ins: Option<Vec<NameItem>>,
        outs: Option<Vec<NameItem>>,
    },
    Action(ActionDef),
    Call {
        template: String,
        args: Vec<CallArg>,
        ins: Option<Vec<NameItem>>,
        outs: Option<Vec<NameItem>>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProductionDef {
    pub head: String,
    pub ins: Vec<NameItem>,
    pub outs: Vec<NameItem>,
    pub body: Vec<Item>,
    pub entry: bool,
    pub line: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrammarSource {
    pub name: String,
    pub productions: Vec<ProductionDef>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Template {
    pub name: String,
    pub params: Vec<String>,
    pub aliases: Vec<(String, NameItem)>,
    pub productions: Vec<ProductionDef>,
    pub ret: String,
}

/// Everything read from one grammar file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GrammarDef {
    pub templates: Vec<Template>,
    pub grammars: Vec<GrammarSource>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Action {
    pub ins: Vec<String>,
    pub outs: Vec<String>,
    pub code: ActionCode,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Symbol {
    Literal(String),
    Class {
        class: TokenClass,
        out: String,
    },
    Rule {
        name: String,
        ins: Vec<String>,
        outs: Vec<String>,
    },
    Foreign {
        lang: String,
        entry: String,
        ins: Vec<String>,
        outs: Vec<String>,
    },
    Action(Action),
}

impl Symbol {
    /// Names this symbol reads.
    pub fn inputs(&self) -> &[String] {
        match self {
            Symbol::Rule { ins, .. } | Symbol::Foreign { ins, .. } => ins,
            Symbol::Action(a) => &a.ins,
            _ => &[],
        }
    }

    /// Names this symbol binds.
    pub fn outputs(&self) -> Vec<String> {
        match self {
            Symbol::Class { out, .. } => vec![out.clone()],
            Symbol::Rule { outs, .. } | Symbol::Foreign { outs, .. } => outs.clone(),
            Symbol::Action(a) => a.outs.clone(),
            Symbol::Literal(_) => vec![],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Production {
    pub id: usize,
    pub head: String,
    pub ins: Vec<String>,
    pub outs: Vec<String>,
    pub body: Vec<Symbol>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rule {
    pub name: String,
    pub ins: Vec<String>,
    pub outs: Vec<String>,
    pub productions: Vec<usize>,
    pub entry: bool,
}

/// An expanded, validated grammar.
#[derive(Clone, Debug, PartialEq)]
pub struct Grammar {
    pub name: String,
    pub productions: Vec<Production>,
    pub rules: IndexMap<String, Rule>,
}

impl Grammar {
    pub fn entries(&self) -> impl Iterator<Item = &Rule> {
        self.rules.values().filter(|r| r.entry)
    }

    pub fn rule(&self, name: &str) -> Option<&Rule> {
        self.rules.get(name)
    }

    pub fn production(&self, id: usize) -> &Production {
        &self.productions[id]
    }

    /// Literal terminals in first-use order.
    pub fn literals(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for p in &self.productions {
            for s in &p.body {
                if let Symbol::Literal(l) = s {
                    if !out.contains(l) {
                        out.push(l.clone());
                    }
                }
            }
        }
        out
    }

    pub fn classes(&self) -> Vec<TokenClass> {
        let mut out = Vec::new();
        for p in &self.productions {
            for s in &p.body {
                if let Symbol::Class { class, .. } = s {
                    if !out.contains(class) {
                        out.push(*class);
                    }
                }
            }
        }
        out.sort();
        out
    }

    /// Foreign `(language, entry)` references.
    pub fn used_foreign(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for p in &self.productions {
            for s in &p.body {
                if let Symbol::Foreign { lang, entry, .. } = s {
                    let key = (lang.clone(), entry.clone());
                    if !out.contains(&key) {
                        out.push(key);
                    }
                }
            }
        }
        out
    }
}
