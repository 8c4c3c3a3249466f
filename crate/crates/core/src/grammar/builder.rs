//! Programmatic construction of grammars, equivalent to reading a file.

use super::error::GrammarError;
use super::expand::expand;
use super::model::*;
use super::reader::read_action;

fn names(ns: &[&str]) -> Vec<NameItem> {
    ns.iter().map(|n| NameItem::name(*n)).collect()
}

pub fn lit(s: &str) -> Item {
    Item::Literal(s.to_string())
}

/// A rule, token class or template parameter with default arguments.
pub fn term(name: &str) -> Item {
    Item::Ident {
        name: name.to_string(),
        ins: None,
        outs: None,
    }
}

pub fn term_io(name: &str, ins: &[&str], outs: &[&str]) -> Item {
    Item::Ident {
        name: name.to_string(),
        ins: (!ins.is_empty()).then(|| names(ins)),
        outs: Some(names(outs)),
    }
}

pub fn foreign(lang: &str, entry: &str, ins: &[&str], outs: &[&str]) -> Item {
    Item::Foreign {
        lang: lang.to_string(),
        entry: entry.to_string(),
        ins: Some(names(ins)),
        outs: Some(names(outs)),
    }
}

/// Parses `|(ins)->(outs)| { body }`.
pub fn action(src: &str) -> Result<Item, GrammarError> {
    Ok(Item::Action(read_action(src)?))
}

pub fn call(template: &str, args: Vec<CallArg>) -> Item {
    Item::Call {
        template: template.to_string(),
        args,
        ins: None,
        outs: None,
    }
}

pub fn action_arg(src: &str) -> Result<CallArg, GrammarError> {
    Ok(CallArg::Action(read_action(src)?))
}

#[derive(Clone, Debug, Default)]
pub struct GrammarBuilder {
    def: GrammarDef,
}

impl GrammarBuilder {
    pub fn new(name: &str) -> Self {
        GrammarBuilder {
            def: GrammarDef {
                templates: vec![],
                grammars: vec![GrammarSource {
                    name: name.to_string(),
                    productions: vec![],
                }],
            },
        }
    }

    fn push(&mut self, entry: bool, head: &str, ins: &[&str], outs: &[&str], body: Vec<Item>) -> &mut Self {
        let line = self.def.grammars[0].productions.len() + 1;
        self.def.grammars[0].productions.push(ProductionDef {
            head: head.to_string(),
            ins: names(ins),
            outs: names(outs),
            body,
            entry,
            line,
        });
        self
    }

    pub fn production(&mut self, head: &str, ins: &[&str], outs: &[&str], body: Vec<Item>) -> &mut Self {
        self.push(false, head, ins, outs, body)
    }

    pub fn entry(&mut self, head: &str, outs: &[&str], body: Vec<Item>) -> &mut Self {
        self.push(true, head, &[], outs, body)
    }

    pub fn template(&mut self, t: Template) -> &mut Self {
        self.def.templates.push(t);
        self
    }

    pub fn build(&self) -> Result<Grammar, GrammarError> {
        expand(&self.def, None)
    }
}
