//! FIRST/FOLLOW analysis and LL(1) table construction.
//!
//! Actions bind names but consume nothing, so they are transparent. A foreign
//! term is represented by a pseudo-terminal: the other language decides what
//! it accepts, and an alternative keyed by it is taken when the current token
//! predicts nothing else.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use indexmap::IndexMap;
use thiserror::Error;

use crate::grammar::{Grammar, Symbol, TokenClass};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Terminal {
    Eoi,
    Literal(String),
    Class(TokenClass),
    Foreign(String, String),
}

impl fmt::Display for Terminal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Terminal::Eoi => f.write_str("EOI"),
            Terminal::Literal(l) => write!(f, "{l:?}"),
            Terminal::Class(c) => f.write_str(c.name()),
            Terminal::Foreign(l, e) => write!(f, "{l}.{e}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Conflict {
    pub rule: String,
    pub terminal: Terminal,
    pub first: usize,
    pub second: usize,
}

impl fmt::Display for Conflict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "LL(1) conflict in `{}` on {}: productions {} and {}",
            self.rule, self.terminal, self.first, self.second
        )
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseGenError {
    #[error("{0}")]
    Conflict(Conflict),
    #[error("rule `{0}` is left-recursive")]
    LeftRecursion(String),
    #[error("rule `{0}` has alternatives started by different foreign terms")]
    ForeignAmbiguity(String),
}

#[derive(Clone, Debug, Default)]
pub struct Analysis {
    pub nullable: HashMap<String, bool>,
    pub first: IndexMap<String, BTreeSet<Terminal>>,
    pub follow: IndexMap<String, BTreeSet<Terminal>>,
}

impl Analysis {
    /// FIRST of a symbol sequence and whether it can derive the empty string.
    pub fn first_of(&self, syms: &[Symbol]) -> (BTreeSet<Terminal>, bool) {
        let mut out = BTreeSet::new();
        for s in syms {
            match s {
                Symbol::Action(_) => {}
                Symbol::Literal(l) => {
                    out.insert(Terminal::Literal(l.clone()));
                    return (out, false);
                }
                Symbol::Class { class, .. } => {
                    out.insert(Terminal::Class(*class));
                    return (out, false);
                }
                Symbol::Foreign { lang, entry, .. } => {
                    out.insert(Terminal::Foreign(lang.clone(), entry.clone()));
                    return (out, false);
                }
                Symbol::Rule { name, .. } => {
                    out.extend(self.first.get(name).into_iter().flatten().cloned());
                    if !self.nullable.get(name).copied().unwrap_or(false) {
                        return (out, false);
                    }
                }
            }
        }
        (out, true)
    }
}

pub fn analyze(g: &Grammar) -> Analysis {
    let mut a = Analysis::default();
    for r in g.rules.keys() {
        a.nullable.insert(r.clone(), false);
        a.first.insert(r.clone(), BTreeSet::new());
        a.follow.insert(r.clone(), BTreeSet::new());
    }
    let mut changed = true;
    while changed {
        changed = false;
        for p in &g.productions {
            let (f, n) = a.first_of(&p.body);
            let set = a.first.get_mut(&p.head).unwrap();
            let before = set.len();
            set.extend(f);
            changed |= set.len() != before;
            if n && !a.nullable[&p.head] {
                a.nullable.insert(p.head.clone(), true);
                changed = true;
            }
        }
    }
    for r in g.entries() {
        a.follow.get_mut(&r.name).unwrap().insert(Terminal::Eoi);
    }
    changed = true;
    while changed {
        changed = false;
        for p in &g.productions {
            for (i, s) in p.body.iter().enumerate() {
                let Symbol::Rule { name, .. } = s else { continue };
                let (mut f, n) = a.first_of(&p.body[i + 1..]);
                if n {
                    f.extend(a.follow[&p.head].iter().cloned());
                }
                let set = a.follow.get_mut(name).unwrap();
                let before = set.len();
                set.extend(f);
                changed |= set.len() != before;
            }
        }
    }
    a
}

#[derive(Clone, Debug, Default)]
pub struct ParseTable {
    pub rows: IndexMap<String, BTreeMap<Terminal, usize>>,
}

impl ParseTable {
    pub fn predict(&self, rule: &str, t: &Terminal) -> Option<usize> {
        self.rows.get(rule)?.get(t).copied()
    }

    /// The production reached through a foreign pseudo-terminal, if any.
    pub fn foreign_alternative(&self, rule: &str) -> Option<usize> {
        self.rows
            .get(rule)?
            .iter()
            .find(|(t, _)| matches!(t, Terminal::Foreign(..)))
            .map(|(_, p)| *p)
    }

    /// Terminals that predict some production of `rule`, without foreign
    /// pseudo-terminals.
    pub fn expected(&self, rule: &str) -> Vec<Terminal> {
        self.rows
            .get(rule)
            .map(|r| r.keys().filter(|t| !matches!(t, Terminal::Foreign(..))).cloned().collect())
            .unwrap_or_default()
    }
}

/// Every conflict in the grammar, in a stable order.
pub fn conflicts(g: &Grammar, a: &Analysis) -> (ParseTable, Vec<Conflict>) {
    let mut table = ParseTable::default();
    let mut out = Vec::new();
    for r in g.rules.keys() {
        table.rows.insert(r.clone(), BTreeMap::new());
    }
    for p in &g.productions {
        let (mut f, n) = a.first_of(&p.body);
        if n {
            f.extend(a.follow[&p.head].iter().cloned());
        }
        let row = table.rows.get_mut(&p.head).unwrap();
        for t in f {
            match row.get(&t) {
                Some(&q) if q != p.id => out.push(Conflict {
                    rule: p.head.clone(),
                    terminal: t,
                    first: q,
                    second: p.id,
                }),
                Some(_) => {}
                None => {
                    row.insert(t, p.id);
                }
            }
        }
    }
    (table, out)
}

pub fn build_table(g: &Grammar) -> Result<(Analysis, ParseTable), ParseGenError> {
    if let Some(r) = left_recursive(g) {
        return Err(ParseGenError::LeftRecursion(r));
    }
    let a = analyze(g);
    let (table, cs) = conflicts(g, &a);
    if let Some(c) = cs.into_iter().next() {
        return Err(ParseGenError::Conflict(c));
    }
    for (rule, row) in &table.rows {
        let mut prods = row
            .iter()
            .filter(|(t, _)| matches!(t, Terminal::Foreign(..)))
            .map(|(_, p)| *p)
            .collect::<Vec<_>>();
        prods.dedup();
        if prods.len() > 1 {
            return Err(ParseGenError::ForeignAmbiguity(rule.clone()));
        }
    }
    Ok((a, table))
}

fn left_recursive(g: &Grammar) -> Option<String> {
    let a = analyze(g);
    let mut edges: HashMap<&str, Vec<&str>> = HashMap::new();
    for p in &g.productions {
        for s in &p.body {
            match s {
                Symbol::Action(_) => continue,
                Symbol::Rule { name, .. } => {
                    edges.entry(&p.head).or_default().push(name);
                    if !a.nullable[name] {
                        break;
                    }
                }
                _ => break,
            }
        }
    }
    for start in g.rules.keys() {
        let mut stack: Vec<&str> = edges.get(start.as_str()).cloned().unwrap_or_default();
        let mut seen = BTreeSet::new();
        while let Some(n) = stack.pop() {
            if n == start {
                return Some(start.clone());
            }
            if seen.insert(n) {
                stack.extend(edges.get(n).into_iter().flatten());
            }
        }
    }
    None
}

/// Warnings about foreign terms whose extent is decided by the other
/// language rather than by this grammar's lookahead.
pub fn validate_foreign_positions(g: &Grammar, a: &Analysis) -> Vec<String> {
    let mut out = Vec::new();
    for p in &g.productions {
        for (i, s) in p.body.iter().enumerate() {
            let Symbol::Foreign { lang, entry, .. } = s else { continue };
            let (_, prefix_nullable) = a.first_of(&p.body[..i]);
            if prefix_nullable && g.rules[&p.head].productions.len() > 1 {
                out.push(format!(
                    "production {} of `{}` starts with {lang}.{entry}; it is chosen only when no other alternative matches",
                    p.id, p.head
                ));
            }
            let (follow, _) = a.first_of(&p.body[i + 1..]);
            if follow.iter().any(|t| matches!(t, Terminal::Foreign(..))) {
                out.push(format!(
                    "production {} of `{}`: {lang}.{entry} is directly followed by another foreign term",
                    p.id, p.head
                ));
            }
        }
    }
    out
}

fn set_str(s: &BTreeSet<Terminal>) -> String {
    s.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(" ")
}

/// Stable, line-oriented report of the analysis and table.
pub fn render_report(g: &Grammar, a: &Analysis, t: &ParseTable) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "grammar {}: {} rules, {} productions\n",
        g.name,
        g.rules.len(),
        g.productions.len()
    ));
    for (name, rule) in &g.rules {
        out.push_str(&format!(
            "rule {name}{}{}\n",
            if rule.entry { " (entry)" } else { "" },
            if a.nullable[name] { " nullable" } else { "" }
        ));
        out.push_str(&format!("  first:  {}\n", set_str(&a.first[name])));
        out.push_str(&format!("  follow: {}\n", set_str(&a.follow[name])));
        for (term, p) in &t.rows[name] {
            out.push_str(&format!("  on {term} -> {p}\n"));
        }
    }
    out
}
