//! Template instantiation, default-argument completion and validation.

use std::collections::{HashMap, HashSet};

use indexmap::IndexMap;

use super::error::GrammarError;
use super::model::*;
use super::prelude::PRELUDE;
use super::reader::read_grammar_file;

/// Expands the grammar called `name` (or the only/first one) of a file.
pub fn expand(def: &GrammarDef, name: Option<&str>) -> Result<Grammar, GrammarError> {
    let source = match name {
        Some(n) => def
            .grammars
            .iter()
            .find(|g| g.name == n)
            .ok_or_else(|| GrammarError::UnknownGrammar(n.to_string()))?,
        None => def.grammars.first().ok_or(GrammarError::Empty)?,
    };
    let mut templates: HashMap<String, Template> = HashMap::new();
    for t in read_grammar_file(PRELUDE)?.templates.into_iter().chain(def.templates.iter().cloned()) {
        templates.insert(t.name.clone(), t);
    }
    expand_source(source, &templates)
}

#[derive(Clone, Debug)]
enum Bound {
    Rule(String),
    Class(TokenClass),
    Literal(String),
    Epsilon,
    Action(Action),
    Tuple(Vec<String>),
}

impl Bound {
    fn kind(&self) -> &'static str {
        match self {
            Bound::Rule(_) => "a rule",
            Bound::Class(_) => "a token class",
            Bound::Literal(_) => "a literal",
            Bound::Epsilon => "epsilon",
            Bound::Action(_) => "an action",
            Bound::Tuple(_) => "a name list",
        }
    }
}

#[derive(Default)]
struct Scope {
    params: HashMap<String, Bound>,
    aliases: HashMap<String, Vec<String>>,
    locals: HashMap<String, String>,
}

#[derive(Clone, Debug)]
enum Raw {
    Sym(Symbol),
    Rule {
        name: String,
        ins: Option<Vec<String>>,
        outs: Option<Vec<String>>,
    },
    Foreign {
        lang: String,
        entry: String,
        ins: Option<Vec<String>>,
        outs: Option<Vec<String>>,
    },
}

struct RawProd {
    head: String,
    ins: Vec<String>,
    outs: Vec<String>,
    body: Vec<Raw>,
    entry: bool,
}

struct Expander<'t> {
    templates: &'t HashMap<String, Template>,
    sigs: HashMap<String, (Vec<String>, Vec<String>)>,
    taken: HashSet<String>,
    prods: Vec<RawProd>,
    stack: Vec<String>,
}

fn expand_source(source: &GrammarSource, templates: &HashMap<String, Template>) -> Result<Grammar, GrammarError> {
    let mut ex = Expander {
        templates,
        sigs: HashMap::new(),
        taken: HashSet::new(),
        prods: Vec::new(),
        stack: Vec::new(),
    };
    let top = Scope::default();
    for p in &source.productions {
        ex.taken.insert(p.head.clone());
        let ins = ex.names(&p.ins, &top)?;
        let outs = ex.names(&p.outs, &top)?;
        ex.sigs.entry(p.head.clone()).or_insert((ins, outs));
    }
    for p in &source.productions {
        ex.production(p, &top, &p.head.clone(), None)?;
    }
    let prods = std::mem::take(&mut ex.prods);
    complete(&source.name, prods)
}

impl<'t> Expander<'t> {
    fn names(&self, items: &[NameItem], scope: &Scope) -> Result<Vec<String>, GrammarError> {
        let mut out = Vec::new();
        for item in items {
            match item {
                NameItem::Name(n) => out.extend(self.tuple(n, scope)?.unwrap_or_else(|| vec![n.clone()])),
                NameItem::Prefixed { prefix, tuple } => {
                    let names = self.tuple(tuple, scope)?.unwrap_or_else(|| vec![tuple.clone()]);
                    out.extend(names.iter().map(|n| format!("{prefix}_{n}")));
                }
                NameItem::Query { term, dir } => {
                    let (ins, outs) = self.signature(term, scope)?;
                    out.extend(if *dir == Dir::In { ins } else { outs });
                }
            }
        }
        Ok(out)
    }

    fn tuple(&self, n: &str, scope: &Scope) -> Result<Option<Vec<String>>, GrammarError> {
        if let Some(ns) = scope.aliases.get(n) {
            return Ok(Some(ns.clone()));
        }
        match scope.params.get(n) {
            Some(Bound::Tuple(ns)) => Ok(Some(ns.clone())),
            Some(b) => Err(GrammarError::KindMismatch {
                param: n.to_string(),
                expected: "a name list",
                got: b.kind(),
            }),
            None => Ok(None),
        }
    }

    fn bound(&self, n: &str, scope: &Scope) -> Bound {
        if let Some(b) = scope.params.get(n) {
            return b.clone();
        }
        if n == "epsilon" {
            return Bound::Epsilon;
        }
        if let Some(c) = TokenClass::from_name(n) {
            return Bound::Class(c);
        }
        Bound::Rule(scope.locals.get(n).cloned().unwrap_or_else(|| n.to_string()))
    }

    fn signature(&self, term: &str, scope: &Scope) -> Result<(Vec<String>, Vec<String>), GrammarError> {
        match self.bound(term, scope) {
            Bound::Rule(r) => self
                .sigs
                .get(&r)
                .cloned()
                .ok_or(GrammarError::UnknownSignatureQuery(term.to_string())),
            Bound::Class(c) => Ok((vec![], vec![c.default_out().to_string()])),
            Bound::Literal(_) | Bound::Epsilon => Ok((vec![], vec![])),
            Bound::Action(a) => Ok((a.ins, a.outs)),
            Bound::Tuple(_) => Err(GrammarError::KindMismatch {
                param: term.to_string(),
                expected: "a grammar term",
                got: "a name list",
            }),
        }
    }

    fn opt_names(&self, items: &Option<Vec<NameItem>>, scope: &Scope) -> Result<Option<Vec<String>>, GrammarError> {
        items.as_ref().map(|i| self.names(i, scope)).transpose()
    }

    fn action(&self, def: &ActionDef, scope: &Scope) -> Result<Action, GrammarError> {
        let a = Action {
            ins: self.names(&def.ins, scope)?,
            outs: self.names(&def.outs, scope)?,
            code: def.code.clone(),
        };
        check_action(&a)?;
        Ok(a)
    }

    fn production(
        &mut self,
        p: &ProductionDef,
        scope: &Scope,
        site: &str,
        head: Option<String>,
    ) -> Result<(), GrammarError> {
        let head = head.unwrap_or_else(|| p.head.clone());
        let ins = self.names(&p.ins, scope)?;
        let outs = self.names(&p.outs, scope)?;
        let slot = self.prods.len();
        self.prods.push(RawProd {
            head,
            ins,
            outs: outs.clone(),
            body: vec![],
            entry: p.entry,
        });
        let whole_call = p.body.len() == 1 && matches!(p.body[0], Item::Call { .. });
        let mut body = Vec::new();
        for item in &p.body {
            body.extend(self.item(item, scope, site)?);
        }
        if whole_call {
            if let Some(Raw::Rule { outs: o @ None, .. }) = body.first_mut() {
                *o = Some(outs);
            }
        }
        self.prods[slot].body = body;
        Ok(())
    }

    fn item(&mut self, item: &Item, scope: &Scope, site: &str) -> Result<Option<Raw>, GrammarError> {
        Ok(match item {
            Item::Literal(l) => Some(Raw::Sym(Symbol::Literal(l.clone()))),
            Item::Action(def) => Some(Raw::Sym(Symbol::Action(self.action(def, scope)?))),
            Item::Foreign { lang, entry, ins, outs } => Some(Raw::Foreign {
                lang: lang.clone(),
                entry: entry.clone(),
                ins: self.opt_names(ins, scope)?,
                outs: self.opt_names(outs, scope)?,
            }),
            Item::Call {
                template,
                args,
                ins,
                outs,
            } => {
                let name = self.instantiate(template, args, scope, site)?;
                Some(Raw::Rule {
                    name,
                    ins: self.opt_names(ins, scope)?,
                    outs: self.opt_names(outs, scope)?,
                })
            }
            Item::Ident { name, ins, outs } => {
                let ins = self.opt_names(ins, scope)?;
                let outs = self.opt_names(outs, scope)?;
                self.use_bound(name, self.bound(name, scope), ins, outs)?
            }
        })
    }

    fn use_bound(
        &self,
        param: &str,
        b: Bound,
        ins: Option<Vec<String>>,
        outs: Option<Vec<String>>,
    ) -> Result<Option<Raw>, GrammarError> {
        let no_ins = ins.as_ref().is_none_or(|i| i.is_empty());
        Ok(match b {
            Bound::Rule(name) => Some(Raw::Rule { name, ins, outs }),
            Bound::Class(class) => {
                if !no_ins {
                    return Err(GrammarError::KindMismatch {
                        param: param.to_string(),
                        expected: "a term with inputs",
                        got: "a token class",
                    });
                }
                let out = match outs {
                    None => class.default_out().to_string(),
                    Some(o) if o.len() == 1 => o[0].clone(),
                    Some(o) => {
                        return Err(GrammarError::ArityMismatch {
                            what: format!("outputs of {}", class.name()),
                            expected: 1,
                            got: o.len(),
                        })
                    }
                };
                Some(Raw::Sym(Symbol::Class { class, out }))
            }
            Bound::Literal(l) => {
                if !no_ins || outs.as_ref().is_some_and(|o| !o.is_empty()) {
                    return Err(GrammarError::KindMismatch {
                        param: param.to_string(),
                        expected: "a term with attributes",
                        got: "a literal",
                    });
                }
                Some(Raw::Sym(Symbol::Literal(l)))
            }
            Bound::Epsilon => {
                let outs = outs.unwrap_or_default();
                if outs.is_empty() {
                    None
                } else {
                    let a = Action {
                        ins: ins.unwrap_or_default(),
                        outs,
                        code: ActionCode::Forward,
                    };
                    check_action(&a)?;
                    Some(Raw::Sym(Symbol::Action(a)))
                }
            }
            Bound::Action(a) => {
                let a = Action {
                    ins: ins.unwrap_or(a.ins),
                    outs: outs.unwrap_or(a.outs),
                    code: a.code,
                };
                check_action(&a)?;
                Some(Raw::Sym(Symbol::Action(a)))
            }
            Bound::Tuple(_) => {
                return Err(GrammarError::KindMismatch {
                    param: param.to_string(),
                    expected: "a grammar term",
                    got: "a name list",
                })
            }
        })
    }

    fn fresh(&mut self, base: &str) -> String {
        let mut name = base.to_string();
        let mut n = 2;
        while self.taken.contains(&name) {
            name = format!("{base}_{n}");
            n += 1;
        }
        self.taken.insert(name.clone());
        name
    }

    fn instantiate(
        &mut self,
        template: &str,
        args: &[CallArg],
        caller: &Scope,
        site: &str,
    ) -> Result<String, GrammarError> {
        let t = self
            .templates
            .get(template)
            .ok_or_else(|| GrammarError::UnknownTemplate(template.to_string()))?;
        if t.params.len() != args.len() {
            return Err(GrammarError::TemplateArity {
                name: template.to_string(),
                expected: t.params.len(),
                got: args.len(),
            });
        }
        if self.stack.iter().any(|s| s == template) {
            return Err(GrammarError::TemplateRecursion(template.to_string()));
        }
        let mut scope = Scope::default();
        for (p, a) in t.params.iter().zip(args) {
            let b = match a {
                CallArg::Name(n) => self.bound(n, caller),
                CallArg::Literal(l) => Bound::Literal(l.clone()),
                CallArg::Epsilon => Bound::Epsilon,
                CallArg::Action(def) => Bound::Action(self.action(def, caller)?),
                CallArg::Tuple(items) => Bound::Tuple(self.names(items, caller)?),
            };
            scope.params.insert(p.clone(), b);
        }
        for (a, q) in &t.aliases {
            let ns = self.names(std::slice::from_ref(q), &scope)?;
            scope.aliases.insert(a.clone(), ns);
        }
        let site_lower = site.to_lowercase();
        for p in &t.productions {
            if !scope.locals.contains_key(&p.head) {
                let fresh = self.fresh(&format!("{}_{}", p.head, site_lower));
                scope.locals.insert(p.head.clone(), fresh);
            }
        }
        for p in &t.productions {
            let head = scope.locals[&p.head].clone();
            if !self.sigs.contains_key(&head) {
                let sig = (self.names(&p.ins, &scope)?, self.names(&p.outs, &scope)?);
                self.sigs.insert(head, sig);
            }
        }
        let ret = scope
            .locals
            .get(&t.ret)
            .cloned()
            .ok_or_else(|| GrammarError::UnknownRule(t.ret.clone()))?;
        self.stack.push(template.to_string());
        for p in &t.productions {
            let head = scope.locals[&p.head].clone();
            self.production(p, &scope, site, Some(head))?;
        }
        self.stack.pop();
        Ok(ret)
    }
}

fn check_action(a: &Action) -> Result<(), GrammarError> {
    match &a.code {
        ActionCode::Lambda { params, .. } if params.len() != a.ins.len() => Err(GrammarError::ArityMismatch {
            what: "action inputs".into(),
            expected: params.len(),
            got: a.ins.len(),
        }),
        ActionCode::Forward if a.ins.len() < a.outs.len() => Err(GrammarError::ArityMismatch {
            what: "forwarded outputs".into(),
            expected: a.ins.len(),
            got: a.outs.len(),
        }),
        _ => Ok(()),
    }
}

struct RuleSig {
    ins: Vec<String>,
    outs: Vec<String>,
    entry: bool,
    prods: Vec<usize>,
}

/// Fills in missing use-site arguments and adds undefined names as rule
/// inputs until nothing changes, then builds the grammar.
fn complete(name: &str, prods: Vec<RawProd>) -> Result<Grammar, GrammarError> {
    let mut rules: IndexMap<String, RuleSig> = IndexMap::new();
    for (i, p) in prods.iter().enumerate() {
        match rules.get_mut(&p.head) {
            Some(r) => {
                if r.ins != p.ins && !p.ins.is_empty() && !r.ins.is_empty() {
                    return Err(GrammarError::SignatureMismatch {
                        rule: p.head.clone(),
                        detail: format!("inputs ({}) vs ({})", r.ins.join(", "), p.ins.join(", ")),
                    });
                }
                if r.ins.is_empty() {
                    r.ins = p.ins.clone();
                }
                if r.outs.len() != p.outs.len() {
                    return Err(GrammarError::SignatureMismatch {
                        rule: p.head.clone(),
                        detail: format!("{} vs {} outputs", r.outs.len(), p.outs.len()),
                    });
                }
                r.entry |= p.entry;
                r.prods.push(i);
            }
            None => {
                rules.insert(
                    p.head.clone(),
                    RuleSig {
                        ins: p.ins.clone(),
                        outs: p.outs.clone(),
                        entry: p.entry,
                        prods: vec![i],
                    },
                );
            }
        }
    }
    for p in &prods {
        for s in &p.body {
            if let Raw::Rule { name, .. } = s {
                if !rules.contains_key(name) {
                    return Err(GrammarError::UnknownRule(name.clone()));
                }
            }
        }
    }
    loop {
        let mut changed = false;
        for ri in 0..rules.len() {
            let (rname, sig) = rules.get_index(ri).unwrap();
            let rname = rname.clone();
            let mut defined: Vec<String> = sig.ins.clone();
            let mut missing: Vec<String> = Vec::new();
            let mut missing_out: Vec<String> = Vec::new();
            for &pi in &sig.prods {
                let mut local = defined.clone();
                for s in &prods[pi].body {
                    let (ins, outs) = effective(s, &rules)?;
                    for n in ins {
                        if !local.contains(&n) && !missing.contains(&n) {
                            missing.push(n);
                        }
                    }
                    local.extend(outs);
                }
                for n in &prods[pi].outs {
                    if !local.contains(n) && !missing.contains(n) && !missing_out.contains(n) {
                        missing_out.push(n.clone());
                    }
                }
            }
            if missing.is_empty() && missing_out.is_empty() {
                continue;
            }
            let sig = rules.get_mut(&rname).unwrap();
            if sig.entry {
                if let Some(n) = missing.first() {
                    return Err(GrammarError::EntryRuleWouldChange { rule: rname, name: n.clone() });
                }
                return Err(GrammarError::UnresolvableDefault {
                    rule: rname,
                    name: missing_out[0].clone(),
                });
            }
            for n in missing.into_iter().chain(missing_out) {
                if !sig.ins.contains(&n) {
                    sig.ins.push(n);
                }
            }
            defined.clear();
            changed = true;
        }
        if !changed {
            break;
        }
    }
    let mut productions = Vec::new();
    for (id, p) in prods.iter().enumerate() {
        let sig = &rules[&p.head];
        let mut body = Vec::new();
        for s in &p.body {
            let (ins, outs) = effective(s, &rules)?;
            body.push(match s {
                Raw::Sym(sym) => sym.clone(),
                Raw::Rule { name, .. } => {
                    let t = &rules[name];
                    if ins.len() != t.ins.len() || outs.len() != t.outs.len() {
                        return Err(GrammarError::ArityMismatch {
                            what: format!("use of `{name}` in `{}`", p.head),
                            expected: t.ins.len() + t.outs.len(),
                            got: ins.len() + outs.len(),
                        });
                    }
                    Symbol::Rule {
                        name: name.clone(),
                        ins,
                        outs,
                    }
                }
                Raw::Foreign { lang, entry, .. } => Symbol::Foreign {
                    lang: lang.clone(),
                    entry: entry.clone(),
                    ins,
                    outs,
                },
            });
        }
        productions.push(Production {
            id,
            head: p.head.clone(),
            ins: sig.ins.clone(),
            outs: p.outs.clone(),
            body,
        });
    }
    let rules: IndexMap<String, Rule> = rules
        .into_iter()
        .map(|(n, s)| {
            (
                n.clone(),
                Rule {
                    name: n,
                    ins: s.ins,
                    outs: s.outs,
                    productions: s.prods,
                    entry: s.entry,
                },
            )
        })
        .collect();
    let g = Grammar {
        name: name.to_string(),
        productions,
        rules,
    };
    if g.entries().next().is_none() {
        return Err(GrammarError::NoEntry(name.to_string()));
    }
    check_l_attributed(&g)?;
    Ok(g)
}

/// Input and output names of a use after defaulting.
fn effective(s: &Raw, rules: &IndexMap<String, RuleSig>) -> Result<(Vec<String>, Vec<String>), GrammarError> {
    Ok(match s {
        Raw::Sym(sym) => (sym.inputs().to_vec(), sym.outputs()),
        Raw::Rule { name, ins, outs } => {
            let t = rules.get(name).ok_or_else(|| GrammarError::UnknownRule(name.clone()))?;
            let mut i = ins.clone().unwrap_or_default();
            if i.len() < t.ins.len() {
                i.extend(t.ins[i.len()..].iter().cloned());
            }
            let o = outs.clone().unwrap_or_else(|| t.outs.clone());
            (i, o)
        }
        Raw::Foreign { ins, outs, .. } => (ins.clone().unwrap_or_default(), outs.clone().unwrap_or_default()),
    })
}

/// Every name is bound before it is read: by the head inputs or by a symbol
/// to its left. Head outputs must be bound by the end of the body.
pub fn check_l_attributed(g: &Grammar) -> Result<(), GrammarError> {
    for p in &g.productions {
        let mut bound: Vec<&String> = p.ins.iter().collect();
        let fail = |name: &str| GrammarError::LAttribute {
            rule: p.head.clone(),
            production: p.id,
            name: name.to_string(),
        };
        for s in &p.body {
            if let Some(n) = s.inputs().iter().find(|n| !bound.contains(n)) {
                return Err(fail(n));
            }
            match s {
                Symbol::Class { out, .. } => bound.push(out),
                Symbol::Rule { outs, .. } | Symbol::Foreign { outs, .. } => bound.extend(outs),
                Symbol::Action(a) => bound.extend(&a.outs),
                Symbol::Literal(_) => {}
            }
        }
        if let Some(n) = p.outs.iter().find(|n| !bound.contains(n)) {
            return Err(fail(n));
        }
    }
    Ok(())
}
