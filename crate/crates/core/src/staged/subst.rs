//! Capture-avoiding substitution and binder freshening.

use std::collections::HashMap;

use super::names::NameGen;
use super::term::{Body, Form, Lambda, Param, RecDef, StageExpr, StageValue, Term};

/// Substitutes `map` into `t`. With `freshen` set every binder met on the way
/// is renamed to a fresh name; inserted values are always freshened so each
/// occurrence carries its own binders.
pub struct Subst<'g> {
    map: HashMap<String, Term>,
    gen: &'g mut NameGen,
    freshen: bool,
    fixed_hint: Option<&'static str>,
}

impl<'g> Subst<'g> {
    pub fn new(map: HashMap<String, Term>, gen: &'g mut NameGen, freshen: bool) -> Self {
        Subst {
            map,
            gen,
            freshen,
            fixed_hint: None,
        }
    }

    pub fn term(&mut self, t: &Term) -> Term {
        match t {
            Term::Var(n) => match self.map.get(n) {
                Some(v) => {
                    let v = v.clone();
                    if has_binders(&v) {
                        freshen_term(&v, self.gen)
                    } else {
                        v
                    }
                }
                None => t.clone(),
            },
            Term::Tuple(items) => Term::Tuple(self.items(items)),
            Term::Splice(inner) => Term::Splice(Box::new(self.term(inner))),
            Term::Lambda(l) => Term::Lambda(Box::new(self.lambda(l))),
            Term::Rec(r) => {
                let saved = self.bind(&r.name);
                let name = self.binder_name(&r.name);
                let lambda = self.lambda(&r.lambda);
                self.restore(saved);
                Term::Rec(Box::new(RecDef { name, lambda }))
            }
            Term::Int(_)
            | Term::Str(_)
            | Term::Bool(_)
            | Term::Stage(_)
            | Term::Fragment(_)
            | Term::Env(_)
            | Term::Return(_) => t.clone(),
        }
    }

    /// Substitutes into a list, flattening splices of concrete tuples.
    pub fn items(&mut self, items: &[Term]) -> Vec<Term> {
        let mut out = Vec::with_capacity(items.len());
        for i in items {
            match self.term(i) {
                Term::Splice(inner) => match *inner {
                    Term::Tuple(xs) => out.extend(xs),
                    other => out.push(Term::Splice(Box::new(other))),
                },
                other => out.push(other),
            }
        }
        out
    }

    pub fn lambda(&mut self, l: &Lambda) -> Lambda {
        let mut saved = Vec::new();
        let mut params = Vec::with_capacity(l.params.len());
        for p in &l.params {
            saved.push(self.bind(p.name()));
            let n = self.binder_name(p.name());
            params.push(match p {
                Param::Named(_) => Param::Named(n),
                Param::Pack(_) => Param::Pack(n),
            });
        }
        saved.push(self.bind(&l.stage));
        let stage = self.binder_name(&l.stage);
        let body = self.body(&l.body);
        for s in saved.into_iter().rev() {
            self.restore(s);
        }
        Lambda {
            params,
            stage,
            body,
        }
    }

    pub fn body(&mut self, b: &Body) -> Body {
        let stage = self.stage(&b.stage);
        let form = match &b.form {
            Form::Halt => Form::Halt,
            Form::Apply { callee, args } => Form::Apply {
                callee: self.term(callee),
                args: self.items(args),
            },
            Form::Prim {
                expr,
                binds,
                stage_param,
                rest,
            } => {
                let map = &self.map;
                let expr = expr.substitute(&mut |n| map.get(n).cloned());
                let mut saved = Vec::new();
                let mut new_binds = Vec::new();
                for b in binds {
                    saved.push(self.bind(b));
                    new_binds.push(self.binder_name(b));
                }
                saved.push(self.bind(stage_param));
                let stage_param = self.binder_name(stage_param);
                let rest = self.body(rest);
                for s in saved.into_iter().rev() {
                    self.restore(s);
                }
                Form::Prim {
                    expr,
                    binds: new_binds,
                    stage_param,
                    rest: Box::new(rest),
                }
            }
            Form::Fix {
                stage_param,
                name,
                value,
                rest,
            } => {
                let s1 = self.bind(name);
                let name = self.binder_name(name);
                let value = self.term(value);
                let s2 = self.bind(stage_param);
                let stage_param = self.binder_name(stage_param);
                let rest = self.body(rest);
                self.restore(s2);
                self.restore(s1);
                Form::Fix {
                    stage_param,
                    name,
                    value,
                    rest: Box::new(rest),
                }
            }
        };
        Body { stage, form }
    }

    fn stage(&self, e: &StageExpr) -> StageExpr {
        let out = self.stage_raw(e);
        if out == *e {
            out
        } else {
            out.simplify()
        }
    }

    fn stage_raw(&self, e: &StageExpr) -> StageExpr {
        match e {
            StageExpr::Const(_) => e.clone(),
            StageExpr::Ref(n) => match self.map.get(n) {
                None => e.clone(),
                Some(Term::Var(m)) => StageExpr::Ref(m.clone()),
                Some(Term::Stage(v)) => StageExpr::Const(*v),
                Some(_) => StageExpr::Const(StageValue::Top),
            },
            StageExpr::And(l, r) => {
                StageExpr::And(Box::new(self.stage_raw(l)), Box::new(self.stage_raw(r)))
            }
            StageExpr::Or(l, r) => {
                StageExpr::Or(Box::new(self.stage_raw(l)), Box::new(self.stage_raw(r)))
            }
            StageExpr::Not(x) => StageExpr::Not(Box::new(self.stage_raw(x))),
        }
    }

    /// Enters the scope of binder `name`; returns what must be restored on exit.
    fn bind(&mut self, name: &str) -> (String, Option<Term>) {
        let prev = self.map.remove(name);
        if self.freshen {
            let fresh = self.gen.fresh(self.fixed_hint.unwrap_or(name));
            self.map.insert(name.to_string(), Term::Var(fresh));
        }
        (name.to_string(), prev)
    }

    fn binder_name(&self, name: &str) -> String {
        if self.freshen {
            match self.map.get(name) {
                Some(Term::Var(f)) => f.clone(),
                _ => name.to_string(),
            }
        } else {
            name.to_string()
        }
    }

    fn restore(&mut self, (name, prev): (String, Option<Term>)) {
        match prev {
            Some(v) => self.map.insert(name, v),
            None => self.map.remove(&name),
        };
    }
}

fn has_binders(t: &Term) -> bool {
    match t {
        Term::Lambda(_) | Term::Rec(_) => true,
        Term::Tuple(items) => items.iter().any(has_binders),
        Term::Splice(inner) => has_binders(inner),
        _ => false,
    }
}

pub fn freshen_term(t: &Term, gen: &mut NameGen) -> Term {
    Subst::new(HashMap::new(), gen, true).term(t)
}

pub fn freshen_lambda(l: &Lambda, gen: &mut NameGen) -> Lambda {
    Subst::new(HashMap::new(), gen, true).lambda(l)
}

/// Substitutes without renaming binders (beyond freshening inserted values).
pub fn subst_body(b: &Body, map: HashMap<String, Term>, gen: &mut NameGen) -> Body {
    Subst::new(map, gen, false).body(b)
}

/// Alpha-equivalence: equal up to consistent renaming of bound names.
pub fn alpha_eq(a: &Term, b: &Term) -> bool {
    let mut ga = NameGen::new(0);
    let mut gb = NameGen::new(0);
    canonical(a, &mut ga) == canonical(b, &mut gb)
}

fn canonical(t: &Term, gen: &mut NameGen) -> Term {
    let mut s = Subst::new(HashMap::new(), gen, true);
    s.fixed_hint = Some("b");
    s.term(t)
}
