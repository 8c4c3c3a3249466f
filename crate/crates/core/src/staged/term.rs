//! Term representation of the staged CPS calculus.
//!
//! Every lambda carries an implicit staging parameter and every body carries
//! exactly one stage expression. Values are closed terms: literals, tuples,
//! lambdas, and opaque handles into the machine heap (fragments, environments).
//! A variable that survives substitution is a symbolic value.

use std::collections::BTreeSet;
use std::fmt;

use super::prim::PrimExpr;

/// The two staging constants, `always` and `never`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StageValue {
    Top,
    Bottom,
}

impl StageValue {
    pub fn and(self, other: StageValue) -> StageValue {
        if self == StageValue::Top && other == StageValue::Top {
            StageValue::Top
        } else {
            StageValue::Bottom
        }
    }

    pub fn or(self, other: StageValue) -> StageValue {
        if self == StageValue::Top || other == StageValue::Top {
            StageValue::Top
        } else {
            StageValue::Bottom
        }
    }

    pub fn not(self) -> StageValue {
        match self {
            StageValue::Top => StageValue::Bottom,
            StageValue::Bottom => StageValue::Top,
        }
    }

    pub fn is_top(self) -> bool {
        self == StageValue::Top
    }
}

impl fmt::Display for StageValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StageValue::Top => f.write_str("always"),
            StageValue::Bottom => f.write_str("never"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum StageExpr {
    Const(StageValue),
    Ref(String),
    And(Box<StageExpr>, Box<StageExpr>),
    Or(Box<StageExpr>, Box<StageExpr>),
    Not(Box<StageExpr>),
}

impl StageExpr {
    pub fn top() -> StageExpr {
        StageExpr::Const(StageValue::Top)
    }

    pub fn var(name: impl Into<String>) -> StageExpr {
        StageExpr::Ref(name.into())
    }

    /// Folds constant sub-expressions. `always & x` becomes `x`, and so on.
    pub fn simplify(self) -> StageExpr {
        use StageValue::*;
        match self {
            StageExpr::And(l, r) => match (l.simplify(), r.simplify()) {
                (StageExpr::Const(Top), e) | (e, StageExpr::Const(Top)) => e,
                (StageExpr::Const(Bottom), _) | (_, StageExpr::Const(Bottom)) => {
                    StageExpr::Const(Bottom)
                }
                (l, r) => StageExpr::And(Box::new(l), Box::new(r)),
            },
            StageExpr::Or(l, r) => match (l.simplify(), r.simplify()) {
                (StageExpr::Const(Bottom), e) | (e, StageExpr::Const(Bottom)) => e,
                (StageExpr::Const(Top), _) | (_, StageExpr::Const(Top)) => StageExpr::Const(Top),
                (l, r) => StageExpr::Or(Box::new(l), Box::new(r)),
            },
            StageExpr::Not(e) => match e.simplify() {
                StageExpr::Const(v) => StageExpr::Const(v.not()),
                e => StageExpr::Not(Box::new(e)),
            },
            other => other,
        }
    }

    pub fn collect_refs(&self, out: &mut Vec<String>) {
        match self {
            StageExpr::Const(_) => {}
            StageExpr::Ref(n) => out.push(n.clone()),
            StageExpr::And(l, r) | StageExpr::Or(l, r) => {
                l.collect_refs(out);
                r.collect_refs(out);
            }
            StageExpr::Not(e) => e.collect_refs(out),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Param {
    Named(String),
    /// `!name`: collects the excess arguments into a tuple.
    Pack(String),
}

impl Param {
    pub fn name(&self) -> &str {
        match self {
            Param::Named(n) | Param::Pack(n) => n,
        }
    }

    pub fn is_pack(&self) -> bool {
        matches!(self, Param::Pack(_))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Lambda {
    pub params: Vec<Param>,
    pub stage: String,
    pub body: Body,
}

impl Lambda {
    /// Splits the parameter list around the (optional) packed parameter.
    pub fn split_params(&self) -> (Vec<&str>, Option<&str>, Vec<&str>) {
        let mut before = Vec::new();
        let mut pack = None;
        let mut after = Vec::new();
        for p in &self.params {
            match p {
                Param::Pack(n) => pack = Some(n.as_str()),
                Param::Named(n) if pack.is_none() => before.push(n.as_str()),
                Param::Named(n) => after.push(n.as_str()),
            }
        }
        (before, pack, after)
    }

    pub fn fixed_arity(&self) -> usize {
        self.params.iter().filter(|p| !p.is_pack()).count()
    }

    pub fn has_pack(&self) -> bool {
        self.params.iter().any(Param::is_pack)
    }
}

/// A recursive closure produced by `fix`; unfolds on application.
#[derive(Clone, Debug, PartialEq)]
pub struct RecDef {
    pub name: String,
    pub lambda: Lambda,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FragmentId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EnvId(pub usize);

#[derive(Clone, Debug, PartialEq)]
pub enum Term {
    Var(String),
    Int(i64),
    Str(String),
    Bool(bool),
    Stage(StageValue),
    Tuple(Vec<Term>),
    /// `!x` in argument position.
    Splice(Box<Term>),
    Lambda(Box<Lambda>),
    Rec(Box<RecDef>),
    Fragment(FragmentId),
    Env(EnvId),
    /// The return continuation handed to an action by the host.
    Return(u64),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Term {
        Term::Var(name.into())
    }

    pub fn lambda(params: Vec<Param>, stage: impl Into<String>, body: Body) -> Term {
        Term::Lambda(Box::new(Lambda {
            params,
            stage: stage.into(),
            body,
        }))
    }

    pub fn as_lambda(&self) -> Option<&Lambda> {
        match self {
            Term::Lambda(l) => Some(l),
            _ => None,
        }
    }

    pub fn is_symbolic(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    /// Free variables, in first-occurrence order.
    pub fn free_vars(&self) -> Vec<String> {
        let mut acc = FreeVars::default();
        acc.term(self);
        acc.out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Body {
    pub stage: StageExpr,
    pub form: Form,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Form {
    Apply {
        callee: Term,
        args: Vec<Term>,
    },
    Fix {
        stage_param: String,
        name: String,
        value: Term,
        rest: Box<Body>,
    },
    Prim {
        expr: PrimExpr,
        binds: Vec<String>,
        stage_param: String,
        rest: Box<Body>,
    },
    /// Left behind once the return continuation of an activation has fired.
    Halt,
}

impl Body {
    pub fn apply(stage: StageExpr, callee: Term, args: Vec<Term>) -> Body {
        Body {
            stage,
            form: Form::Apply { callee, args },
        }
    }
}

#[derive(Default)]
struct FreeVars {
    bound: Vec<String>,
    seen: BTreeSet<String>,
    out: Vec<String>,
}

impl FreeVars {
    fn name(&mut self, n: &str) {
        if !self.bound.iter().any(|b| b == n) && self.seen.insert(n.to_string()) {
            self.out.push(n.to_string());
        }
    }

    fn term(&mut self, t: &Term) {
        match t {
            Term::Var(n) => self.name(n),
            Term::Tuple(items) => items.iter().for_each(|i| self.term(i)),
            Term::Splice(inner) => self.term(inner),
            Term::Lambda(l) => self.lambda(l),
            Term::Rec(r) => {
                self.bound.push(r.name.clone());
                self.lambda(&r.lambda);
                self.bound.pop();
            }
            _ => {}
        }
    }

    fn lambda(&mut self, l: &Lambda) {
        let mark = self.bound.len();
        self.bound.extend(l.params.iter().map(|p| p.name().to_string()));
        self.bound.push(l.stage.clone());
        self.body(&l.body);
        self.bound.truncate(mark);
    }

    fn body(&mut self, b: &Body) {
        let mut refs = Vec::new();
        b.stage.collect_refs(&mut refs);
        for r in refs {
            self.name(&r);
        }
        match &b.form {
            Form::Apply { callee, args } => {
                self.term(callee);
                args.iter().for_each(|a| self.term(a));
            }
            Form::Fix {
                stage_param,
                name,
                value,
                rest,
            } => {
                let mark = self.bound.len();
                self.bound.push(name.clone());
                self.term(value);
                self.bound.push(stage_param.clone());
                self.body(rest);
                self.bound.truncate(mark);
            }
            Form::Prim {
                expr,
                binds,
                stage_param,
                rest,
            } => {
                for v in expr.vars() {
                    self.name(&v);
                }
                let mark = self.bound.len();
                self.bound.extend(binds.iter().cloned());
                self.bound.push(stage_param.clone());
                self.body(rest);
                self.bound.truncate(mark);
            }
            Form::Halt => {}
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage_algebra_is_boolean() {
        use StageValue::*;
        for a in [Top, Bottom] {
            for b in [Top, Bottom] {
                assert_eq!(a.and(b).is_top(), a.is_top() && b.is_top());
                assert_eq!(a.or(b).is_top(), a.is_top() || b.is_top());
                assert_eq!(a.and(b).not(), a.not().or(b.not()));
            }
            assert_eq!(a.not().not(), a);
        }
    }

    #[test]
    fn simplify_drops_constant_conjuncts() {
        let e = StageExpr::And(Box::new(StageExpr::top()), Box::new(StageExpr::var("ft")));
        assert_eq!(e.simplify(), StageExpr::var("ft"));
        let e = StageExpr::Or(
            Box::new(StageExpr::var("a")),
            Box::new(StageExpr::Const(StageValue::Top)),
        );
        assert_eq!(e.simplify(), StageExpr::top());
    }

    #[test]
    fn split_params_around_pack() {
        let l = Lambda {
            params: vec![
                Param::Named("ft".into()),
                Param::Named("l".into()),
                Param::Pack("args".into()),
                Param::Named("cont".into()),
            ],
            stage: "bt".into(),
            body: Body::apply(StageExpr::top(), Term::var("cont"), vec![]),
        };
        let (before, pack, after) = l.split_params();
        assert_eq!(before, vec!["ft", "l"]);
        assert_eq!(pack, Some("args"));
        assert_eq!(after, vec!["cont"]);
        assert_eq!(l.fixed_arity(), 3);
    }
}
