//! The small-step machine.
//!
//! A state is a single lambda (the root). One step finds the first body, in
//! post-order, whose stage evaluates to `always` and whose form can make
//! progress, and rewrites it in place. Names bound by an enclosing binder are
//! symbolic: a stage mentioning one is undetermined, and a primitive or
//! builtin needing one waits. A state with no executable body is normal; the
//! remaining code is the residual program.

use std::collections::HashMap;

use super::error::EvalError;
use super::heap::Heap;
use super::names::NameGen;
use super::prim::PrimHost;
use super::printer::print_value;
use super::subst::{freshen_lambda, freshen_term, subst_body, Subst};
use super::term::{Body, EnvId, Form, Lambda, Param, StageExpr, StageValue, Term};

pub const DEFAULT_STEP_BUDGET: usize = 1_000_000;

pub struct Machine {
    pub heap: Heap,
    pub gen: NameGen,
    pub budget: usize,
    steps: usize,
    pub trace: Option<Vec<String>>,
    pub output: Vec<String>,
    /// Also write `print` output to stdout as it happens.
    pub echo: bool,
    returns: HashMap<u64, Option<Vec<Term>>>,
    next_return: u64,
}

/// A symbolic tuple that must be split into named elements before an
/// application can proceed.
#[derive(Debug)]
pub(crate) struct Refinement {
    pack: String,
    front: Vec<String>,
    rest: bool,
    back: Vec<String>,
}

enum Outcome {
    Progress,
    Refine(Refinement),
}

enum Exec {
    Blocked,
    Replace(Body),
    Refine(Refinement),
}

impl Default for Machine {
    fn default() -> Self {
        Machine::new()
    }
}

impl Machine {
    pub fn new() -> Self {
        Machine {
            heap: Heap::default(),
            gen: NameGen::new(1),
            budget: DEFAULT_STEP_BUDGET,
            steps: 0,
            trace: None,
            output: Vec::new(),
            echo: false,
            returns: HashMap::new(),
            next_return: 0,
        }
    }

    pub fn with_budget(budget: usize) -> Self {
        Machine {
            budget,
            ..Machine::new()
        }
    }

    pub fn steps_used(&self) -> usize {
        self.steps
    }

    pub fn enable_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    pub fn note(&mut self, line: impl FnOnce() -> String) {
        if let Some(t) = &mut self.trace {
            t.push(line());
        }
    }

    /// Runs `root` until no body can execute and returns the residual.
    pub fn run_to_normal(&mut self, root: &Lambda) -> Result<Lambda, EvalError> {
        let mut root = freshen_lambda(root, &mut self.gen);
        loop {
            let mut scope: Vec<String> = root.params.iter().map(|p| p.name().to_string()).collect();
            scope.push(root.stage.clone());
            let outcome = self.step_body(&mut root.body, &mut scope)?;
            match outcome {
                None => return Ok(root),
                Some(Outcome::Progress) => {}
                Some(Outcome::Refine(r)) => self.refine(&mut root, &r)?,
            }
            self.steps += 1;
            if self.steps > self.budget {
                return Err(EvalError::StepBudgetExceeded(self.budget));
            }
        }
    }

    /// Applies a closed value to arguments, passing a fresh return
    /// continuation last, and yields what was passed to that continuation.
    pub fn apply_value(&mut self, f: &Term, args: Vec<Term>) -> Result<Vec<Term>, EvalError> {
        let id = self.next_return;
        self.next_return += 1;
        self.returns.insert(id, None);
        let mut all: Vec<Term> = args.iter().map(|a| freshen_term(a, &mut self.gen)).collect();
        all.push(Term::Return(id));
        let root = Lambda {
            params: vec![],
            stage: self.gen.fresh("top"),
            body: Body::apply(StageExpr::top(), freshen_term(f, &mut self.gen), all),
        };
        let result = self.run_to_normal(&root);
        let recorded = self.returns.remove(&id).flatten();
        result?;
        recorded.ok_or(EvalError::ReturnNeverCalled)
    }

    /// Runs a whole program: a lambda taking a single return continuation.
    pub fn run_program(&mut self, program: &Term) -> Result<Vec<Term>, EvalError> {
        self.apply_value(program, vec![])
    }

    fn step_term(&mut self, t: &mut Term, scope: &mut Vec<String>) -> Result<Option<Outcome>, EvalError> {
        match t {
            Term::Lambda(l) => self.step_lambda(l, scope),
            Term::Rec(r) => {
                scope.push(r.name.clone());
                let out = self.step_lambda(&mut r.lambda, scope);
                scope.pop();
                out
            }
            Term::Tuple(items) => {
                for i in items {
                    if let Some(o) = self.step_term(i, scope)? {
                        return Ok(Some(o));
                    }
                }
                Ok(None)
            }
            Term::Splice(inner) => self.step_term(inner, scope),
            _ => Ok(None),
        }
    }

    fn step_lambda(&mut self, l: &mut Lambda, scope: &mut Vec<String>) -> Result<Option<Outcome>, EvalError> {
        let mark = scope.len();
        scope.extend(l.params.iter().map(|p| p.name().to_string()));
        scope.push(l.stage.clone());
        let out = self.step_body(&mut l.body, scope);
        scope.truncate(mark);
        out
    }

    fn step_body(&mut self, b: &mut Body, scope: &mut Vec<String>) -> Result<Option<Outcome>, EvalError> {
        match &mut b.form {
            Form::Apply { callee, args } => {
                if let Some(o) = self.step_term(callee, scope)? {
                    return Ok(Some(o));
                }
                for a in args {
                    if let Some(o) = self.step_term(a, scope)? {
                        return Ok(Some(o));
                    }
                }
            }
            Form::Prim {
                binds,
                stage_param,
                rest,
                ..
            } => {
                let mark = scope.len();
                scope.extend(binds.iter().cloned());
                scope.push(stage_param.clone());
                let out = self.step_body(rest, scope);
                scope.truncate(mark);
                if let Some(o) = out? {
                    return Ok(Some(o));
                }
            }
            Form::Fix {
                stage_param,
                name,
                value,
                rest,
            } => {
                let mark = scope.len();
                scope.push(name.clone());
                let out = self.step_term(value, scope);
                if let Ok(None) = out {
                    scope.push(stage_param.clone());
                    let out2 = self.step_body(rest, scope);
                    scope.truncate(mark);
                    if let Some(o) = out2? {
                        return Ok(Some(o));
                    }
                } else {
                    scope.truncate(mark);
                    return out;
                }
            }
            Form::Halt => return Ok(None),
        }
        if eval_stage(&b.stage, scope)? != Some(StageValue::Top) {
            return Ok(None);
        }
        match self.exec(&b.form, scope)? {
            Exec::Blocked => Ok(None),
            Exec::Replace(nb) => {
                *b = nb;
                Ok(Some(Outcome::Progress))
            }
            Exec::Refine(r) => Ok(Some(Outcome::Refine(r))),
        }
    }

    fn exec(&mut self, form: &Form, scope: &[String]) -> Result<Exec, EvalError> {
        match form {
            Form::Halt => Ok(Exec::Blocked),
            Form::Fix {
                stage_param,
                name,
                value,
                rest,
            } => {
                let Term::Lambda(l) = value else {
                    return Err(EvalError::ApplyNonClosure("`fix` of a non-lambda".into()));
                };
                let rec = Term::Rec(Box::new(super::term::RecDef {
                    name: name.clone(),
                    lambda: (**l).clone(),
                }));
                let mut map = HashMap::new();
                map.insert(name.clone(), rec);
                map.insert(stage_param.clone(), Term::Stage(StageValue::Top));
                Ok(Exec::Replace(subst_body(rest, map, &mut self.gen)))
            }
            Form::Prim {
                expr,
                binds,
                stage_param,
                rest,
            } => {
                let mut host = Host {
                    scope,
                    heap: &mut self.heap,
                };
                let Some(value) = expr.eval(&mut host)? else {
                    return Ok(Exec::Blocked);
                };
                if self.trace.is_some() {
                    let line = format!(
                        "prim {} => {}",
                        expr.render(&|n| n.to_string(), &|t| print_value(t, None)),
                        print_value(&value, Some(&self.heap))
                    );
                    self.note(|| line);
                }
                let mut map = HashMap::new();
                match (binds.len(), &value) {
                    (0, _) => {}
                    (1, _) => {
                        map.insert(binds[0].clone(), value.clone());
                    }
                    (n, Term::Tuple(items)) if items.len() == n => {
                        for (b, v) in binds.iter().zip(items) {
                            map.insert(b.clone(), v.clone());
                        }
                    }
                    (n, _) => {
                        return Err(EvalError::ArityMismatch(format!(
                            "primitive result does not destructure into {n} names"
                        )))
                    }
                }
                map.insert(stage_param.clone(), Term::Stage(StageValue::Top));
                Ok(Exec::Replace(subst_body(rest, map, &mut self.gen)))
            }
            Form::Apply { callee, args } => self.exec_apply(callee, args, scope),
        }
    }

    fn exec_apply(&mut self, callee: &Term, args: &[Term], scope: &[String]) -> Result<Exec, EvalError> {
        match callee {
            Term::Lambda(l) => self.beta(l, args),
            Term::Rec(r) => {
                let mut map = HashMap::new();
                map.insert(r.name.clone(), callee.clone());
                let unfolded = Subst::new(map, &mut self.gen, true).lambda(&r.lambda);
                self.beta(&unfolded, args)
            }
            Term::Var(n) if scope.contains(n) => Ok(Exec::Blocked),
            Term::Var(n) => self.builtin(n, args, scope),
            Term::Fragment(id) => match args.first() {
                Some(Term::Stage(StageValue::Top)) => {
                    let subject = freshen_lambda(&self.heap.fragment(*id).subject, &mut self.gen);
                    Ok(Exec::Replace(Body::apply(
                        StageExpr::top(),
                        Term::Lambda(Box::new(subject)),
                        args[1..].to_vec(),
                    )))
                }
                Some(Term::Var(_)) | Some(Term::Splice(_)) | Some(Term::Stage(StageValue::Bottom)) => {
                    Ok(Exec::Blocked)
                }
                _ => Err(EvalError::ApplyNonClosure(
                    "a fragment must be applied to a stage value first".into(),
                )),
            },
            Term::Return(id) => {
                if args.iter().any(|a| matches!(a, Term::Splice(_))) {
                    return Ok(Exec::Blocked);
                }
                match self.returns.get_mut(id) {
                    Some(slot @ None) => *slot = Some(args.to_vec()),
                    _ => return Err(EvalError::ReturnCalledTwice),
                }
                self.note(|| "return".to_string());
                Ok(Exec::Replace(Body {
                    stage: StageExpr::top(),
                    form: Form::Halt,
                }))
            }
            other => Err(EvalError::ApplyNonClosure(print_value(other, Some(&self.heap)))),
        }
    }

    fn beta(&mut self, l: &Lambda, args: &[Term]) -> Result<Exec, EvalError> {
        let args = flatten(args);
        let (before, pack, after) = l.split_params();
        let splices: Vec<usize> = args
            .iter()
            .enumerate()
            .filter(|(_, a)| matches!(a, Term::Splice(_)))
            .map(|(i, _)| i)
            .collect();
        let n = args.len();
        let (b, a) = (before.len(), after.len());
        let mut map = HashMap::new();
        match (pack, splices.first(), splices.last()) {
            (None, None, _) => {
                if n != b {
                    return Err(EvalError::ArityMismatch(format!("expected {b} arguments, got {n}")));
                }
            }
            (Some(_), None, _) => {
                if n < b + a {
                    return Err(EvalError::ArityMismatch(format!(
                        "expected at least {} arguments, got {n}",
                        b + a
                    )));
                }
            }
            (None, Some(&first), _) => {
                if splices.len() > 1 {
                    return Err(EvalError::CannotRefine(
                        splice_name(&args[first]),
                        "several symbolic tuples in one call".into(),
                    ));
                }
                let k = b as i64 - (n as i64 - 1);
                if k < 0 {
                    return Err(EvalError::ArityMismatch(format!(
                        "expected {b} arguments, got at least {}",
                        n - 1
                    )));
                }
                let front = before[first..first + k as usize].iter().map(|s| s.to_string()).collect();
                return Ok(Exec::Refine(Refinement {
                    pack: splice_name(&args[first]),
                    front,
                    rest: false,
                    back: vec![],
                }));
            }
            (Some(_), Some(&first), Some(&last)) => {
                let need_front = b.saturating_sub(first);
                let need_back = a.saturating_sub(n - 1 - last);
                if need_front > 0 || need_back > 0 {
                    let same = first == last;
                    let (target, nf, nb) = if need_front > 0 && !same {
                        (first, need_front, 0)
                    } else if need_front > 0 {
                        (first, need_front, need_back)
                    } else {
                        (last, 0, need_back)
                    };
                    let front = before[target.min(b)..target.min(b) + nf].iter().map(|s| s.to_string()).collect();
                    let back = after[a - nb..].iter().map(|s| s.to_string()).collect();
                    return Ok(Exec::Refine(Refinement {
                        pack: splice_name(&args[target]),
                        front,
                        rest: true,
                        back,
                    }));
                }
            }
            (Some(_), Some(_), None) => unreachable!("first implies last"),
        }
        for (p, v) in before.iter().zip(&args) {
            map.insert(p.to_string(), v.clone());
        }
        for (p, v) in after.iter().zip(&args[n - a..]) {
            map.insert(p.to_string(), v.clone());
        }
        if let Some(p) = pack {
            map.insert(p.to_string(), Term::Tuple(args[b..n - a].to_vec()));
        }
        map.insert(l.stage.clone(), Term::Stage(StageValue::Top));
        Ok(Exec::Replace(subst_body(&l.body, map, &mut self.gen)))
    }

    fn refine(&mut self, root: &mut Lambda, r: &Refinement) -> Result<(), EvalError> {
        let Some(binder) = find_pack_binder(root, &r.pack) else {
            return Err(EvalError::CannotRefine(
                super::names::base_name(&r.pack).to_string(),
                "it is not a packed parameter".into(),
            ));
        };
        let front: Vec<String> = r.front.iter().map(|h| self.gen.fresh(h)).collect();
        let back: Vec<String> = r.back.iter().map(|h| self.gen.fresh(h)).collect();
        let rest = r.rest.then(|| self.gen.fresh(&r.pack));
        let mut params = Vec::new();
        let mut items = Vec::new();
        for p in &binder.params {
            if p.name() != r.pack {
                params.push(p.clone());
                continue;
            }
            params.extend(front.iter().map(|n| Param::Named(n.clone())));
            items.extend(front.iter().map(|n| Term::Var(n.clone())));
            if let Some(rest) = &rest {
                params.push(Param::Pack(rest.clone()));
                items.push(Term::Splice(Box::new(Term::Var(rest.clone()))));
            }
            params.extend(back.iter().map(|n| Param::Named(n.clone())));
            items.extend(back.iter().map(|n| Term::Var(n.clone())));
        }
        let mut map = HashMap::new();
        map.insert(r.pack.clone(), Term::Tuple(items));
        binder.body = subst_body(&binder.body, map, &mut self.gen);
        binder.params = params;
        self.note(|| format!("refine {} into {} names", r.pack, r.front.len() + r.back.len()));
        Ok(())
    }

    fn builtin(&mut self, name: &str, args: &[Term], scope: &[String]) -> Result<Exec, EvalError> {
        let args = flatten(args);
        if args.iter().any(|a| matches!(a, Term::Splice(_))) {
            return Ok(Exec::Blocked);
        }
        let expected = match name {
            "exit" => return Err(EvalError::Halt),
            "newEnv" => 1,
            "finalize" | "print" | "arity" => 2,
            "if" | "build" | "merge" | "lookup" | "concat" => 3,
            "insert" => 4,
            _ => return Err(EvalError::UnboundName(name.to_string())),
        };
        if args.len() != expected {
            return Err(EvalError::ArityMismatch(format!(
                "`{name}` expects {expected} arguments, got {}",
                args.len()
            )));
        }
        let symbolic = |t: &Term| t.free_vars().iter().any(|v| scope.contains(v));
        // the stored value of `insert` may stay symbolic
        let checked = if name == "insert" { 2 } else { expected - 1 };
        if args[..checked].iter().any(symbolic) {
            return Ok(Exec::Blocked);
        }
        let k = args[expected - 1].clone();
        let results = match name {
            "if" => {
                let branch = match &args[0] {
                    Term::Bool(true) => args[1].clone(),
                    Term::Bool(false) => args[2].clone(),
                    _ => return Err(EvalError::PrimTypeError("`if` expects a boolean".into())),
                };
                return Ok(Exec::Replace(Body::apply(StageExpr::top(), branch, vec![])));
            }
            "build" => vec![self.build(&args[0], &args[1])?],
            "merge" => vec![self.merge(&args[0], &args[1])?],
            "finalize" => vec![self.finalize(&args[0])?],
            "arity" => vec![Term::Int(self.arity(&args[0])? as i64)],
            "print" => {
                let text = match &args[0] {
                    Term::Str(s) => s.clone(),
                    other => print_value(other, Some(&self.heap)),
                };
                if self.echo {
                    println!("{text}");
                }
                self.note(|| format!("print {text}"));
                self.output.push(text);
                vec![]
            }
            "newEnv" => vec![Term::Env(self.heap.new_env())],
            "insert" => {
                let env = expect_env(&args[0], name)?;
                self.heap.env_insert(env, args[1].clone(), args[2].clone());
                vec![Term::Env(env)]
            }
            "lookup" => {
                let env = expect_env(&args[0], name)?;
                match self.heap.env_lookup(env, &args[1]) {
                    Some(v) => vec![v],
                    None => {
                        let key = match &args[1] {
                            Term::Str(s) => s.clone(),
                            other => print_value(other, None),
                        };
                        return Err(EvalError::NameNotFound(key));
                    }
                }
            }
            "concat" => match (&args[0], &args[1]) {
                (Term::Tuple(a), Term::Tuple(b)) => {
                    vec![Term::Tuple(a.iter().chain(b).cloned().collect())]
                }
                (Term::Str(a), Term::Str(b)) => vec![Term::Str(format!("{a}{b}"))],
                _ => return Err(EvalError::PrimTypeError("`concat` expects two tuples or two strings".into())),
            },
            _ => unreachable!("checked above"),
        };
        Ok(Exec::Replace(Body::apply(StageExpr::top(), k, results)))
    }
}

fn expect_env(t: &Term, op: &str) -> Result<EnvId, EvalError> {
    match t {
        Term::Env(e) => Ok(*e),
        _ => Err(EvalError::PrimTypeError(format!("`{op}` expects an environment"))),
    }
}

fn splice_name(t: &Term) -> String {
    match t {
        Term::Splice(inner) => match &**inner {
            Term::Var(n) => n.clone(),
            other => format!("{other:?}"),
        },
        other => format!("{other:?}"),
    }
}

fn flatten(args: &[Term]) -> Vec<Term> {
    let mut out = Vec::with_capacity(args.len());
    for a in args {
        match a {
            Term::Splice(inner) => match &**inner {
                Term::Tuple(items) => out.extend(flatten(items)),
                _ => out.push(a.clone()),
            },
            _ => out.push(a.clone()),
        }
    }
    out
}

/// Kleene evaluation: `None` when the value depends on a symbolic name.
pub fn eval_stage(e: &StageExpr, scope: &[String]) -> Result<Option<StageValue>, EvalError> {
    use StageValue::*;
    Ok(match e {
        StageExpr::Const(v) => Some(*v),
        StageExpr::Ref(n) if scope.contains(n) => None,
        StageExpr::Ref(n) => return Err(EvalError::UnboundStageName(n.clone())),
        StageExpr::And(l, r) => match (eval_stage(l, scope)?, eval_stage(r, scope)?) {
            (Some(Bottom), _) | (_, Some(Bottom)) => Some(Bottom),
            (Some(Top), Some(Top)) => Some(Top),
            _ => None,
        },
        StageExpr::Or(l, r) => match (eval_stage(l, scope)?, eval_stage(r, scope)?) {
            (Some(Top), _) | (_, Some(Top)) => Some(Top),
            (Some(Bottom), Some(Bottom)) => Some(Bottom),
            _ => None,
        },
        StageExpr::Not(x) => eval_stage(x, scope)?.map(StageValue::not),
    })
}

fn find_pack_binder<'a>(l: &'a mut Lambda, pack: &str) -> Option<&'a mut Lambda> {
    if l.params.iter().any(|p| p.is_pack() && p.name() == pack) {
        return Some(l);
    }
    find_in_body(&mut l.body, pack)
}

fn find_in_body<'a>(b: &'a mut Body, pack: &str) -> Option<&'a mut Lambda> {
    match &mut b.form {
        Form::Apply { callee, args } => {
            if let Some(l) = find_in_term(callee, pack) {
                return Some(l);
            }
            args.iter_mut().find_map(|a| find_in_term(a, pack))
        }
        Form::Prim { rest, .. } => find_in_body(rest, pack),
        Form::Fix { value, rest, .. } => {
            if let Some(l) = find_in_term(value, pack) {
                return Some(l);
            }
            find_in_body(rest, pack)
        }
        Form::Halt => None,
    }
}

fn find_in_term<'a>(t: &'a mut Term, pack: &str) -> Option<&'a mut Lambda> {
    match t {
        Term::Lambda(l) => find_pack_binder(l, pack),
        Term::Rec(r) => find_pack_binder(&mut r.lambda, pack),
        Term::Tuple(items) => items.iter_mut().find_map(|i| find_in_term(i, pack)),
        Term::Splice(inner) => find_in_term(inner, pack),
        _ => None,
    }
}

struct Host<'a> {
    scope: &'a [String],
    heap: &'a mut Heap,
}

impl PrimHost for Host<'_> {
    fn is_symbolic(&self, name: &str) -> bool {
        self.scope.iter().any(|s| s == name)
    }

    fn env_insert(&mut self, env: EnvId, key: Term, value: Term) {
        self.heap.env_insert(env, key, value)
    }

    fn env_lookup(&self, env: EnvId, key: &Term) -> Option<Term> {
        self.heap.env_lookup(env, key)
    }
}
