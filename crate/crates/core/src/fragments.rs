//! Code fragments: a subject lambda plus a number of open continuation slots.
//!
//! The last `arity` parameters of a subject are its continuations. `merge`
//! plugs a second fragment into the first open slot of the first one;
//! `finalize` specializes a closed fragment into a residual lambda.

use thiserror::Error;

use crate::staged::eval::Machine;
use crate::staged::heap::FragmentData;
use crate::staged::printer::print_value;
use crate::staged::subst::freshen_lambda;
use crate::staged::{Body, EvalError, Form, Lambda, Param, StageExpr, Term};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FragmentError {
    #[error("cannot build a fragment with negative arity {0}")]
    NegativeArity(i64),
    #[error("fragment subject is not a closure: {0}")]
    NonClosureSubject(String),
    #[error("left operand of merge has no open continuation")]
    ZeroArityLeft,
    #[error("cannot finalize a fragment with {0} unfilled continuations")]
    UnfilledContinuations(usize),
    #[error("expected a fragment, got {0}")]
    NotAFragment(String),
}

impl Machine {
    pub fn build(&mut self, arity: &Term, subject: &Term) -> Result<Term, EvalError> {
        let n = match arity {
            Term::Int(n) if *n < 0 => return Err(FragmentError::NegativeArity(*n).into()),
            Term::Int(n) => *n as usize,
            other => {
                return Err(EvalError::PrimTypeError(format!(
                    "fragment arity must be an integer, got {}",
                    print_value(other, None)
                )))
            }
        };
        let Term::Lambda(l) = subject else {
            return Err(FragmentError::NonClosureSubject(print_value(subject, Some(&self.heap))).into());
        };
        if l.fixed_arity() < n {
            return Err(EvalError::ArityMismatch(format!(
                "subject takes {} parameters but the fragment has {n} continuations",
                l.fixed_arity()
            )));
        }
        let subject = freshen_lambda(l, &mut self.gen);
        let id = self.heap.alloc_fragment(FragmentData { arity: n, subject });
        self.note(|| format!("build fragment #{} arity {n}", id.0));
        Ok(Term::Fragment(id))
    }

    pub fn arity(&self, f: &Term) -> Result<usize, EvalError> {
        match f {
            Term::Fragment(id) => Ok(self.heap.fragment(*id).arity),
            other => Err(FragmentError::NotAFragment(print_value(other, None)).into()),
        }
    }

    fn subject(&mut self, f: &Term) -> Result<(usize, Lambda), EvalError> {
        match f {
            Term::Fragment(id) => {
                let data = self.heap.fragment(*id).clone();
                Ok((data.arity, freshen_lambda(&data.subject, &mut self.gen)))
            }
            other => Err(FragmentError::NotAFragment(print_value(other, Some(&self.heap))).into()),
        }
    }

    /// `merge f g` has arity `arity(f) + arity(g) - 1`.
    pub fn merge(&mut self, f: &Term, g: &Term) -> Result<Term, EvalError> {
        let (a, fs) = self.subject(f)?;
        let (b, gs) = self.subject(g)?;
        if a == 0 {
            return Err(FragmentError::ZeroArityLeft.into());
        }
        let args = self.gen.fresh("args");
        let ks: Vec<String> = (1..a).map(|_| self.gen.fresh("k")).collect();
        let ds: Vec<String> = (0..b).map(|_| self.gen.fresh("d")).collect();
        let x = self.gen.fresh("x");
        let t = self.gen.fresh("t");
        let s = self.gen.fresh("s");
        let vars = |ns: &[String]| ns.iter().map(|n| Term::Var(n.clone())).collect::<Vec<_>>();
        let mut g_args = vec![Term::Splice(Box::new(Term::var(&x)))];
        g_args.extend(vars(&ds));
        let bridge = Term::lambda(
            vec![Param::Pack(x)],
            t.clone(),
            Body::apply(StageExpr::var(&t), Term::Lambda(Box::new(gs)), g_args),
        );
        let mut f_args = vec![Term::Splice(Box::new(Term::var(&args))), bridge];
        f_args.extend(vars(&ks));
        let mut params = vec![Param::Pack(args)];
        params.extend(ks.iter().chain(&ds).map(|n| Param::Named(n.clone())));
        let subject = Lambda {
            params,
            stage: s.clone(),
            body: Body::apply(StageExpr::var(&s), Term::Lambda(Box::new(fs)), f_args),
        };
        let arity = a + b - 1;
        let id = self.heap.alloc_fragment(FragmentData { arity, subject });
        self.note(|| format!("merge => fragment #{} arity {arity}", id.0));
        Ok(Term::Fragment(id))
    }

    /// Specializes a closed fragment: everything staged `always` runs now,
    /// the rest is returned as a lambda over the remaining arguments.
    pub fn finalize(&mut self, f: &Term) -> Result<Term, EvalError> {
        let arity = self.arity(f)?;
        if arity != 0 {
            return Err(FragmentError::UnfilledContinuations(arity).into());
        }
        let args = self.gen.fresh("args");
        let ft = self.gen.fresh("ft");
        let root = Lambda {
            params: vec![Param::Pack(args.clone())],
            stage: ft.clone(),
            body: Body {
                stage: StageExpr::top(),
                form: Form::Apply {
                    callee: f.clone(),
                    args: vec![
                        Term::Stage(crate::staged::StageValue::Top),
                        Term::var(&ft),
                        Term::Splice(Box::new(Term::var(&args))),
                    ],
                },
            },
        };
        let mut residual = self.run_to_normal(&root)?;
        tidy_lambda(&mut residual);
        self.note(|| "finalize".to_string());
        Ok(Term::Lambda(Box::new(residual)))
    }
}

/// Restores natural staging on primitive continuations: a continuation staged
/// like its primitive, whose own stage parameter is unused, can be staged on
/// that parameter instead without changing when it runs.
fn tidy_lambda(l: &mut Lambda) {
    tidy_body(&mut l.body);
}

fn tidy_term(t: &mut Term) {
    match t {
        Term::Lambda(l) => tidy_lambda(l),
        Term::Rec(r) => tidy_lambda(&mut r.lambda),
        Term::Tuple(items) => items.iter_mut().for_each(tidy_term),
        Term::Splice(inner) => tidy_term(inner),
        _ => {}
    }
}

fn tidy_body(b: &mut Body) {
    match &mut b.form {
        Form::Apply { callee, args } => {
            tidy_term(callee);
            args.iter_mut().for_each(tidy_term);
        }
        Form::Fix { value, rest, .. } => {
            tidy_term(value);
            tidy_body(rest);
        }
        Form::Prim {
            stage_param, rest, ..
        } => {
            tidy_body(rest);
            if rest.stage == b.stage && !mentions(rest, stage_param) {
                rest.stage = StageExpr::Ref(stage_param.clone());
            }
        }
        Form::Halt => {}
    }
}

fn mentions(b: &Body, name: &str) -> bool {
    let probe = Term::lambda(vec![], "%probe", b.clone());
    probe.free_vars().iter().any(|v| v == name)
}
