//! Pretty printer for terms.
//!
//! Machine-generated names (`x%12`) are mapped back to readable ones: the base
//! name if it is free, otherwise `x_1`, `x_2`, ... Natural staging is restored
//! where possible: a lambda whose stage parameter appears only as the stage of
//! its own body is printed without `[s]` and `@s:`.

use std::collections::{HashMap, HashSet};

use super::names::base_name;
use super::term::{Body, EnvId, FragmentId, Form, Lambda, Param, StageExpr, StageValue, Term};

/// Read access to heap objects for display.
pub trait HeapView {
    fn env_entries(&self, env: EnvId) -> Option<Vec<(Term, Term)>>;
    fn fragment_arity(&self, frag: FragmentId) -> Option<usize>;
}

const WIDTH: usize = 72;

pub fn print_term(t: &Term) -> String {
    Printer::new(t, None, false).term_top(t)
}

pub fn print_term_with(t: &Term, heap: &dyn HeapView) -> String {
    Printer::new(t, Some(heap), false).term_top(t)
}

/// Prints a result value: environments appear as their entry lists.
pub fn print_value(t: &Term, heap: Option<&dyn HeapView>) -> String {
    Printer::new(t, heap, true).term_top(t)
}

pub fn print_body(b: &Body, own: &str) -> String {
    let wrapper = Term::lambda(vec![], own, b.clone());
    let p = Printer::new(&wrapper, None, false);
    p.body(b, Some(own), 0)
}

pub fn quote_str(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

struct Printer<'h> {
    names: HashMap<String, String>,
    heap: Option<&'h dyn HeapView>,
    env_as_value: bool,
}

impl<'h> Printer<'h> {
    fn new(root: &Term, heap: Option<&'h dyn HeapView>, env_as_value: bool) -> Self {
        let mut binders = Vec::new();
        collect_binders_term(root, &mut binders);
        let mut taken: HashSet<String> = root.free_vars().into_iter().collect();
        let mut names = HashMap::new();
        for b in binders.iter().filter(|b| !b.contains('%')) {
            taken.insert(b.clone());
        }
        for b in binders {
            if !b.contains('%') || names.contains_key(&b) {
                continue;
            }
            let base = base_name(&b).to_string();
            let mut cand = base.clone();
            let mut i = 1;
            while taken.contains(&cand) {
                cand = format!("{base}_{i}");
                i += 1;
            }
            taken.insert(cand.clone());
            names.insert(b, cand);
        }
        Printer {
            names,
            heap,
            env_as_value,
        }
    }

    fn name(&self, n: &str) -> String {
        match self.names.get(n) {
            Some(m) => m.clone(),
            None if n.contains('%') => base_name(n).to_string(),
            None => n.to_string(),
        }
    }

    /// The outermost lambda always shows its stage parameter.
    fn term_top(&self, t: &Term) -> String {
        match t {
            Term::Lambda(l) => self.lambda_explicit(l, 0),
            _ => self.term(t, 0),
        }
    }

    fn lambda_explicit(&self, l: &Lambda, indent: usize) -> String {
        let head = format!("{}[{}]", self.params(l), self.name(&l.stage));
        let inner = self.body(&l.body, None, indent + 2);
        self.wrap(head, inner, indent)
    }

    /// `inner` is rendered at `indent + 2`.
    fn wrap(&self, head: String, inner: String, indent: usize) -> String {
        if !inner.contains('\n') && head.len() + inner.len() + indent + 4 <= WIDTH {
            format!("{head}{{ {inner} }}")
        } else {
            format!("{head}{{\n{}{inner}\n{}}}", " ".repeat(indent + 2), " ".repeat(indent))
        }
    }

    fn term(&self, t: &Term, indent: usize) -> String {
        match t {
            Term::Var(n) => self.name(n),
            Term::Int(n) => n.to_string(),
            Term::Str(s) => quote_str(s),
            Term::Bool(b) => b.to_string(),
            Term::Stage(v) => v.to_string(),
            Term::Tuple(items) => {
                let parts: Vec<String> = items.iter().map(|i| self.term(i, indent)).collect();
                format!("[{}]", parts.join(", "))
            }
            Term::Splice(inner) => format!("!{}", self.term(inner, indent)),
            Term::Lambda(l) => self.lambda(l, indent),
            Term::Rec(r) => format!("rec {} {}", self.name(&r.name), self.lambda(&r.lambda, indent)),
            Term::Fragment(id) => match self.heap.and_then(|h| h.fragment_arity(*id)) {
                Some(a) => format!("<fragment #{} arity {a}>", id.0),
                None => format!("<fragment #{}>", id.0),
            },
            Term::Env(id) => {
                let entries = self.heap.and_then(|h| h.env_entries(*id));
                match entries {
                    Some(es) => {
                        let parts: Vec<String> = es
                            .iter()
                            .map(|(k, v)| format!("[{}, {}]", self.term(k, indent), self.term(v, indent)))
                            .collect();
                        if self.env_as_value {
                            format!("[{}]", parts.join(", "))
                        } else {
                            format!("<env [{}]>", parts.join(", "))
                        }
                    }
                    None => format!("<env #{}>", id.0),
                }
            }
            Term::Return(_) => "return".to_string(),
        }
    }

    fn params(&self, l: &Lambda) -> String {
        let ps: Vec<String> = l
            .params
            .iter()
            .map(|p| match p {
                Param::Named(n) => self.name(n),
                Param::Pack(n) => format!("!{}", self.name(n)),
            })
            .collect();
        format!("({})", ps.join(", "))
    }

    /// `[s]` unless the stage parameter is used only as the natural stage of `body`.
    fn stage_binder(&self, stage: &str, body: &Body) -> (String, Option<String>) {
        if natural_only(stage, body) || !mentions(stage, body) {
            (String::new(), Some(stage.to_string()))
        } else {
            (format!("[{}]", self.name(stage)), Some(stage.to_string()))
        }
    }

    fn lambda(&self, l: &Lambda, indent: usize) -> String {
        let (binder, own) = self.stage_binder(&l.stage, &l.body);
        let head = format!("{}{}", self.params(l), binder);
        let inner = self.body(&l.body, own.as_deref(), indent + 2);
        self.wrap(head, inner, indent)
    }

    fn stage_expr(&self, e: &StageExpr, ctx: u8) -> String {
        match e {
            StageExpr::Const(StageValue::Top) => "always".into(),
            StageExpr::Const(StageValue::Bottom) => "never".into(),
            StageExpr::Ref(n) => self.name(n),
            StageExpr::Or(l, r) => {
                let s = format!("{} | {}", self.stage_expr(l, 1), self.stage_expr(r, 1));
                if ctx > 1 {
                    format!("({s})")
                } else {
                    s
                }
            }
            StageExpr::And(l, r) => {
                let s = format!("{} & {}", self.stage_expr(l, 2), self.stage_expr(r, 2));
                if ctx > 2 {
                    format!("({s})")
                } else {
                    s
                }
            }
            StageExpr::Not(e) => format!("!{}", self.stage_expr(e, 3)),
        }
    }

    fn body(&self, b: &Body, own: Option<&str>, indent: usize) -> String {
        let natural = matches!((&b.stage, own), (StageExpr::Ref(r), Some(o)) if r == o);
        let prefix = if natural {
            String::new()
        } else {
            format!("@{}: ", self.stage_expr(&b.stage, 0))
        };
        format!("{prefix}{}", self.form(&b.form, indent))
    }

    fn form(&self, f: &Form, indent: usize) -> String {
        let pad = " ".repeat(indent);
        match f {
            Form::Halt => "halt".into(),
            Form::Apply { callee, args } => {
                let deeper = indent + 2;
                let callee = self.term(callee, indent);
                let args: Vec<String> = args.iter().map(|a| self.term(a, deeper)).collect();
                let flat_len = callee.len() + args.iter().map(|a| a.len() + 1).sum::<usize>();
                let multi = callee.contains('\n') || args.iter().any(|a| a.contains('\n'));
                let sep = if !multi && flat_len + indent <= WIDTH {
                    " ".to_string()
                } else {
                    format!("\n{}", " ".repeat(deeper))
                };
                let mut out = callee;
                for a in args {
                    out.push_str(&sep);
                    out.push_str(&a);
                }
                out
            }
            Form::Prim {
                expr,
                binds,
                stage_param,
                rest,
            } => {
                let text = expr.render(&|n| self.name(n), &|t| self.prim_lit(t));
                let binds: Vec<String> = binds.iter().map(|b| self.name(b)).collect();
                let (binder, own) = self.stage_binder(stage_param, rest);
                let head = format!("{} ({}){}", quote_str(&text), binds.join(", "), binder);
                let rest = self.body(rest, own.as_deref(), indent);
                if !rest.contains('\n') && head.len() + rest.len() + indent < WIDTH {
                    format!("{head} {rest}")
                } else {
                    format!("{head}\n{pad}{rest}")
                }
            }
            Form::Fix {
                stage_param,
                name,
                value,
                rest,
            } => {
                let head = format!(
                    "fix [{}] {} {}",
                    self.name(stage_param),
                    self.name(name),
                    self.term(value, indent)
                );
                let rest = self.body(rest, Some(stage_param), indent);
                format!("{head}\n{pad}{rest}")
            }
        }
    }

    fn prim_lit(&self, t: &Term) -> String {
        match t {
            Term::Str(s) => quote_str(s),
            other => self.term(other, 0),
        }
    }
}

fn mentions(name: &str, body: &Body) -> bool {
    let wrapper = Term::lambda(vec![], "%probe", body.clone());
    wrapper.free_vars().iter().any(|v| v == name)
}

/// True when `stage` occurs in `body` only as its top-level stage expression.
fn natural_only(stage: &str, body: &Body) -> bool {
    if body.stage != StageExpr::Ref(stage.to_string()) {
        return false;
    }
    let probe = Body {
        stage: StageExpr::Const(StageValue::Top),
        form: body.form.clone(),
    };
    let wrapper = Term::lambda(vec![], "%probe", probe);
    !wrapper.free_vars().iter().any(|v| v == stage)
}

fn collect_binders_term(t: &Term, out: &mut Vec<String>) {
    match t {
        Term::Tuple(items) => items.iter().for_each(|i| collect_binders_term(i, out)),
        Term::Splice(inner) => collect_binders_term(inner, out),
        Term::Lambda(l) => collect_binders_lambda(l, out),
        Term::Rec(r) => {
            out.push(r.name.clone());
            collect_binders_lambda(&r.lambda, out);
        }
        _ => {}
    }
}

fn collect_binders_lambda(l: &Lambda, out: &mut Vec<String>) {
    out.extend(l.params.iter().map(|p| p.name().to_string()));
    out.push(l.stage.clone());
    collect_binders_body(&l.body, out);
}

fn collect_binders_body(b: &Body, out: &mut Vec<String>) {
    match &b.form {
        Form::Apply { callee, args } => {
            collect_binders_term(callee, out);
            args.iter().for_each(|a| collect_binders_term(a, out));
        }
        Form::Fix {
            stage_param,
            name,
            value,
            rest,
        } => {
            out.push(name.clone());
            collect_binders_term(value, out);
            out.push(stage_param.clone());
            collect_binders_body(rest, out);
        }
        Form::Prim {
            expr,
            binds,
            stage_param,
            rest,
        } => {
            let _ = expr;
            out.extend(binds.iter().cloned());
            out.push(stage_param.clone());
            collect_binders_body(rest, out);
        }
        Form::Halt => {}
    }
}
