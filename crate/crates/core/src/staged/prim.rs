//! The primitive (non-CPS) expression sublanguage written inside `"..."`.
//!
//! Supports integers, booleans, strings, names, arithmetic and comparison
//! operators, list literals, `concat(a,b)`, and the environment methods
//! `env.insert(k,v)` / `env.lookup(k)`.

use std::fmt::Write as _;

use super::error::EvalError;
use super::term::{EnvId, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Gt => ">",
            BinOp::Le => "<=",
            BinOp::Ge => ">=",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Gt | BinOp::Le | BinOp::Ge => 1,
            BinOp::Add | BinOp::Sub => 2,
            BinOp::Mul | BinOp::Div => 3,
        }
    }

    pub fn is_arithmetic(self) -> bool {
        matches!(self, BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PrimExpr {
    Lit(Term),
    Var(String),
    Neg(Box<PrimExpr>),
    Not(Box<PrimExpr>),
    Bin(BinOp, Box<PrimExpr>, Box<PrimExpr>),
    Method {
        recv: Box<PrimExpr>,
        method: String,
        args: Vec<PrimExpr>,
    },
    Call {
        func: String,
        args: Vec<PrimExpr>,
    },
    List(Vec<PrimExpr>),
}

/// What the evaluator needs from its surroundings.
pub trait PrimHost {
    /// True when `name` is bound by an enclosing binder but not yet substituted.
    fn is_symbolic(&self, name: &str) -> bool;
    fn env_insert(&mut self, env: EnvId, key: Term, value: Term);
    fn env_lookup(&self, env: EnvId, key: &Term) -> Option<Term>;
}

impl PrimExpr {
    pub fn parse(text: &str) -> Result<PrimExpr, String> {
        let mut p = PrimParser {
            toks: lex(text)?,
            pos: 0,
        };
        let e = p.cmp()?;
        if p.pos != p.toks.len() {
            return Err(format!("unexpected `{}` in primitive expression", p.toks[p.pos]));
        }
        Ok(e)
    }

    pub fn vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.walk_vars(&mut |n| {
            if !out.iter().any(|o: &String| o == n) {
                out.push(n.to_string())
            }
        });
        out
    }

    fn walk_vars(&self, f: &mut dyn FnMut(&str)) {
        match self {
            PrimExpr::Lit(t) => {
                for v in t.free_vars() {
                    f(&v)
                }
            }
            PrimExpr::Var(n) => f(n),
            PrimExpr::Neg(e) | PrimExpr::Not(e) => e.walk_vars(f),
            PrimExpr::Bin(_, l, r) => {
                l.walk_vars(f);
                r.walk_vars(f);
            }
            PrimExpr::Method { recv, args, .. } => {
                recv.walk_vars(f);
                args.iter().for_each(|a| a.walk_vars(f));
            }
            PrimExpr::Call { args, .. } | PrimExpr::List(args) => {
                args.iter().for_each(|a| a.walk_vars(f))
            }
        }
    }

    /// Replaces variables by terms. A variable maps to a variable, any other
    /// term becomes a literal.
    pub fn substitute(&self, lookup: &mut dyn FnMut(&str) -> Option<Term>) -> PrimExpr {
        match self {
            PrimExpr::Var(n) => match lookup(n) {
                Some(Term::Var(m)) => PrimExpr::Var(m),
                Some(t) => PrimExpr::Lit(t),
                None => PrimExpr::Var(n.clone()),
            },
            PrimExpr::Lit(t) => PrimExpr::Lit(t.clone()),
            PrimExpr::Neg(e) => PrimExpr::Neg(Box::new(e.substitute(lookup))),
            PrimExpr::Not(e) => PrimExpr::Not(Box::new(e.substitute(lookup))),
            PrimExpr::Bin(op, l, r) => PrimExpr::Bin(
                *op,
                Box::new(l.substitute(lookup)),
                Box::new(r.substitute(lookup)),
            ),
            PrimExpr::Method { recv, method, args } => PrimExpr::Method {
                recv: Box::new(recv.substitute(lookup)),
                method: method.clone(),
                args: args.iter().map(|a| a.substitute(lookup)).collect(),
            },
            PrimExpr::Call { func, args } => PrimExpr::Call {
                func: func.clone(),
                args: args.iter().map(|a| a.substitute(lookup)).collect(),
            },
            PrimExpr::List(items) => {
                PrimExpr::List(items.iter().map(|a| a.substitute(lookup)).collect())
            }
        }
    }

    pub fn mentions_env_method(&self) -> bool {
        match self {
            PrimExpr::Method { method, .. } if method == "insert" || method == "lookup" => true,
            PrimExpr::Method { recv, args, .. } => {
                recv.mentions_env_method() || args.iter().any(PrimExpr::mentions_env_method)
            }
            PrimExpr::Neg(e) | PrimExpr::Not(e) => e.mentions_env_method(),
            PrimExpr::Bin(_, l, r) => l.mentions_env_method() || r.mentions_env_method(),
            PrimExpr::Call { args, .. } | PrimExpr::List(args) => {
                args.iter().any(PrimExpr::mentions_env_method)
            }
            PrimExpr::Lit(_) | PrimExpr::Var(_) => false,
        }
    }

    pub fn is_arithmetic(&self) -> bool {
        match self {
            PrimExpr::Bin(op, l, r) => op.is_arithmetic() || l.is_arithmetic() || r.is_arithmetic(),
            PrimExpr::Neg(_) => true,
            PrimExpr::Not(e) => e.is_arithmetic(),
            _ => false,
        }
    }

    /// Renders the expression; `name` maps variable names for printing.
    pub fn render(&self, name: &dyn Fn(&str) -> String, lit: &dyn Fn(&Term) -> String) -> String {
        let mut out = String::new();
        self.render_into(&mut out, 0, name, lit);
        out
    }

    fn render_into(
        &self,
        out: &mut String,
        ctx: u8,
        name: &dyn Fn(&str) -> String,
        lit: &dyn Fn(&Term) -> String,
    ) {
        match self {
            PrimExpr::Lit(Term::Int(n)) if *n < 0 => {
                let _ = write!(out, "(-{})", n.unsigned_abs());
            }
            PrimExpr::Lit(t) => out.push_str(&lit(t)),
            PrimExpr::Var(n) => out.push_str(&name(n)),
            PrimExpr::Neg(e) => {
                out.push('-');
                e.render_into(out, 4, name, lit);
            }
            PrimExpr::Not(e) => {
                out.push('!');
                e.render_into(out, 4, name, lit);
            }
            PrimExpr::Bin(op, l, r) => {
                let p = op.precedence();
                if p < ctx {
                    out.push('(');
                }
                l.render_into(out, p, name, lit);
                out.push_str(op.symbol());
                // left associative: the right operand needs a strictly higher level
                r.render_into(out, p + 1, name, lit);
                if p < ctx {
                    out.push(')');
                }
            }
            PrimExpr::Method { recv, method, args } => {
                recv.render_into(out, 5, name, lit);
                let _ = write!(out, ".{method}(");
                render_list(out, args, name, lit);
                out.push(')');
            }
            PrimExpr::Call { func, args } => {
                let _ = write!(out, "{func}(");
                render_list(out, args, name, lit);
                out.push(')');
            }
            PrimExpr::List(items) => {
                out.push('[');
                render_list(out, items, name, lit);
                out.push(']');
            }
        }
    }

    /// Evaluates the expression. `Ok(None)` means a needed operand is still
    /// symbolic and the expression must wait.
    pub fn eval(&self, host: &mut dyn PrimHost) -> Result<Option<Term>, EvalError> {
        Ok(match self {
            PrimExpr::Lit(t) => {
                if t.free_vars().iter().any(|v| host.is_symbolic(v)) {
                    None
                } else {
                    Some(t.clone())
                }
            }
            PrimExpr::Var(n) => {
                if host.is_symbolic(n) {
                    None
                } else {
                    return Err(EvalError::UnboundName(n.clone()));
                }
            }
            PrimExpr::Neg(e) => match e.eval(host)? {
                None => None,
                Some(Term::Int(n)) => Some(Term::Int(n.checked_neg().ok_or_else(overflow)?)),
                Some(other) => return Err(type_err("-", &other)),
            },
            PrimExpr::Not(e) => match e.eval(host)? {
                None => None,
                Some(Term::Bool(b)) => Some(Term::Bool(!b)),
                Some(other) => return Err(type_err("!", &other)),
            },
            PrimExpr::Bin(op, l, r) => {
                let (Some(l), Some(r)) = (l.eval(host)?, r.eval(host)?) else {
                    return Ok(None);
                };
                Some(binary(*op, l, r)?)
            }
            PrimExpr::List(items) => {
                let mut out = Vec::with_capacity(items.len());
                for i in items {
                    match i.eval(host)? {
                        Some(v) => out.push(v),
                        None => return Ok(None),
                    }
                }
                Some(Term::Tuple(out))
            }
            PrimExpr::Call { func, args } => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    match a.eval(host)? {
                        Some(v) => vals.push(v),
                        None => return Ok(None),
                    }
                }
                Some(call(func, vals)?)
            }
            PrimExpr::Method { recv, method, args } => {
                let Some(recv) = recv.eval(host)? else {
                    return Ok(None);
                };
                let Term::Env(env) = recv else {
                    return Err(EvalError::PrimTypeError(format!(
                        "method `{method}` called on a non-environment value"
                    )));
                };
                match (method.as_str(), args.as_slice()) {
                    ("insert", [k, v]) => {
                        let Some(key) = k.eval(host)? else {
                            return Ok(None);
                        };
                        // stored values may stay symbolic: binding happens at build time
                        let value = match v {
                            PrimExpr::Var(n) if host.is_symbolic(n) => Term::Var(n.clone()),
                            other => match other.eval(host)? {
                                Some(v) => v,
                                None => return Ok(None),
                            },
                        };
                        host.env_insert(env, key, value);
                        Some(Term::Env(env))
                    }
                    ("lookup", [k]) => {
                        let Some(key) = k.eval(host)? else {
                            return Ok(None);
                        };
                        match host.env_lookup(env, &key) {
                            Some(v) => Some(v),
                            None => return Err(EvalError::NameNotFound(key_text(&key))),
                        }
                    }
                    _ => {
                        return Err(EvalError::PrimTypeError(format!(
                            "unknown environment method `{method}` with {} arguments",
                            args.len()
                        )))
                    }
                }
            }
        })
    }
}

fn render_list(
    out: &mut String,
    items: &[PrimExpr],
    name: &dyn Fn(&str) -> String,
    lit: &dyn Fn(&Term) -> String,
) {
    for (i, a) in items.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        a.render_into(out, 0, name, lit);
    }
}

fn key_text(t: &Term) -> String {
    match t {
        Term::Str(s) => s.clone(),
        Term::Int(n) => n.to_string(),
        other => format!("{other:?}"),
    }
}

fn overflow() -> EvalError {
    EvalError::PrimTypeError("integer overflow".into())
}

fn type_err(op: &str, t: &Term) -> EvalError {
    EvalError::PrimTypeError(format!("operator `{op}` not defined for {}", kind(t)))
}

fn kind(t: &Term) -> &'static str {
    match t {
        Term::Int(_) => "integer",
        Term::Str(_) => "string",
        Term::Bool(_) => "boolean",
        Term::Tuple(_) => "tuple",
        Term::Env(_) => "environment",
        Term::Lambda(_) | Term::Rec(_) => "function",
        Term::Fragment(_) => "fragment",
        Term::Stage(_) => "stage value",
        _ => "value",
    }
}

/// Binary operators on concrete values. Division truncates toward zero.
pub fn binary(op: BinOp, l: Term, r: Term) -> Result<Term, EvalError> {
    use BinOp::*;
    Ok(match (op, &l, &r) {
        (Eq, _, _) => Term::Bool(l == r),
        (Ne, _, _) => Term::Bool(l != r),
        (Add, Term::Int(a), Term::Int(b)) => Term::Int(a.checked_add(*b).ok_or_else(overflow)?),
        (Sub, Term::Int(a), Term::Int(b)) => Term::Int(a.checked_sub(*b).ok_or_else(overflow)?),
        (Mul, Term::Int(a), Term::Int(b)) => Term::Int(a.checked_mul(*b).ok_or_else(overflow)?),
        (Div, Term::Int(_), Term::Int(0)) => {
            return Err(EvalError::PrimTypeError("division by zero".into()))
        }
        (Div, Term::Int(a), Term::Int(b)) => Term::Int(a.checked_div(*b).ok_or_else(overflow)?),
        (Add, Term::Str(a), Term::Str(b)) => Term::Str(format!("{a}{b}")),
        (Lt, Term::Int(a), Term::Int(b)) => Term::Bool(a < b),
        (Gt, Term::Int(a), Term::Int(b)) => Term::Bool(a > b),
        (Le, Term::Int(a), Term::Int(b)) => Term::Bool(a <= b),
        (Ge, Term::Int(a), Term::Int(b)) => Term::Bool(a >= b),
        _ => {
            return Err(EvalError::PrimTypeError(format!(
                "operator `{}` not defined for {} and {}",
                op.symbol(),
                kind(&l),
                kind(&r)
            )))
        }
    })
}

fn call(func: &str, args: Vec<Term>) -> Result<Term, EvalError> {
    match (func, args.as_slice()) {
        ("concat", [Term::Tuple(a), Term::Tuple(b)]) => {
            Ok(Term::Tuple(a.iter().chain(b.iter()).cloned().collect()))
        }
        ("concat", _) => Err(EvalError::PrimTypeError("concat expects two tuples".into())),
        ("len", [Term::Tuple(a)]) => Ok(Term::Int(a.len() as i64)),
        _ => Err(EvalError::PrimTypeError(format!("unknown function `{func}`"))),
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Int(i64),
    Str(String),
    Ident(String),
    Sym(&'static str),
}

impl std::fmt::Display for Tok {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tok::Int(n) => write!(f, "{n}"),
            Tok::Str(s) => write!(f, "{s:?}"),
            Tok::Ident(s) => f.write_str(s),
            Tok::Sym(s) => f.write_str(s),
        }
    }
}

const SYMBOLS: [&str; 17] = [
    "==", "!=", "<=", ">=", "+", "-", "*", "/", "<", ">", "!", "(", ")", "[", "]", ",", ".",
];

fn lex(text: &str) -> Result<Vec<Tok>, String> {
    let bytes = text.as_bytes();
    let mut i = 0;
    let mut out = Vec::new();
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let n = text[start..i]
                .parse()
                .map_err(|_| format!("integer literal `{}` out of range", &text[start..i]))?;
            out.push(Tok::Int(n));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Tok::Ident(text[start..i].to_string()));
        } else if c == '"' {
            i += 1;
            let mut s = String::new();
            loop {
                match text[i..].chars().next() {
                    None => return Err("unterminated string in primitive expression".into()),
                    Some('"') => {
                        i += 1;
                        break;
                    }
                    Some('\\') => {
                        let esc = text[i + 1..].chars().next().ok_or("dangling escape")?;
                        s.push(match esc {
                            'n' => '\n',
                            't' => '\t',
                            other => other,
                        });
                        i += 1 + esc.len_utf8();
                    }
                    Some(ch) => {
                        s.push(ch);
                        i += ch.len_utf8();
                    }
                }
            }
            out.push(Tok::Str(s));
        } else if let Some(sym) = SYMBOLS.iter().find(|s| text[i..].starts_with(**s)) {
            out.push(Tok::Sym(sym));
            i += sym.len();
        } else {
            return Err(format!("unexpected character `{c}` in primitive expression"));
        }
    }
    Ok(out)
}

struct PrimParser {
    toks: Vec<Tok>,
    pos: usize,
}

impl PrimParser {
    fn peek_sym(&self) -> Option<&'static str> {
        match self.toks.get(self.pos) {
            Some(Tok::Sym(s)) => Some(s),
            _ => None,
        }
    }

    fn eat(&mut self, sym: &str) -> bool {
        if self.peek_sym() == Some(sym) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, sym: &str) -> Result<(), String> {
        if self.eat(sym) {
            Ok(())
        } else {
            Err(format!("expected `{sym}` in primitive expression"))
        }
    }

    fn cmp(&mut self) -> Result<PrimExpr, String> {
        let l = self.add()?;
        let op = match self.peek_sym() {
            Some("==") => BinOp::Eq,
            Some("!=") => BinOp::Ne,
            Some("<") => BinOp::Lt,
            Some(">") => BinOp::Gt,
            Some("<=") => BinOp::Le,
            Some(">=") => BinOp::Ge,
            _ => return Ok(l),
        };
        self.pos += 1;
        let r = self.add()?;
        Ok(PrimExpr::Bin(op, Box::new(l), Box::new(r)))
    }

    fn add(&mut self) -> Result<PrimExpr, String> {
        let mut l = self.mul()?;
        loop {
            let op = match self.peek_sym() {
                Some("+") => BinOp::Add,
                Some("-") => BinOp::Sub,
                _ => return Ok(l),
            };
            self.pos += 1;
            let r = self.mul()?;
            l = PrimExpr::Bin(op, Box::new(l), Box::new(r));
        }
    }

    fn mul(&mut self) -> Result<PrimExpr, String> {
        let mut l = self.unary()?;
        loop {
            let op = match self.peek_sym() {
                Some("*") => BinOp::Mul,
                Some("/") => BinOp::Div,
                _ => return Ok(l),
            };
            self.pos += 1;
            let r = self.unary()?;
            l = PrimExpr::Bin(op, Box::new(l), Box::new(r));
        }
    }

    fn unary(&mut self) -> Result<PrimExpr, String> {
        if self.eat("-") {
            return Ok(match self.unary()? {
                PrimExpr::Lit(Term::Int(n)) => PrimExpr::Lit(Term::Int(-n)),
                e => PrimExpr::Neg(Box::new(e)),
            });
        }
        if self.eat("!") {
            return Ok(PrimExpr::Not(Box::new(self.unary()?)));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> Result<PrimExpr, String> {
        let mut e = self.primary()?;
        while self.eat(".") {
            let method = match self.toks.get(self.pos) {
                Some(Tok::Ident(m)) => m.clone(),
                _ => return Err("expected method name after `.`".into()),
            };
            self.pos += 1;
            self.expect("(")?;
            let args = self.list(")")?;
            e = PrimExpr::Method {
                recv: Box::new(e),
                method,
                args,
            };
        }
        Ok(e)
    }

    fn list(&mut self, close: &str) -> Result<Vec<PrimExpr>, String> {
        let mut items = Vec::new();
        if self.eat(close) {
            return Ok(items);
        }
        loop {
            items.push(self.cmp()?);
            if self.eat(close) {
                return Ok(items);
            }
            self.expect(",")?;
        }
    }

    fn primary(&mut self) -> Result<PrimExpr, String> {
        let tok = self
            .toks
            .get(self.pos)
            .cloned()
            .ok_or("unexpected end of primitive expression")?;
        self.pos += 1;
        match tok {
            Tok::Int(n) => Ok(PrimExpr::Lit(Term::Int(n))),
            Tok::Str(s) => Ok(PrimExpr::Lit(Term::Str(s))),
            Tok::Ident(id) if id == "true" => Ok(PrimExpr::Lit(Term::Bool(true))),
            Tok::Ident(id) if id == "false" => Ok(PrimExpr::Lit(Term::Bool(false))),
            Tok::Ident(id) => {
                if self.eat("(") {
                    let args = self.list(")")?;
                    Ok(PrimExpr::Call { func: id, args })
                } else {
                    Ok(PrimExpr::Var(id))
                }
            }
            Tok::Sym("(") => {
                let e = self.cmp()?;
                self.expect(")")?;
                Ok(e)
            }
            Tok::Sym("[") => Ok(PrimExpr::List(self.list("]")?)),
            Tok::Sym(s) => Err(format!("unexpected `{s}` in primitive expression")),
        }
    }
}
