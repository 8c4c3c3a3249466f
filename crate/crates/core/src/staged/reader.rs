//! Reader for the concrete core syntax.
//!
//! Sugar handled here: natural staging (a body without `@e:` is staged on the
//! implicit parameter of its enclosing lambda), `let`, the last-argument
//! lambda, quoted primitive expressions, `!x` splicing and `!x` packing.
//! Single quotes around stage names (`'@ft:'`, `'[bt]'`) are accepted and
//! ignored.

use super::error::SyntaxError;
use super::names::NameGen;
use super::prim::PrimExpr;
use super::term::{Body, Form, Lambda, Param, StageExpr, StageValue, Term};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Str(String),
    Punct(char),
}

impl std::fmt::Display for Tok {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tok::Ident(s) => f.write_str(s),
            Tok::Int(n) => write!(f, "{n}"),
            Tok::Str(s) => write!(f, "{s:?}"),
            Tok::Punct(c) => write!(f, "{c}"),
        }
    }
}

/// Reads a single term, e.g. `(x)[s]{ @s: f x }`.
pub fn read_core(text: &str) -> Result<Term, SyntaxError> {
    let mut r = Reader::new(text, 0);
    let t = r.arg()?;
    r.expect_end()?;
    Ok(t)
}

/// Reads a body sequence whose natural stage is `own`.
pub fn read_body(text: &str, own: &str) -> Result<Body, SyntaxError> {
    let mut r = Reader::new(text, 0);
    let b = r.body(own)?;
    r.expect_end()?;
    Ok(b)
}

/// Reads a whole program. The result is a lambda taking a single `return`
/// continuation; its body is staged on the lambda's own parameter.
pub fn read_program(text: &str) -> Result<Term, SyntaxError> {
    let mut r = Reader::new(text, 0);
    let stage = r.gen.fresh("main");
    let body = r.body(&stage)?;
    r.expect_end()?;
    Ok(Term::lambda(vec![Param::Named("return".into())], stage, body))
}

/// Reads a body starting at byte `start`, stopping before the first unmatched
/// `}` (or at end of input). Returns the body and the offset where reading
/// stopped.
pub fn read_body_prefix(text: &str, start: usize, own: &str) -> Result<(Body, usize), SyntaxError> {
    let mut r = Reader::new(text, start);
    let b = r.body(own)?;
    let end = r.skip_trivia_offset();
    match r.peek()? {
        None | Some(Tok::Punct('}')) => Ok((b, end)),
        Some(t) => Err(r.err(format!("unexpected `{t}` after body"))),
    }
}

struct Reader<'a> {
    text: &'a str,
    pos: usize,
    peeked: Option<(Tok, usize, usize)>,
    gen: NameGen,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str, pos: usize) -> Self {
        Reader {
            text,
            pos,
            peeked: None,
            gen: NameGen::default(),
        }
    }

    fn err(&self, msg: impl Into<String>) -> SyntaxError {
        let at = self.peeked.as_ref().map_or(self.pos, |p| p.1);
        SyntaxError::at(self.text, at, msg)
    }

    fn skip_trivia_offset(&mut self) -> usize {
        if let Some((_, start, _)) = &self.peeked {
            return *start;
        }
        let bytes = self.text.as_bytes();
        let mut i = self.pos;
        loop {
            if i >= bytes.len() {
                return i;
            }
            let c = bytes[i];
            if c.is_ascii_whitespace() || c == b'\'' {
                i += 1;
            } else if c == b'/' && bytes.get(i + 1) == Some(&b'/') {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            } else {
                return i;
            }
        }
    }

    fn peek(&mut self) -> Result<Option<Tok>, SyntaxError> {
        if self.peeked.is_none() {
            let start = self.skip_trivia_offset();
            if start >= self.text.len() {
                return Ok(None);
            }
            let (tok, end) = self.lex_at(start)?;
            self.peeked = Some((tok, start, end));
        }
        Ok(self.peeked.as_ref().map(|p| p.0.clone()))
    }

    fn bump(&mut self) -> Result<Option<Tok>, SyntaxError> {
        let t = self.peek()?;
        if let Some((_, _, end)) = self.peeked.take() {
            self.pos = end;
        }
        Ok(t)
    }

    fn lex_at(&self, start: usize) -> Result<(Tok, usize), SyntaxError> {
        let text = self.text;
        let bytes = text.as_bytes();
        let c = bytes[start];
        let ident_end = |mut i: usize| {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            i
        };
        if c.is_ascii_alphabetic() || c == b'_' {
            let end = ident_end(start);
            return Ok((Tok::Ident(text[start..end].to_string()), end));
        }
        let digits = |i: usize| {
            let mut j = i;
            while j < bytes.len() && bytes[j].is_ascii_digit() {
                j += 1;
            }
            j
        };
        if c.is_ascii_digit() || (c == b'-' && bytes.get(start + 1).is_some_and(u8::is_ascii_digit)) {
            let end = digits(start + 1);
            let n = text[start..end]
                .parse()
                .map_err(|_| SyntaxError::at(text, start, "integer literal out of range"))?;
            return Ok((Tok::Int(n), end));
        }
        if c == b'"' {
            let mut i = start + 1;
            let mut s = String::new();
            loop {
                match text[i..].chars().next() {
                    None => return Err(SyntaxError::at(text, start, "unterminated string")),
                    Some('"') => return Ok((Tok::Str(s), i + 1)),
                    Some('\\') => {
                        let esc = text[i + 1..]
                            .chars()
                            .next()
                            .ok_or_else(|| SyntaxError::at(text, i, "dangling escape"))?;
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
        }
        let ch = text[start..].chars().next().unwrap_or('\0');
        if "()[]{},@:!&|".contains(ch) {
            return Ok((Tok::Punct(ch), start + 1));
        }
        Err(SyntaxError::at(text, start, format!("unexpected character `{ch}`")))
    }

    fn at_punct(&mut self, c: char) -> Result<bool, SyntaxError> {
        Ok(self.peek()? == Some(Tok::Punct(c)))
    }

    fn eat_punct(&mut self, c: char) -> Result<bool, SyntaxError> {
        if self.at_punct(c)? {
            self.bump()?;
            Ok(true)
        } else {
            Ok(false)
        }
    }

    fn expect_punct(&mut self, c: char) -> Result<(), SyntaxError> {
        if self.eat_punct(c)? {
            Ok(())
        } else {
            let found = self.peek()?.map_or("end of input".to_string(), |t| format!("`{t}`"));
            Err(self.err(format!("expected `{c}`, found {found}")))
        }
    }

    fn expect_ident(&mut self) -> Result<String, SyntaxError> {
        match self.peek()? {
            Some(Tok::Ident(s)) => {
                self.bump()?;
                Ok(s)
            }
            other => {
                let found = other.map_or("end of input".to_string(), |t| format!("`{t}`"));
                Err(self.err(format!("expected a name, found {found}")))
            }
        }
    }

    fn expect_end(&mut self) -> Result<(), SyntaxError> {
        match self.peek()? {
            None => Ok(()),
            Some(t) => Err(self.err(format!("unexpected `{t}` after end of term"))),
        }
    }

    fn at_body_end(&mut self) -> Result<bool, SyntaxError> {
        Ok(matches!(self.peek()?, None | Some(Tok::Punct('}'))))
    }

    fn body(&mut self, own: &str) -> Result<Body, SyntaxError> {
        let stage = if self.eat_punct('@')? {
            let e = self.stage_or()?;
            self.expect_punct(':')?;
            e
        } else {
            StageExpr::Ref(own.to_string())
        };
        let form = match self.peek()? {
            Some(Tok::Str(_)) => self.prim()?,
            Some(Tok::Ident(kw)) if kw == "fix" => self.fix()?,
            Some(Tok::Ident(kw)) if kw == "let" => self.let_form()?,
            None => return Err(self.err("expected a body, found end of input")),
            Some(Tok::Punct('}')) => return Err(self.err("expected a body, found `}`")),
            _ => self.application()?,
        };
        Ok(Body { stage, form })
    }

    fn optional_stage_param(&mut self, hint: &str) -> Result<String, SyntaxError> {
        if self.eat_punct('[')? {
            let y = self.expect_ident()?;
            self.expect_punct(']')?;
            Ok(y)
        } else {
            Ok(self.gen.fresh(hint))
        }
    }

    fn rest_body(&mut self, own: &str, what: &str) -> Result<Body, SyntaxError> {
        if self.at_body_end()? {
            return Err(self.err(format!("{what} needs a continuation body")));
        }
        self.body(own)
    }

    fn prim(&mut self) -> Result<Form, SyntaxError> {
        let Some(Tok::Str(src)) = self.peek()? else {
            unreachable!("prim called on a string token")
        };
        let expr = PrimExpr::parse(&src).map_err(|m| self.err(m))?;
        self.bump()?;
        self.expect_punct('(')?;
        let mut binds = Vec::new();
        while !self.eat_punct(')')? {
            binds.push(self.expect_ident()?);
            self.eat_punct(',')?;
        }
        let stage_param = self.optional_stage_param("s")?;
        let rest = self.rest_body(&stage_param, "a primitive expression")?;
        Ok(Form::Prim {
            expr,
            binds,
            stage_param,
            rest: Box::new(rest),
        })
    }

    fn fix(&mut self) -> Result<Form, SyntaxError> {
        self.bump()?;
        self.expect_punct('[')?;
        let stage_param = self.expect_ident()?;
        self.expect_punct(']')?;
        let name = self.expect_ident()?;
        let value = self.arg()?;
        if value.as_lambda().is_none() {
            return Err(self.err("`fix` binds a lambda"));
        }
        let rest = self.rest_body(&stage_param, "`fix`")?;
        Ok(Form::Fix {
            stage_param,
            name,
            value,
            rest: Box::new(rest),
        })
    }

    fn let_form(&mut self) -> Result<Form, SyntaxError> {
        let let_at = self.peeked.as_ref().map_or(self.pos, |p| p.1);
        self.bump()?;
        let unbound = |r: &mut Self| -> Result<(), SyntaxError> {
            if r.at_body_end()? {
                let (line, col) = super::error::line_col(r.text, let_at);
                Err(SyntaxError::UnboundSugar { line, col })
            } else {
                Ok(())
            }
        };
        if self.eat_punct('[')? {
            let y = self.expect_ident()?;
            self.expect_punct(']')?;
            let x = self.expect_ident()?;
            let v = self.arg()?;
            unbound(self)?;
            let rest = self.body(&y)?;
            let lam = Term::lambda(vec![Param::Named(x)], y, rest);
            return Ok(Form::Apply {
                callee: lam,
                args: vec![v],
            });
        }
        let name = self.expect_ident()?;
        let func = self.lambda_after_head(true)?;
        unbound(self)?;
        let y = self.gen.fresh("s");
        let rest = self.body(&y)?;
        Ok(Form::Apply {
            callee: Term::lambda(vec![Param::Named(name)], y, rest),
            args: vec![func],
        })
    }

    fn application(&mut self) -> Result<Form, SyntaxError> {
        let callee = self.arg()?;
        let mut args = Vec::new();
        loop {
            match self.peek()? {
                None | Some(Tok::Punct('}')) => break,
                Some(Tok::Punct('@')) => {
                    return Err(self.err("a body holds a single form; unexpected `@`"))
                }
                Some(Tok::Punct('(')) => {
                    let (params, stage) = self.lambda_head()?;
                    if self.at_punct('{')? {
                        args.push(self.braced_lambda(params, stage)?);
                    } else {
                        let rest = self.rest_body(&stage, "a last-argument lambda")?;
                        args.push(Term::lambda(params, stage, rest));
                        break;
                    }
                }
                _ => args.push(self.arg()?),
            }
        }
        Ok(Form::Apply { callee, args })
    }

    fn lambda_head(&mut self) -> Result<(Vec<Param>, String), SyntaxError> {
        self.expect_punct('(')?;
        let mut params: Vec<Param> = Vec::new();
        while !self.eat_punct(')')? {
            let packed = self.eat_punct('!')?;
            let name = self.expect_ident()?;
            if params.iter().any(|p| p.name() == name) {
                return Err(self.err(format!("duplicate parameter `{name}`")));
            }
            if packed && params.iter().any(Param::is_pack) {
                return Err(self.err("at most one packed parameter per lambda"));
            }
            params.push(if packed {
                Param::Pack(name)
            } else {
                Param::Named(name)
            });
            self.eat_punct(',')?;
        }
        let stage = self.optional_stage_param("s")?;
        if params.iter().any(|p| p.name() == stage) {
            return Err(self.err(format!("stage parameter `{stage}` repeats a parameter name")));
        }
        Ok((params, stage))
    }

    fn braced_lambda(&mut self, params: Vec<Param>, stage: String) -> Result<Term, SyntaxError> {
        self.expect_punct('{')?;
        let body = self.body(&stage)?;
        self.expect_punct('}')?;
        Ok(Term::Lambda(Box::new(Lambda {
            params,
            stage,
            body,
        })))
    }

    fn lambda_after_head(&mut self, braced: bool) -> Result<Term, SyntaxError> {
        let (params, stage) = self.lambda_head()?;
        if braced || self.at_punct('{')? {
            self.braced_lambda(params, stage)
        } else {
            Err(self.err("expected `{`"))
        }
    }

    fn arg(&mut self) -> Result<Term, SyntaxError> {
        match self.peek()? {
            Some(Tok::Ident(id)) => {
                self.bump()?;
                Ok(match id.as_str() {
                    "always" => Term::Stage(StageValue::Top),
                    "never" => Term::Stage(StageValue::Bottom),
                    "true" => Term::Bool(true),
                    "false" => Term::Bool(false),
                    _ => Term::Var(id),
                })
            }
            Some(Tok::Int(n)) => {
                self.bump()?;
                Ok(Term::Int(n))
            }
            Some(Tok::Str(s)) => {
                self.bump()?;
                Ok(Term::Str(s))
            }
            Some(Tok::Punct('[')) => {
                self.bump()?;
                let mut items = Vec::new();
                while !self.eat_punct(']')? {
                    items.push(self.arg()?);
                    self.eat_punct(',')?;
                }
                Ok(Term::Tuple(items))
            }
            Some(Tok::Punct('!')) => {
                self.bump()?;
                Ok(Term::Splice(Box::new(Term::Var(self.expect_ident()?))))
            }
            Some(Tok::Punct('(')) => self.lambda_after_head(false),
            Some(t) => Err(self.err(format!("unexpected `{t}`"))),
            None => Err(self.err("unexpected end of input")),
        }
    }

    fn stage_or(&mut self) -> Result<StageExpr, SyntaxError> {
        let mut l = self.stage_and()?;
        while self.eat_punct('|')? {
            let r = self.stage_and()?;
            l = StageExpr::Or(Box::new(l), Box::new(r));
        }
        Ok(l)
    }

    fn stage_and(&mut self) -> Result<StageExpr, SyntaxError> {
        let mut l = self.stage_not()?;
        while self.eat_punct('&')? {
            let r = self.stage_not()?;
            l = StageExpr::And(Box::new(l), Box::new(r));
        }
        Ok(l)
    }

    fn stage_not(&mut self) -> Result<StageExpr, SyntaxError> {
        if self.eat_punct('!')? {
            return Ok(StageExpr::Not(Box::new(self.stage_not()?)));
        }
        if self.eat_punct('(')? {
            let e = self.stage_or()?;
            self.expect_punct(')')?;
            return Ok(e);
        }
        let id = self.expect_ident()?;
        Ok(match id.as_str() {
            "always" => StageExpr::Const(StageValue::Top),
            "never" => StageExpr::Const(StageValue::Bottom),
            _ => StageExpr::Ref(id),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_core_lambda() {
        let t = read_core("(x)[s]{ @s: f x }").unwrap();
        let l = t.as_lambda().unwrap();
        assert_eq!(l.params, vec![Param::Named("x".into())]);
        assert_eq!(l.stage, "s");
        assert_eq!(l.body.stage, StageExpr::var("s"));
        assert_eq!(
            l.body.form,
            Form::Apply {
                callee: Term::var("f"),
                args: vec![Term::var("x")]
            }
        );
    }

    #[test]
    fn natural_staging_uses_own_parameter() {
        let t = read_core("(x){ f x }").unwrap();
        let l = t.as_lambda().unwrap();
        assert_eq!(l.body.stage, StageExpr::Ref(l.stage.clone()));
    }

    #[test]
    fn prim_binds_into_rest() {
        let b = read_body("\"a+b\" (c) k c", "s").unwrap();
        assert_eq!(b.stage, StageExpr::var("s"));
        let Form::Prim { binds, rest, stage_param, .. } = b.form else {
            panic!("expected prim")
        };
        assert_eq!(binds, vec!["c".to_string()]);
        assert_eq!(rest.stage, StageExpr::Ref(stage_param));
    }

    #[test]
    fn quotes_and_negative_literals() {
        let b = read_body("'@ft:' exit -1", "s").unwrap();
        assert_eq!(b.stage, StageExpr::var("ft"));
        assert_eq!(
            b.form,
            Form::Apply {
                callee: Term::var("exit"),
                args: vec![Term::Int(-1)]
            }
        );
    }

    #[test]
    fn last_argument_lambda_takes_rest() {
        let b = read_body("build 0 (x){ x } (F) merge F F k", "s").unwrap();
        let Form::Apply { args, .. } = &b.form else { panic!() };
        assert_eq!(args.len(), 3);
        let tail = args[2].as_lambda().unwrap();
        assert_eq!(tail.params, vec![Param::Named("F".into())]);
    }

    #[test]
    fn pack_and_splice() {
        let t = read_core("(!args, cont){ cont !args }").unwrap();
        let l = t.as_lambda().unwrap();
        assert!(l.params[0].is_pack());
        let Form::Apply { args, .. } = &l.body.form else { panic!() };
        assert_eq!(args[0], Term::Splice(Box::new(Term::var("args"))));
    }

    #[test]
    fn let_without_body_is_an_error() {
        let e = read_body("let [y] x 5", "s").unwrap_err();
        assert!(matches!(e, SyntaxError::UnboundSugar { .. }));
    }

    #[test]
    fn syntax_errors_carry_position() {
        let e = read_core("(x){\n  f ? }").unwrap_err();
        assert_eq!(
            e,
            SyntaxError::At {
                line: 2,
                col: 5,
                msg: "unexpected character `?`".into()
            }
        );
    }

    #[test]
    fn body_prefix_stops_at_unmatched_brace() {
        let text = "{ f x } rest";
        let (_, end) = read_body_prefix(text, 1, "p").unwrap();
        assert_eq!(&text[end..], "} rest");
    }

    #[test]
    fn stage_expressions() {
        let b = read_body("@ltype & !rtype | never: k", "s").unwrap();
        assert_eq!(
            b.stage,
            StageExpr::Or(
                Box::new(StageExpr::And(
                    Box::new(StageExpr::var("ltype")),
                    Box::new(StageExpr::Not(Box::new(StageExpr::var("rtype"))))
                )),
                Box::new(StageExpr::Const(StageValue::Bottom))
            )
        );
    }
}
