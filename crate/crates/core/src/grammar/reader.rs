//! Reader for grammar files.
//!
//! ```text
//! function lassoc<elem, op, action> {
//!     alias |v| = |elem:out|;
//!     N|->(v)| ::= elem|->(v)| |(v)->|R|->(v)|;
//!     ...
//!     return N;
//! }
//! grammar MinusDiv {
//!     entry Expr|->(v)| ::= Diff|->(v)|;
//!     Diff|->(v)| ::= lassoc<Quotient, "-", |(l,r)->(v)| { "l-r" (d) return d }>;
//! }
//! ```

use std::collections::VecDeque;

use super::error::GrammarError;
use super::model::*;
use crate::staged::error::line_col;
use crate::staged::{read_body_prefix, Param, Term};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    Punct(&'static str),
    Other(char),
}

const PUNCT: [&str; 15] = [
    "::=", "->", "|", "(", ")", ",", ";", "<", ">", "{", "}", ".", ":", "=", "!",
];

pub fn read_grammar_file(text: &str) -> Result<GrammarDef, GrammarError> {
    let mut r = Reader {
        text,
        pos: 0,
        buf: VecDeque::new(),
    };
    let mut def = GrammarDef::default();
    while let Some(t) = r.peek(0) {
        match t {
            Tok::Ident(k) if k == "function" => def.templates.push(r.template()?),
            Tok::Ident(k) if k == "grammar" => def.grammars.push(r.grammar()?),
            _ => return Err(r.err("expected `function` or `grammar`")),
        }
    }
    Ok(def)
}

/// Reads the `|(ins)->(outs)| { body }` text of a single action.
pub fn read_action(text: &str) -> Result<ActionDef, GrammarError> {
    let mut r = Reader {
        text,
        pos: 0,
        buf: VecDeque::new(),
    };
    r.expect("|")?;
    let ins = r.paren_names()?;
    r.expect("->")?;
    let a = r.action_rest(ins)?;
    if r.peek(0).is_some() {
        return Err(r.err("trailing input after action"));
    }
    Ok(a)
}

struct Reader<'a> {
    text: &'a str,
    pos: usize,
    buf: VecDeque<(Tok, usize, usize)>,
}

impl<'a> Reader<'a> {
    fn err(&mut self, msg: impl Into<String>) -> GrammarError {
        let at = self.peek_offset();
        let (line, col) = line_col(self.text, at);
        GrammarError::Syntax {
            line,
            col,
            msg: msg.into(),
        }
    }

    fn skip_trivia(&mut self) {
        let bytes = self.text.as_bytes();
        loop {
            while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.text[self.pos..].starts_with("//") {
                while self.pos < bytes.len() && bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                return;
            }
        }
    }

    fn lex(&mut self) -> Option<(Tok, usize, usize)> {
        self.skip_trivia();
        let start = self.pos;
        let rest = &self.text[start..];
        let c = rest.chars().next()?;
        if c.is_alphanumeric() || c == '_' {
            let len = rest
                .find(|ch: char| !(ch.is_alphanumeric() || ch == '_'))
                .unwrap_or(rest.len());
            self.pos += len;
            return Some((Tok::Ident(rest[..len].to_string()), start, self.pos));
        }
        if c == '"' {
            let mut out = String::new();
            let mut chars = rest.char_indices().skip(1);
            while let Some((i, ch)) = chars.next() {
                match ch {
                    '"' => {
                        self.pos += i + 1;
                        return Some((Tok::Str(out), start, self.pos));
                    }
                    '\\' => match chars.next() {
                        Some((_, 'n')) => out.push('\n'),
                        Some((_, 't')) => out.push('\t'),
                        Some((_, e)) => out.push(e),
                        None => break,
                    },
                    _ => out.push(ch),
                }
            }
            self.pos = self.text.len();
            return Some((Tok::Other('"'), start, self.pos));
        }
        for p in PUNCT {
            if rest.starts_with(p) {
                self.pos += p.len();
                return Some((Tok::Punct(p), start, self.pos));
            }
        }
        self.pos += c.len_utf8();
        Some((Tok::Other(c), start, self.pos))
    }

    fn fill(&mut self, n: usize) {
        while self.buf.len() <= n {
            match self.lex() {
                Some(t) => self.buf.push_back(t),
                None => return,
            }
        }
    }

    fn peek(&mut self, n: usize) -> Option<Tok> {
        self.fill(n);
        self.buf.get(n).map(|t| t.0.clone())
    }

    fn peek_offset(&mut self) -> usize {
        self.fill(0);
        self.buf.front().map_or(self.text.len(), |t| t.1)
    }

    fn next(&mut self) -> Option<(Tok, usize, usize)> {
        self.fill(0);
        self.buf.pop_front()
    }

    fn is(&mut self, n: usize, p: &str) -> bool {
        matches!(self.peek(n), Some(Tok::Punct(q)) if q == p)
    }

    fn is_word(&mut self, n: usize, w: &str) -> bool {
        matches!(self.peek(n), Some(Tok::Ident(q)) if q == w)
    }

    fn expect(&mut self, p: &str) -> Result<usize, GrammarError> {
        if self.is(0, p) {
            Ok(self.next().unwrap().2)
        } else {
            Err(self.err(format!("expected `{p}`")))
        }
    }

    fn ident(&mut self) -> Result<String, GrammarError> {
        match self.peek(0) {
            Some(Tok::Ident(s)) => {
                self.next();
                Ok(s)
            }
            _ => Err(self.err("expected a name")),
        }
    }

    fn word(&mut self, w: &str) -> Result<(), GrammarError> {
        if self.is_word(0, w) {
            self.next();
            Ok(())
        } else {
            Err(self.err(format!("expected `{w}`")))
        }
    }

    fn line(&mut self) -> usize {
        let at = self.peek_offset();
        line_col(self.text, at).0
    }

    fn template(&mut self) -> Result<Template, GrammarError> {
        self.word("function")?;
        let name = self.ident()?;
        self.expect("<")?;
        let mut params = vec![self.ident()?];
        while self.is(0, ",") {
            self.next();
            params.push(self.ident()?);
        }
        self.expect(">")?;
        self.expect("{")?;
        let mut aliases = Vec::new();
        let mut productions = Vec::new();
        loop {
            if self.is_word(0, "alias") {
                self.next();
                self.expect("|")?;
                let a = self.ident()?;
                self.expect("|")?;
                self.expect("=")?;
                self.expect("|")?;
                let q = self.query_rest()?;
                self.expect(";")?;
                aliases.push((a, q));
            } else if self.is_word(0, "return") {
                self.next();
                let ret = self.ident()?;
                self.expect(";")?;
                self.expect("}")?;
                return Ok(Template {
                    name,
                    params,
                    aliases,
                    productions,
                    ret,
                });
            } else {
                productions.push(self.production()?);
            }
        }
    }

    fn grammar(&mut self) -> Result<GrammarSource, GrammarError> {
        self.word("grammar")?;
        let name = self.ident()?;
        self.expect("{")?;
        let mut productions = Vec::new();
        while !self.is(0, "}") {
            if self.peek(0).is_none() {
                return Err(self.err("unterminated grammar"));
            }
            productions.push(self.production()?);
        }
        self.next();
        Ok(GrammarSource { name, productions })
    }

    fn production(&mut self) -> Result<ProductionDef, GrammarError> {
        let line = self.line();
        let entry = if self.is_word(0, "entry") {
            self.next();
            true
        } else {
            false
        };
        let mut ins = Vec::new();
        if self.is(0, "|") {
            self.next();
            ins = self.paren_names()?;
            self.expect("->")?;
            self.expect("|")?;
        }
        let head = self.ident()?;
        let outs = self.out_suffix()?.unwrap_or_default();
        self.expect("::=")?;
        let mut body = Vec::new();
        if self.is_word(0, "epsilon") && self.is(1, ";") {
            self.next();
        } else {
            while !self.is(0, ";") {
                if self.peek(0).is_none() {
                    return Err(self.err("expected `;`"));
                }
                body.push(self.item()?);
            }
        }
        self.expect(";")?;
        Ok(ProductionDef {
            head,
            ins,
            outs,
            body,
            entry,
            line,
        })
    }

    /// `|->(names)|` after a term or head.
    fn out_suffix(&mut self) -> Result<Option<Vec<NameItem>>, GrammarError> {
        if self.is(0, "|") && self.is(1, "->") {
            self.next();
            self.next();
            let outs = self.paren_names()?;
            self.expect("|")?;
            Ok(Some(outs))
        } else {
            Ok(None)
        }
    }

    fn paren_names(&mut self) -> Result<Vec<NameItem>, GrammarError> {
        self.expect("(")?;
        let mut out = Vec::new();
        if self.is(0, ")") {
            self.next();
            return Ok(out);
        }
        loop {
            out.push(self.name_item()?);
            if self.is(0, ",") {
                self.next();
            } else {
                self.expect(")")?;
                return Ok(out);
            }
        }
    }

    fn name_item(&mut self) -> Result<NameItem, GrammarError> {
        if self.is(0, "|") {
            self.next();
            return self.query_rest();
        }
        let n = self.ident()?;
        if self.is(0, ".") {
            self.next();
            let tuple = self.ident()?;
            return Ok(NameItem::Prefixed { prefix: n, tuple });
        }
        Ok(NameItem::Name(n))
    }

    /// `term:in|` or `term:out|`, after the opening bar.
    fn query_rest(&mut self) -> Result<NameItem, GrammarError> {
        let term = self.ident()?;
        self.expect(":")?;
        let dir = match self.ident()?.as_str() {
            "in" => Dir::In,
            "out" => Dir::Out,
            _ => return Err(self.err("expected `in` or `out`")),
        };
        self.expect("|")?;
        Ok(NameItem::Query { term, dir })
    }

    fn item(&mut self) -> Result<Item, GrammarError> {
        match self.peek(0) {
            Some(Tok::Str(s)) => {
                self.next();
                Ok(Item::Literal(s))
            }
            Some(Tok::Punct("|")) => {
                self.next();
                let ins = self.paren_names()?;
                self.expect("->")?;
                if self.is(0, "(") {
                    return Ok(Item::Action(self.action_rest(ins)?));
                }
                self.expect("|")?;
                self.named_item(Some(ins))
            }
            Some(Tok::Ident(_)) => self.named_item(None),
            _ => Err(self.err("expected a grammar term")),
        }
    }

    fn named_item(&mut self, ins: Option<Vec<NameItem>>) -> Result<Item, GrammarError> {
        if self.is(0, "!") {
            self.next();
        }
        let name = self.ident()?;
        if self.is(0, ".") {
            self.next();
            let entry = self.ident()?;
            let outs = self.out_suffix()?;
            return Ok(Item::Foreign {
                lang: name,
                entry,
                ins,
                outs,
            });
        }
        if self.is(0, "<") {
            self.next();
            let mut args = vec![self.call_arg()?];
            while self.is(0, ",") {
                self.next();
                args.push(self.call_arg()?);
            }
            self.expect(">")?;
            let outs = self.out_suffix()?;
            return Ok(Item::Call {
                template: name,
                args,
                ins,
                outs,
            });
        }
        let outs = self.out_suffix()?;
        Ok(Item::Ident { name, ins, outs })
    }

    fn call_arg(&mut self) -> Result<CallArg, GrammarError> {
        match self.peek(0) {
            Some(Tok::Str(s)) => {
                self.next();
                Ok(CallArg::Literal(s))
            }
            Some(Tok::Ident(w)) if w == "epsilon" => {
                self.next();
                Ok(CallArg::Epsilon)
            }
            Some(Tok::Ident(w)) => {
                self.next();
                Ok(CallArg::Name(w))
            }
            Some(Tok::Punct("(")) => Ok(CallArg::Tuple(self.paren_names()?)),
            Some(Tok::Punct("|")) => {
                self.next();
                let ins = self.paren_names()?;
                self.expect("->")?;
                Ok(CallArg::Action(self.action_rest(ins)?))
            }
            _ => Err(self.err("expected a template argument")),
        }
    }

    /// After `|(ins)->`: `(outs)| [(params)] { body }`.
    fn action_rest(&mut self, ins: Vec<NameItem>) -> Result<ActionDef, GrammarError> {
        let outs = self.paren_names()?;
        self.expect("|")?;
        let params = if self.is(0, "(") {
            let ps = self.paren_names()?;
            let mut names = Vec::new();
            for p in ps {
                match p {
                    NameItem::Name(n) => names.push(n),
                    _ => return Err(self.err("action parameters must be plain names")),
                }
            }
            names
        } else {
            let mut names = Vec::new();
            for p in &ins {
                match p {
                    NameItem::Name(n) => names.push(n.clone()),
                    NameItem::Prefixed { prefix, tuple } => names.push(format!("{prefix}_{tuple}")),
                    NameItem::Query { .. } => {
                        return Err(self.err("an action with computed inputs needs explicit parameters"))
                    }
                }
            }
            names
        };
        if self.peek(0) != Some(Tok::Punct("{")) {
            return Err(self.err("expected `{` to start an action"));
        }
        let open_end = self.next().unwrap().2;
        self.buf.clear();
        let (body, end) = read_body_prefix(self.text, open_end, "parse")?;
        let text = self.text[open_end..end].trim().to_string();
        self.pos = end;
        self.expect("}")?;
        let mut lparams: Vec<Param> = params.iter().map(|p| Param::Named(p.clone())).collect();
        lparams.push(Param::Named("return".into()));
        let term = Term::lambda(lparams, "parse", body);
        Ok(ActionDef {
            ins,
            outs,
            code: ActionCode::Lambda { term, params, text },
        })
    }
}
