//! Recursive-descent executor driven by the LL(1) tables. Actions run as
//! soon as the parser reaches them; values flow between terms through the
//! attribute names of each production.

use std::collections::HashMap;

use super::lexer::{LexError, Token};
use super::{Language, LanguageDef, Registry, RuntimeError};
use crate::grammar::{ActionCode, Symbol};
use crate::parsegen::Terminal;
use crate::staged::error::line_col;
use crate::staged::{print_value, read_body_prefix, Machine, Param, Term};

pub struct Session<'r> {
    reg: &'r Registry,
    text: &'r str,
    pub machine: Machine,
    pos: usize,
    look: Option<(String, Result<Token, LexError>)>,
    /// Start offset of every consumed token, in consumption order.
    pub cursor_log: Vec<usize>,
}

impl<'r> Session<'r> {
    pub fn new(reg: &'r Registry, text: &'r str, machine: Machine) -> Self {
        Session {
            reg,
            text,
            machine,
            pos: 0,
            look: None,
            cursor_log: Vec::new(),
        }
    }

    pub fn cursor(&self) -> usize {
        self.pos
    }

    fn note(&mut self, line: impl FnOnce() -> String) {
        self.machine.note(line);
    }

    /// Parses the whole input from `entry` (default: the first entry rule)
    /// of `lang`, passing `args` to it, and returns the entry's outputs.
    pub fn parse(&mut self, lang: &str, entry: Option<&str>, args: Vec<Term>) -> Result<Vec<Term>, RuntimeError> {
        let language = self.reg.language(lang)?;
        let rule = match entry {
            Some(e) => language
                .grammar
                .rule(e)
                .filter(|r| r.entry)
                .ok_or_else(|| RuntimeError::UnknownEntry {
                    lang: lang.to_string(),
                    entry: e.to_string(),
                })?,
            None => language.grammar.entries().next().expect("validated grammar has an entry"),
        };
        if rule.ins.len() != args.len() {
            return Err(RuntimeError::Arity {
                what: format!("arguments of {lang}.{}", rule.name),
                expected: rule.ins.len(),
                got: args.len(),
            });
        }
        let name = rule.name.clone();
        let out = self.rule(lang, &name, args, false)?;
        let tok = self.peek(lang)?;
        if tok.terminal != Terminal::Eoi {
            return Err(self.unexpected(lang, &tok, vec![Terminal::Eoi]));
        }
        Ok(out)
    }

    fn peek(&mut self, lang: &str) -> Result<Token, RuntimeError> {
        let t = self.peek_raw(lang);
        t.map_err(|e| self.lex_error(lang, &e))
    }

    fn peek_raw(&mut self, lang: &str) -> Result<Token, LexError> {
        if let Some((l, t)) = &self.look {
            if l == lang {
                return t.clone();
            }
        }
        let t = self.reg.language(lang).expect("registered").lex.next_token(self.text, self.pos);
        self.look = Some((lang.to_string(), t.clone()));
        t
    }

    fn consume(&mut self, tok: &Token) {
        debug_assert!(tok.start >= self.pos);
        self.cursor_log.push(tok.start);
        self.pos = tok.end;
        self.look = None;
        self.note(|| format!("token {} {:?} @{}", tok.terminal, tok.text, tok.start));
    }

    fn lex_error(&self, lang: &str, e: &LexError) -> RuntimeError {
        let (line, col) = line_col(self.text, e.offset);
        RuntimeError::Lex {
            lang: lang.to_string(),
            line,
            col,
            found: e.found,
        }
    }

    fn unexpected(&self, lang: &str, tok: &Token, expected: Vec<Terminal>) -> RuntimeError {
        let (line, col) = line_col(self.text, tok.start);
        let mut expected: Vec<String> = expected.iter().map(|t| t.to_string()).collect();
        expected.sort();
        expected.dedup();
        let found = match tok.terminal {
            Terminal::Eoi => "end of input".to_string(),
            _ => format!("{} {:?}", tok.terminal, tok.text),
        };
        RuntimeError::UnexpectedToken {
            lang: lang.to_string(),
            line,
            col,
            found,
            expected,
        }
    }

    fn predict(&mut self, l: &Language, lang: &str, rule: &str, foreign: bool) -> Result<usize, RuntimeError> {
        let tok = self.peek_raw(lang);
        if let Ok(t) = &tok {
            if let Some(p) = l.table.predict(rule, &t.terminal) {
                return Ok(p);
            }
        }
        if let Some(p) = l.table.foreign_alternative(rule) {
            return Ok(p);
        }
        if foreign {
            if let Some(p) = l.table.predict(rule, &Terminal::Eoi) {
                return Ok(p);
            }
        }
        match tok {
            Ok(t) => Err(self.unexpected(lang, &t, l.table.expected(rule))),
            Err(e) => Err(self.lex_error(lang, &e)),
        }
    }

    /// In a language entered through a foreign term, input the language does
    /// not understand ends it.
    fn expect_token(&mut self, lang: &str, want: &Terminal, foreign: bool) -> Result<Token, RuntimeError> {
        match self.peek_raw(lang) {
            Ok(t) if &t.terminal == want => {
                self.consume(&t);
                Ok(t)
            }
            Ok(t) => Err(self.unexpected(lang, &t, vec![want.clone()])),
            Err(e) if foreign => {
                let (line, col) = line_col(self.text, e.offset);
                Err(RuntimeError::UnexpectedToken {
                    lang: lang.to_string(),
                    line,
                    col,
                    found: "end of input".into(),
                    expected: vec![want.to_string()],
                })
            }
            Err(e) => Err(self.lex_error(lang, &e)),
        }
    }

    fn rule(&mut self, lang: &str, name: &str, args: Vec<Term>, foreign: bool) -> Result<Vec<Term>, RuntimeError> {
        let reg = self.reg;
        let l = reg.language(lang)?;
        let rule = &l.grammar.rules[name];
        let pid = self.predict(l, lang, name, foreign)?;
        let prod = l.grammar.production(pid);
        self.note(|| format!("enter {lang}.{name} #{pid}"));
        let mut frame: HashMap<&str, Term> = rule.ins.iter().map(|s| s.as_str()).zip(args).collect();
        let get = |frame: &HashMap<&str, Term>, ns: &[String]| -> Vec<Term> {
            ns.iter().map(|n| frame[n.as_str()].clone()).collect()
        };
        for sym in &prod.body {
            match sym {
                Symbol::Literal(lit) => {
                    self.expect_token(lang, &Terminal::Literal(lit.clone()), foreign)?;
                }
                Symbol::Class { class, out } => {
                    let t = self.expect_token(lang, &Terminal::Class(*class), foreign)?;
                    frame.insert(out, t.value());
                }
                Symbol::Rule { name: r, ins, outs } => {
                    let vals = self.rule(lang, r, get(&frame, ins), foreign)?;
                    frame.extend(outs.iter().map(|s| s.as_str()).zip(vals));
                }
                Symbol::Foreign {
                    lang: other,
                    entry,
                    ins,
                    outs,
                } => {
                    let at = self.pos;
                    self.note(|| format!("switch {lang} -> {other}.{entry} @{at}"));
                    self.look = None;
                    let vals = self.foreign(other, entry, get(&frame, ins))?;
                    self.look = None;
                    let at = self.pos;
                    self.note(|| format!("switch {other} -> {lang} @{at}"));
                    if vals.len() != outs.len() {
                        return Err(RuntimeError::Arity {
                            what: format!("outputs of {other}.{entry}"),
                            expected: outs.len(),
                            got: vals.len(),
                        });
                    }
                    frame.extend(outs.iter().map(|s| s.as_str()).zip(vals));
                }
                Symbol::Action(a) => {
                    let vals = get(&frame, &a.ins);
                    let res = match &a.code {
                        ActionCode::Forward => vals[vals.len() - a.outs.len()..].to_vec(),
                        ActionCode::Lambda { term, .. } => self.machine.apply_value(term, vals.clone())?,
                    };
                    if res.len() != a.outs.len() {
                        return Err(RuntimeError::Arity {
                            what: format!("outputs of an action in `{name}` (production {pid})"),
                            expected: a.outs.len(),
                            got: res.len(),
                        });
                    }
                    if self.machine.trace.is_some() {
                        let show = |ts: &[Term], m: &Machine| {
                            ts.iter().map(|t| print_value(t, Some(&m.heap))).collect::<Vec<_>>().join(", ")
                        };
                        let line = format!(
                            "action {name} #{pid} ({}) => ({})",
                            show(&vals, &self.machine),
                            show(&res, &self.machine)
                        );
                        self.note(|| line);
                    }
                    frame.extend(a.outs.iter().map(|s| s.as_str()).zip(res));
                }
            }
        }
        Ok(get(&frame, &prod.outs))
    }

    fn foreign(&mut self, lang: &str, entry: &str, args: Vec<Term>) -> Result<Vec<Term>, RuntimeError> {
        let (want, _) = self.reg.entry_signature(lang, entry)?;
        if want != args.len() {
            return Err(RuntimeError::Arity {
                what: format!("arguments of {lang}.{entry}"),
                expected: want,
                got: args.len(),
            });
        }
        match self.reg.get(lang)? {
            LanguageDef::Core => self.core_body(&args[0]).map(|t| vec![t]),
            LanguageDef::Grammar(_) => self.rule(lang, entry, args, true),
        }
    }

    fn core_body(&mut self, params: &Term) -> Result<Term, RuntimeError> {
        let names: Vec<String> = match params {
            Term::Tuple(items) => items.iter().map(param_name).collect::<Result<_, _>>()?,
            other => vec![param_name(other)?],
        };
        let start = super::lexer::skip_trivia(self.text, self.pos);
        let (body, end) = read_body_prefix(self.text, start, "code").map_err(RuntimeError::CoreSyntax)?;
        self.cursor_log.push(start);
        self.pos = end;
        self.note(|| format!("core body @{start}..{end}"));
        Ok(Term::lambda(names.into_iter().map(Param::Named).collect(), "code", body))
    }
}

fn param_name(t: &Term) -> Result<String, RuntimeError> {
    match t {
        Term::Str(s) => Ok(s.clone()),
        other => Err(RuntimeError::Eval(crate::staged::EvalError::PrimTypeError(format!(
            "Core.Body expects parameter names, got {}",
            print_value(other, None)
        )))),
    }
}
