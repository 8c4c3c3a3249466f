//! Per-language longest-match lexer. A language only knows its own literals
//! and the token classes its grammar mentions.

use crate::grammar::{Grammar, TokenClass};
use crate::parsegen::Terminal;
use crate::staged::Term;

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub terminal: Terminal,
    pub text: String,
    pub start: usize,
    pub end: usize,
}

impl Token {
    /// The value bound by a token-class term.
    pub fn value(&self) -> Term {
        match &self.terminal {
            Terminal::Class(TokenClass::Integer) => Term::Int(self.text.parse().unwrap_or(0)),
            Terminal::Class(TokenClass::String) => Term::Str(unescape(&self.text[1..self.text.len() - 1])),
            _ => Term::Str(self.text.clone()),
        }
    }
}

fn unescape(s: &str) -> String {
    let mut out = String::new();
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some('n') => out.push('\n'),
                Some('t') => out.push('\t'),
                Some(e) => out.push(e),
                None => {}
            }
        } else {
            out.push(c);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LexError {
    pub offset: usize,
    pub found: char,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LexSpec {
    pub literals: Vec<String>,
    pub classes: Vec<TokenClass>,
}

pub fn skip_trivia(text: &str, mut pos: usize) -> usize {
    let bytes = text.as_bytes();
    loop {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if text[pos..].starts_with("//") {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
        } else {
            return pos;
        }
    }
}

impl LexSpec {
    pub fn for_grammar(g: &Grammar) -> LexSpec {
        LexSpec {
            literals: g.literals(),
            classes: g.classes(),
        }
    }

    fn class_len(&self, class: TokenClass, rest: &str) -> usize {
        let mut chars = rest.char_indices();
        match class {
            TokenClass::Integer => rest.find(|c: char| !c.is_ascii_digit()).unwrap_or(rest.len()),
            TokenClass::Identifier => match chars.next() {
                Some((_, c)) if c.is_alphabetic() || c == '_' => rest
                    .find(|c: char| !(c.is_alphanumeric() || c == '_'))
                    .unwrap_or(rest.len()),
                _ => 0,
            },
            TokenClass::String => {
                if !rest.starts_with('"') {
                    return 0;
                }
                chars.next();
                let mut escaped = false;
                for (i, c) in chars {
                    match c {
                        _ if escaped => escaped = false,
                        '\\' => escaped = true,
                        '"' => return i + 1,
                        _ => {}
                    }
                }
                0
            }
        }
    }

    /// The token starting at or after `pos` (after whitespace and comments).
    /// Longest match wins; on equal length a literal beats a class.
    pub fn next_token(&self, text: &str, pos: usize) -> Result<Token, LexError> {
        let start = skip_trivia(text, pos);
        let rest = &text[start..];
        if rest.is_empty() {
            return Ok(Token {
                terminal: Terminal::Eoi,
                text: String::new(),
                start,
                end: start,
            });
        }
        let mut best: Option<(usize, Terminal)> = None;
        for l in &self.literals {
            if rest.starts_with(l.as_str()) && best.as_ref().is_none_or(|(n, _)| l.len() > *n) {
                best = Some((l.len(), Terminal::Literal(l.clone())));
            }
        }
        for c in &self.classes {
            let n = self.class_len(*c, rest);
            if n > 0 && best.as_ref().is_none_or(|(m, _)| n > *m) {
                best = Some((n, Terminal::Class(*c)));
            }
        }
        match best {
            Some((n, terminal)) => {
                if terminal == Terminal::Class(TokenClass::Integer) && rest[..n].parse::<i64>().is_err() {
                    return Err(LexError {
                        offset: start,
                        found: rest.chars().next().unwrap(),
                    });
                }
                Ok(Token {
                    terminal,
                    text: rest[..n].to_string(),
                    start,
                    end: start + n,
                })
            }
            None => Err(LexError {
                offset: start,
                found: rest.chars().next().unwrap(),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> LexSpec {
        LexSpec {
            literals: vec!["-".into(), "->".into(), "let".into()],
            classes: vec![TokenClass::Identifier, TokenClass::Integer],
        }
    }

    #[test]
    fn longest_match_and_keyword_ties() {
        let s = spec();
        let t = s.next_token("->x", 0).unwrap();
        assert_eq!(t.terminal, Terminal::Literal("->".into()));
        assert_eq!(s.next_token("let", 0).unwrap().terminal, Terminal::Literal("let".into()));
        assert_eq!(
            s.next_token("letter", 0).unwrap().terminal,
            Terminal::Class(TokenClass::Identifier)
        );
        let n = s.next_token("  // note\n 42", 0).unwrap();
        assert_eq!((n.value(), n.start), (Term::Int(42), 11));
        assert_eq!(s.next_token("-5", 0).unwrap().terminal, Terminal::Literal("-".into()));
        assert_eq!(s.next_token("   ", 0).unwrap().terminal, Terminal::Eoi);
        assert_eq!(s.next_token("#", 0), Err(LexError { offset: 0, found: '#' }));
    }

    #[test]
    fn strings_unescape() {
        let s = LexSpec {
            literals: vec![],
            classes: vec![TokenClass::String],
        };
        let t = s.next_token(r#""a\"b""#, 0).unwrap();
        assert_eq!(t.value(), Term::Str("a\"b".into()));
    }
}
