//! Prints an expanded grammar in the file notation. The output reads back to
//! the same grammar.

use super::model::*;

pub fn print_grammar(g: &Grammar) -> String {
    let mut out = format!("grammar {} {{\n", g.name);
    for p in &g.productions {
        let entry = g.rules[&p.head].entry;
        out.push_str("    ");
        out.push_str(&print_production(p, entry));
        out.push('\n');
    }
    out.push_str("}\n");
    out
}

pub fn print_production(p: &Production, entry: bool) -> String {
    let mut s = String::new();
    if entry {
        s.push_str("entry ");
    }
    s.push_str(&with_io(&p.head, &p.ins, &p.outs));
    s.push_str(" ::=");
    if p.body.is_empty() {
        s.push_str(" epsilon");
    }
    let syms: Vec<String> = p.body.iter().map(print_symbol).collect();
    let width = s.len() + syms.iter().map(|x| x.len() + 1).sum::<usize>();
    let long = width > LINE_WIDTH || syms.iter().any(|x| x.contains('\n'));
    for sym in &syms {
        if long {
            s.push_str("\n        ");
            s.push_str(&sym.replace('\n', "\n        "));
        } else {
            s.push(' ');
            s.push_str(sym);
        }
    }
    s.push(';');
    s
}

const LINE_WIDTH: usize = 96;

/// Re-indents a multi-line action body relative to its least indented line.
fn layout_body(text: &str) -> String {
    let mut lines = text.lines();
    let first = lines.next().unwrap_or_default();
    let rest: Vec<&str> = lines.collect();
    let indent = rest
        .iter()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.len() - l.trim_start().len())
        .min()
        .unwrap_or(0);
    let mut out = format!("{{\n    {first}");
    for l in rest {
        out.push('\n');
        if !l.trim().is_empty() {
            out.push_str("    ");
            out.push_str(&l[indent..]);
        }
    }
    out.push_str("\n}");
    out
}

pub fn print_symbol(sym: &Symbol) -> String {
    match sym {
        Symbol::Literal(l) => crate::staged::printer::quote_str(l),
        Symbol::Class { class, out } => format!("{}|->({out})|", class.name()),
        Symbol::Rule { name, ins, outs } => with_io(name, ins, outs),
        Symbol::Foreign { lang, entry, ins, outs } => with_io(&format!("{lang}.{entry}"), ins, outs),
        Symbol::Action(a) => match &a.code {
            ActionCode::Forward => with_io("epsilon", &a.ins, &a.outs),
            ActionCode::Lambda { params, text, .. } => {
                let mut s = format!("|{}->{}|", list(&a.ins), list(&a.outs));
                if params != &a.ins {
                    s.push(' ');
                    s.push_str(&list(params));
                }
                if text.is_empty() {
                    s.push_str(" { }");
                } else if text.contains('\n') {
                    s.push(' ');
                    s.push_str(&layout_body(text));
                } else {
                    s.push_str(&format!(" {{ {text} }}"));
                }
                s
            }
        },
    }
}

fn list(names: &[String]) -> String {
    format!("({})", names.join(", "))
}

fn with_io(name: &str, ins: &[String], outs: &[String]) -> String {
    let mut s = String::new();
    if !ins.is_empty() {
        s.push_str(&format!("|{}->|", list(ins)));
    }
    s.push_str(name);
    if !outs.is_empty() {
        s.push_str(&format!("|->{}|", list(outs)));
    }
    s
}
