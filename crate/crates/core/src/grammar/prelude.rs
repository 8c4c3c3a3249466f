//! Templates available to every grammar file.

pub const PRELUDE: &str = r#"
function lassoc<elem, op, action> {
    alias |v| = |elem:out|;
    N|->(v)| ::= elem|->(v)| |(v)->|R|->(v)|;
    |(v)->|R|->(v)| ::= epsilon;
    |(v)->|R|->(v)| ::= op elem|->(r.v)| |(v, r.v)->|action|->(v)| |(v)->|R|->(v)|;
    return N;
}

function rassoc<elem, op, action> {
    alias |v| = |elem:out|;
    N|->(v)| ::= elem|->(v)| |(v)->|R|->(v)|;
    |(v)->|R|->(v)| ::= epsilon;
    |(v)->|R|->(v)| ::= op elem|->(r.v)| |(r.v)->|R|->(r.v)| |(v, r.v)->|action|->(v)|;
    return N;
}
"#;
