use std::collections::{BTreeSet, HashMap};

use proptest::prelude::*;

use metamorph::engine::{self, Options};
use metamorph::grammar::{load_grammar, ActionCode, Grammar, Symbol};
use metamorph::packs::{bundled, bundled_dir, Pack};
use metamorph::parsegen::{analyze, build_table, Terminal};
use metamorph::runtime::Registry;
use metamorph::staged::{
    alpha_eq, eval_stage, print_term, read_core, read_program, Machine, StageExpr, StageValue, Term,
};

fn bundled_grammars() -> Vec<Grammar> {
    let mut out = Vec::new();
    for dir in bundled() {
        let pack = Pack::load(&dir).unwrap();
        for g in &pack.manifest.grammars {
            let text = std::fs::read_to_string(dir.join(g)).unwrap();
            out.push(load_grammar(&text, None).unwrap());
        }
    }
    for f in ["stack_args.grammar", "env_lassoc.grammar", "ambiguous.grammar"] {
        let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(f);
        out.push(load_grammar(&std::fs::read_to_string(path).unwrap(), None).unwrap());
    }
    out
}

/// Residual listings are terms; `.core` files are programs.
fn core_sources() -> Vec<Term> {
    let mut out = Vec::new();
    for dir in bundled() {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            let text = || std::fs::read_to_string(&p).unwrap();
            match p.extension().and_then(|x| x.to_str()) {
                Some("core") => out.push(read_program(&text()).unwrap()),
                Some("residual") => out.push(read_core(&text()).unwrap()),
                _ => {}
            }
        }
    }
    out
}

// Stage algebra

fn sv(b: bool) -> StageValue {
    if b {
        StageValue::Top
    } else {
        StageValue::Bottom
    }
}

#[test]
fn stage_connectives_on_two_values() {
    for a in [false, true] {
        assert_eq!(sv(a).not(), sv(!a));
        for b in [false, true] {
            assert_eq!(sv(a).and(sv(b)), sv(a && b));
            assert_eq!(sv(a).or(sv(b)), sv(a || b));
            let c = |x| Box::new(StageExpr::Const(sv(x)));
            assert_eq!(eval_stage(&StageExpr::And(c(a), c(b)), &[]).unwrap(), Some(sv(a && b)));
            assert_eq!(eval_stage(&StageExpr::Or(c(a), c(b)), &[]).unwrap(), Some(sv(a || b)));
            assert_eq!(eval_stage(&StageExpr::Not(c(a)), &[]).unwrap(), Some(sv(!a)));
        }
    }
}

/// Strong Kleene tables with `None` as unknown.
fn kleene_and(a: Option<bool>, b: Option<bool>) -> Option<bool> {
    match (a, b) {
        (Some(false), _) | (_, Some(false)) => Some(false),
        (Some(true), Some(true)) => Some(true),
        _ => None,
    }
}

#[test]
fn symbolic_stages_follow_kleene_logic() {
    let vals = [Some(false), Some(true), None];
    let leaf = |v: Option<bool>| match v {
        Some(b) => StageExpr::Const(sv(b)),
        None => StageExpr::var("s"),
    };
    let scope = vec!["s".to_string()];
    for a in vals {
        let not = eval_stage(&StageExpr::Not(Box::new(leaf(a))), &scope).unwrap();
        assert_eq!(not, a.map(|x| sv(!x)));
        for b in vals {
            let and = StageExpr::And(Box::new(leaf(a)), Box::new(leaf(b)));
            assert_eq!(eval_stage(&and, &scope).unwrap(), kleene_and(a, b).map(sv));
            let or = StageExpr::Or(Box::new(leaf(a)), Box::new(leaf(b)));
            let want = kleene_and(a.map(|x| !x), b.map(|x| !x)).map(|x| !x);
            assert_eq!(eval_stage(&or, &scope).unwrap(), want.map(sv));
        }
    }
}

fn stage_expr() -> impl Strategy<Value = StageExpr> {
    let leaf = prop_oneof![
        Just(StageExpr::Const(StageValue::Top)),
        Just(StageExpr::Const(StageValue::Bottom)),
        (0..3usize).prop_map(|i| StageExpr::var(["a", "b", "c"][i])),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(l, r)| StageExpr::And(Box::new(l), Box::new(r))),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| StageExpr::Or(Box::new(l), Box::new(r))),
            inner.prop_map(|e| StageExpr::Not(Box::new(e))),
        ]
    })
}

fn bind(e: &StageExpr, env: &HashMap<&str, bool>) -> StageExpr {
    match e {
        StageExpr::Ref(n) => StageExpr::Const(sv(env[n.as_str()])),
        StageExpr::And(l, r) => StageExpr::And(Box::new(bind(l, env)), Box::new(bind(r, env))),
        StageExpr::Or(l, r) => StageExpr::Or(Box::new(bind(l, env)), Box::new(bind(r, env))),
        StageExpr::Not(x) => StageExpr::Not(Box::new(bind(x, env))),
        c => c.clone(),
    }
}

fn truth(e: &StageExpr, env: &HashMap<&str, bool>) -> bool {
    match e {
        StageExpr::Const(v) => v.is_top(),
        StageExpr::Ref(n) => env[n.as_str()],
        StageExpr::And(l, r) => truth(l, env) && truth(r, env),
        StageExpr::Or(l, r) => truth(l, env) || truth(r, env),
        StageExpr::Not(x) => !truth(x, env),
    }
}

proptest! {
    #[test]
    fn stage_evaluation_and_simplification_agree_with_boolean_logic(
        e in stage_expr(), a: bool, b: bool, c: bool
    ) {
        let env: HashMap<&str, bool> = [("a", a), ("b", b), ("c", c)].into_iter().collect();
        let want = Some(sv(truth(&e, &env)));
        prop_assert_eq!(eval_stage(&bind(&e, &env), &[]).unwrap(), want);
        prop_assert_eq!(eval_stage(&bind(&e.clone().simplify(), &env), &[]).unwrap(), want);
    }

    #[test]
    fn known_symbolic_stages_stay_known(e in stage_expr(), a: bool) {
        // A stage that is decided with `b` and `c` unknown is decided the same way for every value of them.
        let scope = vec!["b".to_string(), "c".to_string()];
        let partial = bind_some(&e, "a", a);
        if let Some(v) = eval_stage(&partial, &scope).unwrap() {
            for (b, c) in [(false, false), (false, true), (true, false), (true, true)] {
                let env: HashMap<&str, bool> = [("a", a), ("b", b), ("c", c)].into_iter().collect();
                prop_assert_eq!(sv(truth(&e, &env)), v);
            }
        }
    }
}

fn bind_some(e: &StageExpr, name: &str, val: bool) -> StageExpr {
    match e {
        StageExpr::Ref(n) if n == name => StageExpr::Const(sv(val)),
        StageExpr::And(l, r) => StageExpr::And(Box::new(bind_some(l, name, val)), Box::new(bind_some(r, name, val))),
        StageExpr::Or(l, r) => StageExpr::Or(Box::new(bind_some(l, name, val)), Box::new(bind_some(r, name, val))),
        StageExpr::Not(x) => StageExpr::Not(Box::new(bind_some(x, name, val))),
        other => other.clone(),
    }
}

// Terms

#[test]
fn bundled_core_sources_round_trip() {
    let sources = core_sources();
    assert!(sources.len() >= 3);
    for t in sources {
        let printed = print_term(&t);
        let back = read_core(&printed).unwrap();
        assert!(alpha_eq(&t, &back), "{printed}");
        assert_eq!(print_term(&back), printed);
    }
}

#[test]
fn grammar_actions_round_trip() {
    let mut n = 0;
    for g in bundled_grammars() {
        for p in &g.productions {
            for s in &p.body {
                if let Symbol::Action(a) = s {
                    if let ActionCode::Lambda { term, .. } = &a.code {
                        let back = read_core(&print_term(term)).unwrap();
                        assert!(alpha_eq(term, &back), "{}", print_term(term));
                        n += 1;
                    }
                }
            }
        }
    }
    assert!(n > 20);
}

fn arith() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![(1i64..100).prop_map(|n| n.to_string()), Just("x".to_string())];
    leaf.prop_recursive(3, 16, 2, |inner| {
        (inner.clone(), prop_oneof![Just("+"), Just("-"), Just("*")], inner)
            .prop_map(|(l, op, r)| format!("({l}{op}{r})"))
    })
}

proptest! {
    #[test]
    fn random_programs_round_trip(e in arith(), f in arith()) {
        let src = format!("(x, k)[s]{{ @s: \"{e}\" (y)[s] \"{f}\" (z) k y z }}");
        let t = read_core(&src).unwrap();
        let back = read_core(&print_term(&t)).unwrap();
        prop_assert!(alpha_eq(&t, &back));
    }

    #[test]
    fn packed_parameters_take_the_middle(xs in proptest::collection::vec(-50i64..50, 2..8)) {
        // (a, !rest, b, k){ k b !rest a } swaps the first and last argument.
        let args: Vec<String> = xs.iter().map(|x| x.to_string()).collect();
        let outs: Vec<String> = (0..xs.len()).map(|i| format!("o{i}")).collect();
        let src = format!(
            "(a, !rest, b, k){{ k b !rest a }} {} ({}) return {}",
            args.join(" "), outs.join(", "), outs.join(" ")
        );
        let got = Machine::new().run_program(&read_program(&src).unwrap()).unwrap();
        let mut want: Vec<Term> = xs.iter().map(|x| Term::Int(*x)).collect();
        let last = want.len() - 1;
        want.swap(0, last);
        prop_assert_eq!(got, want);
    }

    #[test]
    fn merged_arity_is_sum_minus_one(a in 1usize..6, b in 0usize..6) {
        let frag = |n: usize| {
            let conts: Vec<String> = (1..=n).map(|i| format!("c{i}")).collect();
            let call = if n == 0 { "return 0".to_string() } else { "c1 !args".to_string() };
            format!("(!args{}){{ {call} }}", conts.iter().map(|c| format!(", {c}")).collect::<String>())
        };
        let src = format!("build {a} {} (F) build {b} {} (G) merge F G (H) arity H return", frag(a), frag(b));
        let got = Machine::new().run_program(&read_program(&src).unwrap()).unwrap();
        prop_assert_eq!(got, vec![Term::Int((a + b - 1) as i64)]);
    }
}

// Grammar analysis

fn terminal(s: &Symbol) -> Option<Terminal> {
    match s {
        Symbol::Literal(l) => Some(Terminal::Literal(l.clone())),
        Symbol::Class { class, .. } => Some(Terminal::Class(*class)),
        Symbol::Foreign { lang, entry, .. } => Some(Terminal::Foreign(lang.clone(), entry.clone())),
        _ => None,
    }
}

type Sets = HashMap<String, BTreeSet<Terminal>>;

/// Textbook fixpoint, kept independent of the library's implementation.
fn oracle(g: &Grammar) -> (HashMap<String, bool>, Sets, Sets) {
    let mut nullable: HashMap<String, bool> = g.rules.keys().map(|r| (r.clone(), false)).collect();
    let mut first: Sets = g.rules.keys().map(|r| (r.clone(), BTreeSet::new())).collect();
    let mut follow: Sets = g.rules.keys().map(|r| (r.clone(), BTreeSet::new())).collect();
    for r in g.rules.values().filter(|r| r.entry) {
        follow.get_mut(&r.name).unwrap().insert(Terminal::Eoi);
    }
    let seq = |syms: &[Symbol], nullable: &HashMap<String, bool>, first: &Sets| {
        let mut out = BTreeSet::new();
        for s in syms {
            match s {
                Symbol::Action(_) => continue,
                Symbol::Rule { name, .. } => {
                    out.extend(first[name].iter().cloned());
                    if !nullable[name] {
                        return (out, false);
                    }
                }
                t => {
                    out.insert(terminal(t).unwrap());
                    return (out, false);
                }
            }
        }
        (out, true)
    };
    let mut changed = true;
    while changed {
        changed = false;
        for p in &g.productions {
            let (f, n) = seq(&p.body, &nullable, &first);
            if n && !nullable[&p.head] {
                nullable.insert(p.head.clone(), true);
                changed = true;
            }
            let set = first.get_mut(&p.head).unwrap();
            let before = set.len();
            set.extend(f);
            changed |= set.len() != before;
        }
    }
    changed = true;
    while changed {
        changed = false;
        for p in &g.productions {
            for (i, s) in p.body.iter().enumerate() {
                let Symbol::Rule { name, .. } = s else { continue };
                let (mut f, n) = seq(&p.body[i + 1..], &nullable, &first);
                if n {
                    f.extend(follow[&p.head].iter().cloned());
                }
                let set = follow.get_mut(name).unwrap();
                let before = set.len();
                set.extend(f);
                changed |= set.len() != before;
            }
        }
    }
    (nullable, first, follow)
}

#[test]
fn first_and_follow_match_an_independent_fixpoint() {
    for g in bundled_grammars() {
        let a = analyze(&g);
        let (nullable, first, follow) = oracle(&g);
        for r in g.rules.keys() {
            assert_eq!(a.nullable[r], nullable[r], "{}.{r} nullable", g.name);
            assert_eq!(a.first[r], first[r], "{}.{r} first", g.name);
            assert_eq!(a.follow[r], follow[r], "{}.{r} follow", g.name);
        }
    }
}

#[test]
fn minusdiv_sets() {
    let text = std::fs::read_to_string(bundled_dir().join("minusdiv_immediate/minusdiv.grammar")).unwrap();
    let g = load_grammar(&text, None).unwrap();
    let a = analyze(&g);
    let minus: BTreeSet<_> = [Terminal::Literal("-".into())].into();
    let integer: BTreeSet<_> = [Terminal::Class(metamorph::grammar::TokenClass::Integer)].into();
    let eoi: BTreeSet<_> = [Terminal::Eoi].into();
    assert_eq!(a.first["R_diff"], minus);
    assert!(a.nullable["R_diff"]);
    assert_eq!(a.first["Diff"], integer);
    assert!(!a.nullable["Diff"]);
    assert_eq!(a.follow["R_diff"], eoi);
}

#[test]
fn actions_are_transparent_to_the_analysis() {
    for g in bundled_grammars() {
        let mut bare = g.clone();
        for p in &mut bare.productions {
            p.body.retain(|s| !matches!(s, Symbol::Action(_)));
        }
        let (a, b) = (analyze(&g), analyze(&bare));
        assert_eq!(a.first, b.first);
        assert_eq!(a.follow, b.follow);
        if let (Ok((_, t1)), Ok((_, t2))) = (build_table(&g), build_table(&bare)) {
            assert_eq!(t1.rows, t2.rows);
        }
    }
}

// Parsing

fn minusdiv() -> Registry {
    Pack::load(&bundled_dir().join("minusdiv_immediate")).unwrap().registry
}

fn token_soup() -> impl Strategy<Value = String> {
    proptest::collection::vec(prop_oneof![Just("1"), Just("42"), Just("-"), Just("/"), Just(" "), Just("x")], 0..12)
        .prop_map(|ts| ts.concat())
}

proptest! {
    #[test]
    fn the_cursor_never_moves_back(text in token_soup()) {
        let reg = minusdiv();
        let run = engine::parse_text(&reg, "MinusDiv", None, &text, vec![], &Options::default());
        for w in run.cursor_log.windows(2) {
            prop_assert!(w[0] < w[1], "{:?}", run.cursor_log);
        }
        prop_assert!(run.cursor_log.iter().all(|&c| c < text.len()));
    }
}

#[test]
fn runs_are_deterministic_for_a_seed() {
    let pack = Pack::load(&bundled_dir().join("minusdiv_codegen")).unwrap();
    let opts = Options {
        seed: 7,
        trace: true,
        ..Options::default()
    };
    let once = || {
        let mut run = engine::parse_text(&pack.registry, "MinusDiv", None, "9-8/4-1/1", vec![], &opts);
        let out = run.result.clone().unwrap();
        let p = engine::residual(&mut run.machine, &out).unwrap().unwrap();
        (run.trace().to_vec(), print_term(&p), p)
    };
    let (t1, p1, r1) = once();
    let (t2, p2, _) = once();
    assert_eq!(t1, t2);
    assert_eq!(p1, p2);
    let mut other = engine::parse_text(
        &pack.registry,
        "MinusDiv",
        None,
        "9-8/4-1/1",
        vec![],
        &Options {
            seed: 99,
            ..Options::default()
        },
    );
    let out = other.result.clone().unwrap();
    let r3 = engine::residual(&mut other.machine, &out).unwrap().unwrap();
    assert!(alpha_eq(&r1, &r3));
}
