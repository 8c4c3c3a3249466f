//! One line per acceptance criterion. Run with `--nocapture` to see them.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use metamorph::engine::{self, FailureKind, Options, Run};
use metamorph::grammar::{expand, load_grammar, print_grammar, read_grammar_file, ActionCode, Symbol};
use metamorph::packs::{bundled, bundled_dir, Pack};
use metamorph::parsegen::{build_table, ParseGenError};
use metamorph::runtime::{Registry, RuntimeError};
use metamorph::staged::names::base_name;
use metamorph::staged::{
    alpha_eq, eval_stage, print_term, print_value, read_core, read_program, Body, Form, Lambda, StageExpr,
    StageValue, Term,
};

type Check = Result<(), String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn pack(id: &str) -> Pack {
    Pack::load(&bundled_dir().join(id)).unwrap()
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn parse(p: &Pack, lang: &str, text: &str, opts: &Options) -> Run {
    engine::parse_text(&p.registry, lang, None, text, vec![], opts)
}

fn traced() -> Options {
    Options {
        trace: true,
        ..Options::default()
    }
}

fn residual_of(run: &mut Run) -> Result<Term, String> {
    let out = run.result.clone().map_err(|e| e.to_string())?;
    engine::residual(&mut run.machine, &out)
        .map_err(|e| e.to_string())?
        .ok_or_else(|| "no residual".to_string())
}

fn invoke(run: &mut Run, p: &Term, args: Vec<Term>) -> Result<Vec<Term>, String> {
    run.machine.apply_value(p, args).map_err(|e| e.to_string())
}

/// What a residual is made of.
#[derive(Default)]
struct Shape {
    stages: Vec<StageExpr>,
    stage_binders: HashSet<String>,
    /// Stage names of the function-time chain: `ft` binders and the prims continuing them.
    ft_chain: HashSet<String>,
    callees: Vec<String>,
    prims: Vec<String>,
}

impl Shape {
    fn of(t: &Term) -> Shape {
        let mut s = Shape::default();
        s.term(t);
        s
    }

    fn term(&mut self, t: &Term) {
        match t {
            Term::Lambda(l) => self.lambda(l),
            Term::Rec(r) => self.lambda(&r.lambda),
            Term::Tuple(items) => items.iter().for_each(|i| self.term(i)),
            Term::Splice(i) => self.term(i),
            _ => {}
        }
    }

    fn lambda(&mut self, l: &Lambda) {
        self.stage_binders.insert(l.stage.clone());
        if base_name(&l.stage) == "ft" {
            self.ft_chain.insert(l.stage.clone());
        }
        self.body(&l.body);
    }

    fn body(&mut self, b: &Body) {
        self.stages.push(b.stage.clone());
        match &b.form {
            Form::Apply { callee, args } => {
                if let Term::Var(n) = callee {
                    self.callees.push(base_name(n).to_string());
                }
                self.term(callee);
                args.iter().for_each(|a| self.term(a));
            }
            Form::Prim {
                expr, stage_param, rest, ..
            } => {
                self.prims.push(expr.render(&|n| base_name(n).to_string(), &|t| print_value(t, None)));
                self.stage_binders.insert(stage_param.clone());
                if matches!(&b.stage, StageExpr::Ref(r) if self.ft_chain.contains(r)) {
                    self.ft_chain.insert(stage_param.clone());
                }
                self.body(rest);
            }
            Form::Fix {
                stage_param, value, rest, ..
            } => {
                self.stage_binders.insert(stage_param.clone());
                self.term(value);
                self.body(rest);
            }
            Form::Halt => {}
        }
    }

    fn count(&self, callee: &str) -> usize {
        self.callees.iter().filter(|c| *c == callee).count()
    }

    /// Every body waits on a stage bound inside the residual and none on a build-time chain.
    fn only_function_time(&self) -> Check {
        for st in &self.stages {
            let mut refs = Vec::new();
            st.collect_refs(&mut refs);
            ensure(!refs.is_empty(), || format!("body with constant stage {st:?}"))?;
            for r in refs {
                ensure(self.stage_binders.contains(&r), || format!("stage `{r}` is not bound in the residual"))?;
                ensure(base_name(&r) != "bt", || "build-time staged body".to_string())?;
            }
        }
        for c in ["build", "merge", "finalize", "insert", "lookup", "newEnv"] {
            ensure(self.count(c) == 0, || format!("residual calls `{c}`"))?;
        }
        ensure(
            !self.prims.iter().any(|p| p.contains(".insert(") || p.contains(".lookup(")),
            || format!("environment primitive in {:?}", self.prims),
        )
    }
}

/// sign(n) = 1 if n > 0, -1 if n < 0, 0 otherwise.
fn signum(n: i64) -> i64 {
    (n > 0) as i64 - (n < 0) as i64
}

fn signum_pipeline() -> Check {
    let p = pack("signum_builder");
    let mut run = engine::run_core(p.program.as_deref().unwrap(), &Options::default());
    let res = residual_of(&mut run)?;
    let want = read_core(&std::fs::read_to_string(bundled_dir().join("signum_builder/signum.residual")).unwrap())
        .unwrap();
    ensure(alpha_eq(&res, &want), || format!("residual differs:\n{}", print_term(&res)))?;
    let shape = Shape::of(&res);
    ensure(shape.count("if") == 2, || "expected two conditionals".into())?;
    ensure(shape.count("exit") == 3, || "expected three exits".into())?;
    let Term::Lambda(root) = &res else { return Err("residual is not a lambda".into()) };
    let Form::Prim { rest, .. } = &root.body.form else { return Err("no leading test".into()) };
    let Form::Apply { args, .. } = &rest.form else { return Err("no conditional".into()) };
    ensure(print_term(&args[2]).contains("if "), || "conditionals are not nested".into())?;
    ensure(shape.stages.iter().all(|s| matches!(s, StageExpr::Ref(r) if shape.ft_chain.contains(r))), || {
        "a body is not staged on 'ft'".into()
    })?;
    for n in [5, 0, -3] {
        let got = invoke(&mut run, &res, vec![Term::Int(n)])?;
        ensure(got == vec![Term::Int(signum(n))], || format!("signum {n} gave {got:?}"))?;
    }
    Ok(())
}

fn minusdiv_codegen() -> Check {
    let p = pack("minusdiv_codegen");
    let mut run = parse(&p, "MinusDiv", "1-4/2-3", &Options::default());
    let res = residual_of(&mut run)?;
    let shape = Shape::of(&res);
    ensure(shape.prims == ["4/2", "1-quot", "diff-3"], || format!("chain {:?}", shape.prims))?;
    let want =
        read_core(&std::fs::read_to_string(bundled_dir().join("minusdiv_codegen/listing.residual")).unwrap()).unwrap();
    ensure(alpha_eq(&res, &want), || format!("residual differs:\n{}", print_term(&res)))?;
    let got = engine::values(&mut run.machine, &[res], vec![]).map_err(|e| e.to_string())?;
    ensure(got == vec![Term::Int(-4)], || format!("value {got:?}"))
}

/// Precedence-climbing evaluation of `-` and `/` over positive integers.
fn oracle(expr: &str) -> i64 {
    expr.split('-')
        .map(|t| {
            let mut fs = t.split('/').map(|n| n.trim().parse::<i64>().unwrap());
            let first = fs.next().unwrap();
            fs.fold(first, |a, b| a / b)
        })
        .reduce(|a, b| a - b)
        .unwrap()
}

fn random_expr(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(1..=7);
    let mut s = rng.gen_range(1..=9).to_string();
    for _ in 1..n {
        s.push(if rng.gen_bool(0.5) { '-' } else { '/' });
        s.push_str(&rng.gen_range(1..=9).to_string());
    }
    s
}

fn oracle_equivalence() -> Check {
    let imm = pack("minusdiv_immediate");
    let gen = pack("minusdiv_codegen");
    let mut inputs: Vec<String> = Vec::new();
    for p in [&imm, &gen] {
        for c in &p.manifest.cases {
            if c.error.is_none() {
                inputs.push(p.input(c).unwrap());
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    inputs.extend((0..100).map(|_| random_expr(&mut rng)));
    for text in &inputs {
        let want = Term::Int(oracle(text));
        let a = parse(&imm, "MinusDiv", text, &Options::default()).result.map_err(|e| e.to_string())?;
        let mut run = parse(&gen, "MinusDiv", text, &Options::default());
        let res = residual_of(&mut run)?;
        let b = invoke(&mut run, &res, vec![])?;
        ensure(a == vec![want.clone()] && b == vec![want.clone()], || {
            format!("{text}: immediate {a:?}, residual {b:?}, expected {want:?}")
        })?;
    }
    Ok(())
}

/// Operand pairs of the actions of a chain of subtractions, in firing order.
fn fold_pairs(xs: &[i64], left: bool) -> Vec<(i64, i64)> {
    let mut pairs = Vec::new();
    if left {
        let mut acc = xs[0];
        for &x in &xs[1..] {
            pairs.push((acc, x));
            acc -= x;
        }
    } else {
        let mut acc = *xs.last().unwrap();
        for &x in xs[..xs.len() - 1].iter().rev() {
            pairs.push((x, acc));
            acc = x - acc;
        }
    }
    pairs
}

fn action_pairs(run: &Run) -> Vec<(i64, i64)> {
    run.trace()
        .iter()
        .filter(|l| l.starts_with("action R_"))
        .filter_map(|l| {
            let ins = l.split(" (").nth(1)?.split(')').next()?;
            let (a, b) = ins.split_once(", ")?;
            Some((a.parse().ok()?, b.parse().ok()?))
        })
        .collect()
}

fn associativity() -> Check {
    let p = pack("minusdiv_immediate");
    let xs = [8, 3, 2];
    for (lang, left, want) in [("MinusDiv", true, 3), ("MinusDivRight", false, 7)] {
        let run = parse(&p, lang, "8-3-2", &traced());
        let got = run.result.clone().map_err(|e| e.to_string())?;
        ensure(got == vec![Term::Int(want)], || format!("{lang}: {got:?}"))?;
        let order = action_pairs(&run);
        ensure(order == fold_pairs(&xs, left), || format!("{lang}: action order {order:?}"))?;
    }
    Ok(())
}

fn ll1_guarantees() -> Check {
    let mut checked = 0;
    for dir in bundled() {
        let p = Pack::load(&dir).unwrap();
        if p.program.is_some() {
            continue;
        }
        for c in &p.manifest.cases {
            let run = p.execute(c, &Options::default()).map_err(|e| e.to_string())?;
            let log = &run.cursor_log;
            ensure(log.windows(2).all(|w| w[0] < w[1]), || {
                format!("{}/{}: cursor moved back {log:?}", p.manifest.id, c.name)
            })?;
            checked += 1;
        }
    }
    ensure(checked >= 20, || format!("only {checked} inputs"))?;
    let g = load_grammar(&std::fs::read_to_string(fixture("ambiguous.grammar")).unwrap(), None).unwrap();
    match build_table(&g) {
        Err(ParseGenError::Conflict(c)) if c.to_string().contains("\"a\"") => {}
        other => return Err(format!("ambiguous grammar: {other:?}")),
    }
    let mut reg = Registry::new();
    ensure(matches!(reg.register(g), Err(RuntimeError::Refused(..))), || {
        "ambiguous grammar registered".into()
    })
}

fn default_arguments() -> Check {
    let src = std::fs::read_to_string(fixture("stack_args.grammar")).unwrap();
    let want = std::fs::read_to_string(fixture("stack_args.expanded")).unwrap();
    let printed = print_grammar(&load_grammar(&src, None).map_err(|e| e.to_string())?);
    ensure(printed == want, || format!("expansion differs:\n{printed}"))?;
    let again = expand(&read_grammar_file(&printed).map_err(|e| e.to_string())?, None).map_err(|e| e.to_string())?;
    ensure(print_grammar(&again) == printed, || "expansion is not idempotent".into())
}

fn graph_dsl() -> Check {
    let p = pack("graph");
    let case = p.manifest.cases.iter().find(|c| c.name == "figure").unwrap();
    let mut run = p.execute(case, &traced()).map_err(|e| e.to_string())?;
    let res = residual_of(&mut run)?;
    let vals = invoke(&mut run, &res, vec![])?;
    let shown: Vec<String> = vals.iter().map(|v| print_value(v, Some(&run.machine.heap))).collect();
    ensure(shown == [r#"[["Start", 1], ["X", 2], ["Y", 3]]"#, "[[2, 3], [3], [2, 1]]"], || {
        format!("values {shown:?}")
    })?;
    let prims: Vec<&String> = run.trace().iter().filter(|l| l.starts_with("prim ")).collect();
    let last_decl = prims.iter().rposition(|l| l.contains(".insert("));
    let first_def = prims.iter().position(|l| l.contains(".lookup("));
    match (last_decl, first_def) {
        (Some(d), Some(f)) if d < f => Ok(()),
        other => Err(format!("declaration and definition order {other:?}")),
    }
}

fn residual_purity() -> Check {
    for id in ["minusdiv_codegen", "assignments", "graph"] {
        let p = pack(id);
        for c in p.manifest.cases.iter().filter(|c| c.error.is_none()) {
            let mut run = p.execute(c, &Options::default()).map_err(|e| e.to_string())?;
            let res = residual_of(&mut run)?;
            Shape::of(&res)
                .only_function_time()
                .map_err(|e| format!("{id}/{}: {e}", c.name))?;
        }
    }
    Ok(())
}

fn language_switching() -> Check {
    let p = pack("two_languages");
    let mut run = parse(&p, "Outer", "x << 3 :: 4", &traced());
    ensure(run.trace().iter().any(|l| l.starts_with("switch Outer -> Nums.Seq")), || "no switch".into())?;
    let res = residual_of(&mut run)?;
    let shape = Shape::of(&res);
    ensure(shape.prims.len() == 2 && shape.prims.iter().all(|p| p.contains('+')), || {
        format!("residual {}", print_term(&res))
    })?;
    let got = invoke(&mut run, &res, vec![])?;
    ensure(got == vec![Term::Int(7)], || format!("value {got:?}"))?;
    let lex = |r: Result<Vec<Term>, RuntimeError>| matches!(r, Err(RuntimeError::Lex { .. }));
    let outer = parse(&p, "Outer", "3 :: 4", &Options::default()).result;
    ensure(lex(outer.clone()), || format!("Nums tokens in Outer: {outer:?}"))?;
    let nums = engine::parse_text(&p.registry, "Nums", None, "x << y", vec![Term::Int(0)], &Options::default()).result;
    ensure(lex(nums.clone()), || format!("Outer tokens in Nums: {nums:?}"))
}

fn typed_minusdiv() -> Check {
    let p = pack("typed_minusdiv");
    let run = parse(&p, "TypedMinusDiv", "1-4/r2-3", &traced());
    let err = run.result.clone().err().ok_or("mismatch accepted")?;
    ensure(FailureKind::of(&err).exit_code() == 2, || format!("failure {err}"))?;
    ensure(run.machine.output == ["Type mismatch!"], || format!("printed {:?}", run.machine.output))?;
    let arith: Vec<&String> = run
        .trace()
        .iter()
        .filter(|l| l.starts_with("prim ") && !l.contains("!="))
        .collect();
    ensure(arith.is_empty(), || format!("function-time arithmetic ran: {arith:?}"))
}

fn sv(b: bool) -> StageValue {
    if b {
        StageValue::Top
    } else {
        StageValue::Bottom
    }
}

fn stage_algebra_and_round_trip() -> Check {
    for a in [false, true] {
        let c = |x| Box::new(StageExpr::Const(sv(x)));
        let not = eval_stage(&StageExpr::Not(c(a)), &[]).map_err(|e| e.to_string())?;
        ensure(not == Some(sv(!a)), || format!("!{a}"))?;
        for b in [false, true] {
            let and = eval_stage(&StageExpr::And(c(a), c(b)), &[]).map_err(|e| e.to_string())?;
            let or = eval_stage(&StageExpr::Or(c(a), c(b)), &[]).map_err(|e| e.to_string())?;
            ensure(and == Some(sv(a && b)), || format!("{a} & {b}"))?;
            ensure(or == Some(sv(a || b)), || format!("{a} | {b}"))?;
        }
    }
    let mut terms = Vec::new();
    for dir in bundled() {
        for e in std::fs::read_dir(&dir).unwrap() {
            let path = e.unwrap().path();
            let text = std::fs::read_to_string(&path).unwrap_or_default();
            match path.extension().and_then(|x| x.to_str()) {
                Some("core") => terms.push(read_program(&text).map_err(|e| e.to_string())?),
                Some("residual") => terms.push(read_core(&text).map_err(|e| e.to_string())?),
                Some("grammar") => {
                    let g = load_grammar(&text, None).map_err(|e| e.to_string())?;
                    for s in g.productions.iter().flat_map(|p| &p.body) {
                        if let Symbol::Action(a) = s {
                            if let ActionCode::Lambda { term, .. } = &a.code {
                                terms.push(term.clone());
                            }
                        }
                    }
                }
                _ => {}
            }
        }
    }
    for t in &terms {
        let printed = print_term(t);
        let back = read_core(&printed).map_err(|e| format!("{e}: {printed}"))?;
        ensure(alpha_eq(t, &back), || format!("round trip changed {printed}"))?;
    }
    Ok(())
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Check); 11] = [
        ("signum pipeline", signum_pipeline),
        ("MinusDiv code generation", minusdiv_codegen),
        ("oracle equivalence", oracle_equivalence),
        ("associativity", associativity),
        ("LL(1) guarantees", ll1_guarantees),
        ("default-argument completion", default_arguments),
        ("graph DSL", graph_dsl),
        ("residual purity", residual_purity),
        ("language switching", language_switching),
        ("typed MinusDiv", typed_minusdiv),
        ("stage algebra and round trip", stage_algebra_and_round_trip),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(()) => println!("PASS {:>2} {name}", i + 1),
            Err(e) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {e}", i + 1);
            }
        }
    }
    assert_eq!(failed, 0, "{failed} acceptance criteria failed");
}
