use metamorph::staged::{
    alpha_eq, print_term, print_value, read_core, read_program, EvalError, Machine, Term,
};

fn run(src: &str) -> Result<Vec<Term>, EvalError> {
    let mut m = Machine::new();
    m.run_program(&read_program(src).unwrap())
}

#[test]
fn primitive_chain_evaluates_left_to_right() {
    assert_eq!(run("\"1-4/2-3\" (r) return r").unwrap(), vec![Term::Int(-4)]);
    assert_eq!(
        run("\"4/2\" (q) \"1-q\" (d) \"d-3\" (e) return e").unwrap(),
        vec![Term::Int(-4)]
    );
}

#[test]
fn let_and_local_functions() {
    let src = "let twice(x, k){ \"x*2\" (y) k y } twice 21 (r) return r";
    assert_eq!(run(src).unwrap(), vec![Term::Int(42)]);
    assert_eq!(run("let [s] x 5 return x").unwrap(), vec![Term::Int(5)]);
}

#[test]
fn recursion_through_fix() {
    let src = "fix [s] fact (n, k){ \"n==0\" (z) if z (){ k 1 } (){ \"n-1\" (m) fact m (r) \"n*r\" (p) k p } } fact 5 (v) return v";
    assert_eq!(run(src).unwrap(), vec![Term::Int(120)]);
}

#[test]
fn unknown_names_and_arity() {
    assert_eq!(run("frobnicate 1 return"), Err(EvalError::UnboundName("frobnicate".into())));
    assert!(matches!(run("(a, b){ return a } 1"), Err(EvalError::ArityMismatch(_))));
    assert!(matches!(run("5 1"), Err(EvalError::ApplyNonClosure(_))));
    assert_eq!(run("@zz: return 1"), Err(EvalError::UnboundStageName("zz".into())));
    assert_eq!(run("@never: return 1"), Err(EvalError::ReturnNeverCalled));
}

#[test]
fn step_budget_is_enforced() {
    let mut m = Machine::with_budget(50);
    let p = read_program("fix [s] loop (k){ loop k } loop return").unwrap();
    assert_eq!(m.run_program(&p), Err(EvalError::StepBudgetExceeded(50)));
}

#[test]
fn exit_halts() {
    assert_eq!(run("print \"bye\" () exit"), Err(EvalError::Halt));
}

#[test]
fn environments_and_print() {
    let mut m = Machine::new();
    let p = read_program(
        "newEnv (e) insert e \"a\" 1 (e2) \"e2.insert(\\\"b\\\",2)\" (e3) lookup e3 \"b\" (v) print v () return e3",
    )
    .unwrap();
    let out = m.run_program(&p).unwrap();
    assert_eq!(m.output, vec!["2".to_string()]);
    assert_eq!(print_value(&out[0], Some(&m.heap)), "[[\"a\", 1], [\"b\", 2]]");
    assert_eq!(
        run("newEnv (e) lookup e \"zz\" return"),
        Err(EvalError::NameNotFound("zz".into()))
    );
}

#[test]
fn codegen_fragments_leave_a_residual() {
    let src = r#"
        build 1 ('ft', !args, cont){ cont 'ft' 4 !args } (F1)
        build 1 ('ft', !args, cont){ cont 'ft' 2 !args } (F2)
        build 1 ('ft', r, l, !args, cont)[bt]{ @ft: "l/r" (quot)[s] @bt: cont ft quot !args } (Fq)
        build 0 ('ft', v, end){ @ft: end v } (Fe)
        merge F1 F2 (A) merge A Fq (B) merge B Fe (C)
        finalize C (code) return code
    "#;
    let mut m = Machine::new();
    let out = m.run_program(&read_program(src).unwrap()).unwrap();
    let expected = read_core("(end)[ft]{ @ft: \"4/2\" (quot) end quot }").unwrap();
    assert!(alpha_eq(&out[0], &expected), "got {}", print_term(&out[0]));
    assert_eq!(print_term(&out[0]), "(end)[ft]{ @ft: \"4/2\" (quot) end quot }");
    assert_eq!(m.apply_value(&out[0], vec![]).unwrap(), vec![Term::Int(2)]);
}

#[test]
fn symbolic_tuple_is_refined_into_named_parameters() {
    let src = r#"
        build 0 ('ft', val, exit){ @ft: exit val } (F)
        finalize F return
    "#;
    let mut m = Machine::new();
    let out = m.run_program(&read_program(src).unwrap()).unwrap();
    assert_eq!(print_term(&out[0]), "(val, exit)[ft]{ @ft: exit val }");
    let r = m.apply_value(&out[0], vec![Term::Int(9)]).unwrap();
    assert_eq!(r, vec![Term::Int(9)]);
}

#[test]
fn return_twice_is_an_error() {
    assert_eq!(run("return 1"), Ok(vec![Term::Int(1)]));
    let mut m = Machine::new();
    let f = read_core("(k){ k 1 }").unwrap();
    assert_eq!(m.apply_value(&f, vec![]).unwrap(), vec![Term::Int(1)]);
    let g = read_core("(k){ \"1\" (a) k a }").unwrap();
    assert_eq!(m.apply_value(&g, vec![]).unwrap(), vec![Term::Int(1)]);
}

#[test]
fn staging_chain_runs_in_order_once_triggered() {
    let chain = r#"
        let chain(go)[s]{
            @go: print 1 ()[s2]
            @s2: print 2 ()[s3]
            @s3: print 3 ()[s4]
            @s4: return 0
        }
    "#;
    let mut m = Machine::new();
    let p = read_program(&format!("{chain} print 0 () chain always")).unwrap();
    assert_eq!(m.run_program(&p).unwrap(), vec![Term::Int(0)]);
    assert_eq!(m.output, vec!["0", "1", "2", "3"]);

    let mut m = Machine::new();
    let p = read_program(&format!("{chain} print 0 () chain never")).unwrap();
    assert_eq!(m.run_program(&p), Err(EvalError::ReturnNeverCalled));
    assert_eq!(m.output, vec!["0"]);
}

const SIGNUM: &str = r#"
    build 2 ('ft', val, exit, cont1, cont2)'[bt]' {
        '@ft:' "val>0" (positive)
        if positive ()'[ft]' {
            '@bt:' cont1 'ft' val exit
        } ()'[ft]' {
            '@bt:' cont2 'ft' val exit
        }
    } (Fif_pos)
    build 2 ('ft', val, exit, cont1, cont2)'[bt]' {
        '@ft:' "val<0" (negative)
        if negative ()'[ft]' {
            '@bt:' cont1 'ft' val exit
        } ()'[ft]' {
            '@bt:' cont2 'ft' val exit
        }
    } (Fif_neg)
    build 0 ('ft',val,exit)'[bt]' { '@ft:' exit 1 } (Fp)
    build 0 ('ft',val,exit)'[bt]' { '@ft:' exit 0 } (Fz)
    build 0 ('ft',val,exit)'[bt]' { '@ft:' exit -1 } (Fn)
    merge Fif_pos Fp (F)
    merge F Fif_neg (F)
    merge F Fn (F)
    merge F Fz (F)
    finalize F (P)
    return P
"#;

const SIGNUM_RESIDUAL: &str = r#"
(val, exit)'[ft]' {
  '@ft:' "val>0" (positive)
    if positive ()'[ft]' {
        '@ft:' exit 1
    } ()'[ft]' {
      '@ft:' "val<0" (negative)
      if negative ()'[ft]' {
        '@ft:' exit -1
      } ()'[ft]'
        '@ft:' exit 0
    }
}
"#;

#[test]
fn signum_builder_yields_the_expected_residual() {
    let mut m = Machine::new();
    let out = m.run_program(&read_program(SIGNUM).unwrap()).unwrap();
    let expected = read_core(SIGNUM_RESIDUAL).unwrap();
    assert!(alpha_eq(&out[0], &expected), "got {}", print_term(&out[0]));
    for (arg, want) in [(5, 1), (0, 0), (-3, -1)] {
        let r = m.apply_value(&out[0], vec![Term::Int(arg)]).unwrap();
        assert_eq!(r, vec![Term::Int(want)]);
    }
    let printed = print_term(&out[0]);
    assert!(alpha_eq(&read_core(&printed).unwrap(), &out[0]));
    assert!(!printed.contains("bt"));
}
