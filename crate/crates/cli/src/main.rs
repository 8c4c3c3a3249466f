use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use metamorph::engine::{self, FailureKind, Options};
use metamorph::grammar::{expand, print_grammar, read_grammar_file, Grammar};
use metamorph::packs::{self, Pack};
use metamorph::parsegen::{analyze, conflicts, render_report, validate_foreign_positions, ParseGenError};
use metamorph::runtime::Registry;
use metamorph::staged::{print_term_with, print_value, Term, DEFAULT_STEP_BUDGET};

const EXIT_USAGE: u8 = 64;
const EXIT_NO_INPUT: u8 = 66;

#[derive(Parser)]
#[command(name = "metamorph", version, about = "LL(1) grammars with staged semantic actions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate grammars and print their FIRST/FOLLOW sets and parse tables.
    Check(GrammarArgs),
    /// Print grammars after template instantiation and default arguments.
    Expand(GrammarArgs),
    /// Parse an input (or run a core program) and print the result.
    Run(RunArgs),
    /// Check the cases of example packs (default: all bundled packs).
    Pack(PackArgs),
}

#[derive(Args)]
struct GrammarArgs {
    /// Grammar to load, as `name=path` or `path` (first grammar in the file).
    #[arg(long = "grammar", value_name = "NAME=PATH")]
    grammars: Vec<String>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Emit {
    Value,
    Residual,
    Trace,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    grammars: GrammarArgs,
    /// Language to start parsing in.
    #[arg(long)]
    lang: Option<String>,
    /// Entry rule (default: the language's first entry rule).
    #[arg(long)]
    entry: Option<String>,
    /// File to parse.
    #[arg(long, conflicts_with = "expr")]
    input: Option<PathBuf>,
    /// Text to parse.
    #[arg(long)]
    expr: Option<String>,
    /// Run a core program instead of parsing.
    #[arg(long, conflicts_with_all = ["input", "expr"])]
    core: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "value")]
    emit: Emit,
    /// Integer arguments passed when a program is returned.
    #[arg(long, allow_negative_numbers = true, num_args = 1..)]
    call: Vec<i64>,
    /// Evaluation step budget.
    #[arg(long, default_value_t = DEFAULT_STEP_BUDGET)]
    steps: usize,
    /// Fresh-name seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Also write the trace to stderr.
    #[arg(long)]
    trace: bool,
}

#[derive(Args)]
struct PackArgs {
    dirs: Vec<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_STEP_BUDGET)]
    steps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

struct Failure(u8, String);

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let result = match cli.command {
        Command::Check(a) => check(&a),
        Command::Expand(a) => expand_cmd(&a),
        Command::Run(a) => run(&a),
        Command::Pack(a) => pack(&a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure(EXIT_NO_INPUT, format!("{}: {e}", path.display())))
}

fn load(args: &GrammarArgs) -> Result<Vec<Grammar>, Failure> {
    if args.grammars.is_empty() {
        return Err(Failure(EXIT_USAGE, "at least one --grammar is required".into()));
    }
    let mut out = Vec::new();
    for spec in &args.grammars {
        let (name, path) = match spec.split_once('=') {
            Some((n, p)) => (Some(n), p),
            None => (None, spec.as_str()),
        };
        let text = read(Path::new(path))?;
        let def = read_grammar_file(&text).map_err(|e| Failure(1, format!("{path}: {e}")))?;
        let g = expand(&def, name).map_err(|e| Failure(1, format!("{path}: {e}")))?;
        out.push(g);
    }
    Ok(out)
}

fn check(args: &GrammarArgs) -> Result<u8, Failure> {
    let mut clean = true;
    for g in load(args)? {
        if let Err(e @ ParseGenError::LeftRecursion(_)) = metamorph::parsegen::build_table(&g) {
            println!("grammar {}: {e}", g.name);
            clean = false;
            continue;
        }
        let a = analyze(&g);
        let (table, cs) = conflicts(&g, &a);
        print!("{}", render_report(&g, &a, &table));
        for w in validate_foreign_positions(&g, &a) {
            println!("warning: {w}");
        }
        for c in &cs {
            println!("{c}");
        }
        if cs.is_empty() {
            println!("grammar {}: LL(1)", g.name);
        } else {
            clean = false;
        }
    }
    Ok(if clean { 0 } else { 1 })
}

fn expand_cmd(args: &GrammarArgs) -> Result<u8, Failure> {
    for g in load(args)? {
        print!("{}", print_grammar(&g));
    }
    Ok(0)
}

fn run(args: &RunArgs) -> Result<u8, Failure> {
    let opts = Options {
        budget: args.steps,
        seed: args.seed,
        trace: args.trace || args.emit == Emit::Trace,
        echo: true,
    };
    let mut run = if let Some(core) = &args.core {
        engine::run_core(&read(core)?, &opts)
    } else {
        let grammars = load(&args.grammars)?;
        let lang = match (&args.lang, grammars.as_slice()) {
            (Some(l), _) => l.clone(),
            (None, [g]) => g.name.clone(),
            _ => return Err(Failure(EXIT_USAGE, "--lang is required with several grammars".into())),
        };
        let mut reg = Registry::new();
        for g in grammars {
            reg.register(g).map_err(|e| Failure(1, e.to_string()))?;
        }
        let input = match (&args.input, &args.expr) {
            (Some(p), _) => read(p)?,
            (None, Some(e)) => e.clone(),
            (None, None) => return Err(Failure(EXIT_USAGE, "one of --input, --expr or --core is required".into())),
        };
        engine::parse_text(&reg, &lang, args.entry.as_deref(), &input, vec![], &opts)
    };
    let trace: Vec<String> = run.trace().to_vec();
    for line in &trace {
        if args.emit == Emit::Trace {
            println!("{line}");
        } else {
            eprintln!("{line}");
        }
    }
    let outputs = run.result.map_err(|e| Failure(FailureKind::of(&e).exit_code() as u8, e.to_string()))?;
    let m = &mut run.machine;
    let fail = |e: metamorph::runtime::RuntimeError| Failure(FailureKind::of(&e).exit_code() as u8, e.to_string());
    match args.emit {
        Emit::Trace => {}
        Emit::Residual => match engine::residual(m, &outputs).map_err(fail)? {
            Some(p) => println!("{}", print_term_with(&p, &m.heap)),
            None => {
                for v in &outputs {
                    println!("{}", print_value(v, Some(&m.heap)));
                }
            }
        },
        Emit::Value => {
            let call: Vec<Term> = args.call.iter().map(|n| Term::Int(*n)).collect();
            for v in engine::values(m, &outputs, call).map_err(fail)? {
                println!("{}", print_value(&v, Some(&m.heap)));
            }
        }
    }
    Ok(0)
}

fn pack(args: &PackArgs) -> Result<u8, Failure> {
    let dirs = if args.dirs.is_empty() { packs::bundled() } else { args.dirs.clone() };
    let opts = Options {
        budget: args.steps,
        seed: args.seed,
        ..Options::default()
    };
    let mut failed = 0;
    for dir in dirs {
        if !dir.join("pack.toml").exists() {
            return Err(Failure(EXIT_NO_INPUT, format!("{}: no pack.toml", dir.display())));
        }
        let p = Pack::load(&dir).map_err(|e| Failure(1, e.to_string()))?;
        for r in p.check_all(&opts).map_err(|e| Failure(1, e.to_string()))? {
            if r.passed() {
                println!("ok   {}/{}", p.manifest.id, r.name);
            } else {
                failed += 1;
                println!("FAIL {}/{}: {}", p.manifest.id, r.name, r.problems.join("; "));
            }
        }
    }
    Ok(if failed == 0 { 0 } else { 1 })
}
