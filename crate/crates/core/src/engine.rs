//! Running inputs and core programs end to end.

use crate::runtime::{Registry, RuntimeError, Session};
use crate::staged::names::NameGen;
use crate::staged::{read_program, EvalError, Machine, Term, DEFAULT_STEP_BUDGET};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FailureKind {
    /// Lexing or parsing the input failed.
    Parse,
    /// An action or the built program failed, or it called `exit`.
    Action,
    /// The step budget ran out.
    Budget,
}

impl FailureKind {
    pub fn of(e: &RuntimeError) -> FailureKind {
        match e {
            _ if e.is_parse_error() => FailureKind::Parse,
            RuntimeError::Eval(EvalError::StepBudgetExceeded(_)) => FailureKind::Budget,
            _ => FailureKind::Action,
        }
    }

    /// Process exit code used by the command-line driver.
    pub fn exit_code(self) -> i32 {
        match self {
            FailureKind::Parse => 1,
            FailureKind::Action => 2,
            FailureKind::Budget => 3,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Options {
    pub budget: usize,
    pub seed: u64,
    pub trace: bool,
    pub echo: bool,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            budget: DEFAULT_STEP_BUDGET,
            seed: 1,
            trace: false,
            echo: false,
        }
    }
}

impl Options {
    pub fn machine(&self) -> Machine {
        let mut m = Machine::with_budget(self.budget);
        m.gen = NameGen::new(self.seed);
        m.echo = self.echo;
        if self.trace {
            m.enable_trace();
        }
        m
    }
}

pub struct Run {
    pub result: Result<Vec<Term>, RuntimeError>,
    pub machine: Machine,
    pub cursor_log: Vec<usize>,
}

impl Run {
    pub fn trace(&self) -> &[String] {
        self.machine.trace.as_deref().unwrap_or(&[])
    }
}

/// Parses `text` with `lang` starting at `entry`.
pub fn parse_text(
    reg: &Registry,
    lang: &str,
    entry: Option<&str>,
    text: &str,
    args: Vec<Term>,
    opts: &Options,
) -> Run {
    if let Err(e) = reg.check_links() {
        return Run {
            result: Err(e),
            machine: opts.machine(),
            cursor_log: vec![],
        };
    }
    let mut s = Session::new(reg, text, opts.machine());
    let result = s.parse(lang, entry, args);
    Run {
        result,
        cursor_log: s.cursor_log,
        machine: s.machine,
    }
}

/// Runs a core program taking a single `return` continuation.
pub fn run_core(text: &str, opts: &Options) -> Run {
    let mut machine = opts.machine();
    let result = match read_program(text) {
        Ok(p) => machine.run_program(&p).map_err(RuntimeError::from),
        Err(e) => Err(RuntimeError::CoreSyntax(e)),
    };
    Run {
        result,
        machine,
        cursor_log: vec![],
    }
}

/// A single returned fragment is finalized; a closure is returned as is.
pub fn residual(m: &mut Machine, outputs: &[Term]) -> Result<Option<Term>, RuntimeError> {
    match outputs {
        [t @ Term::Fragment(_)] => Ok(Some(m.finalize(t)?)),
        [t @ Term::Lambda(_)] => Ok(Some(t.clone())),
        _ => Ok(None),
    }
}

/// The values of a run: a returned program is invoked with `call`,
/// anything else is returned unchanged.
pub fn values(m: &mut Machine, outputs: &[Term], call: Vec<Term>) -> Result<Vec<Term>, RuntimeError> {
    match residual(m, outputs)? {
        Some(p) => Ok(m.apply_value(&p, call)?),
        None => Ok(outputs.to_vec()),
    }
}
