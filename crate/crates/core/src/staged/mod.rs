//! The staged continuation-passing core calculus.

pub mod error;
pub mod eval;
pub mod heap;
pub mod names;
pub mod prim;
pub mod printer;
pub mod reader;
pub mod subst;
pub mod term;

pub use error::{EvalError, SyntaxError};
pub use eval::{eval_stage, Machine, DEFAULT_STEP_BUDGET};
pub use printer::{print_term, print_term_with, print_value};
pub use reader::{read_body, read_body_prefix, read_core, read_program};
pub use subst::alpha_eq;
pub use term::{Body, Form, Lambda, Param, StageExpr, StageValue, Term};
