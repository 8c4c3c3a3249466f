//! Example packs: a directory with a `pack.toml` manifest naming grammars
//! (or a core program), and cases with expected results.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::engine::{self, FailureKind, Options, Run};
use crate::grammar::{load_grammar, GrammarError};
use crate::runtime::{Registry, RuntimeError};
use crate::staged::{alpha_eq, print_term, print_value, read_core, SyntaxError, Term};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emit {
    #[default]
    Value,
    Residual,
    Trace,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub id: String,
    pub summary: String,
    #[serde(default)]
    pub grammars: Vec<String>,
    pub language: Option<String>,
    pub entry: Option<String>,
    pub program: Option<String>,
    #[serde(default)]
    pub emit: Emit,
    #[serde(default, rename = "case")]
    pub cases: Vec<Case>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Case {
    pub name: String,
    /// Overrides the pack's language for this case.
    pub language: Option<String>,
    pub input: Option<String>,
    pub input_file: Option<String>,
    #[serde(default)]
    pub call: Vec<i64>,
    /// Printed values after invoking a returned program.
    pub value: Option<Vec<String>>,
    /// File holding the expected residual, compared up to renaming.
    pub residual: Option<String>,
    /// Expected `print` output.
    #[serde(default)]
    pub output: Vec<String>,
    pub error: Option<FailureKind>,
}

#[derive(Debug, Error)]
pub enum PackError {
    #[error("{0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("{0}: {1}")]
    Manifest(PathBuf, toml::de::Error),
    #[error("{0}: {1}")]
    Grammar(PathBuf, GrammarError),
    #[error("{0}: {1}")]
    Core(PathBuf, SyntaxError),
    #[error("{0}")]
    Runtime(#[from] RuntimeError),
    #[error("pack `{0}` names neither grammars nor a program")]
    Empty(String),
}

pub struct Pack {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub registry: Registry,
    pub program: Option<String>,
}

pub fn read_file(path: &Path) -> Result<String, PackError> {
    fs::read_to_string(path).map_err(|e| PackError::Io(path.to_path_buf(), e))
}

impl Pack {
    pub fn load(dir: &Path) -> Result<Pack, PackError> {
        let mpath = dir.join("pack.toml");
        let manifest: Manifest =
            toml::from_str(&read_file(&mpath)?).map_err(|e| PackError::Manifest(mpath.clone(), e))?;
        let mut registry = Registry::new();
        for g in &manifest.grammars {
            let path = dir.join(g);
            let grammar = load_grammar(&read_file(&path)?, None).map_err(|e| PackError::Grammar(path, e))?;
            registry.register(grammar)?;
        }
        registry.check_links()?;
        let program = match &manifest.program {
            Some(p) => Some(read_file(&dir.join(p))?),
            None if manifest.grammars.is_empty() => return Err(PackError::Empty(manifest.id)),
            None => None,
        };
        Ok(Pack {
            dir: dir.to_path_buf(),
            manifest,
            registry,
            program,
        })
    }

    /// The language cases are parsed with: the manifest's, or the first grammar's.
    pub fn language(&self) -> Option<String> {
        self.manifest
            .language
            .clone()
            .or_else(|| self.registry.names().nth(1).cloned())
    }

    pub fn input(&self, case: &Case) -> Result<String, PackError> {
        match (&case.input, &case.input_file) {
            (_, Some(f)) => read_file(&self.dir.join(f)),
            (Some(s), None) => Ok(s.clone()),
            (None, None) => Ok(String::new()),
        }
    }

    /// Parses (or runs) a case without checking expectations.
    pub fn execute(&self, case: &Case, opts: &Options) -> Result<Run, PackError> {
        Ok(match &self.program {
            Some(p) => engine::run_core(p, opts),
            None => {
                let lang = case.language.clone().or_else(|| self.language()).unwrap_or_default();
                let input = self.input(case)?;
                engine::parse_text(&self.registry, &lang, self.manifest.entry.as_deref(), &input, vec![], opts)
            }
        })
    }

    pub fn check_case(&self, case: &Case, opts: &Options) -> Result<CaseReport, PackError> {
        let mut run = self.execute(case, opts)?;
        let mut problems = Vec::new();
        let outputs = match (&run.result, case.error) {
            (Err(e), Some(kind)) => {
                if FailureKind::of(e) != kind {
                    problems.push(format!("expected a {kind:?} failure, got: {e}"));
                }
                None
            }
            (Err(e), None) => {
                problems.push(format!("failed: {e}"));
                None
            }
            (Ok(out), _) => Some(out.clone()),
        };
        if let Some(out) = outputs {
            let m = &mut run.machine;
            if let Some(file) = &case.residual {
                let want = read_core(&read_file(&self.dir.join(file))?)
                    .map_err(|e| PackError::Core(self.dir.join(file), e))?;
                match engine::residual(m, &out) {
                    Ok(Some(got)) if alpha_eq(&got, &want) => {}
                    Ok(Some(got)) => problems.push(format!("residual differs:\n{}", print_term(&got))),
                    Ok(None) => problems.push("no residual program returned".into()),
                    Err(e) => problems.push(format!("finalize failed: {e}")),
                }
            }
            let call: Vec<Term> = case.call.iter().map(|n| Term::Int(*n)).collect();
            let result = engine::values(m, &out, call);
            match (result, case.error, &case.value) {
                (Ok(vals), None, Some(want)) => {
                    let got: Vec<String> = vals.iter().map(|v| print_value(v, Some(&m.heap))).collect();
                    if &got != want {
                        problems.push(format!("values {got:?}, expected {want:?}"));
                    }
                }
                (Ok(_), Some(kind), _) => problems.push(format!("expected a {kind:?} failure")),
                (Err(e), Some(kind), _) if FailureKind::of(&e) != kind => {
                    problems.push(format!("expected a {kind:?} failure, got: {e}"))
                }
                (Err(e), None, _) => problems.push(format!("invoking the result failed: {e}")),
                _ => {}
            }
        }
        if !case.output.is_empty() && run.machine.output != case.output {
            problems.push(format!("printed {:?}, expected {:?}", run.machine.output, case.output));
        }
        Ok(CaseReport {
            name: case.name.clone(),
            problems,
        })
    }

    pub fn check_all(&self, opts: &Options) -> Result<Vec<CaseReport>, PackError> {
        self.manifest.cases.iter().map(|c| self.check_case(c, opts)).collect()
    }
}

#[derive(Clone, Debug)]
pub struct CaseReport {
    pub name: String,
    pub problems: Vec<String>,
}

impl CaseReport {
    pub fn passed(&self) -> bool {
        self.problems.is_empty()
    }
}

/// Directory of the packs shipped with this crate.
pub fn bundled_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("packs")
}

/// Every bundled pack directory, sorted by name.
pub fn bundled() -> Vec<PathBuf> {
    let mut dirs: Vec<PathBuf> = fs::read_dir(bundled_dir())
        .map(|rd| rd.filter_map(|e| e.ok()).map(|e| e.path()).filter(|p| p.join("pack.toml").exists()).collect())
        .unwrap_or_default();
    dirs.sort();
    dirs
}
