//! External SAT solver driver.
//!
//! The solver is any program speaking the usual DIMACS conventions: exit
//! status 10/20 for sat/unsat, or an `s SATISFIABLE` / `s UNSATISFIABLE`
//! line, with the model on `v` lines.

use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::thread;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::cnf::{CnfInstance, Numbering, Var};
use crate::nfa::Nfa;
use crate::sample::{LabeledSample, Sign, SymbolId, WordRef};
use crate::{Error, Result};

pub const PLACEHOLDER: &str = "{cnf}";

/// Environment variable holding the default command template.
pub const SOLVER_ENV: &str = "NFASAT_SOLVER";

#[derive(Clone, Debug)]
pub struct SolverConfig {
    /// Whitespace-separated command line; one token contains `{cnf}`.
    pub template: String,
    pub time_limit: Option<Duration>,
    /// Where temporary CNF files go.
    pub workdir: PathBuf,
}

impl SolverConfig {
    pub fn new(template: impl Into<String>) -> Result<Self> {
        let template = template.into();
        if template.matches(PLACEHOLDER).count() != 1 {
            return Err(Error::SolverTemplate(template));
        }
        Ok(SolverConfig {
            template,
            time_limit: None,
            workdir: std::env::temp_dir(),
        })
    }

    /// The template from `NFASAT_SOLVER`, if set.
    pub fn from_env() -> Option<Result<Self>> {
        std::env::var(SOLVER_ENV).ok().map(SolverConfig::new)
    }

    pub fn with_time_limit(mut self, limit: Option<Duration>) -> Self {
        self.time_limit = limit;
        self
    }

    pub fn with_workdir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.workdir = dir.into();
        self
    }

    fn command_line(&self, cnf: &Path) -> Vec<String> {
        let path = cnf.to_string_lossy();
        self.template
            .split_whitespace()
            .map(|t| t.replace(PLACEHOLDER, &path))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverStatus {
    Sat,
    Unsat,
    Unknown,
}

impl SolverStatus {
    /// The CLI exit code for this status.
    pub fn exit_code(self) -> i32 {
        match self {
            SolverStatus::Sat => 10,
            SolverStatus::Unsat => 20,
            SolverStatus::Unknown => 30,
        }
    }
}

/// A (possibly partial) assignment; index 0 is unused.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Model(Vec<Option<bool>>);

impl Model {
    pub fn from_literals(lits: impl IntoIterator<Item = i32>) -> Self {
        let mut m = Model::default();
        for l in lits {
            m.set(Var(l.unsigned_abs()), l > 0);
        }
        m
    }

    pub fn set(&mut self, v: Var, value: bool) {
        let i = v.0 as usize;
        if self.0.len() <= i {
            self.0.resize(i + 1, None);
        }
        self.0[i] = Some(value);
    }

    pub fn get(&self, v: Var) -> Option<bool> {
        self.0.get(v.0 as usize).copied().flatten()
    }

    pub fn require(&self, v: Var) -> Result<bool> {
        self.get(v).ok_or(Error::MissingVariable(v.0))
    }

    /// Number of assigned variables.
    pub fn len(&self) -> usize {
        self.0.iter().filter(|x| x.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug)]
pub struct SolverOutcome {
    pub status: SolverStatus,
    /// Present iff `status` is sat.
    pub model: Option<Model>,
    pub wall: Duration,
    pub timed_out: bool,
}

/// Runs the configured solver on a DIMACS file.
pub fn run_solver(cnf: &Path, cfg: &SolverConfig) -> Result<SolverOutcome> {
    let argv = cfg.command_line(cnf);
    let (program, args) = argv
        .split_first()
        .ok_or_else(|| Error::SolverTemplate(cfg.template.clone()))?;
    let start = Instant::now();
    let mut child = Command::new(program)
        .args(args)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|source| Error::Spawn {
            program: program.clone(),
            source,
        })?;
    let mut stdout = child.stdout.take().expect("stdout is piped");
    let reader = thread::spawn(move || {
        let mut buf = String::new();
        stdout.read_to_string(&mut buf).map(|_| buf)
    });

    let deadline = cfg.time_limit.map(|t| start + t);
    let status = loop {
        if deadline.is_some_and(|d| Instant::now() >= d) {
            let _ = child.kill();
            let _ = child.wait();
            log::debug!("solver killed after {:?}", start.elapsed());
            // partial output is discarded
            drop(reader);
            return Ok(SolverOutcome {
                status: SolverStatus::Unknown,
                model: None,
                wall: start.elapsed(),
                timed_out: true,
            });
        }
        if let Some(status) = child.try_wait()? {
            break status;
        }
        thread::sleep(Duration::from_millis(2));
    };
    let wall = start.elapsed();
    let text = reader.join().expect("reader thread panicked")?;
    let (status, model) = parse_output(status.code(), &text)?;
    Ok(SolverOutcome {
        status,
        model,
        wall,
        timed_out: false,
    })
}

/// Interprets an exit code and stdout. The exit code wins when it is 10 or
/// 20; otherwise the `s` line decides.
pub fn parse_output(code: Option<i32>, text: &str) -> Result<(SolverStatus, Option<Model>)> {
    let mut by_line = None;
    let mut lits = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix("s ") {
            by_line = match rest.trim() {
                "SATISFIABLE" => Some(SolverStatus::Sat),
                "UNSATISFIABLE" => Some(SolverStatus::Unsat),
                _ => Some(SolverStatus::Unknown),
            };
        } else if let Some(rest) = line.strip_prefix('v') {
            for tok in rest.split_whitespace() {
                let l: i32 = tok.parse().map_err(|_| Error::SolverOutput {
                    line: i + 1,
                    text: line.to_string(),
                })?;
                if l != 0 {
                    lits.push(l);
                }
            }
        }
    }
    let status = match code {
        Some(10) => SolverStatus::Sat,
        Some(20) => SolverStatus::Unsat,
        _ => by_line.unwrap_or(SolverStatus::Unknown),
    };
    let model = (status == SolverStatus::Sat).then(|| Model::from_literals(lits));
    Ok((status, model))
}

static CNF_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Writes `inst` to a temporary file in the work directory and solves it.
pub fn solve_instance(inst: &CnfInstance, cfg: &SolverConfig) -> Result<SolverOutcome> {
    let id = CNF_COUNTER.fetch_add(1, Ordering::Relaxed);
    let path = cfg
        .workdir
        .join(format!("nfasat-{}-{id}.cnf", std::process::id()));
    std::fs::write(&path, inst.to_dimacs()).map_err(|e| Error::file(&path, e))?;
    let out = run_solver(&path, cfg);
    let _ = std::fs::remove_file(&path);
    out
}

/// Reads the automaton off the final-state and transition variables.
pub fn decode_nfa(model: &Model, numbering: Numbering) -> Result<Nfa> {
    let Numbering { k, n } = numbering;
    let mut nfa = Nfa::new(k, n);
    for j in 1..=k {
        if model.require(numbering.final_var(j))? {
            nfa.set_final(j)?;
        }
    }
    for a in 1..=n as u32 {
        for i in 1..=k {
            for j in 1..=k {
                if model.require(numbering.delta_var(SymbolId(a), i, j))? {
                    nfa.add_transition(SymbolId(a), i, j)?;
                }
            }
        }
    }
    Ok(nfa)
}

/// Words the automaton gets wrong.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct VerifyReport {
    pub misclassified: Vec<WordRef>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.misclassified.is_empty()
    }
}

pub fn verify(nfa: &Nfa, s: &LabeledSample) -> VerifyReport {
    VerifyReport {
        misclassified: s
            .labeled_words()
            .filter(|(r, w)| nfa.accepts(w) != (r.sign == Sign::Positive))
            .map(|(r, _)| r)
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use std::os::unix::fs::PermissionsExt;

    use super::*;

    fn script(dir: &Path, name: &str, body: &str) -> SolverConfig {
        let p = dir.join(name);
        std::fs::write(&p, format!("#!/bin/sh\n{body}\n")).unwrap();
        std::fs::set_permissions(&p, std::fs::Permissions::from_mode(0o755)).unwrap();
        SolverConfig::new(format!("{} {{cnf}}", p.display())).unwrap()
    }

    fn cnf(dir: &Path, text: &str) -> PathBuf {
        let p = dir.join("in.cnf");
        std::fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn template_needs_one_placeholder() {
        assert!(SolverConfig::new("solver").is_err());
        assert!(SolverConfig::new("solver {cnf} {cnf}").is_err());
        let cfg = SolverConfig::new("solver --in={cnf} -q").unwrap();
        assert_eq!(
            cfg.command_line(Path::new("/x/a.cnf")),
            vec!["solver", "--in=/x/a.cnf", "-q"]
        );
    }

    #[test]
    fn exit_codes() {
        let dir = tempfile::tempdir().unwrap();
        let f = cnf(dir.path(), "p cnf 1 1\n1 0\n");
        let sat = script(dir.path(), "sat.sh", "echo 'v 1 -2 0'; exit 10");
        let out = run_solver(&f, &sat).unwrap();
        assert_eq!(out.status, SolverStatus::Sat);
        let m = out.model.unwrap();
        assert_eq!((m.get(Var(1)), m.get(Var(2)), m.get(Var(3))), (Some(true), Some(false), None));

        let unsat = script(dir.path(), "unsat.sh", "exit 20");
        let out = run_solver(&f, &unsat).unwrap();
        assert_eq!(out.status, SolverStatus::Unsat);
        assert!(out.model.is_none());
    }

    #[test]
    fn text_fallback() {
        let dir = tempfile::tempdir().unwrap();
        let f = cnf(dir.path(), "p cnf 2 1\n1 2 0\n");
        let cfg = script(dir.path(), "s.sh", "echo 'c hi'; echo 's SATISFIABLE'; echo 'v -1'; echo 'v 2 0'");
        let out = run_solver(&f, &cfg).unwrap();
        assert_eq!(out.status, SolverStatus::Sat);
        assert_eq!(out.model.unwrap(), Model::from_literals([-1, 2]));

        let cfg = script(dir.path(), "u.sh", "echo 's UNSATISFIABLE'");
        assert_eq!(run_solver(&f, &cfg).unwrap().status, SolverStatus::Unsat);

        let cfg = script(dir.path(), "g.sh", "echo garbage; exit 3");
        assert_eq!(run_solver(&f, &cfg).unwrap().status, SolverStatus::Unknown);
    }

    #[test]
    fn malformed_model_line() {
        let err = parse_output(Some(10), "s SATISFIABLE\nv 1 x 0\n").unwrap_err();
        assert!(matches!(err, Error::SolverOutput { line: 2, .. }));
    }

    #[test]
    fn timeout_kills_child() {
        let dir = tempfile::tempdir().unwrap();
        let f = cnf(dir.path(), "p cnf 1 1\n1 0\n");
        let cfg = script(dir.path(), "slow.sh", "sleep 5; exit 10").with_time_limit(Some(Duration::from_millis(100)));
        let out = run_solver(&f, &cfg).unwrap();
        assert_eq!(out.status, SolverStatus::Unknown);
        assert!(out.timed_out);
        assert!(out.wall < Duration::from_secs(4));

        let cfg = script(dir.path(), "fast.sh", "exit 10").with_time_limit(Some(Duration::ZERO));
        assert_eq!(run_solver(&f, &cfg).unwrap().status, SolverStatus::Unknown);
    }

    #[test]
    fn spawn_failure() {
        let cfg = SolverConfig::new("/nonexistent/solver {cnf}").unwrap();
        assert!(matches!(run_solver(Path::new("x.cnf"), &cfg), Err(Error::Spawn { .. })));
    }

    #[test]
    fn decode_examples() {
        let num = Numbering { k: 2, n: 1 };
        // f_2 and δ(a,1,2) = 2 + 0 + 0 + 2 = 4
        let mut m = Model::from_literals((1..=6).map(|v| -v));
        m.set(Var(2), true);
        m.set(Var(4), true);
        let nfa = decode_nfa(&m, num).unwrap();
        assert_eq!(nfa.finals().iter().copied().collect::<Vec<_>>(), vec![2]);
        assert_eq!(nfa.transitions().collect::<Vec<_>>(), vec![(SymbolId(1), 1, 2)]);

        let all_false = decode_nfa(&Model::from_literals((1..=6).map(|v| -v)), num).unwrap();
        assert!(all_false.finals().is_empty());
        assert_eq!(all_false.transitions().count(), 0);

        let partial = Model::from_literals([1, 2, 3]);
        assert!(matches!(decode_nfa(&partial, num), Err(Error::MissingVariable(4))));
    }

    #[test]
    fn verify_examples() {
        let mut nfa = Nfa::new(1, 1);
        nfa.set_final(1).unwrap();
        nfa.add_transition(SymbolId(1), 1, 1).unwrap();
        let s = LabeledSample::from_chars(&["a"], &["aa"]).unwrap();
        let r = verify(&nfa, &s);
        assert_eq!(
            r.misclassified,
            vec![WordRef {
                sign: Sign::Negative,
                index: 0
            }]
        );
        assert!(verify(&nfa, &LabeledSample::default()).passed());
        let s = LabeledSample::from_chars(&["a", "aaa", ""], &[]).unwrap();
        assert!(verify(&nfa, &s).passed());
    }
}
