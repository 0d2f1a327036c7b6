//! Minimal DIMACS solver front end over varisat.
//!
//! Usage: `nfasat-varisat FILE.cnf`. Prints `s SATISFIABLE` with a full `v`
//! line (every variable of the header) and exits 10, or prints
//! `s UNSATISFIABLE` and exits 20.

use std::io::Write;
use std::process::ExitCode;

use varisat::Solver;

fn header_vars(text: &str) -> Option<usize> {
    text.lines()
        .map(str::trim)
        .find(|l| l.starts_with("p "))
        .and_then(|l| l.split_whitespace().nth(2))
        .and_then(|v| v.parse().ok())
}

fn main() -> ExitCode {
    let Some(path) = std::env::args().nth(1) else {
        eprintln!("usage: nfasat-varisat FILE.cnf");
        return ExitCode::from(1);
    };
    let text = match std::fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("{path}: {e}");
            return ExitCode::from(1);
        }
    };
    let mut solver = Solver::new();
    if let Err(e) = solver.add_dimacs_cnf(text.as_bytes()) {
        eprintln!("{path}: {e}");
        return ExitCode::from(1);
    }
    let n = header_vars(&text).unwrap_or(0);
    let sat = match solver.solve() {
        Ok(sat) => sat,
        Err(e) => {
            eprintln!("solver error: {e}");
            return ExitCode::from(1);
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    if !sat {
        let _ = writeln!(out, "s UNSATISFIABLE");
        return ExitCode::from(20);
    }
    let model = solver.model().unwrap_or_default();
    // variables absent from every clause are reported false
    let mut values = vec![false; n.max(model.iter().map(|l| l.index() + 1).max().unwrap_or(0)) + 1];
    for l in model {
        values[l.index() + 1] = l.is_positive();
    }
    let _ = writeln!(out, "s SATISFIABLE");
    let mut line = String::from("v");
    for (v, val) in values.iter().enumerate().skip(1) {
        line.push_str(&format!(" {}", if *val { v as i64 } else { -(v as i64) }));
    }
    line.push_str(" 0");
    let _ = writeln!(out, "{line}");
    ExitCode::from(10)
}
