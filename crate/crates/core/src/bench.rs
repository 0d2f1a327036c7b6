//! Benchmark sweeps over samples × k × model, reported as CSV.
//!
//! A phase that ran out of time prints `-` in its columns, and so does every
//! column depending on it.

use std::io::Write;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use crate::cnf::instance_stats;
use crate::encode::{encode, EncodeOptions, Variant};
use crate::sample::LabeledSample;
use crate::solver::{decode_nfa, solve_instance, verify, SolverConfig, SolverStatus};
use crate::{Error, Result};

pub const CSV_HEADER: [&str; 9] = [
    "sample", "k", "model", "t_model", "vars", "clauses", "t_solve", "t_total", "status",
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub sample: String,
    pub k: u32,
    pub model: String,
    /// Seconds.
    pub t_model: Option<f64>,
    pub vars: Option<u32>,
    pub clauses: Option<usize>,
    pub t_solve: Option<f64>,
    pub t_total: Option<f64>,
    pub status: String,
}

impl BenchRow {
    fn record(&self) -> [String; 9] {
        fn dash<T: ToString>(v: Option<T>) -> String {
            v.map_or_else(|| "-".to_string(), |v| v.to_string())
        }
        let secs = |v: Option<f64>| dash(v.map(|s| format!("{s:.3}")));
        [
            self.sample.clone(),
            self.k.to_string(),
            self.model.clone(),
            secs(self.t_model),
            dash(self.vars),
            dash(self.clauses),
            secs(self.t_solve),
            secs(self.t_total),
            self.status.clone(),
        ]
    }
}

pub fn write_csv<W: Write>(rows: &[BenchRow], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record(r.record())?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug)]
pub struct BenchSpec {
    pub samples: Vec<(String, LabeledSample)>,
    pub ks: Vec<u32>,
    pub models: Vec<Variant>,
    /// Everything but the variant is taken from here.
    pub options: EncodeOptions,
    pub gen_timeout: Option<Duration>,
    /// Without a solver only generation is measured.
    pub solver: Option<SolverConfig>,
}

/// One row per (sample, k, model), in that order. Rows are computed in
/// parallel; failures end up in the row's status.
pub fn run_bench(spec: &BenchSpec) -> Vec<BenchRow> {
    let jobs: Vec<(usize, u32, Variant)> = spec
        .samples
        .iter()
        .enumerate()
        .flat_map(|(i, _)| {
            spec.ks
                .iter()
                .flat_map(move |&k| spec.models.iter().map(move |&m| (i, k, m)))
        })
        .collect();
    jobs.par_iter()
        .map(|&(i, k, model)| bench_row(spec, i, k, model))
        .collect()
}

fn bench_row(spec: &BenchSpec, i: usize, k: u32, model: Variant) -> BenchRow {
    let (name, s) = &spec.samples[i];
    let mut row = BenchRow {
        sample: name.clone(),
        k,
        model: model.to_string(),
        t_model: None,
        vars: None,
        clauses: None,
        t_solve: None,
        t_total: None,
        status: String::new(),
    };
    let mut opts = spec.options.clone();
    opts.variant = model;
    let start = Instant::now();
    opts.deadline = spec.gen_timeout.map(|t| start + t);
    let inst = match encode(s, k, &opts) {
        Ok(inst) => inst,
        Err(e) => {
            row.status = match e {
                Error::GenerationTimeout => "timeout(model)".into(),
                Error::BudgetExceeded { .. } => "intractable".into(),
                e => format!("error: {e}"),
            };
            return row;
        }
    };
    let t_model = start.elapsed();
    let stats = instance_stats(&inst);
    row.t_model = Some(t_model.as_secs_f64());
    row.vars = Some(stats.variables);
    row.clauses = Some(stats.clauses);
    let Some(cfg) = &spec.solver else {
        row.status = "generated".into();
        return row;
    };
    let out = match solve_instance(&inst, cfg) {
        Ok(out) => out,
        Err(e) => {
            row.status = format!("error: {e}");
            return row;
        }
    };
    if out.timed_out {
        row.status = "timeout(solve)".into();
        return row;
    }
    row.t_solve = Some(out.wall.as_secs_f64());
    row.t_total = Some((t_model + out.wall).as_secs_f64());
    row.status = match (out.status, &out.model) {
        (SolverStatus::Sat, Some(m)) => match decode_nfa(m, inst.varmap().numbering()) {
            Ok(nfa) if verify(&nfa, s).passed() => "sat".into(),
            Ok(_) => "error: decoded automaton misclassifies the sample".into(),
            Err(e) => format!("error: {e}"),
        },
        (SolverStatus::Unsat, _) => "unsat".into(),
        _ => "unknown".into(),
    };
    row
}
