//! SAT models for inferring a nondeterministic finite automaton with `k`
//! states that accepts every positive word of a sample and rejects every
//! negative one.
//!
//! The crate is organised as a pipeline:
//!
//! * [`sample`] parses labeled word samples and exposes symbol ids and word
//!   multisets.
//! * [`encode`] compiles a sample into a [`cnf::CnfInstance`] under one of
//!   four model families: the base model, the fully subsumption-reduced
//!   model, the multiset-lattice model and the prefix model.
//! * [`cnf`] owns the clause database, the variable numbering and DIMACS
//!   output.
//! * [`solver`] runs an external DIMACS solver, decodes models back into an
//!   [`nfa::Nfa`] and verifies them.
//! * [`nfa`] holds automaton semantics and a brute-force oracle used to
//!   cross-check the encoders on small instances.
//! * [`bench`] runs the comparison sweep and writes CSV rows.

pub mod bench;
pub mod cnf;
pub mod encode;
mod error;
pub mod nfa;
pub mod sample;
pub mod solver;

pub use error::{Error, Result};
