#![allow(dead_code)]

use nfasat::cnf::CnfInstance;
use nfasat::sample::{Alphabet, LabeledSample, SymbolId, Word};
use nfasat::solver::{decode_nfa, solve_instance, verify, SolverConfig, SolverStatus};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const CORPUS_SEED: u64 = 0x5eed_2024;
pub const CORPUS_SIZE: usize = 240;

/// Fixed pseudo-random corpus: n ≤ 2, words of length ≤ 3, at most three
/// words per sign, no contradictions.
pub fn corpus() -> Vec<LabeledSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(CORPUS_SEED);
    let mut out = Vec::with_capacity(CORPUS_SIZE);
    while out.len() < CORPUS_SIZE {
        let n = rng.gen_range(1..=2usize);
        let word = |rng: &mut ChaCha8Rng| {
            let len = rng.gen_range(0..=3usize);
            Word((0..len).map(|_| SymbolId(rng.gen_range(1..=n as u32))).collect())
        };
        let np = rng.gen_range(0..=3);
        let nn = rng.gen_range(0..=3);
        let pos: Vec<Word> = (0..np).map(|_| word(&mut rng)).collect();
        let neg: Vec<Word> = (0..nn).map(|_| word(&mut rng)).collect();
        let alphabet = Alphabet::new(["a", "b"].into_iter().take(n)).unwrap();
        if let Ok(s) = LabeledSample::new(alphabet, pos, neg) {
            out.push(s);
        }
    }
    out
}

/// `$NFASAT_SOLVER` if set, else the bundled varisat front end.
pub fn solver() -> SolverConfig {
    SolverConfig::from_env()
        .map(|c| c.expect("NFASAT_SOLVER must contain {cnf}"))
        .unwrap_or_else(|| SolverConfig::new(concat!(env!("CARGO_BIN_EXE_nfasat-varisat"), " {cnf}")).unwrap())
}

/// Result of solving one instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Solved {
    pub sat: bool,
    /// For sat runs: whether the decoded automaton is consistent.
    pub verified: bool,
}

pub fn solve(inst: &CnfInstance, s: &LabeledSample, cfg: &SolverConfig) -> Solved {
    let out = solve_instance(inst, cfg).expect("solver run");
    match out.status {
        SolverStatus::Sat => {
            let nfa = decode_nfa(out.model.as_ref().unwrap(), inst.varmap().numbering()).expect("decode");
            Solved {
                sat: true,
                verified: verify(&nfa, s).passed(),
            }
        }
        SolverStatus::Unsat => Solved {
            sat: false,
            verified: true,
        },
        SolverStatus::Unknown => panic!("solver gave no answer"),
    }
}
