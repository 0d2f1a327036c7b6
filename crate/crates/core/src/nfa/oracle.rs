//! Exhaustive search over every NFA of a given size. Used only as an
//! independent reference for the SAT encodings on tiny instances.
//!
//! A candidate is a bit vector laid out like the CNF variable numbering:
//! bit `j-1` says whether state `j` is final, and bit
//! `k + (a-1)k² + (i-1)k + (j-1)` says whether the transition
//! `i --a--> j` exists. Candidates are tried in increasing integer order and
//! the first consistent one is returned.

use rayon::prelude::*;

use super::{Nfa, State};
use crate::sample::{LabeledSample, SymbolId, Word};
use crate::{Error, Result};

/// Largest candidate space (in bits) the oracle will enumerate.
pub const ORACLE_BIT_LIMIT: usize = 24;

pub fn candidate_bits(k: u32, n: usize) -> usize {
    k as usize + n * (k as usize).pow(2)
}

pub fn brute_force_search(s: &LabeledSample, k: u32) -> Result<Option<Nfa>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let n = s.n();
    let bits = candidate_bits(k, n);
    if bits > ORACLE_BIT_LIMIT {
        return Err(Error::OracleBound {
            bits,
            limit: ORACLE_BIT_LIMIT,
        });
    }
    let pos: Vec<&[SymbolId]> = s.positives().iter().map(Word::symbols).collect();
    let neg: Vec<&[SymbolId]> = s.negatives().iter().map(Word::symbols).collect();
    let found = (0u64..(1u64 << bits))
        .into_par_iter()
        .find_first(|&code| {
            let m = Masks::decode(code, k, n);
            pos.iter().all(|w| m.accepts(w)) && !neg.iter().any(|w| m.accepts(w))
        });
    Ok(found.map(|code| decode_candidate(code, k, n)))
}

pub(crate) fn decode_candidate(code: u64, k: u32, n: usize) -> Nfa {
    let mut nfa = Nfa::new(k, n);
    let ku = k as usize;
    for j in 0..ku {
        if code >> j & 1 == 1 {
            nfa.set_final(j as State + 1).expect("state in range");
        }
    }
    for a in 0..n {
        for i in 0..ku {
            for j in 0..ku {
                let bit = ku + a * ku * ku + i * ku + j;
                if code >> bit & 1 == 1 {
                    nfa.add_transition(SymbolId(a as u32 + 1), i as State + 1, j as State + 1)
                        .expect("in range");
                }
            }
        }
    }
    nfa
}

/// Bitmask form of a candidate; k is at most 24 here so states fit in a u32.
struct Masks {
    finals: u32,
    // succ[a * k + i] = successor mask of state i on symbol a
    succ: Vec<u32>,
    k: usize,
}

impl Masks {
    fn decode(code: u64, k: u32, n: usize) -> Self {
        let k = k as usize;
        let finals = (code & ((1u64 << k) - 1)) as u32;
        let mut succ = Vec::with_capacity(n * k);
        for a in 0..n {
            for i in 0..k {
                let shift = k + a * k * k + i * k;
                succ.push(((code >> shift) & ((1u64 << k) - 1)) as u32);
            }
        }
        Masks { finals, succ, k }
    }

    fn accepts(&self, w: &[SymbolId]) -> bool {
        let mut frontier = 1u32;
        for s in w {
            let base = s.index() * self.k;
            let mut next = 0u32;
            let mut f = frontier;
            while f != 0 {
                let i = f.trailing_zeros() as usize;
                next |= self.succ[base + i];
                f &= f - 1;
            }
            if next == 0 {
                return false;
            }
            frontier = next;
        }
        frontier & self.finals != 0
    }
}
