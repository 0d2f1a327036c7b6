//! Nondeterministic finite automata without ε-transitions. State 1 is the
//! initial state.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::sample::{LabeledSample, SymbolId, Word};
use crate::{Error, Result};

mod oracle;

pub use oracle::{brute_force_search, candidate_bits, ORACLE_BIT_LIMIT};

/// States are numbered `1..=k`.
pub type State = u32;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Nfa {
    k: u32,
    n: usize,
    finals: BTreeSet<State>,
    // delta[a][i] = successors of state i+1 on symbol a+1
    delta: Vec<Vec<BTreeSet<State>>>,
}

impl Nfa {
    /// An automaton with `k` states over `n` symbols, no finals and no
    /// transitions.
    pub fn new(k: u32, n: usize) -> Self {
        assert!(k >= 1, "an NFA has at least one state");
        Nfa {
            k,
            n,
            finals: BTreeSet::new(),
            delta: vec![vec![BTreeSet::new(); k as usize]; n],
        }
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn check_state(&self, q: State) -> Result<()> {
        if q == 0 || q > self.k {
            return Err(Error::OutOfRange {
                what: "state",
                value: q as usize,
                range: format!("1..={}", self.k),
            });
        }
        Ok(())
    }

    pub fn set_final(&mut self, q: State) -> Result<()> {
        self.check_state(q)?;
        self.finals.insert(q);
        Ok(())
    }

    pub fn add_transition(&mut self, sym: SymbolId, from: State, to: State) -> Result<()> {
        self.check_state(from)?;
        self.check_state(to)?;
        if sym.0 == 0 || sym.index() >= self.n {
            return Err(Error::OutOfRange {
                what: "symbol id",
                value: sym.0 as usize,
                range: format!("1..={}", self.n),
            });
        }
        self.delta[sym.index()][from as usize - 1].insert(to);
        Ok(())
    }

    pub fn finals(&self) -> &BTreeSet<State> {
        &self.finals
    }

    pub fn is_final(&self, q: State) -> bool {
        self.finals.contains(&q)
    }

    pub fn successors(&self, sym: SymbolId, from: State) -> &BTreeSet<State> {
        &self.delta[sym.index()][from as usize - 1]
    }

    /// All transitions as `(symbol, from, to)` in lexicographic order.
    pub fn transitions(&self) -> impl Iterator<Item = (SymbolId, State, State)> + '_ {
        self.delta.iter().enumerate().flat_map(|(a, rows)| {
            rows.iter().enumerate().flat_map(move |(i, tos)| {
                tos.iter()
                    .map(move |&j| (SymbolId(a as u32 + 1), i as State + 1, j))
            })
        })
    }

    /// Frontier simulation from state 1.
    pub fn accepts(&self, w: &Word) -> bool {
        let k = self.k as usize;
        let mut frontier = vec![false; k];
        frontier[0] = true;
        let mut next = vec![false; k];
        for s in w.symbols() {
            let rows = &self.delta[s.index()];
            next.iter_mut().for_each(|b| *b = false);
            let mut any = false;
            for (i, active) in frontier.iter().enumerate() {
                if *active {
                    for &j in &rows[i] {
                        next[j as usize - 1] = true;
                        any = true;
                    }
                }
            }
            if !any {
                return false;
            }
            std::mem::swap(&mut frontier, &mut next);
        }
        frontier
            .iter()
            .enumerate()
            .any(|(i, active)| *active && self.finals.contains(&(i as State + 1)))
    }

    pub fn consistent(&self, s: &LabeledSample) -> bool {
        s.positives().iter().all(|w| self.accepts(w))
            && !s.negatives().iter().any(|w| self.accepts(w))
    }

    pub fn to_json(&self, alphabet: Option<&[String]>) -> NfaJson {
        NfaJson {
            k: self.k,
            alphabet: alphabet.map(<[String]>::to_vec),
            finals: self.finals.iter().copied().collect(),
            transitions: self
                .transitions()
                .map(|(sym, from, to)| TransitionJson {
                    sym: sym.0,
                    from,
                    to,
                })
                .collect(),
        }
    }

    pub fn from_json(doc: &NfaJson, n: usize) -> Result<Self> {
        let mut nfa = Nfa::new(doc.k, n);
        for &q in &doc.finals {
            nfa.set_final(q)?;
        }
        for t in &doc.transitions {
            nfa.add_transition(SymbolId(t.sym), t.from, t.to)?;
        }
        Ok(nfa)
    }

    /// Graphviz rendering; `labels` maps symbol ids to display tokens.
    pub fn to_dot(&self, labels: Option<&[String]>) -> String {
        let mut out = String::from("digraph nfa {\n  rankdir=LR;\n  start [shape=point];\n");
        for q in 1..=self.k {
            let shape = if self.is_final(q) {
                "doublecircle"
            } else {
                "circle"
            };
            let _ = writeln!(out, "  q{q} [shape={shape}];");
        }
        out.push_str("  start -> q1;\n");
        for (sym, from, to) in self.transitions() {
            let label = match labels {
                Some(l) => l[sym.index()].clone(),
                None => sym.0.to_string(),
            };
            let _ = writeln!(out, "  q{from} -> q{to} [label=\"{}\"];", label.replace('"', "\\\""));
        }
        out.push_str("}\n");
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NfaJson {
    pub k: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphabet: Option<Vec<String>>,
    pub finals: Vec<State>,
    pub transitions: Vec<TransitionJson>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionJson {
    pub sym: u32,
    pub from: State,
    pub to: State,
}
