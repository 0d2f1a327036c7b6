//! Clause database, variable numbering and DIMACS output.
//!
//! Variable numbering is fixed so that decoders and tests can rely on it:
//!
//! * `f_j = j` for `j in 1..=k` (state `j` is final),
//! * `δ(a, i, j) = k + (a-1)k² + (i-1)k + j` (transition `i --a--> j`),
//! * auxiliary variables follow from `k + nk² + 1` in allocation order.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::encode::EncodeReport;
use crate::nfa::State;
use crate::sample::{SymbolId, WordRef};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Var(pub u32);

/// A signed variable, stored as its DIMACS integer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Lit(i32);

impl Lit {
    pub fn pos(v: Var) -> Lit {
        Lit(v.0 as i32)
    }

    pub fn neg(v: Var) -> Lit {
        Lit(-(v.0 as i32))
    }

    pub fn var(self) -> Var {
        Var(self.0.unsigned_abs())
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    pub fn dimacs(self) -> i32 {
        self.0
    }
}

impl std::ops::Not for Lit {
    type Output = Lit;
    fn not(self) -> Lit {
        Lit(-self.0)
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A nonempty disjunction with no repeated variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Clause(Vec<Lit>);

impl Clause {
    /// Collapses repeated literals, keeping first occurrences in order.
    ///
    /// Panics on an empty clause or on complementary literals: no constraint
    /// family ever produces a tautology.
    pub fn new(lits: impl IntoIterator<Item = Lit>) -> Clause {
        let mut out: Vec<Lit> = Vec::new();
        for l in lits {
            if out.contains(&l) {
                continue;
            }
            assert!(!out.contains(&!l), "tautological clause containing {l} and {}", !l);
            out.push(l);
        }
        assert!(!out.is_empty(), "empty clause");
        Clause(out)
    }

    pub fn lits(&self) -> &[Lit] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Which constraint family produced a clause.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `f_1` when λ is positive.
    LambdaPositive,
    /// `¬f_1` when λ is negative.
    LambdaNegative,
    /// `¬aux ∨ v` for every conjunct of a path and its final state.
    AuxImplies,
    /// `aux ∨ ¬d ∨ ¬f_j`.
    AuxBack,
    /// One disjunction of all aux variables of a positive word.
    AuxOr,
    /// `¬d ∨ ¬f_j` for negative words.
    Negative,
    /// Prefix-model counterparts of the four families above.
    PrefixAuxImplies,
    PrefixAuxBack,
    PrefixAuxOr,
    PrefixNegative,
    /// Unreachable states are forced non-final with no outgoing transitions.
    Redundant,
    /// Contradictory unit pair for a positive word with no candidate path.
    UnsatMarker,
}

impl Family {
    pub const ALL: [Family; 12] = [
        Family::LambdaPositive,
        Family::LambdaNegative,
        Family::AuxImplies,
        Family::AuxBack,
        Family::AuxOr,
        Family::Negative,
        Family::PrefixAuxImplies,
        Family::PrefixAuxBack,
        Family::PrefixAuxOr,
        Family::PrefixNegative,
        Family::Redundant,
        Family::UnsatMarker,
    ];

    /// Constraint number in the usual presentation of the model, if any.
    pub fn number(self) -> Option<u8> {
        match self {
            Family::LambdaPositive => Some(1),
            Family::LambdaNegative => Some(2),
            Family::AuxImplies => Some(4),
            Family::AuxBack => Some(5),
            Family::AuxOr => Some(6),
            Family::Negative => Some(7),
            Family::PrefixAuxImplies => Some(8),
            Family::PrefixAuxBack => Some(9),
            Family::PrefixAuxOr => Some(10),
            Family::PrefixNegative => Some(11),
            Family::Redundant | Family::UnsatMarker => None,
        }
    }

    /// Maps prefix-model families onto the base family they replace.
    pub fn base_equivalent(self) -> Family {
        match self {
            Family::PrefixAuxImplies => Family::AuxImplies,
            Family::PrefixAuxBack => Family::AuxBack,
            Family::PrefixAuxOr => Family::AuxOr,
            Family::PrefixNegative => Family::Negative,
            f => f,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.number() {
            Some(n) => write!(f, "({n})"),
            None => match self {
                Family::Redundant => f.write_str("redundant"),
                _ => f.write_str("unsat-marker"),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub family: Family,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub word: Option<WordRef>,
}

/// Decode metadata for an auxiliary variable.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuxInfo {
    pub id: Var,
    pub word: WordRef,
    /// Ending state of the path; 0 for an unsat marker.
    pub end: State,
    /// Full state path starting at state 1; empty for an unsat marker.
    pub path: Vec<State>,
}

pub fn var_final(j: State, k: u32) -> Result<Var> {
    check(j as usize, k as usize, "state")?;
    Ok(Var(j))
}

pub fn var_delta(a: SymbolId, i: State, j: State, k: u32, n: usize) -> Result<Var> {
    check(a.0 as usize, n, "symbol id")?;
    check(i as usize, k as usize, "state")?;
    check(j as usize, k as usize, "state")?;
    Ok(Var(k + (a.0 - 1) * k * k + (i - 1) * k + j))
}

fn check(value: usize, max: usize, what: &'static str) -> Result<()> {
    if value == 0 || value > max {
        return Err(Error::OutOfRange {
            what,
            value,
            range: format!("1..={max}"),
        });
    }
    Ok(())
}

/// The fixed part of the numbering: final and transition variables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Numbering {
    pub k: u32,
    pub n: usize,
}

impl Numbering {
    pub fn final_var(self, j: State) -> Var {
        debug_assert!(j >= 1 && j <= self.k);
        Var(j)
    }

    pub fn delta_var(self, a: SymbolId, i: State, j: State) -> Var {
        debug_assert!(a.0 >= 1 && a.index() < self.n);
        debug_assert!(i >= 1 && i <= self.k && j >= 1 && j <= self.k);
        let k = self.k;
        Var(k + (a.0 - 1) * k * k + (i - 1) * k + j)
    }

    /// Number of final and transition variables.
    pub fn fixed_count(self) -> u32 {
        self.k + self.n as u32 * self.k * self.k
    }

    /// Inverse of the transition numbering.
    pub fn delta_of(self, v: Var) -> Option<(SymbolId, State, State)> {
        let k = self.k;
        if v.0 <= k || v.0 > self.fixed_count() {
            return None;
        }
        let off = v.0 - k - 1;
        let a = off / (k * k);
        let i = off % (k * k) / k;
        let j = off % k;
        Some((SymbolId(a + 1), i + 1, j + 1))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarMap {
    numbering: Numbering,
    aux: Vec<AuxInfo>,
}

impl VarMap {
    pub fn new(k: u32, n: usize) -> Self {
        VarMap {
            numbering: Numbering { k, n },
            aux: Vec::new(),
        }
    }

    pub fn numbering(&self) -> Numbering {
        self.numbering
    }

    pub fn k(&self) -> u32 {
        self.numbering.k
    }

    pub fn n(&self) -> usize {
        self.numbering.n
    }

    pub fn final_var(&self, j: State) -> Var {
        self.numbering.final_var(j)
    }

    pub fn delta_var(&self, a: SymbolId, i: State, j: State) -> Var {
        self.numbering.delta_var(a, i, j)
    }

    pub fn fixed_count(&self) -> u32 {
        self.numbering.fixed_count()
    }

    pub fn delta_of(&self, v: Var) -> Option<(SymbolId, State, State)> {
        self.numbering.delta_of(v)
    }

    pub fn aux(&self) -> &[AuxInfo] {
        &self.aux
    }

    pub fn aux_count(&self) -> usize {
        self.aux.len()
    }

    pub fn total(&self) -> u32 {
        self.fixed_count() + self.aux.len() as u32
    }

    fn alloc_aux(&mut self, word: WordRef, end: State, path: Vec<State>) -> Var {
        let id = Var(self.total() + 1);
        self.aux.push(AuxInfo {
            id,
            word,
            end,
            path,
        });
        id
    }
}

/// A finished CNF instance with per-clause provenance.
#[derive(Clone, Debug)]
pub struct CnfInstance {
    varmap: VarMap,
    clauses: Vec<Clause>,
    provenance: Vec<Provenance>,
    pub report: EncodeReport,
}

impl CnfInstance {
    pub fn varmap(&self) -> &VarMap {
        &self.varmap
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn provenance(&self) -> &[Provenance] {
        &self.provenance
    }

    pub fn num_vars(&self) -> u32 {
        self.varmap.total()
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    /// Clauses paired with their provenance.
    pub fn tagged(&self) -> impl Iterator<Item = (&Clause, &Provenance)> {
        self.clauses.iter().zip(&self.provenance)
    }

    pub fn to_dimacs(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        write_dimacs(self, &mut buf).expect("writing to a Vec cannot fail");
        buf
    }
}

/// Incrementally builds a [`CnfInstance`]. Confined to one encoder run.
#[derive(Debug)]
pub struct CnfBuilder {
    varmap: VarMap,
    clauses: Vec<Clause>,
    provenance: Vec<Provenance>,
}

impl CnfBuilder {
    pub fn new(k: u32, n: usize) -> Self {
        CnfBuilder {
            varmap: VarMap::new(k, n),
            clauses: Vec::new(),
            provenance: Vec::new(),
        }
    }

    pub fn varmap(&self) -> &VarMap {
        &self.varmap
    }

    pub fn new_aux(&mut self, word: WordRef, end: State, path: Vec<State>) -> Var {
        self.varmap.alloc_aux(word, end, path)
    }

    pub fn add(&mut self, lits: impl IntoIterator<Item = Lit>, family: Family, word: Option<WordRef>) {
        let clause = Clause::new(lits);
        debug_assert!(clause.lits().iter().all(|l| l.var().0 <= self.varmap.total()));
        self.clauses.push(clause);
        self.provenance.push(Provenance { family, word });
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn finish(self, report: EncodeReport) -> CnfInstance {
        CnfInstance {
            varmap: self.varmap,
            clauses: self.clauses,
            provenance: self.provenance,
            report,
        }
    }
}

/// Writes `p cnf V C` and then one zero-terminated clause per line. Returns
/// the number of bytes written.
pub fn write_dimacs(inst: &CnfInstance, sink: &mut impl Write) -> io::Result<usize> {
    let mut w = CountingWriter { inner: sink, count: 0 };
    writeln!(w, "p cnf {} {}", inst.num_vars(), inst.num_clauses())?;
    let mut line = String::new();
    for c in inst.clauses() {
        line.clear();
        for l in c.lits() {
            line.push_str(&l.dimacs().to_string());
            line.push(' ');
        }
        line.push_str("0\n");
        w.write_all(line.as_bytes())?;
    }
    w.flush()?;
    Ok(w.count)
}

struct CountingWriter<'a, W: Write> {
    inner: &'a mut W,
    count: usize,
}

impl<W: Write> Write for CountingWriter<'_, W> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.count += n;
        Ok(n)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyStats {
    pub clauses: usize,
    /// clause arity → count
    pub arity: BTreeMap<usize, usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceStats {
    pub variables: u32,
    pub aux_variables: usize,
    pub clauses: usize,
    pub arity: BTreeMap<usize, usize>,
    pub families: BTreeMap<Family, FamilyStats>,
}

impl InstanceStats {
    pub fn family(&self, f: Family) -> FamilyStats {
        self.families.get(&f).cloned().unwrap_or_default()
    }

    pub fn family_arity(&self, f: Family, arity: usize) -> usize {
        self.families
            .get(&f)
            .and_then(|s| s.arity.get(&arity).copied())
            .unwrap_or(0)
    }
}

pub fn instance_stats(inst: &CnfInstance) -> InstanceStats {
    let mut stats = InstanceStats {
        variables: inst.num_vars(),
        aux_variables: inst.varmap().aux_count(),
        clauses: inst.num_clauses(),
        ..Default::default()
    };
    for (c, p) in inst.tagged() {
        *stats.arity.entry(c.len()).or_default() += 1;
        let fam = stats.families.entry(p.family).or_default();
        fam.clauses += 1;
        *fam.arity.entry(c.len()).or_default() += 1;
    }
    stats
}
