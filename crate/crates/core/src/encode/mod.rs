//! Compilation of a labeled sample into CNF.
//!
//! Every model shares the same skeleton. Each nonempty word is expanded into
//! its candidate state paths from state 1 (a *c_transition* is the set of
//! transition variables along one path). A positive word gets one auxiliary
//! variable per surviving path, Tseitin-equivalenced to `path ∧ f_end`, plus
//! a clause requiring one of them. A negative word gets one clause
//! `¬path ∨ ¬f_end` per surviving path. The variants only differ in which
//! paths survive:
//!
//! * [`Variant::Base`] keeps every path,
//! * [`Variant::All`] drops paths subsumed by a negative word's path,
//! * [`Variant::Mset`] does the same against a database restricted by the
//!   word-multiset lattice,
//! * [`Variant::Prefix`] drops paths whose state at a negative-prefix
//!   boundary equals the final state, without any database.
//!
//! When λ is negative, paths ending in state 1 are never generated.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cnf::{instance_stats, CnfBuilder, CnfInstance, Family, InstanceStats, Lit, Numbering, Var};
use crate::nfa::State;
use crate::sample::{LabeledSample, Sign, Word, WordRef};
use crate::{Error, Result};

pub mod mset;
pub mod prefix;
pub mod subsume;

pub use mset::{base_set, build_lattice, MultisetLattice};
pub use prefix::{enumerate_prefix_paths, nested_prefix_cuts, PrefixDecomposition};
pub use subsume::{build_ccouple_db, CCouple, CCoupleDb, Origin};

/// Default cap on stored c_couples for the subsumption databases.
pub const DEFAULT_CCOUPLE_CAP: usize = 50_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Fixed(u32),
    Max,
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Level::Fixed(l) => write!(f, "{l}"),
            Level::Max => f.write_str("max"),
        }
    }
}

impl FromStr for Level {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "max" {
            return Ok(Level::Max);
        }
        s.parse()
            .map(Level::Fixed)
            .map_err(|_| Error::InvalidArgument(format!("level must be an integer or \"max\", got {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Base,
    All,
    Mset(Level),
    Prefix,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variant::Base => f.write_str("base"),
            Variant::All => f.write_str("all"),
            Variant::Mset(l) => write!(f, "mset:{l}"),
            Variant::Prefix => f.write_str("prefix"),
        }
    }
}

impl FromStr for Variant {
    type Err = Error;
    /// Accepts `base`, `all`, `prefix`, `mset` (max level) and `mset:<l>`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "base" => Ok(Variant::Base),
            "all" => Ok(Variant::All),
            "prefix" => Ok(Variant::Prefix),
            "mset" => Ok(Variant::Mset(Level::Max)),
            _ => match s.strip_prefix("mset:") {
                Some(l) => Ok(Variant::Mset(l.parse()?)),
                None => Err(Error::InvalidArgument(format!("unknown model {s:?}"))),
            },
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrefixMode {
    /// Boundary states only differ from the final state.
    #[default]
    Sound,
    /// Boundary states and the final state are pairwise distinct.
    Literal,
}

impl FromStr for PrefixMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sound" => Ok(PrefixMode::Sound),
            "literal" => Ok(PrefixMode::Literal),
            _ => Err(Error::InvalidArgument(format!("unknown prefix mode {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EncodeOptions {
    pub variant: Variant,
    /// Emit the unreachable-state clauses.
    pub redundant: bool,
    /// Remove repeated transition variables inside one path.
    pub dedup_within: bool,
    /// Emit a path only once when another path of the same word has the same
    /// variable set and ending state.
    pub dedup_across_paths: bool,
    pub prefix_mode: PrefixMode,
    pub ccouple_cap: usize,
    /// Drop paths ending in state 1 when λ is negative.
    pub lambda_end_filter: bool,
    #[serde(skip)]
    pub deadline: Option<Instant>,
}

impl Default for EncodeOptions {
    fn default() -> Self {
        EncodeOptions {
            variant: Variant::Base,
            redundant: true,
            dedup_within: true,
            dedup_across_paths: false,
            prefix_mode: PrefixMode::Sound,
            ccouple_cap: DEFAULT_CCOUPLE_CAP,
            lambda_end_filter: true,
            deadline: None,
        }
    }
}

impl EncodeOptions {
    pub fn with_variant(variant: Variant) -> Self {
        EncodeOptions {
            variant,
            ..Default::default()
        }
    }
}

/// One candidate path of a word.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CTransition {
    /// Transition variables along the path, in path order. Repeats are
    /// removed when within-path deduplication is on.
    pub vars: Vec<Var>,
    /// States `1 = i_1, i_2, ..., i_{|w|+1}`.
    pub path: Vec<State>,
    pub end: State,
}

impl CTransition {
    pub fn from_path(vm: Numbering, w: &Word, path: Vec<State>, dedup: bool) -> Self {
        let mut vars = Vec::with_capacity(w.len());
        for (p, s) in w.symbols().iter().enumerate() {
            let v = vm.delta_var(*s, path[p], path[p + 1]);
            if !dedup || !vars.contains(&v) {
                vars.push(v);
            }
        }
        let end = *path.last().expect("path has at least one state");
        CTransition { vars, path, end }
    }

    /// Sorted distinct variables: the set view used for subsumption.
    pub fn var_set(&self) -> Vec<Var> {
        let mut v = self.vars.clone();
        v.sort_unstable();
        v.dedup();
        v
    }
}

/// Depth-first enumeration of state sequences `i_2..i_{len+1}` in
/// lexicographic order, where `allow(pos, prefix, state)` decides whether
/// `state` may follow `prefix` at position `pos`.
pub(crate) struct PathIter<F> {
    len: usize,
    k: State,
    states: Vec<State>,
    started: bool,
    done: bool,
    allow: F,
}

impl<F: FnMut(usize, &[State], State) -> bool> PathIter<F> {
    pub(crate) fn new(len: usize, k: State, allow: F) -> Self {
        PathIter {
            len,
            k,
            states: Vec::with_capacity(len),
            started: false,
            done: len == 0,
            allow,
        }
    }

    fn fill(&mut self, mut start: State) -> bool {
        loop {
            if self.states.len() == self.len {
                return true;
            }
            let pos = self.states.len();
            let found = (start..=self.k).find(|&s| (self.allow)(pos, &self.states, s));
            match found {
                Some(s) => {
                    self.states.push(s);
                    start = 1;
                }
                None => match self.states.pop() {
                    Some(last) => start = last + 1,
                    None => return false,
                },
            }
        }
    }
}

impl<F: FnMut(usize, &[State], State) -> bool> Iterator for PathIter<F> {
    type Item = Vec<State>;

    fn next(&mut self) -> Option<Vec<State>> {
        if self.done {
            return None;
        }
        let ok = if self.started {
            let last = self.states.pop().expect("a full path is stored");
            self.fill(last + 1)
        } else {
            self.started = true;
            self.fill(1)
        };
        if !ok {
            self.done = true;
            return None;
        }
        let mut path = Vec::with_capacity(self.len + 1);
        path.push(1);
        path.extend_from_slice(&self.states);
        Some(path)
    }
}

/// Every path from state 1 reading `w` and ending in one of `end_states`, in
/// lexicographic path order.
pub fn enumerate_ctransitions<'a>(
    vm: Numbering,
    w: &'a Word,
    end_states: &'a [State],
    dedup_within: bool,
) -> impl Iterator<Item = CTransition> + 'a {
    let len = w.len();
    PathIter::new(len, vm.k, move |pos, _, s| pos + 1 < len || end_states.contains(&s))
        .map(move |path| CTransition::from_path(vm, w, path, dedup_within))
}

/// Decides whether a path's constraints must be generated.
pub trait PathFilter {
    /// `rank` is the path's position in the word's enumeration.
    fn keep(&mut self, word: WordRef, rank: u64, ct: &CTransition) -> bool;
}

/// The base model's filter.
pub struct KeepAll;

impl PathFilter for KeepAll {
    fn keep(&mut self, _: WordRef, _: u64, _: &CTransition) -> bool {
        true
    }
}

/// Clause families used when emitting a word's paths.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Families {
    implies: Family,
    back: Family,
    or: Family,
    negative: Family,
}

impl Families {
    pub(crate) const BASE: Families = Families {
        implies: Family::AuxImplies,
        back: Family::AuxBack,
        or: Family::AuxOr,
        negative: Family::Negative,
    };
    pub(crate) const PREFIX: Families = Families {
        implies: Family::PrefixAuxImplies,
        back: Family::PrefixAuxBack,
        or: Family::PrefixAuxOr,
        negative: Family::PrefixNegative,
    };
}

/// Per-instance settings shared by all word emitters.
#[derive(Clone, Debug)]
pub struct EmitContext {
    pub k: u32,
    /// Allowed ending states: all of `1..=k`, minus state 1 when λ is
    /// negative.
    pub end_states: Vec<State>,
    pub dedup_within: bool,
    pub dedup_across_paths: bool,
    pub deadline: Option<Instant>,
}

impl EmitContext {
    pub fn new(s: &LabeledSample, k: u32, opts: &EncodeOptions) -> Self {
        let skip_first = opts.lambda_end_filter && s.lambda_negative();
        EmitContext {
            k,
            end_states: (1..=k).filter(|&j| !(skip_first && j == 1)).collect(),
            dedup_within: opts.dedup_within,
            dedup_across_paths: opts.dedup_across_paths,
            deadline: opts.deadline,
        }
    }

    pub(crate) fn check_deadline(&self, counter: u64) -> Result<()> {
        if counter.is_multiple_of(1024) {
            if let Some(d) = self.deadline {
                if Instant::now() >= d {
                    return Err(Error::GenerationTimeout);
                }
            }
        }
        Ok(())
    }
}

/// Why an instance is unsatisfiable by construction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnsatCause {
    pub word: WordRef,
    pub cause: String,
}

/// Variant-specific facts recorded while encoding.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodeReport {
    /// Paths dropped by the variant's filter.
    pub filtered_paths: u64,
    /// Paths dropped as exact duplicates of an earlier path of the same word.
    pub duplicate_paths: u64,
    pub structurally_unsat: Vec<UnsatCause>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subsumption: Option<subsume::SubsumeReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lattice: Option<mset::LatticeReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prefix: Option<prefix::PrefixReport>,
}

fn ensure_nonempty(w: &Word) {
    assert!(!w.is_empty(), "the empty word is handled by the unit clauses on f_1");
}

/// `f_1` if λ is positive, `¬f_1` if λ is negative.
pub fn emit_lambda(s: &LabeledSample, b: &mut CnfBuilder) {
    let f1 = b.varmap().final_var(1);
    if let Some(i) = s.positives().iter().position(Word::is_empty) {
        let word = Some(WordRef {
            sign: Sign::Positive,
            index: i,
        });
        b.add([Lit::pos(f1)], Family::LambdaPositive, word);
    }
    if let Some(i) = s.negatives().iter().position(Word::is_empty) {
        let word = Some(WordRef {
            sign: Sign::Negative,
            index: i,
        });
        b.add([Lit::neg(f1)], Family::LambdaNegative, word);
    }
}

/// Tseitin clauses for one positive word over the base enumeration.
/// Returns the number of auxiliary variables allocated.
pub fn emit_positive(
    ctx: &EmitContext,
    b: &mut CnfBuilder,
    report: &mut EncodeReport,
    wref: WordRef,
    w: &Word,
    filter: &mut dyn PathFilter,
) -> Result<usize> {
    ensure_nonempty(w);
    let vm = b.varmap().numbering();
    let paths = enumerate_ctransitions(vm, w, &ctx.end_states, ctx.dedup_within);
    emit_positive_paths(ctx, b, report, wref, paths, filter, Families::BASE, None)
}

/// One clause per surviving path of a negative word. Returns the number of
/// clauses emitted.
pub fn emit_negative(
    ctx: &EmitContext,
    b: &mut CnfBuilder,
    report: &mut EncodeReport,
    wref: WordRef,
    w: &Word,
    filter: &mut dyn PathFilter,
) -> Result<usize> {
    ensure_nonempty(w);
    let vm = b.varmap().numbering();
    let paths = enumerate_ctransitions(vm, w, &ctx.end_states, ctx.dedup_within);
    emit_negative_paths(ctx, b, report, wref, paths, filter, Families::BASE)
}

struct Survivors<'a> {
    ctx: &'a EmitContext,
    seen: HashSet<(State, Vec<Var>)>,
    rank: u64,
}

impl<'a> Survivors<'a> {
    fn new(ctx: &'a EmitContext) -> Self {
        Survivors {
            ctx,
            seen: HashSet::new(),
            rank: 0,
        }
    }

    fn admit(
        &mut self,
        report: &mut EncodeReport,
        wref: WordRef,
        ct: &CTransition,
        filter: &mut dyn PathFilter,
    ) -> Result<bool> {
        let rank = self.rank;
        self.rank += 1;
        self.ctx.check_deadline(rank)?;
        if self.ctx.dedup_across_paths && !self.seen.insert((ct.end, ct.var_set())) {
            report.duplicate_paths += 1;
            return Ok(false);
        }
        if !filter.keep(wref, rank, ct) {
            report.filtered_paths += 1;
            return Ok(false);
        }
        Ok(true)
    }
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn emit_positive_paths(
    ctx: &EmitContext,
    b: &mut CnfBuilder,
    report: &mut EncodeReport,
    wref: WordRef,
    paths: impl Iterator<Item = CTransition>,
    filter: &mut dyn PathFilter,
    fam: Families,
    empty_cause: Option<String>,
) -> Result<usize> {
    let mut survivors = Survivors::new(ctx);
    let mut auxes = Vec::new();
    for ct in paths {
        if !survivors.admit(report, wref, &ct, filter)? {
            continue;
        }
        let fj = b.varmap().final_var(ct.end);
        let aux = b.new_aux(wref, ct.end, ct.path);
        for &v in &ct.vars {
            b.add([Lit::neg(aux), Lit::pos(v)], fam.implies, Some(wref));
        }
        b.add([Lit::neg(aux), Lit::pos(fj)], fam.implies, Some(wref));
        b.add(
            std::iter::once(Lit::pos(aux))
                .chain(ct.vars.iter().map(|&v| Lit::neg(v)))
                .chain(std::iter::once(Lit::neg(fj))),
            fam.back,
            Some(wref),
        );
        auxes.push(aux);
    }
    if auxes.is_empty() {
        let marker = b.new_aux(wref, 0, Vec::new());
        b.add([Lit::pos(marker)], Family::UnsatMarker, Some(wref));
        b.add([Lit::neg(marker)], Family::UnsatMarker, Some(wref));
        report.structurally_unsat.push(UnsatCause {
            word: wref,
            cause: empty_cause.unwrap_or_else(|| "no candidate accepting path survives".into()),
        });
        return Ok(0);
    }
    b.add(auxes.iter().map(|&a| Lit::pos(a)), fam.or, Some(wref));
    Ok(auxes.len())
}

pub(crate) fn emit_negative_paths(
    ctx: &EmitContext,
    b: &mut CnfBuilder,
    report: &mut EncodeReport,
    wref: WordRef,
    paths: impl Iterator<Item = CTransition>,
    filter: &mut dyn PathFilter,
    fam: Families,
) -> Result<usize> {
    let mut survivors = Survivors::new(ctx);
    let mut emitted = 0;
    for ct in paths {
        if !survivors.admit(report, wref, &ct, filter)? {
            continue;
        }
        let fj = b.varmap().final_var(ct.end);
        b.add(
            ct.vars
                .iter()
                .map(|&v| Lit::neg(v))
                .chain(std::iter::once(Lit::neg(fj))),
            fam.negative,
            Some(wref),
        );
        emitted += 1;
    }
    Ok(emitted)
}

/// For every state `j ≠ 1`: if no other state has a transition into `j`,
/// then `j` is not final and has no outgoing transitions.
pub fn emit_redundant(k: u32, n: usize, b: &mut CnfBuilder) {
    let vm = b.varmap().numbering();
    let symbols = || (1..=n as u32).map(crate::sample::SymbolId);
    for j in 2..=k {
        let incoming: Vec<Lit> = symbols()
            .flat_map(|s| (1..=k).filter(move |&i| i != j).map(move |i| (s, i)))
            .map(|(s, i)| Lit::pos(vm.delta_var(s, i, j)))
            .collect();
        let mut consequents = vec![Lit::neg(vm.final_var(j))];
        for s in symbols() {
            for i in 1..=k {
                consequents.push(Lit::neg(vm.delta_var(s, j, i)));
            }
        }
        for c in consequents {
            b.add(
                incoming.iter().copied().chain(std::iter::once(c)),
                Family::Redundant,
                None,
            );
        }
    }
}

/// Builds the CNF instance for `s` with `k` states under `opts.variant`.
pub fn encode(s: &LabeledSample, k: u32, opts: &EncodeOptions) -> Result<CnfInstance> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let ctx = EmitContext::new(s, k, opts);
    let mut b = CnfBuilder::new(k, s.n());
    let mut report = EncodeReport::default();
    emit_lambda(s, &mut b);
    match opts.variant {
        Variant::Base => emit_words(s, &ctx, &mut b, &mut report, &mut KeepAll)?,
        Variant::All => subsume::encode_all(s, &ctx, opts, &mut b, &mut report)?,
        Variant::Mset(level) => mset::encode_mset(s, &ctx, level, opts, &mut b, &mut report)?,
        Variant::Prefix => prefix::encode_prefix(s, &ctx, opts.prefix_mode, &mut b, &mut report)?,
    }
    if opts.redundant {
        emit_redundant(k, s.n(), &mut b);
    }
    Ok(b.finish(report))
}

/// Emits every nonempty word in sample order, positives first.
pub(crate) fn emit_words(
    s: &LabeledSample,
    ctx: &EmitContext,
    b: &mut CnfBuilder,
    report: &mut EncodeReport,
    filter: &mut dyn PathFilter,
) -> Result<()> {
    for (wref, w) in s.labeled_words() {
        if w.is_empty() {
            continue;
        }
        match wref.sign {
            Sign::Positive => emit_positive(ctx, b, report, wref, w, filter)?,
            Sign::Negative => emit_negative(ctx, b, report, wref, w, filter)?,
        };
    }
    Ok(())
}

/// Closed-form per-family counts for one word under the base model with
/// no deduplication.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictedCounts {
    /// Binary `¬aux ∨ v` clauses.
    pub binary: u64,
    /// `(|w|+2)`-ary back-implication clauses.
    pub mid: u64,
    /// The disjunction over aux variables (0 or 1).
    pub final_clauses: u64,
    pub aux: u64,
    /// `(|w|+1)`-ary clauses of a negative word.
    pub negative: u64,
    /// Whether the word forces the contradictory unit pair instead.
    pub unsat_marker: bool,
}

pub fn predicted_base_counts(len: usize, k: u32, sign: Sign, lambda_negative: bool) -> PredictedCounts {
    assert!(len >= 1);
    let ends = if lambda_negative { k as u64 - 1 } else { k as u64 };
    let paths = ends * (k as u64).pow(len as u32 - 1);
    match sign {
        Sign::Positive => PredictedCounts {
            binary: (len as u64 + 1) * paths,
            mid: paths,
            final_clauses: u64::from(paths > 0),
            aux: paths,
            negative: 0,
            unsat_marker: paths == 0,
        },
        Sign::Negative => PredictedCounts {
            negative: paths,
            ..Default::default()
        },
    }
}

/// JSON sidecar describing an instance.
#[derive(Clone, Debug, Serialize)]
pub struct Metadata<'a> {
    pub k: u32,
    pub n: usize,
    pub alphabet: &'a [String],
    pub variant: String,
    pub options: &'a EncodeOptions,
    pub var_blocks: VarBlocks,
    pub aux: &'a [crate::cnf::AuxInfo],
    pub stats: InstanceStats,
    pub report: &'a EncodeReport,
}

/// Inclusive id ranges; an empty block has `first > last`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct VarBlocks {
    pub finals: [u32; 2],
    pub delta: [u32; 2],
    pub aux: [u32; 2],
}

pub fn metadata<'a>(s: &'a LabeledSample, inst: &'a CnfInstance, opts: &'a EncodeOptions) -> Metadata<'a> {
    let vm = inst.varmap();
    Metadata {
        k: vm.k(),
        n: vm.n(),
        alphabet: s.alphabet().tokens(),
        variant: opts.variant.to_string(),
        options: opts,
        var_blocks: VarBlocks {
            finals: [1, vm.k()],
            delta: [vm.k() + 1, vm.fixed_count()],
            aux: [vm.fixed_count() + 1, vm.total()],
        },
        aux: vm.aux(),
        stats: instance_stats(inst),
        report: &inst.report,
    }
}

#[cfg(test)]
mod tests;
