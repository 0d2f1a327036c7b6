//! The subsumption-reduced model.
//!
//! Every path of every negative word, paired with its ending state (a
//! *c_couple*), is stored in a database. A path of any word whose variable
//! set contains a stored set with the same ending state is redundant. For a
//! positive word its auxiliary variable would be forced false. For a negative
//! word its clause is entailed by the stored one. Such paths are not
//! generated.
//!
//! Equal sets are resolved by a canonical origin order, so out of a group of
//! identical c_couples exactly one is kept.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{emit_words, CTransition, EmitContext, EncodeOptions, EncodeReport, PathFilter};
use crate::cnf::{CnfBuilder, Var};
use crate::nfa::State;
use crate::sample::{LabeledSample, Sign, WordRef};
use crate::{Error, Result};

/// Canonical position of a c_couple. Lower origins win ties between equal
/// sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Origin {
    pub group: u32,
    pub word: u32,
    pub rank: u64,
}

impl Origin {
    /// Group used for query words that are never stored (positives).
    pub const QUERY_GROUP: u32 = u32::MAX;

    fn word_key(self) -> (u32, u32) {
        (self.group, self.word)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CCouple {
    /// Sorted, distinct transition variables.
    pub vars: Vec<Var>,
    pub end: State,
    pub origin: Origin,
}

impl CCouple {
    pub fn new(ct: &CTransition, origin: Origin) -> Self {
        CCouple {
            vars: ct.var_set(),
            end: ct.end,
            origin,
        }
    }
}

fn signature(vars: &[Var]) -> u64 {
    vars.iter().fold(0, |s, v| s | 1u64 << (v.0 % 64))
}

/// `a ⊆ b` for sorted slices.
fn is_subset(a: &[Var], b: &[Var]) -> bool {
    let mut it = b.iter();
    'outer: for x in a {
        for y in it.by_ref() {
            if y == x {
                continue 'outer;
            }
            if y > x {
                return false;
            }
        }
        return false;
    }
    true
}

#[derive(Clone, Debug)]
struct Entry {
    vars: Vec<Var>,
    sig: u64,
    // the two smallest origins coming from distinct words, ascending
    origins: Vec<Origin>,
}

impl Entry {
    fn add_origin(&mut self, o: Origin) {
        match self.origins.iter_mut().find(|x| x.word_key() == o.word_key()) {
            Some(x) => *x = (*x).min(o),
            None => self.origins.push(o),
        }
        self.origins.sort();
        self.origins.truncate(2);
    }

    fn first_origin_excluding(&self, exclude: Option<(u32, u32)>) -> Option<Origin> {
        self.origins
            .iter()
            .copied()
            .find(|o| Some(o.word_key()) != exclude)
    }
}

/// Accumulates c_couples, merging exact duplicates.
#[derive(Debug)]
pub struct CCoupleDbBuilder {
    k: u32,
    cap: usize,
    model: &'static str,
    entries: HashMap<(State, Vec<Var>), Entry>,
}

impl CCoupleDbBuilder {
    pub fn new(k: u32, cap: usize, model: &'static str) -> Self {
        CCoupleDbBuilder {
            k,
            cap,
            model,
            entries: HashMap::new(),
        }
    }

    pub fn insert(&mut self, c: CCouple) -> Result<()> {
        debug_assert!(!c.vars.is_empty());
        debug_assert!(c.end >= 1 && c.end <= self.k);
        let key = (c.end, c.vars);
        if let Some(e) = self.entries.get_mut(&key) {
            e.add_origin(c.origin);
            return Ok(());
        }
        if self.entries.len() >= self.cap {
            return Err(Error::BudgetExceeded {
                model: self.model,
                cap: self.cap,
            });
        }
        let vars = key.1.clone();
        self.entries.insert(
            key,
            Entry {
                sig: signature(&vars),
                vars,
                origins: vec![c.origin],
            },
        );
        Ok(())
    }

    pub fn build(self) -> CCoupleDb {
        let mut by_end: Vec<Vec<Entry>> = vec![Vec::new(); self.k as usize];
        let len = self.entries.len();
        for ((end, _), e) in self.entries {
            by_end[end as usize - 1].push(e);
        }
        for list in &mut by_end {
            list.sort_by(|a, b| a.vars.len().cmp(&b.vars.len()).then_with(|| a.vars.cmp(&b.vars)));
        }
        CCoupleDb { by_end, len }
    }
}

/// Immutable c_couple database, per ending state and by ascending set size.
#[derive(Debug, Default)]
pub struct CCoupleDb {
    by_end: Vec<Vec<Entry>>,
    len: usize,
}

impl CCoupleDb {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// True iff a stored set with the same ending state is a subset of
    /// `c.vars`. An equal set only counts when its origin precedes `c`'s.
    pub fn is_subsumed(&self, c: &CCouple) -> bool {
        self.is_subsumed_excluding(c, false)
    }

    /// Like [`CCoupleDb::is_subsumed`], optionally ignoring entries that come
    /// from the query's own word.
    pub fn is_subsumed_excluding(&self, c: &CCouple, exclude_own_word: bool) -> bool {
        let Some(list) = self.by_end.get(c.end as usize - 1) else {
            return false;
        };
        let exclude = exclude_own_word.then(|| c.origin.word_key());
        let qsig = signature(&c.vars);
        for e in list {
            if e.vars.len() > c.vars.len() {
                break;
            }
            if e.sig & !qsig != 0 || !is_subset(&e.vars, &c.vars) {
                continue;
            }
            let Some(origin) = e.first_origin_excluding(exclude) else {
                continue;
            };
            if e.vars.len() < c.vars.len() || origin < c.origin {
                return true;
            }
        }
        false
    }

    /// Stored entries as `(end, vars)` pairs, for inspection.
    pub fn entries(&self) -> impl Iterator<Item = (State, &[Var])> {
        self.by_end.iter().enumerate().flat_map(|(i, list)| {
            list.iter().map(move |e| (i as State + 1, e.vars.as_slice()))
        })
    }
}

/// Every c_couple of a negative word, in enumeration order.
pub(crate) fn word_ccouples(
    ctx: &EmitContext,
    numbering: crate::cnf::Numbering,
    w: &crate::sample::Word,
    group: u32,
    word: u32,
) -> Result<Vec<CCouple>> {
    let mut out = Vec::new();
    for (rank, ct) in super::enumerate_ctransitions(numbering, w, &ctx.end_states, true).enumerate() {
        ctx.check_deadline(rank as u64)?;
        out.push(CCouple::new(
            &ct,
            Origin {
                group,
                word,
                rank: rank as u64,
            },
        ));
    }
    Ok(out)
}

/// Stores every c_couple of every nonempty negative word.
pub fn build_ccouple_db(s: &LabeledSample, k: u32, opts: &EncodeOptions) -> Result<CCoupleDb> {
    let ctx = EmitContext::new(s, k, opts);
    let numbering = crate::cnf::Numbering { k, n: s.n() };
    let mut b = CCoupleDbBuilder::new(k, opts.ccouple_cap, "all");
    for (i, w) in s.negatives().iter().enumerate() {
        if w.is_empty() {
            continue;
        }
        for c in word_ccouples(&ctx, numbering, w, 0, i as u32)? {
            b.insert(c)?;
        }
    }
    Ok(b.build())
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsumeReport {
    /// Distinct c_couples stored (summed over databases for the lattice
    /// model).
    pub db_entries: usize,
    pub hits_positive: u64,
    pub hits_negative: u64,
}

/// Filter backed by a single database; negatives occupy group 0.
struct DbFilter<'a> {
    db: &'a CCoupleDb,
    report: SubsumeReport,
}

impl PathFilter for DbFilter<'_> {
    fn keep(&mut self, word: WordRef, rank: u64, ct: &CTransition) -> bool {
        let group = match word.sign {
            Sign::Positive => Origin::QUERY_GROUP,
            Sign::Negative => 0,
        };
        let c = CCouple::new(
            ct,
            Origin {
                group,
                word: word.index as u32,
                rank,
            },
        );
        let hit = self.db.is_subsumed(&c);
        if hit {
            match word.sign {
                Sign::Positive => self.report.hits_positive += 1,
                Sign::Negative => self.report.hits_negative += 1,
            }
        }
        !hit
    }
}

pub(crate) fn encode_all(
    s: &LabeledSample,
    ctx: &EmitContext,
    opts: &EncodeOptions,
    b: &mut CnfBuilder,
    report: &mut EncodeReport,
) -> Result<()> {
    let db = build_ccouple_db(s, ctx.k, opts)?;
    let mut filter = DbFilter {
        db: &db,
        report: SubsumeReport {
            db_entries: db.len(),
            ..Default::default()
        },
    };
    emit_words(s, ctx, b, report, &mut filter)?;
    report.subsumption = Some(filter.report);
    Ok(())
}
