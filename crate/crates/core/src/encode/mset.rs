//! The multiset-lattice model.
//!
//! Words are grouped by their multiset of symbols. The sample's distinct
//! multisets, together with `⊥` (all zero) and `⊤` (one more than the largest
//! count of every symbol), form a lattice under inclusion. A word of node `m`
//! is only compared against c_couples of negative words whose node lies
//! strictly below `m` and has level at most `l`, plus its anagrams (other
//! negative words of node `m`). Level 0 gives an empty database and the base
//! model.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::subsume::{word_ccouples, CCouple, CCoupleDb, CCoupleDbBuilder, Origin, SubsumeReport};
use super::{emit_words, CTransition, EmitContext, EncodeOptions, EncodeReport, KeepAll, Level, PathFilter};
use crate::cnf::CnfBuilder;
use crate::sample::{multiset_of, LabeledSample, Sign, WordMultiset, WordRef};
use crate::Result;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeNode {
    pub ms: WordMultiset,
    pub level: u32,
    /// Indices into the sample's positive list.
    pub positives: Vec<usize>,
    /// Indices into the sample's negative list.
    pub negatives: Vec<usize>,
}

/// `MS(S) ∪ {⊥, ⊤(S)}` ordered by multiset inclusion.
///
/// `nodes[0]` is `⊥` (holding λ if the sample has it); the remaining nodes
/// are the sample's other multisets sorted by level, then by counts.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MultisetLattice {
    nodes: Vec<LatticeNode>,
    top: WordMultiset,
    /// below[i]: indices of sample nodes (never ⊥) strictly included in node i
    below: Vec<Vec<usize>>,
    max_level: u32,
}

impl MultisetLattice {
    pub fn nodes(&self) -> &[LatticeNode] {
        &self.nodes
    }

    pub fn bottom(&self) -> &LatticeNode {
        &self.nodes[0]
    }

    pub fn top(&self) -> &WordMultiset {
        &self.top
    }

    /// Level of `⊤`: one above every sample node.
    pub fn top_level(&self) -> u32 {
        self.max_level + 1
    }

    /// Largest level of a sample node.
    pub fn max_level(&self) -> u32 {
        self.max_level
    }

    pub fn node_of(&self, ms: &WordMultiset) -> Option<usize> {
        self.nodes.iter().position(|n| &n.ms == ms)
    }

    /// Sample nodes strictly below node `i`.
    pub fn strictly_below(&self, i: usize) -> &[usize] {
        &self.below[i]
    }

    /// Graphviz rendering of the covering relation, `⊤` included.
    pub fn to_dot(&self, alphabet: &[String]) -> String {
        let label = |ms: &WordMultiset| -> String {
            let parts: Vec<String> = ms
                .counts
                .iter()
                .zip(alphabet)
                .filter(|(c, _)| **c > 0)
                .map(|(c, t)| format!("{t}^{c}"))
                .collect();
            if parts.is_empty() {
                "⊥".into()
            } else {
                parts.join(" ")
            }
        };
        let mut out = String::from("digraph lattice {\n  rankdir=BT;\n");
        for (i, n) in self.nodes.iter().enumerate() {
            let _ = writeln!(
                out,
                "  m{i} [label=\"{}\\nlevel {} (+{} -{})\"];",
                label(&n.ms),
                n.level,
                n.positives.len(),
                n.negatives.len()
            );
        }
        let _ = writeln!(out, "  top [label=\"⊤\\nlevel {}\"];", self.top_level());
        for i in 1..self.nodes.len() {
            // covers: j below i with nothing in between
            let below = &self.below[i];
            let covers: Vec<usize> = below
                .iter()
                .copied()
                .filter(|&j| !below.iter().any(|&m| self.below[m].contains(&j)))
                .collect();
            if covers.is_empty() {
                let _ = writeln!(out, "  m0 -> m{i};");
            }
            for j in covers {
                let _ = writeln!(out, "  m{j} -> m{i};");
            }
        }
        let maximal = (1..self.nodes.len()).filter(|&i| !self.below.iter().any(|b| b.contains(&i)));
        let mut any = false;
        for i in maximal {
            any = true;
            let _ = writeln!(out, "  m{i} -> top;");
        }
        if !any {
            out.push_str("  m0 -> top;\n");
        }
        out.push_str("}\n");
        out
    }
}

pub fn build_lattice(s: &LabeledSample) -> MultisetLattice {
    let n = s.n();
    let mut groups: HashMap<WordMultiset, (Vec<usize>, Vec<usize>)> = HashMap::new();
    for (r, w) in s.labeled_words() {
        let g = groups.entry(multiset_of(w, n)).or_default();
        match r.sign {
            Sign::Positive => g.0.push(r.index),
            Sign::Negative => g.1.push(r.index),
        }
    }
    let bottom_ms = WordMultiset::bottom(n);
    let (bp, bn) = groups.remove(&bottom_ms).unwrap_or_default();

    // strict inclusion implies a strictly smaller size, so processing by
    // size sees every lower node first
    let mut pending: Vec<(WordMultiset, Vec<usize>, Vec<usize>)> =
        groups.into_iter().map(|(ms, (p, q))| (ms, p, q)).collect();
    pending.sort_by(|a, b| a.0.size().cmp(&b.0.size()).then_with(|| a.0.counts.cmp(&b.0.counts)));
    let mut levels: Vec<u32> = Vec::with_capacity(pending.len());
    for (i, (ms, _, _)) in pending.iter().enumerate() {
        let lvl = 1 + (0..i)
            .filter(|&j| pending[j].0.is_strict_subset(ms))
            .map(|j| levels[j])
            .max()
            .unwrap_or(0);
        levels.push(lvl);
    }
    let mut sample_nodes: Vec<LatticeNode> = pending
        .into_iter()
        .zip(levels)
        .map(|((ms, positives, negatives), level)| LatticeNode {
            ms,
            level,
            positives,
            negatives,
        })
        .collect();
    sample_nodes.sort_by(|a, b| a.level.cmp(&b.level).then_with(|| a.ms.counts.cmp(&b.ms.counts)));
    let max_level = sample_nodes.iter().map(|n| n.level).max().unwrap_or(0);

    let mut nodes = vec![LatticeNode {
        ms: bottom_ms,
        level: 0,
        positives: bp,
        negatives: bn,
    }];
    nodes.extend(sample_nodes);

    let below = (0..nodes.len())
        .map(|i| {
            (1..nodes.len())
                .filter(|&j| nodes[j].ms.is_strict_subset(&nodes[i].ms))
                .collect()
        })
        .collect();

    let mut top = vec![0u32; n];
    for node in &nodes {
        for (t, c) in top.iter_mut().zip(&node.ms.counts) {
            *t = (*t).max(*c);
        }
    }
    let top = WordMultiset {
        counts: top.into_iter().map(|c| c + 1).collect(),
    };

    MultisetLattice {
        nodes,
        top,
        below,
        max_level,
    }
}

/// Sample nodes strictly below node `m` whose level is at most `l`.
pub fn base_set(lat: &MultisetLattice, m: usize, l: Level) -> Vec<usize> {
    lat.below[m]
        .iter()
        .copied()
        .filter(|&j| match l {
            Level::Max => true,
            Level::Fixed(l) => lat.nodes[j].level <= l,
        })
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeReport {
    pub nodes: usize,
    pub max_level: u32,
    /// Effective threshold after resolving `max`.
    pub level: u32,
    /// Filter hits per node, indexed like the lattice nodes.
    pub node_hits: Vec<u64>,
}

struct LatticeFilter {
    node_of_positive: Vec<usize>,
    node_of_negative: Vec<usize>,
    // one database per node; None when nothing below and no anagrams
    dbs: Vec<Option<CCoupleDb>>,
    hits: Vec<u64>,
    report: SubsumeReport,
}

impl PathFilter for LatticeFilter {
    fn keep(&mut self, word: WordRef, rank: u64, ct: &CTransition) -> bool {
        let (node, group) = match word.sign {
            Sign::Positive => (self.node_of_positive[word.index], Origin::QUERY_GROUP),
            Sign::Negative => {
                let node = self.node_of_negative[word.index];
                (node, node as u32)
            }
        };
        let Some(db) = &self.dbs[node] else {
            return true;
        };
        let c = CCouple::new(
            ct,
            Origin {
                group,
                word: word.index as u32,
                rank,
            },
        );
        let hit = db.is_subsumed_excluding(&c, true);
        if hit {
            self.hits[node] += 1;
            match word.sign {
                Sign::Positive => self.report.hits_positive += 1,
                Sign::Negative => self.report.hits_negative += 1,
            }
        }
        !hit
    }
}

pub(crate) fn encode_mset(
    s: &LabeledSample,
    ctx: &EmitContext,
    level: Level,
    opts: &EncodeOptions,
    b: &mut CnfBuilder,
    report: &mut EncodeReport,
) -> Result<()> {
    let lat = build_lattice(s);
    let effective = match level {
        Level::Max => lat.max_level(),
        Level::Fixed(l) => l.min(lat.max_level()),
    };
    let mut lattice_report = LatticeReport {
        nodes: lat.nodes().len() + 1,
        max_level: lat.max_level(),
        level: effective,
        node_hits: vec![0; lat.nodes().len()],
    };
    if effective == 0 {
        emit_words(s, ctx, b, report, &mut KeepAll)?;
        report.lattice = Some(lattice_report);
        return Ok(());
    }

    let numbering = b.varmap().numbering();
    // c_couples of every negative word, keyed by node rank
    let mut node_of_negative = vec![0; s.negatives().len()];
    let mut node_of_positive = vec![0; s.positives().len()];
    let mut couples: Vec<Vec<CCouple>> = vec![Vec::new(); lat.nodes().len()];
    for (i, node) in lat.nodes().iter().enumerate() {
        for &p in &node.positives {
            node_of_positive[p] = i;
        }
        for &q in &node.negatives {
            node_of_negative[q] = i;
            let w = &s.negatives()[q];
            if !w.is_empty() {
                couples[i].extend(word_ccouples(ctx, numbering, w, i as u32, q as u32)?);
            }
        }
    }

    let mut dbs = Vec::with_capacity(lat.nodes().len());
    let mut sub = SubsumeReport::default();
    for i in 0..lat.nodes().len() {
        let sources: Vec<usize> = base_set(&lat, i, Level::Fixed(effective))
            .into_iter()
            .chain(std::iter::once(i))
            .collect();
        if sources.iter().all(|&j| couples[j].is_empty()) {
            dbs.push(None);
            continue;
        }
        let mut db = CCoupleDbBuilder::new(ctx.k, opts.ccouple_cap, "mset");
        for j in sources {
            for c in &couples[j] {
                db.insert(c.clone())?;
            }
        }
        let db = db.build();
        sub.db_entries += db.len();
        dbs.push(Some(db));
    }

    let mut filter = LatticeFilter {
        node_of_positive,
        node_of_negative,
        dbs,
        hits: vec![0; lat.nodes().len()],
        report: sub,
    };
    emit_words(s, ctx, b, report, &mut filter)?;
    lattice_report.node_hits = filter.hits;
    report.lattice = Some(lattice_report);
    report.subsumption = Some(filter.report);
    Ok(())
}
