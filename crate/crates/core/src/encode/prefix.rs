//! The negative-prefix model.
//!
//! When `w = u_1 u_2 … u_n` and every `u_1…u_i` (`i < n`) is a negative word,
//! a path of `w` whose state after `u_1…u_i` equals the final state `j` is
//! already ruled out by the prefix's own negative clause. Such paths are
//! never generated. No database is needed: the cuts come straight from the
//! negative word set.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{
    emit_negative, emit_negative_paths, emit_positive, emit_positive_paths, CTransition, EmitContext, EncodeReport,
    Families, KeepAll, PathIter, PrefixMode,
};
use crate::cnf::{CnfBuilder, Numbering};
use crate::nfa::State;
use crate::sample::{LabeledSample, Sign, SymbolId, Word, WordRef};
use crate::Result;

/// Cut positions `0 < p_1 < … < p_{n-1} < |w|` where `w[1..p_i]` is negative.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrefixDecomposition {
    pub cuts: Vec<usize>,
}

impl PrefixDecomposition {
    /// Number of segments.
    pub fn n(&self) -> usize {
        self.cuts.len() + 1
    }

    pub fn segments<'a>(&self, w: &'a Word) -> Vec<&'a [SymbolId]> {
        let mut out = Vec::with_capacity(self.n());
        let mut start = 0;
        for &c in self.cuts.iter().chain(std::iter::once(&w.len())) {
            out.push(&w.symbols()[start..c]);
            start = c;
        }
        out
    }
}

/// Greedy left-to-right scan: every proper nonempty prefix of `w` found in
/// `negatives` becomes a cut.
pub fn nested_prefix_cuts<'a>(w: &Word, negatives: impl IntoIterator<Item = &'a Word>) -> PrefixDecomposition {
    let set: HashSet<&[SymbolId]> = negatives
        .into_iter()
        .filter(|v| !v.is_empty() && v.len() < w.len())
        .map(Word::symbols)
        .collect();
    PrefixDecomposition {
        cuts: (1..w.len()).filter(|&p| set.contains(&w.symbols()[..p])).collect(),
    }
}

/// Paths of `w` ending in `end_states` whose boundary states obey `mode`, in
/// lexicographic order.
pub fn enumerate_prefix_paths<'a>(
    numbering: Numbering,
    w: &'a Word,
    dec: &'a PrefixDecomposition,
    end_states: &'a [State],
    mode: PrefixMode,
    dedup_within: bool,
) -> impl Iterator<Item = CTransition> + 'a {
    let len = w.len();
    // the state after p symbols sits at index p-1 of the partial sequence
    let boundary = |prefix: &[State]| -> Vec<State> { dec.cuts.iter().map(|&p| prefix[p - 1]).collect() };
    let allow = move |pos: usize, prefix: &[State], s: State| {
        if mode == PrefixMode::Literal && dec.cuts.contains(&(pos + 1)) {
            let earlier = dec.cuts.iter().take_while(|&&p| p < pos + 1);
            if earlier.map(|&p| prefix[p - 1]).any(|l| l == s) {
                return false;
            }
        }
        if pos + 1 < len {
            return true;
        }
        end_states.contains(&s) && !boundary(prefix).contains(&s)
    };
    PathIter::new(len, numbering.k, allow).map(move |path| CTransition::from_path(numbering, w, path, dedup_within))
}

/// `∏_{i=1}^{n} (k-i+1)`: aux count when only boundary states are indexed.
pub fn boundary_aux_count(k: u32, n: usize) -> u64 {
    (1..=n as u64).map(|i| (k as u64 + 1).saturating_sub(i)).product()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrefixWordInfo {
    pub word: WordRef,
    pub n: usize,
    pub cuts: Vec<usize>,
    /// Aux variables actually allocated (positives only).
    pub aux: u64,
    /// The boundary-only count `∏ (k-i+1)`.
    pub boundary_aux: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrefixReport {
    pub mode: PrefixMode,
    /// Words with at least one cut.
    pub words: Vec<PrefixWordInfo>,
    /// Words where literal mode needs more distinct states than `k`.
    pub bound_violations: Vec<WordRef>,
}

pub(crate) fn encode_prefix(
    s: &LabeledSample,
    ctx: &EmitContext,
    mode: PrefixMode,
    b: &mut CnfBuilder,
    report: &mut EncodeReport,
) -> Result<()> {
    let numbering = b.varmap().numbering();
    let mut pr = PrefixReport {
        mode,
        words: Vec::new(),
        bound_violations: Vec::new(),
    };
    for (wref, w) in s.labeled_words() {
        if w.is_empty() {
            continue;
        }
        let dec = nested_prefix_cuts(w, s.negatives());
        if dec.n() == 1 {
            match wref.sign {
                Sign::Positive => emit_positive(ctx, b, report, wref, w, &mut KeepAll)?,
                Sign::Negative => emit_negative(ctx, b, report, wref, w, &mut KeepAll)?,
            };
            continue;
        }
        let violates = mode == PrefixMode::Literal && (ctx.k as usize) < dec.n();
        if violates {
            pr.bound_violations.push(wref);
        }
        let paths = enumerate_prefix_paths(numbering, w, &dec, &ctx.end_states, mode, ctx.dedup_within);
        let aux = match wref.sign {
            Sign::Positive => {
                let cause = violates.then(|| format!("k must be at least n = {} in literal prefix mode", dec.n()));
                emit_positive_paths(ctx, b, report, wref, paths, &mut KeepAll, Families::PREFIX, cause)? as u64
            }
            Sign::Negative => {
                emit_negative_paths(ctx, b, report, wref, paths, &mut KeepAll, Families::PREFIX)?;
                0
            }
        };
        pr.words.push(PrefixWordInfo {
            word: wref,
            n: dec.n(),
            boundary_aux: boundary_aux_count(ctx.k, dec.n()),
            cuts: dec.cuts,
            aux,
        });
    }
    report.prefix = Some(pr);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::{instance_stats, Family};
    use crate::encode::{encode, EncodeOptions, Variant};

    fn word(s: &LabeledSample, text: &str) -> Word {
        Word(text.chars().map(|c| s.alphabet().id_of(&c.to_string()).unwrap()).collect())
    }

    #[test]
    fn greedy_cuts() {
        let s = LabeledSample::from_chars(&["abba"], &["a", "ab", "abb", "baa"]).unwrap();
        let w = &s.positives()[0];
        let all = nested_prefix_cuts(w, s.negatives());
        assert_eq!(all.cuts, vec![1, 2, 3]);
        assert_eq!(all.n(), 4);
        assert_eq!(all.segments(w).iter().map(|x| x.len()).collect::<Vec<_>>(), vec![1, 1, 1, 1]);

        let ab = [word(&s, "ab")];
        let one = nested_prefix_cuts(w, &ab);
        assert_eq!(one.cuts, vec![2]);
        assert_eq!(one.segments(w), vec![&w.symbols()[..2], &w.symbols()[2..]]);

        let baa = [word(&s, "baa")];
        assert_eq!(nested_prefix_cuts(w, &baa).n(), 1);
        // the word itself is not a proper prefix
        let own = [word(&s, "abba")];
        assert_eq!(nested_prefix_cuts(w, &own).n(), 1);
    }

    fn count(k: u32, w: &str, negs: &[&str], mode: PrefixMode) -> usize {
        let s = LabeledSample::from_chars(&[], &[negs, &[w]].concat()).unwrap();
        let w = word(&s, w);
        let dec = nested_prefix_cuts(&w, s.negatives());
        let ends: Vec<State> = (1..=k).collect();
        enumerate_prefix_paths(Numbering { k, n: s.n() }, &w, &dec, &ends, mode, false).count()
    }

    #[test]
    fn path_counts() {
        for mode in [PrefixMode::Sound, PrefixMode::Literal] {
            assert_eq!(count(3, "aba", &["a"], mode), 18);
            assert_eq!(count(1, "ab", &["a"], mode), 0);
        }
        assert_eq!(count(3, "abb", &["a", "ab"], PrefixMode::Literal), 6);
        assert_eq!(count(3, "abb", &["a", "ab"], PrefixMode::Sound), 12);
    }

    #[test]
    fn boundaries_differ_from_end() {
        let s = LabeledSample::from_chars(&["abab"], &["a", "aba"]).unwrap();
        let w = &s.positives()[0];
        let dec = nested_prefix_cuts(w, s.negatives());
        assert_eq!(dec.cuts, vec![1, 3]);
        let ends = [1, 2, 3];
        let numbering = Numbering { k: 3, n: 2 };
        let mut last: Option<Vec<State>> = None;
        for ct in enumerate_prefix_paths(numbering, w, &dec, &ends, PrefixMode::Literal, true) {
            assert_ne!(ct.path[1], ct.end);
            assert_ne!(ct.path[3], ct.end);
            assert_ne!(ct.path[1], ct.path[3]);
            assert!(last.as_ref().is_none_or(|l| *l < ct.path));
            last = Some(ct.path);
        }
    }

    #[test]
    fn single_prefix_counts() {
        let s = LabeledSample::from_chars(&["ab"], &["a"]).unwrap();
        let mut opts = EncodeOptions::with_variant(Variant::Prefix);
        opts.dedup_within = false;
        opts.redundant = false;
        let inst = encode(&s, 3, &opts).unwrap();
        let st = instance_stats(&inst);
        assert_eq!(inst.varmap().aux_count(), 6);
        // 18 binary (8) clauses plus the 3 clauses of "a"
        assert_eq!(st.family(Family::PrefixAuxImplies).clauses, 18);
        assert_eq!(st.family(Family::PrefixAuxBack).clauses, 6);
        assert_eq!(st.family(Family::PrefixAuxOr).clauses, 1);
        assert_eq!(st.family(Family::Negative).clauses, 3);
        let pr = inst.report.prefix.as_ref().unwrap();
        assert_eq!(pr.words.len(), 1);
        assert_eq!((pr.words[0].aux, pr.words[0].boundary_aux), (6, 6));
    }

    #[test]
    fn literal_bound_violation_marks_positive() {
        let s = LabeledSample::from_chars(&["abb"], &["a", "ab"]).unwrap();
        let mut opts = EncodeOptions::with_variant(Variant::Prefix);
        opts.prefix_mode = PrefixMode::Literal;
        let inst = encode(&s, 2, &opts).unwrap();
        let pr = inst.report.prefix.as_ref().unwrap();
        assert_eq!(pr.bound_violations.len(), 1);
        assert_eq!(instance_stats(&inst).family(Family::UnsatMarker).clauses, 2);
        assert_eq!(inst.report.structurally_unsat.len(), 1);
    }

    #[test]
    fn no_prefixes_matches_base() {
        let s = LabeledSample::from_chars(&["ab", "ba"], &["bb", "aab"]).unwrap();
        for k in 1..=3 {
            let base = encode(&s, k, &EncodeOptions::default()).unwrap();
            let pref = encode(&s, k, &EncodeOptions::with_variant(Variant::Prefix)).unwrap();
            assert_eq!(base.to_dimacs(), pref.to_dimacs());
        }
    }

    #[test]
    fn greedy_is_the_unique_decomposition() {
        // over {a,b} words of length ≤ 6, every cut set satisfying the
        // invariant (all cuts negative, no skipped negative prefix) is greedy
        let words: Vec<Word> = (1..=6usize)
            .flat_map(|len| {
                (0..1u32 << len).map(move |bits| Word((0..len).map(|i| SymbolId((bits >> i & 1) + 1)).collect()))
            })
            .collect();
        for (wi, w) in words.iter().enumerate().filter(|(_, w)| w.len() >= 2).step_by(7) {
            // a few negative sets per word: prefixes selected by a mask
            for mask in 0..1u32 << (w.len() - 1) {
                let negs: Vec<Word> = (1..w.len())
                    .filter(|p| mask >> (p - 1) & 1 == 1)
                    .map(|p| w.prefix(p))
                    .chain(std::iter::once(words[(wi * 31) % words.len()].clone()))
                    .collect();
                let greedy = nested_prefix_cuts(w, &negs);
                let is_neg = |p: usize| negs.iter().any(|v| v.symbols() == &w.symbols()[..p]);
                let valid: Vec<Vec<usize>> = (0..1u32 << (w.len() - 1))
                    .map(|c| (1..w.len()).filter(|p| c >> (p - 1) & 1 == 1).collect::<Vec<_>>())
                    .filter(|cuts| cuts.iter().all(|&p| is_neg(p)))
                    .filter(|cuts| (1..w.len()).all(|p| !is_neg(p) || cuts.contains(&p)))
                    .collect();
                assert_eq!(valid, vec![greedy.cuts.clone()]);
            }
        }
    }
}
