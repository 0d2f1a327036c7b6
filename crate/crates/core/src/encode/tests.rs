use proptest::prelude::*;

use super::*;
use crate::cnf::{instance_stats, Family, VarMap};
use crate::sample::{Alphabet, SymbolId};

fn no_dedup(variant: Variant) -> EncodeOptions {
    EncodeOptions {
        variant,
        dedup_within: false,
        ..Default::default()
    }
}

fn word_of(len: usize, code: usize, n: usize) -> Word {
    let mut c = code;
    Word(
        (0..len)
            .map(|_| {
                let s = SymbolId((c % n) as u32 + 1);
                c /= n;
                s
            })
            .collect(),
    )
}

fn ab() -> Alphabet {
    Alphabet::new(["a", "b"]).unwrap()
}

#[test]
fn enumerate_examples() {
    let s = LabeledSample::from_chars(&["a"], &[]).unwrap();
    let vm = Numbering { k: 2, n: 1 };
    let w = &s.positives()[0];
    let paths: Vec<CTransition> = enumerate_ctransitions(vm, w, &[1, 2], true).collect();
    assert_eq!(paths.len(), 2);
    assert_eq!(paths[0].path, vec![1, 1]);
    assert_eq!(paths[0].vars, vec![vm.delta_var(SymbolId(1), 1, 1)]);
    assert_eq!(paths[1].vars, vec![vm.delta_var(SymbolId(1), 1, 2)]);

    let s = LabeledSample::from_chars(&["ab"], &[]).unwrap();
    let vm = Numbering { k: 3, n: 2 };
    assert_eq!(enumerate_ctransitions(vm, &s.positives()[0], &[1, 2, 3], true).count(), 9);

    let s = LabeledSample::from_chars(&["aa"], &[]).unwrap();
    let vm = Numbering { k: 2, n: 1 };
    let first = enumerate_ctransitions(vm, &s.positives()[0], &[1, 2], true).next().unwrap();
    assert_eq!(first.path, vec![1, 1, 1]);
    assert_eq!(first.vars.len(), 1);
}

#[test]
fn enumeration_is_lexicographic() {
    let s = LabeledSample::from_chars(&["aba"], &[]).unwrap();
    let vm = Numbering { k: 3, n: 2 };
    let paths: Vec<Vec<State>> = enumerate_ctransitions(vm, &s.positives()[0], &[2, 3], false)
        .map(|c| c.path)
        .collect();
    assert_eq!(paths.len(), 18);
    assert!(paths.windows(2).all(|p| p[0] < p[1]));
    assert!(paths.iter().all(|p| p[0] == 1 && p[3] != 1));
}

#[test]
fn lambda_units() {
    for (pos, neg, expected) in [(&[""][..], &[][..], vec![1]), (&[][..], &[""][..], vec![-1])] {
        let s = LabeledSample::from_chars(pos, neg).unwrap();
        let mut b = CnfBuilder::new(2, s.n());
        emit_lambda(&s, &mut b);
        let inst = b.finish(EncodeReport::default());
        let lits: Vec<i32> = inst.clauses()[0].lits().iter().map(|l| l.dimacs()).collect();
        assert_eq!(lits, expected);
    }
    let s = LabeledSample::from_chars(&["a"], &[]).unwrap();
    let mut b = CnfBuilder::new(2, s.n());
    emit_lambda(&s, &mut b);
    assert_eq!(b.num_clauses(), 0);
}

#[test]
fn positive_counts() {
    let s = LabeledSample::from_chars(&["ab"], &[]).unwrap();
    let mut opts = no_dedup(Variant::Base);
    opts.redundant = false;
    let st = instance_stats(&encode(&s, 3, &opts).unwrap());
    assert_eq!(st.aux_variables, 9);
    assert_eq!(st.family_arity(Family::AuxImplies, 2), 27);
    assert_eq!(st.family_arity(Family::AuxBack, 4), 9);
    assert_eq!(st.family_arity(Family::AuxOr, 9), 1);

    let s = LabeledSample::from_chars(&["ab"], &[""]).unwrap();
    let st = instance_stats(&encode(&s, 3, &opts).unwrap());
    assert_eq!(st.aux_variables, 6);
    assert_eq!(st.family(Family::AuxImplies).clauses, 18);
}

#[test]
fn unsat_marker_when_no_end_state() {
    let s = LabeledSample::from_chars(&["a"], &[""]).unwrap();
    let inst = encode(&s, 1, &EncodeOptions::default()).unwrap();
    let st = instance_stats(&inst);
    assert_eq!(st.family(Family::UnsatMarker).clauses, 2);
    assert_eq!(st.family(Family::AuxOr).clauses, 0);
    assert_eq!(inst.report.structurally_unsat.len(), 1);
    let marker = &inst.varmap().aux()[0];
    assert_eq!(marker.end, 0);
    assert!(marker.path.is_empty());
}

#[test]
fn negative_counts() {
    let s = LabeledSample::from_chars(&[], &["aa"]).unwrap();
    let mut opts = no_dedup(Variant::Base);
    opts.redundant = false;
    let st = instance_stats(&encode(&s, 2, &opts).unwrap());
    assert_eq!(st.family(Family::Negative).clauses, 4);
    // the loop path (1,1,1) repeats δ(a,1,1), which the clause stores once
    assert_eq!(st.family_arity(Family::Negative, 3), 3);
    assert_eq!(st.family_arity(Family::Negative, 2), 1);

    opts.dedup_within = true;
    let inst = encode(&s, 2, &opts).unwrap();
    let vm = inst.varmap();
    let first: Vec<Lit> = inst.clauses()[0].lits().to_vec();
    let mut expected = vec![Lit::neg(vm.delta_var(SymbolId(1), 1, 1)), Lit::neg(vm.final_var(1))];
    expected.sort();
    let mut got = first;
    got.sort();
    assert_eq!(got, expected);

    let s = LabeledSample::from_chars(&[], &["a", ""]).unwrap();
    let st = instance_stats(&encode(&s, 3, &opts).unwrap());
    assert_eq!(st.family(Family::Negative).clauses, 2);
}

#[test]
fn redundant_clauses() {
    let mut b = CnfBuilder::new(3, 2);
    emit_redundant(3, 2, &mut b);
    let inst = b.finish(EncodeReport::default());
    assert_eq!(inst.clauses().len(), 14);
    assert!(inst.clauses().iter().all(|c| c.len() == 5));

    let mut b = CnfBuilder::new(1, 3);
    emit_redundant(1, 3, &mut b);
    assert_eq!(b.num_clauses(), 0);

    // k=2, n=1: δ(a,1,2) → ¬f_2, ¬δ(a,2,1), ¬δ(a,2,2)
    let mut b = CnfBuilder::new(2, 1);
    emit_redundant(2, 1, &mut b);
    let inst = b.finish(EncodeReport::default());
    let vm = VarMap::new(2, 1);
    let d = |i, j| vm.delta_var(SymbolId(1), i, j).0 as i32;
    let clauses: Vec<Vec<i32>> = inst
        .clauses()
        .iter()
        .map(|c| c.lits().iter().map(|l| l.dimacs()).collect())
        .collect();
    assert_eq!(clauses.len(), 3);
    assert!(clauses.iter().all(|c| c.contains(&d(1, 2))));
    assert!(clauses.iter().any(|c| c.contains(&-2)));
    assert!(clauses.iter().any(|c| c.contains(&-d(2, 1))));
    assert!(clauses.iter().any(|c| c.contains(&-d(2, 2))));
}

#[test]
fn whole_instance_totals() {
    let s = LabeledSample::from_chars(&["ab"], &[]).unwrap();
    let inst = encode(&s, 3, &no_dedup(Variant::Base)).unwrap();
    assert_eq!(inst.clauses().len(), 51);

    let s = LabeledSample::from_chars(&[], &[""]).unwrap();
    let inst = encode(&s, 2, &EncodeOptions::default()).unwrap();
    let st = instance_stats(&inst);
    assert_eq!(st.family(Family::LambdaNegative).clauses, 1);
    assert_eq!(st.clauses, 1 + st.family(Family::Redundant).clauses);
}

#[test]
fn rejects_zero_states() {
    let s = LabeledSample::from_chars(&["a"], &[]).unwrap();
    assert!(encode(&s, 0, &EncodeOptions::default()).is_err());
}

#[test]
fn predicted_examples() {
    let p = predicted_base_counts(2, 3, Sign::Positive, false);
    assert_eq!((p.binary, p.mid, p.final_clauses, p.aux), (27, 9, 1, 9));
    let p = predicted_base_counts(2, 2, Sign::Negative, false);
    assert_eq!(p.negative, 4);
    let p = predicted_base_counts(1, 1, Sign::Positive, false);
    assert_eq!((p.binary, p.mid, p.final_clauses, p.aux), (2, 1, 1, 1));
    assert!(predicted_base_counts(1, 1, Sign::Positive, true).unsat_marker);
}

#[test]
fn exact_counts_for_single_words() {
    for n in 1..=2usize {
        for k in 1..=3u32 {
            for len in 1..=4usize {
                for code in 0..n.pow(len as u32) {
                    let w = word_of(len, code, n);
                    let alphabet = Alphabet::new(["a", "b"].into_iter().take(n)).unwrap();
                    for sign in [Sign::Positive, Sign::Negative] {
                        let (pos, neg) = match sign {
                            Sign::Positive => (vec![w.clone()], vec![]),
                            Sign::Negative => (vec![], vec![w.clone()]),
                        };
                        let s = LabeledSample::new(alphabet.clone(), pos, neg).unwrap();
                        let mut opts = no_dedup(Variant::Base);
                        opts.redundant = false;
                        let st = instance_stats(&encode(&s, k, &opts).unwrap());
                        let p = predicted_base_counts(len, k, sign, false);
                        assert_eq!(st.family_arity(Family::AuxImplies, 2) as u64, p.binary);
                        assert_eq!(st.family(Family::AuxBack).clauses as u64, p.mid);
                        assert_eq!(st.family(Family::AuxOr).clauses as u64, p.final_clauses);
                        assert_eq!(st.aux_variables as u64, p.aux);
                        assert_eq!(st.family(Family::Negative).clauses as u64, p.negative);
                        if sign == Sign::Positive {
                            assert_eq!(st.family_arity(Family::AuxOr, k.pow(len as u32) as usize), 1);
                        }
                        // a clause only loses width to a transition repeated along its path
                        let distinct = w.symbols().windows(2).all(|x| x[0] != x[1]) && len <= n;
                        let max_arity = |f: Family| st.family(f).arity.keys().max().copied();
                        if let Some(a) = max_arity(Family::AuxBack) {
                            assert!(a <= len + 2);
                            assert!(!distinct || st.family_arity(Family::AuxBack, len + 2) as u64 == p.mid);
                        }
                        if let Some(a) = max_arity(Family::Negative) {
                            assert!(a <= len + 1);
                            assert!(!distinct || st.family_arity(Family::Negative, len + 1) as u64 == p.negative);
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn mset_zero_is_base() {
    let s = LabeledSample::from_chars(&["ab", "ba", "a"], &["aab", "b", "abab", ""]).unwrap();
    for k in 1..=3 {
        let base = encode(&s, k, &EncodeOptions::default()).unwrap();
        let m0 = encode(&s, k, &EncodeOptions::with_variant(Variant::Mset(Level::Fixed(0)))).unwrap();
        assert_eq!(base.to_dimacs(), m0.to_dimacs());
    }
}

#[test]
fn variant_parsing() {
    for text in ["base", "all", "prefix", "mset:0", "mset:3", "mset:max"] {
        assert_eq!(text.parse::<Variant>().unwrap().to_string(), text);
    }
    assert_eq!("mset".parse::<Variant>().unwrap(), Variant::Mset(Level::Max));
    assert!("mset:x".parse::<Variant>().is_err());
    assert!("pref".parse::<Variant>().is_err());
    assert_eq!("literal".parse::<PrefixMode>().unwrap(), PrefixMode::Literal);
}

#[test]
fn metadata_blocks() {
    let s = LabeledSample::from_chars(&["ab"], &["b"]).unwrap();
    let opts = EncodeOptions::default();
    let inst = encode(&s, 2, &opts).unwrap();
    let m = metadata(&s, &inst, &opts);
    assert_eq!(m.var_blocks.finals, [1, 2]);
    assert_eq!(m.var_blocks.delta, [3, 10]);
    assert_eq!(m.var_blocks.aux[0], 11);
    assert_eq!(m.var_blocks.aux[1], inst.varmap().total());
    let json = serde_json::to_value(&m).unwrap();
    assert_eq!(json["variant"], "base");
}

#[test]
fn deadline_in_the_past_times_out() {
    let s = LabeledSample::from_chars(&["abab"], &[]).unwrap();
    let opts = EncodeOptions {
        deadline: Some(std::time::Instant::now() - std::time::Duration::from_secs(1)),
        ..Default::default()
    };
    assert!(matches!(encode(&s, 3, &opts), Err(Error::GenerationTimeout)));
}

fn arb_sample() -> impl Strategy<Value = LabeledSample> {
    let word = prop::collection::vec(1u32..=2, 0..=3);
    (prop::collection::vec(word.clone(), 0..=3), prop::collection::vec(word, 0..=3)).prop_filter_map(
        "contradictory",
        |(p, q)| {
            let mk = |v: Vec<Vec<u32>>| v.into_iter().map(|w| Word(w.into_iter().map(SymbolId).collect())).collect();
            LabeledSample::new(ab(), mk(p), mk(q)).ok()
        },
    )
}

fn clause_set(inst: &CnfInstance) -> std::collections::HashSet<Vec<i32>> {
    // aux ids differ across variants, so only aux-free clauses are compared
    let fixed = inst.varmap().fixed_count() as i32;
    inst.clauses()
        .iter()
        .map(|c| c.lits().iter().map(|l| l.dimacs()).collect::<Vec<_>>())
        .filter(|c| c.iter().all(|l| l.abs() <= fixed))
        .collect()
}

fn path_set(inst: &CnfInstance) -> std::collections::HashSet<(WordRef, State, Vec<State>)> {
    inst.varmap()
        .aux()
        .iter()
        .filter(|a| a.end != 0)
        .map(|a| (a.word, a.end, a.path.clone()))
        .collect()
}

proptest! {
    #[test]
    fn dedup_never_increases_counts(s in arb_sample(), k in 1u32..=3) {
        let off = instance_stats(&encode(&s, k, &no_dedup(Variant::Base)).unwrap());
        let on = instance_stats(&encode(&s, k, &EncodeOptions::default()).unwrap());
        prop_assert!(on.clauses <= off.clauses);
        for (f, st) in &on.families {
            prop_assert!(st.clauses <= off.family(*f).clauses);
            for arity in st.arity.keys() {
                prop_assert!(*arity <= off.family(*f).arity.keys().max().copied().unwrap_or(0));
            }
        }
        let across = EncodeOptions { dedup_across_paths: true, ..Default::default() };
        let across = instance_stats(&encode(&s, k, &across).unwrap());
        prop_assert!(across.clauses <= on.clauses);
    }

    #[test]
    fn reduced_models_are_subsets_of_base(s in arb_sample(), k in 1u32..=3) {
        let base = encode(&s, k, &EncodeOptions::default()).unwrap();
        let base_clauses = clause_set(&base);
        let base_paths = path_set(&base);
        for v in [Variant::All, Variant::Mset(Level::Fixed(1)), Variant::Mset(Level::Max), Variant::Prefix] {
            let inst = encode(&s, k, &EncodeOptions::with_variant(v)).unwrap();
            prop_assert!(clause_set(&inst).is_subset(&base_clauses), "{}", v);
            prop_assert!(path_set(&inst).is_subset(&base_paths), "{}", v);
        }
    }

    #[test]
    fn size_chain(s in arb_sample(), k in 1u32..=3) {
        let size = |v: Variant| encode(&s, k, &EncodeOptions::with_variant(v)).unwrap().clauses().len();
        let all = size(Variant::All);
        let mmax = size(Variant::Mset(Level::Max));
        let pref = size(Variant::Prefix);
        let base = size(Variant::Base);
        prop_assert!(all <= mmax && mmax <= pref && pref <= base, "{} {} {} {}", all, mmax, pref, base);
        let mut prev = base;
        for l in 0..=4 {
            let c = size(Variant::Mset(Level::Fixed(l)));
            prop_assert!(c <= prev);
            prev = c;
        }
    }

    #[test]
    fn prefix_modes_agree_without_deep_nesting(s in arb_sample(), k in 1u32..=3) {
        let deepest = s
            .labeled_words()
            .map(|(_, w)| nested_prefix_cuts(w, s.negatives()).n())
            .max()
            .unwrap_or(1);
        prop_assume!(deepest <= 2);
        let mut lit = EncodeOptions::with_variant(Variant::Prefix);
        lit.prefix_mode = PrefixMode::Literal;
        let sound = encode(&s, k, &EncodeOptions::with_variant(Variant::Prefix)).unwrap();
        prop_assert_eq!(sound.to_dimacs(), encode(&s, k, &lit).unwrap().to_dimacs());
    }
}
