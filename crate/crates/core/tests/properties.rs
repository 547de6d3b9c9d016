//! Property tests for the structural invariants of the core types.

use std::collections::BTreeSet;

use proptest::prelude::*;

use gramlog::formula::{bar_string, Formula, Letter};
use gramlog::grammar::{cfg_for, Production, SemiThueSystem};
use gramlog::lang::{build_propagation_automaton, BinCfg};
use gramlog::parse::parse_formula;
use gramlog::semantics::KripkeModel;
use gramlog::sequent::NestedSequent;

fn letter_strategy() -> impl Strategy<Value = Letter> {
    prop_oneof![
        Just(Letter::plain("a")),
        Just(Letter::plain("a").bar()),
        Just(Letter::plain("b")),
        Just(Letter::plain("b").bar()),
    ]
}

fn formula_strategy() -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![
        "[pqr]".prop_map(Formula::atom),
        "[pqr]".prop_map(Formula::neg_atom),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(x, y)| Formula::and(x, y)),
            (inner.clone(), inner.clone()).prop_map(|(x, y)| Formula::or(x, y)),
            (inner.clone(), inner.clone()).prop_map(|(x, y)| Formula::imp(x, y)),
            inner.clone().prop_map(Formula::neg),
            (letter_strategy(), inner.clone()).prop_map(|(l, x)| Formula::boxed(l, x)),
            (letter_strategy(), inner).prop_map(|(l, x)| Formula::dia(l, x)),
        ]
    })
}

fn word_strategy(max_len: usize) -> impl Strategy<Value = Vec<Letter>> {
    prop::collection::vec(letter_strategy(), 0..=max_len)
}

/// Closed context-free systems with one or two short rules.
fn system_strategy() -> impl Strategy<Value = SemiThueSystem> {
    let lhs = prop_oneof![Just(Letter::plain("a")), Just(Letter::plain("b"))];
    let rule = (lhs, word_strategy(2)).prop_map(|(l, rhs)| Production::new(vec![l], rhs));
    prop::collection::vec(rule, 1..=2).prop_map(|rules| SemiThueSystem::new(rules).close())
}

/// Models over 1..=3 worlds with converse-closed relations.
fn model_strategy() -> impl Strategy<Value = KripkeModel> {
    (1usize..=3).prop_flat_map(|n| {
        let worlds: Vec<String> = (0..n).map(|i| format!("w{i}")).collect();
        let edges = prop::collection::vec((letter_strategy(), 0..n, 0..n), 0..=6);
        let facts = prop::collection::vec(("[pqr]", 0..n), 0..=5);
        (edges, facts).prop_map(move |(edges, facts)| {
            let mut m = KripkeModel::new(worlds.clone());
            for (l, x, y) in edges {
                m.add_edge(&l, x, y);
            }
            for (p, w) in facts {
                m.set_true(&p, w);
            }
            m
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn lneg_is_an_involution_on_nnf(f in formula_strategy()) {
        let n = f.nnf();
        prop_assert_eq!(n.lneg().lneg(), n);
    }

    #[test]
    fn nnf_is_idempotent(f in formula_strategy()) {
        let n = f.nnf();
        prop_assert_eq!(n.nnf(), n);
    }

    #[test]
    fn subformula_count_is_bounded_by_size(f in formula_strategy()) {
        prop_assert!(f.subformulas().len() <= f.size());
    }

    #[test]
    fn nnf_preserves_truth(f in formula_strategy(), m in model_strategy()) {
        let n = f.nnf();
        for w in 0..3usize.min(m.worlds.len()) {
            prop_assert_eq!(m.satisfies(w, &f), m.satisfies(w, &n));
        }
    }

    #[test]
    fn lneg_flips_truth(f in formula_strategy(), m in model_strategy()) {
        let neg = f.nnf().lneg();
        prop_assert_eq!(m.satisfies(0, &f), !m.satisfies(0, &neg));
    }

    // The parser reads `~p` as general negation, so the round trip is exact
    // only after normalization.
    #[test]
    fn printing_round_trips_through_the_parser(f in formula_strategy()) {
        prop_assert_eq!(parse_formula(&f.to_string()).unwrap().nnf(), f.nnf());
    }

    #[test]
    fn converse_closure_of_constructed_models(m in model_strategy()) {
        prop_assert!(m.check_converse_closure().is_ok());
    }

    #[test]
    fn string_relations_compose(
        m in model_strategy(),
        u in word_strategy(2),
        v in word_strategy(2),
    ) {
        let uv: Vec<Letter> = u.iter().chain(v.iter()).cloned().collect();
        let ru = m.string_relation(&u);
        let rv = m.string_relation(&v);
        let composed: BTreeSet<(usize, usize)> = ru
            .iter()
            .flat_map(|&(x, y)| rv.iter().filter(move |&&(y2, _)| y2 == y).map(move |&(_, z)| (x, z)))
            .collect();
        prop_assert_eq!(m.string_relation(&uv), composed);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn closure_contains_the_system_and_is_idempotent(sys in system_strategy()) {
        prop_assert!(sys.is_closed());
        let again = sys.close();
        prop_assert_eq!(again.productions(), sys.productions());
        for p in sys.productions() {
            prop_assert!(sys.productions().contains(&p.bar()));
        }
    }

    #[test]
    fn closed_languages_are_bar_symmetric(sys in system_strategy()) {
        for l in sys.alphabet().iter().filter(|l| !l.is_barred()) {
            let plain = sys.enumerate_language(l, 4);
            let barred = sys.enumerate_language(&l.bar(), 4);
            if plain.truncated || barred.truncated {
                continue;
            }
            let mirrored: BTreeSet<Vec<Letter>> =
                plain.words.iter().map(|w| bar_string(w)).collect();
            prop_assert_eq!(&mirrored, &barred.words);
        }
    }

    #[test]
    fn cfg_membership_matches_enumeration(sys in system_strategy(), w in word_strategy(3)) {
        for l in sys.alphabet() {
            let cfg = cfg_for(&sys, l).unwrap();
            let bin = BinCfg::from_cfg(&cfg);
            let langs = sys.enumerate_language(l, 3);
            if langs.truncated {
                continue;
            }
            prop_assert_eq!(bin.accepts(&w), langs.words.contains(&w));
        }
    }

    #[test]
    fn sequent_tree_invariants_survive_random_operations(
        ops in prop::collection::vec((0usize..8, letter_strategy(), formula_strategy()), 1..12),
    ) {
        let mut seq = NestedSequent::from_formula(&Formula::atom("p"));
        let mut before: Vec<usize> = vec![seq.node(seq.root()).formulas.len()];
        for (pick, letter, f) in ops {
            let ids: Vec<_> = seq.node_ids().collect();
            let target = ids[pick % ids.len()];
            if f.size() % 2 == 0 {
                seq.add_formulas(target, [f.nnf()]).unwrap();
            } else {
                seq.add_child(target, letter, [f.nnf()]).unwrap();
            }
            // Monotone growth: surviving nodes never lose formulas.
            let ids_after: Vec<_> = seq.node_ids().collect();
            prop_assert!(ids_after.len() >= ids.len());
            for (idx, &id) in ids.iter().enumerate() {
                let floor = if idx < before.len() { before[idx] } else { 0 };
                prop_assert!(seq.node(id).formulas.len() >= floor);
            }
            before = ids_after.iter().map(|&i| seq.node(i).formulas.len()).collect();
            // Tree shape: unique ids, parents consistent, root parentless.
            let unique: BTreeSet<_> = ids_after.iter().collect();
            prop_assert_eq!(unique.len(), ids_after.len());
            prop_assert!(seq.parent(seq.root()).is_none());
            for &id in &ids_after {
                for (_, child) in seq.children(id) {
                    prop_assert_eq!(seq.parent(*child).map(|(p, _)| *p), Some(id));
                }
            }
        }
    }

    #[test]
    fn propagation_automaton_duality_after_build_and_remap(
        ops in prop::collection::vec((0usize..6, letter_strategy()), 1..6),
        swap in 0usize..6,
    ) {
        let p = Formula::atom("p");
        let mut seq = NestedSequent::from_formula(&p);
        for (pick, letter) in ops {
            let ids: Vec<_> = seq.node_ids().collect();
            seq.add_child(ids[pick % ids.len()], letter, [p.clone()]).unwrap();
        }
        let ids: Vec<_> = seq.node_ids().collect();
        let pa = build_propagation_automaton(&seq, ids[0], *ids.last().unwrap()).unwrap();
        prop_assert!(pa.duality_holds());
        let identity = pa.remap(&[]);
        prop_assert_eq!(&identity, &pa);
        let target = ids[swap % ids.len()];
        let remapped = pa.remap(&[(*ids.last().unwrap(), target)]);
        prop_assert!(remapped.duality_holds());
    }
}
