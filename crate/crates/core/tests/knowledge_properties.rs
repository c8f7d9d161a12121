use std::collections::BTreeSet;

use proptest::prelude::*;
use proptest::sample::Index;
use solidgeo::cdl::{Atom, Fact};
use solidgeo::knowledge::{expand_fact, expand_fact_checked, KnowledgeBase};

fn kb() -> &'static KnowledgeBase {
    static KB: std::sync::OnceLock<KnowledgeBase> = std::sync::OnceLock::new();
    KB.get_or_init(KnowledgeBase::shipped)
}

/// A well-formed atom of a randomly chosen declared predicate, parameters
/// bound injectively to shuffled point letters.
fn declared_atom() -> impl Strategy<Value = Fact> {
    (any::<Index>(), Just("ABCDEFGHIJKLMNOPQRSTUVWXYZ".chars().collect::<Vec<_>>()).prop_shuffle()).prop_map(
        |(i, letters)| {
            let defs: Vec<_> = kb().predicates().filter(|d| d.native.is_none() && !d.params.is_empty()).collect();
            let def = defs[i.index(defs.len())];
            let params: BTreeSet<char> = def.params.iter().flat_map(|g| g.chars()).collect();
            let map: std::collections::BTreeMap<char, char> = params.into_iter().zip(letters).collect();
            let args = def.params.iter().map(|g| g.chars().map(|c| map[&c]).collect()).collect();
            Fact::Atom(Atom::new(def.name.clone(), args))
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn expansion_contains_its_input(f in declared_atom()) {
        let closure = expand_fact(&f, kb());
        prop_assert!(closure.contains(&f) || closure.contains(&kb().canonicalize_fact(&f)), "{f}");
    }

    #[test]
    fn expansion_is_idempotent(f in declared_atom()) {
        let first = expand_fact_checked(&f, kb());
        prop_assume!(!first.capped);
        for g in &first.facts {
            let again = expand_fact(g, kb());
            prop_assert!(again.is_subset(&first.facts), "{g} escapes the closure of {f}");
        }
    }

    #[test]
    fn multi_orderings_share_a_closure(f in declared_atom()) {
        let Fact::Atom(a) = &f else { unreachable!() };
        let base = expand_fact(&f, kb());
        for v in kb().variants(a) {
            prop_assert_eq!(&expand_fact(&Fact::Atom(v), kb()), &base);
        }
    }
}
