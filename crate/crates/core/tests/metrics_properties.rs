mod common;

use common::oracle::{naive_fuzzy_jaccard, random_element, Element};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use solidgeo::metrics::{fuzzy_jaccard, match_score, normalize, Score};

fn sets(seed: u64) -> (Vec<Element>, Vec<Element>, Vec<String>, Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p: Vec<Element> = (0..rand::Rng::gen_range(&mut rng, 0..6)).map(|_| random_element(&mut rng)).collect();
    let g: Vec<Element> = (0..rand::Rng::gen_range(&mut rng, 0..6)).map(|_| random_element(&mut rng)).collect();
    let pr = p.iter().map(|e| e.raw(&mut rng)).collect();
    let gr = g.iter().map(|e| e.raw(&mut rng)).collect();
    (p, g, pr, gr)
}

fn cdl_text() -> impl Strategy<Value = String> {
    prop::string::string_regex("[A-Z][a-z]{0,6}\\(([A-Z]{1,3}|[0-9]{1,2}(\\.[0-9])?)(, ?([A-Z]{1,3}|[0-9]{1,2}))*\\)").unwrap()
}

proptest! {
    #[test]
    fn matches_naive_formula(seed in any::<u64>()) {
        let (p, g, pr, gr) = sets(seed);
        let want = naive_fuzzy_jaccard(&p, &g);
        let want = *want.numer() as f64 / *want.denom() as f64;
        prop_assert_eq!(fuzzy_jaccard(&pr, &gr), want, "{:?} vs {:?}", pr, gr);
    }

    #[test]
    fn score_is_in_unit_range(p in prop::collection::vec(cdl_text(), 0..6), g in prop::collection::vec(cdl_text(), 0..6)) {
        let s = fuzzy_jaccard(&p, &g);
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert_eq!(s, fuzzy_jaccard(&p, &g));
    }

    #[test]
    fn identical_sets_score_one(p in prop::collection::vec(cdl_text(), 1..6)) {
        prop_assert_eq!(fuzzy_jaccard(&p, &p), 1.0);
    }

    #[test]
    fn one_empty_side_scores_zero(p in prop::collection::vec(cdl_text(), 1..6)) {
        let none: [&str; 0] = [];
        prop_assert_eq!(fuzzy_jaccard(&p, &none), 0.0);
        prop_assert_eq!(fuzzy_jaccard(&none, &p), 0.0);
    }

    #[test]
    fn pair_scores_are_graded(a in cdl_text(), b in cdl_text()) {
        let s = match_score(&normalize(&a), &normalize(&b));
        prop_assert!([Score::EXACT, Score::NAME_AND_NUMBER, Score::NAME, Score::NUMBER, Score::NONE].contains(&s));
        prop_assert_eq!(match_score(&normalize(&a), &normalize(&a)), Score::EXACT);
    }

    #[test]
    fn normalization_ignores_whitespace(a in cdl_text()) {
        let spaced: String = a.chars().flat_map(|c| [c, ' ']).collect();
        prop_assert_eq!(normalize(&spaced), normalize(&a));
        prop_assert_eq!(normalize(&normalize(&a)), normalize(&a));
    }
}

#[test]
fn both_empty_is_one() {
    let none: [&str; 0] = [];
    assert_eq!(fuzzy_jaccard(&none, &none), 1.0);
}
