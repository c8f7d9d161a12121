use super::*;
use crate::cdl::parse_fact;

const MIDPOINT: &str = "\
predicate: IsMidpointOfLine(M,AB)
kind: Relation
check: Point(M) & Line(AB) & Collinear(AMB)
multi: M,BA
extend: Equal(LengthOfLine(AM),LengthOfLine(MB))

predicate: LengthOfLine(AB)
kind: Attribution
check: Line(AB)
multi: BA
";

fn f(s: &str) -> Fact {
    parse_fact(s).unwrap()
}

fn atom(s: &str) -> Atom {
    match f(s) {
        Fact::Atom(a) => a,
        other => panic!("{other}"),
    }
}

fn store(kb: &KnowledgeBase, facts: &[&str]) -> AtomBase {
    let mut s = AtomBase::new();
    for t in facts {
        for g in expand_fact(&f(t), kb) {
            if let Fact::Atom(a) = g {
                s.insert(kb, &a);
            }
        }
    }
    s
}

#[test]
fn midpoint_definition_loads() {
    let kb = load_knowledge_base(MIDPOINT, "").unwrap();
    let d = kb.predicate("IsMidpointOfLine").unwrap();
    assert_eq!(d.kind, PredicateKind::Relation);
    assert_eq!(d.params, ["M", "AB"]);
    let checks: Vec<String> = d.check.iter().map(Atom::to_string).collect();
    assert_eq!(checks, ["Point(M)", "Line(AB)", "Collinear(AMB)"]);
    assert_eq!(d.multi, vec![vec!["M".to_string(), "BA".to_string()]]);
    assert_eq!(d.extend, vec![f("Equal(LengthOfLine(AM),LengthOfLine(MB))")]);
}

#[test]
fn transitivity_theorem_loads() {
    let preds = "predicate: ParallelBetweenPlane(U,V)\nkind: Relation\ncheck: Plane(U) & Plane(V)\nmulti: V,U\n";
    let thms = "theorem: transitivity_between_plane_and_plane\n\
                premise: ParallelBetweenPlane(U,V) & ParallelBetweenPlane(V,W)\n\
                conclusion: ParallelBetweenPlane(U,W)\n";
    let kb = load_knowledge_base(preds, thms).unwrap();
    let t = kb.theorem("transitivity_between_plane_and_plane").unwrap();
    assert_eq!(t.positive().count(), 2);
    assert_eq!(t.conclusion, vec![f("ParallelBetweenPlane(U,W)")]);
    assert_eq!(kb.theorems_with_head("ParallelBetweenPlane").count(), 1);
}

#[test]
fn unbound_conclusion_variable_is_rejected() {
    let thms = "theorem: bad\npremise: Point(A)\nconclusion: Point(Z)\n";
    assert!(matches!(
        load_knowledge_base("", thms),
        Err(KbError::UnboundVariable { var: 'Z', .. })
    ));
    let neg = "theorem: bad\npremise: Point(A) & ~Point(Z)\nconclusion: Point(A)\n";
    assert!(matches!(load_knowledge_base("", neg), Err(KbError::UnboundVariable { .. })));
}

#[test]
fn duplicates_and_undefined_references_are_rejected() {
    let dup = "theorem: t\npremise: Point(A)\nconclusion: Point(A)\n\
               theorem: t\npremise: Point(A)\nconclusion: Point(A)\n";
    assert_eq!(load_knowledge_base("", dup).unwrap_err(), KbError::Duplicate("t".into()));
    let undefined = "theorem: t\npremise: Foo(A)\nconclusion: Point(A)\n";
    assert!(matches!(
        load_knowledge_base("", undefined),
        Err(KbError::UndefinedPredicate { name, .. }) if name == "Foo"
    ));
    assert_eq!(
        load_knowledge_base("predicate: Line(XY)\nkind: Relation\n", "").unwrap_err(),
        KbError::Duplicate("Line".into())
    );
}

#[test]
fn bad_multi_is_rejected() {
    let p = "predicate: Q(AB)\nkind: Relation\nmulti: AC\n";
    assert!(matches!(load_knowledge_base(p, ""), Err(KbError::Invalid { .. })));
}

#[test]
fn empty_sources_warn() {
    let kb = load_knowledge_base("", "").unwrap();
    assert_eq!(kb.report().declared_predicates, 0);
    assert_eq!(kb.report().warnings.len(), 2);
}

#[test]
fn midpoint_validity() {
    let kb = load_knowledge_base(MIDPOINT, "").unwrap();
    let mid = f("IsMidpointOfLine(M,AB)");
    let full = store(&kb, &["Point(M)", "Line(AB)", "Collinear(AMB)"]);
    assert_eq!(validity_check(&mid, &kb, &full).unwrap(), Validity::Pass);
    let partial = store(&kb, &["Point(M)", "Line(AB)"]);
    assert_eq!(
        validity_check(&mid, &kb, &partial).unwrap(),
        Validity::Unmet(vec![atom("Collinear(AMB)")])
    );
    assert_eq!(
        validity_check(&f("Foo(A)"), &kb, &full),
        Err(KbError::UnknownPredicate("Foo".into()))
    );
}

#[test]
fn midpoint_expansion() {
    let kb = load_knowledge_base(MIDPOINT, "").unwrap();
    let out = expand_fact(&f("IsMidpointOfLine(M,AB)"), &kb);
    assert!(out.contains(&f("IsMidpointOfLine(M,AB)")));
    assert!(out.contains(&f("IsMidpointOfLine(M,BA)")));
    assert!(out.contains(&f("Equal(LengthOfLine(AM),LengthOfLine(BM))")));
    assert_eq!(out.len(), 3);
}

#[test]
fn predicate_without_multi_or_extend_expands_to_itself() {
    let kb = KnowledgeBase::shipped();
    let g = f("IsCentreOfSphere(P,O)");
    assert_eq!(expand_fact(&g, &kb), [g].into_iter().collect());
}

#[test]
fn cube_side_equalities_reach_all_edges() {
    let kb = KnowledgeBase::shipped();
    let out = expand_fact(&f("Cube(ABCDEFGH)"), &kb);
    // Edges of a cube with bottom ABCD and top EFGH, E above A.
    let edges = ["AB", "BC", "CD", "DA", "EF", "FG", "GH", "HE", "AE", "BF", "CG", "DH"];
    let key = |s: &str| {
        let mut c: Vec<char> = s.chars().collect();
        c.sort_unstable();
        c.into_iter().collect::<String>()
    };
    let mut parent: BTreeMap<String, String> = edges.iter().map(|e| (key(e), key(e))).collect();
    fn find(p: &mut BTreeMap<String, String>, x: &str) -> String {
        let up = p[x].clone();
        if up == x {
            return up;
        }
        let r = find(p, &up);
        p.insert(x.to_string(), r.clone());
        r
    }
    for g in &out {
        if let Fact::Equal(Expr::Attr(l), Expr::Attr(r)) = g {
            let (a, b) = (key(&l.args[0]), key(&r.args[0]));
            let (ra, rb) = (find(&mut parent, &a), find(&mut parent, &b));
            parent.insert(ra, rb);
        }
    }
    let roots: BTreeSet<String> = edges.iter().map(|e| find(&mut parent, &key(e))).collect();
    assert_eq!(roots.len(), 1);
}

#[test]
fn regrouping_and_attribute_canonical_form() {
    let kb = KnowledgeBase::shipped();
    assert_eq!(
        kb.canonicalize_fact(&f("Equal(LengthOfLine(B,A),5)")),
        f("Equal(LengthOfLine(AB),5)")
    );
    assert_eq!(
        kb.canonicalize_fact(&f("ParallelBetweenLine(A,B,C,D)")),
        f("ParallelBetweenLine(AB,CD)")
    );
    assert_eq!(kb.canonicalize_fact(&f("Collinear(A,B,C)")), f("Collinear(ABC)"));
}

#[test]
fn shipped_bank_counts_match_the_files() {
    let kb = KnowledgeBase::shipped();
    let r = kb.report();
    assert!(r.warnings.is_empty(), "{:?}", r.warnings);
    let count = |text: &str, key: &str| text.lines().filter(|l| l.trim_start().starts_with(key)).count();
    assert_eq!(r.declared_predicates, count(SHIPPED_PREDICATES, "predicate:"));
    assert_eq!(r.theorems, count(SHIPPED_THEOREMS, "theorem:"));
    assert_eq!(r.builtin_predicates, 10);
}

#[test]
fn shipped_predicates_are_self_consistent() {
    let kb = KnowledgeBase::shipped();
    for d in kb.predicates().filter(|d| d.native.is_none()) {
        let a = Atom::new(d.name.clone(), d.params.clone());
        let checks = kb.checks(&a).unwrap();
        let mut seed: Vec<String> = checks.iter().map(Atom::to_string).collect();
        seed.push(a.to_string());
        let mut s = AtomBase::new();
        for t in &seed {
            for g in expand_fact(&f(t), &kb) {
                if let Fact::Atom(x) = g {
                    s.insert(&kb, &x);
                }
            }
        }
        for g in expand_fact(&Fact::Atom(a.clone()), &kb) {
            assert!(
                validity_check(&g, &kb, &s).unwrap().is_pass(),
                "{g} from {a} fails its checks"
            );
        }
    }
}

#[test]
fn json_documents_load() {
    let p = r#"{"predicates":[{"name":"Foo(AB)","kind":"Relation","check":["Line(AB)"],"multi":["BA"]}]}"#;
    let kb = load_knowledge_base(p, "{}").unwrap();
    assert_eq!(kb.predicate("Foo").unwrap().multi.len(), 1);
}
