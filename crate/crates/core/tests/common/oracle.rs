//! A deliberately naive fuzzy Jaccard over structured elements.
//!
//! Elements are generated as (name, arguments) so their normalized form is
//! known without calling the library's normalizer. Scores are exact rationals.

use std::collections::BTreeSet;

use num_rational::Ratio;
use rand::Rng;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Arg {
    /// Point letters; normalizes to the placeholder.
    Points(String),
    /// A number literal as written, e.g. "5" or "5.0".
    Num(String),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Element {
    pub name: String,
    pub args: Vec<Arg>,
}

impl Element {
    /// Raw CDL text, with random whitespace a normalizer must ignore.
    pub fn raw<R: Rng>(&self, rng: &mut R) -> String {
        let pad = |rng: &mut R| if rng.gen_bool(0.2) { " " } else { "" };
        let args: Vec<String> = self
            .args
            .iter()
            .map(|a| match a {
                Arg::Points(p) => p.clone(),
                Arg::Num(n) => n.clone(),
            })
            .collect();
        let sep = format!(",{}", pad(rng));
        format!("{}({}{})", self.name, pad(rng), args.join(&sep))
    }

    /// Normal form: every argument that is not a number becomes `V`; an
    /// argument list of single letters only collapses to one `V`.
    fn key(&self) -> (String, Vec<String>) {
        let single_letters = self
            .args
            .iter()
            .all(|a| matches!(a, Arg::Points(p) if p.chars().count() == 1));
        if single_letters {
            return (self.name.clone(), vec!["V".into()]);
        }
        let args = self
            .args
            .iter()
            .map(|a| match a {
                Arg::Points(_) => "V".to_string(),
                Arg::Num(n) => format!("#{n}"),
            })
            .collect();
        (self.name.clone(), args)
    }

    fn values(&self) -> BTreeSet<Ratio<i64>> {
        self.args
            .iter()
            .filter_map(|a| match a {
                Arg::Num(n) => Some(decimal(n)),
                Arg::Points(_) => None,
            })
            .collect()
    }
}

fn decimal(s: &str) -> Ratio<i64> {
    match s.split_once('.') {
        None => Ratio::from_integer(s.parse().unwrap()),
        Some((i, f)) => {
            let scale = 10i64.pow(f.len() as u32);
            let whole: i64 = format!("{i}{f}").parse().unwrap();
            Ratio::new(whole, scale)
        }
    }
}

const NAMES: [&str; 4] = ["Equal", "LengthOfLine", "Cone", "ParallelBetweenLine"];
const NUMBERS: [&str; 7] = ["3", "5", "5.0", "2.5", "2.50", "12", "0.5"];

pub fn random_element<R: Rng>(rng: &mut R) -> Element {
    let name = NAMES[rng.gen_range(0..NAMES.len())].to_string();
    let n = rng.gen_range(1..=3);
    let args = (0..n)
        .map(|_| {
            if rng.gen_bool(0.4) {
                Arg::Num(NUMBERS[rng.gen_range(0..NUMBERS.len())].to_string())
            } else {
                let len = rng.gen_range(1..=2);
                Arg::Points((0..len).map(|_| rng.gen_range(b'A'..=b'E') as char).collect())
            }
        })
        .collect();
    Element { name, args }
}

fn score(p: &Element, g: &Element) -> Ratio<i64> {
    if p.key() == g.key() {
        return Ratio::from_integer(1);
    }
    let name = p.name == g.name;
    let number = !p.values().is_disjoint(&g.values());
    match (name, number) {
        (true, true) => Ratio::new(4, 5),
        (true, false) => Ratio::new(1, 2),
        (false, true) => Ratio::new(3, 10),
        (false, false) => Ratio::from_integer(0),
    }
}

fn dedup(xs: &[Element]) -> Vec<&Element> {
    let mut out: Vec<&Element> = Vec::new();
    for x in xs {
        if !out.iter().any(|y| y.key() == x.key()) {
            out.push(x);
        }
    }
    out
}

/// Sum of best scores over the fuzzy union, as an exact ratio.
pub fn naive_fuzzy_jaccard(p: &[Element], g: &[Element]) -> Ratio<i64> {
    let (p, g) = (dedup(p), dedup(g));
    if p.is_empty() && g.is_empty() {
        return Ratio::from_integer(1);
    }
    if p.is_empty() || g.is_empty() {
        return Ratio::from_integer(0);
    }
    let mut inter = Ratio::from_integer(0);
    for x in &p {
        let mut best = Ratio::from_integer(0);
        for y in &g {
            best = best.max(score(x, y));
        }
        inter += best;
    }
    let union = Ratio::from_integer((p.len() + g.len()) as i64) - inter;
    inter / union
}
