//! Random solids and glue chains built from fresh vertex labels.

use rand::seq::IteratorRandom;
use rand::Rng;
use solidgeo::solids::{cube, extrude, pyramid, Face, FaceSet};

#[derive(Default)]
pub struct Labels(usize);

impl Labels {
    pub fn fresh(&mut self) -> String {
        self.0 += 1;
        format!("V{}", self.0)
    }

    pub fn many(&mut self, n: usize) -> Vec<String> {
        (0..n).map(|_| self.fresh()).collect()
    }
}

/// A closed prism, pyramid or cube on fresh labels.
pub fn random_solid<R: Rng>(rng: &mut R, labels: &mut Labels) -> FaceSet {
    match rng.gen_range(0..3) {
        0 => {
            let l = labels.many(8);
            let r: Vec<&str> = l.iter().map(String::as_str).collect();
            cube(r.try_into().unwrap())
        }
        1 => {
            let k = rng.gen_range(3..=6);
            let base = Face::new(labels.many(k)).unwrap();
            extrude(&base, &labels.many(k)).unwrap()
        }
        _ => {
            let k = rng.gen_range(3..=6);
            let base = Face::new(labels.many(k)).unwrap();
            pyramid(&base, &labels.fresh()).unwrap()
        }
    }
}

/// A piece grown outward from one face of `host`: `(sa, piece, sb)` with
/// `sa` in `host`, `sb = sa.reversed()` in `piece`.
pub fn attach<R: Rng>(rng: &mut R, host: &FaceSet, labels: &mut Labels) -> (Face, FaceSet, Face) {
    attach_avoiding(rng, host, None, labels)
}

/// As [`attach`], never choosing `avoid` as the interface.
pub fn attach_avoiding<R: Rng>(
    rng: &mut R,
    host: &FaceSet,
    avoid: Option<&Face>,
    labels: &mut Labels,
) -> (Face, FaceSet, Face) {
    let sa = host
        .faces()
        .filter(|f| Some(*f) != avoid)
        .choose(rng)
        .expect("host has a free face")
        .clone();
    let k = sa.vertices().len();
    let piece = if rng.gen_bool(0.5) {
        extrude(&sa, &labels.many(k)).unwrap()
    } else {
        pyramid(&sa, &labels.fresh()).unwrap()
    };
    let sb = sa.reversed();
    (sa, piece, sb)
}
