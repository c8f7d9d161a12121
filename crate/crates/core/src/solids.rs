//! Combinatorial polyhedra as sets of oriented faces, and gluing along a shared face.
//!
//! A face is a vertex cycle ordered by the right-hand rule so that its normal
//! points out of the solid. Two solids that share a face see it with opposite
//! orientations; composing them drops both copies.
//!
//! Literal format (used by fixtures): one face per line, vertex labels
//! separated by whitespace or commas; blank lines and `#` comments ignored.
//!
//! ```text
//! # unit square pyramid
//! A D C B
//! A B P
//! B C P
//! C D P
//! D A P
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolidError {
    #[error("a face needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("vertex `{0}` repeats within a face")]
    RepeatedVertex(String),
    #[error("interface face {0} is not a member of its solid")]
    InterfaceNotMember(Face),
    #[error("interface faces {0} and {1} are not reverses of each other")]
    NotReversed(Face, Face),
    #[error("line {line}: {source}")]
    Literal { line: usize, source: Box<SolidError> },
}

/// Oriented vertex cycle, stored rotated so the smallest label comes first.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Face(Vec<String>);

impl Face {
    pub fn new<S: Into<String>>(vertices: impl IntoIterator<Item = S>) -> Result<Self, SolidError> {
        let vs: Vec<String> = vertices.into_iter().map(Into::into).collect();
        if vs.len() < 3 {
            return Err(SolidError::TooFewVertices(vs.len()));
        }
        let mut seen = BTreeSet::new();
        for v in &vs {
            if !seen.insert(v) {
                return Err(SolidError::RepeatedVertex(v.clone()));
            }
        }
        Ok(Self::rotated(vs))
    }

    fn rotated(mut vs: Vec<String>) -> Self {
        let start = vs
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        vs.rotate_left(start);
        Face(vs)
    }

    pub fn vertices(&self) -> &[String] {
        &self.0
    }

    /// The same cycle traversed the other way (normal flipped).
    pub fn reversed(&self) -> Face {
        Self::rotated(self.0.iter().rev().cloned().collect())
    }

    pub fn is_reversed_equal(&self, other: &Face) -> bool {
        self.reversed() == *other
    }

    /// Directed edges `(v_i, v_{i+1})`, wrapping around.
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str)> + '_ {
        let n = self.0.len();
        (0..n).map(move |i| (self.0[i].as_str(), self.0[(i + 1) % n].as_str()))
    }
}

impl fmt::Display for Face {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join(" "))
    }
}

impl FromStr for Face {
    type Err = SolidError;
    fn from_str(s: &str) -> Result<Self, SolidError> {
        Face::new(s.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()))
    }
}

/// A polyhedron as its set of outward-oriented faces.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct FaceSet(BTreeSet<Face>);

impl FaceSet {
    pub fn new(faces: impl IntoIterator<Item = Face>) -> Self {
        FaceSet(faces.into_iter().collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, f: &Face) -> bool {
        self.0.contains(f)
    }

    pub fn faces(&self) -> impl Iterator<Item = &Face> {
        self.0.iter()
    }

    pub fn without(&self, f: &Face) -> FaceSet {
        let mut s = self.0.clone();
        s.remove(f);
        FaceSet(s)
    }

    pub fn vertices(&self) -> BTreeSet<&str> {
        self.0.iter().flat_map(|f| f.0.iter().map(String::as_str)).collect()
    }
}

impl fmt::Display for FaceSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for face in &self.0 {
            writeln!(f, "{face}")?;
        }
        Ok(())
    }
}

impl FromStr for FaceSet {
    type Err = SolidError;
    fn from_str(s: &str) -> Result<Self, SolidError> {
        let mut faces = BTreeSet::new();
        for (i, line) in s.lines().enumerate() {
            let l = line.split('#').next().unwrap_or("").trim();
            if l.is_empty() {
                continue;
            }
            let face = l.parse().map_err(|e| SolidError::Literal {
                line: i + 1,
                source: Box::new(e),
            })?;
            faces.insert(face);
        }
        Ok(FaceSet(faces))
    }
}

/// Glue `ra` and `rb` along `sa` / `sb`: `(ra \ {sa}) ∪ (rb \ {sb})`.
pub fn compose(ra: &FaceSet, sa: &Face, rb: &FaceSet, sb: &Face) -> Result<FaceSet, SolidError> {
    if !ra.contains(sa) {
        return Err(SolidError::InterfaceNotMember(sa.clone()));
    }
    if !rb.contains(sb) {
        return Err(SolidError::InterfaceNotMember(sb.clone()));
    }
    if !sa.is_reversed_equal(sb) {
        return Err(SolidError::NotReversed(sa.clone(), sb.clone()));
    }
    let mut out = ra.without(sa).0;
    out.extend(rb.without(sb).0);
    Ok(FaceSet(out))
}

/// Each directed edge occurs exactly once and its opposite occurs exactly once.
pub fn is_closed_surface(r: &FaceSet) -> bool {
    let mut count: BTreeMap<(&str, &str), usize> = BTreeMap::new();
    for f in r.faces() {
        for e in f.edges() {
            *count.entry(e).or_default() += 1;
        }
    }
    count
        .iter()
        .all(|(&(u, v), &n)| n == 1 && count.get(&(v, u)) == Some(&1))
}

/// Extrude `base` to a prism whose top copies the cycle with labels `top`.
///
/// The returned solid contains `base.reversed()` as its bottom face, so it
/// can be glued onto any solid that has `base` as an outward face.
pub fn extrude(base: &Face, top: &[String]) -> Result<FaceSet, SolidError> {
    let v = base.vertices();
    assert_eq!(v.len(), top.len(), "top cycle must match the base");
    let k = v.len();
    let mut faces = vec![base.reversed(), Face::new(top.iter().cloned())?];
    for i in 0..k {
        let j = (i + 1) % k;
        faces.push(Face::new([v[i].clone(), v[j].clone(), top[j].clone(), top[i].clone()])?);
    }
    Ok(FaceSet::new(faces))
}

/// Cone over `base` to a single `apex`; contains `base.reversed()`.
pub fn pyramid(base: &Face, apex: &str) -> Result<FaceSet, SolidError> {
    let v = base.vertices();
    let k = v.len();
    let mut faces = vec![base.reversed()];
    for i in 0..k {
        faces.push(Face::new([v[i].clone(), v[(i + 1) % k].clone(), apex.to_string()])?);
    }
    Ok(FaceSet::new(faces))
}

/// Axis-aligned box on labels `ABCD` (bottom, counter-clockwise from above) and `EFGH` (top).
pub fn cube(labels: [&str; 8]) -> FaceSet {
    let [a, b, c, d, e, f, g, h] = labels;
    let top: Vec<String> = [e, f, g, h].iter().map(|s| s.to_string()).collect();
    // `bottom` is given with an upward normal; extrusion flips it outward.
    let bottom = Face::new([a, b, c, d]).expect("four distinct labels");
    extrude(&bottom, &top).expect("distinct labels")
}
