//! GDL document syntax.
//!
//! Line-oriented `key: value` entries. A `predicate:` or `theorem:` key
//! opens a new entry; the keys that follow attach to it. `check`,
//! `premise`, `extend` and `conclusion` values are `&`-separated fact lists
//! and may be repeated; each `multi` line holds one alternative ordering.
//! Blank lines and lines starting with `#` are ignored.
//!
//! ```text
//! predicate: IsMidpointOfLine(M,AB)
//! kind: Relation
//! check: Point(M) & Line(AB) & Collinear(AMB)
//! multi: M,BA
//! extend: Equal(LengthOfLine(AM),LengthOfLine(MB))
//!
//! theorem: transitivity_between_plane_and_plane
//! premise: ParallelBetweenPlane(U,V) & ParallelBetweenPlane(V,W)
//! conclusion: ParallelBetweenPlane(U,W)
//! ```
//!
//! A document whose first non-blank character is `{` is read as JSON with
//! `predicates` and `theorems` arrays carrying the same fields.

use serde::{Deserialize, Serialize};

use super::KbError;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawPredicate {
    #[serde(skip)]
    pub line: usize,
    /// Signature such as `IsMidpointOfLine(M,AB)`.
    pub name: String,
    pub kind: String,
    #[serde(default)]
    pub check: Vec<String>,
    #[serde(default)]
    pub multi: Vec<String>,
    #[serde(default)]
    pub extend: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawTheorem {
    #[serde(skip)]
    pub line: usize,
    pub name: String,
    #[serde(default)]
    pub premise: Vec<String>,
    #[serde(default)]
    pub conclusion: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawDocument {
    #[serde(default)]
    pub predicates: Vec<RawPredicate>,
    #[serde(default)]
    pub theorems: Vec<RawTheorem>,
}

enum Open {
    None,
    Predicate(RawPredicate),
    Theorem(RawTheorem),
}

pub fn parse_document(text: &str) -> Result<RawDocument, KbError> {
    if text.trim_start().starts_with('{') {
        return serde_json::from_str(text).map_err(|e| KbError::Json(e.to_string()));
    }
    let mut doc = RawDocument::default();
    let mut open = Open::None;
    let close = |open: Open, doc: &mut RawDocument| match open {
        Open::Predicate(p) => doc.predicates.push(p),
        Open::Theorem(t) => doc.theorems.push(t),
        Open::None => {}
    };
    for (i, raw_line) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw_line.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let (key, value) = l.split_once(':').ok_or(KbError::Syntax {
            line,
            msg: "expected `key: value`".into(),
        })?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "predicate" => {
                close(std::mem::replace(&mut open, Open::None), &mut doc);
                open = Open::Predicate(RawPredicate {
                    line,
                    name: value.to_string(),
                    ..Default::default()
                });
            }
            "theorem" => {
                close(std::mem::replace(&mut open, Open::None), &mut doc);
                open = Open::Theorem(RawTheorem {
                    line,
                    name: value.to_string(),
                    ..Default::default()
                });
            }
            _ => match (&mut open, key) {
                (Open::Predicate(p), "kind") => p.kind = value.to_string(),
                (Open::Predicate(p), "check") => p.check.extend(split_conj(value)),
                (Open::Predicate(p), "multi") => p.multi.push(value.replace(' ', "")),
                (Open::Predicate(p), "extend") => p.extend.extend(split_conj(value)),
                (Open::Theorem(t), "premise") => t.premise.extend(split_conj(value)),
                (Open::Theorem(t), "conclusion") => t.conclusion.extend(split_conj(value)),
                (Open::None, _) => {
                    return Err(KbError::Syntax {
                        line,
                        msg: format!("`{key}` outside of an entry"),
                    })
                }
                _ => {
                    return Err(KbError::Syntax {
                        line,
                        msg: format!("unknown key `{key}` for this entry"),
                    })
                }
            },
        }
    }
    close(open, &mut doc);
    Ok(doc)
}

fn split_conj(value: &str) -> impl Iterator<Item = String> + '_ {
    value
        .split('&')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoint_entry() {
        let doc = parse_document(
            "# sample\npredicate: IsMidpointOfLine(M,AB)\nkind: Relation\n\
             check: Point(M) & Line(AB)\ncheck: Collinear(AMB)\nmulti: M,BA\n\
             extend: Equal(LengthOfLine(AM),LengthOfLine(MB))\n",
        )
        .unwrap();
        let p = &doc.predicates[0];
        assert_eq!(p.line, 2);
        assert_eq!(p.check, ["Point(M)", "Line(AB)", "Collinear(AMB)"]);
        assert_eq!(p.multi, ["M,BA"]);
        assert_eq!(p.extend.len(), 1);
    }

    #[test]
    fn key_outside_entry() {
        assert!(matches!(
            parse_document("check: Point(A)"),
            Err(KbError::Syntax { line: 1, .. })
        ));
    }

    #[test]
    fn json_form() {
        let doc = parse_document(
            r#"{"theorems":[{"name":"t","premise":["Sphere(O)"],"conclusion":["Point(O)"]}]}"#,
        )
        .unwrap();
        assert_eq!(doc.theorems[0].premise, ["Sphere(O)"]);
    }
}
