//! Canonical point identifiers.
//!
//! Every space in this crate names its points with one of a few shapes:
//! integer vectors for lattices, words for groups and trees, names for
//! explicit graphs, and edge midpoints for subdivided graphs. The string
//! form is canonical: parsing the display of a valid point gives it back.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Display form of the empty word (identity / tree root).
pub const EMPTY_WORD: &str = "ε";

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Point {
    /// A point of ℤᵈ. Dimension one displays as a bare integer.
    Lattice(Vec<i64>),
    /// A word over single-byte ASCII letters.
    Word(Vec<u8>),
    /// A named vertex of an explicit graph.
    Name(String),
    /// The midpoint of an edge; endpoints are stored in ascending order.
    Mid(Box<Point>, Box<Point>),
}

impl Point {
    pub fn int(x: i64) -> Self {
        Point::Lattice(vec![x])
    }

    pub fn lattice(v: &[i64]) -> Self {
        Point::Lattice(v.to_vec())
    }

    pub fn word(w: &str) -> Self {
        if w == EMPTY_WORD {
            Point::Word(Vec::new())
        } else {
            Point::Word(w.as_bytes().to_vec())
        }
    }

    pub fn name(s: &str) -> Self {
        Point::Name(s.to_string())
    }

    pub fn mid(a: Point, b: Point) -> Self {
        if a <= b {
            Point::Mid(Box::new(a), Box::new(b))
        } else {
            Point::Mid(Box::new(b), Box::new(a))
        }
    }

    pub fn as_lattice(&self) -> Option<&[i64]> {
        match self {
            Point::Lattice(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_word(&self) -> Option<&[u8]> {
        match self {
            Point::Word(w) => Some(w),
            _ => None,
        }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Lattice(v) if v.len() == 1 => write!(f, "{}", v[0]),
            Point::Lattice(v) => {
                f.write_str("(")?;
                for (i, x) in v.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str(")")
            }
            Point::Word(w) if w.is_empty() => f.write_str(EMPTY_WORD),
            Point::Word(w) => f.write_str(&String::from_utf8_lossy(w)),
            Point::Name(s) => f.write_str(s),
            Point::Mid(a, b) => write!(f, "[{a}|{b}]"),
        }
    }
}

/// Untyped parse of a point string; the space decides which shape it expects.
pub(crate) fn parse_lattice(s: &str, dim: usize) -> Option<Vec<i64>> {
    let s = s.trim();
    let v: Vec<i64> = if let Some(inner) = s.strip_prefix('(').and_then(|r| r.strip_suffix(')')) {
        inner
            .split(',')
            .map(|c| c.trim().parse::<i64>())
            .collect::<Result<_, _>>()
            .ok()?
    } else {
        if dim != 1 {
            return None;
        }
        vec![s.parse::<i64>().ok()?]
    };
    (v.len() == dim).then_some(v)
}

/// Splits "[u|v]" into its two halves, respecting nested brackets.
pub(crate) fn split_mid(s: &str) -> Option<(&str, &str)> {
    let inner = s.strip_prefix('[')?.strip_suffix(']')?;
    let mut depth = 0usize;
    for (i, c) in inner.char_indices() {
        match c {
            '[' => depth += 1,
            ']' => depth = depth.checked_sub(1)?,
            '|' if depth == 0 => return Some((&inner[..i], &inner[i + 1..])),
            _ => {}
        }
    }
    None
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Deserialising without a space yields a [`Point::Name`]; callers that know
/// the space re-parse through [`crate::spaces::SpaceDescriptor::parse_point`].
impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(Point::Name(s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_forms() {
        assert_eq!(Point::int(-3).to_string(), "-3");
        assert_eq!(Point::lattice(&[1, -2]).to_string(), "(1,-2)");
        assert_eq!(Point::word("").to_string(), "ε");
        assert_eq!(Point::word("aB").to_string(), "aB");
        assert_eq!(Point::mid(Point::int(4), Point::int(3)).to_string(), "[3|4]");
    }

    #[test]
    fn lattice_parsing() {
        assert_eq!(parse_lattice("-7", 1), Some(vec![-7]));
        assert_eq!(parse_lattice("(1, 2)", 2), Some(vec![1, 2]));
        assert_eq!(parse_lattice("(1,2)", 3), None);
        assert_eq!(parse_lattice("3", 2), None);
    }

    #[test]
    fn mid_splitting_handles_nesting() {
        assert_eq!(split_mid("[3|4]"), Some(("3", "4")));
        assert_eq!(split_mid("[(1,2)|(1,3)]"), Some(("(1,2)", "(1,3)")));
        assert_eq!(split_mid("[[a|b]|c]"), Some(("[a|b]", "c")));
        assert_eq!(split_mid("3"), None);
    }
}
