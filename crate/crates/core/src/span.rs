use std::fmt;

use serde::{Deserialize, Serialize};

/// Half-open token interval `[start, end)`.
///
/// Serialized as a two-element array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub const fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }

    /// Number of tokens strictly between the two spans; zero when they touch or overlap.
    pub fn gap(&self, other: &Span) -> usize {
        if other.start >= self.end {
            other.start - self.end
        } else {
            self.start.saturating_sub(other.end)
        }
    }

    /// Span of the final token.
    pub fn last_token(&self) -> Span {
        Span::new(self.end - 1, self.end)
    }
}

impl From<[usize; 2]> for Span {
    fn from([start, end]: [usize; 2]) -> Self {
        Span { start, end }
    }
}

impl From<Span> for [usize; 2] {
    fn from(s: Span) -> Self {
        [s.start, s.end]
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.start, self.end)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_is_symmetric_and_zero_on_overlap() {
        let a = Span::new(2, 4);
        let b = Span::new(7, 9);
        assert_eq!(a.gap(&b), 3);
        assert_eq!(b.gap(&a), 3);
        assert_eq!(a.gap(&Span::new(3, 8)), 0);
        assert_eq!(a.gap(&Span::new(4, 5)), 0);
    }

    #[test]
    fn serializes_as_pair() {
        let s = serde_json::to_string(&Span::new(1, 3)).unwrap();
        assert_eq!(s, "[1,3]");
        let back: Span = serde_json::from_str(&s).unwrap();
        assert_eq!(back, Span::new(1, 3));
    }
}
