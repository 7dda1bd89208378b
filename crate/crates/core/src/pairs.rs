//! Indexing of V_N = {(x, y) : 0 < x < y < N}.

/// Row-major enumeration of pairs x < y in Λ_N.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairIndex {
    pub n: usize,
}

impl PairIndex {
    pub fn new(n: usize) -> Self {
        PairIndex { n }
    }

    pub fn len(&self) -> usize {
        let m = self.n.saturating_sub(1);
        m * m.saturating_sub(1) / 2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        0 < x && x < y && y < self.n
    }

    /// Position of (x, y); requires `contains(x, y)`.
    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        debug_assert!(self.contains(x, y));
        let m = self.n - 1;
        (x - 1) * m - (x - 1) * x / 2 + (y - x - 1)
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n;
        (1..n).flat_map(move |x| (x + 1..n).map(move |y| (x, y)))
    }
}
