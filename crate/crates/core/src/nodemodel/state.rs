/// Joint hidden states `(s, r_1, ..., r_L)` in `{0,1}^(L+1)`, indexed
/// lexicographically: `s` is the most significant bit, `r_L` the least.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StateSpace {
    factors: usize,
}

impl StateSpace {
    pub fn new(factors: usize) -> Self {
        assert!(factors <= 16, "too many factors for exact enumeration");
        Self { factors }
    }

    pub fn factors(self) -> usize {
        self.factors
    }

    /// `2^(L+1)`.
    pub fn size(self) -> usize {
        1 << (self.factors + 1)
    }

    pub fn iter(self) -> std::ops::Range<usize> {
        0..self.size()
    }

    /// Baseline indicator `s`.
    #[inline]
    pub fn s(self, state: usize) -> bool {
        state >> self.factors & 1 == 1
    }

    /// Indicator of factor `l` (0-based).
    #[inline]
    pub fn r(self, state: usize, l: usize) -> bool {
        state >> (self.factors - 1 - l) & 1 == 1
    }

    pub fn compose(self, s: bool, r: &[bool]) -> usize {
        assert_eq!(r.len(), self.factors);
        r.iter()
            .fold(s as usize, |acc, &bit| (acc << 1) | bit as usize)
    }

    pub fn decompose(self, state: usize) -> (bool, Vec<bool>) {
        (self.s(state), (0..self.factors).map(|l| self.r(state, l)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexicographic_order() {
        let sp = StateSpace::new(2);
        let listed: Vec<_> = sp.iter().map(|i| sp.decompose(i)).collect();
        assert_eq!(listed[0], (false, vec![false, false]));
        assert_eq!(listed[1], (false, vec![false, true]));
        assert_eq!(listed[2], (false, vec![true, false]));
        assert_eq!(listed[4], (true, vec![false, false]));
        assert_eq!(listed[7], (true, vec![true, true]));
        for i in sp.iter() {
            let (s, r) = sp.decompose(i);
            assert_eq!(sp.compose(s, &r), i);
        }
        assert_eq!(StateSpace::new(0).size(), 2);
    }
}
