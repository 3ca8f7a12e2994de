//! Location-scale indexing of mother wavelet coefficients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Node `(j, k)`: resolution level `j` (0 is coarsest) and position `k < 2^j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeIndex {
    pub j: u32,
    pub k: u32,
}

impl NodeIndex {
    pub const ROOT: NodeIndex = NodeIndex { j: 0, k: 0 };

    pub fn new(j: u32, k: u32) -> Self {
        debug_assert!(j < 31 && k < (1 << j));
        Self { j, k }
    }

    pub fn is_root(self) -> bool {
        self.j == 0
    }

    pub fn parent(self) -> Option<NodeIndex> {
        (self.j > 0).then(|| NodeIndex::new(self.j - 1, self.k / 2))
    }

    pub fn children(self) -> [NodeIndex; 2] {
        [
            NodeIndex::new(self.j + 1, 2 * self.k),
            NodeIndex::new(self.j + 1, 2 * self.k + 1),
        ]
    }

    /// Breadth-first position: `2^j - 1 + k`.
    #[inline]
    pub fn flat(self) -> usize {
        (1usize << self.j) - 1 + self.k as usize
    }

    pub fn from_flat(i: usize) -> Self {
        let j = usize::BITS - 1 - (i + 1).leading_zeros();
        NodeIndex::new(j, (i + 1 - (1 << j)) as u32)
    }
}

impl std::fmt::Display for NodeIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.j, self.k)
    }
}

/// Shape of a bifurcating tree with levels `0..=max_level`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeShape {
    max_level: u32,
}

impl TreeShape {
    pub fn new(max_level: u32) -> Self {
        assert!(max_level < 30, "tree too deep");
        Self { max_level }
    }

    /// Shape of the mother-coefficient tree for a signal of length `t`.
    pub fn for_length(t: usize) -> Result<Self> {
        Ok(Self::new(dyadic_levels(t)?))
    }

    /// Finest level `J`.
    pub fn max_level(self) -> u32 {
        self.max_level
    }

    pub fn node_count(self) -> usize {
        (1usize << (self.max_level + 1)) - 1
    }

    /// Signal length `T = node_count + 1`.
    pub fn signal_len(self) -> usize {
        self.node_count() + 1
    }

    pub fn is_leaf(self, node: NodeIndex) -> bool {
        node.j == self.max_level
    }

    pub fn level(self, j: u32) -> impl DoubleEndedIterator<Item = NodeIndex> + ExactSizeIterator {
        (0..1u32 << j).map(move |k| NodeIndex::new(j, k))
    }

    /// Levels `0, 1, ..., J`; parents always precede children.
    pub fn top_down(self) -> impl Iterator<Item = NodeIndex> {
        (0..self.node_count()).map(NodeIndex::from_flat)
    }

    /// Levels `J, J-1, ..., 0`; children always precede parents.
    pub fn bottom_up(self) -> impl Iterator<Item = NodeIndex> {
        (0..=self.max_level)
            .rev()
            .flat_map(move |j| self.level(j))
    }
}

/// Returns `J` with `t = 2^(J+1)`.
pub fn dyadic_levels(t: usize) -> Result<u32> {
    if t < 2 || !t.is_power_of_two() {
        return Err(Error::Length(t));
    }
    Ok(t.trailing_zeros() - 1)
}

/// Father coefficient plus the `T - 1` mother coefficients stored breadth-first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTree<T> {
    pub father: T,
    mothers: Vec<T>,
}

impl<T: Real> CoefficientTree<T> {
    pub fn new(father: T, mothers: Vec<T>) -> Result<Self> {
        let t = mothers.len() + 1;
        dyadic_levels(t)?;
        Ok(Self { father, mothers })
    }

    pub fn zeros(shape: TreeShape) -> Self {
        Self {
            father: T::zero(),
            mothers: vec![T::zero(); shape.node_count()],
        }
    }

    pub fn shape(&self) -> TreeShape {
        TreeShape::for_length(self.mothers.len() + 1).expect("validated at construction")
    }

    pub fn signal_len(&self) -> usize {
        self.mothers.len() + 1
    }

    pub fn get(&self, node: NodeIndex) -> T {
        self.mothers[node.flat()]
    }

    pub fn set(&mut self, node: NodeIndex, value: T) {
        self.mothers[node.flat()] = value;
    }

    /// Mother coefficients breadth-first.
    pub fn mothers(&self) -> &[T] {
        &self.mothers
    }

    pub fn mothers_mut(&mut self) -> &mut [T] {
        &mut self.mothers
    }

    /// Coefficients at level `j`, ordered by `k`.
    pub fn level(&self, j: u32) -> &[T] {
        let start = (1usize << j) - 1;
        &self.mothers[start..start + (1usize << j)]
    }

    pub fn energy(&self) -> T {
        self.father * self.father + self.mothers.iter().map(|&d| d * d).sum::<T>()
    }

    pub fn map(&self, mut f: impl FnMut(T) -> T) -> Self {
        Self {
            father: f(self.father),
            mothers: self.mothers.iter().map(|&d| f(d)).collect(),
        }
    }
}
