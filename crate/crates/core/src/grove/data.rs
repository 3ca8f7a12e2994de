use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::wavelet::{forward_dwt, CoefficientTree, NodeIndex, Signal, TreeShape, WaveletFilter};

/// Wavelet coefficients of `n` observations, stored node-major so each node's
/// observation vector is contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct GroveData<T> {
    shape: TreeShape,
    n: usize,
    father: Vec<T>,
    mothers: Vec<T>,
}

impl<T: Real> GroveData<T> {
    pub fn from_trees(trees: &[CoefficientTree<T>]) -> Result<Self> {
        let first = trees
            .first()
            .ok_or_else(|| Error::Shape("no observations".into()))?;
        let shape = first.shape();
        if let Some(bad) = trees.iter().find(|t| t.shape() != shape) {
            return Err(Error::Shape(format!(
                "observation of length {} among length {}",
                bad.signal_len(),
                shape.signal_len()
            )));
        }
        let n = trees.len();
        let nodes = shape.node_count();
        let mut mothers = vec![T::zero(); nodes * n];
        for (i, tree) in trees.iter().enumerate() {
            for (node, &d) in tree.mothers().iter().enumerate() {
                mothers[node * n + i] = d;
            }
        }
        Ok(Self {
            shape,
            n,
            father: trees.iter().map(|t| t.father).collect(),
            mothers,
        })
    }

    /// Transforms raw observations with `filter`.
    pub fn from_signals(signals: &[Signal<T>], filter: &WaveletFilter<T>) -> Result<Self> {
        let trees: Vec<_> = signals.iter().map(|y| forward_dwt(y, filter)).collect();
        Self::from_trees(&trees)
    }

    /// Raw node-major table: `father[i]` and `mothers[node * n + i]`.
    pub fn from_parts(shape: TreeShape, n: usize, father: Vec<T>, mothers: Vec<T>) -> Result<Self> {
        if father.len() != n || mothers.len() != shape.node_count() * n {
            return Err(Error::Shape(format!(
                "expected {n} father and {} mother coefficients, got {} and {}",
                shape.node_count() * n,
                father.len(),
                mothers.len()
            )));
        }
        Ok(Self { shape, n, father, mothers })
    }

    pub fn shape(&self) -> TreeShape {
        self.shape
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn node(&self, node: NodeIndex) -> &[T] {
        let start = node.flat() * self.n;
        &self.mothers[start..start + self.n]
    }

    pub fn father(&self) -> &[T] {
        &self.father
    }

    /// Observation `i` as a coefficient tree.
    pub fn tree(&self, i: usize) -> CoefficientTree<T> {
        let nodes = self.shape.node_count();
        let mothers = (0..nodes).map(|node| self.mothers[node * self.n + i]).collect();
        CoefficientTree::new(self.father[i], mothers).expect("dyadic by construction")
    }

    /// Subset of observations, in the order given.
    pub fn select(&self, rows: &[usize]) -> Self {
        let n = rows.len();
        let nodes = self.shape.node_count();
        let mut mothers = Vec::with_capacity(nodes * n);
        for node in 0..nodes {
            mothers.extend(rows.iter().map(|&i| self.mothers[node * self.n + i]));
        }
        Self {
            shape: self.shape,
            n,
            father: rows.iter().map(|&i| self.father[i]).collect(),
            mothers,
        }
    }
}
