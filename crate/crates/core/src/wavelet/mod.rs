//! Orthonormal periodized DWT and the location-scale tree it induces.

mod filter;
mod transform;
mod tree;

pub use filter::{WaveletFilter, WaveletName};
pub use transform::{forward_dwt, forward_dwt_slice, inverse_dwt, inverse_dwt_checked, Signal};
pub use tree::{dyadic_levels, CoefficientTree, NodeIndex, TreeShape};
