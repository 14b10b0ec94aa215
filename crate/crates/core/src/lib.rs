//! Semi-supervised and active learning for edge flows.
//!
//! Given flow measurements on some edges of a graph, [`ssl`] reconstructs the
//! remaining flows under a (near) divergence-free prior, [`active`] picks
//! which edges to measure, [`hodge`] splits flows into gradient, curl and
//! harmonic parts and prices currency markets without arbitrage, and
//! [`experiments`] drives the synthetic-flow evaluation sweeps.

pub mod active;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod hodge;
pub mod market;
pub mod solvers;
pub mod spectral;
pub mod ssl;

pub use active::{SelectionMethod, SelectionResult};
pub use error::{Error, Result};
pub use hodge::{hodge_decompose, HodgeComponents};
pub use market::{ExchangeMarket, PricingResult, Quote};
pub use graph::{EdgeFlow, FlowNetwork, SparseOperator, VertexLabels};
pub use spectral::{SpectralBasis, SpectralCoefficients};
pub use ssl::{LabelSet, Method, SslConfig};
