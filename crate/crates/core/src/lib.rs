//! Optimal parametrizations of linear single-matrix graph-directed iterated
//! function systems.
//!
//! A system is a directed multigraph whose edges carry maps
//! `g_e(x) = A^{-1}(x + d_e)` sharing one expanding integer-style matrix `A`.
//! Given an order on the outgoing edges of every vertex, each invariant set
//! `E_i` admits a continuous, measure-preserving curve `ψ_i : [0, v_i] → E_i`
//! that is optimally Hölder with respect to the pseudo-norm of `A`.
//!
//! Pipeline: [`OrderedGifs`] → [`PerronData`] → [`BoundaryData`] →
//! [`RecordingSystem`] → [`Parametrization`].

pub mod addressing;
pub mod corpus;
pub mod export;
pub mod gifs;
pub mod parametrize;
pub mod pseudonorm;
pub mod recording;
pub mod spec_file;
pub mod spectral;

pub use addressing::{check_chain_condition, BoundaryData, ChainReport};
pub use gifs::{AffineMap, Edge, EdgeSpec, GifsError, OrderedGifs, Point, SystemDescription, Walk};
pub use parametrize::{
    CurveApproximation, HolderConfig, HolderEstimate, ParamError, Parametrization,
};
pub use pseudonorm::{PseudoNorm, PseudoNormError};
pub use recording::{RecordingError, RecordingSystem};
pub use spec_file::{expand_substitution, parse_spec, parse_spec_str, write_spec, SpecError};
pub use spectral::{PerronData, SpectralError};
