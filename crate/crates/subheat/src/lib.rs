//! Spectral laboratory for subordinated heat semigroups.
//!
//! The crate builds the semigroups `W_t^f` whose Fourier multipliers are
//! `e^{-t f(|xi|^2)}` for Bernstein functions `f` (and generalized exponents
//! `|xi|^{2 beta}`), evaluates discrete Besov and Triebel-Lizorkin
//! quasi-norms through a dyadic resolution of unity, samples alpha-stable
//! subordinators, and runs the derived experiments: contraction and caloric
//! smoothing ratios, negative-moment formulas with quadrature oracles, and a
//! mild-solution solver for `du/dt + (-Delta)^beta u = div[u^2]`.
//!
//! Everything is deterministic: random draws are keyed by `(seed, chunk)`
//! and all data-parallel reductions collect in index order before folding,
//! so results are bit-identical with and without the `parallel` feature.

pub mod bernstein;
pub mod fields;
pub mod grid;
pub mod par;
pub mod pde;
pub mod quad;
pub mod semigroup;
pub mod smoothing;
pub mod norms;
pub mod subordinator;

pub use bernstein::{BernsteinError, BernsteinFunction, Family};
pub use grid::{DyadicPartition, GridError, Repr, SpectralField, TorusGrid};
pub use pde::{CauchyProblem, MildSolverState, PdeError, WeightedNormSpec};
pub use quad::{Quad, QuadError};
pub use semigroup::{lift, semigroup_property_check, SemigroupError, SemigroupKind, SemigroupSpec};
pub use norms::{NormError, NormScale, NormSpec};
pub use smoothing::{SmoothingError, SmoothingExperiment};
pub use subordinator::{SandwichRecord, StableSampleBatch, SubordinatorError};
