//! Fourier-space representation of vector fields on the unit torus `[0,1)³`.
//!
//! Fields are stored as Fourier amplitudes `v̂(k)` with `v(x) = Σ v̂(k) e^{ik·x}`,
//! so Parseval reads `∫|v|² dx = Σ|v̂(k)|²`. The `k = 0` mode is pinned to zero
//! and every quadratic product is dealiased with the 2/3 rule, which makes the
//! pseudo-spectral products coincide with their Galerkin truncations on the
//! retained modes.

mod fft;
mod field;
mod grid;
pub mod ops;

pub use field::{PhysicalVectorField, SpectralScalarField, SpectralVectorField};
pub use grid::{Grid, DEFAULT_DEALIAS_FRACTION};
pub use ops::{
    advect, bilinear_b, cross, curl, dealias, divergence, gradient, inner, inner_h1, laplacian,
    leray_project, norm, voigt_apply, voigt_invert, NormOrder,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("fields live on different grids (n = {left} vs n = {right})")]
    GridMismatch { left: usize, right: usize },
    #[error("expected {expected} samples per component")]
    ShapeMismatch { expected: usize },
    #[error("non-finite sample in component {component} at grid index {index:?}")]
    NonFinite {
        component: usize,
        index: (usize, usize, usize),
    },
    #[error("Voigt length must be finite and non-negative, got {0}")]
    NegativeAlpha(f64),
}
