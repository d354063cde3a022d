#![allow(dead_code)]

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vvv_mhd::experiments::random_band;
use vvv_mhd::spectral::{dealias, Grid, SpectralVectorField};

/// Seeded solenoidal field inside the dealiased band.
pub fn solenoidal(grid: &Arc<Grid>, seed: u64, stream: u64) -> SpectralVectorField {
    random_band(grid, grid.max_retained_mode().min(grid.n() / 4), 1.0, seed, stream)
}

/// Seeded dealiased field with no divergence constraint.
pub fn arbitrary(grid: &Arc<Grid>, seed: u64) -> SpectralVectorField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let comps = [0, 1, 2].map(|_| {
        (0..grid.points())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect::<Vec<_>>()
    });
    dealias(&SpectralVectorField::from_coefficients(grid, comps).unwrap())
}

/// `max|a - b| / max|b|`
pub fn rel_diff(a: &SpectralVectorField, b: &SpectralVectorField) -> f64 {
    let scale = b.max_abs();
    if scale == 0.0 {
        a.max_abs()
    } else {
        a.max_abs_difference(b) / scale
    }
}
