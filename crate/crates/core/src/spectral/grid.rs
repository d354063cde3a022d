use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use super::fft::Fft3;
use super::SpectralError;

/// Default retained fraction of each axis' modes (2/3 rule).
pub const DEFAULT_DEALIAS_FRACTION: f64 = 2.0 / 3.0;

/// Uniform `n³` grid on the unit torus `[0,1)³` together with its
/// wavenumber lattice and dealiasing mask.
///
/// Mode index `i` along an axis maps to the signed integer `m` with
/// `m ∈ {-n/2+1, …, n/2}` and wavenumber `2πm`.
pub struct Grid {
    n: usize,
    dealias_fraction: f64,
    wavenumbers: Vec<f64>,
    // First-derivative symbol: like `wavenumbers` with the Nyquist entry zeroed.
    derivative_wavenumbers: Vec<f64>,
    retained: Vec<bool>,
    pub(crate) fft: Fft3,
}

impl Grid {
    pub fn new(n: usize) -> Result<Arc<Self>, SpectralError> {
        Self::with_dealias(n, DEFAULT_DEALIAS_FRACTION)
    }

    pub fn with_dealias(n: usize, dealias_fraction: f64) -> Result<Arc<Self>, SpectralError> {
        if n < 8 || !n.is_multiple_of(2) {
            return Err(SpectralError::InvalidGrid(format!(
                "points per dimension must be even and at least 8, got {n}"
            )));
        }
        if !(dealias_fraction > 0.0 && dealias_fraction <= 1.0) {
            return Err(SpectralError::InvalidGrid(format!(
                "dealias fraction must lie in (0, 1], got {dealias_fraction}"
            )));
        }
        let half = n / 2;
        let cutoff = dealias_fraction * half as f64;
        let mut wavenumbers = Vec::with_capacity(n);
        let mut derivative_wavenumbers = Vec::with_capacity(n);
        let mut retained = Vec::with_capacity(n);
        for i in 0..n {
            let m = signed_mode(i, n);
            let k = 2.0 * PI * m as f64;
            wavenumbers.push(k);
            derivative_wavenumbers.push(if i == half { 0.0 } else { k });
            retained.push((m.unsigned_abs() as f64) <= cutoff);
        }
        Ok(Arc::new(Self {
            n,
            dealias_fraction,
            wavenumbers,
            derivative_wavenumbers,
            retained,
            fft: Fft3::new(n),
        }))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> f64 {
        1.0
    }

    pub fn dealias_fraction(&self) -> f64 {
        self.dealias_fraction
    }

    /// Grid spacing `1/n`.
    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn points(&self) -> usize {
        self.n * self.n * self.n
    }

    /// Signed integer mode for array index `i`.
    pub fn mode(&self, i: usize) -> i64 {
        signed_mode(i, self.n)
    }

    /// Wavenumber `2πm` for array index `i`.
    pub fn wavenumber(&self, i: usize) -> f64 {
        self.wavenumbers[i]
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Wavenumbers used for odd-order derivatives; zero at the Nyquist index so
    /// that derivatives of real fields stay real.
    pub fn derivative_wavenumbers(&self) -> &[f64] {
        &self.derivative_wavenumbers
    }

    /// Whether index `i` survives the dealiasing mask along one axis.
    pub fn is_retained(&self, i: usize) -> bool {
        self.retained[i]
    }

    pub fn retained_mask(&self) -> &[bool] {
        &self.retained
    }

    /// Largest retained `|m|` along one axis.
    pub fn max_retained_mode(&self) -> usize {
        (self.dealias_fraction * (self.n / 2) as f64).floor() as usize
    }

    /// `|k|²` at lattice index `(i, j, l)`.
    pub fn k_squared(&self, i: usize, j: usize, l: usize) -> f64 {
        let (a, b, c) = (self.wavenumbers[i], self.wavenumbers[j], self.wavenumbers[l]);
        a * a + b * b + c * c
    }

    /// Index of the conjugate partner `-k` of index `i` along one axis.
    pub fn conjugate_index(&self, i: usize) -> usize {
        (self.n - i) % self.n
    }

    /// Physical coordinate of grid point `i` along one axis.
    pub fn coordinate(&self, i: usize) -> f64 {
        i as f64 / self.n as f64
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        std::ptr::eq(self, other)
            || (self.n == other.n && self.dealias_fraction == other.dealias_fraction)
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.n)
            .field("dealias_fraction", &self.dealias_fraction)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}

fn signed_mode(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}
