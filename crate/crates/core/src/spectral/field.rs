use std::ops::{Add, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;

use super::{Grid, SpectralError};

/// Real 3-vector samples on the `n³` grid, one flat array per component.
#[derive(Clone, Debug, PartialEq)]
pub struct PhysicalVectorField {
    grid: Arc<Grid>,
    comps: [Vec<f64>; 3],
}

impl PhysicalVectorField {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        let len = grid.points();
        Self {
            grid: grid.clone(),
            comps: [vec![0.0; len], vec![0.0; len], vec![0.0; len]],
        }
    }

    pub fn from_components(grid: &Arc<Grid>, comps: [Vec<f64>; 3]) -> Result<Self, SpectralError> {
        let len = grid.points();
        if comps.iter().any(|c| c.len() != len) {
            return Err(SpectralError::ShapeMismatch { expected: len });
        }
        Ok(Self { grid: grid.clone(), comps })
    }

    /// Samples `f(x, y, z)` at the grid points `x = i/n`.
    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64, f64, f64) -> [f64; 3]) -> Self {
        let n = grid.n();
        let mut out = Self::zeros(grid);
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    let v = f(grid.coordinate(i), grid.coordinate(j), grid.coordinate(l));
                    let idx = (i * n + j) * n + l;
                    for c in 0..3 {
                        out.comps[c][idx] = v[c];
                    }
                }
            }
        }
        out
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn component(&self, c: usize) -> &[f64] {
        &self.comps[c]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.comps[c]
    }

    pub fn components(&self) -> &[Vec<f64>; 3] {
        &self.comps
    }

    pub fn into_components(self) -> [Vec<f64>; 3] {
        self.comps
    }

    /// Value at grid point `(i, j, l)`.
    pub fn at(&self, i: usize, j: usize, l: usize) -> [f64; 3] {
        let n = self.grid.n();
        let idx = (i * n + j) * n + l;
        [self.comps[0][idx], self.comps[1][idx], self.comps[2][idx]]
    }

    /// Spatial mean of `|v|²`.
    pub fn mean_square(&self) -> f64 {
        let mut acc = 0.0;
        for idx in 0..self.grid.points() {
            acc += self.comps[0][idx].powi(2) + self.comps[1][idx].powi(2) + self.comps[2][idx].powi(2);
        }
        acc / self.grid.points() as f64
    }

    pub fn mean(&self) -> [f64; 3] {
        let len = self.grid.points() as f64;
        [0, 1, 2].map(|c| self.comps[c].iter().sum::<f64>() / len)
    }

    /// `max_x |v(x)|`.
    pub fn max_magnitude(&self) -> f64 {
        (0..self.grid.points())
            .map(|idx| {
                (self.comps[0][idx].powi(2) + self.comps[1][idx].powi(2) + self.comps[2][idx].powi(2))
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    pub fn max_abs_difference(&self, other: &Self) -> f64 {
        self.comps
            .iter()
            .zip(&other.comps)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// First non-finite sample as `(component, (i, j, l))`.
    pub fn first_non_finite(&self) -> Option<(usize, (usize, usize, usize))> {
        let n = self.grid.n();
        for (c, comp) in self.comps.iter().enumerate() {
            if let Some(idx) = comp.iter().position(|v| !v.is_finite()) {
                return Some((c, (idx / (n * n), (idx / n) % n, idx % n)));
            }
        }
        None
    }
}

/// Scalar field stored as Fourier coefficients over the lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralScalarField {
    grid: Arc<Grid>,
    coeffs: Vec<Complex64>,
}

impl SpectralScalarField {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self {
            grid: grid.clone(),
            coeffs: vec![Complex64::default(); grid.points()],
        }
    }

    pub(crate) fn from_raw(grid: &Arc<Grid>, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), grid.points());
        Self { grid: grid.clone(), coeffs }
    }

    /// Forward transform of real samples. The mean is kept.
    pub fn from_physical(grid: &Arc<Grid>, samples: &[f64]) -> Result<Self, SpectralError> {
        if samples.len() != grid.points() {
            return Err(SpectralError::ShapeMismatch { expected: grid.points() });
        }
        let n = grid.n();
        if let Some(idx) = samples.iter().position(|v| !v.is_finite()) {
            return Err(SpectralError::NonFinite {
                component: 0,
                index: (idx / (n * n), (idx / n) % n, idx % n),
            });
        }
        let coeffs = grid.fft.forward_real_batch(&[samples]).pop().expect("one spectrum");
        Ok(Self { grid: grid.clone(), coeffs })
    }

    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let samples = PhysicalVectorField::from_fn(grid, |x, y, z| [f(x, y, z), 0.0, 0.0]);
        Self::from_physical(grid, samples.component(0)).expect("sampled function must be finite")
    }

    pub fn to_physical(&self) -> Vec<f64> {
        self.grid.fft.inverse_real_batch(&[&self.coeffs]).pop().expect("one sample set")
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize, j: usize, l: usize) -> Complex64 {
        let n = self.grid.n();
        self.coeffs[(i * n + j) * n + l]
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }
}

/// Real vector field on the torus stored as three arrays of Fourier
/// coefficients.
///
/// Every constructor enforces exact Hermitian symmetry and pins the `k = 0`
/// mode to zero, so values of this type always represent real, mean-zero
/// fields.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralVectorField {
    grid: Arc<Grid>,
    comps: [Vec<Complex64>; 3],
}

impl SpectralVectorField {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        let len = grid.points();
        Self {
            grid: grid.clone(),
            comps: [
                vec![Complex64::default(); len],
                vec![Complex64::default(); len],
                vec![Complex64::default(); len],
            ],
        }
    }

    /// Builds a field from raw coefficients, enforcing Hermitian symmetry and a
    /// zero mean.
    pub fn from_coefficients(
        grid: &Arc<Grid>,
        mut comps: [Vec<Complex64>; 3],
    ) -> Result<Self, SpectralError> {
        let len = grid.points();
        if comps.iter().any(|c| c.len() != len) {
            return Err(SpectralError::ShapeMismatch { expected: len });
        }
        for comp in comps.iter_mut() {
            enforce_hermitian(grid, comp);
            comp[0] = Complex64::default();
        }
        Ok(Self { grid: grid.clone(), comps })
    }

    /// Trusted constructor for internal operators whose output is Hermitian by
    /// construction.
    pub(crate) fn from_raw(grid: &Arc<Grid>, mut comps: [Vec<Complex64>; 3]) -> Self {
        for comp in comps.iter_mut() {
            comp[0] = Complex64::default();
        }
        Self { grid: grid.clone(), comps }
    }

    /// Forward transform of physical samples. The mean of each component is
    /// discarded; use [`PhysicalVectorField::mean`] to recover it beforehand.
    pub fn from_physical(field: &PhysicalVectorField) -> Result<Self, SpectralError> {
        if let Some((component, index)) = field.first_non_finite() {
            return Err(SpectralError::NonFinite { component, index });
        }
        let grid = field.grid();
        let mut spectra = grid.fft.forward_real_batch(&[
            field.component(0),
            field.component(1),
            field.component(2),
        ]);
        let comps = [0, 1, 2].map(|c| std::mem::take(&mut spectra[c]));
        Ok(Self::from_raw(grid, comps))
    }

    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64, f64, f64) -> [f64; 3]) -> Self {
        Self::from_physical(&PhysicalVectorField::from_fn(grid, f))
            .expect("sampled function must be finite")
    }

    pub fn to_physical(&self) -> PhysicalVectorField {
        let mut samples = self.grid.fft.inverse_real_batch(&[
            &self.comps[0],
            &self.comps[1],
            &self.comps[2],
        ]);
        let comps = [0, 1, 2].map(|c| std::mem::take(&mut samples[c]));
        PhysicalVectorField::from_components(&self.grid, comps).expect("grid-sized components")
    }

    /// Largest `|Im|/max|Re|` of the inverse transform; zero for real fields.
    pub fn imaginary_residue(&self) -> f64 {
        let mut max_im: f64 = 0.0;
        let mut max_re: f64 = 0.0;
        for c in 0..3 {
            let mut work = self.comps[c].clone();
            self.grid.fft.inverse(&mut work);
            for z in work {
                max_im = max_im.max(z.im.abs());
                max_re = max_re.max(z.re.abs());
            }
        }
        if max_re == 0.0 {
            max_im
        } else {
            max_im / max_re
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        &self.comps[c]
    }

    pub(crate) fn component_mut(&mut self, c: usize) -> &mut [Complex64] {
        &mut self.comps[c]
    }

    pub fn components(&self) -> &[Vec<Complex64>; 3] {
        &self.comps
    }

    pub fn coeff(&self, c: usize, i: usize, j: usize, l: usize) -> Complex64 {
        let n = self.grid.n();
        self.comps[c][(i * n + j) * n + l]
    }

    pub fn check_same_grid(&self, other: &Self) -> Result<(), SpectralError> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(SpectralError::GridMismatch {
                left: self.grid.n(),
                right: other.grid.n(),
            })
        }
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().flatten().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().flatten().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().flatten().fold(0.0, |m, c| m.max(c.norm()))
    }

    /// `max_k |v̂(k) - ŵ(k)|` over all components.
    pub fn max_abs_difference(&self, other: &Self) -> f64 {
        self.comps
            .iter()
            .zip(&other.comps)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).norm()))
            .fold(0.0, f64::max)
    }

    /// Largest deviation from `v̂(-k) = conj(v̂(k))`.
    pub fn hermitian_defect(&self) -> f64 {
        self.comps
            .iter()
            .map(|c| hermitian_defect(&self.grid, c))
            .fold(0.0, f64::max)
    }

    /// `max_k |k·v̂(k)| / max_k |k||v̂(k)|`, zero for the zero field.
    pub fn relative_divergence(&self) -> f64 {
        let g = &self.grid;
        let n = g.n();
        let kd = g.derivative_wavenumbers();
        let kf = g.wavenumbers();
        let mut num: f64 = 0.0;
        let mut den: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    let idx = (i * n + j) * n + l;
                    let (a, b, c) = (self.comps[0][idx], self.comps[1][idx], self.comps[2][idx]);
                    let div = a * kd[i] + b * kd[j] + c * kd[l];
                    num = num.max(div.norm());
                    let kmag = (kf[i] * kf[i] + kf[j] * kf[j] + kf[l] * kf[l]).sqrt();
                    let amp = (a.norm_sqr() + b.norm_sqr() + c.norm_sqr()).sqrt();
                    den = den.max(kmag * amp);
                }
            }
        }
        if den == 0.0 {
            0.0
        } else {
            num / den
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        let comps = self.comps.clone().map(|c| c.into_iter().map(|z| z * s).collect());
        Self { grid: self.grid.clone(), comps }
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &Self) {
        debug_assert!(self.grid.same_as(&other.grid));
        for (a, b) in self.comps.iter_mut().zip(&other.comps) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y * s;
            }
        }
    }

    /// Multiplies every mode by a real symbol `f(i, j, l)`.
    pub(crate) fn map_symbol(&self, f: impl Fn(usize, usize, usize) -> f64) -> Self {
        let n = self.grid.n();
        let mut out = self.clone();
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    let idx = (i * n + j) * n + l;
                    let s = f(i, j, l);
                    for c in 0..3 {
                        out.comps[c][idx] *= s;
                    }
                }
            }
        }
        out
    }
}

impl Add for &SpectralVectorField {
    type Output = SpectralVectorField;

    fn add(self, rhs: &SpectralVectorField) -> SpectralVectorField {
        let mut out = self.clone();
        out.axpy(1.0, rhs);
        out
    }
}

impl Sub for &SpectralVectorField {
    type Output = SpectralVectorField;

    fn sub(self, rhs: &SpectralVectorField) -> SpectralVectorField {
        let mut out = self.clone();
        out.axpy(-1.0, rhs);
        out
    }
}

impl Neg for &SpectralVectorField {
    type Output = SpectralVectorField;

    fn neg(self) -> SpectralVectorField {
        self.scaled(-1.0)
    }
}

/// Averages each conjugate pair so that `c(-k) = conj(c(k))` holds exactly.
pub(crate) fn enforce_hermitian(grid: &Grid, coeffs: &mut [Complex64]) {
    let n = grid.n();
    for i in 0..n {
        let ci = grid.conjugate_index(i);
        for j in 0..n {
            let cj = grid.conjugate_index(j);
            for l in 0..n {
                let cl = grid.conjugate_index(l);
                let a = (i * n + j) * n + l;
                let b = (ci * n + cj) * n + cl;
                if a < b {
                    let avg = (coeffs[a] + coeffs[b].conj()) * 0.5;
                    coeffs[a] = avg;
                    coeffs[b] = avg.conj();
                } else if a == b {
                    coeffs[a].im = 0.0;
                }
            }
        }
    }
}

pub(crate) fn hermitian_defect(grid: &Grid, coeffs: &[Complex64]) -> f64 {
    let n = grid.n();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                let a = (i * n + j) * n + l;
                let b = (grid.conjugate_index(i) * n + grid.conjugate_index(j)) * n
                    + grid.conjugate_index(l);
                worst = worst.max((coeffs[a] - coeffs[b].conj()).norm());
            }
        }
    }
    worst
}
