//! Cubic 3D complex FFT built from 1D rustfft plans.
//!
//! Arrays are stored row-major with index `(i*n + j)*n + l` for the
//! `(x, y, z)` point or mode `(i, j, l)`. The forward transform carries the
//! `1/n³` normalization so that coefficients are Fourier amplitudes:
//! `f(x) = Σ_k f̂(k) e^{ik·x}`.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

thread_local! {
    // FFT scratch and transpose buffer, reused across calls on each thread.
    static WORKSPACE: RefCell<(Vec<Complex64>, Vec<Complex64>)> = const { RefCell::new((Vec::new(), Vec::new())) };
}

pub(crate) struct Fft3 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Fft3 {
    pub(crate) fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub(crate) fn forward(&self, data: &mut [Complex64]) {
        self.apply(data, &self.forward);
        let scale = 1.0 / (self.n * self.n * self.n) as f64;
        for c in data.iter_mut() {
            *c *= scale;
        }
    }

    pub(crate) fn inverse(&self, data: &mut [Complex64]) {
        self.apply(data, &self.inverse);
    }

    fn apply(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        let n2 = n * n;
        assert_eq!(data.len(), n2 * n, "buffer does not match grid");
        WORKSPACE.with(|ws| {
            let mut ws = ws.borrow_mut();
            let (scratch, buf) = &mut *ws;
            let scratch_len = plan.get_inplace_scratch_len();
            if scratch.len() < scratch_len {
                scratch.resize(scratch_len, Complex64::default());
            }
            if buf.len() < data.len() {
                buf.resize(data.len(), Complex64::default());
            }
            let scratch = &mut scratch[..scratch_len];
            let buf = &mut buf[..data.len()];

            // z: rows are contiguous
            plan.process_with_scratch(data, scratch);

            // y: transpose each x-slab, transform, transpose back
            for slab in data.chunks_exact_mut(n2) {
                let tmp = &mut buf[..n2];
                transpose::transpose(slab, tmp, n, n);
                plan.process_with_scratch(tmp, scratch);
                transpose::transpose(tmp, slab, n, n);
            }

            // x: view as n × n² and transpose
            transpose::transpose(data, buf, n2, n);
            plan.process_with_scratch(buf, scratch);
            transpose::transpose(buf, data, n, n2);
        });
    }

    /// Inverse transforms of Hermitian spectra, two per complex FFT: the real
    /// part of `ifft(â + i·b̂)` is `a` and the imaginary part is `b`.
    pub(crate) fn inverse_real_batch(&self, spectra: &[&[Complex64]]) -> Vec<Vec<f64>> {
        let len = self.n * self.n * self.n;
        let mut out = Vec::with_capacity(spectra.len());
        for pair in spectra.chunks(2) {
            let mut work: Vec<Complex64> = match pair {
                [a, b] => a.iter().zip(b.iter()).map(|(x, y)| x + Complex64::i() * y).collect(),
                [a] => a.to_vec(),
                _ => unreachable!(),
            };
            debug_assert_eq!(work.len(), len);
            self.inverse(&mut work);
            out.push(work.iter().map(|z| z.re).collect());
            if pair.len() == 2 {
                out.push(work.iter().map(|z| z.im).collect());
            }
        }
        out
    }

    /// Forward transforms of real samples, two per complex FFT. Each spectrum is
    /// recovered by averaging conjugate pairs, so the output is exactly
    /// Hermitian.
    pub(crate) fn forward_real_batch(&self, samples: &[&[f64]]) -> Vec<Vec<Complex64>> {
        let n = self.n;
        let mut out = Vec::with_capacity(samples.len());
        for pair in samples.chunks(2) {
            let mut work: Vec<Complex64> = match pair {
                [a, b] => a.iter().zip(b.iter()).map(|(&x, &y)| Complex64::new(x, y)).collect(),
                [a] => a.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
                _ => unreachable!(),
            };
            self.forward(&mut work);
            let mut first = Vec::with_capacity(work.len());
            let mut second = Vec::with_capacity(work.len());
            for i in 0..n {
                let ci = (n - i) % n;
                for j in 0..n {
                    let cj = (n - j) % n;
                    let row = (i * n + j) * n;
                    let mirror = (ci * n + cj) * n;
                    for l in 0..n {
                        let z = work[row + l];
                        let zc = work[mirror + (n - l) % n].conj();
                        first.push((z + zc) * 0.5);
                        // (z - zc) / 2i
                        second.push(Complex64::new((z.im - zc.im) * 0.5, -(z.re - zc.re) * 0.5));
                    }
                }
            }
            out.push(first);
            if pair.len() == 2 {
                out.push(second);
            }
        }
        out
    }
}
