//! Differential operators, projections, and dealiased pseudo-spectral
//! products on [`SpectralVectorField`].

use std::sync::Arc;

use num_complex::Complex64;

use super::{Grid, PhysicalVectorField, SpectralError, SpectralScalarField, SpectralVectorField};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Physical-space velocity gradient `g[i][j] = ∂ⱼvᵢ`.
pub type PhysicalGradient = [[Vec<f64>; 3]; 3];

pub fn curl(v: &SpectralVectorField) -> SpectralVectorField {
    let g = v.grid();
    let n = g.n();
    let k = g.derivative_wavenumbers();
    let len = g.points();
    let mut out = [
        vec![Complex64::default(); len],
        vec![Complex64::default(); len],
        vec![Complex64::default(); len],
    ];
    let (vx, vy, vz) = (v.component(0), v.component(1), v.component(2));
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                let idx = (i * n + j) * n + l;
                out[0][idx] = I * (vz[idx] * k[j] - vy[idx] * k[l]);
                out[1][idx] = I * (vx[idx] * k[l] - vz[idx] * k[i]);
                out[2][idx] = I * (vy[idx] * k[i] - vx[idx] * k[j]);
            }
        }
    }
    SpectralVectorField::from_raw(g, out)
}

pub fn divergence(v: &SpectralVectorField) -> SpectralScalarField {
    let g = v.grid();
    let n = g.n();
    let k = g.derivative_wavenumbers();
    let mut out = vec![Complex64::default(); g.points()];
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                let idx = (i * n + j) * n + l;
                out[idx] =
                    I * (v.component(0)[idx] * k[i] + v.component(1)[idx] * k[j] + v.component(2)[idx] * k[l]);
            }
        }
    }
    SpectralScalarField::from_raw(g, out)
}

/// `∇φ`; the mean of `φ` does not contribute.
pub fn gradient(phi: &SpectralScalarField) -> SpectralVectorField {
    let g = phi.grid();
    let n = g.n();
    let k = g.derivative_wavenumbers();
    let len = g.points();
    let mut out = [
        vec![Complex64::default(); len],
        vec![Complex64::default(); len],
        vec![Complex64::default(); len],
    ];
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                let idx = (i * n + j) * n + l;
                let c = I * phi.coeffs()[idx];
                out[0][idx] = c * k[i];
                out[1][idx] = c * k[j];
                out[2][idx] = c * k[l];
            }
        }
    }
    SpectralVectorField::from_raw(g, out)
}

pub fn laplacian(v: &SpectralVectorField) -> SpectralVectorField {
    let g = v.grid().clone();
    v.map_symbol(|i, j, l| -g.k_squared(i, j, l))
}

/// Leray-Helmholtz projection onto divergence-free, mean-zero fields.
pub fn leray_project(v: &SpectralVectorField) -> SpectralVectorField {
    let g = v.grid();
    let n = g.n();
    let k = g.derivative_wavenumbers();
    let mut out = v.clone();
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                let k2 = k[i] * k[i] + k[j] * k[j] + k[l] * k[l];
                if k2 == 0.0 {
                    continue;
                }
                let idx = (i * n + j) * n + l;
                let kv = (out.component(0)[idx] * k[i]
                    + out.component(1)[idx] * k[j]
                    + out.component(2)[idx] * k[l])
                    / k2;
                out.component_mut(0)[idx] -= kv * k[i];
                out.component_mut(1)[idx] -= kv * k[j];
                out.component_mut(2)[idx] -= kv * k[l];
            }
        }
    }
    out
}

/// Solves `(I - α²Δ) x = v` mode by mode.
pub fn voigt_invert(v: &SpectralVectorField, alpha: f64) -> Result<SpectralVectorField, SpectralError> {
    check_alpha(alpha)?;
    if alpha == 0.0 {
        return Ok(v.clone());
    }
    let g = v.grid().clone();
    let a2 = alpha * alpha;
    Ok(v.map_symbol(|i, j, l| 1.0 / (1.0 + a2 * g.k_squared(i, j, l))))
}

/// Applies the Voigt operator `I - α²Δ`.
pub fn voigt_apply(v: &SpectralVectorField, alpha: f64) -> Result<SpectralVectorField, SpectralError> {
    check_alpha(alpha)?;
    let g = v.grid().clone();
    let a2 = alpha * alpha;
    Ok(v.map_symbol(|i, j, l| 1.0 + a2 * g.k_squared(i, j, l)))
}

fn check_alpha(alpha: f64) -> Result<(), SpectralError> {
    if alpha.is_finite() && alpha >= 0.0 {
        Ok(())
    } else {
        Err(SpectralError::NegativeAlpha(alpha))
    }
}

/// Zeroes every mode with some `|m| > dealias_fraction · n/2`.
pub fn dealias(v: &SpectralVectorField) -> SpectralVectorField {
    let g = v.grid().clone();
    let keep = g.retained_mask();
    v.map_symbol(|i, j, l| if keep[i] && keep[j] && keep[l] { 1.0 } else { 0.0 })
}

/// `∂ⱼvᵢ` sampled on the grid.
pub fn gradient_physical(v: &SpectralVectorField) -> PhysicalGradient {
    let (_, grad) = sample_with_gradients(&[v]).pop().expect("one field");
    grad
}

/// Samples each field and its gradient in a single batch of inverse
/// transforms (two real fields per complex FFT).
pub fn sample_with_gradients(
    fields: &[&SpectralVectorField],
) -> Vec<(PhysicalVectorField, PhysicalGradient)> {
    let Some(first) = fields.first() else {
        return Vec::new();
    };
    let g = first.grid();
    let n = g.n();
    let k = g.derivative_wavenumbers();
    let mut spectra: Vec<Vec<Complex64>> = Vec::with_capacity(12 * fields.len());
    for v in fields {
        debug_assert!(v.grid().same_as(g));
        for c in 0..3 {
            spectra.push(v.component(c).to_vec());
        }
        for c in 0..3 {
            let src = v.component(c);
            let mut d = [0, 1, 2].map(|_| Vec::with_capacity(g.points()));
            for i in 0..n {
                for j in 0..n {
                    let row = (i * n + j) * n;
                    for l in 0..n {
                        let iz = I * src[row + l];
                        d[0].push(iz * k[i]);
                        d[1].push(iz * k[j]);
                        d[2].push(iz * k[l]);
                    }
                }
            }
            spectra.extend(d);
        }
    }
    let refs: Vec<&[Complex64]> = spectra.iter().map(|v| v.as_slice()).collect();
    let mut samples = g.fft.inverse_real_batch(&refs).into_iter();
    let mut out = Vec::with_capacity(fields.len());
    for _ in fields {
        let mut take = || samples.next().expect("sample count");
        let values = [take(), take(), take()];
        let grad = [0, 1, 2].map(|_| [take(), take(), take()]);
        out.push((
            PhysicalVectorField::from_components(g, values).expect("grid-sized components"),
            grad,
        ));
    }
    out
}

/// Samples several fields in one batch of inverse transforms.
pub fn sample_many(fields: &[&SpectralVectorField]) -> Vec<PhysicalVectorField> {
    let Some(first) = fields.first() else {
        return Vec::new();
    };
    let g = first.grid();
    let refs: Vec<&[Complex64]> = fields
        .iter()
        .flat_map(|v| (0..3).map(move |c| v.component(c)))
        .collect();
    let mut samples = g.fft.inverse_real_batch(&refs).into_iter();
    fields
        .iter()
        .map(|_| {
            let comps = [0, 1, 2].map(|_| samples.next().expect("sample count"));
            PhysicalVectorField::from_components(g, comps).expect("grid-sized components")
        })
        .collect()
}

/// Pointwise `(u·∇)v` from `u` and the gradient of `v`, accumulated into `out`
/// with weight `s`.
pub fn accumulate_advection(
    out: &mut PhysicalVectorField,
    s: f64,
    u: &PhysicalVectorField,
    grad_v: &PhysicalGradient,
) {
    let (ux, uy, uz) = (u.component(0), u.component(1), u.component(2));
    for c in 0..3 {
        let g = &grad_v[c];
        let dst = out.component_mut(c);
        for idx in 0..dst.len() {
            dst[idx] += s * (ux[idx] * g[0][idx] + uy[idx] * g[1][idx] + uz[idx] * g[2][idx]);
        }
    }
}

/// Pointwise `a × b` accumulated into `out` with weight `s`.
pub fn accumulate_cross(out: &mut PhysicalVectorField, s: f64, a: &PhysicalVectorField, b: &PhysicalVectorField) {
    let (ax, ay, az) = (a.component(0), a.component(1), a.component(2));
    let (bx, by, bz) = (b.component(0), b.component(1), b.component(2));
    let len = ax.len();
    let mut tmp = [vec![0.0; 0], vec![0.0; 0], vec![0.0; 0]];
    for (c, t) in tmp.iter_mut().enumerate() {
        *t = (0..len)
            .map(|idx| match c {
                0 => ay[idx] * bz[idx] - az[idx] * by[idx],
                1 => az[idx] * bx[idx] - ax[idx] * bz[idx],
                _ => ax[idx] * by[idx] - ay[idx] * bx[idx],
            })
            .collect();
    }
    for (c, t) in tmp.iter().enumerate() {
        for (d, v) in out.component_mut(c).iter_mut().zip(t) {
            *d += s * v;
        }
    }
}

/// Pointwise curl from a physical gradient: `(∇×v)ᵢ = εᵢⱼₖ ∂ⱼvₖ`.
pub fn curl_from_gradient(grid: &Arc<Grid>, grad: &PhysicalGradient) -> PhysicalVectorField {
    let len = grid.points();
    let comps = [
        (0..len).map(|i| grad[2][1][i] - grad[1][2][i]).collect(),
        (0..len).map(|i| grad[0][2][i] - grad[2][0][i]).collect(),
        (0..len).map(|i| grad[1][0][i] - grad[0][1][i]).collect(),
    ];
    PhysicalVectorField::from_components(grid, comps).expect("grid-sized components")
}

/// Transforms a physical-space product back to spectral space, enforcing
/// Hermitian symmetry and zero mean, then applies the dealiasing mask.
pub fn product_to_spectral(product: PhysicalVectorField) -> SpectralVectorField {
    products_to_spectral(vec![product]).pop().expect("one product")
}

/// Batched [`product_to_spectral`].
pub fn products_to_spectral(products: Vec<PhysicalVectorField>) -> Vec<SpectralVectorField> {
    let Some(first) = products.first() else {
        return Vec::new();
    };
    let grid = first.grid().clone();
    let keep = grid.retained_mask();
    let n = grid.n();
    let refs: Vec<&[f64]> = products
        .iter()
        .flat_map(|p| (0..3).map(move |c| p.component(c)))
        .collect();
    let mut spectra = grid.fft.forward_real_batch(&refs).into_iter().map(|mut data| {
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    if !(keep[i] && keep[j] && keep[l]) {
                        data[(i * n + j) * n + l] = Complex64::default();
                    }
                }
            }
        }
        data
    });
    products
        .iter()
        .map(|_| {
            let comps = [0, 1, 2].map(|_| spectra.next().expect("spectrum count"));
            SpectralVectorField::from_raw(&grid, comps)
        })
        .collect()
}

/// Dealiased pseudo-spectral `(u·∇)v` (not projected).
pub fn advect(u: &SpectralVectorField, v: &SpectralVectorField) -> Result<SpectralVectorField, SpectralError> {
    u.check_same_grid(v)?;
    let (u, v) = (dealias(u), dealias(v));
    let u_phys = u.to_physical();
    let grad_v = gradient_physical(&v);
    let mut out = PhysicalVectorField::zeros(u.grid());
    accumulate_advection(&mut out, 1.0, &u_phys, &grad_v);
    Ok(product_to_spectral(out))
}

/// Dealiased pseudo-spectral `a × b`.
pub fn cross(a: &SpectralVectorField, b: &SpectralVectorField) -> Result<SpectralVectorField, SpectralError> {
    a.check_same_grid(b)?;
    let mut phys = sample_many(&[&dealias(a), &dealias(b)]).into_iter();
    let (a_phys, b_phys) = (phys.next().expect("two fields"), phys.next().expect("two fields"));
    let mut out = PhysicalVectorField::zeros(a.grid());
    accumulate_cross(&mut out, 1.0, &a_phys, &b_phys);
    Ok(product_to_spectral(out))
}

/// Projected bilinear form `B(u, v) = P_σ((u·∇)v)`.
pub fn bilinear_b(u: &SpectralVectorField, v: &SpectralVectorField) -> Result<SpectralVectorField, SpectralError> {
    Ok(leray_project(&dealias(&advect(u, v)?)))
}

/// Sobolev order of a Parseval norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormOrder {
    /// `‖v‖`
    L2,
    /// `‖∇v‖`
    H1,
    /// `‖Δv‖`
    H2,
}

/// Parseval norm, summed in fixed lattice order.
pub fn norm(v: &SpectralVectorField, order: NormOrder) -> f64 {
    let g = v.grid();
    let n = g.n();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                let idx = (i * n + j) * n + l;
                let amp = v.component(0)[idx].norm_sqr()
                    + v.component(1)[idx].norm_sqr()
                    + v.component(2)[idx].norm_sqr();
                let weight = match order {
                    NormOrder::L2 => 1.0,
                    NormOrder::H1 => g.k_squared(i, j, l),
                    NormOrder::H2 => g.k_squared(i, j, l).powi(2),
                };
                acc += weight * amp;
            }
        }
    }
    acc.sqrt()
}

/// `L²` inner product `(a, b) = ∫ a·b dx` via Parseval.
pub fn inner(a: &SpectralVectorField, b: &SpectralVectorField) -> f64 {
    let mut acc = 0.0;
    for c in 0..3 {
        for (x, y) in a.component(c).iter().zip(b.component(c)) {
            acc += x.re * y.re + x.im * y.im;
        }
    }
    acc
}

/// `(∇a, ∇b)` via Parseval.
pub fn inner_h1(a: &SpectralVectorField, b: &SpectralVectorField) -> f64 {
    let g = a.grid();
    let n = g.n();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                let idx = (i * n + j) * n + l;
                let k2 = g.k_squared(i, j, l);
                for c in 0..3 {
                    let (x, y) = (a.component(c)[idx], b.component(c)[idx]);
                    acc += k2 * (x.re * y.re + x.im * y.im);
                }
            }
        }
    }
    acc
}
