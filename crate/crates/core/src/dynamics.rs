//! Right-hand sides of the incompressible MHD system and of its
//! Voigt-regularized velocity-vorticity reformulation (VVV-MHD).
//!
//! Pressure never appears: every momentum-type tendency is Leray-projected,
//! which removes `∇p` (or `∇Π` in rotational form).

use std::fmt;

use thiserror::Error;

use crate::spectral::ops::{
    accumulate_advection, accumulate_cross, curl_from_gradient, products_to_spectral, sample_with_gradients,
};
use crate::spectral::{
    curl, laplacian, leray_project, voigt_invert, Grid, PhysicalVectorField, SpectralError, SpectralVectorField,
};

/// Inputs whose relative divergence exceeds this are rejected.
pub const SOLENOIDAL_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("invalid physical parameter `{name}`: {rule} (got {value})")]
    InvalidParameter {
        name: &'static str,
        rule: &'static str,
        value: f64,
    },
    #[error("field `{field}` is not solenoidal (relative divergence {residual:.3e})")]
    NotSolenoidal { field: &'static str, residual: f64 },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Viscosity `ν`, resistivity `η` and Voigt length `α`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysParams {
    pub nu: f64,
    pub eta: f64,
    pub alpha: f64,
}

impl PhysParams {
    pub fn new(nu: f64, eta: f64, alpha: f64) -> Result<Self, DynamicsError> {
        let params = Self { nu, eta, alpha };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.nu.is_finite() && self.nu > 0.0) {
            return Err(DynamicsError::InvalidParameter {
                name: "nu",
                rule: "viscosity must be finite and positive",
                value: self.nu,
            });
        }
        if !(self.eta.is_finite() && self.eta > 0.0) {
            return Err(DynamicsError::InvalidParameter {
                name: "eta",
                rule: "resistivity must be finite and positive",
                value: self.eta,
            });
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(DynamicsError::InvalidParameter {
                name: "alpha",
                rule: "Voigt length must be finite and non-negative",
                value: self.alpha,
            });
        }
        Ok(())
    }

    pub fn with_alpha(self, alpha: f64) -> Self {
        Self { alpha, ..self }
    }
}

/// Which algebraic form of the MHD momentum nonlinearity to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum MhdForm {
    /// `-(U·∇)U + (B·∇)B`
    #[default]
    Convective,
    /// `-Ω×U + J×B`
    Rotational,
}

impl fmt::Display for MhdForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MhdForm::Convective => "convective",
            MhdForm::Rotational => "rotational",
        })
    }
}

/// Velocity `U` and magnetic field `B` of the MHD system at time `t`.
#[derive(Clone, Debug)]
pub struct MhdState {
    pub velocity: SpectralVectorField,
    pub magnetic: SpectralVectorField,
    pub t: f64,
}

/// Velocity `u`, reformulated vorticity `w` and magnetic field `b` of the
/// VVV-MHD system at time `t`. `w` is an independent unknown, not `∇×u`.
#[derive(Clone, Debug)]
pub struct VvvState {
    pub velocity: SpectralVectorField,
    pub vorticity: SpectralVectorField,
    pub magnetic: SpectralVectorField,
    pub t: f64,
}

impl MhdState {
    pub fn zeros(grid: &std::sync::Arc<Grid>) -> Self {
        Self {
            velocity: SpectralVectorField::zeros(grid),
            magnetic: SpectralVectorField::zeros(grid),
            t: 0.0,
        }
    }

    /// `Ω = ∇×U`
    pub fn vorticity(&self) -> SpectralVectorField {
        curl(&self.velocity)
    }

    /// `J = ∇×B`
    pub fn current(&self) -> SpectralVectorField {
        curl(&self.magnetic)
    }
}

impl VvvState {
    pub fn zeros(grid: &std::sync::Arc<Grid>) -> Self {
        Self {
            velocity: SpectralVectorField::zeros(grid),
            vorticity: SpectralVectorField::zeros(grid),
            magnetic: SpectralVectorField::zeros(grid),
            t: 0.0,
        }
    }

    /// `j = ∇×b`
    pub fn current(&self) -> SpectralVectorField {
        curl(&self.magnetic)
    }
}

/// Which evolution system a state belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RhsKind {
    Mhd(MhdForm),
    VvvMhd,
}

/// State of either system.
#[derive(Clone, Debug)]
pub enum SystemState {
    Mhd(MhdState),
    VvvMhd(VvvState),
}

impl SystemState {
    pub fn t(&self) -> f64 {
        match self {
            SystemState::Mhd(s) => s.t,
            SystemState::VvvMhd(s) => s.t,
        }
    }

    pub fn grid(&self) -> &std::sync::Arc<Grid> {
        self.velocity().grid()
    }

    pub fn velocity(&self) -> &SpectralVectorField {
        match self {
            SystemState::Mhd(s) => &s.velocity,
            SystemState::VvvMhd(s) => &s.velocity,
        }
    }

    pub fn magnetic(&self) -> &SpectralVectorField {
        match self {
            SystemState::Mhd(s) => &s.magnetic,
            SystemState::VvvMhd(s) => &s.magnetic,
        }
    }

    /// The evolved fields in storage order: `(U, B)` or `(u, w, b)`.
    pub fn fields(&self) -> Vec<&SpectralVectorField> {
        match self {
            SystemState::Mhd(s) => vec![&s.velocity, &s.magnetic],
            SystemState::VvvMhd(s) => vec![&s.velocity, &s.vorticity, &s.magnetic],
        }
    }

    pub fn field_names(&self) -> &'static [&'static str] {
        match self {
            SystemState::Mhd(_) => &["U", "B"],
            SystemState::VvvMhd(_) => &["u", "w", "b"],
        }
    }

    /// Rebuilds a state of the same system from fields in storage order.
    pub fn with_fields(&self, mut fields: Vec<SpectralVectorField>, t: f64) -> Self {
        match self {
            SystemState::Mhd(_) => {
                let magnetic = fields.pop().expect("two fields");
                let velocity = fields.pop().expect("two fields");
                SystemState::Mhd(MhdState { velocity, magnetic, t })
            }
            SystemState::VvvMhd(_) => {
                let magnetic = fields.pop().expect("three fields");
                let vorticity = fields.pop().expect("three fields");
                let velocity = fields.pop().expect("three fields");
                SystemState::VvvMhd(VvvState {
                    velocity,
                    vorticity,
                    magnetic,
                    t,
                })
            }
        }
    }

    pub fn matches(&self, kind: RhsKind) -> bool {
        matches!(
            (self, kind),
            (SystemState::Mhd(_), RhsKind::Mhd(_)) | (SystemState::VvvMhd(_), RhsKind::VvvMhd)
        )
    }

    pub fn is_finite(&self) -> bool {
        self.fields().iter().all(|f| f.is_finite())
    }

    /// Rejects states whose fields sit on different grids or are not
    /// solenoidal.
    pub fn validate(&self) -> Result<(), DynamicsError> {
        let fields = self.fields();
        for f in &fields[1..] {
            fields[0].check_same_grid(f)?;
        }
        for (f, name) in fields.iter().zip(self.field_names()) {
            check_solenoidal(f, name)?;
        }
        Ok(())
    }
}

fn check_solenoidal(v: &SpectralVectorField, field: &'static str) -> Result<(), DynamicsError> {
    let residual = v.relative_divergence();
    if residual > SOLENOIDAL_TOLERANCE || residual.is_nan() {
        return Err(DynamicsError::NotSolenoidal { field, residual });
    }
    Ok(())
}

/// Diagonal decay rate `λ(|k|²)` of the linear part of each evolved field,
/// so that the linear tendency of mode `k` is `λ v̂(k)`.
pub fn linear_rates(kind: RhsKind, params: &PhysParams) -> Vec<Box<dyn Fn(f64) -> f64 + Send + Sync>> {
    let (nu, eta, a2) = (params.nu, params.eta, params.alpha * params.alpha);
    match kind {
        RhsKind::Mhd(_) => vec![Box::new(move |k2| -nu * k2), Box::new(move |k2| -eta * k2)],
        RhsKind::VvvMhd => vec![
            Box::new(move |k2| -nu * k2 / (1.0 + a2 * k2)),
            Box::new(move |k2| -nu * k2),
            Box::new(move |k2| -eta * k2),
        ],
    }
}

/// Nonlinear tendencies (everything except the diffusive symbol), projected
/// and dealiased, in storage order. Inputs are assumed dealiased.
pub(crate) fn nonlinear_terms(
    fields: &[&SpectralVectorField],
    kind: RhsKind,
    params: &PhysParams,
) -> Result<Vec<SpectralVectorField>, DynamicsError> {
    match kind {
        RhsKind::Mhd(form) => Ok(mhd_nonlinear(fields[0], fields[1], form)),
        RhsKind::VvvMhd => vvv_nonlinear(fields[0], fields[1], fields[2], params.alpha),
    }
}

fn mhd_nonlinear(velocity: &SpectralVectorField, magnetic: &SpectralVectorField, form: MhdForm) -> Vec<SpectralVectorField> {
    let grid = velocity.grid();
    let mut sampled = sample_with_gradients(&[velocity, magnetic]).into_iter();
    let (u, grad_u) = sampled.next().expect("velocity");
    let (b, grad_b) = sampled.next().expect("magnetic");

    let mut momentum = PhysicalVectorField::zeros(grid);
    match form {
        MhdForm::Convective => {
            accumulate_advection(&mut momentum, -1.0, &u, &grad_u);
            accumulate_advection(&mut momentum, 1.0, &b, &grad_b);
        }
        MhdForm::Rotational => {
            let omega = curl_from_gradient(grid, &grad_u);
            let current = curl_from_gradient(grid, &grad_b);
            accumulate_cross(&mut momentum, -1.0, &omega, &u);
            accumulate_cross(&mut momentum, 1.0, &current, &b);
        }
    }
    let mut induction = PhysicalVectorField::zeros(grid);
    accumulate_advection(&mut induction, -1.0, &u, &grad_b);
    accumulate_advection(&mut induction, 1.0, &b, &grad_u);

    products_to_spectral(vec![momentum, induction])
        .iter()
        .map(leray_project)
        .collect()
}

fn vvv_nonlinear(
    velocity: &SpectralVectorField,
    vorticity: &SpectralVectorField,
    magnetic: &SpectralVectorField,
    alpha: f64,
) -> Result<Vec<SpectralVectorField>, DynamicsError> {
    let grid = velocity.grid();
    let mut sampled = sample_with_gradients(&[velocity, vorticity, magnetic]).into_iter();
    let (u, grad_u) = sampled.next().expect("velocity");
    let (w, grad_w) = sampled.next().expect("vorticity");
    let (b, grad_b) = sampled.next().expect("magnetic");
    let j = curl_from_gradient(grid, &grad_b);

    // -w×u + (b·∇)b
    let mut momentum = PhysicalVectorField::zeros(grid);
    accumulate_cross(&mut momentum, -1.0, &w, &u);
    accumulate_advection(&mut momentum, 1.0, &b, &grad_b);
    // -(u·∇)w + (w·∇)u
    let mut stretching = PhysicalVectorField::zeros(grid);
    accumulate_advection(&mut stretching, -1.0, &u, &grad_w);
    accumulate_advection(&mut stretching, 1.0, &w, &grad_u);
    // j×b, curled in spectral space
    let mut lorentz = PhysicalVectorField::zeros(grid);
    accumulate_cross(&mut lorentz, 1.0, &j, &b);
    // -(u·∇)b + (b·∇)u
    let mut induction = PhysicalVectorField::zeros(grid);
    accumulate_advection(&mut induction, -1.0, &u, &grad_b);
    accumulate_advection(&mut induction, 1.0, &b, &grad_u);

    let mut spectra = products_to_spectral(vec![momentum, stretching, lorentz, induction]).into_iter();
    let mut next = || spectra.next().expect("four products");
    let (momentum, stretching, lorentz, induction) = (next(), next(), next(), next());

    let du = voigt_invert(&leray_project(&momentum), alpha)?;
    let dw = &leray_project(&stretching) + &curl(&lorentz);
    let db = leray_project(&induction);
    Ok(vec![du, dw, db])
}

fn dealiased_fields(fields: &[&SpectralVectorField]) -> Vec<SpectralVectorField> {
    fields.iter().map(|f| crate::spectral::dealias(f)).collect()
}

/// MHD tendencies `(dU/dt, dB/dt)`:
///
/// ```text
/// dU/dt = P[νΔU - (U·∇)U + (B·∇)B]   (convective)
///       = P[νΔU - Ω×U + J×B]          (rotational)
/// dB/dt = P[ηΔB - (U·∇)B + (B·∇)U]
/// ```
pub fn rhs_mhd(
    state: &MhdState,
    params: &PhysParams,
    form: MhdForm,
) -> Result<(SpectralVectorField, SpectralVectorField), DynamicsError> {
    params.validate()?;
    SystemState::Mhd(state.clone()).validate()?;
    let fields = dealiased_fields(&[&state.velocity, &state.magnetic]);
    let mut nl = mhd_nonlinear(&fields[0], &fields[1], form).into_iter();
    let du = &laplacian(&fields[0]).scaled(params.nu) + &nl.next().expect("velocity");
    let db = &laplacian(&fields[1]).scaled(params.eta) + &nl.next().expect("magnetic");
    Ok((leray_project(&du), leray_project(&db)))
}

/// VVV-MHD tendencies `(du/dt, dw/dt, db/dt)`:
///
/// ```text
/// du/dt = (I - α²Δ)⁻¹ P[νΔu - w×u + (b·∇)b]
/// dw/dt = P[νΔw - (u·∇)w + (w·∇)u] + ∇×(j×b)
/// db/dt = P[ηΔb - (u·∇)b + (b·∇)u]
/// ```
pub fn rhs_vvv_mhd(
    state: &VvvState,
    params: &PhysParams,
) -> Result<(SpectralVectorField, SpectralVectorField, SpectralVectorField), DynamicsError> {
    params.validate()?;
    SystemState::VvvMhd(state.clone()).validate()?;
    let fields = dealiased_fields(&[&state.velocity, &state.vorticity, &state.magnetic]);
    let mut nl = vvv_nonlinear(&fields[0], &fields[1], &fields[2], params.alpha)?.into_iter();
    let viscous_u = voigt_invert(&laplacian(&fields[0]).scaled(params.nu), params.alpha)?;
    let du = &viscous_u + &nl.next().expect("velocity");
    let dw = &laplacian(&fields[1]).scaled(params.nu) + &nl.next().expect("vorticity");
    let db = &laplacian(&fields[2]).scaled(params.eta) + &nl.next().expect("magnetic");
    Ok((leray_project(&du), leray_project(&dw), leray_project(&db)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn params_reject_nonpositive_diffusion() {
        assert!(PhysParams::new(0.01, 0.01, 0.0).is_ok());
        assert!(matches!(
            PhysParams::new(-1.0, 0.01, 0.1),
            Err(DynamicsError::InvalidParameter { name: "nu", .. })
        ));
        assert!(matches!(
            PhysParams::new(0.01, 0.0, 0.1),
            Err(DynamicsError::InvalidParameter { name: "eta", .. })
        ));
        assert!(matches!(
            PhysParams::new(0.01, 0.01, -0.1),
            Err(DynamicsError::InvalidParameter { name: "alpha", .. })
        ));
    }

    #[test]
    fn zero_state_has_zero_tendency() {
        let grid = Grid::new(8).unwrap();
        let p = PhysParams::new(0.01, 0.02, 0.1).unwrap();
        let (du, db) = rhs_mhd(&MhdState::zeros(&grid), &p, MhdForm::Convective).unwrap();
        assert!(du.is_zero() && db.is_zero());
        let (du, dw, db) = rhs_vvv_mhd(&VvvState::zeros(&grid), &p).unwrap();
        assert!(du.is_zero() && dw.is_zero() && db.is_zero());
    }

    #[test]
    fn shear_mode_decays_viscously() {
        let grid = Grid::new(16).unwrap();
        let p = PhysParams::new(0.01, 0.01, 0.0).unwrap();
        let u = SpectralVectorField::from_fn(&grid, |x, _, _| [0.0, (2.0 * PI * x).sin(), 0.0]);
        let state = MhdState {
            velocity: u.clone(),
            magnetic: SpectralVectorField::zeros(&grid),
            t: 0.0,
        };
        for form in [MhdForm::Convective, MhdForm::Rotational] {
            let (du, db) = rhs_mhd(&state, &p, form).unwrap();
            let expected = u.scaled(-4.0 * PI * PI * p.nu);
            assert!(du.max_abs_difference(&expected) < 1e-14);
            assert!(db.max_abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_non_solenoidal_input() {
        let grid = Grid::new(8).unwrap();
        let p = PhysParams::new(0.01, 0.01, 0.0).unwrap();
        let grad = SpectralVectorField::from_fn(&grid, |x, _, _| [(2.0 * PI * x).sin(), 0.0, 0.0]);
        let state = MhdState {
            velocity: grad,
            magnetic: SpectralVectorField::zeros(&grid),
            t: 0.0,
        };
        assert!(matches!(
            rhs_mhd(&state, &p, MhdForm::Convective),
            Err(DynamicsError::NotSolenoidal { field: "U", .. })
        ));
    }
}
