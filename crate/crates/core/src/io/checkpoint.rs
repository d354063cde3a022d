//! Binary state checkpoints.
//!
//! Layout, little-endian throughout:
//!
//! ```text
//! b"VVV1"  u32 n  f64 nu  f64 eta  f64 alpha  f64 t  u8 system (0 = MHD, 1 = VVV-MHD)
//! then for each field (U, B or u, w, b), each component x, y, z, each mode in
//! lattice order: f64 re, f64 im
//! ```

use std::fs;
use std::path::Path;

use num_complex::Complex64;

use super::IoError;
use crate::dynamics::{MhdState, PhysParams, SystemState, VvvState};
use crate::spectral::{Grid, SpectralVectorField};

pub const MAGIC: &[u8; 4] = b"VVV1";
pub const HEADER_LEN: usize = 4 + 4 + 8 * 4 + 1;

/// Relative Hermitian defect tolerated on restore.
const HERMITIAN_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CheckpointHeader {
    pub n: usize,
    pub params: PhysParams,
    pub t: f64,
    pub tag: u8,
}

impl CheckpointHeader {
    pub fn field_count(&self) -> usize {
        match self.tag {
            0 => 2,
            _ => 3,
        }
    }

    pub fn system_name(&self) -> &'static str {
        match self.tag {
            0 => "mhd",
            _ => "vvv_mhd",
        }
    }

    pub fn payload_len(&self) -> usize {
        self.field_count() * 3 * self.n.pow(3) * 16
    }
}

pub fn encode(state: &SystemState, params: &PhysParams) -> Vec<u8> {
    let n = state.grid().n();
    let fields = state.fields();
    let mut out = Vec::with_capacity(HEADER_LEN + fields.len() * 3 * n * n * n * 16);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(n as u32).to_le_bytes());
    for v in [params.nu, params.eta, params.alpha, state.t()] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.push(match state {
        SystemState::Mhd(_) => 0,
        SystemState::VvvMhd(_) => 1,
    });
    for field in fields {
        for c in 0..3 {
            for z in field.component(c) {
                out.extend_from_slice(&z.re.to_le_bytes());
                out.extend_from_slice(&z.im.to_le_bytes());
            }
        }
    }
    out
}

fn f64_at(bytes: &[u8], offset: usize) -> f64 {
    f64::from_le_bytes(bytes[offset..offset + 8].try_into().expect("8 bytes"))
}

pub fn decode_header(bytes: &[u8]) -> Result<CheckpointHeader, IoError> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(IoError::BadMagic);
    }
    if bytes.len() < HEADER_LEN {
        return Err(IoError::Truncated {
            expected: HEADER_LEN,
            found: bytes.len(),
        });
    }
    let n = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
    let params = PhysParams {
        nu: f64_at(bytes, 8),
        eta: f64_at(bytes, 16),
        alpha: f64_at(bytes, 24),
    };
    let t = f64_at(bytes, 32);
    let tag = bytes[40];
    if tag > 1 {
        return Err(IoError::Invalid(format!("unknown system tag {tag}")));
    }
    Ok(CheckpointHeader { n, params, t, tag })
}

/// Parses and validates a checkpoint: header invariants, payload length,
/// Hermitian symmetry and solenoidality.
pub fn decode(bytes: &[u8]) -> Result<(SystemState, PhysParams), IoError> {
    let header = decode_header(bytes)?;
    let grid = Grid::new(header.n).map_err(|e| IoError::Invalid(e.to_string()))?;
    header.params.validate().map_err(|e| IoError::Invalid(e.to_string()))?;
    if header.tag == 0 && header.params.alpha != 0.0 {
        return Err(IoError::Invalid(format!(
            "MHD checkpoint carries alpha = {}",
            header.params.alpha
        )));
    }
    if !header.t.is_finite() {
        return Err(IoError::Invalid(format!("non-finite time {}", header.t)));
    }
    let expected = HEADER_LEN + header.payload_len();
    if bytes.len() < expected {
        return Err(IoError::Truncated {
            expected,
            found: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(IoError::Invalid(format!(
            "{} trailing bytes after payload",
            bytes.len() - expected
        )));
    }
    let points = grid.points();
    let mut offset = HEADER_LEN;
    let mut fields = Vec::with_capacity(header.field_count());
    for _ in 0..header.field_count() {
        let comps = [0, 1, 2].map(|_| {
            let comp: Vec<Complex64> = (0..points)
                .map(|k| {
                    let at = offset + 16 * k;
                    Complex64::new(f64_at(bytes, at), f64_at(bytes, at + 8))
                })
                .collect();
            offset += 16 * points;
            comp
        });
        if comps.iter().any(|c| c[0] != Complex64::default()) {
            return Err(IoError::Invalid("field has a nonzero mean mode".into()));
        }
        let field = SpectralVectorField::from_raw(&grid, comps);
        if !field.is_finite() {
            return Err(IoError::Invalid("non-finite coefficients".into()));
        }
        let scale = field.max_abs();
        if field.hermitian_defect() > HERMITIAN_TOLERANCE * scale.max(f64::MIN_POSITIVE) {
            return Err(IoError::Invalid("coefficients are not Hermitian-symmetric".into()));
        }
        fields.push(field);
    }
    let state = match header.tag {
        0 => {
            let magnetic = fields.pop().expect("two fields");
            let velocity = fields.pop().expect("two fields");
            SystemState::Mhd(MhdState {
                velocity,
                magnetic,
                t: header.t,
            })
        }
        _ => {
            let magnetic = fields.pop().expect("three fields");
            let vorticity = fields.pop().expect("three fields");
            let velocity = fields.pop().expect("three fields");
            SystemState::VvvMhd(VvvState {
                velocity,
                vorticity,
                magnetic,
                t: header.t,
            })
        }
    };
    state.validate().map_err(|e| IoError::Invalid(e.to_string()))?;
    Ok((state, header.params))
}

pub fn write_checkpoint(state: &SystemState, params: &PhysParams, path: &Path) -> Result<(), IoError> {
    fs::write(path, encode(state, params)).map_err(|e| IoError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn read(path: &Path) -> Result<Vec<u8>, IoError> {
    fs::read(path).map_err(|e| IoError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn read_checkpoint(path: &Path) -> Result<(SystemState, PhysParams), IoError> {
    decode(&read(path)?)
}

pub fn read_header(path: &Path) -> Result<CheckpointHeader, IoError> {
    decode_header(&read(path)?)
}
