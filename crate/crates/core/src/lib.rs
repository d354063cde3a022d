//! Pseudo-spectral solver for the velocity-vorticity-Voigt MHD system and
//! the baseline MHD equations on the periodic unit cube, with diagnostics
//! for the energy balance, regularization gaps and blow-up indicator.

pub mod checks;
pub mod cli;
pub mod diagnostics;
pub mod dynamics;
pub mod experiments;
pub mod io;
pub mod spectral;
pub mod timestepper;
