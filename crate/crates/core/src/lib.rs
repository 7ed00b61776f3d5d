//! Coherent-state propagator of the driven harmonic oscillator,
//! `H = ω a†a + f(t) a + f*(t) a†` (ħ = 1).
//!
//! The propagator is built by expanding the coherent-state path integral
//! about freely chosen extreme paths ([`extreme_path`]), and checked
//! against its closed form ([`kernel`]) and three independent oracles
//! ([`oracles`]): truncated Fock-space evolution, an exact discrete-time
//! lattice, and the Schrödinger equation in the coherent-state basis.

pub mod drive;
pub mod error;
pub mod extreme_path;
pub mod kernel;
pub mod numerics;
pub mod oracles;

pub use drive::{compute_g_h, Drive, DriveIntegrals, IntegralMethod, TabulatedDrive, DEFAULT_TOL};
pub use error::{Error, Result};
pub use extreme_path::{
    assemble_prop2, extreme_action, path_independence_report, solve_extreme_paths, ActionMethod, ActionValue,
    ExtremePath, ExtremePathSpec, PathIndependenceReport, Prop2Options,
};
pub use kernel::{
    closed_form_propagator, coherent_overlap, compose_kernels, gaussian_glue, ho_kernel, unitarity_defect,
    ClosedFormKernel, CoherentLabel, KernelValue, OscillatorModel, PropagatorQuery,
};

pub use num_complex::Complex64 as C64;
