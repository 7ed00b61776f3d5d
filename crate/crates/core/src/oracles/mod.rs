//! Independent brute-force checks of the closed-form propagator.

pub mod fock;
pub mod lattice;
pub mod schrodinger;

pub use fock::{coherent_to_fock, default_fock_dim, fock_kernel, fock_propagate, FockOptions, FockVector};
pub use lattice::{lattice_kernel, LatticeConfig, LatticeScheme};
pub use schrodinger::{
    analytic_closure, analytic_derivatives, schrodinger_residual, schrodinger_residual_with, ResidualReport,
};
