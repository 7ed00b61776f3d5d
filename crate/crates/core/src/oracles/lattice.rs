//! Discrete-time coherent-state path integral with every intermediate label
//! integrated out exactly.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::kernel::{gaussian_glue_exponent, KernelValue, OscillatorModel, PropagatorQuery};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LatticeScheme {
    /// First-order normal-ordered matrix elements of `e^{-iεH}` between
    /// neighbouring labels, drive sampled at the left end of each slice.
    #[default]
    NormalOrderedFirstOrder,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LatticeConfig {
    pub n_slices: usize,
    pub scheme: LatticeScheme,
}

impl LatticeConfig {
    pub fn new(n_slices: usize) -> Result<Self> {
        if n_slices == 0 {
            return Err(Error::InvalidArgument("lattice needs at least one slice".into()));
        }
        Ok(Self {
            n_slices,
            scheme: LatticeScheme::NormalOrderedFirstOrder,
        })
    }
}

/// N-slice kernel with endpoints fixed at `A` and `B`. Slice `k` contributes
///
/// ```text
/// -½|L_{k+1}|² - ½|L_k|² + L*_{k+1} L_k (1 - iεω) - iε[f(t_k) L_k + f*(t_k) L*_{k+1}]
/// ```
///
/// After integrating out `L_1 … L_k` the exponent is `c + u L*_{k+1}` plus the
/// untouched `-½|L_{k+1}|²`, so the recursion keeps only the pair `(u, c)`.
pub fn lattice_kernel(q: &PropagatorQuery, model: &OscillatorModel, cfg: &LatticeConfig) -> Result<KernelValue> {
    if cfg.n_slices == 0 {
        return Err(Error::InvalidArgument("lattice needs at least one slice".into()));
    }
    model.drive().check_covers(q.tau())?;
    let n = cfg.n_slices;
    let eps = q.tau() / n as f64;
    let i = C64::new(0.0, 1.0);
    let hop = C64::new(1.0, -eps * model.omega());
    let (a, b) = (q.a.value(), q.b.value());
    let drive = model.drive();

    // slice 0
    let f0 = drive.value_at(0.0);
    let mut c = -0.5 * a.norm_sqr() - i * eps * f0 * a;
    let mut u = hop * a - i * eps * f0.conj();
    for k in 1..n {
        let f = drive.value_at(k as f64 * eps);
        // ∫(d²L_k/π) exp(-|L_k|² + u L_k* + v L_k), v = (1 - iεω) L*_{k+1} - iε f_k.
        // Only the constant part of v contributes to c here; the L*_{k+1}
        // part turns into the next u.
        c += gaussian_glue_exponent(u, -i * eps * f);
        u = hop * u - i * eps * f.conj();
    }
    Ok(KernelValue::from_log(c + u * b.conj() - 0.5 * b.norm_sqr()))
}
