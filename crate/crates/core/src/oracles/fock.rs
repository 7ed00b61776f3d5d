//! Truncated number-basis Schrödinger solver.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::kernel::{CoherentLabel, KernelValue, OscillatorModel, PropagatorQuery};

pub const DEFAULT_DT: f64 = 1e-4;
pub const DEFAULT_TAIL_TOL: f64 = 1e-10;
pub const DEFAULT_NORM_TOL: f64 = 1e-8;

/// Amplitudes on `|0⟩ … |dim-1⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct FockVector {
    amplitudes: Vec<C64>,
    /// Probability outside the truncated space, computed directly from the
    /// tail of the expansion where known (coherent states), else the mass in
    /// the top levels of the retained space.
    pub tail_mass: f64,
}

impl FockVector {
    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `⟨self|other⟩` over the common levels.
    pub fn inner(&self, other: &FockVector) -> C64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(x, y)| x.conj() * y)
            .sum()
    }
}

/// `P(N ≥ dim)` for a Poisson distribution of the given mean, summed term by
/// term so that tails far below machine epsilon are resolved.
fn poisson_tail(mean: f64, dim: usize) -> f64 {
    if mean == 0.0 {
        return 0.0;
    }
    let mut log_term = -mean;
    for n in 1..=dim {
        log_term += mean.ln() - (n as f64).ln();
    }
    let mut term = log_term.exp();
    let mut total = 0.0;
    let mut n = dim;
    loop {
        total += term;
        n += 1;
        term *= mean / n as f64;
        if (n as f64 > mean && term <= 1e-17 * total) || term == 0.0 {
            break;
        }
    }
    total
}

/// `e^{-|a|²/2} Σ aⁿ/√n! |n⟩` truncated to `dim` levels. Fails when the
/// discarded tail mass exceeds `tail_tol`.
pub fn coherent_to_fock(a: CoherentLabel, dim: usize, tail_tol: f64) -> Result<FockVector> {
    if dim == 0 {
        return Err(Error::InvalidArgument("Fock dimension must be >= 1".into()));
    }
    let a = a.value();
    let mut amplitudes = Vec::with_capacity(dim);
    let mut c = C64::new((-0.5 * a.norm_sqr()).exp(), 0.0);
    amplitudes.push(c);
    for n in 1..dim {
        c = c * a / (n as f64).sqrt();
        amplitudes.push(c);
    }
    let tail_mass = poisson_tail(a.norm_sqr(), dim);
    if tail_mass > tail_tol {
        return Err(Error::TruncationSaturated {
            tail: tail_mass,
            tol: tail_tol,
            dim,
        });
    }
    Ok(FockVector { amplitudes, tail_mass })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FockOptions {
    pub dim: usize,
    pub dt: f64,
    pub tail_tol: f64,
    pub norm_tol: f64,
}

impl FockOptions {
    /// `dim = ceil(R² + 10R + 30)` with `R = |A| + ∫₀^τ |f|`, the largest
    /// label modulus the evolving coherent state can reach.
    pub fn for_query(a: CoherentLabel, model: &OscillatorModel, tau: f64) -> Self {
        Self {
            dim: default_fock_dim(a, model, tau),
            dt: DEFAULT_DT,
            tail_tol: DEFAULT_TAIL_TOL,
            norm_tol: DEFAULT_NORM_TOL,
        }
    }
}

pub fn default_fock_dim(a: CoherentLabel, model: &OscillatorModel, tau: f64) -> usize {
    let reach = a.value().norm() + model.drive().abs_integral_bound(tau);
    (reach * reach + 10.0 * reach + 30.0).ceil() as usize
}

/// `(H ψ)ₙ = ω n ψₙ + f √(n+1) ψₙ₊₁ + f* √n ψₙ₋₁`, written as `-i H ψ`.
fn apply_generator(omega: f64, f: C64, sqrt_n: &[f64], psi: &[C64], out: &mut [C64]) {
    let dim = psi.len();
    let minus_i = C64::new(0.0, -1.0);
    let fc = f.conj();
    for n in 0..dim {
        let mut acc = psi[n] * (omega * n as f64);
        if n + 1 < dim {
            acc += f * sqrt_n[n + 1] * psi[n + 1];
        }
        if n > 0 {
            acc += fc * sqrt_n[n] * psi[n - 1];
        }
        out[n] = minus_i * acc;
    }
}

/// Evolves `|a⟩` under `H(t) = ω a†a + f(t) a + f*(t) a†` with classical
/// fixed-step RK4 and returns `ψ(τ)`. Fails on norm drift above
/// `opts.norm_tol` or when more than `opts.tail_tol` of the probability
/// ends up in the top eighth of the retained levels.
pub fn fock_propagate(a: CoherentLabel, model: &OscillatorModel, tau: f64, opts: &FockOptions) -> Result<FockVector> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::InvalidArgument(format!("tau must be finite and >= 0, got {tau}")));
    }
    if opts.dt.is_nan() || opts.dt <= 0.0 {
        return Err(Error::InvalidArgument(format!("dt must be > 0, got {}", opts.dt)));
    }
    model.drive().check_covers(tau)?;
    let start = coherent_to_fock(a, opts.dim, opts.tail_tol)?;
    let norm0 = start.norm();
    let dim = opts.dim;
    let sqrt_n: Vec<f64> = (0..dim).map(|n| (n as f64).sqrt()).collect();
    let omega = model.omega();
    let drive = model.drive();

    let steps = (tau / opts.dt).ceil().max(if tau > 0.0 { 1.0 } else { 0.0 }) as usize;
    let dt = if steps > 0 { tau / steps as f64 } else { 0.0 };
    let zero = C64::new(0.0, 0.0);
    let mut psi = start.amplitudes;
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
        (vec![zero; dim], vec![zero; dim], vec![zero; dim], vec![zero; dim], vec![zero; dim]);
    for step in 0..steps {
        let t = step as f64 * dt;
        let f0 = drive.value_at(t);
        let fm = drive.value_at(t + 0.5 * dt);
        let f1 = drive.value_at(t + dt);
        apply_generator(omega, f0, &sqrt_n, &psi, &mut k1);
        for n in 0..dim {
            tmp[n] = psi[n] + k1[n] * (0.5 * dt);
        }
        apply_generator(omega, fm, &sqrt_n, &tmp, &mut k2);
        for n in 0..dim {
            tmp[n] = psi[n] + k2[n] * (0.5 * dt);
        }
        apply_generator(omega, fm, &sqrt_n, &tmp, &mut k3);
        for n in 0..dim {
            tmp[n] = psi[n] + k3[n] * dt;
        }
        apply_generator(omega, f1, &sqrt_n, &tmp, &mut k4);
        for n in 0..dim {
            psi[n] += (k1[n] + k2[n] * 2.0 + k3[n] * 2.0 + k4[n]) * (dt / 6.0);
        }
    }

    let top = (dim / 8).max(1);
    let tail_mass: f64 = psi[dim - top..].iter().map(|c| c.norm_sqr()).sum();
    if tail_mass > opts.tail_tol {
        return Err(Error::TruncationSaturated {
            tail: tail_mass,
            tol: opts.tail_tol,
            dim,
        });
    }
    let out = FockVector { amplitudes: psi, tail_mass };
    let drift = (out.norm() - norm0).abs();
    if drift > opts.norm_tol {
        return Err(Error::NormDrift {
            drift,
            tol: opts.norm_tol,
        });
    }
    Ok(out)
}

/// `⟨B|ψ(τ)⟩` from the Fock solver, as a kernel.
pub fn fock_kernel(q: &PropagatorQuery, model: &OscillatorModel, opts: &FockOptions) -> Result<KernelValue> {
    let psi = fock_propagate(q.a, model, q.tau(), opts)?;
    let bra = coherent_to_fock(q.b, opts.dim, opts.tail_tol)?;
    Ok(KernelValue::from_value(bra.inner(&psi)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drive::Drive;
    use crate::kernel::coherent_overlap;

    fn label(re: f64, im: f64) -> CoherentLabel {
        CoherentLabel::from_parts(re, im).unwrap()
    }

    #[test]
    fn vacuum_has_a_single_amplitude() {
        let v = coherent_to_fock(label(0.0, 0.0), 8, 1e-12).unwrap();
        assert_eq!(v.amplitudes()[0], C64::new(1.0, 0.0));
        assert!(v.amplitudes()[1..].iter().all(|c| *c == C64::new(0.0, 0.0)));
        assert_eq!(v.tail_mass, 0.0);
    }

    #[test]
    fn unit_label_tail_is_tiny() {
        // P(N ≥ 64) for mean 1 is e^{-1}/64! (1 + 1/65 + ...) ≈ 2.9e-90
        let v = coherent_to_fock(label(1.0, 0.0), 64, 1e-12).unwrap();
        assert!(v.tail_mass <= 1e-40);
        let leading = (-1.0f64).exp() / (1..=64).map(|n| n as f64).product::<f64>();
        assert!((v.tail_mass / leading - 1.0).abs() < 0.02);
    }

    #[test]
    fn small_dimension_is_reported() {
        assert!(matches!(
            coherent_to_fock(label(3.0, 0.0), 10, 1e-10),
            Err(Error::TruncationSaturated { .. })
        ));
        assert!(coherent_to_fock(label(0.0, 0.0), 0, 1e-10).is_err());
    }

    #[test]
    fn truncated_overlap_matches_closed_form() {
        let (a, b) = (label(0.7, -1.2), label(-0.4, 0.5));
        let va = coherent_to_fock(a, 60, 1e-12).unwrap();
        let vb = coherent_to_fock(b, 60, 1e-12).unwrap();
        let want = coherent_overlap(b, a).value();
        assert!((vb.inner(&va) - want).norm() < 1e-13);
    }

    #[test]
    fn free_evolution_rotates_the_label() {
        let model = OscillatorModel::free(1.1).unwrap();
        let a = label(1.0, 0.5);
        let opts = FockOptions { dim: 40, dt: 1e-3, tail_tol: 1e-10, norm_tol: 1e-8 };
        let psi = fock_propagate(a, &model, 1.5, &opts).unwrap();
        let rotated = CoherentLabel::new(a.value() * C64::from_polar(1.0, -1.1 * 1.5)).unwrap();
        let want = coherent_to_fock(rotated, 40, 1e-10).unwrap();
        let err: f64 = psi.amplitudes().iter().zip(want.amplitudes()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(err < 1e-9, "{err}");
        assert!((psi.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn large_step_trips_the_norm_guard() {
        let model = OscillatorModel::new(1.0, Drive::constant(C64::new(0.3, 0.0))).unwrap();
        let opts = FockOptions { dim: 40, dt: 0.05, tail_tol: 1e-10, norm_tol: 1e-8 };
        assert!(matches!(fock_propagate(label(1.0, 0.0), &model, 2.0, &opts), Err(Error::NormDrift { .. })));
    }

    #[test]
    fn strong_drive_saturates_a_small_space() {
        let model = OscillatorModel::new(0.0, Drive::constant(C64::new(3.0, 0.0))).unwrap();
        let opts = FockOptions { dim: 24, dt: 1e-3, tail_tol: 1e-10, norm_tol: 1.0 };
        assert!(matches!(
            fock_propagate(label(0.0, 0.0), &model, 2.0, &opts),
            Err(Error::TruncationSaturated { .. })
        ));
    }

    #[test]
    fn default_dimension_grows_with_drive() {
        let free = OscillatorModel::free(1.0).unwrap();
        let driven = OscillatorModel::new(1.0, Drive::constant(C64::new(1.0, 0.0))).unwrap();
        let a = label(1.0, 0.0);
        assert_eq!(default_fock_dim(a, &free, 2.0), 41);
        assert!(default_fock_dim(a, &driven, 2.0) > 41);
    }
}
