//! The Schrödinger equation in the coherent-state basis,
//!
//! ```text
//! [(ωB* + f)(∂_{B*} + ½B) + f* B* - i∂_t] ⟨B|U(t)|A⟩ = 0,
//! ```
//!
//! checked on the closed-form kernel by finite differences and by the
//! analytic derivative factors.

use num_complex::Complex64 as C64;

use crate::drive::{DriveIntegrals, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::kernel::{check_horizon, ClosedFormKernel, IndependentLabels, OscillatorModel, PropagatorQuery};

/// Below this relative rounding level a non-monotone Richardson sequence is
/// treated as converged rather than as cancellation.
const ROUNDOFF_FLOOR: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidualReport {
    /// `R` in absolute units, i.e. multiplied back by the kernel.
    pub residual: C64,
    /// `|R| / |K|` divided by the largest of the three bracket terms.
    pub relative_residual: f64,
    pub fd_step: f64,
    /// Formal truncation order of the extrapolated differences.
    pub richardson_order: u32,
}

/// Centred differences of `f` at steps `δ`, `δ/2`, `δ/4`.
fn central_sequence<F: FnMut(f64) -> C64>(mut f: F, delta: f64) -> [C64; 3] {
    let mut d = |s: f64| (f(s) - f(-s)) / (2.0 * s);
    [d(delta), d(delta / 2.0), d(delta / 4.0)]
}

fn richardson(seq: &[C64; 3]) -> C64 {
    (seq[1] * 4.0 - seq[0]) / 3.0
}

/// Flags a difference sequence whose successive changes stop shrinking, or
/// sit below the expected rounding error, while that rounding error is
/// significant.
fn cancellation_dominated(seq: &[C64; 3], roundoff: f64) -> bool {
    let first = (seq[0] - seq[1]).norm();
    let second = (seq[1] - seq[2]).norm();
    roundoff > ROUNDOFF_FLOOR && (second >= first || first < roundoff)
}

pub fn schrodinger_residual(q: &PropagatorQuery, model: &OscillatorModel, fd_step: f64) -> Result<ResidualReport> {
    schrodinger_residual_with(&ClosedFormKernel::default(), q, model, fd_step)
}

/// Finite-difference Schrödinger residual of a closed-form kernel, with
/// `B*` varied independently of `B` and one Richardson extrapolation in
/// each variable.
pub fn schrodinger_residual_with(
    kernel: &ClosedFormKernel,
    q: &PropagatorQuery,
    model: &OscillatorModel,
    fd_step: f64,
) -> Result<ResidualReport> {
    if !(fd_step > 0.0 && fd_step.is_finite()) {
        return Err(Error::InvalidArgument(format!("fd_step must be > 0, got {fd_step}")));
    }
    let tau = q.tau();
    if tau <= fd_step {
        return Err(Error::InvalidArgument(format!(
            "tau = {tau} must exceed fd_step = {fd_step} for centred time differences"
        )));
    }
    let omega = model.omega();
    let labels = IndependentLabels::of(q);
    let gh = model.drive_integrals(tau, DEFAULT_TOL)?;
    let centre = kernel.exponent(&labels, omega, tau, gh.g, gh.h);

    // K(x)/K(centre), so derivatives come out already divided by K.
    let along_b_bar = |s: f64| {
        let shifted = IndependentLabels {
            b_bar: labels.b_bar + s,
            ..labels
        };
        (kernel.exponent(&shifted, omega, tau, gh.g, gh.h) - centre).exp()
    };
    let b_bar_seq = central_sequence(along_b_bar, fd_step);

    let mut time_err = None;
    let along_t = |s: f64| match model.drive_integrals(tau + s, DEFAULT_TOL) {
        Ok(at) => (kernel.exponent(&labels, omega, tau + s, at.g, at.h) - centre).exp(),
        Err(e) => {
            time_err.get_or_insert(e);
            C64::new(f64::NAN, f64::NAN)
        }
    };
    let t_seq = central_sequence(along_t, fd_step);
    if let Some(e) = time_err {
        return Err(e);
    }

    let roundoff = 4.0 * f64::EPSILON / (fd_step / 4.0);
    if cancellation_dominated(&b_bar_seq, roundoff) || cancellation_dominated(&t_seq, roundoff) {
        return Err(Error::CancellationDominated { fd_step });
    }

    let d_b_bar = richardson(&b_bar_seq);
    let d_t = richardson(&t_seq);
    let f = model.drive().evaluate(tau)?;
    let i = C64::new(0.0, 1.0);
    let terms = [
        (omega * labels.b_bar + f) * (d_b_bar + 0.5 * labels.b),
        f.conj() * labels.b_bar,
        -i * d_t,
    ];
    let r_over_k: C64 = terms.iter().sum();
    let scale = terms.iter().map(|t| t.norm()).fold(0.0, f64::max);
    let relative_residual = if scale > 0.0 { r_over_k.norm() / scale } else { r_over_k.norm() };
    Ok(ResidualReport {
        residual: r_over_k * centre.exp(),
        relative_residual,
        fd_step,
        richardson_order: 4,
    })
}

/// K-relative derivative factors of the closed-form kernel:
///
/// ```text
/// (∂_{B*} + ½B) K / K = e^{-iωτ}(A - i g*)
/// -i ∂_t K / K        = e^{-iωτ}[i f g* - ωB*A + iω g* B* - f* e^{iωτ} B* - f A]
/// ```
pub fn analytic_derivatives(q: &PropagatorQuery, model: &OscillatorModel, gh: &DriveIntegrals) -> Result<(C64, C64)> {
    check_horizon(q.tau(), gh)?;
    let tau = q.tau();
    let omega = model.omega();
    let f = model.drive().evaluate(tau)?;
    let (a, b_bar) = (q.a.value(), q.b.value().conj());
    let g_bar = gh.g.conj();
    let i = C64::new(0.0, 1.0);
    let phase = C64::from_polar(1.0, -omega * tau);
    let annihilation = phase * (a - i * g_bar);
    let time = phase
        * (i * f * g_bar - omega * b_bar * a + i * omega * g_bar * b_bar - f.conj() * phase.conj() * b_bar - f * a);
    Ok((annihilation, time))
}

/// `(ωB* + f)·annihilation + f* B* + time`, which vanishes identically.
pub fn analytic_closure(q: &PropagatorQuery, model: &OscillatorModel, gh: &DriveIntegrals) -> Result<C64> {
    let (annihilation, time) = analytic_derivatives(q, model, gh)?;
    let f = model.drive().evaluate(q.tau())?;
    let b_bar = q.b.value().conj();
    Ok((model.omega() * b_bar + f) * annihilation + f.conj() * b_bar + time)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drive::Drive;
    use crate::kernel::CoherentLabel;

    fn label(re: f64, im: f64) -> CoherentLabel {
        CoherentLabel::from_parts(re, im).unwrap()
    }

    #[test]
    fn free_kernel_residual_is_tiny() {
        let model = OscillatorModel::free(1.2).unwrap();
        let q = PropagatorQuery::new(label(0.8, -0.5), label(-0.3, 1.0), 1.4).unwrap();
        let r = schrodinger_residual(&q, &model, 1e-4).unwrap();
        assert!(r.relative_residual <= 1e-9, "{r:?}");
    }

    #[test]
    fn free_analytic_factors() {
        let model = OscillatorModel::free(1.2).unwrap();
        let q = PropagatorQuery::new(label(0.8, -0.5), label(-0.3, 1.0), 1.4).unwrap();
        let gh = model.drive_integrals(1.4, DEFAULT_TOL).unwrap();
        let (ann, time) = analytic_derivatives(&q, &model, &gh).unwrap();
        let phase = C64::from_polar(1.0, -1.2 * 1.4);
        assert!((ann - phase * q.a.value()).norm() < 1e-15);
        assert!((time - phase * (-1.2 * q.b.value().conj() * q.a.value())).norm() < 1e-15);
    }

    #[test]
    fn fd_factor_matches_analytic_factor() {
        let model = OscillatorModel::new(0.9, Drive::constant(C64::new(0.3, 0.2))).unwrap();
        let q = PropagatorQuery::new(label(0.8, -0.5), label(-0.3, 1.0), 1.4).unwrap();
        let gh = model.drive_integrals(1.4, DEFAULT_TOL).unwrap();
        let (ann, _) = analytic_derivatives(&q, &model, &gh).unwrap();
        let kernel = ClosedFormKernel::default();
        let labels = IndependentLabels::of(&q);
        let centre = kernel.exponent(&labels, 0.9, 1.4, gh.g, gh.h);
        let delta = 1e-3;
        let at = |s: f64| {
            let l = IndependentLabels { b_bar: labels.b_bar + s, ..labels };
            (kernel.exponent(&l, 0.9, 1.4, gh.g, gh.h) - centre).exp()
        };
        let fd = (at(delta) - at(-delta)) / (2.0 * delta) + 0.5 * labels.b;
        assert!((fd - ann).norm() < 10.0 * delta * delta);
    }

    #[test]
    fn closure_vanishes() {
        let model = OscillatorModel::new(
            1.1,
            Drive::Cosine {
                amplitude: C64::new(0.4, -0.2),
                frequency: 0.7,
                phase: 0.3,
            },
        )
        .unwrap();
        let q = PropagatorQuery::new(label(1.5, -0.5), label(-1.3, 1.0), 2.3).unwrap();
        let gh = model.drive_integrals(2.3, DEFAULT_TOL).unwrap();
        assert!(analytic_closure(&q, &model, &gh).unwrap().norm() < 1e-13);
    }

    #[test]
    fn tiny_steps_are_flagged() {
        let model = OscillatorModel::new(1.0, Drive::constant(C64::new(0.3, 0.0))).unwrap();
        let q = PropagatorQuery::new(label(1.0, 0.5), label(-0.7, 0.2), 2.0).unwrap();
        assert!(matches!(
            schrodinger_residual(&q, &model, 1e-9),
            Err(Error::CancellationDominated { .. })
        ));
    }

    #[test]
    fn step_must_fit_inside_horizon() {
        let model = OscillatorModel::free(1.0).unwrap();
        let q = PropagatorQuery::new(label(1.0, 0.5), label(-0.7, 0.2), 1e-5).unwrap();
        assert!(schrodinger_residual(&q, &model, 1e-4).is_err());
        assert!(schrodinger_residual(&q, &model, 0.0).is_err());
    }
}
