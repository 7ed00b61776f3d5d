//! Coherent-state algebra: overlaps, the free oscillator kernel, the
//! closed-form driven propagator, and the exact Gaussian gluing used to check
//! norm conservation and the semigroup property.
//!
//! Units: ħ = 1. All kernels are carried in log space; `KernelValue::value`
//! exponentiates on demand.

use num_complex::Complex64 as C64;

use crate::drive::{compute_g_h, Drive, DriveIntegrals};
use crate::error::{Error, Result};

fn finite(z: C64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

/// Complex label of a coherent state, `a|L⟩ = L|L⟩`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoherentLabel(C64);

impl CoherentLabel {
    pub fn new(value: C64) -> Result<Self> {
        if finite(value) {
            Ok(Self(value))
        } else {
            Err(Error::InvalidArgument(format!("coherent label must be finite, got {value}")))
        }
    }

    pub fn from_parts(re: f64, im: f64) -> Result<Self> {
        Self::new(C64::new(re, im))
    }

    pub fn value(self) -> C64 {
        self.0
    }
}

/// `H = ω a†a + f(t) a + f*(t) a†`.
#[derive(Clone, Debug, PartialEq)]
pub struct OscillatorModel {
    omega: f64,
    drive: Drive,
}

impl OscillatorModel {
    pub fn new(omega: f64, drive: Drive) -> Result<Self> {
        if !omega.is_finite() {
            return Err(Error::InvalidArgument(format!("omega must be finite, got {omega}")));
        }
        drive.validate()?;
        Ok(Self { omega, drive })
    }

    pub fn free(omega: f64) -> Result<Self> {
        Self::new(omega, Drive::zero())
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn drive(&self) -> &Drive {
        &self.drive
    }

    /// Same frequency, drive restarted at `offset`.
    pub fn shifted(&self, offset: f64) -> Self {
        Self {
            omega: self.omega,
            drive: self.drive.shifted(offset),
        }
    }

    /// `(g, h)` for this model at horizon `tau`.
    pub fn drive_integrals(&self, tau: f64, tol: f64) -> Result<DriveIntegrals> {
        compute_g_h(&self.drive, self.omega, tau, tol)
    }
}

/// The matrix element `⟨B|U(τ)|A⟩` being asked for.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PropagatorQuery {
    pub a: CoherentLabel,
    pub b: CoherentLabel,
    tau: f64,
}

impl PropagatorQuery {
    pub fn new(a: CoherentLabel, b: CoherentLabel, tau: f64) -> Result<Self> {
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(Error::InvalidArgument(format!("tau must be finite and >= 0, got {tau}")));
        }
        Ok(Self { a, b, tau })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        Self::new(self.a, self.b, tau)
    }
}

/// A kernel in log space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelValue {
    pub log_value: C64,
}

impl KernelValue {
    pub fn from_log(log_value: C64) -> Self {
        Self { log_value }
    }

    /// Wraps a linear-space value; the imaginary part of the log is taken on
    /// the principal branch.
    pub fn from_value(value: C64) -> Self {
        Self {
            log_value: value.ln(),
        }
    }

    pub fn value(&self) -> C64 {
        self.log_value.exp()
    }

    /// `|K_self - K_other| / |K_other|`, evaluated without leaving log space.
    pub fn relative_deviation(&self, reference: &KernelValue) -> f64 {
        crate::numerics::relative_deviation(self.log_value, reference.log_value)
    }
}

/// `⟨b|a⟩ = exp(-½|b|² - ½|a|² + b* a)`.
pub fn coherent_overlap(b: CoherentLabel, a: CoherentLabel) -> KernelValue {
    let (b, a) = (b.value(), a.value());
    KernelValue::from_log(-0.5 * b.norm_sqr() - 0.5 * a.norm_sqr() + b.conj() * a)
}

/// `⟨b|e^{-iωτ a†a}|a⟩ = ⟨b|e^{-iωτ} a⟩`.
pub fn ho_kernel(b: CoherentLabel, a: CoherentLabel, omega: f64, tau: f64) -> KernelValue {
    debug_assert!(tau >= 0.0);
    let rotated = CoherentLabel(a.value() * C64::from_polar(1.0, -omega * tau));
    coherent_overlap(b, rotated)
}

/// Labels with `B*` and `A*` treated as independent of `B` and `A`, so the
/// kernel can be differentiated in `B*` at fixed `B`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IndependentLabels {
    pub b_bar: C64,
    pub b: C64,
    pub a: C64,
    pub a_bar: C64,
}

impl IndependentLabels {
    pub fn of(q: &PropagatorQuery) -> Self {
        let (a, b) = (q.a.value(), q.b.value());
        Self {
            b_bar: b.conj(),
            b,
            a,
            a_bar: a.conj(),
        }
    }
}

/// Evaluator for the closed-form driven propagator
///
/// ```text
/// ln⟨B|U(τ)|A⟩ = -½A*A - ½B*B + e^{-iωτ} B*A - i g* e^{-iωτ} B* - i g A - h
/// ```
///
/// The default value is the physical kernel. With the `mutation-hook`
/// feature a corrupted variant with the sign of `h` flipped can be built, so
/// tests can confirm that the verification suite rejects it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ClosedFormKernel {
    flip_h: bool,
}

impl ClosedFormKernel {
    #[cfg(feature = "mutation-hook")]
    pub fn with_flipped_h() -> Self {
        Self { flip_h: true }
    }

    pub fn is_corrupted(&self) -> bool {
        self.flip_h
    }

    /// The propagator exponent as a function of independent labels.
    pub fn exponent(&self, labels: &IndependentLabels, omega: f64, tau: f64, g: C64, h: C64) -> C64 {
        let phase = C64::from_polar(1.0, -omega * tau);
        let i = C64::new(0.0, 1.0);
        let h_term = if self.flip_h { -h } else { h };
        -0.5 * labels.a_bar * labels.a - 0.5 * labels.b_bar * labels.b + phase * labels.b_bar * labels.a
            - i * g.conj() * phase * labels.b_bar
            - i * g * labels.a
            - h_term
    }

    pub fn propagator(&self, q: &PropagatorQuery, model: &OscillatorModel, gh: &DriveIntegrals) -> Result<KernelValue> {
        check_horizon(q.tau(), gh)?;
        let labels = IndependentLabels::of(q);
        Ok(KernelValue::from_log(self.exponent(&labels, model.omega(), q.tau(), gh.g, gh.h)))
    }
}

pub(crate) fn check_horizon(tau: f64, gh: &DriveIntegrals) -> Result<()> {
    if (tau - gh.tau).abs() > 1e-12 * tau.abs().max(1.0) {
        return Err(Error::HorizonMismatch {
            query: tau,
            integrals: gh.tau,
        });
    }
    Ok(())
}

/// Closed-form `⟨B|U(τ)|A⟩` from precomputed drive integrals.
pub fn closed_form_propagator(q: &PropagatorQuery, model: &OscillatorModel, gh: &DriveIntegrals) -> Result<KernelValue> {
    ClosedFormKernel::default().propagator(q, model, gh)
}

/// Exponent of `∫(d²z/π) exp(-|z|² + u z* + v z) = exp(u v)`.
///
/// The measure `d²z/π` is the one under which coherent states resolve the
/// identity, `∫(d²z/π) |z⟩⟨z| = 1`.
pub fn gaussian_glue_exponent(u: C64, v: C64) -> C64 {
    u * v
}

/// `∫(d²z/π) exp(-|z|² + u z* + v z) = exp(u v)`.
pub fn gaussian_glue(u: C64, v: C64) -> C64 {
    gaussian_glue_exponent(u, v).exp()
}

/// `|∫(d²B/π) |⟨B|U(τ)|A⟩|² - 1|`, with the `B` integral done exactly.
pub fn unitarity_defect(a: CoherentLabel, model: &OscillatorModel, gh: &DriveIntegrals) -> f64 {
    unitarity_defect_with(&ClosedFormKernel::default(), a, model, gh)
}

pub fn unitarity_defect_with(kernel: &ClosedFormKernel, a: CoherentLabel, model: &OscillatorModel, gh: &DriveIntegrals) -> f64 {
    let a = a.value();
    let i = C64::new(0.0, 1.0);
    let h = if kernel.flip_h { -gh.h } else { gh.h };
    // |K|² = exp(-|B|² + w B* + w* B + rest) with w = e^{-iωτ}(A - i g*)
    let w = C64::from_polar(1.0, -model.omega() * gh.tau) * (a - i * gh.g.conj());
    let rest = -a.norm_sqr() - 2.0 * (i * gh.g * a).re - 2.0 * h.re;
    let log_norm = rest + gaussian_glue_exponent(w, w.conj()).re;
    log_norm.exp_m1().abs()
}

/// `∫(d²C/π) ⟨B|U(τ - t_split)|C⟩ ⟨C|U(t_split)|A⟩`, with each leg taken from
/// the closed-form kernel and the `C` integral done exactly. The second leg
/// sees the drive restarted at `t_split`.
pub fn compose_kernels(q: &PropagatorQuery, model: &OscillatorModel, t_split: f64, tol: f64) -> Result<KernelValue> {
    compose_kernels_with(&ClosedFormKernel::default(), q, model, t_split, tol)
}

pub fn compose_kernels_with(
    kernel: &ClosedFormKernel,
    q: &PropagatorQuery,
    model: &OscillatorModel,
    t_split: f64,
    tol: f64,
) -> Result<KernelValue> {
    let tau = q.tau();
    let slack = 1e-12 * tau.max(1.0);
    if !(t_split >= -slack && t_split <= tau + slack) {
        return Err(Error::InvalidArgument(format!("t_split = {t_split} outside [0, {tau}]")));
    }
    let t_split = t_split.clamp(0.0, tau);
    let tail = tau - t_split;
    let first = model.drive_integrals(t_split, tol)?;
    let second_model = model.shifted(t_split);
    let second = second_model.drive_integrals(tail, tol)?;

    let omega = model.omega();
    let (a, b) = (q.a.value(), q.b.value());
    let zero = C64::new(0.0, 0.0);
    // Split each leg's exponent into the parts multiplying C*, C, and neither.
    // ⟨C|U₁|A⟩: coefficient of C* is u, of C is zero.
    let first_at = |c_bar: C64| {
        kernel.exponent(
            &IndependentLabels {
                b_bar: c_bar,
                b: zero,
                a,
                a_bar: a.conj(),
            },
            omega,
            t_split,
            first.g,
            first.h,
        )
    };
    let c1 = first_at(zero);
    let u = first_at(C64::new(1.0, 0.0)) - c1;
    // ⟨B|U₂|C⟩: coefficient of C is v.
    let second_at = |c: C64| {
        kernel.exponent(
            &IndependentLabels {
                b_bar: b.conj(),
                b,
                a: c,
                a_bar: zero,
            },
            omega,
            tail,
            second.g,
            second.h,
        )
    };
    let c2 = second_at(zero);
    let v = second_at(C64::new(1.0, 0.0)) - c2;
    // The two -½|C|² halves combine into the -|C|² of the Gaussian measure.
    Ok(KernelValue::from_log(c1 + c2 + gaussian_glue_exponent(u, v)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drive::DEFAULT_TOL;
    use std::f64::consts::PI;

    fn label(re: f64, im: f64) -> CoherentLabel {
        CoherentLabel::from_parts(re, im).unwrap()
    }

    #[test]
    fn overlap_of_a_label_with_itself_is_one() {
        for a in [label(0.0, 0.0), label(2.5, -1.5), label(-7.0, 9.0)] {
            assert_eq!(coherent_overlap(a, a).log_value, C64::new(0.0, 0.0));
            assert_eq!(coherent_overlap(a, a).value(), C64::new(1.0, 0.0));
        }
    }

    #[test]
    fn overlap_modulus_is_gaussian_in_distance() {
        let (a, b) = (label(0.3, 1.1), label(-0.8, 0.4));
        let got = coherent_overlap(b, a).value().norm_sqr();
        let want = (-(a.value() - b.value()).norm_sqr()).exp();
        assert!((got - want).abs() < 1e-15);
    }

    #[test]
    fn ho_kernel_reductions() {
        let (a, b) = (label(0.3, 1.1), label(-0.8, 0.4));
        assert_eq!(ho_kernel(b, a, 0.0, 3.0), coherent_overlap(b, a));
        assert_eq!(ho_kernel(b, a, 2.0, 0.0), coherent_overlap(b, a));
        let full_turn = ho_kernel(a, a, 1.0, 2.0 * PI).value();
        assert!((full_turn - 1.0).norm() < 1e-14);
    }

    #[test]
    fn closed_form_reduces_to_free_kernel_without_drive() {
        let model = OscillatorModel::free(1.3).unwrap();
        let q = PropagatorQuery::new(label(0.5, -0.2), label(1.0, 0.7), 2.2).unwrap();
        let gh = model.drive_integrals(q.tau(), DEFAULT_TOL).unwrap();
        let k = closed_form_propagator(&q, &model, &gh).unwrap();
        let free = ho_kernel(q.b, q.a, 1.3, 2.2);
        assert!((k.log_value - free.log_value).norm() < 1e-15);
    }

    #[test]
    fn vacuum_to_vacuum_is_exp_minus_h() {
        // ω = 0, f = c: h = c²τ²/2
        let (c, tau) = (0.6, 1.7);
        let model = OscillatorModel::new(0.0, Drive::constant(C64::new(c, 0.0))).unwrap();
        let q = PropagatorQuery::new(label(0.0, 0.0), label(0.0, 0.0), tau).unwrap();
        let gh = model.drive_integrals(tau, DEFAULT_TOL).unwrap();
        let k = closed_form_propagator(&q, &model, &gh).unwrap();
        assert!((k.value() - C64::new((-c * c * tau * tau / 2.0).exp(), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn horizon_mismatch_is_rejected() {
        let model = OscillatorModel::free(1.0).unwrap();
        let q = PropagatorQuery::new(label(0.0, 0.0), label(0.0, 0.0), 1.0).unwrap();
        let gh = model.drive_integrals(2.0, DEFAULT_TOL).unwrap();
        assert!(matches!(closed_form_propagator(&q, &model, &gh), Err(Error::HorizonMismatch { .. })));
    }

    #[test]
    fn glue_values() {
        let z = C64::new(0.0, 0.0);
        assert_eq!(gaussian_glue(z, C64::new(2.0, 1.0)), C64::new(1.0, 0.0));
        assert_eq!(gaussian_glue(C64::new(2.0, 1.0), z), C64::new(1.0, 0.0));
        let one = C64::new(1.0, 0.0);
        assert!((gaussian_glue(one, one).re - std::f64::consts::E).abs() < 1e-15);
    }

    #[test]
    fn glue_matches_polar_quadrature() {
        // ∫(d²z/π) exp(-|z|² + u z* + v z) on a polar grid
        let (u, v) = (C64::new(0.4, -0.3), C64::new(-0.2, 0.5));
        let (panels, nphi, rmax) = (90usize, 64usize, 9.0);
        let dr = rmax / panels as f64;
        let mut integral = C64::new(0.0, 0.0);
        for ir in 0..panels {
            integral += crate::numerics::gauss_legendre(ir as f64 * dr, (ir + 1) as f64 * dr, |r| {
                let ring: C64 = (0..nphi)
                    .map(|ip| {
                        let z = C64::from_polar(r, 2.0 * PI * ip as f64 / nphi as f64);
                        (-z.norm_sqr() + u * z.conj() + v * z).exp()
                    })
                    .sum();
                ring * r * (2.0 * PI / nphi as f64) / PI
            });
        }
        assert!((integral - gaussian_glue(u, v)).norm() < 1e-12, "{integral}");
    }

    #[test]
    fn free_evolution_is_norm_preserving() {
        let model = OscillatorModel::free(0.7).unwrap();
        let gh = model.drive_integrals(3.0, DEFAULT_TOL).unwrap();
        assert!(unitarity_defect(label(1.2, -0.4), &model, &gh) < 1e-15);
    }

    #[test]
    fn composition_at_the_endpoints() {
        let model = OscillatorModel::new(1.0, Drive::constant(C64::new(0.3, 0.1))).unwrap();
        let q = PropagatorQuery::new(label(1.0, 0.5), label(-0.7, 0.2), 1.0).unwrap();
        let gh = model.drive_integrals(1.0, DEFAULT_TOL).unwrap();
        let full = closed_form_propagator(&q, &model, &gh).unwrap();
        for t in [0.0, 1.0] {
            let composed = compose_kernels(&q, &model, t, DEFAULT_TOL).unwrap();
            assert!(composed.relative_deviation(&full) < 1e-14, "t = {t}");
        }
        assert!(compose_kernels(&q, &model, 1.5, DEFAULT_TOL).is_err());
        assert!(compose_kernels(&q, &model, -0.1, DEFAULT_TOL).is_err());
    }

    #[test]
    fn label_and_query_validation() {
        assert!(CoherentLabel::from_parts(f64::NAN, 0.0).is_err());
        assert!(CoherentLabel::from_parts(0.0, f64::INFINITY).is_err());
        assert!(PropagatorQuery::new(label(0.0, 0.0), label(0.0, 0.0), -1.0).is_err());
        assert!(OscillatorModel::free(f64::NAN).is_err());
    }
}
