//! The drive `f(t)` coupling linearly to `a` and `a†`, and the two drive
//! functionals that enter the propagator:
//!
//! ```text
//! g(τ) = ∫₀^τ dt f(t) e^{-iωt}
//! h(τ) = ∫₀^τ dt ∫₀^t ds e^{iω(s-t)} f(t) f*(s)
//! ```
//!
//! Constant and cosine drives are finite sums of exponentials `c e^{iκt}`, so
//! both functionals have closed forms in terms of exponential divided
//! differences. Every other drive goes through a joint initial-value problem
//! for `(g, h)`, using `dh/dt = f(t) e^{-iωt} g*(t)`.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::numerics::{exp_dd2, exp_dd3};

/// Default tolerance for numerically computed drive integrals.
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub enum Drive {
    /// `f(t) = value`
    Constant { value: C64 },
    /// `f(t) = amplitude · cos(frequency · t + phase)`
    Cosine {
        amplitude: C64,
        frequency: f64,
        phase: f64,
    },
    /// `f(t) = amplitude · exp(-(t - center)² / (2 width²)) · e^{i carrier t}`
    GaussianPulse {
        amplitude: C64,
        center: f64,
        width: f64,
        carrier: f64,
    },
    /// Piecewise-linear interpolation of sampled values.
    Tabulated(TabulatedDrive),
}

/// Samples of a drive on strictly increasing times.
#[derive(Clone, Debug, PartialEq)]
pub struct TabulatedDrive {
    times: Vec<f64>,
    values: Vec<C64>,
}

impl TabulatedDrive {
    pub fn new(times: Vec<f64>, values: Vec<C64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::InvalidArgument(format!(
                "tabulated drive has {} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.len() < 2 {
            return Err(Error::InvalidArgument(
                "tabulated drive needs at least 2 samples".into(),
            ));
        }
        if times.iter().any(|t| !t.is_finite())
            || values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            return Err(Error::InvalidArgument(
                "tabulated drive contains non-finite samples".into(),
            ));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "tabulated drive times must be strictly increasing".into(),
            ));
        }
        Ok(Self { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    fn start(&self) -> f64 {
        self.times[0]
    }

    fn end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Linear interpolation; `t` is clamped to the table range.
    fn interpolate(&self, t: f64) -> C64 {
        let n = self.times.len();
        let idx = self.times.partition_point(|&x| x <= t).clamp(1, n - 1);
        let (t0, t1) = (self.times[idx - 1], self.times[idx]);
        let (v0, v1) = (self.values[idx - 1], self.values[idx]);
        let w = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
        v0 + (v1 - v0) * w
    }
}

impl Drive {
    pub fn zero() -> Self {
        Drive::Constant {
            value: C64::new(0.0, 0.0),
        }
    }

    pub fn constant(value: C64) -> Self {
        Drive::Constant { value }
    }

    /// Checks parameter domains (finite parameters, positive pulse width).
    pub fn validate(&self) -> Result<()> {
        let finite = |z: C64| z.re.is_finite() && z.im.is_finite();
        let ok = match self {
            Drive::Constant { value } => finite(*value),
            Drive::Cosine {
                amplitude,
                frequency,
                phase,
            } => finite(*amplitude) && frequency.is_finite() && phase.is_finite(),
            Drive::GaussianPulse {
                amplitude,
                center,
                width,
                carrier,
            } => {
                finite(*amplitude)
                    && center.is_finite()
                    && carrier.is_finite()
                    && width.is_finite()
                    && *width > 0.0
            }
            Drive::Tabulated(_) => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid drive parameters: {self:?}")))
        }
    }

    /// The closed interval on which the drive is defined, `None` for presets
    /// (defined for all t).
    pub fn domain(&self) -> Option<(f64, f64)> {
        match self {
            Drive::Tabulated(tab) => Some((tab.start(), tab.end())),
            _ => None,
        }
    }

    /// Fails unless `[0, tau]` lies inside the drive domain.
    pub fn check_covers(&self, tau: f64) -> Result<()> {
        if let Some((start, end)) = self.domain() {
            for t in [0.0, tau] {
                if t < start || t > end {
                    return Err(Error::OutsideDriveDomain { t, start, end });
                }
            }
        }
        Ok(())
    }

    /// `f(t)`.
    pub fn evaluate(&self, t: f64) -> Result<C64> {
        if let Some((start, end)) = self.domain() {
            if !(start..=end).contains(&t) {
                return Err(Error::OutsideDriveDomain { t, start, end });
            }
        }
        Ok(self.value_at(t))
    }

    /// `f(t)` without the domain check; tabulated drives clamp to their range.
    pub(crate) fn value_at(&self, t: f64) -> C64 {
        match self {
            Drive::Constant { value } => *value,
            Drive::Cosine {
                amplitude,
                frequency,
                phase,
            } => amplitude * (frequency * t + phase).cos(),
            Drive::GaussianPulse {
                amplitude,
                center,
                width,
                carrier,
            } => {
                let x = (t - center) / width;
                amplitude * (-0.5 * x * x).exp() * C64::from_polar(1.0, carrier * t)
            }
            Drive::Tabulated(tab) => tab.interpolate(t),
        }
    }

    /// The drive seen from a clock started at `offset`: `t ↦ f(t + offset)`.
    pub fn shifted(&self, offset: f64) -> Self {
        match self {
            Drive::Constant { .. } => self.clone(),
            Drive::Cosine {
                amplitude,
                frequency,
                phase,
            } => Drive::Cosine {
                amplitude: *amplitude,
                frequency: *frequency,
                phase: phase + frequency * offset,
            },
            Drive::GaussianPulse {
                amplitude,
                center,
                width,
                carrier,
            } => Drive::GaussianPulse {
                amplitude: amplitude * C64::from_polar(1.0, carrier * offset),
                center: center - offset,
                width: *width,
                carrier: *carrier,
            },
            Drive::Tabulated(tab) => Drive::Tabulated(TabulatedDrive {
                times: tab.times.iter().map(|t| t - offset).collect(),
                values: tab.values.clone(),
            }),
        }
    }

    /// `t ↦ factor · f(t)`.
    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            Drive::Constant { value } => Drive::Constant {
                value: value * factor,
            },
            Drive::Cosine {
                amplitude,
                frequency,
                phase,
            } => Drive::Cosine {
                amplitude: amplitude * factor,
                frequency: *frequency,
                phase: *phase,
            },
            Drive::GaussianPulse {
                amplitude,
                center,
                width,
                carrier,
            } => Drive::GaussianPulse {
                amplitude: amplitude * factor,
                center: *center,
                width: *width,
                carrier: *carrier,
            },
            Drive::Tabulated(tab) => Drive::Tabulated(TabulatedDrive {
                times: tab.times.clone(),
                values: tab.values.iter().map(|v| v * factor).collect(),
            }),
        }
    }

    /// Decomposition `f(t) = Σ c e^{iκt}` as `(c, κ)` pairs, available for the
    /// presets that admit closed-form drive integrals.
    pub fn exponential_terms(&self) -> Option<Vec<(C64, f64)>> {
        match self {
            Drive::Constant { value } => Some(vec![(*value, 0.0)]),
            Drive::Cosine {
                amplitude,
                frequency,
                phase,
            } => {
                let half = amplitude * 0.5;
                Some(vec![
                    (half * C64::from_polar(1.0, *phase), *frequency),
                    (half * C64::from_polar(1.0, -phase), -frequency),
                ])
            }
            _ => None,
        }
    }

    /// Points strictly inside `(a, b)` where the drive is not smooth.
    pub fn breakpoints(&self, a: f64, b: f64) -> Vec<f64> {
        match self {
            Drive::Tabulated(tab) => tab.times.iter().copied().filter(|&t| t > a && t < b).collect(),
            _ => Vec::new(),
        }
    }

    /// Upper bound on `∫₀^τ |f(t)| dt`. This bounds the drive-induced
    /// displacement of a coherent label at any time in `[0, τ]`.
    pub fn abs_integral_bound(&self, tau: f64) -> f64 {
        match self {
            Drive::Constant { value } => value.norm() * tau,
            Drive::Cosine { amplitude, .. } => amplitude.norm() * tau,
            Drive::GaussianPulse {
                amplitude, width, ..
            } => (amplitude.norm() * width * (2.0 * std::f64::consts::PI).sqrt()).min(amplitude.norm() * tau),
            Drive::Tabulated(tab) => {
                let mut knots = vec![0.0];
                knots.extend(self.breakpoints(0.0, tau));
                knots.push(tau);
                knots
                    .windows(2)
                    .map(|w| {
                        tab.interpolate(w[0]).norm().max(tab.interpolate(w[1]).norm()) * (w[1] - w[0])
                    })
                    .sum()
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IntegralMethod {
    ClosedForm,
    OdeQuadrature,
}

/// The drive functionals `(g, h)` at horizon `tau`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriveIntegrals {
    pub tau: f64,
    pub g: C64,
    pub h: C64,
    pub method: IntegralMethod,
    pub tolerance: f64,
    /// Accepted integrator steps; zero for closed forms.
    pub steps: usize,
}

impl DriveIntegrals {
    pub fn zero(tau: f64) -> Self {
        Self {
            tau,
            g: C64::new(0.0, 0.0),
            h: C64::new(0.0, 0.0),
            method: IntegralMethod::ClosedForm,
            tolerance: 0.0,
            steps: 0,
        }
    }

    /// `|2 Re h - |g|²|`, which vanishes identically for exact integrals.
    pub fn identity_defect(&self) -> f64 {
        (2.0 * self.h.re - self.g.norm_sqr()).abs()
    }
}

/// `f(t) e^{-iωt}`, the rate of change of `g` at horizon `t`.
pub fn g_prime(drive: &Drive, omega: f64, t: f64) -> Result<C64> {
    Ok(drive.evaluate(t)? * C64::from_polar(1.0, -omega * t))
}

/// Computes `(g, h)` at horizon `tau`, in closed form where the drive admits
/// one and by adaptive integration otherwise.
pub fn compute_g_h(drive: &Drive, omega: f64, tau: f64, tol: f64) -> Result<DriveIntegrals> {
    check_args(drive, omega, tau, tol)?;
    match drive.exponential_terms() {
        Some(terms) => Ok(closed_form_g_h(&terms, omega, tau, tol)),
        None => ode_g_h(drive, omega, tau, tol),
    }
}

/// Forces the numerical route regardless of drive kind.
pub fn compute_g_h_numeric(drive: &Drive, omega: f64, tau: f64, tol: f64) -> Result<DriveIntegrals> {
    check_args(drive, omega, tau, tol)?;
    ode_g_h(drive, omega, tau, tol)
}

fn check_args(drive: &Drive, omega: f64, tau: f64, tol: f64) -> Result<()> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::InvalidArgument(format!("tau must be finite and >= 0, got {tau}")));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidArgument(format!("tolerance must be > 0, got {tol}")));
    }
    if !omega.is_finite() {
        return Err(Error::InvalidArgument(format!("omega must be finite, got {omega}")));
    }
    drive.validate()?;
    drive.check_covers(tau)
}

fn closed_form_g_h(terms: &[(C64, f64)], omega: f64, tau: f64, tol: f64) -> DriveIntegrals {
    let zero = C64::new(0.0, 0.0);
    let i_tau = C64::new(0.0, tau);
    let mut g = zero;
    let mut h = zero;
    for &(cj, kj) in terms {
        g += cj * tau * exp_dd2(zero, i_tau * (kj - omega));
        for &(ck, kk) in terms {
            h += cj * ck.conj() * (tau * tau) * exp_dd3(zero, i_tau * (kj - omega), i_tau * (kj - kk));
        }
    }
    DriveIntegrals {
        tau,
        g,
        h,
        method: IntegralMethod::ClosedForm,
        tolerance: tol,
        steps: 0,
    }
}

#[derive(Clone, Copy)]
struct GhState {
    g: C64,
    h: C64,
}

fn rk4_step(drive: &Drive, omega: f64, t: f64, y: GhState, step: f64) -> GhState {
    let rate = |s: f64| drive.value_at(s) * C64::from_polar(1.0, -omega * s);
    let p0 = rate(t);
    let pm = rate(t + 0.5 * step);
    let p1 = rate(t + step);
    let k1 = (p0, p0 * y.g.conj());
    let g2 = y.g + k1.0 * (0.5 * step);
    let k2 = (pm, pm * g2.conj());
    let g3 = y.g + k2.0 * (0.5 * step);
    let k3 = (pm, pm * g3.conj());
    let g4 = y.g + k3.0 * step;
    let k4 = (p1, p1 * g4.conj());
    GhState {
        g: y.g + (k1.0 + k2.0 * 2.0 + k3.0 * 2.0 + k4.0) * (step / 6.0),
        h: y.h + (k1.1 + k2.1 * 2.0 + k3.1 * 2.0 + k4.1) * (step / 6.0),
    }
}

fn ode_g_h(drive: &Drive, omega: f64, tau: f64, tol: f64) -> Result<DriveIntegrals> {
    let mut y = GhState {
        g: C64::new(0.0, 0.0),
        h: C64::new(0.0, 0.0),
    };
    let mut steps = 0usize;
    if tau > 0.0 {
        let mut knots = vec![0.0];
        knots.extend(drive.breakpoints(0.0, tau));
        knots.push(tau);
        let min_step = 1e-13 * tau.max(1.0);
        for seg in knots.windows(2) {
            let (start, end) = (seg[0], seg[1]);
            let mut t = start;
            let mut step = (end - start) / 8.0;
            while t < end {
                step = step.min(end - t);
                let full = rk4_step(drive, omega, t, y, step);
                let half = rk4_step(drive, omega, t, y, 0.5 * step);
                let half = rk4_step(drive, omega, t + 0.5 * step, half, 0.5 * step);
                let err = (half.g - full.g).norm().max((half.h - full.h).norm()) / 15.0;
                let scale = 1.0_f64.max(half.g.norm()).max(half.h.norm());
                let allowed = tol * scale * (step / tau);
                if err <= allowed {
                    t += step;
                    // local extrapolation
                    y = GhState {
                        g: half.g + (half.g - full.g) / 15.0,
                        h: half.h + (half.h - full.h) / 15.0,
                    };
                    steps += 1;
                }
                let factor = if err == 0.0 {
                    4.0
                } else {
                    (0.9 * (allowed / err).powf(0.2)).clamp(0.2, 4.0)
                };
                step *= factor;
                if step < min_step && t < end {
                    return Err(Error::StepUnderflow { t, tol });
                }
            }
        }
    }
    let out = DriveIntegrals {
        tau,
        g: y.g,
        h: y.h,
        method: IntegralMethod::OdeQuadrature,
        tolerance: tol,
        steps,
    };
    let bound = 10.0 * tol * 1.0_f64.max(out.g.norm_sqr());
    if out.identity_defect() > bound {
        return Err(Error::IdentityViolated {
            defect: out.identity_defect(),
            bound,
        });
    }
    Ok(out)
}
