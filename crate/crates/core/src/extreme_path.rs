//! Extreme paths: solutions of the first-order equations of motion
//!
//! ```text
//!  i dL₀/dt  = ω L₀  + f*
//! -i dM₀*/dt = ω M₀* + f
//! ```
//!
//! with free data `L₀(0)` and `M₀*(τ)` and no boundary conditions imposed at
//! the other end. Expanding the path integral about any such pair of paths
//! reproduces the same propagator; [`assemble_prop2`] builds the kernel from
//! a given pair and [`path_independence_report`] measures how far the result
//! strays from the closed form over random choices.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::drive::{DriveIntegrals, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::kernel::{check_horizon, ClosedFormKernel, CoherentLabel, KernelValue, OscillatorModel, PropagatorQuery};
use crate::numerics::{derivative4, gauss_legendre, simpson};

/// Default number of grid points for `τ ≤ 10`.
pub const DEFAULT_GRID: usize = 4096;

/// Radius of the disk from which random `L₀(0)` and `M₀*(τ)` are drawn.
pub const DEFAULT_SAMPLE_RADIUS: f64 = 3.0;

/// Free data selecting one extreme path pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtremePathSpec {
    pub l0_at_0: CoherentLabel,
    pub m0bar_at_tau: C64,
    tau: f64,
}

impl ExtremePathSpec {
    pub fn new(l0_at_0: CoherentLabel, m0bar_at_tau: C64, tau: f64) -> Result<Self> {
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(Error::InvalidArgument(format!("tau must be finite and >= 0, got {tau}")));
        }
        if !(m0bar_at_tau.re.is_finite() && m0bar_at_tau.im.is_finite()) {
            return Err(Error::InvalidArgument("M0*(tau) must be finite".into()));
        }
        Ok(Self {
            l0_at_0,
            m0bar_at_tau,
            tau,
        })
    }

    /// The boundary choice `L₀(0) = A`, `M₀*(τ) = B*`.
    pub fn endpoint_matched(q: &PropagatorQuery) -> Self {
        Self {
            l0_at_0: q.a,
            m0bar_at_tau: q.b.value().conj(),
            tau: q.tau(),
        }
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }
}

/// `L₀` and `M₀*` sampled on a uniform grid over `[0, τ]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtremePath {
    grid: Vec<f64>,
    l0: Vec<C64>,
    m0bar: Vec<C64>,
}

impl ExtremePath {
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn l0(&self) -> &[C64] {
        &self.l0
    }

    pub fn m0bar(&self) -> &[C64] {
        &self.m0bar
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    fn spacing(&self) -> f64 {
        if self.grid.len() < 2 {
            0.0
        } else {
            self.grid[1] - self.grid[0]
        }
    }

    pub fn l0_at_tau(&self) -> C64 {
        *self.l0.last().unwrap()
    }

    pub fn m0bar_at_0(&self) -> C64 {
        self.m0bar[0]
    }
}

/// Integrates over `[a, b]`, splitting the panel where the drive has kinks.
fn panel_integral<F: FnMut(f64) -> C64>(model: &OscillatorModel, a: f64, b: f64, mut f: F) -> C64 {
    let mut knots = vec![a];
    knots.extend(model.drive().breakpoints(a, b));
    knots.push(b);
    knots.windows(2).map(|w| gauss_legendre(w[0], w[1], &mut f)).sum()
}

/// Samples both extreme paths from their Green's-function form,
///
/// ```text
/// L₀(t)  = e^{-iωt} [L₀(0) - i ∫₀ᵗ ds e^{iωs} f*(s)]
/// M₀*(t) = e^{iωt}  [M₀*(τ) e^{-iωτ} + i ∫_τᵗ ds e^{-iωs} f(s)]
/// ```
///
/// accumulating the integrals panel by panel (`L₀` forward from 0, `M₀*`
/// backward from τ).
pub fn solve_extreme_paths(spec: &ExtremePathSpec, model: &OscillatorModel, n_grid: usize) -> Result<ExtremePath> {
    if n_grid < 2 {
        return Err(Error::InvalidArgument(format!("n_grid must be >= 2, got {n_grid}")));
    }
    let tau = spec.tau();
    model.drive().check_covers(tau)?;
    let omega = model.omega();
    let drive = model.drive();
    let i = C64::new(0.0, 1.0);
    let step = tau / (n_grid - 1) as f64;
    let grid: Vec<f64> = (0..n_grid)
        .map(|k| if k == n_grid - 1 { tau } else { k as f64 * step })
        .collect();

    let mut l0 = Vec::with_capacity(n_grid);
    let mut acc = C64::new(0.0, 0.0);
    l0.push(spec.l0_at_0.value());
    for w in grid.windows(2) {
        acc += panel_integral(model, w[0], w[1], |s| C64::from_polar(1.0, omega * s) * drive.value_at(s).conj());
        l0.push(C64::from_polar(1.0, -omega * w[1]) * (spec.l0_at_0.value() - i * acc));
    }

    let mut m0bar = vec![C64::new(0.0, 0.0); n_grid];
    let start = spec.m0bar_at_tau * C64::from_polar(1.0, -omega * tau);
    m0bar[n_grid - 1] = spec.m0bar_at_tau;
    // acc tracks ∫_τ^t, which is minus the integral from t up to τ.
    let mut acc = C64::new(0.0, 0.0);
    for k in (0..n_grid - 1).rev() {
        acc -= panel_integral(model, grid[k], grid[k + 1], |s| C64::from_polar(1.0, -omega * s) * drive.value_at(s));
        m0bar[k] = C64::from_polar(1.0, omega * grid[k]) * (start + i * acc);
    }

    Ok(ExtremePath { grid, l0, m0bar })
}

/// Centred finite-difference stencil used for equation-of-motion residuals.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FdStencil {
    /// Three points, error O(h²).
    Second,
    /// Five points, error O(h⁴).
    Fourth,
}

/// Largest equation-of-motion residuals over the grid interior.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EomResidual {
    /// max |i L̇₀ - ω L₀ - f*|
    pub l: f64,
    /// max |-i Ṁ₀* - ω M₀* - f|
    pub m: f64,
}

impl EomResidual {
    pub fn max(&self) -> f64 {
        self.l.max(self.m)
    }
}

pub fn eom_residual(path: &ExtremePath, model: &OscillatorModel, stencil: FdStencil) -> Result<EomResidual> {
    let reach = match stencil {
        FdStencil::Second => 1,
        FdStencil::Fourth => 2,
    };
    let n = path.len();
    if n < 2 * reach + 1 {
        return Err(Error::InvalidArgument(format!("grid of {n} points too small for stencil {stencil:?}")));
    }
    let h = path.spacing();
    let omega = model.omega();
    let i = C64::new(0.0, 1.0);
    let derivative = |v: &[C64], k: usize| match stencil {
        FdStencil::Second => (v[k + 1] - v[k - 1]) / (2.0 * h),
        FdStencil::Fourth => (v[k - 2] - v[k - 1] * 8.0 + v[k + 1] * 8.0 - v[k + 2]) / (12.0 * h),
    };
    let mut out = EomResidual { l: 0.0, m: 0.0 };
    for k in reach..n - reach {
        let f = model.drive().value_at(path.grid[k]);
        let rl = i * derivative(&path.l0, k) - omega * path.l0[k] - f.conj();
        let rm = -i * derivative(&path.m0bar, k) - omega * path.m0bar[k] - f;
        out.l = out.l.max(rl.norm());
        out.m = out.m.max(rm.norm());
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ActionMethod {
    /// Full Lagrangian, including `(i/2)(L̇M* - LṀ*)`, with derivatives
    /// taken by finite differences on the grid.
    LagrangianQuadrature,
    /// `-(1/2) ∫ (f L₀ + f* M₀*) dt`, valid on extreme paths.
    ReducedIntegral,
    /// `-(1/2) [L₀(0) g + M₀*(τ) e^{-iωτ} g* - 2ih]`.
    ClosedForm,
}

/// Extreme action `S[L₀, M₀*]` (ħ = 1).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ActionValue {
    pub s: C64,
    pub method: ActionMethod,
    /// Richardson estimate of the quadrature error; zero for the closed form.
    pub error_estimate: f64,
}

pub fn closed_form_action(spec: &ExtremePathSpec, model: &OscillatorModel, gh: &DriveIntegrals) -> Result<ActionValue> {
    check_horizon(spec.tau(), gh)?;
    let phase = C64::from_polar(1.0, -model.omega() * spec.tau());
    let i = C64::new(0.0, 1.0);
    let s = -0.5 * (spec.l0_at_0.value() * gh.g + spec.m0bar_at_tau * phase * gh.g.conj() - 2.0 * i * gh.h);
    Ok(ActionValue {
        s,
        method: ActionMethod::ClosedForm,
        error_estimate: 0.0,
    })
}

/// Integrand samples for the two quadrature routes on a (sub)grid.
fn action_integrand(
    times: &[f64],
    l0: &[C64],
    m0bar: &[C64],
    spacing: f64,
    model: &OscillatorModel,
    method: ActionMethod,
) -> Vec<C64> {
    let drive = model.drive();
    let omega = model.omega();
    match method {
        ActionMethod::ReducedIntegral => times
            .iter()
            .zip(l0.iter().zip(m0bar))
            .map(|(&t, (&l, &m))| {
                let f = drive.value_at(t);
                -0.5 * (f * l + f.conj() * m)
            })
            .collect(),
        ActionMethod::LagrangianQuadrature => {
            let l_dot = derivative4(l0, spacing);
            let m_dot = derivative4(m0bar, spacing);
            let half_i = C64::new(0.0, 0.5);
            (0..times.len())
                .map(|k| {
                    let f = drive.value_at(times[k]);
                    half_i * (l_dot[k] * m0bar[k] - l0[k] * m_dot[k]) - omega * l0[k] * m0bar[k] - f * l0[k] - f.conj() * m0bar[k]
                })
                .collect()
        }
        ActionMethod::ClosedForm => unreachable!("closed form has no integrand"),
    }
}

fn quadrature_action(path: &ExtremePath, model: &OscillatorModel, method: ActionMethod, tol: f64) -> Result<ActionValue> {
    let n = path.len();
    let min_points = match method {
        ActionMethod::LagrangianQuadrature => 9,
        _ => 3,
    };
    if n < min_points {
        return Err(Error::GridTooCoarse {
            estimate: f64::INFINITY,
            tol,
        });
    }
    let h = path.spacing();
    let fine = action_integrand(&path.grid, &path.l0, &path.m0bar, h, model, method);
    let s = simpson(&fine, h);

    // Richardson estimate over the even-indexed bulk [t_0, t_{2m}].
    let bulk = if (n - 1).is_multiple_of(2) { n } else { n - 1 };
    let fine_bulk = simpson(&fine[..bulk], h);
    let pick = |v: &[C64]| -> Vec<C64> { v[..bulk].iter().step_by(2).copied().collect() };
    let coarse_times: Vec<f64> = path.grid[..bulk].iter().step_by(2).copied().collect();
    let coarse = action_integrand(&coarse_times, &pick(&path.l0), &pick(&path.m0bar), 2.0 * h, model, method);
    let estimate = (simpson(&coarse, 2.0 * h) - fine_bulk).norm() / 15.0;
    if estimate > tol {
        return Err(Error::GridTooCoarse { estimate, tol });
    }
    Ok(ActionValue {
        s,
        method,
        error_estimate: estimate,
    })
}

/// `-(1/2) ∫₀^τ (f L₀ + f* M₀*) dt` by composite Simpson on the path grid.
pub fn reduced_action(path: &ExtremePath, model: &OscillatorModel, tol: f64) -> Result<ActionValue> {
    quadrature_action(path, model, ActionMethod::ReducedIntegral, tol)
}

/// `∫₀^τ 𝓛[L₀, M₀*] dt` with derivatives from fourth-order differences.
pub fn lagrangian_action(path: &ExtremePath, model: &OscillatorModel, tol: f64) -> Result<ActionValue> {
    quadrature_action(path, model, ActionMethod::LagrangianQuadrature, tol)
}

/// Extreme action by the requested method. Quadrature routes fail with
/// [`Error::GridTooCoarse`] when their error estimate exceeds `tol`.
pub fn extreme_action(
    path: &ExtremePath,
    spec: &ExtremePathSpec,
    model: &OscillatorModel,
    gh: &DriveIntegrals,
    method: ActionMethod,
    tol: f64,
) -> Result<ActionValue> {
    match method {
        ActionMethod::ClosedForm => closed_form_action(spec, model, gh),
        ActionMethod::ReducedIntegral => reduced_action(path, model, tol),
        ActionMethod::LagrangianQuadrature => lagrangian_action(path, model, tol),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prop2Options {
    pub n_grid: usize,
    pub tol: f64,
}

impl Default for Prop2Options {
    fn default() -> Self {
        Self {
            n_grid: DEFAULT_GRID,
            tol: DEFAULT_TOL,
        }
    }
}

/// Builds `⟨B|U(τ)|A⟩` from an arbitrary extreme-path pair:
///
/// ```text
/// iS[L₀, M₀*] - ½[L₀* δL - L₀ δM*]₀^τ
///   - ½|B - L₀(τ)|² - ½|A - L₀(0)|² + e^{-iωτ}(B - L₀(τ))*(A - L₀(0))
/// ```
///
/// with `δL(0) = A - L₀(0)`, `δL(τ) = B - L₀(τ)`, `δM*(0) = A* - M₀*(0)` and
/// `δM*(τ) = B* - M₀*(τ)`. The action comes from the reduced integral and
/// the endpoint values from the solved path, so no drive integrals enter.
pub fn assemble_prop2(
    q: &PropagatorQuery,
    spec: &ExtremePathSpec,
    model: &OscillatorModel,
    opts: &Prop2Options,
) -> Result<KernelValue> {
    if (q.tau() - spec.tau()).abs() > 1e-12 * q.tau().max(1.0) {
        return Err(Error::HorizonMismatch {
            query: q.tau(),
            integrals: spec.tau(),
        });
    }
    let path = solve_extreme_paths(spec, model, opts.n_grid)?;
    let action = reduced_action(&path, model, opts.tol)?;

    let (a, b) = (q.a.value(), q.b.value());
    let l_start = spec.l0_at_0.value();
    let l_end = path.l0_at_tau();
    let m_start = path.m0bar_at_0();
    let m_end = spec.m0bar_at_tau;

    let dl_start = a - l_start;
    let dl_end = b - l_end;
    let dm_start = a.conj() - m_start;
    let dm_end = b.conj() - m_end;

    let boundary_at = |l: C64, dl: C64, dm: C64| l.conj() * dl - l * dm;
    let boundary = boundary_at(l_end, dl_end, dm_end) - boundary_at(l_start, dl_start, dm_start);

    let phase = C64::from_polar(1.0, -model.omega() * q.tau());
    let i = C64::new(0.0, 1.0);
    let log_value = i * action.s - 0.5 * boundary - 0.5 * dl_end.norm_sqr() - 0.5 * dl_start.norm_sqr()
        + phase * dl_end.conj() * dl_start;
    Ok(KernelValue::from_log(log_value))
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathIndependenceReport {
    pub n_samples: usize,
    pub seed: u64,
    pub reference: KernelValue,
    pub max_relative_deviation: f64,
    pub worst_index: usize,
    pub worst_spec: ExtremePathSpec,
}

/// Uniform point in the disk of the given radius.
fn disk_sample(rng: &mut ChaCha8Rng, radius: f64) -> C64 {
    let r = radius * rng.gen::<f64>().sqrt();
    let theta = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
    C64::from_polar(r, theta)
}

/// Draws `n_samples` specs with `L₀(0)` and `M₀*(τ)` independent and
/// uniform in a disk, and reports the largest relative deviation of
/// [`assemble_prop2`] from the closed-form propagator.
pub fn path_independence_report(
    q: &PropagatorQuery,
    model: &OscillatorModel,
    n_samples: usize,
    seed: u64,
    opts: &Prop2Options,
) -> Result<PathIndependenceReport> {
    path_independence_report_with(&ClosedFormKernel::default(), q, model, n_samples, seed, DEFAULT_SAMPLE_RADIUS, opts)
}

pub fn path_independence_report_with(
    kernel: &ClosedFormKernel,
    q: &PropagatorQuery,
    model: &OscillatorModel,
    n_samples: usize,
    seed: u64,
    radius: f64,
    opts: &Prop2Options,
) -> Result<PathIndependenceReport> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be >= 1".into()));
    }
    let gh = model.drive_integrals(q.tau(), opts.tol)?;
    let reference = kernel.propagator(q, model, &gh)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: Option<(usize, f64, ExtremePathSpec)> = None;
    for index in 0..n_samples {
        let l0 = CoherentLabel::new(disk_sample(&mut rng, radius))?;
        let m0bar = disk_sample(&mut rng, radius);
        let spec = ExtremePathSpec::new(l0, m0bar, q.tau())?;
        let deviation = assemble_prop2(q, &spec, model, opts)?.relative_deviation(&reference);
        if worst.is_none_or(|(_, d, _)| deviation > d) {
            worst = Some((index, deviation, spec));
        }
    }
    let (worst_index, max_relative_deviation, worst_spec) = worst.unwrap();
    Ok(PathIndependenceReport {
        n_samples,
        seed,
        reference,
        max_relative_deviation,
        worst_index,
        worst_spec,
    })
}
