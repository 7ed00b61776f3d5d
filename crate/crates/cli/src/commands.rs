//! The four subcommands. Each takes a resolved [`RunConfig`] and returns
//! records; formatting lives in [`crate::output`].

use cspath_core::extreme_path::path_independence_report_with;
use cspath_core::kernel::{compose_kernels_with, unitarity_defect_with};
use cspath_core::numerics::log_log_slope;
use cspath_core::oracles::{analytic_closure, fock_kernel, lattice_kernel, schrodinger_residual_with, FockOptions, LatticeConfig};
use cspath_core::{ClosedFormKernel, DriveIntegrals, IntegralMethod, Prop2Options};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{RunConfig, SweepPoint};
use crate::record::{Check, Outputs, ResultRecord, Status};
use crate::CliError;

fn method_name(m: IntegralMethod) -> &'static str {
    match m {
        IntegralMethod::ClosedForm => "closed_form",
        IntegralMethod::OdeQuadrature => "ode_quadrature",
    }
}

fn or_error(command: &str, cfg: &RunConfig, result: Result<ResultRecord, CliError>) -> ResultRecord {
    result.unwrap_or_else(|e| ResultRecord::error(command, Some(cfg.clone()), e.to_string()))
}

pub fn cmd_kernel(cfg: &RunConfig) -> ResultRecord {
    or_error("kernel", cfg, kernel_record(cfg))
}

struct KernelOutputs {
    gh: DriveIntegrals,
    log_kernel: cspath_core::C64,
}

fn kernel_values(cfg: &RunConfig) -> Result<KernelOutputs, CliError> {
    let model = cfg.model()?;
    let q = cfg.query()?;
    let gh = model.drive_integrals(q.tau(), cfg.options.tol)?;
    let k = ClosedFormKernel::default().propagator(&q, &model, &gh)?;
    Ok(KernelOutputs {
        gh,
        log_kernel: k.log_value,
    })
}

fn kernel_record(cfg: &RunConfig) -> Result<ResultRecord, CliError> {
    let KernelOutputs { gh, log_kernel } = kernel_values(cfg)?;
    let kernel = log_kernel.exp();
    let mut out = Outputs::default();
    out.complex("g", gh.g)
        .complex("h", gh.h)
        .complex("log_kernel", log_kernel)
        .complex("kernel", kernel)
        .real("abs_kernel", log_kernel.re.exp())
        .real("identity_defect", gh.identity_defect())
        .value("integral_method", json!(method_name(gh.method)))
        .value("integrator_steps", json!(gh.steps));
    Ok(ResultRecord::new("kernel", Some(cfg.clone()), out, Status::Ok))
}

pub fn cmd_verify(cfg: &RunConfig) -> ResultRecord {
    cmd_verify_with(cfg, &ClosedFormKernel::default())
}

/// Runs every check against `kernel`, which is the physical kernel except in
/// mutation tests.
pub fn cmd_verify_with(cfg: &RunConfig, kernel: &ClosedFormKernel) -> ResultRecord {
    or_error("verify", cfg, verify_record(cfg, kernel))
}

fn verify_record(cfg: &RunConfig, kernel: &ClosedFormKernel) -> Result<ResultRecord, CliError> {
    let model = cfg.model()?;
    let q = cfg.query()?;
    let o = &cfg.options;
    let th = &o.thresholds;
    let tau = q.tau();
    let gh = model.drive_integrals(tau, o.tol)?;
    let reference = kernel.propagator(&q, &model, &gh)?;

    let prop2 = Prop2Options {
        n_grid: o.n_grid,
        tol: o.tol,
    };
    let paths = path_independence_report_with(kernel, &q, &model, o.path_samples, o.seed, o.sample_radius, &prop2)?;

    let unitarity = unitarity_defect_with(kernel, q.a, &model, &gh);

    let residual = schrodinger_residual_with(kernel, &q, &model, o.fd_step)?;
    let closure = analytic_closure(&q, &model, &gh)?.norm();

    let mut identity = gh.identity_defect();
    let mut composition: f64 = 0.0;
    let mut splits = Vec::with_capacity(o.split_points);
    for k in 1..=o.split_points {
        let t_split = tau * k as f64 / (o.split_points + 1) as f64;
        let first = model.drive_integrals(t_split, o.tol)?;
        let second = model.shifted(t_split).drive_integrals(tau - t_split, o.tol)?;
        identity = identity.max(first.identity_defect()).max(second.identity_defect());
        let glued = compose_kernels_with(kernel, &q, &model, t_split, o.tol)?;
        let dev = glued.relative_deviation(&reference);
        composition = composition.max(dev);
        splits.push(json!({"t_split": t_split, "relative_deviation": dev}));
    }

    let fock_opts = FockOptions {
        dim: cfg.fock_dim(),
        dt: o.fock_dt,
        tail_tol: o.fock_tail_tol,
        norm_tol: o.fock_norm_tol,
    };
    let fock = fock_kernel(&q, &model, &fock_opts)?.relative_deviation(&reference);

    let checks = [
        Check::at_most("path_independence", paths.max_relative_deviation, th.path_independence),
        Check::at_most("unitarity", unitarity, th.unitarity),
        Check::at_most("schrodinger_residual", residual.relative_residual, th.schrodinger),
        Check::at_most("analytic_closure", closure, th.closure),
        Check::at_most("composition", composition, th.composition),
        Check::at_most("fock_oracle", fock, th.fock),
        Check::at_most("identity", identity, th.identity),
    ];
    let status = if checks.iter().all(|c| c.pass) {
        Status::Ok
    } else {
        Status::ToleranceViolation
    };

    let mut out = Outputs::default();
    out.complex("log_kernel", reference.log_value)
        .complex("g", gh.g)
        .complex("h", gh.h)
        .real("path_independence_max_relative_deviation", paths.max_relative_deviation)
        .value("path_independence_worst_index", json!(paths.worst_index))
        .value(
            "path_independence_worst_spec",
            json!({
                "l0_at_0": crate::record::complex_json(paths.worst_spec.l0_at_0.value()),
                "m0bar_at_tau": crate::record::complex_json(paths.worst_spec.m0bar_at_tau),
            }),
        )
        .real("unitarity_defect", unitarity)
        .complex("schrodinger_residual", residual.residual)
        .real("schrodinger_relative_residual", residual.relative_residual)
        .real("analytic_closure", closure)
        .real("composition_max_relative_deviation", composition)
        .value("composition_splits", Value::Array(splits))
        .real("fock_relative_deviation", fock)
        .value("fock_dim", json!(fock_opts.dim))
        .real("identity_defect", identity)
        .value("checks", serde_json::to_value(&checks).expect("checks serialize"));
    let mut rec = ResultRecord::new("verify", Some(cfg.clone()), out, status);
    if status != Status::Ok {
        let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
        rec.message = Some(format!("failed checks: {}", failed.join(", ")));
    }
    Ok(rec)
}

/// One row of a convergence table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub study: &'static str,
    pub step: f64,
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergeOutcome {
    pub record: ResultRecord,
    pub rows: Vec<ConvergenceRow>,
}

/// Fitted order over the points above the rounding floor, `None` with fewer
/// than two such points.
fn fitted_order(steps: &[f64], errors: &[f64], floor: f64) -> Option<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = steps
        .iter()
        .zip(errors)
        .filter(|(_, &e)| e > floor)
        .map(|(&s, &e)| (s, e))
        .unzip();
    (xs.len() >= 2).then(|| log_log_slope(&xs, &ys))
}

pub fn cmd_converge(cfg: &RunConfig) -> ConvergeOutcome {
    match converge(cfg) {
        Ok(outcome) => outcome,
        Err(e) => ConvergeOutcome {
            record: ResultRecord::error("converge", Some(cfg.clone()), e.to_string()),
            rows: Vec::new(),
        },
    }
}

fn converge(cfg: &RunConfig) -> Result<ConvergeOutcome, CliError> {
    let model = cfg.model()?;
    let q = cfg.query()?;
    let o = &cfg.options;
    let th = &o.thresholds;
    let gh = model.drive_integrals(q.tau(), o.tol)?;
    let reference = ClosedFormKernel::default().propagator(&q, &model, &gh)?;
    let mut rows = Vec::new();

    let mut lattice_errors = Vec::with_capacity(o.lattice_slices.len());
    for &n in &o.lattice_slices {
        let err = lattice_kernel(&q, &model, &LatticeConfig::new(n)?)?.relative_deviation(&reference);
        lattice_errors.push(err);
        rows.push(ConvergenceRow {
            study: "lattice",
            step: n as f64,
            error: err,
        });
    }
    let slices: Vec<f64> = o.lattice_slices.iter().map(|&n| n as f64).collect();
    let exact_chain = lattice_errors.iter().all(|&e| e <= th.exact_chain);
    // error ∝ N^{-order}
    let lattice_order = fitted_order(&slices, &lattice_errors, th.fit_floor).map(|s| -s);
    let lattice_pass = o.lattice_slices.is_empty()
        || exact_chain
        || lattice_order.is_some_and(|p| p >= th.lattice_order[0] && p <= th.lattice_order[1]);

    let mut fock_errors = Vec::with_capacity(o.fock_dt_sweep.len());
    for &dt in &o.fock_dt_sweep {
        let opts = FockOptions {
            dim: cfg.fock_dim(),
            dt,
            tail_tol: o.fock_tail_tol,
            norm_tol: o.fock_sweep_norm_tol,
        };
        let err = fock_kernel(&q, &model, &opts)?.relative_deviation(&reference);
        fock_errors.push(err);
        rows.push(ConvergenceRow {
            study: "fock",
            step: dt,
            error: err,
        });
    }
    let fock_order = fitted_order(&o.fock_dt_sweep, &fock_errors, th.fit_floor);
    let fock_pass = match fock_order {
        Some(p) => p >= th.fock_order[0] && p <= th.fock_order[1],
        // nothing above the rounding floor: the stepper is exact here
        None => fock_errors.iter().all(|&e| e <= th.fock),
    };

    let table = |study: &str| -> Value {
        rows.iter()
            .filter(|r| r.study == study)
            .map(|r| json!({"step": r.step, "error": r.error}))
            .collect()
    };
    let mut out = Outputs::default();
    out.complex("log_kernel", reference.log_value)
        .value("lattice", table("lattice"))
        .value("lattice_exact_chain", json!(exact_chain))
        .value("lattice_order", json!(lattice_order))
        .value("lattice_pass", json!(lattice_pass))
        .value("fock", table("fock"))
        .value("fock_dim", json!(cfg.fock_dim()))
        .value("fock_order", json!(fock_order))
        .value("fock_pass", json!(fock_pass));
    let status = if lattice_pass && fock_pass {
        Status::Ok
    } else {
        Status::ToleranceViolation
    };
    let mut record = ResultRecord::new("converge", Some(cfg.clone()), out, status);
    if status != Status::Ok {
        record.message = Some(format!(
            "convergence order out of range: lattice {lattice_order:?} (expected {:?}), fock {fock_order:?} (expected {:?})",
            th.lattice_order, th.fock_order
        ));
    }
    Ok(ConvergeOutcome { record, rows })
}

/// One grid point of a sweep, in either output form.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub point: SweepPoint,
    pub record: ResultRecord,
}

/// Kernel records for every grid point, computed in parallel and returned in
/// grid order. Stops at the first failing point, whose error record is the
/// last element.
pub fn cmd_sweep(cfg: &RunConfig) -> Vec<SweepRow> {
    let points = cfg.sweep_points();
    let records: Vec<ResultRecord> = points.par_iter().map(|p| cmd_kernel(&p.config)).collect();
    let mut rows = Vec::with_capacity(points.len());
    for (point, record) in points.into_iter().zip(records) {
        let failed = record.status == Status::Error;
        rows.push(SweepRow { point, record });
        if failed {
            break;
        }
    }
    rows
}
