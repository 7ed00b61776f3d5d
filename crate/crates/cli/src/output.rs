//! Rendering records as record-per-line JSON or CSV tables.

use serde_json::{json, Value};

use crate::commands::{ConvergeOutcome, SweepRow};
use crate::record::{Outputs, ResultRecord, Status};
use crate::Format;

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    let bytes = w.into_inner().expect("in-memory writer never fails");
    String::from_utf8(bytes).expect("csv output is utf-8")
}

/// Shortest round-trip form, in exponent notation away from order one.
fn num(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-4..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

/// The `(N, |error|)` / `(dt, |error|)` table as CSV, or the record as JSON.
pub fn converge(outcome: &ConvergeOutcome, format: Format) -> (String, Status) {
    let status = outcome.record.status;
    match format {
        Format::Json => (outcome.record.to_json_line() + "\n", status),
        Format::Csv => {
            let mut w = csv_writer();
            w.write_record(["study", "step", "error"]).unwrap();
            for row in &outcome.rows {
                w.write_record([row.study.to_string(), num(row.step), num(row.error)]).unwrap();
            }
            if status == Status::Error {
                let msg = outcome.record.message.clone().unwrap_or_default();
                w.write_record(["error".to_string(), String::new(), msg]).unwrap();
            }
            (finish(w), status)
        }
    }
}

const SWEEP_HEADER: [&str; 19] = [
    "index",
    "omega",
    "tau",
    "amplitude",
    "a_re",
    "a_im",
    "b_re",
    "b_im",
    "g_re",
    "g_im",
    "h_re",
    "h_im",
    "log_kernel_re",
    "log_kernel_im",
    "kernel_re",
    "kernel_im",
    "abs_kernel",
    "status",
    "message",
];

fn component(outputs: &Outputs, name: &str, part: &str) -> String {
    match outputs.get(name) {
        Some(Value::Object(map)) => map.get(part).and_then(Value::as_f64).map(num).unwrap_or_default(),
        _ => String::new(),
    }
}

fn status_name(s: Status) -> &'static str {
    match s {
        Status::Ok => "ok",
        Status::ToleranceViolation => "tolerance_violation",
        Status::Error => "error",
    }
}

/// Sweep rows in grid order. A failing point ends the output with a
/// failure marker: an `error` row in CSV, a `sweep` error record in JSON.
pub fn sweep(rows: &[SweepRow], format: Format) -> (String, Status) {
    let status = rows.iter().fold(Status::Ok, |s, r| s.worst(r.record.status));
    let failed = rows.last().filter(|r| r.record.status == Status::Error);
    match format {
        Format::Json => {
            let mut text = String::new();
            for row in rows {
                text += &row.record.to_json_line();
                text.push('\n');
            }
            if let Some(row) = failed {
                let mut out = Outputs::default();
                out.value("failed_index", json!(row.point.index)).value("completed", json!(rows.len() - 1));
                let mut marker = ResultRecord::new("sweep", None, out, Status::Error);
                marker.message = Some(format!(
                    "sweep aborted at point {}: {}",
                    row.point.index,
                    row.record.message.as_deref().unwrap_or("")
                ));
                text += &marker.to_json_line();
                text.push('\n');
            }
            (text, status)
        }
        Format::Csv => {
            let mut w = csv_writer();
            w.write_record(SWEEP_HEADER).unwrap();
            for row in rows {
                let p = &row.point;
                let o = &row.record.outputs;
                let abs = o.get("abs_kernel").and_then(Value::as_f64).map(num).unwrap_or_default();
                w.write_record([
                    p.index.to_string(),
                    num(p.omega),
                    num(p.tau),
                    num(p.amplitude),
                    num(p.a.re),
                    num(p.a.im),
                    num(p.b.re),
                    num(p.b.im),
                    component(o, "g", "re"),
                    component(o, "g", "im"),
                    component(o, "h", "re"),
                    component(o, "h", "im"),
                    component(o, "log_kernel", "re"),
                    component(o, "log_kernel", "im"),
                    component(o, "kernel", "re"),
                    component(o, "kernel", "im"),
                    abs,
                    status_name(row.record.status).to_string(),
                    row.record.message.clone().unwrap_or_default(),
                ])
                .unwrap();
            }
            (finish(w), status)
        }
    }
}
