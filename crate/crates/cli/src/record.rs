//! Self-describing result records.

use cspath_core::C64;
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};
use serde_json::{json, Value};

use crate::config::RunConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    ToleranceViolation,
    Error,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::ToleranceViolation => 1,
            Status::Error => 2,
        }
    }

    /// The worse of two statuses.
    pub fn worst(self, other: Status) -> Status {
        if other.exit_code() > self.exit_code() {
            other
        } else {
            self
        }
    }
}

/// Named outputs in insertion order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Outputs(Vec<(String, Value)>);

impl Outputs {
    pub fn real(&mut self, name: &str, v: f64) -> &mut Self {
        self.value(name, json!(v))
    }

    pub fn complex(&mut self, name: &str, z: C64) -> &mut Self {
        self.value(name, complex_json(z))
    }

    pub fn value(&mut self, name: &str, v: Value) -> &mut Self {
        self.0.push((name.to_string(), v));
        self
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.0.iter().find(|(k, _)| k == name).map(|(_, v)| v)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Serialize for Outputs {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

pub fn complex_json(z: C64) -> Value {
    json!({"re": z.re, "im": z.im})
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultRecord {
    pub command: String,
    /// The resolved config, absent only when the config could not be read.
    pub config: Option<RunConfig>,
    pub outputs: Outputs,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl ResultRecord {
    pub fn new(command: &str, config: Option<RunConfig>, outputs: Outputs, status: Status) -> Self {
        Self {
            command: command.to_string(),
            config,
            outputs,
            status,
            message: None,
        }
    }

    pub fn error(command: &str, config: Option<RunConfig>, message: String) -> Self {
        Self {
            command: command.to_string(),
            config,
            outputs: Outputs::default(),
            status: Status::Error,
            message: Some(message),
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("records are always serializable")
    }
}

/// One threshold comparison inside a verification record.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `value <= threshold`; NaN never passes.
    pub fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            threshold,
            pass: value <= threshold,
        }
    }
}
