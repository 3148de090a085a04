//! Report assembly. Bodies are built as `serde_json::Value` objects whose keys
//! serialize sorted, so a body depends only on its inputs.

use hypereg::OracleMode;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::fail::Failure;

/// Slack allowed when a claimed bound is compared with what was achieved.
pub const TOL: f64 = 1e-9;

/// JSON number, with non-finite values spelled out.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

/// Inverse of [`num`].
pub fn read_num(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => match s.as_str() {
            "inf" => Some(f64::INFINITY),
            "-inf" => Some(f64::NEG_INFINITY),
            "nan" => Some(f64::NAN),
            _ => None,
        },
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    /// `achieved ≤ bound`.
    Le,
    /// `achieved ≥ bound`.
    Ge,
    /// `achieved > bound`, strictly.
    Gt,
    /// `|achieved − bound| ≤ TOL·max(1, |bound|)`.
    Eq,
}

impl Sense {
    pub fn as_str(self) -> &'static str {
        match self {
            Sense::Le => "le",
            Sense::Ge => "ge",
            Sense::Gt => "gt",
            Sense::Eq => "eq",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "le" => Some(Sense::Le),
            "ge" => Some(Sense::Ge),
            "gt" => Some(Sense::Gt),
            "eq" => Some(Sense::Eq),
            _ => None,
        }
    }

    pub fn holds(self, achieved: f64, bound: f64) -> bool {
        match self {
            Sense::Le => achieved <= bound + TOL,
            Sense::Ge => achieved >= bound - TOL,
            Sense::Gt => achieved > bound,
            Sense::Eq => (achieved - bound).abs() <= TOL * bound.abs().max(1.0),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Certificate {
    pub name: String,
    pub bound: f64,
    pub achieved: f64,
    pub sense: Sense,
    pub mode: OracleMode,
    pub holds: bool,
    pub witness: Value,
}

impl Certificate {
    pub fn new(name: impl Into<String>, sense: Sense, bound: f64, achieved: f64, mode: OracleMode, witness: Value) -> Self {
        Self { name: name.into(), bound, achieved, sense, mode, holds: sense.holds(achieved, bound), witness }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "name": self.name,
            "bound": num(self.bound),
            "achieved": num(self.achieved),
            "sense": self.sense.as_str(),
            "oracleMode": self.mode.to_string(),
            "holds": self.holds,
            "witness": self.witness,
        })
    }
}

/// What a subcommand produced.
#[derive(Debug, Default)]
pub struct Body {
    pub certificates: Vec<Certificate>,
    pub details: Map<String, Value>,
    /// A failure that still comes with results worth reporting.
    pub failure: Option<Failure>,
}

impl Body {
    pub fn push(&mut self, c: Certificate) {
        self.certificates.push(c);
    }

    pub fn detail(&mut self, key: &str, v: Value) {
        self.details.insert(key.to_string(), v);
    }
}

/// SHA-256 over the instance bytes followed by the canonical inputs echo.
pub fn digest(instance: Option<&[u8]>, inputs: &Value) -> String {
    let mut h = Sha256::new();
    if let Some(bytes) = instance {
        h.update(bytes);
    }
    h.update(inputs.to_string().as_bytes());
    hex::encode(h.finalize())
}

/// The full report and its exit code.
pub fn assemble(stage: &str, instance: Option<&[u8]>, inputs: Value, outcome: Result<Body, Failure>) -> (Value, i32) {
    let digest = digest(instance, &inputs);
    let (body, failure) = match outcome {
        Ok(mut b) => {
            let f = b.failure.take().or_else(|| {
                b.certificates
                    .iter()
                    .find(|c| !c.holds)
                    .map(|c| Failure::Violation(format!("certificate {} does not hold", c.name)))
            });
            (b, f)
        }
        Err(f) => (Body::default(), Some(f)),
    };
    let (code, status) = match &failure {
        None => (0, "certified"),
        Some(f) => (f.exit_code(), f.status()),
    };
    let report = json!({
        "stage": stage,
        "inputsDigest": digest,
        "inputs": inputs,
        "exitCode": code,
        "status": status,
        "certificates": body.certificates.iter().map(Certificate::to_json).collect::<Vec<_>>(),
        "details": Value::Object(body.details),
        "error": failure.as_ref().map(|f| Value::String(f.message().to_string())).unwrap_or(Value::Null),
    });
    (report, code)
}
