use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::sampler::EngineUsed;

use super::constants::{BoundConstants, Constant};

/// Allowed negative slack for exact-engine reports.
pub const EXACT_TOLERANCE: f64 = 1e-9;

/// One link of a chain of inequalities, `lhs <= rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub id: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

impl StepReport {
    pub fn new(id: &str, lhs: f64, rhs: f64) -> Self {
        Self {
            id: id.to_string(),
            lhs,
            rhs,
            slack: rhs - lhs,
        }
    }
}

/// Both sides of an inequality `lhs <= rhs` on concrete inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub id: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`; nonnegative when the bound holds.
    pub slack: f64,
    /// Negative slack accepted as numerical or statistical noise.
    pub tolerance: f64,
    pub holds: bool,
    pub engine: EngineUsed,
    pub constants: BTreeMap<String, Constant>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub steps: Vec<StepReport>,
    /// `(parameter, value)` pairs behind monotonicity checks.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub series: Vec<[f64; 2]>,
    pub inputs: serde_json::Value,
    pub inputs_digest: String,
}

impl BoundReport {
    pub fn new(
        id: &str,
        lhs: f64,
        rhs: f64,
        tolerance: f64,
        engine: EngineUsed,
        inputs: serde_json::Value,
    ) -> Self {
        let slack = rhs - lhs;
        Self {
            id: id.to_string(),
            lhs,
            rhs,
            slack,
            tolerance,
            holds: slack >= -tolerance,
            engine,
            constants: BTreeMap::new(),
            steps: vec![],
            series: vec![],
            inputs_digest: digest(&inputs),
            inputs,
        }
    }

    pub fn with_constants(mut self, constants: &BoundConstants) -> Self {
        self.constants = constants
            .named()
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        self
    }

    /// Attaches chain steps; the report holds only if every step holds too.
    pub fn with_steps(mut self, steps: Vec<StepReport>) -> Self {
        let tol = self.tolerance;
        self.holds = self.holds && steps.iter().all(|s| s.slack >= -tol);
        self.steps = steps;
        self
    }

    pub fn with_series(mut self, series: Vec<[f64; 2]>) -> Self {
        self.series = series;
        self
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("reports serialize")
    }
}

/// Hex SHA-256 of the compact JSON encoding.
pub fn digest(value: &serde_json::Value) -> String {
    hex::encode(Sha256::digest(value.to_string().as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn orientation_and_digest() {
        let r = BoundReport::new("x", 1.0, 0.5, 1e-9, EngineUsed::Exact, json!({"eps": 1.0}));
        assert_eq!(r.slack, -0.5);
        assert!(!r.holds);
        let again = BoundReport::new("x", 0.0, 0.0, 1e-9, EngineUsed::Exact, json!({"eps": 1.0}));
        assert_eq!(r.inputs_digest, again.inputs_digest);
        assert_eq!(r.inputs_digest.len(), 64);
        let back: BoundReport = serde_json::from_str(&r.to_json_line()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn failing_step_fails_the_report() {
        let r = BoundReport::new("x", 0.0, 1.0, 1e-9, EngineUsed::Exact, json!({}))
            .with_steps(vec![StepReport::new("a", 2.0, 1.0), StepReport::new("b", -1.0, 0.0)]);
        assert!(!r.holds);
    }
}
