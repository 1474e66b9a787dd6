use serde::Serialize;
use serde_json::{Map, Value};

/// One tolerance check; the process exits nonzero if any fails.
#[derive(Debug, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: String,
    pub parameters: Value,
    pub metrics: Map<String, Value>,
    pub checks: Vec<CheckOutcome>,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

impl RunReport {
    pub fn new(command: &str, parameters: Value) -> Self {
        Self {
            command: command.to_string(),
            parameters,
            metrics: Map::new(),
            checks: Vec::new(),
            passed: true,
            seed: None,
            wall_time_s: None,
        }
    }

    pub fn metric(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("metric serializes");
        self.metrics.insert(key.to_string(), v);
    }

    /// Records `|value − target| <= tolerance`.
    pub fn check_close(&mut self, name: &str, value: f64, target: f64, tolerance: f64) {
        self.push_check(name, value, tolerance, (value - target).abs() <= tolerance);
    }

    /// Records `value >= 1 − tolerance`.
    pub fn check_near_one(&mut self, name: &str, value: f64, tolerance: f64) {
        self.push_check(name, value, tolerance, value >= 1.0 - tolerance);
    }

    /// Records `value <= bound`.
    pub fn check_at_most(&mut self, name: &str, value: f64, bound: f64) {
        self.push_check(name, value, bound, value <= bound);
    }

    fn push_check(&mut self, name: &str, value: f64, tolerance: f64, passed: bool) {
        self.passed &= passed;
        self.checks.push(CheckOutcome { name: name.to_string(), value, tolerance, passed });
    }
}
