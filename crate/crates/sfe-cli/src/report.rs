//! JSON report schema. The `stable` section is a pure function of the
//! flags and seed (byte-identical across reruns); wall-clock data lives in
//! the separate `timing` section.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub stable: StableSection,
    pub timing: TimingSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StableSection {
    pub command: String,
    /// Echo of the effective flag values, sorted by flag name.
    pub flags: BTreeMap<String, String>,
    pub seed: u64,
    pub results: Vec<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aggregate: Option<Aggregate>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub metric: String,
    pub mean: f64,
    /// Population standard deviation.
    pub stddev: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct TimingSection {
    pub per_instance_ms: Vec<u64>,
    pub total_ms: u64,
}

impl Report {
    pub fn new(command: &str, flags: BTreeMap<String, String>, seed: u64) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            stable: StableSection {
                command: command.to_string(),
                flags,
                seed,
                results: Vec::new(),
                aggregate: None,
                passed: true,
            },
            timing: TimingSection::default(),
        }
    }

    /// The byte-stable portion, serialized.
    pub fn stable_json(&self) -> String {
        serde_json::to_string(&self.stable).expect("report serializes")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub fn aggregate_of(metric: &str, values: &[f64]) -> Aggregate {
    let count = values.len();
    let mean = if count == 0 {
        0.0
    } else {
        values.iter().sum::<f64>() / count as f64
    };
    let var = if count == 0 {
        0.0
    } else {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / count as f64
    };
    Aggregate {
        metric: metric.to_string(),
        mean,
        stddev: var.sqrt(),
        count,
    }
}
