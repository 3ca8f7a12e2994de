use nigmg::nodemodel::HyperParams;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub mode: String,
    pub initial_log_evidence: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionSummary {
    pub delta: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fdr_target: Option<f64>,
    /// `[j, k]` of every called node.
    pub called: Vec<[u32; 2]>,
    pub nfp: f64,
    pub fdr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorSummary {
    pub name: String,
    pub levels: Vec<String>,
    pub pjap: f64,
    pub decision: DecisionSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmapRow {
    pub j: u32,
    pub k: u32,
    pub baseline: f64,
    /// One entry per factor, in design order.
    pub factors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub kind: String,
    /// Relative to the output directory.
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub wavelet: String,
    pub observations: usize,
    pub length: usize,
    pub hyperparameters: HyperParams<f64>,
    pub log_evidence: f64,
    pub fit: FitSummary,
    pub baseline_pjap: f64,
    pub factors: Vec<FactorSummary>,
    pub pmap: Vec<PmapRow>,
    pub outputs: Vec<OutputFile>,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

/// Output of the `fit` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitFile {
    pub schema_version: u32,
    pub hyperparameters: HyperParams<f64>,
    pub log_evidence: f64,
    pub fit: FitSummary,
}
