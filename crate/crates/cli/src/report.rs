//! JSON result records (format version 1).

use serde::Serialize;

use spassoc_core::global::AssocResult;

#[derive(Debug, Serialize)]
pub struct GlobalReport {
    pub spec_version: u32,
    pub statistic: f64,
    pub kind: &'static str,
    pub variant: &'static str,
    pub vars: Vec<String>,
    pub given: Vec<String>,
    pub null_mean: Option<f64>,
    pub null_variance: Option<f64>,
    pub n: usize,
    pub s0: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pseudo_p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicates: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl GlobalReport {
    pub fn new(result: &AssocResult, vars: Vec<String>, given: Vec<String>) -> Self {
        Self {
            spec_version: 1,
            statistic: result.statistic,
            kind: result.kind.as_str(),
            variant: result.variant.as_str(),
            vars,
            given,
            null_mean: result.null_mean,
            null_variance: result.null_variance,
            n: result.n,
            s0: result.s0,
            pseudo_p: result.pseudo_p,
            replicates: result.replicates,
            seed: None,
        }
    }
}
