//! Machine-readable run reports: line-delimited JSON records plus a
//! delimited summary table. One record per verdict; all raw quantities ride
//! along at full precision.

use crate::gaussbonnet::{Verdict, VerdictStatus};
use crate::Result;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, serde::Serialize)]
pub struct VerdictRecord {
    pub suite: String,
    pub check: String,
    pub value: f64,
    pub target: f64,
    pub tolerance: f64,
    pub error_estimate: f64,
    pub verdict: VerdictStatus,
    /// Additional named quantities backing the verdict.
    pub quantities: BTreeMap<String, f64>,
    pub config_hash: String,
    pub seed: u64,
    /// Unix seconds; the only field allowed to differ between identical runs.
    pub timestamp: u64,
}

impl VerdictRecord {
    pub fn from_verdict(
        suite: &str,
        v: &Verdict,
        quantities: BTreeMap<String, f64>,
        config_hash: &str,
        seed: u64,
        timestamp: u64,
    ) -> Self {
        VerdictRecord {
            suite: suite.to_string(),
            check: v.name.clone(),
            value: v.value,
            target: v.target,
            tolerance: v.tolerance,
            error_estimate: v.error_estimate,
            verdict: v.status,
            quantities,
            config_hash: config_hash.to_string(),
            seed,
            timestamp,
        }
    }
}

pub fn config_hash(config_text: &str) -> String {
    use sha2::Digest;
    hex::encode(sha2::Sha256::digest(config_text.as_bytes()))
}

pub fn write_jsonl(path: &Path, records: &[VerdictRecord]) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    for r in records {
        let line = serde_json::to_string(r).expect("record serializes");
        writeln!(f, "{line}")?;
    }
    Ok(())
}

fn status_str(s: VerdictStatus) -> &'static str {
    match s {
        VerdictStatus::Pass => "pass",
        VerdictStatus::Fail => "fail",
        VerdictStatus::Inconclusive => "inconclusive",
    }
}

pub fn write_csv(path: &Path, records: &[VerdictRecord]) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(
        f,
        "suite,check,verdict,value,target,tolerance,error_estimate"
    )?;
    for r in records {
        writeln!(
            f,
            "{},{},{},{:.17e},{:.17e},{:.3e},{:.3e}",
            r.suite,
            r.check,
            status_str(r.verdict),
            r.value,
            r.target,
            r.tolerance,
            r.error_estimate
        )?;
    }
    Ok(())
}

/// Human-readable verdict table for stdout.
pub fn render_table(records: &[VerdictRecord]) -> String {
    let mut out = String::new();
    let wide = records
        .iter()
        .map(|r| r.suite.len() + r.check.len() + 1)
        .max()
        .unwrap_or(20)
        .max(20);
    for r in records {
        let name = format!("{}/{}", r.suite, r.check);
        out.push_str(&format!(
            "{name:<wide$}  {:<12}  value {:+.6e}  target {:+.6e}  tol {:.1e}\n",
            status_str(r.verdict),
            r.value,
            r.target,
            r.tolerance,
        ));
    }
    out
}

pub fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}
