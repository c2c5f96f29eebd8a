//! Reproducible experiments. Each returns an [`ExperimentReport`] whose
//! verdict is derived from the recorded measurements only.

pub mod config;
pub mod corollaries;
pub mod fit;
pub mod kernels;
pub mod report;
pub mod theorem1;
pub mod theorem2;

pub use config::{ExperimentConfig, ExperimentKind, PhiSpec, ProbeSpec, SchemeKind};
pub use corollaries::corollary_suite;
pub use kernels::{verify_all, verify_kernel_l1_sandwich, verify_kernels, verify_lemma1};
pub use report::{Case, Check, ExperimentReport, Verdict};
pub use theorem1::theorem1_weak_type;
pub use theorem2::{theorem2_growth, theorem2_weak_divergence};

use serde_json::Value;

use crate::error::Result;
use crate::group::Resolution;

/// Concatenates sub-reports; case rows gain an `experiment` column and check
/// names a `<sub-report>/` prefix.
pub fn merge(name: &str, config: Value, seed: u64, parts: impl IntoIterator<Item = ExperimentReport>) -> ExperimentReport {
    let mut out = ExperimentReport::new(name, config, seed);
    for part in parts {
        for mut case in part.cases {
            let mut params = serde_json::Map::new();
            params.insert("experiment".into(), Value::String(part.name.clone()));
            params.append(&mut case.params);
            case.params = params;
            out.cases.push(case);
        }
        for (k, v) in part.summary {
            out.summary.insert(format!("{}/{k}", part.name), v);
        }
        for (k, v) in part.series {
            out.series.insert(format!("{}/{k}", part.name), v);
        }
        for c in part.verdict.checks {
            out.verdict.check(format!("{}/{}", part.name, c.name), c.pass, c.detail);
        }
    }
    out
}

/// Runs the experiment a configuration names. Several resolutions give one
/// sub-report each, merged under `m=<resolution>`.
pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let per_resolution = |f: fn(Resolution) -> Result<ExperimentReport>| -> Result<ExperimentReport> {
        if let [m] = cfg.resolutions[..] {
            let mut r = f(Resolution::new(m)?)?;
            r.config = cfg.to_value();
            return Ok(r);
        }
        let parts = cfg
            .resolutions
            .iter()
            .map(|&m| {
                let mut r = f(Resolution::new(m)?)?;
                r.name = format!("m={m}");
                Ok(r)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(merge(cfg.name.as_str(), cfg.to_value(), cfg.seed, parts))
    };
    match cfg.name {
        ExperimentKind::Kernels => per_resolution(verify_kernels),
        ExperimentKind::Lemma1 => per_resolution(verify_lemma1),
        ExperimentKind::Sandwich => per_resolution(verify_kernel_l1_sandwich),
        ExperimentKind::VerifyAll => per_resolution(verify_all),
        ExperimentKind::Thm1 => theorem1_weak_type(cfg),
        ExperimentKind::Thm2Growth => theorem2_growth(cfg),
        ExperimentKind::Thm2Divergence => theorem2_weak_divergence(cfg),
        ExperimentKind::Corollaries => corollaries::run(cfg),
    }
}
