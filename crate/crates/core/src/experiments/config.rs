//! Experiment configuration: one JSON document per run.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::analysis::PExponent;
use crate::error::{Error, Result};
use crate::operators::{PhiTable, Subsequence, WeightScheme};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Kernels,
    Lemma1,
    Sandwich,
    VerifyAll,
    Thm1,
    Thm2Growth,
    Thm2Divergence,
    Corollaries,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Kernels => "kernels",
            ExperimentKind::Lemma1 => "lemma1",
            ExperimentKind::Sandwich => "sandwich",
            ExperimentKind::VerifyAll => "verify-all",
            ExperimentKind::Thm1 => "thm1",
            ExperimentKind::Thm2Growth => "thm2-growth",
            ExperimentKind::Thm2Divergence => "thm2-divergence",
            ExperimentKind::Corollaries => "corollaries",
        }
    }
}

/// An exponent written as a number or as a fraction string such as `"1/3"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PValue {
    Number(f64),
    Text(String),
}

impl PValue {
    pub fn parse(&self) -> Result<PExponent> {
        match self {
            PValue::Number(p) => PExponent::new(*p),
            PValue::Text(s) => parse_p(s),
        }
    }
}

/// Parses `"0.5"` or `"a/b"`.
pub fn parse_p(s: &str) -> Result<PExponent> {
    let bad = || Error::Parse(format!("not an exponent: {s:?}"));
    let p = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| bad())?;
            let b: f64 = b.trim().parse().map_err(|_| bad())?;
            a / b
        }
        None => s.trim().parse().map_err(|_| bad())?,
    };
    PExponent::new(p)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    #[default]
    Rho,
    Poly,
    Unit,
}

impl SchemeKind {
    pub fn scheme(self, p: PExponent) -> WeightScheme {
        match self {
            SchemeKind::Rho => WeightScheme::Rho { p },
            SchemeKind::Poly => WeightScheme::Poly { p },
            SchemeKind::Unit => WeightScheme::Unit,
        }
    }
}

/// The weight `φ` of the weak-divergence experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhiSpec {
    /// `φ ≡ 1`.
    One,
    /// `φ(n) = 2^(ρ(n)(1/p-1))`, tabulated at the probe indices.
    RhoWeight,
    Table(PhiTable),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    pub n: u32,
    pub s: u32,
}

fn default_trials() -> u32 {
    1
}
fn default_seed() -> u64 {
    42
}
fn default_depth() -> u32 {
    3
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: ExperimentKind,
    #[serde(default)]
    pub p: Vec<PValue>,
    /// Group resolutions, or atom support levels for `thm1`.
    #[serde(default)]
    pub resolutions: Vec<u32>,
    #[serde(default = "default_trials")]
    pub trials: u32,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub scheme: SchemeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subsequence: Option<Subsequence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// `thm1`: atoms on `I_M` live at resolution `M + atom_depth`.
    #[serde(default = "default_depth")]
    pub atom_depth: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probes: Option<Vec<ProbeSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<PhiSpec>,
}

const FIELDS: &[&str] = &[
    "name",
    "p",
    "resolutions",
    "trials",
    "seed",
    "scheme",
    "subsequence",
    "output",
    "atom_depth",
    "probes",
    "phi",
];

/// Largest resolution of the desk-scale experiments.
pub const MAX_EXPERIMENT_RESOLUTION: u32 = 14;

impl ExperimentConfig {
    pub fn new(name: ExperimentKind) -> Self {
        ExperimentConfig {
            name,
            p: Vec::new(),
            resolutions: Vec::new(),
            trials: default_trials(),
            seed: default_seed(),
            scheme: SchemeKind::default(),
            subsequence: None,
            output: None,
            atom_depth: default_depth(),
            probes: None,
            phi: None,
        }
    }

    /// Parses and validates, collecting every offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: Value = serde_json::from_str(text).map_err(|e| Error::Config(vec![format!("json: {e}")]))?;
        let Value::Object(map) = &raw else {
            return Err(Error::Config(vec!["config must be a JSON object".into()]));
        };
        let mut problems: Vec<String> = map
            .keys()
            .filter(|k| !FIELDS.contains(&k.as_str()))
            .map(|k| format!("{k}: unknown field"))
            .collect();
        for key in FIELDS {
            if let Some(v) = map.get(*key) {
                if let Err(e) = check_field(key, v) {
                    problems.push(format!("{key}: {e}"));
                }
            }
        }
        if !map.contains_key("name") {
            problems.push("name: missing".into());
        }
        if !problems.is_empty() {
            return Err(Error::Config(problems));
        }
        let cfg: ExperimentConfig = serde_json::from_value(raw).map_err(|e| Error::Config(vec![e.to_string()]))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }

    pub fn exponents(&self) -> Result<Vec<PExponent>> {
        self.p.iter().map(PValue::parse).collect()
    }

    /// Checks every parameter against the preconditions of its experiment.
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        let kind = self.name;
        let needs_p = matches!(
            kind,
            ExperimentKind::Thm1 | ExperimentKind::Thm2Growth | ExperimentKind::Thm2Divergence | ExperimentKind::Corollaries
        );
        match self.exponents() {
            Err(e) => bad.push(format!("p: {e}")),
            Ok(ps) => {
                if needs_p && ps.is_empty() {
                    bad.push("p: at least one exponent required".into());
                }
                if needs_p && ps.iter().any(|p| p.value() >= 1.0) {
                    bad.push("p: must lie in (0, 1)".into());
                }
            }
        }
        if self.resolutions.is_empty() {
            bad.push("resolutions: at least one value required".into());
        }
        let (lo, hi) = match kind {
            ExperimentKind::Kernels | ExperimentKind::Lemma1 | ExperimentKind::VerifyAll => (1, 12),
            ExperimentKind::Sandwich => (1, 14),
            ExperimentKind::Thm1 => (1, MAX_EXPERIMENT_RESOLUTION.saturating_sub(self.atom_depth)),
            ExperimentKind::Thm2Growth | ExperimentKind::Thm2Divergence => (5, MAX_EXPERIMENT_RESOLUTION),
            ExperimentKind::Corollaries => (6, MAX_EXPERIMENT_RESOLUTION),
        };
        for &m in &self.resolutions {
            if m < lo || m > hi {
                bad.push(format!("resolutions: {m} outside [{lo}, {hi}] for {}", kind.as_str()));
            }
        }
        if self.trials == 0 {
            bad.push("trials: must be at least 1".into());
        }
        if self.atom_depth == 0 || self.atom_depth > MAX_EXPERIMENT_RESOLUTION - 1 {
            bad.push(format!("atom_depth: must lie in [1, {}]", MAX_EXPERIMENT_RESOLUTION - 1));
        }
        if let Some(probes) = &self.probes {
            if kind != ExperimentKind::Thm2Divergence {
                bad.push("probes: only used by thm2-divergence".into());
            }
            let m = self.resolutions.iter().copied().max().unwrap_or(0);
            if probes.is_empty() {
                bad.push("probes: empty list".into());
            }
            for pr in probes {
                if pr.s >= pr.n || pr.n + 1 > m {
                    bad.push(format!("probes: (n={}, s={}) needs s < n < resolution", pr.n, pr.s));
                }
            }
            if probes.windows(2).any(|w| w[0].n >= w[1].n) {
                bad.push("probes: scales n must increase".into());
            }
        }
        if self.phi.is_some() && kind != ExperimentKind::Thm2Divergence {
            bad.push("phi: only used by thm2-divergence".into());
        }
        if self.subsequence.is_some() && kind != ExperimentKind::Thm1 {
            bad.push("subsequence: only used by thm1".into());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(bad))
        }
    }
}

/// Type-checks one field in isolation so that all bad fields are reported.
fn check_field(key: &str, v: &Value) -> std::result::Result<(), String> {
    fn de<T: serde::de::DeserializeOwned>(v: &Value) -> std::result::Result<(), String> {
        serde_json::from_value::<T>(v.clone()).map(|_| ()).map_err(|e| e.to_string())
    }
    match key {
        "name" => de::<ExperimentKind>(v),
        "p" => de::<Vec<PValue>>(v),
        "resolutions" => de::<Vec<u32>>(v),
        "trials" => de::<u32>(v),
        "seed" => de::<u64>(v),
        "scheme" => de::<SchemeKind>(v),
        "subsequence" => de::<Subsequence>(v),
        "output" => de::<PathBuf>(v),
        "atom_depth" => de::<u32>(v),
        "probes" => de::<Vec<ProbeSpec>>(v),
        "phi" => de::<PhiSpec>(v),
        _ => Ok(()),
    }
}

/// `φ(n) = 2^(ρ(n)(1/p-1))` at the given indices, as a table.
pub fn rho_weight_table(p: PExponent, indices: &[u64]) -> Result<PhiTable> {
    let scheme = WeightScheme::Rho { p };
    let mut entries = BTreeMap::new();
    for &q in indices {
        entries.insert(q, scheme.weight(q)?);
    }
    PhiTable::new(entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let text = r#"{"name":"thm1","p":[0.5,"1/4"],"resolutions":[4,5],"trials":10,"seed":7}"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(cfg.atom_depth, 3);
        assert_eq!(cfg.exponents().unwrap()[1].integer_reciprocal(), Some(4));
        let again = ExperimentConfig::from_json(&cfg.to_json().unwrap()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn lists_every_offending_field() {
        let text = r#"{"name":"thm1","p":[1.5],"resolutions":[4],"trials":"many","colour":1,"sead":3}"#;
        let Err(Error::Config(problems)) = ExperimentConfig::from_json(text) else {
            panic!("expected config error");
        };
        let joined = problems.join("\n");
        for key in ["colour", "sead", "trials"] {
            assert!(joined.contains(key), "{joined}");
        }
        let text = r#"{"name":"thm2-growth","p":[1.5],"resolutions":[4]}"#;
        let Err(Error::Config(problems)) = ExperimentConfig::from_json(text) else {
            panic!("expected config error");
        };
        assert!(problems.iter().any(|p| p.starts_with("p:")));
        assert!(problems.iter().any(|p| p.starts_with("resolutions:")));
        assert!(ExperimentConfig::from_json("[1]").is_err());
        assert!(ExperimentConfig::from_json("{").is_err());
        assert!(ExperimentConfig::from_json(r#"{"p":[0.5]}"#).is_err());
    }

    #[test]
    fn divergence_fields() {
        let text = r#"{"name":"thm2-divergence","p":[0.5],"resolutions":[11],
            "probes":[{"n":4,"s":0},{"n":5,"s":0}],"phi":"rho-weight"}"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(cfg.phi, Some(PhiSpec::RhoWeight));
        let bad = r#"{"name":"thm2-divergence","p":[0.5],"resolutions":[11],"probes":[{"n":4,"s":4}],
            "phi":{"table":{"3":2.0,"9":1.0}}}"#;
        let Err(Error::Config(problems)) = ExperimentConfig::from_json(bad) else {
            panic!("expected config error");
        };
        assert!(problems.iter().any(|p| p.starts_with("phi:")));
        let misplaced = r#"{"name":"kernels","resolutions":[4],"phi":"one"}"#;
        assert!(ExperimentConfig::from_json(misplaced).is_err());
    }

    #[test]
    fn fraction_exponents() {
        assert_eq!(parse_p("1/3").unwrap().integer_reciprocal(), Some(3));
        assert_eq!(parse_p("0.75").unwrap().value(), 0.75);
        assert!(parse_p("3/2").is_err());
        assert!(parse_p("x").is_err());
        let t = rho_weight_table(parse_p("1/2").unwrap(), &[17, 33]).unwrap();
        assert_eq!(t.value(17), 16.0);
        assert_eq!(t.value(40), 32.0);
    }
}
