//! Experiment reports and their JSON / CSV / TSV renderings.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::Result;
use crate::numeric::fmt_f64;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Case {
    pub params: Map<String, Value>,
    pub measured: Map<String, Value>,
}

impl Case {
    pub fn new() -> Self {
        Case::default()
    }

    pub fn param(mut self, key: &str, v: impl Into<Value>) -> Self {
        self.params.insert(key.to_string(), v.into());
        self
    }

    pub fn measure(mut self, key: &str, v: impl Into<Value>) -> Self {
        self.measured.insert(key.to_string(), v.into());
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub pass: bool,
    pub checks: Vec<Check>,
}

impl Verdict {
    pub fn check(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            pass,
            detail: detail.into(),
        });
        self.pass = self.checks.iter().all(|c| c.pass);
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub version: String,
}

/// Everything an experiment measured. Contains no timestamps, so equal
/// configurations give byte-identical renderings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub config: Value,
    pub cases: Vec<Case>,
    pub summary: Map<String, Value>,
    /// Plot-ready `(x, y)` series.
    pub series: BTreeMap<String, Vec<[f64; 2]>>,
    pub verdict: Verdict,
    pub provenance: Provenance,
}

impl ExperimentReport {
    pub fn new(name: impl Into<String>, config: Value, seed: u64) -> Self {
        ExperimentReport {
            name: name.into(),
            config,
            cases: Vec::new(),
            summary: Map::new(),
            series: BTreeMap::new(),
            verdict: Verdict {
                pass: true,
                checks: Vec::new(),
            },
            provenance: Provenance {
                seed,
                version: env!("CARGO_PKG_VERSION").to_string(),
            },
        }
    }

    pub fn summarize(&mut self, key: &str, v: impl Into<Value>) {
        self.summary.insert(key.to_string(), v.into());
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// One row per case: parameter columns, then measurement columns.
    pub fn to_csv(&self) -> Result<String> {
        let mut pkeys: Vec<&String> = Vec::new();
        let mut mkeys: Vec<&String> = Vec::new();
        for c in &self.cases {
            for k in c.params.keys() {
                if !pkeys.contains(&k) {
                    pkeys.push(k);
                }
            }
            for k in c.measured.keys() {
                if !mkeys.contains(&k) {
                    mkeys.push(k);
                }
            }
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(pkeys.iter().chain(&mkeys).map(|k| k.as_str()))?;
        for c in &self.cases {
            let row = pkeys
                .iter()
                .map(|k| cell(c.params.get(*k)))
                .chain(mkeys.iter().map(|k| cell(c.measured.get(*k))));
            w.write_record(row)?;
        }
        let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// `series<TAB>x<TAB>y` rows.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("series\tx\ty\n");
        for (name, pts) in &self.series {
            for [x, y] in pts {
                out.push_str(&format!("{name}\t{}\t{}\n", fmt_f64(*x), fmt_f64(*y)));
            }
        }
        out
    }

    /// Short human-readable summary.
    pub fn to_table(&self) -> String {
        let mut out = format!("{}: {}\n", self.name, if self.verdict.pass { "PASS" } else { "FAIL" });
        for (k, v) in &self.summary {
            out.push_str(&format!("  {k:<28} {}\n", cell(Some(v))));
        }
        for c in &self.verdict.checks {
            out.push_str(&format!(
                "  [{}] {} {}\n",
                if c.pass { "pass" } else { "FAIL" },
                c.name,
                c.detail
            ));
        }
        out
    }

    /// Writes `<stem>.json`, `<stem>.csv` and `<stem>.tsv` next to `path`.
    pub fn write_files(&self, path: &Path) -> Result<Vec<PathBuf>> {
        let stem = path.with_extension("");
        let mut written = Vec::new();
        for (ext, body) in [
            ("json", self.to_json()?),
            ("csv", self.to_csv()?),
            ("tsv", self.to_tsv()),
        ] {
            let p = stem.with_extension(ext);
            let mut f = std::fs::File::create(&p)?;
            f.write_all(body.as_bytes())?;
            written.push(p);
        }
        Ok(written)
    }
}

fn cell(v: Option<&Value>) -> String {
    match v {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) => s.clone(),
        Some(Value::Number(n)) => match n.as_f64() {
            Some(f) if n.is_f64() => fmt_f64(f),
            _ => n.to_string(),
        },
        Some(other) => other.to_string(),
    }
}

/// A JSON number for finite floats, `null` otherwise.
pub fn num(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ExperimentReport {
        let mut r = ExperimentReport::new("demo", serde_json::json!({"name": "demo"}), 7);
        r.cases.push(Case::new().param("n", 3).measure("R", num(1.5)));
        r.cases.push(Case::new().param("n", 4).measure("R", num(0.1)).measure("extra", "x"));
        r.series.insert("R".into(), vec![[3.0, 1.5], [4.0, 0.1]]);
        r.summarize("slope", num(2.0));
        r.verdict.check("ok", true, "");
        r
    }

    #[test]
    fn renderings() {
        let r = sample();
        assert_eq!(r.to_csv().unwrap(), "n,R,extra\n3,1.5,\n4,0.1,x\n");
        assert_eq!(r.to_tsv(), "series\tx\ty\nR\t3\t1.5\nR\t4\t0.1\n");
        let back: ExperimentReport = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
        assert!(r.to_table().starts_with("demo: PASS"));
    }

    #[test]
    fn verdict_tracks_checks() {
        let mut v = Verdict::default();
        v.check("a", true, "");
        assert!(v.pass);
        v.check("b", false, "why");
        assert!(!v.pass);
        assert_eq!(v.get("b").unwrap().detail, "why");
        assert!(num(f64::NAN).is_null());
    }

    #[test]
    fn files_written_once_per_format() {
        let dir = std::env::temp_dir().join(format!("walsh-report-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let paths = sample().write_files(&dir.join("out.json")).unwrap();
        assert_eq!(paths.len(), 3);
        assert!(paths.iter().all(|p| p.exists()));
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
