//! Sharpness of the `ρ`-weight, measured on `f_n = D_(2^(n+1)) - D_(2^n)`.
//!
//! `‖f_n‖_(H_p) = 2^(n(1-1/p))`, while the partial sum at `q = 2^n + 2^s`
//! has modulus `D_(2^s)`, so a weaker weight lets the `L_p` and weak-`L_p`
//! norms of the maximal operator outgrow the Hardy norm.

use std::collections::BTreeMap;

use serde_json::Value;

use super::config::{rho_weight_table, ExperimentConfig, PhiSpec, ProbeSpec};
use super::fit::{consecutive_ratios, log_log_slope};
use super::report::{num, Case, ExperimentReport};
use super::theorem1::{p_label, reaches_pow2};
use crate::analysis::{hardy_quasinorm, lp_quasinorm, PExponent};
use crate::constructions::{counterexample_fn, partial_sum_probe, probe_index, probe_rho, ProbeIndex};
use crate::error::{Error, Result};
use crate::group::{shell_range, Resolution};
use crate::numeric::fmt_f64;
use crate::operators::{weighted_maximal, PhiTable, WeightScheme};
use crate::spectral::partial_sum;

/// Fraction of the predicted log-log slope `1/p` the growth fit must reach.
pub const SLOPE_SLACK: f64 = 0.8;

/// The level constant `c` of the weak-type lower bound: `|S_q f_n| >= c 2^s`
/// holds on `I_s`, which has measure `2^(-s) >= 2^(-(s+1))`.
pub const LEVEL_CONSTANT_LOG2: f64 = -2.0;

/// Largest spread (max/min) tolerated when a ratio should follow its
/// prediction up to a constant.
pub const BAND: f64 = 2.0;

/// Per `n`: `R(n) = ‖S̃f_n‖_p / ‖f_n‖_(H_p)` and the shell lower bound
/// `Σ_(s<n) ∫_(I_(s+1)(e_s)) (|S_q f_n| / w(q))^p`.
pub fn theorem2_growth(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let mut report = ExperimentReport::new("thm2-growth", cfg.to_value(), cfg.seed);
    let several = cfg.resolutions.len() > 1;
    for p in cfg.exponents()? {
        let scheme = WeightScheme::Rho { p };
        let pv = p.value();
        for &mb in &cfg.resolutions {
            let m = Resolution::new(mb)?;
            let label = if several { format!("{} m={mb}", p_label(p)) } else { p_label(p) };
            let mut ns = Vec::new();
            let mut rs = Vec::new();
            let mut c_est = Vec::new();
            let mut lb_ok = true;
            let mut probe_min = f64::INFINITY;
            for n in 3..mb {
                let f = counterexample_fn(n, m)?;
                let operand = if scheme.is_exact() { f.clone() } else { f.to_float() };
                let g = weighted_maximal(&operand, &scheme)?;
                let norm = lp_quasinorm(&g, pv)?;
                let hardy = hardy_quasinorm(&f, p)?;
                let r = norm.value / hardy.value;
                let integral = g.to_f64_vec().iter().map(|v| v.powf(pv)).sum::<f64>() / m.size() as f64;

                let mut lower = 0.0;
                for s in 0..n {
                    let probe = probe_index(n, s)?;
                    let w = scheme.weight(probe.q)?;
                    let sq = partial_sum_probe(n, s, m)?;
                    for x in shell_range(m, s) {
                        let v = sq.get_f64(x).abs();
                        probe_min = probe_min.min(v / (s as f64).exp2());
                        lower += (v / w).powf(pv);
                    }
                }
                lower /= m.size() as f64;
                lb_ok &= lower <= integral * (1.0 + 1e-12);
                let c = lower * (n as f64 * (1.0 - pv)).exp2() / n as f64;

                let mut case = Case::new()
                    .param("p", num(pv))
                    .param("resolution", mb)
                    .param("n", n)
                    .measure("R", num(r))
                    .measure("lp_norm", num(norm.value))
                    .measure("hardy_norm", num(hardy.value))
                    .measure("integral", num(integral))
                    .measure("lower_bound", num(lower))
                    .measure("c_estimate", num(c));
                if let Some(h) = &hardy.exact {
                    case = case.measure("hardy_norm_exact", h.to_string());
                }
                report.cases.push(case);
                ns.push(n as f64);
                rs.push(r);
                c_est.push(c);
            }
            let slope = log_log_slope(&ns, &rs);
            let threshold = SLOPE_SLACK / pv;
            let increasing = consecutive_ratios(&rs).iter().all(|&q| q > 1.0);
            let c_lo = c_est.iter().copied().fold(f64::INFINITY, f64::min);
            let c_hi = c_est.iter().copied().fold(0.0, f64::max);
            report.series.insert(format!("R {label}"), ns.iter().zip(&rs).map(|(&n, &r)| [n, r]).collect());
            report.summarize(&format!("slope {label}"), num(slope));
            report.summarize(&format!("slope_threshold {label}"), num(threshold));
            report.summarize(&format!("c_estimate {label}"), num(c_lo));
            report.verdict.check(format!("increasing {label}"), increasing, "R(n) strictly increasing");
            report.verdict.check(
                format!("slope {label}"),
                slope >= threshold,
                format!("log-log slope {} against required {}", fmt_f64(slope), fmt_f64(threshold)),
            );
            report.verdict.check(
                format!("lower-bound {label}"),
                lb_ok,
                "shell sum never exceeds the integral of (S̃f_n)^p",
            );
            report.verdict.check(
                format!("lower-bound-form {label}"),
                c_hi <= c_lo * (1.0 + 1e-9),
                format!("shell sum times 2^(n(1-p))/n in [{}, {}]", fmt_f64(c_lo), fmt_f64(c_hi)),
            );
            report.verdict.check(
                format!("probe-modulus {label}"),
                probe_min >= 0.25,
                format!("min |S_q f_n| / 2^s on the probe shells = {}", fmt_f64(probe_min)),
            );
        }
    }
    Ok(report)
}

fn phi_of(spec: &PhiSpec, p: PExponent, q: u64) -> Result<f64> {
    match spec {
        PhiSpec::One => Ok(1.0),
        PhiSpec::RhoWeight => WeightScheme::Rho { p }.weight(q),
        PhiSpec::Table(t) => Ok(t.value(q)),
    }
}

/// `2^(ρ(q)(1/p-1)) / φ(q)`, the rate the weak ratio should follow.
fn target(spec: &PhiSpec, p: PExponent, probe: &ProbeIndex) -> Result<f64> {
    Ok((probe_rho(probe) as f64 * p.excess()).exp2() / phi_of(spec, p, probe.q)?)
}

/// Probes `(n, s)` for `n = 4..m-1`, each `s` maximizing the target rate
/// (smallest `s` on ties).
pub fn auto_probes(spec: &PhiSpec, p: PExponent, m: Resolution) -> Result<Vec<ProbeSpec>> {
    (4..m.get())
        .map(|n| {
            let mut best = (0u32, f64::NEG_INFINITY);
            for s in 0..n {
                let t = target(spec, p, &probe_index(n, s)?)?;
                if t > best.1 {
                    best = (s, t);
                }
            }
            Ok(ProbeSpec { n, s: best.0 })
        })
        .collect()
}

fn phi_table(spec: &PhiSpec, p: PExponent, probes: &[ProbeSpec]) -> Result<PhiTable> {
    match spec {
        PhiSpec::One => PhiTable::new(BTreeMap::new()),
        PhiSpec::RhoWeight => {
            let qs = probes
                .iter()
                .map(|pr| probe_index(pr.n, pr.s).map(|x| x.q))
                .collect::<Result<Vec<_>>>()?;
            rho_weight_table(p, &qs).map_err(|e| Error::Config(vec![format!("phi: {e}")]))
        }
        PhiSpec::Table(t) => Ok(t.clone()),
    }
}

/// The normalized weak-`L_p` ratio at each probe
/// `(c 2^s / φ(q)) μ{|S_q f_n| / φ(q) >= c 2^s / φ(q)}^(1/p) / ‖f_n‖_(H_p)`,
/// compared with `2^(ρ(q)(1/p-1)) / φ(q)`.
pub fn theorem2_weak_divergence(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let spec = cfg.phi.clone().unwrap_or(PhiSpec::One);
    let mut report = ExperimentReport::new("thm2-divergence", cfg.to_value(), cfg.seed);
    let several = cfg.resolutions.len() > 1;
    for p in cfg.exponents()? {
        let inv = p.excess() + 1.0;
        for &mb in &cfg.resolutions {
            let m = Resolution::new(mb)?;
            let label = if several { format!("{} m={mb}", p_label(p)) } else { p_label(p) };
            let probes = match &cfg.probes {
                Some(pr) => pr.clone(),
                None => auto_probes(&spec, p, m)?,
            };
            let table = phi_table(&spec, p, &probes)?;
            let mut ns = Vec::new();
            let mut ratios = Vec::new();
            let mut tracking = Vec::new();
            let mut level_set_ok = true;
            for pr in &probes {
                let probe = probe_index(pr.n, pr.s)?;
                let f = counterexample_fn(pr.n, m)?;
                let sq = partial_sum(&f, probe.q)?.function;
                let phi = table.value(probe.q);
                let level_log2 = pr.s as f64 + LEVEL_CONSTANT_LOG2;
                let count = (0..m.size()).filter(|&x| reaches_pow2(&sq, x, level_log2)).count();
                // μ >= 2^(-(s+1))  <=>  count * 2^(s+1) >= 2^m
                level_set_ok &= (count as u128) << (pr.s + 1) >= 1u128 << mb;
                let mu = count as f64 / m.size() as f64;
                let hardy = hardy_quasinorm(&f, p)?.value;
                let ratio = level_log2.exp2() / phi * mu.powf(inv) / hardy;
                let tgt = (probe_rho(&probe) as f64 * p.excess()).exp2() / phi;
                report.cases.push(
                    Case::new()
                        .param("p", num(p.value()))
                        .param("resolution", mb)
                        .param("n", pr.n)
                        .param("s", pr.s)
                        .param("q", probe.q)
                        .measure("phi", num(phi))
                        .measure("level_set_measure", num(mu))
                        .measure("hardy_norm", num(hardy))
                        .measure("ratio", num(ratio))
                        .measure("target", num(tgt))
                        .measure("tracking", num(ratio / tgt)),
                );
                ns.push(pr.n as f64);
                ratios.push(ratio);
                tracking.push(ratio / tgt);
            }
            let spread = |v: &[f64]| {
                let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = v.iter().copied().fold(0.0, f64::max);
                hi / lo
            };
            report
                .series
                .insert(format!("ratio {label}"), ns.iter().zip(&ratios).map(|(&n, &r)| [n, r]).collect());
            report.summarize(&format!("tracking_spread {label}"), num(spread(&tracking)));
            report.summarize(&format!("ratio_spread {label}"), num(spread(&ratios)));
            report.summarize(
                &format!("phi {label}"),
                serde_json::to_value(table.entries()).unwrap_or(Value::Null),
            );
            report.verdict.check(
                format!("tracks {label}"),
                spread(&tracking) <= BAND,
                format!("ratio / target spread {}", fmt_f64(spread(&tracking))),
            );
            report.verdict.check(
                format!("level-set {label}"),
                level_set_ok,
                "μ{|S_q f_n| >= 2^s/4} >= 2^(-(s+1)) at every probe",
            );
            match spec {
                PhiSpec::One => {
                    // per unit step in n, normalized by the gap between probes
                    let worst = ns
                        .windows(2)
                        .zip(ratios.windows(2))
                        .map(|(n, r)| (r[1] / r[0]).powf(1.0 / (n[1] - n[0])))
                        .fold(f64::INFINITY, f64::min);
                    let need = 0.75 * p.excess().exp2();
                    report.summarize(&format!("growth_per_unit {label}"), num(worst));
                    report.verdict.check(
                        format!("grows {label}"),
                        worst >= need,
                        format!("smallest factor per unit n {} against required {}", fmt_f64(worst), fmt_f64(need)),
                    );
                }
                PhiSpec::RhoWeight => {
                    report.verdict.check(
                        format!("bounded {label}"),
                        spread(&ratios) <= BAND,
                        format!("ratio spread {}", fmt_f64(spread(&ratios))),
                    );
                }
                PhiSpec::Table(_) => {}
            }
        }
    }
    Ok(report)
}
