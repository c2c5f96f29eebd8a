//! Exhaustive kernel checks: the closed forms of `D_n`, the lower bound on
//! the shell `I_([n]+1)(e_[n])`, and the `L^1` sandwich by the variation.

use rayon::prelude::*;
use serde_json::json;

use super::report::{num, Case, ExperimentReport};
use crate::error::{Error, Result};
use crate::function::DyadicFunction;
use crate::group::{shell_range, Resolution};
use crate::spectral::{add_walsh, dirichlet_dyadic, dirichlet_fast, index_stats, rademacher};

pub const KERNEL_CAP: u32 = 12;
pub const SANDWICH_CAP: u32 = 14;

fn cap(m: Resolution, max: u32) -> Result<()> {
    if m.get() > max {
        return Err(Error::range("resolution", m.get(), format!("<= {max}")));
    }
    Ok(())
}

fn config(name: &str, m: Resolution) -> serde_json::Value {
    json!({ "name": name, "resolutions": [m.get()] })
}

fn ints(f: &DyadicFunction) -> Vec<i128> {
    let e = f.exact().expect("kernels are exact");
    debug_assert_eq!(e.shift(), 0);
    e.nums().to_vec()
}

/// `D_n` summed term by term equals the fast form for every `n <= 2^m`,
/// `D_(2^k)` equals `2^k 1_(I_k)`, and `D_(2^h + j) = D_(2^h) + r_h D_j`.
pub fn verify_kernels(m: Resolution) -> Result<ExperimentReport> {
    cap(m, KERNEL_CAP)?;
    let mb = m.get();
    let size = m.size();
    let mut report = ExperimentReport::new("kernels", config("kernels", m), 0);

    let mut direct_bad = vec![0usize; mb as usize + 1];
    let mut shift_bad = vec![0usize; mb as usize + 1];
    let mut counts = vec![0usize; mb as usize + 1];
    let mut dyadic_bad = 0usize;
    let mut fast: Vec<Vec<i128>> = Vec::with_capacity(size + 1);
    fast.push(vec![0; size]);

    let mut acc = vec![0i64; size];
    for n in 1..=size {
        add_walsh(&mut acc, m, n - 1);
        let f = ints(&dirichlet_fast(n, m)?);
        let h = usize::BITS - 1 - n.leading_zeros();
        counts[h as usize] += 1;
        if acc.iter().zip(&f).any(|(a, b)| *a as i128 != *b) {
            direct_bad[h as usize] += 1;
        }
        if n.is_power_of_two() {
            if ints(&dirichlet_dyadic(h, m)?) != f {
                dyadic_bad += 1;
            }
        } else {
            let j = n - (1 << h);
            let r = ints(&rademacher(h, m)?);
            let base = &fast[1 << h];
            let rebuilt: Vec<i128> = (0..size).map(|x| base[x] + r[x] * fast[j][x]).collect();
            if rebuilt != f {
                shift_bad[h as usize] += 1;
            }
        }
        fast.push(f);
    }

    for h in 0..=mb as usize {
        report.cases.push(
            Case::new()
                .param("high", h as u64)
                .measure("kernels", counts[h] as u64)
                .measure("direct_mismatches", direct_bad[h] as u64)
                .measure("shift_mismatches", shift_bad[h] as u64),
        );
    }
    let direct: usize = direct_bad.iter().sum();
    let shift: usize = shift_bad.iter().sum();
    report.summarize("kernels_checked", size as u64);
    report.summarize("mismatches", (direct + shift + dyadic_bad) as u64);
    report
        .verdict
        .check("direct-equals-fast", direct == 0, format!("{direct} mismatches"));
    report
        .verdict
        .check("dyadic-closed-form", dyadic_bad == 0, format!("{dyadic_bad} mismatches"));
    report
        .verdict
        .check("shift-identity", shift == 0, format!("{shift} mismatches"));
    Ok(report)
}

/// Per `n`: smallest `|D_n(x)|` on the shell below `[n]` and whether it
/// agrees with `|D_(n - 2^|n|)|` there.
struct ShellProbe {
    low: u32,
    min_abs: i128,
    agrees: bool,
}

/// For `[n] != |n|`, on `I_([n]+1)(e_[n])`: `|D_n| = |D_(n - 2^|n|)|` and
/// `|D_n| >= 2^[n] / 4`.
pub fn verify_lemma1(m: Resolution) -> Result<ExperimentReport> {
    cap(m, KERNEL_CAP)?;
    let mb = m.get();
    let mut report = ExperimentReport::new("lemma1", config("lemma1", m), 0);

    let probes: Vec<ShellProbe> = (1..=m.size())
        .into_par_iter()
        .filter_map(|n| {
            let st = index_stats(n as u64).expect("n >= 1");
            (st.low != st.high).then_some((n, st))
        })
        .map(|(n, st)| -> Result<ShellProbe> {
            let d = ints(&dirichlet_fast(n, m)?);
            let rest = ints(&dirichlet_fast(n - (1 << st.high), m)?);
            let shell = shell_range(m, st.low);
            Ok(ShellProbe {
                low: st.low,
                min_abs: shell.clone().map(|x| d[x].abs()).min().expect("shell is non-empty"),
                agrees: shell.into_iter().all(|x| d[x].abs() == rest[x].abs()),
            })
        })
        .collect::<Result<_>>()?;

    // ratios |D_n| / 2^[n] are compared as integers: 4 |D_n| >= 2^[n]
    let mut min_ratio = f64::INFINITY;
    let mut below = 0usize;
    let mut disagree = 0usize;
    let mut tight = false;
    for s in 0..mb {
        let at: Vec<&ShellProbe> = probes.iter().filter(|p| p.low == s).collect();
        if at.is_empty() {
            continue;
        }
        let lo = at.iter().map(|p| p.min_abs).min().expect("non-empty");
        let ratio = lo as f64 / (s as f64).exp2();
        below += at.iter().filter(|p| 4 * p.min_abs < 1i128 << s).count();
        disagree += at.iter().filter(|p| !p.agrees).count();
        tight |= 4 * lo == 1i128 << s;
        min_ratio = min_ratio.min(ratio);
        report.cases.push(
            Case::new()
                .param("low", s)
                .measure("indices", at.len() as u64)
                .measure("min_ratio", num(ratio)),
        );
    }
    report.summarize("indices_checked", probes.len() as u64);
    report.summarize("min_ratio", num(min_ratio));
    report.summarize("tight", tight);
    report
        .verdict
        .check("tail-modulus", disagree == 0, format!("{disagree} indices differ"));
    report
        .verdict
        .check("lower-bound", below == 0, format!("{below} indices below 2^[n]/4"));
    Ok(report)
}

/// `V(n)/8 <= ‖D_n‖_1 <= V(n)` for every `n <= 2^m`, with `‖D_n‖_1`
/// computed exactly as an integer over `2^m`.
pub fn verify_kernel_l1_sandwich(m: Resolution) -> Result<ExperimentReport> {
    cap(m, SANDWICH_CAP)?;
    let mb = m.get();
    let size = m.size();
    let mut report = ExperimentReport::new("sandwich", config("sandwich", m), 0);

    // totals[n] = Σ_x |D_n(x)|, by running D_n(x) along n for each x
    let totals: Vec<u64> = (0..size)
        .into_par_iter()
        .fold(
            || vec![0u64; size + 1],
            |mut tot, x| {
                let rev = x.reverse_bits() >> (usize::BITS - mb);
                let mut d = 0i64;
                for (k, t) in tot[1..].iter_mut().enumerate() {
                    d += if (k & rev).count_ones().is_multiple_of(2) { 1 } else { -1 };
                    *t += d.unsigned_abs();
                }
                tot
            },
        )
        .reduce(
            || vec![0u64; size + 1],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );

    let mut lower_bad = 0usize;
    let mut upper_bad = 0usize;
    let mut per_high: Vec<(f64, f64, usize)> = vec![(f64::INFINITY, 0.0, 0); mb as usize + 1];
    for (n, &total) in totals.iter().enumerate().skip(1) {
        let v = index_stats(n as u64).expect("n >= 1");
        let vol = v.variation as u64 * size as u64;
        if 8 * total < vol {
            lower_bad += 1;
        }
        if total > vol {
            upper_bad += 1;
        }
        let ratio = total as f64 / vol as f64;
        let cell = &mut per_high[v.high as usize];
        cell.0 = cell.0.min(ratio);
        cell.1 = cell.1.max(ratio);
        cell.2 += 1;
    }
    for (h, (lo, hi, count)) in per_high.iter().enumerate() {
        report.cases.push(
            Case::new()
                .param("high", h as u64)
                .measure("indices", *count as u64)
                .measure("min_norm_over_V", num(*lo))
                .measure("max_norm_over_V", num(*hi)),
        );
    }
    let lo = per_high.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
    let hi = per_high.iter().map(|c| c.1).fold(0.0, f64::max);
    report.summarize("indices_checked", size as u64);
    report.summarize("min_norm_over_V", num(lo));
    report.summarize("max_norm_over_V", num(hi));
    report.summarize("max_V_over_norm", num(1.0 / lo));
    report
        .verdict
        .check("lower", lower_bad == 0, format!("{lower_bad} indices below V/8"));
    report
        .verdict
        .check("upper", upper_bad == 0, format!("{upper_bad} indices above V"));
    Ok(report)
}

/// The three suites above at one resolution, as a single report.
pub fn verify_all(m: Resolution) -> Result<ExperimentReport> {
    cap(m, KERNEL_CAP)?;
    let parts = [verify_kernels(m)?, verify_lemma1(m)?, verify_kernel_l1_sandwich(m)?];
    Ok(super::merge("verify-all", config("verify-all", m), 0, parts))
}
