//! Weak-type behaviour of the weighted maximal operator on random atoms.
//!
//! The constants of the estimate are existential, so the experiment checks
//! what is falsifiable at desk scale: the weak constant off the support does
//! not grow with the support level, and every trial obeys the shell bound
//! `S̃a <= C 2^(s/p)` with one pinned `C`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::fit::{consecutive_ratios, trial_seed};
use super::report::{num, Case, ExperimentReport};
use crate::analysis::{hardy_quasinorm, AtomSpec, PExponent};
use crate::constructions::{make_atom, AtomGenerator, AtomRecipe};
use crate::error::Result;
use crate::function::DyadicFunction;
use crate::group::{shell_of, Resolution};
use crate::numeric::fmt_f64;
use crate::operators::{
    restricted_maximal, weak_type_constant, weighted_maximal, Restriction, Subsequence, WeightScheme,
};

/// The pinned shell constant: `S̃a <= 2 * 2^(s/p)` on shell `s` off the support.
pub const SHELL_CONSTANT_LOG2: f64 = 1.0;

/// Largest ratio of consecutive per-level maxima still read as "no growth".
pub const STABILITY_RATIO: f64 = 1.2;

/// Relative slack of bound checks on float data; exact data gets none.
const FLOAT_SLACK: f64 = 1e-12;

/// `|g(i)| > 2^e`, exactly when possible.
pub(crate) fn exceeds_pow2(g: &DyadicFunction, i: usize, e: f64) -> bool {
    match exact_cmp(g, i, e) {
        Some(o) => o.is_gt(),
        None => g.get_f64(i).abs() > e.exp2() * (1.0 + FLOAT_SLACK),
    }
}

/// `|g(i)| >= 2^e`, exactly when possible.
pub(crate) fn reaches_pow2(g: &DyadicFunction, i: usize, e: f64) -> bool {
    match exact_cmp(g, i, e) {
        Some(o) => o.is_ge(),
        None => g.get_f64(i).abs() >= e.exp2() * (1.0 - FLOAT_SLACK),
    }
}

fn exact_cmp(g: &DyadicFunction, i: usize, e: f64) -> Option<std::cmp::Ordering> {
    let ex = g.exact()?;
    if e.fract() != 0.0 {
        return None;
    }
    let v = ex.nums()[i].abs();
    // |num| / 2^shift against 2^e  <=>  |num| against 2^(e + shift)
    let t = e as i64 + ex.shift() as i64;
    Some(if t < 0 {
        if v == 0 {
            std::cmp::Ordering::Less
        } else {
            // v >= 1 > 2^t
            std::cmp::Ordering::Greater
        }
    } else if t >= 127 {
        std::cmp::Ordering::Less
    } else {
        v.cmp(&(1i128 << t))
    })
}

/// Float output with round-off residue below `FLOAT_SLACK * scale` set to
/// zero; exact output is returned unchanged.
pub(crate) fn denoise(g: DyadicFunction, scale: f64) -> Result<DyadicFunction> {
    if g.exact().is_some() {
        return Ok(g);
    }
    let floor = FLOAT_SLACK * scale;
    let vals = g.to_f64_vec().into_iter().map(|v| if v.abs() <= floor { 0.0 } else { v }).collect();
    DyadicFunction::from_f64(g.resolution(), vals)
}

/// `2^(M/p)`, the sup bound of an atom on `I_M`.
pub(crate) fn atom_bound(atom: &AtomSpec) -> f64 {
    (atom.support.level() as f64 * (atom.p.excess() + 1.0)).exp2()
}

/// A random atom on some `I_M(base)` at resolution `m`. The base and the
/// atom seed are drawn from a stream keyed by the run seed and `coords`.
pub(crate) fn draw_atom(
    run_seed: u64,
    coords: &[u64],
    level: u32,
    m: Resolution,
    p: PExponent,
    generator: AtomGenerator,
) -> Result<AtomSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(run_seed, coords));
    let base = rng.gen_range(0..m.size());
    let seed: u64 = rng.gen();
    make_atom(
        &AtomRecipe {
            level,
            base,
            p,
            generator,
            seed,
        },
        m,
    )
}

/// The atom's values in a mode the scheme can process.
pub(crate) fn operand(atom: &AtomSpec, scheme: &WeightScheme) -> DyadicFunction {
    if scheme.is_exact() {
        atom.values.clone()
    } else {
        atom.values.to_float()
    }
}

pub(crate) fn off_support(atom: &AtomSpec) -> Restriction {
    Restriction {
        set: atom.support.to_set().complement(),
        label: "complement of the atom support".into(),
    }
}

/// One atom trial.
#[derive(Clone, Debug)]
struct Trial {
    p_idx: usize,
    level: u32,
    /// `sup_t t^p μ{x ∉ I_M : S̃a(x) >= t}`.
    restricted: f64,
    /// `‖S̃a‖_(weak L_p) / ‖a‖_(H_p)` over the whole group.
    normalized: f64,
    /// `max S̃a(x) / 2^(s/p)` over the shells off the support.
    shell_constant: f64,
    shell_violations: usize,
    tail_violations: usize,
    cap_violations: usize,
    vanishing_violations: usize,
}

fn run_trial(cfg: &ExperimentConfig, p: PExponent, p_idx: usize, level: u32, t: u32) -> Result<Trial> {
    let m = Resolution::new(level + cfg.atom_depth)?;
    let mb = m.get();
    let scheme = cfg.scheme.scheme(p);
    let generator = AtomGenerator::ALL[t as usize % AtomGenerator::ALL.len()];
    let atom = draw_atom(cfg.seed, &[p_idx as u64, level as u64, t as u64], level, m, p, generator)?;
    let f = operand(&atom, &scheme);
    let g = match &cfg.subsequence {
        Some(seq) => restricted_maximal(&f, seq, &scheme)?,
        None => weighted_maximal(&f, &scheme)?,
    };
    let g = denoise(g, atom_bound(&atom))?;
    let off = off_support(&atom);
    let restricted = weak_type_constant(&g, p, Some(&off)).value;
    let full = weak_type_constant(&g, p, None).value;
    let hardy = hardy_quasinorm(&atom.values, p)?.value;
    let normalized = if hardy > 0.0 { full.powf(p.excess() + 1.0) / hardy } else { 0.0 };

    let inv = p.excess() + 1.0;
    let start = atom.support.start();
    let shell = |x: usize| shell_of(m, x ^ start).expect("off the support") as f64;
    let mut shell_constant = 0.0f64;
    let mut shell_violations = 0;
    let mut cap_violations = 0;
    let mut tail_counts = vec![0u64; level as usize];
    for x in off.set.iter() {
        let s = shell(x);
        shell_constant = shell_constant.max(g.get_f64(x) / (s * inv).exp2());
        if exceeds_pow2(&g, x, SHELL_CONSTANT_LOG2 + s * inv) {
            shell_violations += 1;
        }
        if exceeds_pow2(&g, x, SHELL_CONSTANT_LOG2 + level as f64 * inv) {
            cap_violations += 1;
        }
        for (k, c) in tail_counts.iter_mut().enumerate() {
            if reaches_pow2(&g, x, SHELL_CONSTANT_LOG2 + k as f64 * inv) {
                *c += 1;
            }
        }
    }
    // μ{...} <= 2 / 2^k  <=>  count * 2^k <= 2^(m+1)
    let tail_violations = tail_counts
        .iter()
        .enumerate()
        .filter(|(k, &c)| (c as u128) << k > 1u128 << (mb + 1))
        .count();

    // partial sums at multiples of 2^M vanish off the support
    let multiples = Subsequence::new((1..=1u64 << (mb - level)).map(|k| k << level).collect())?;
    let h = restricted_maximal(&atom.values, &multiples, &WeightScheme::Unit)?;
    let h = denoise(h, atom_bound(&atom))?;
    let vanishing_violations = off.set.iter().filter(|&x| !h.is_zero_at(x)).count();

    Ok(Trial {
        p_idx,
        level,
        restricted,
        normalized,
        shell_constant,
        shell_violations,
        tail_violations,
        cap_violations,
        vanishing_violations,
    })
}

pub(crate) fn p_label(p: PExponent) -> String {
    format!("p={}", fmt_f64(p.value()))
}

/// Runs `trials` atoms for every exponent and support level `M` of the
/// configuration (the resolution list holds the levels; atoms live at
/// resolution `M + atom_depth`).
pub fn theorem1_weak_type(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let ps = cfg.exponents()?;
    let mut levels = cfg.resolutions.clone();
    levels.sort_unstable();
    levels.dedup();

    let jobs: Vec<(usize, u32, u32)> = (0..ps.len())
        .flat_map(|i| levels.iter().flat_map(move |&l| (0..cfg.trials).map(move |t| (i, l, t))))
        .collect();
    let trials: Vec<Trial> = jobs
        .into_par_iter()
        .map(|(i, l, t)| run_trial(cfg, ps[i], i, l, t))
        .collect::<Result<_>>()?;

    let mut report = ExperimentReport::new("thm1", cfg.to_value(), cfg.seed);
    for (i, &p) in ps.iter().enumerate() {
        let label = p_label(p);
        let mut maxima = Vec::new();
        let mut c_p = 0.0f64;
        let mut worst_normalized = 0.0f64;
        let (mut shell_bad, mut tail_bad, mut cap_bad, mut vanish_bad) = (0, 0, 0, 0);
        for &level in &levels {
            let cell: Vec<&Trial> = trials.iter().filter(|t| t.p_idx == i && t.level == level).collect();
            let max = cell.iter().map(|t| t.restricted).fold(0.0, f64::max);
            let mean = cell.iter().map(|t| t.restricted).sum::<f64>() / cell.len() as f64;
            let normalized = cell.iter().map(|t| t.normalized).fold(0.0, f64::max);
            let shell_c = cell.iter().map(|t| t.shell_constant).fold(0.0, f64::max);
            let sb: usize = cell.iter().map(|t| t.shell_violations).sum();
            let tb: usize = cell.iter().map(|t| t.tail_violations).sum();
            let cb: usize = cell.iter().map(|t| t.cap_violations).sum();
            let vb: usize = cell.iter().map(|t| t.vanishing_violations).sum();
            report.cases.push(
                Case::new()
                    .param("p", num(p.value()))
                    .param("M", level)
                    .param("resolution", level + cfg.atom_depth)
                    .measure("trials", cell.len() as u64)
                    .measure("max_constant", num(max))
                    .measure("mean_constant", num(mean))
                    .measure("max_normalized", num(normalized))
                    .measure("shell_constant", num(shell_c))
                    .measure("shell_violations", sb as u64)
                    .measure("tail_violations", tb as u64)
                    .measure("cap_violations", cb as u64)
                    .measure("vanishing_violations", vb as u64),
            );
            maxima.push(max);
            c_p = c_p.max(shell_c);
            worst_normalized = worst_normalized.max(normalized);
            shell_bad += sb;
            tail_bad += tb;
            cap_bad += cb;
            vanish_bad += vb;
        }
        let ratios = consecutive_ratios(&maxima);
        let worst_ratio = ratios.iter().copied().fold(0.0, f64::max);
        report.series.insert(
            format!("max_constant {label}"),
            levels.iter().zip(&maxima).map(|(&l, &v)| [l as f64, v]).collect(),
        );
        report.summarize(&format!("max_constant {label}"), num(maxima.iter().copied().fold(0.0, f64::max)));
        report.summarize(&format!("max_consecutive_ratio {label}"), num(worst_ratio));
        report.summarize(&format!("shell_constant {label}"), num(c_p));
        report.summarize(&format!("max_normalized {label}"), num(worst_normalized));
        report.verdict.check(
            format!("stable {label}"),
            ratios.iter().all(|&r| r <= STABILITY_RATIO),
            format!("largest ratio of consecutive maxima {}", fmt_f64(worst_ratio)),
        );
        report.verdict.check(
            format!("shell-bound {label}"),
            shell_bad == 0,
            format!("measured C = {}, {shell_bad} points above 2 * 2^(s/p)", fmt_f64(c_p)),
        );
        report.verdict.check(
            format!("tail-bound {label}"),
            tail_bad == 0,
            format!("{tail_bad} levels with measure above 2/2^k"),
        );
        report
            .verdict
            .check(format!("cap {label}"), cap_bad == 0, format!("{cap_bad} points above 2 * 2^(M/p)"));
        report.verdict.check(
            format!("shell-vanishing {label}"),
            vanish_bad == 0,
            format!("{vanish_bad} nonzero points of sup_k |S_(k 2^M) a| off the support"),
        );
    }
    Ok(report)
}
