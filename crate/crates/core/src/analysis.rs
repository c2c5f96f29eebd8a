//! Quasi-norms (`L_p`, weak-`L_p`, `H_p`), the dyadic maximal function and
//! p-atom validation.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::DyadicFunction;
use crate::group::{DyadicInterval, Resolution};
use crate::numeric::{ensure_headroom, Dyadic, ExactValues, Values};

/// An exponent `0 < p <= 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct PExponent {
    p: f64,
    reciprocal: Option<u32>,
}

/// `Some(k)` when `p` is exactly the float `1/k`.
pub fn integer_reciprocal(p: f64) -> Option<u32> {
    if p.is_nan() || p <= 0.0 || !p.is_finite() {
        return None;
    }
    let k = (1.0 / p).round();
    if k >= 1.0 && k <= u32::MAX as f64 && 1.0 / k == p {
        Some(k as u32)
    } else {
        None
    }
}

impl PExponent {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::Domain(p));
        }
        Ok(PExponent {
            p,
            reciprocal: integer_reciprocal(p),
        })
    }

    /// `p = 1/k`.
    pub fn reciprocal(k: u32) -> Result<Self> {
        if k == 0 {
            return Err(Error::Domain(f64::INFINITY));
        }
        PExponent::new(1.0 / k as f64)
    }

    pub fn value(self) -> f64 {
        self.p
    }

    /// `1/p - 1` as a float.
    pub fn excess(self) -> f64 {
        match self.reciprocal {
            Some(k) => (k - 1) as f64,
            None => 1.0 / self.p - 1.0,
        }
    }

    /// `1/p - 1` when it is a nonnegative integer: the only case where exact
    /// arithmetic is allowed.
    pub fn exact_excess(self) -> Option<u32> {
        self.reciprocal.map(|k| k - 1)
    }

    pub fn integer_reciprocal(self) -> Option<u32> {
        self.reciprocal
    }
}

impl TryFrom<f64> for PExponent {
    type Error = Error;
    fn try_from(p: f64) -> Result<Self> {
        PExponent::new(p)
    }
}

impl From<PExponent> for f64 {
    fn from(p: PExponent) -> f64 {
        p.p
    }
}

/// A quasi-norm value; `exact` is filled whenever the value is a dyadic
/// rational that can be computed without rounding.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuasiNorm {
    pub value: f64,
    pub exact: Option<Dyadic>,
}

/// Distinct levels of `|f|`, largest first, with their multiplicities.
enum Levels {
    Exact { levels: Vec<(i128, usize)>, shift: u32 },
    Float(Vec<(f64, usize)>),
}

fn group_levels<T: Copy + PartialEq>(mut v: Vec<T>, cmp: impl Fn(&T, &T) -> Ordering) -> Vec<(T, usize)> {
    v.sort_unstable_by(|a, b| cmp(b, a));
    let mut out: Vec<(T, usize)> = Vec::new();
    for x in v {
        match out.last_mut() {
            Some((lvl, c)) if *lvl == x => *c += 1,
            _ => out.push((x, 1)),
        }
    }
    out
}

fn abs_levels(values: &Values, subset: Option<&[usize]>) -> Levels {
    match values {
        Values::Exact(e) => {
            let v: Vec<i128> = match subset {
                Some(idx) => idx.iter().map(|&i| e.nums()[i].abs()).collect(),
                None => e.nums().iter().map(|v| v.abs()).collect(),
            };
            Levels::Exact {
                levels: group_levels(v, |a, b| a.cmp(b)),
                shift: e.shift(),
            }
        }
        Values::Float(f) => {
            let v: Vec<f64> = match subset {
                Some(idx) => idx.iter().map(|&i| f[i].abs()).collect(),
                None => f.iter().map(|v| v.abs()).collect(),
            };
            Levels::Float(group_levels(v, |a, b| a.total_cmp(b)))
        }
    }
}

fn check_p(p: f64) -> Result<()> {
    if p > 0.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(p))
    }
}

/// `‖f‖_p = (2^(-m) Σ |f(x)|^p)^(1/p)`.
pub fn lp_quasinorm(f: &DyadicFunction, p: f64) -> Result<QuasiNorm> {
    check_p(p)?;
    let m = f.resolution();
    let size = m.size() as f64;
    let levels = abs_levels(f.values(), None);
    let value = match &levels {
        Levels::Exact { levels, shift } => {
            let scale = 2f64.powi(-(*shift as i32));
            let s: f64 = levels.iter().map(|&(v, c)| c as f64 * (v as f64 * scale).powf(p)).sum();
            (s / size).powf(1.0 / p)
        }
        Levels::Float(levels) => {
            let s: f64 = levels.iter().map(|&(v, c)| c as f64 * v.powf(p)).sum();
            (s / size).powf(1.0 / p)
        }
    };
    let exact = match (&levels, integer_reciprocal(p)) {
        (Levels::Exact { levels, shift }, Some(k)) => exact_lp(levels, *shift, m, k),
        _ => None,
    };
    let value = exact.as_ref().map_or(value, Dyadic::to_f64);
    Ok(QuasiNorm { value, exact })
}

/// Exact `(Σ μ_l v_l^(1/k))^k` when it is a dyadic rational: either a single
/// nonzero level, or every level a perfect `k`-th power.
fn exact_lp(levels: &[(i128, usize)], shift: u32, m: Resolution, k: u32) -> Option<Dyadic> {
    let nonzero: Vec<_> = levels.iter().filter(|(v, _)| *v != 0).collect();
    let mu = |c: usize| Dyadic::new(c as i64, m.get());
    match nonzero.as_slice() {
        [] => Some(Dyadic::zero()),
        [(v, c)] => Some(&Dyadic::new(*v, shift) * &mu(*c).pow(k)),
        many => {
            let mut sum = Dyadic::zero();
            for (v, c) in many {
                let root = Dyadic::new(*v, shift).exact_root(k)?;
                sum = &sum + &(&root * &mu(*c));
            }
            Some(sum.pow(k))
        }
    }
}

/// `‖f‖_{weak-L_p} = sup_λ λ μ(|f| > λ)^(1/p)`, evaluated exactly as the
/// maximum over the levels `v` of `|f|` of `v μ(|f| >= v)^(1/p)`.
pub fn weak_lp_quasinorm(f: &DyadicFunction, p: f64) -> Result<QuasiNorm> {
    check_p(p)?;
    let m = f.resolution();
    let size = m.size() as f64;
    match (abs_levels(f.values(), None), integer_reciprocal(p)) {
        (Levels::Exact { levels, shift }, Some(k)) => {
            let mut best = Dyadic::zero();
            let mut cum = 0usize;
            for (v, c) in levels {
                cum += c;
                if v == 0 {
                    continue;
                }
                let cand = &Dyadic::new(v, shift) * &Dyadic::new(cum as i64, m.get()).pow(k);
                if cand > best {
                    best = cand;
                }
            }
            Ok(QuasiNorm {
                value: best.to_f64(),
                exact: Some(best),
            })
        }
        (levels, _) => {
            let levels: Vec<(f64, usize)> = match levels {
                Levels::Float(l) => l,
                Levels::Exact { levels, shift } => {
                    let s = 2f64.powi(-(shift as i32));
                    levels.into_iter().map(|(v, c)| (v as f64 * s, c)).collect()
                }
            };
            let mut best = 0.0f64;
            let mut cum = 0usize;
            for (v, c) in levels {
                cum += c;
                if v > 0.0 {
                    best = best.max(v * (cum as f64 / size).powf(1.0 / p));
                }
            }
            Ok(QuasiNorm {
                value: best,
                exact: None,
            })
        }
    }
}

/// `sup_n |E_n f|` where `E_n f(x)` is the average of `f` over `I_n(x)`,
/// `n = 0..=m`. For functions constant on `I_m` cosets this is the maximal
/// function of the regular martingale `(S_{2^n} f)`.
pub fn maximal_function(f: &DyadicFunction) -> DyadicFunction {
    let m = f.resolution();
    let mb = m.get();
    let size = m.size();
    match f.values() {
        Values::Exact(e) => {
            // level-n averages carry denominator 2^(shift + m); numerator = block sum * 2^n
            let mut best: Vec<i128> = e.nums().iter().map(|v| (v << mb).abs()).collect();
            let mut sums: Vec<i128> = e.nums().to_vec();
            for n in (0..mb).rev() {
                sums = sums.chunks_exact(2).map(|p| p[0] + p[1]).collect();
                let block = size >> n;
                for (b, &s) in sums.iter().enumerate() {
                    let v = (s << n).abs();
                    for x in &mut best[b * block..(b + 1) * block] {
                        if v > *x {
                            *x = v;
                        }
                    }
                }
            }
            DyadicFunction::new(m, Values::Exact(ExactValues::new(best, e.shift() + mb)))
                .expect("length preserved")
        }
        Values::Float(v) => {
            let mut best: Vec<f64> = v.iter().map(|x| x.abs()).collect();
            let mut avgs = v.clone();
            for n in (0..mb).rev() {
                avgs = avgs.chunks_exact(2).map(|p| 0.5 * (p[0] + p[1])).collect();
                let block = size >> n;
                for (b, &a) in avgs.iter().enumerate() {
                    for x in &mut best[b * block..(b + 1) * block] {
                        *x = x.max(a.abs());
                    }
                }
            }
            DyadicFunction::from_f64(m, best).expect("length preserved")
        }
    }
}

/// Fails if the exact maximal function would overflow.
pub fn maximal_function_checked(f: &DyadicFunction) -> Result<DyadicFunction> {
    if let Some(e) = f.exact() {
        ensure_headroom(e.nums(), f.resolution().get() + 1, "maximal function")?;
    }
    Ok(maximal_function(f))
}

/// `‖f‖_{H_p} = ‖f*‖_p`.
pub fn hardy_quasinorm(f: &DyadicFunction, p: PExponent) -> Result<QuasiNorm> {
    lp_quasinorm(&maximal_function_checked(f)?, p.value())
}

/// A candidate p-atom: values supported on a dyadic interval.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomSpec {
    pub support: DyadicInterval,
    pub values: DyadicFunction,
    pub p: PExponent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomReport {
    pub zero_mean: bool,
    pub sup_bound: bool,
    pub support: bool,
    /// Largest amount by which a condition is exceeded (0 when all hold).
    pub worst_violation: f64,
}

impl AtomReport {
    pub fn pass(&self) -> bool {
        self.zero_mean && self.sup_bound && self.support
    }
}

/// Relative slack allowed for float-mode atoms; exact atoms get none.
pub const FLOAT_ATOM_TOLERANCE: f64 = 1e-12;

/// Checks `∫_I a = 0`, `‖a‖_∞ <= μ(I)^(-1/p)` and `supp a ⊂ I`.
pub fn validate_atom(a: &AtomSpec) -> AtomReport {
    let f = &a.values;
    let range = a.support.range();
    let level = a.support.level();
    let mut worst = 0.0f64;

    let outside = (0..f.len()).filter(|i| !range.contains(i));
    let mut support_ok = true;
    for i in outside {
        if !f.is_zero_at(i) {
            support_ok = false;
            worst = worst.max(f.get_f64(i).abs());
        }
    }

    let (zero_mean, sup_bound) = match (f.exact(), a.p.exact_excess()) {
        (Some(e), Some(excess)) => {
            let bound = Dyadic::pow2(level as i64 * (excess as i64 + 1));
            let sum = range
                .clone()
                .fold(Dyadic::zero(), |acc, i| &acc + &Dyadic::from(e.nums()[i]));
            let mean = Dyadic::new(sum.numerator().clone(), e.shift() + f.resolution().get());
            let max = range
                .clone()
                .map(|i| Dyadic::new(e.nums()[i].abs(), e.shift()))
                .max()
                .unwrap_or_else(Dyadic::zero);
            worst = worst.max(mean.abs().to_f64());
            if max > bound {
                worst = worst.max((&max - &bound).to_f64());
            }
            (mean.is_zero(), max <= bound)
        }
        _ => {
            let bound = 2f64.powf(level as f64 / a.p.value());
            let tol = FLOAT_ATOM_TOLERANCE * bound;
            let size = f.len() as f64;
            let mean: f64 = range.clone().map(|i| f.get_f64(i)).sum::<f64>() / size;
            let max = range.clone().map(|i| f.get_f64(i).abs()).fold(0.0, f64::max);
            let mean_excess = (mean.abs() - tol * a.support.measure().to_f64()).max(0.0);
            let sup_excess = (max - bound * (1.0 + FLOAT_ATOM_TOLERANCE)).max(0.0);
            worst = worst.max(mean_excess).max(sup_excess);
            (mean_excess == 0.0, sup_excess == 0.0)
        }
    };

    AtomReport {
        zero_mean,
        sup_bound,
        support: support_ok,
        worst_violation: worst,
    }
}
