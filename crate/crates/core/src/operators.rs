//! Weighted and restricted maximal operators of Walsh partial sums, and the
//! weak-type constant of their outputs.
//!
//! `weighted_maximal` computes `sup_{1<=n<=2^m} |S_n f| / weight(n)`. Indices
//! beyond `2^m` add nothing: there `S_n f = f = S_(2^m) f` and every scheme has
//! `weight(n) >= weight(2^m)`; `weighted_maximal_direct` extends the range so
//! this can be checked.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::PExponent;
use crate::error::{Error, Result};
use crate::function::DyadicFunction;
use crate::group::{IndexSet, Resolution};
use crate::numeric::{ensure_headroom, Dyadic, Number, NumericMode, Sample, Values};
use crate::spectral::{index_stats, paley_butterfly};

/// A weight table `φ`, nondecreasing and `>= 1`. Between keys it is
/// extended as a step function (value at the greatest key `<= n`), and it is
/// `1` below the first key.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<TableKey, f64>", into = "BTreeMap<u64, f64>")]
pub struct PhiTable {
    entries: BTreeMap<u64, f64>,
}

impl PhiTable {
    pub fn new(entries: BTreeMap<u64, f64>) -> Result<Self> {
        let mut prev = 1.0f64;
        for (&n, &v) in &entries {
            if n == 0 {
                return Err(Error::Scheme("table keys must be positive".into()));
            }
            if !v.is_finite() || v < 1.0 {
                return Err(Error::Scheme(format!("table value {v} at {n} is below 1")));
            }
            if v < prev {
                return Err(Error::Scheme(format!("table decreases at {n}")));
            }
            prev = v;
        }
        Ok(PhiTable { entries })
    }

    pub fn entries(&self) -> &BTreeMap<u64, f64> {
        &self.entries
    }

    pub fn value(&self, n: u64) -> f64 {
        self.entries.range(..=n).next_back().map_or(1.0, |(_, &v)| v)
    }

    fn exponent(&self, n: u64) -> Option<u32> {
        exact_log2(self.value(n))
    }
}

/// Table key read from either a JSON string or an integer (buffered
/// deserialization of tagged enums presents map keys as strings).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[doc(hidden)]
pub struct TableKey(u64);

impl<'de> Deserialize<'de> for TableKey {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = TableKey;
            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a positive integer key")
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> std::result::Result<TableKey, E> {
                Ok(TableKey(v))
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> std::result::Result<TableKey, E> {
                v.parse().map(TableKey).map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

impl TryFrom<BTreeMap<TableKey, f64>> for PhiTable {
    type Error = Error;
    fn try_from(entries: BTreeMap<TableKey, f64>) -> Result<Self> {
        PhiTable::new(entries.into_iter().map(|(k, v)| (k.0, v)).collect())
    }
}

impl From<PhiTable> for BTreeMap<u64, f64> {
    fn from(t: PhiTable) -> Self {
        t.entries
    }
}

/// `Some(e)` when `v = 2^e` exactly.
fn exact_log2(v: f64) -> Option<u32> {
    if v >= 1.0 && v.is_finite() && v.to_bits() & ((1u64 << 52) - 1) == 0 {
        Some(v.log2() as u32)
    } else {
        None
    }
}

/// The denominator `n ↦ weight(n)` of a weighted maximal operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WeightScheme {
    /// `2^(ρ(n)(1/p-1))`.
    Rho { p: PExponent },
    /// `(n+1)^(1/p-1)`.
    Poly { p: PExponent },
    Unit,
    Table { phi: PhiTable },
}

impl WeightScheme {
    pub fn weight(&self, n: u64) -> Result<f64> {
        if n == 0 {
            return Err(Error::ZeroIndex);
        }
        Ok(match self {
            WeightScheme::Rho { p } => match p.exact_excess() {
                Some(k) => 2f64.powi((index_stats(n)?.rho * k) as i32),
                None => (index_stats(n)?.rho as f64 * p.excess()).exp2(),
            },
            WeightScheme::Poly { p } => ((n + 1) as f64).powf(p.excess()),
            WeightScheme::Unit => 1.0,
            WeightScheme::Table { phi } => phi.value(n),
        })
    }

    /// `e` with `weight(n) = 2^e`, when the weight is an exact power of two.
    pub fn exact_exponent(&self, n: u64) -> Result<u32> {
        if n == 0 {
            return Err(Error::ZeroIndex);
        }
        match self {
            WeightScheme::Rho { p } => match p.exact_excess() {
                Some(k) => Ok(index_stats(n)?.rho * k),
                None => Err(Error::NotExact(format!("1/p - 1 is not an integer for p = {}", p.value()))),
            },
            WeightScheme::Poly { .. } => Err(Error::NotExact("polynomial weights are not powers of two".into())),
            WeightScheme::Unit => Ok(0),
            WeightScheme::Table { phi } => phi
                .exponent(n)
                .ok_or_else(|| Error::NotExact(format!("table value at {n} is not a power of two"))),
        }
    }

    /// Exact weight when available, float otherwise.
    pub fn weight_number(&self, n: u64) -> Result<Number> {
        match self.exact_exponent(n) {
            Ok(e) => Ok(Number::Exact(Dyadic::pow2(e as i64))),
            Err(Error::NotExact(_)) => self.weight(n).map(Number::Float),
            Err(e) => Err(e),
        }
    }

    /// Whether exact-mode evaluation is possible (for tables: every entry).
    pub fn is_exact(&self) -> bool {
        match self {
            WeightScheme::Rho { p } => p.exact_excess().is_some(),
            WeightScheme::Poly { .. } => false,
            WeightScheme::Unit => true,
            WeightScheme::Table { phi } => phi.entries.values().all(|&v| exact_log2(v).is_some()),
        }
    }
}

/// `weight(n)` of a scheme; `n = 0` is an error.
pub fn weight(scheme: &WeightScheme, n: u64) -> Result<f64> {
    scheme.weight(n)
}

/// A strictly increasing, nonempty list of positive indices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct Subsequence(Vec<u64>);

impl Subsequence {
    pub fn new(indices: Vec<u64>) -> Result<Self> {
        if indices.is_empty() || indices[0] == 0 || indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Subsequence);
        }
        Ok(Subsequence(indices))
    }

    /// `{2^0, 2^1, ..., 2^m}`.
    pub fn dyadic(m: Resolution) -> Self {
        Subsequence((0..=m.get()).map(|k| 1u64 << k).collect())
    }

    pub fn indices(&self) -> &[u64] {
        &self.0
    }

    pub fn max_rho(&self) -> u32 {
        self.0.iter().map(|&n| index_stats(n).map_or(0, |s| s.rho)).max().unwrap_or(0)
    }
}

impl TryFrom<Vec<u64>> for Subsequence {
    type Error = Error;
    fn try_from(v: Vec<u64>) -> Result<Self> {
        Subsequence::new(v)
    }
}

impl From<Subsequence> for Vec<u64> {
    fn from(s: Subsequence) -> Self {
        s.0
    }
}

/// Per-index scaling `|v| ↦ |v| / weight(n)` in one numeric mode.
///
/// Exact mode keeps one common denominator: `|v| / 2^e(n)` is stored as
/// `|v| << (top - e(n))` and the whole output carries `2^top` extra.
enum Scaling {
    Exact { exps: Vec<u32>, top: u32 },
    Float { weights: Vec<f64> },
}

impl Scaling {
    /// Tables for every `n` in `indices`, stored at position `n`.
    fn new(scheme: &WeightScheme, mode: NumericMode, n_max: u64, indices: impl Iterator<Item = u64>) -> Result<Self> {
        let len = n_max as usize + 1;
        match mode {
            NumericMode::Exact => {
                if !scheme.is_exact() {
                    return Err(scheme.exact_exponent(1).err().unwrap_or_else(|| {
                        Error::NotExact("weight scheme has non power-of-two values".into())
                    }));
                }
                let mut exps = vec![0u32; len];
                let mut top = 0;
                for n in indices {
                    let e = scheme.exact_exponent(n)?;
                    exps[n as usize] = e;
                    top = top.max(e);
                }
                Ok(Scaling::Exact { exps, top })
            }
            NumericMode::Float => {
                let mut weights = vec![1.0f64; len];
                for n in indices {
                    weights[n as usize] = scheme.weight(n)?;
                }
                Ok(Scaling::Float { weights })
            }
        }
    }
}

trait Scale<S>: Sync {
    fn apply(&self, n: usize, v: S) -> S;
}

struct ShiftScale<'a> {
    exps: &'a [u32],
    top: u32,
}

impl Scale<i128> for ShiftScale<'_> {
    #[inline]
    fn apply(&self, n: usize, v: i128) -> i128 {
        v << (self.top - self.exps[n])
    }
}

struct DivScale<'a> {
    weights: &'a [f64],
}

impl Scale<f64> for DivScale<'_> {
    #[inline]
    fn apply(&self, n: usize, v: f64) -> f64 {
        v / self.weights[n]
    }
}

/// Numerators of a function in its mode, plus a flag for exactness.
enum Raw {
    Exact(Vec<i128>, u32),
    Float(Vec<f64>),
}

fn raw(f: &DyadicFunction) -> Raw {
    match f.values() {
        Values::Exact(e) => Raw::Exact(e.nums().to_vec(), e.shift()),
        Values::Float(v) => Raw::Float(v.clone()),
    }
}

/// Builds the output from sums carrying the `2^m` of the unnormalized
/// transform (and `2^top` in exact mode).
fn finish(m: Resolution, out: RawOut) -> Result<DyadicFunction> {
    match out {
        RawOut::Exact { nums, shift } => DyadicFunction::from_exact(m, nums, shift),
        RawOut::Float(v) => {
            let s = 1.0 / m.size() as f64;
            DyadicFunction::from_f64(m, v.into_iter().map(|x| x * s).collect())
        }
    }
}

enum RawOut {
    Exact { nums: Vec<i128>, shift: u32 },
    Float(Vec<f64>),
}

/// Running partial sums at every point, `n` up to `n_max` (indices past
/// `2^m` reuse the full sum). `spec` is the unnormalized spectrum.
fn direct_route<S: Sample>(spec: &[S], m: Resolution, n_max: usize, scale: &impl Scale<S>) -> Vec<S> {
    let size = m.size();
    let mut out = vec![S::ZERO; size];
    out.par_iter_mut().enumerate().for_each(|(x, o)| {
        let bits = m.coord_bits(x);
        let mut acc = S::ZERO;
        let mut best = S::ZERO;
        for n in 1..=n_max.min(size) {
            let k = n - 1;
            if (k & bits).count_ones() & 1 == 1 {
                acc = acc - spec[k];
            } else {
                acc = acc + spec[k];
            }
            best = best.max_of(scale.apply(n, acc.abs()));
        }
        for n in size + 1..=n_max {
            best = best.max_of(scale.apply(n, acc.abs()));
        }
        *o = best;
    });
    out
}

/// The same supremum for `g` supported on `I_M(0)`, `M >= 1`, using that
/// the spectrum of `g` is constant on blocks `[J 2^M, (J+1) 2^M)`.
///
/// Writing `n = J 2^M + r` with `r < 2^M`:
/// off `I_M`, `S_n g = C_J w_(J 2^M) D_r`, where `D_r` depends only on the
/// first `M` coordinates; on `I_M`, `D_r = r` and
/// `S_n g = 2^M Σ_(J'<J) C_J' w_(J' 2^M) + r C_J w_(J 2^M)`.
///
/// `c[J] = Σ_y g(y) w'_J(y)` over the first `2^(m-M)` indices, with `w'` the
/// Walsh functions at resolution `m - M`.
fn block_route<S: Sample>(c: &[S], m: Resolution, level: u32, scale: &impl Scale<S>) -> Vec<S> {
    let mb = m.get();
    let d = mb - level;
    let inner = 1usize << d;
    let blocks = 1usize << level;
    let size = m.size();
    let block_scale = S::from_i64(blocks as i64);

    // g_r = max_J scale(J 2^M + r, |c_J|)
    let gain: Vec<S> = (0..blocks)
        .map(|r| {
            (0..inner)
                .filter(|&j| j * blocks + r >= 1)
                .map(|j| scale.apply(j * blocks + r, c[j].abs()))
                .fold(S::ZERO, S::max_of)
        })
        .collect();

    let mut out = vec![S::ZERO; size];
    let (on, off) = out.split_at_mut(inner);

    let coarse = Resolution::new(level).expect("1 <= level <= m");
    off.par_chunks_mut(inner).enumerate().for_each(|(i, chunk)| {
        let xc = i + 1;
        let bits = coarse.coord_bits(xc);
        let mut dr: i64 = 0;
        let mut best = S::ZERO;
        for (r, &g) in gain.iter().enumerate().skip(1) {
            dr += if ((r - 1) & bits).count_ones() & 1 == 1 { -1 } else { 1 };
            if dr != 0 {
                best = best.max_of(S::from_i64(dr.abs()) * g);
            }
        }
        chunk.fill(best);
    });

    let fine = Resolution::new(d.max(1)).expect("d <= m");
    on.par_iter_mut().enumerate().for_each(|(y, o)| {
        let bits = if d == 0 { 0 } else { fine.coord_bits(y) };
        let mut total = S::ZERO;
        let mut best = S::ZERO;
        for (j, &c_j) in c.iter().enumerate().take(inner) {
            let cj = if (j & bits).count_ones() & 1 == 1 { -c_j } else { c_j };
            let base = block_scale * total;
            let mut v = base;
            for r in 0..blocks {
                let n = j * blocks + r;
                if n >= 1 {
                    best = best.max_of(scale.apply(n, v.abs()));
                }
                v = v + cj;
            }
            total = total + cj;
        }
        best = best.max_of(scale.apply(size, (block_scale * total).abs()));
        *o = best;
    });
    out
}

/// Smallest dyadic interval containing the support: `(level, first index)`.
fn support_interval(f: &DyadicFunction) -> Option<(u32, usize)> {
    let m = f.resolution().get();
    let lo = (0..f.len()).find(|&i| !f.is_zero_at(i))?;
    let hi = (0..f.len()).rev().find(|&i| !f.is_zero_at(i))?;
    let d = usize::BITS - (lo ^ hi).leading_zeros();
    Some((m - d, lo & !((1usize << d) - 1)))
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Route {
    Auto,
    Direct(u64),
}

fn check_n_max(m: Resolution, n_max: u64) -> Result<()> {
    let size = m.size() as u64;
    if n_max < size || n_max > 4 * size {
        return Err(Error::range("n_max", n_max, format!("in [2^{0}, 2^({0}+2)]", m.get())));
    }
    Ok(())
}

fn maximal_impl(f: &DyadicFunction, scheme: &WeightScheme, route: Route) -> Result<DyadicFunction> {
    let m = f.resolution();
    let size = m.size();
    let n_max = match route {
        Route::Auto => size as u64,
        Route::Direct(n) => n,
    };
    let Some((level, base)) = support_interval(f) else {
        return Ok(DyadicFunction::zeros(m, f.mode()));
    };
    let scaling = Scaling::new(scheme, f.mode(), n_max, 1..=n_max)?;
    let use_block = route == Route::Auto && level >= 1;
    let g = if use_block { f.translate(base) } else { f.clone() };

    let inner = if use_block { 1usize << (m.get() - level) } else { size };
    // partial sums are bounded by 2^m times the largest coefficient
    let out = match (raw(&g), &scaling) {
        (Raw::Exact(nums, shift), Scaling::Exact { exps, top }) => {
            ensure_headroom(&nums, m.get(), "weighted maximal operator")?;
            let spec = paley_butterfly(&nums[..inner]);
            ensure_headroom(&spec, m.get() + 1 + top, "weighted maximal operator")?;
            let sc = ShiftScale { exps, top: *top };
            let v = if use_block {
                block_route(&spec, m, level, &sc)
            } else {
                direct_route(&spec, m, n_max as usize, &sc)
            };
            RawOut::Exact {
                nums: v,
                shift: shift + m.get() + top,
            }
        }
        (Raw::Float(v), Scaling::Float { weights }) => {
            let sc = DivScale { weights };
            let spec = paley_butterfly(&v[..inner]);
            RawOut::Float(if use_block {
                block_route(&spec, m, level, &sc)
            } else {
                direct_route(&spec, m, n_max as usize, &sc)
            })
        }
        _ => unreachable!("scaling follows the input mode"),
    };
    let h = finish(m, out)?;
    Ok(if use_block { h.translate(base) } else { h })
}

/// `sup_{1<=n<=2^m} |S_n f| / weight(n)`, pointwise.
///
/// Exact input requires a scheme with power-of-two weights. Functions
/// supported in a proper dyadic interval take a block route costing
/// `O(2^(m + m - M) + 4^M)` for support level `M`.
pub fn weighted_maximal(f: &DyadicFunction, scheme: &WeightScheme) -> Result<DyadicFunction> {
    maximal_impl(f, scheme, Route::Auto)
}

/// The same supremum by running sums over every `n <= n_max` at every point,
/// with `S_n f = f` for `n > 2^m`. `n_max` must lie in `[2^m, 2^(m+2)]`.
pub fn weighted_maximal_direct(f: &DyadicFunction, scheme: &WeightScheme, n_max: u64) -> Result<DyadicFunction> {
    check_n_max(f.resolution(), n_max)?;
    maximal_impl(f, scheme, Route::Direct(n_max))
}

/// `sup_k |S_(n_k) f| / weight(n_k)`; indices past `2^m` give `f`.
pub fn restricted_maximal(f: &DyadicFunction, seq: &Subsequence, scheme: &WeightScheme) -> Result<DyadicFunction> {
    let m = f.resolution();
    let size = m.size();
    let last = *seq.indices().last().expect("nonempty");
    let scaling = Scaling::new(scheme, f.mode(), last, seq.indices().iter().copied())?;

    fn run<S: Sample>(spec: &[S], seq: &[u64], size: usize, scale: &impl Scale<S>) -> Vec<S> {
        let partials: Vec<Vec<S>> = seq
            .par_iter()
            .map(|&n| {
                let keep = (n as usize).min(size);
                let mut t = spec.to_vec();
                t[keep..].iter_mut().for_each(|c| *c = S::ZERO);
                let s = paley_butterfly(&t);
                s.into_iter().map(|x| scale.apply(n as usize, x.abs())).collect()
            })
            .collect();
        let mut out = vec![S::ZERO; size];
        for p in &partials {
            for (o, &x) in out.iter_mut().zip(p) {
                *o = o.max_of(x);
            }
        }
        out
    }

    let out = match (raw(f), &scaling) {
        (Raw::Exact(nums, shift), Scaling::Exact { exps, top }) => {
            ensure_headroom(&nums, m.get(), "restricted maximal operator")?;
            let spec = paley_butterfly(&nums);
            ensure_headroom(&spec, m.get() + 1 + top, "restricted maximal operator")?;
            let sc = ShiftScale { exps, top: *top };
            RawOut::Exact {
                nums: run(&spec, seq.indices(), size, &sc),
                shift: shift + m.get() + top,
            }
        }
        (Raw::Float(v), Scaling::Float { weights }) => {
            RawOut::Float(run(&paley_butterfly(&v), seq.indices(), size, &DivScale { weights }))
        }
        _ => unreachable!("scaling follows the input mode"),
    };
    finish(m, out)
}

/// An index set with a label for reports.
#[derive(Clone, Debug, PartialEq)]
pub struct Restriction {
    pub set: IndexSet,
    pub label: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FunctionMeta {
    pub resolution: u32,
    pub mode: NumericMode,
    pub support_size: usize,
}

/// `sup_t t^p μ{x ∈ set : g(x) >= t}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeakTypeReport {
    pub p: f64,
    pub value: f64,
    /// Largest level `t` of `g` at which the supremum is attained.
    pub attaining_level: Number,
    pub restricted_to: Option<String>,
    pub function_meta: FunctionMeta,
}

/// Measures `sup_t t^p μ{g >= t}` over the levels of `g` (restricted to a set
/// when given). Candidates are compared exactly when `g` is exact and `1/p`
/// is an integer.
pub fn weak_type_constant(g: &DyadicFunction, p: PExponent, restrict: Option<&Restriction>) -> WeakTypeReport {
    let m = g.resolution();
    let size = m.size() as f64;
    let idx: Vec<usize> = match restrict {
        Some(r) => r.set.iter().collect(),
        None => (0..g.len()).collect(),
    };
    let meta = FunctionMeta {
        resolution: m.get(),
        mode: g.mode(),
        support_size: g.support().len(),
    };
    let label = restrict.map(|r| r.label.clone());

    let (value, level) = match (g.exact(), p.integer_reciprocal()) {
        (Some(e), Some(k)) => {
            let mut v: Vec<i128> = idx.iter().map(|&i| e.nums()[i].abs()).collect();
            v.sort_unstable_by(|a, b| b.cmp(a));
            let mut best: Option<(Dyadic, i128)> = None;
            let mut i = 0;
            while i < v.len() && v[i] > 0 {
                let lvl = v[i];
                while i < v.len() && v[i] == lvl {
                    i += 1;
                }
                // (t^p μ)^k = t μ^k
                let cand = &Dyadic::new(lvl, e.shift()) * &Dyadic::new(i as i64, m.get()).pow(k);
                if best.as_ref().is_none_or(|(b, _)| cand > *b) {
                    best = Some((cand, lvl));
                }
            }
            match best {
                Some((b, lvl)) => (b.to_f64().powf(p.value()), Number::Exact(Dyadic::new(lvl, e.shift()))),
                None => (0.0, Number::Exact(Dyadic::zero())),
            }
        }
        _ => {
            let mut v: Vec<f64> = idx.iter().map(|&i| g.get_f64(i).abs()).collect();
            v.sort_unstable_by(|a, b| b.total_cmp(a));
            let mut best = (0.0f64, 0.0f64);
            let mut i = 0;
            while i < v.len() && v[i] > 0.0 {
                let lvl = v[i];
                while i < v.len() && v[i] == lvl {
                    i += 1;
                }
                let cand = lvl.powf(p.value()) * (i as f64 / size);
                if cand > best.0 {
                    best = (cand, lvl);
                }
            }
            let level = match g.mode() {
                NumericMode::Exact => Number::Exact(Dyadic::from_f64(best.1).expect("exact level")),
                NumericMode::Float => Number::Float(best.1),
            };
            (best.0, level)
        }
    };
    WeakTypeReport {
        p: p.value(),
        value,
        attaining_level: level,
        restricted_to: label,
        function_meta: meta,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::maximal_function;
    use crate::group::{interval, shell_range, GroupPoint};
    use crate::spectral::{partial_sum, walsh};
    use proptest::prelude::*;

    fn res(m: u32) -> Resolution {
        Resolution::new(m).unwrap()
    }

    fn rho(k: u32) -> WeightScheme {
        WeightScheme::Rho {
            p: PExponent::reciprocal(k).unwrap(),
        }
    }

    fn pf(p: f64) -> PExponent {
        PExponent::new(p).unwrap()
    }

    /// `max_n |S_n f| / weight(n)` from full partial sums, one `n` at a time.
    fn oracle(f: &DyadicFunction, scheme: &WeightScheme) -> Vec<f64> {
        let m = f.resolution();
        let mut best = vec![0.0f64; m.size()];
        for n in 1..=m.size() as u64 {
            let s = partial_sum(f, n).unwrap().function.to_f64_vec();
            let w = scheme.weight(n).unwrap();
            for (b, v) in best.iter_mut().zip(s) {
                *b = b.max(v.abs() / w);
            }
        }
        best
    }

    #[test]
    fn weight_examples() {
        assert_eq!(rho(2).weight(5).unwrap(), 4.0);
        for k in 0..20 {
            assert_eq!(WeightScheme::Rho { p: pf(0.3) }.weight(1 << k).unwrap(), 1.0);
        }
        assert_eq!(WeightScheme::Poly { p: pf(0.5) }.weight(7).unwrap(), 8.0);
        assert!(rho(2).weight(0).is_err());
        assert_eq!(rho(3).exact_exponent(5).unwrap(), 4);
        assert!(WeightScheme::Rho { p: pf(0.75) }.exact_exponent(5).is_err());
        assert!(WeightScheme::Poly { p: pf(0.5) }.exact_exponent(5).is_err());
        let w = WeightScheme::Rho { p: pf(0.75) }.weight(5).unwrap();
        assert!((w - 2f64.powf(2.0 / 3.0)).abs() <= 2.0 * f64::EPSILON * w);
        assert_eq!(rho(2).weight_number(6).unwrap(), Number::Exact(Dyadic::from(2i64)));
    }

    #[test]
    fn phi_table_rules() {
        let t = PhiTable::new(BTreeMap::from([(4, 2.0), (8, 8.0)])).unwrap();
        assert_eq!(t.value(1), 1.0);
        assert_eq!(t.value(5), 2.0);
        assert_eq!(t.value(100), 8.0);
        assert!(PhiTable::new(BTreeMap::from([(4, 2.0), (8, 1.5)])).is_err());
        assert!(PhiTable::new(BTreeMap::from([(4, 0.5)])).is_err());
        assert!(PhiTable::new(BTreeMap::from([(0, 1.0)])).is_err());
        let s = WeightScheme::Table { phi: t };
        assert!(s.is_exact());
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<WeightScheme>(&json).unwrap(), s);
        assert!(serde_json::from_str::<WeightScheme>(r#"{"kind":"table","phi":{"3":2.0,"5":1.0}}"#).is_err());
        let inexact = WeightScheme::Table {
            phi: PhiTable::new(BTreeMap::from([(2, 3.0)])).unwrap(),
        };
        assert!(!inexact.is_exact());
    }

    #[test]
    fn subsequence_rules() {
        assert!(Subsequence::new(vec![]).is_err());
        assert!(Subsequence::new(vec![0, 1]).is_err());
        assert!(Subsequence::new(vec![3, 3]).is_err());
        let s = Subsequence::new(vec![1, 5, 9]).unwrap();
        assert_eq!(s.max_rho(), 3);
        assert_eq!(Subsequence::dyadic(res(3)).indices(), &[1, 2, 4, 8]);
    }

    #[test]
    fn walsh_example() {
        let w5 = walsh(5, res(3)).unwrap();
        let out = weighted_maximal(&w5, &rho(2)).unwrap();
        assert_eq!(out, DyadicFunction::constant(res(3), 1));
        assert_eq!(weighted_maximal_direct(&w5, &rho(2), 8).unwrap(), out);
    }

    #[test]
    fn exact_input_refuses_inexact_scheme() {
        let f = walsh(3, res(3)).unwrap();
        assert!(matches!(
            weighted_maximal(&f, &WeightScheme::Poly { p: pf(0.5) }),
            Err(Error::NotExact(_))
        ));
        assert!(weighted_maximal(&f.to_float(), &WeightScheme::Poly { p: pf(0.5) }).is_ok());
    }

    #[test]
    fn matches_partial_sum_oracle() {
        let m = res(5);
        let schemes = [rho(1), rho(2), rho(3), WeightScheme::Unit];
        for seed in 0..6i64 {
            // one spread-out function and one supported on a proper interval
            let spread: Vec<i64> = (0..32).map(|i| ((i * 37 + seed * 11) % 13) - 6).collect();
            let local: Vec<i64> = (0..32)
                .map(|i| if (8..16).contains(&i) { ((i * 5 + seed) % 7) - 3 } else { 0 })
                .collect();
            for vals in [spread, local] {
                let f = DyadicFunction::from_ints(m, vals).unwrap();
                for s in &schemes {
                    assert_eq!(weighted_maximal(&f, s).unwrap().to_f64_vec(), oracle(&f, s));
                }
                let poly = WeightScheme::Poly { p: pf(0.5) };
                let got = weighted_maximal(&f.to_float(), &poly).unwrap();
                for (a, b) in got.to_f64_vec().iter().zip(oracle(&f, &poly)) {
                    assert!((a - b).abs() <= 1e-12 * b.max(1.0));
                }
            }
        }
    }

    #[test]
    fn restricted_examples() {
        let m = res(5);
        let f = DyadicFunction::from_ints(m, (0..32).map(|i| (i * i % 9) - 4).collect()).unwrap();
        let dyadic = restricted_maximal(&f, &Subsequence::dyadic(m), &WeightScheme::Unit).unwrap();
        assert_eq!(dyadic, maximal_function(&f));
        let single = restricted_maximal(&f, &Subsequence::new(vec![11]).unwrap(), &WeightScheme::Unit).unwrap();
        assert_eq!(single, partial_sum(&f, 11).unwrap().function.abs());
        let beyond = restricted_maximal(&f, &Subsequence::new(vec![100]).unwrap(), &WeightScheme::Unit).unwrap();
        assert_eq!(beyond, f.abs());
    }

    #[test]
    fn weak_type_examples() {
        let m = res(8);
        let p = PExponent::reciprocal(2).unwrap();
        for n in 0..=8u32 {
            let g = crate::spectral::dirichlet_dyadic(n, m).unwrap();
            let r = weak_type_constant(&g, p, None);
            let want = 2f64.powf(n as f64 * 0.5) * 2f64.powi(-(n as i32));
            assert!((r.value - want).abs() < 1e-15);
            assert_eq!(r.attaining_level, Number::Exact(Dyadic::pow2(n as i64)));
        }
        let zero = DyadicFunction::zeros(m, NumericMode::Exact);
        assert_eq!(weak_type_constant(&zero, p, None).value, 0.0);
        let fzero = DyadicFunction::zeros(m, NumericMode::Float);
        assert_eq!(weak_type_constant(&fzero, pf(0.75), None).value, 0.0);

        // levels 4 on 1 cell, 1 on 3 cells at m = 2, p = 1/2:
        // candidates 2 * 1/4 = 1/2 and 1 * 4/4 = 1
        let g = DyadicFunction::from_ints(res(2), vec![4, 1, 1, 1]).unwrap();
        let r = weak_type_constant(&g, p, None);
        assert_eq!(r.value, 1.0);
        assert_eq!(r.attaining_level, Number::Exact(Dyadic::one()));
        let off = Restriction {
            set: IndexSet::from_range(res(2), 0..1),
            label: "first cell".into(),
        };
        let r = weak_type_constant(&g, p, Some(&off));
        assert_eq!(r.value, 0.5);
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["attaining_level"], "4");
        assert_eq!(json["restricted_to"], "first cell");
        let rf = weak_type_constant(&g.to_float(), p, None);
        assert_eq!(rf.value, 1.0);
    }

    /// Haar-pair or generic mean-zero atom on `I_level(x)` with integer `1/p = k`.
    fn atom(m: Resolution, level: u32, base: usize, k: u32, seed: u64) -> DyadicFunction {
        let support = interval(GroupPoint::new(m, base).unwrap(), level).unwrap();
        let len = support.len() as i128;
        let bound = 1i128 << (level * k);
        let mut vals = vec![0i128; m.size()];
        let mut state = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
        let raw: Vec<i128> = (0..len)
            .map(|_| {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                (state % 201) as i128 - 100
            })
            .collect();
        let mean_free: Vec<i128> = raw.iter().map(|v| v * len - raw.iter().sum::<i128>()).collect();
        let dev = mean_free.iter().map(|v| v.abs()).max().unwrap().max(1);
        for (i, v) in support.range().zip(mean_free) {
            vals[i] = v * bound;
        }
        // value / dev keeps |a| <= bound; dev is not a power of two, so
        // scale by 2^-ceil(log2 dev) instead
        let shift = 128 - dev.leading_zeros();
        DyadicFunction::from_exact(m, vals, shift).unwrap()
    }

    #[test]
    fn shell_vanishing_for_atoms() {
        // for x in shell s and s < [n]: S_n a(x) = 0
        for m_bits in 4..=7u32 {
            let m = res(m_bits);
            for level in 1..m_bits {
                for seed in 0..3u64 {
                    let base = (seed as usize * 977) % m.size();
                    let a = atom(m, level, base & !((1 << (m_bits - level)) - 1), 2, seed);
                    let start = base & !((1 << (m_bits - level)) - 1);
                    for n in 1..m.size() as u64 {
                        let low = n.trailing_zeros();
                        let s_n = partial_sum(&a, n).unwrap().function;
                        for s in 0..low.min(level) {
                            // shell s around the atom's interval
                            for x in shell_range(m, s) {
                                assert!(s_n.is_zero_at(x ^ start), "m={m_bits} M={level} n={n} s={s}");
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn atom_shell_bound() {
        // off I_M, on shell s: S̃a <= 2 * 2^(s/p)
        let m = res(9);
        for k in 1..=3u32 {
            for level in 1..=6u32 {
                for seed in 0..4u64 {
                    let a = atom(m, level, 0, k, seed);
                    let out = weighted_maximal(&a, &rho(k)).unwrap();
                    for s in 0..level {
                        let cap = 2.0 * 2f64.powi((s * k) as i32);
                        for x in shell_range(m, s) {
                            assert!(out.get_f64(x) <= cap, "k={k} M={level} s={s}");
                        }
                    }
                }
            }
        }
    }

    fn arb_function(max_m: u32) -> impl Strategy<Value = DyadicFunction> {
        (1..=max_m).prop_flat_map(|m| {
            let size = 1usize << m;
            (
                Just(m),
                0..=m,
                0..size,
                proptest::collection::vec(-50i64..=50, size),
                0u32..4,
            )
                .prop_map(|(m, level, base, vals, shift)| {
                    let r = Resolution::new(m).unwrap();
                    let iv = interval(GroupPoint::new(r, base).unwrap(), level).unwrap();
                    let nums = vals
                        .into_iter()
                        .enumerate()
                        .map(|(i, v)| if iv.contains_idx(i) { v as i128 } else { 0 })
                        .collect();
                    DyadicFunction::from_exact(r, nums, shift).unwrap()
                })
        })
    }

    fn arb_exact_scheme() -> impl Strategy<Value = WeightScheme> {
        prop_oneof![
            Just(WeightScheme::Unit),
            (1u32..=4).prop_map(rho),
            (0u32..4, 0u32..4).prop_map(|(a, b)| WeightScheme::Table {
                phi: PhiTable::new(BTreeMap::from([(3, 2f64.powi(a as i32)), (6, 2f64.powi((a + b) as i32))]))
                    .unwrap()
            }),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(96))]

        #[test]
        fn block_route_equals_direct_route(f in arb_function(8), s in arb_exact_scheme()) {
            let m = f.resolution().size() as u64;
            let fast = weighted_maximal(&f, &s).unwrap();
            let slow = weighted_maximal_direct(&f, &s, m).unwrap();
            prop_assert_eq!(&fast, &slow);
            let ff = weighted_maximal(&f.to_float(), &s).unwrap();
            let tol = 1e-12 * fast.to_f64_vec().iter().fold(1.0f64, |a, &b| a.max(b));
            prop_assert!(ff.max_abs_diff(&fast) <= tol);
        }

        #[test]
        fn tail_is_sufficient(f in arb_function(8), s in arb_exact_scheme(), p in 0.2f64..1.0) {
            let m = f.resolution().size() as u64;
            let base = weighted_maximal_direct(&f, &s, m).unwrap();
            prop_assert_eq!(&weighted_maximal_direct(&f, &s, 4 * m).unwrap(), &base);
            let g = f.to_float();
            for scheme in [WeightScheme::Poly { p: pf(p) }, WeightScheme::Rho { p: pf(p) }] {
                let a = weighted_maximal_direct(&g, &scheme, m).unwrap();
                prop_assert_eq!(&weighted_maximal_direct(&g, &scheme, 4 * m).unwrap(), &a);
            }
        }

        #[test]
        fn unit_dominates_and_restricted_is_smaller(f in arb_function(7), s in arb_exact_scheme(), picks in proptest::collection::btree_set(1u64..=128, 1..8)) {
            let full = weighted_maximal(&f, &s).unwrap();
            let unit = weighted_maximal(&f, &WeightScheme::Unit).unwrap();
            let seq = Subsequence::new(picks.into_iter().collect()).unwrap();
            let sub = restricted_maximal(&f, &seq, &s).unwrap();
            for i in 0..f.len() {
                prop_assert!(unit.get(i).exact().unwrap() >= full.get(i).exact().unwrap());
                if seq.indices().iter().all(|&n| n <= f.len() as u64) {
                    prop_assert!(sub.get(i).exact().unwrap() <= full.get(i).exact().unwrap());
                }
            }
            prop_assert!(unit.to_f64_vec().iter().zip(f.to_f64_vec()).all(|(u, v)| *u >= v.abs()));
        }

        #[test]
        fn positively_homogeneous(f in arb_function(7), s in arb_exact_scheme(), c in -8i64..=8, e in 0i64..4) {
            let c = Dyadic::new(c, 0).scale_pow2(-e);
            let lhs = weighted_maximal(&f.scale(&c).unwrap(), &s).unwrap();
            let rhs = weighted_maximal(&f, &s).unwrap().scale(&c.abs()).unwrap();
            prop_assert_eq!(lhs, rhs);
        }
    }
}
