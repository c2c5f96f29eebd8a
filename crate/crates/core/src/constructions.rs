//! Test objects: random p-atoms, the sharpness sequence
//! `f_n = D_(2^(n+1)) - D_(2^n)` and the probe indices `q = 2^n + 2^s`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{AtomSpec, PExponent};
use crate::error::{Error, Result};
use crate::function::DyadicFunction;
use crate::group::{interval, GroupPoint, Resolution};
use crate::spectral::{dirichlet_dyadic, index_stats, partial_sum};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AtomGenerator {
    /// `b` on the left half of the support, `-b` on the right half.
    HaarPair,
    /// `±b` with exactly as many plus as minus signs.
    RandomSigns,
    /// Arbitrary bounded values, mean removed, rescaled under `b`.
    RandomBounded,
}

impl AtomGenerator {
    pub const ALL: [AtomGenerator; 3] = [
        AtomGenerator::HaarPair,
        AtomGenerator::RandomSigns,
        AtomGenerator::RandomBounded,
    ];
}

/// How to build one atom: support `I_M(base)`, exponent, generator, seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomRecipe {
    #[serde(rename = "M")]
    pub level: u32,
    /// Index of any point of the support.
    pub base: usize,
    pub p: PExponent,
    pub generator: AtomGenerator,
    pub seed: u64,
}

/// Magnitude range of the raw draws of `RandomBounded`.
const DRAW_BITS: u32 = 16;

/// Builds the atom of a recipe; `b = μ(I_M)^(-1/p) = 2^(M/p)`.
///
/// Exact when `1/p` is an integer, float otherwise.
pub fn make_atom(recipe: &AtomRecipe, m: Resolution) -> Result<AtomSpec> {
    let level = recipe.level;
    if level > m.get() {
        return Err(Error::Recipe(format!("support level {level} exceeds resolution {}", m.get())));
    }
    if level == m.get() {
        return Err(Error::Recipe("support is a single cell".into()));
    }
    let support = interval(GroupPoint::new(m, recipe.base)?, level)?;
    let cells = support.len();
    let mut rng = ChaCha8Rng::seed_from_u64(recipe.seed);

    // signed pattern t_i and a power of two 2^scale with |t_i| <= 2^scale;
    // the atom is b t_i / 2^scale on the support
    let (pattern, scale): (Vec<i64>, u32) = match recipe.generator {
        AtomGenerator::HaarPair => {
            let half = cells / 2;
            ((0..cells).map(|i| if i < half { 1 } else { -1 }).collect(), 0)
        }
        AtomGenerator::RandomSigns => {
            let mut signs: Vec<i64> = (0..cells).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
            signs.shuffle(&mut rng);
            (signs, 0)
        }
        AtomGenerator::RandomBounded => {
            let lim = 1i64 << DRAW_BITS;
            let draws: Vec<i64> = (0..cells).map(|_| rng.gen_range(-lim..=lim)).collect();
            let sum: i64 = draws.iter().sum();
            let t: Vec<i64> = draws.iter().map(|v| v * cells as i64 - sum).collect();
            let dev = t.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0);
            (t, 64 - dev.leading_zeros())
        }
    };

    let start = support.start();
    let values = match recipe.p.integer_reciprocal() {
        Some(k) => {
            let mut nums = vec![0i128; m.size()];
            let up = level.checked_mul(k).ok_or(Error::Overflow("atom construction"))?;
            let bits = pattern.iter().map(|t| 64 - t.unsigned_abs().leading_zeros()).max().unwrap_or(0);
            if bits + up > 126 {
                return Err(Error::Overflow("atom construction"));
            }
            for (i, t) in pattern.iter().enumerate() {
                nums[start + i] = (*t as i128) << up;
            }
            DyadicFunction::from_exact(m, nums, scale)?
        }
        None => {
            let b = (level as f64 / recipe.p.value()).exp2() / (scale as f64).exp2();
            let mut vals = vec![0.0f64; m.size()];
            for (i, t) in pattern.iter().enumerate() {
                vals[start + i] = b * *t as f64;
            }
            DyadicFunction::from_f64(m, vals)?
        }
    };
    Ok(AtomSpec {
        support,
        values,
        p: recipe.p,
    })
}

/// `f_n = D_(2^(n+1)) - D_(2^n)`: `2^n` on `I_(n+1)`, `-2^n` on `I_n \ I_(n+1)`.
pub fn counterexample_fn(n: u32, m: Resolution) -> Result<DyadicFunction> {
    if n == 0 || n + 1 > m.get() {
        return Err(Error::range("n", n, format!("in [1, {}]", m.get() - 1)));
    }
    dirichlet_dyadic(n + 1, m)?.sub(&dirichlet_dyadic(n, m)?)
}

/// `q = 2^n + 2^s` with `[q] = s`, `|q| = n`, `ρ(q) = n - s`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ProbeIndex {
    pub n: u32,
    pub s: u32,
    pub q: u64,
}

pub fn probe_index(n: u32, s: u32) -> Result<ProbeIndex> {
    if s >= n {
        return Err(Error::range("s", s, format!("< n = {n}")));
    }
    if n >= 63 {
        return Err(Error::range("n", n, "< 63"));
    }
    Ok(ProbeIndex {
        n,
        s,
        q: (1u64 << n) + (1u64 << s),
    })
}

/// `S_q f_n` at `q = 2^n + 2^s`; its modulus is `|D_(2^s)|`.
pub fn partial_sum_probe(n: u32, s: u32, m: Resolution) -> Result<DyadicFunction> {
    let probe = probe_index(n, s)?;
    let f = counterexample_fn(n, m)?;
    Ok(partial_sum(&f, probe.q)?.function)
}

/// `ρ(q)` of a probe, through the index statistics.
pub fn probe_rho(p: &ProbeIndex) -> u32 {
    index_stats(p.q).map_or(0, |s| s.rho)
}
