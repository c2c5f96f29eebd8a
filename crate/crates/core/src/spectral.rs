//! Walsh–Paley system, the fast Walsh–Hadamard transform, Dirichlet kernels
//! and partial sums.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::function::{DyadicFunction, SpectralVector};
use crate::group::Resolution;
use crate::numeric::{ensure_headroom, ExactValues, Sample, Values};

/// Sign of `w_n` at the point with index `idx`: `true` when `w_n(x) = -1`.
#[inline]
pub fn walsh_negative(m: Resolution, n: usize, idx: usize) -> bool {
    (n & m.coord_bits(idx)).count_ones() & 1 == 1
}

/// Rademacher function `r_k(x) = (-1)^(x_k)`.
pub fn rademacher(k: u32, m: Resolution) -> Result<DyadicFunction> {
    if k >= m.get() {
        return Err(Error::range("k", k, format!("< {}", m.get())));
    }
    let shift = m.get() - 1 - k;
    let vals = (0..m.size())
        .map(|idx| if (idx >> shift) & 1 == 1 { -1 } else { 1 })
        .collect();
    DyadicFunction::from_ints(m, vals)
}

/// Walsh function `w_n`, the product of `r_k` over the set bits `k` of `n`.
pub fn walsh(n: usize, m: Resolution) -> Result<DyadicFunction> {
    if n >= m.size() {
        return Err(Error::range("n", n, format!("< 2^{}", m.get())));
    }
    let vals = (0..m.size())
        .map(|idx| if walsh_negative(m, n, idx) { -1 } else { 1 })
        .collect();
    DyadicFunction::from_ints(m, vals)
}

/// Unnormalized Paley-ordered Walsh–Hadamard butterfly: `out[k] = Σ_x in[x] w_k(x)`.
///
/// Stage `t` consumes the top index bit (coordinate `x_t`) and inserts the
/// frequency bit `k_t` at position `t`, shifting the bits above it up by
/// one. After `m` stages bit `t` of the output index is `k_t`, so the result
/// is in Paley order without a separate bit-reversal pass. The matrix is
/// symmetric, so the same butterfly synthesizes from coefficients.
pub fn paley_butterfly<S: Sample>(input: &[S]) -> Vec<S> {
    let n = input.len();
    assert!(n.is_power_of_two(), "butterfly length must be a power of two");
    if n == 1 {
        return input.to_vec();
    }
    let m = n.trailing_zeros();
    let half = n / 2;
    let mut src = input.to_vec();
    let mut dst = vec![S::ZERO; n];
    for t in 0..m {
        let low = 1usize << t;
        for upper in 0..(half >> t) {
            let read = upper << t;
            let write = upper << (t + 1);
            let (a, b) = (&src[read..read + low], &src[half + read..half + read + low]);
            let (sum, diff) = dst[write..write + 2 * low].split_at_mut(low);
            for l in 0..low {
                sum[l] = a[l] + b[l];
                diff[l] = a[l] - b[l];
            }
        }
        std::mem::swap(&mut src, &mut dst);
    }
    src
}

/// `f^(k) = 2^(-m) Σ_x f(x) w_k(x)` for every `k`, in `O(m 2^m)`.
pub fn fwht_forward(f: &DyadicFunction) -> Result<SpectralVector> {
    let m = f.resolution();
    let coeffs = match f.values() {
        Values::Exact(e) => {
            ensure_headroom(e.nums(), m.get(), "forward transform")?;
            Values::Exact(ExactValues::new(paley_butterfly(e.nums()), e.shift() + m.get()))
        }
        Values::Float(v) => {
            let scale = 1.0 / m.size() as f64;
            Values::Float(paley_butterfly(v).into_iter().map(|c| c * scale).collect())
        }
    };
    SpectralVector::new(m, coeffs)
}

/// Synthesis `Σ_k c_k w_k`.
pub fn fwht_inverse(c: &SpectralVector) -> Result<DyadicFunction> {
    let m = c.resolution();
    let values = match c.coeffs() {
        Values::Exact(e) => {
            ensure_headroom(e.nums(), m.get(), "inverse transform")?;
            Values::Exact(ExactValues::new(paley_butterfly(e.nums()), e.shift()))
        }
        Values::Float(v) => Values::Float(paley_butterfly(v)),
    };
    DyadicFunction::new(m, values)
}

/// The characteristics `[n]`, `|n|`, `ρ(n)` and `V(n)` of a positive integer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct IndexStats {
    pub n: u64,
    /// `[n]`: lowest set bit.
    pub low: u32,
    /// `|n|`: highest set bit.
    pub high: u32,
    /// `ρ(n) = |n| - [n]`.
    pub rho: u32,
    /// Binary variation `V(n) = n_0 + Σ_{k>=1} |n_k - n_{k-1}|`.
    #[serde(rename = "V")]
    pub variation: u32,
}

pub fn index_stats(n: u64) -> Result<IndexStats> {
    if n == 0 {
        return Err(Error::ZeroIndex);
    }
    let low = n.trailing_zeros();
    let high = 63 - n.leading_zeros();
    let bit = |k: u32| -> i32 { if k < 64 { ((n >> k) & 1) as i32 } else { 0 } };
    // the digit above |n| is zero and contributes the final |0 - 1|
    let variation = bit(0) + (1..=high + 1).map(|k| (bit(k) - bit(k - 1)).abs()).sum::<i32>();
    Ok(IndexStats {
        n,
        low,
        high,
        rho: high - low,
        variation: variation as u32,
    })
}

fn check_kernel_index(n: usize, m: Resolution) -> Result<()> {
    if n == 0 || n > m.size() {
        return Err(Error::range("n", n, format!("in [1, 2^{}]", m.get())));
    }
    Ok(())
}

/// `D_n = Σ_{k<n} w_k`, summed term by term.
pub fn dirichlet_direct(n: usize, m: Resolution) -> Result<DyadicFunction> {
    check_kernel_index(n, m)?;
    let size = m.size();
    let mut acc = vec![0i64; size];
    for k in 0..n {
        add_walsh(&mut acc, m, k);
    }
    DyadicFunction::from_ints(m, acc)
}

/// `acc += w_k` in place (`k < 2^m`).
pub fn add_walsh(acc: &mut [i64], m: Resolution, k: usize) {
    for (idx, a) in acc.iter_mut().enumerate() {
        if walsh_negative(m, k, idx) {
            *a -= 1;
        } else {
            *a += 1;
        }
    }
}

/// `D_{2^k}`: `2^k` on `I_k`, zero elsewhere.
pub fn dirichlet_dyadic(k: u32, m: Resolution) -> Result<DyadicFunction> {
    if k > m.get() {
        return Err(Error::range("k", k, format!("<= {}", m.get())));
    }
    let len = 1usize << (m.get() - k);
    let vals = (0..m.size()).map(|i| if i < len { 1i64 << k } else { 0 }).collect();
    DyadicFunction::from_ints(m, vals)
}

/// `D_n = w_n Σ_k n_k (D_{2^(k+1)} - D_{2^k})` in `O(popcount(n) 2^m)`.
///
/// `D_{2^(k+1)} - D_{2^k}` is `+2^k` on `I_{k+1}` and `-2^k` on
/// `I_k \ I_{k+1}`, so each term is two range updates.
pub fn dirichlet_fast(n: usize, m: Resolution) -> Result<DyadicFunction> {
    check_kernel_index(n, m)?;
    if n == m.size() {
        return dirichlet_dyadic(m.get(), m);
    }
    let mb = m.get();
    let mut acc = vec![0i64; m.size()];
    let mut bits = n;
    while bits != 0 {
        let k = bits.trailing_zeros();
        bits &= bits - 1;
        let inner = 1usize << (mb - k - 1);
        let v = 1i64 << k;
        acc[..inner].iter_mut().for_each(|a| *a += v);
        acc[inner..2 * inner].iter_mut().for_each(|a| *a -= v);
    }
    for (idx, a) in acc.iter_mut().enumerate() {
        if walsh_negative(m, n, idx) {
            *a = -*a;
        }
    }
    DyadicFunction::from_ints(m, acc)
}

/// Result of `S_n f`; `tail_clamped` marks `n > 2^m`, where `S_n f = f`.
#[derive(Clone, Debug, PartialEq)]
pub struct PartialSum {
    pub function: DyadicFunction,
    pub tail_clamped: bool,
}

/// `S_n f = Σ_{k<n} f^(k) w_k`, by truncating the spectrum and synthesizing.
pub fn partial_sum(f: &DyadicFunction, n: u64) -> Result<PartialSum> {
    if n == 0 {
        return Err(Error::range("n", 0u64, ">= 1"));
    }
    let size = f.resolution().size() as u64;
    if n >= size {
        return Ok(PartialSum {
            function: f.clone(),
            tail_clamped: n > size,
        });
    }
    let spec = fwht_forward(f)?;
    partial_sum_from_spectrum(&spec, n).map(|function| PartialSum {
        function,
        tail_clamped: false,
    })
}

/// `S_n` from an already computed spectrum (`n` is clamped to `2^m`).
pub fn partial_sum_from_spectrum(spec: &SpectralVector, n: u64) -> Result<DyadicFunction> {
    let n = n.min(spec.resolution().size() as u64) as usize;
    fwht_inverse(&spec.truncate(n))
}
