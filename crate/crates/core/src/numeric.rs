//! Scalars: exact dyadic rationals and the sample trait shared by the
//! exact (`i128` numerator) and `f64` code paths.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// An exact dyadic rational `num / 2^shift`, kept in lowest terms.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Dyadic {
    num: BigInt,
    shift: u32,
}

impl Dyadic {
    pub fn new(num: impl Into<BigInt>, shift: u32) -> Self {
        let mut d = Dyadic {
            num: num.into(),
            shift,
        };
        d.normalize();
        d
    }

    pub fn zero() -> Self {
        Dyadic::new(0, 0)
    }

    pub fn one() -> Self {
        Dyadic::new(1, 0)
    }

    /// `2^e` for any integer exponent.
    pub fn pow2(e: i64) -> Self {
        if e >= 0 {
            Dyadic::new(BigInt::one() << (e as usize), 0)
        } else {
            Dyadic::new(1, (-e) as u32)
        }
    }

    fn normalize(&mut self) {
        if self.num.is_zero() {
            self.shift = 0;
            return;
        }
        let tz = self.num.trailing_zeros().unwrap_or(0).min(self.shift as u64) as u32;
        if tz > 0 {
            self.num >>= tz as usize;
            self.shift -= tz;
        }
    }

    pub fn numerator(&self) -> &BigInt {
        &self.num
    }

    pub fn shift(&self) -> u32 {
        self.shift
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.num.is_negative()
    }

    pub fn abs(&self) -> Self {
        Dyadic {
            num: self.num.abs(),
            shift: self.shift,
        }
    }

    pub fn pow(&self, k: u32) -> Self {
        Dyadic::new(self.num.pow(k), self.shift * k)
    }

    /// Multiply by `2^e`.
    pub fn scale_pow2(&self, e: i64) -> Self {
        self * &Dyadic::pow2(e)
    }

    /// Exact `k`-th root when the value is the `k`-th power of a dyadic rational.
    pub fn exact_root(&self, k: u32) -> Option<Self> {
        if k == 0 || self.num.is_negative() || !self.shift.is_multiple_of(k) {
            return None;
        }
        let root = self.num.nth_root(k);
        if root.pow(k) == self.num {
            Some(Dyadic::new(root, self.shift / k))
        } else {
            None
        }
    }

    /// Exact integer log2 when the value is a positive power of two.
    pub fn log2_exact(&self) -> Option<i64> {
        if self.num.is_positive() && self.num.magnitude().count_ones() == 1 {
            Some(self.num.bits() as i64 - 1 - self.shift as i64)
        } else {
            None
        }
    }

    pub fn to_f64(&self) -> f64 {
        let bits = self.num.bits();
        if bits <= 1000 {
            let f = self.num.to_f64().unwrap_or(f64::NAN);
            scale_f64(f, -(self.shift as i64))
        } else {
            let drop = bits - 900;
            let f = (&self.num >> drop as usize).to_f64().unwrap_or(f64::NAN);
            scale_f64(f, drop as i64 - self.shift as i64)
        }
    }

    /// Numerator rescaled to denominator `2^shift`, if it fits in an `i128`.
    pub fn numerator_at(&self, shift: u32) -> Option<i128> {
        if shift < self.shift {
            return None;
        }
        let up = (shift - self.shift) as usize;
        let n = &self.num << up;
        n.to_i128()
    }

    /// Best dyadic approximation of a finite `f64` (exact: every finite f64 is dyadic).
    pub fn from_f64(v: f64) -> Option<Self> {
        if !v.is_finite() {
            return None;
        }
        if v == 0.0 {
            return Some(Dyadic::zero());
        }
        let bits = v.to_bits();
        let sign = if bits >> 63 == 1 { -1i64 } else { 1 };
        let exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant, e) = if exp == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), exp - 1075)
        };
        let num = BigInt::from(sign) * BigInt::from(mant);
        Some(&Dyadic::new(num, 0) * &Dyadic::pow2(e))
    }
}

fn scale_f64(f: f64, e: i64) -> f64 {
    // powi saturates for very large exponents; split to stay finite where possible.
    let mut out = f;
    let mut e = e;
    while e > 1000 {
        out *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        out *= 2f64.powi(-1000);
        e += 1000;
    }
    out * 2f64.powi(e as i32)
}

impl From<i64> for Dyadic {
    fn from(v: i64) -> Self {
        Dyadic::new(v, 0)
    }
}

impl From<i128> for Dyadic {
    fn from(v: i128) -> Self {
        Dyadic::new(v, 0)
    }
}

fn aligned(a: &Dyadic, b: &Dyadic) -> (BigInt, BigInt, u32) {
    let s = a.shift.max(b.shift);
    (
        &a.num << (s - a.shift) as usize,
        &b.num << (s - b.shift) as usize,
        s,
    )
}

impl<'a> Add<&'a Dyadic> for &'a Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: &Dyadic) -> Dyadic {
        let (a, b, s) = aligned(self, rhs);
        Dyadic::new(a + b, s)
    }
}

impl<'a> Sub<&'a Dyadic> for &'a Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: &Dyadic) -> Dyadic {
        let (a, b, s) = aligned(self, rhs);
        Dyadic::new(a - b, s)
    }
}

impl<'a> Mul<&'a Dyadic> for &'a Dyadic {
    type Output = Dyadic;
    fn mul(self, rhs: &Dyadic) -> Dyadic {
        Dyadic::new(&self.num * &rhs.num, self.shift + rhs.shift)
    }
}

impl Add for Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: Dyadic) -> Dyadic {
        &self + &rhs
    }
}

impl Sub for Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: Dyadic) -> Dyadic {
        &self - &rhs
    }
}

impl Mul for Dyadic {
    type Output = Dyadic;
    fn mul(self, rhs: Dyadic) -> Dyadic {
        &self * &rhs
    }
}

impl Neg for Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic {
            num: -self.num,
            shift: self.shift,
        }
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b, _) = aligned(self, other);
        a.cmp(&b)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Integers print bare; everything else prints as `p/q`.
impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.shift == 0 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, BigInt::one() << self.shift as usize)
        }
    }
}

impl FromStr for Dyadic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("not an exact dyadic rational: {s:?}"));
        match s.split_once('/') {
            None => {
                let n: BigInt = s.parse().map_err(|_| bad())?;
                Ok(Dyadic::new(n, 0))
            }
            Some((p, q)) => {
                let p: BigInt = p.trim().parse().map_err(|_| bad())?;
                let q: BigInt = q.trim().parse().map_err(|_| bad())?;
                if !q.is_positive() || q.magnitude().count_ones() != 1 {
                    return Err(Error::Parse(format!("denominator of {s:?} is not a power of two")));
                }
                Ok(Dyadic::new(p, (q.bits() - 1) as u32))
            }
        }
    }
}

impl serde::Serialize for Dyadic {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for Dyadic {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A scalar that is either exact or a float.
#[derive(Clone, Debug, PartialEq)]
pub enum Number {
    Exact(Dyadic),
    Float(f64),
}

impl Number {
    pub fn to_f64(&self) -> f64 {
        match self {
            Number::Exact(d) => d.to_f64(),
            Number::Float(f) => *f,
        }
    }

    pub fn exact(&self) -> Option<&Dyadic> {
        match self {
            Number::Exact(d) => Some(d),
            Number::Float(_) => None,
        }
    }
}

/// Exact values serialize as `p/q` strings, floats as numbers.
impl serde::Serialize for Number {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Number::Exact(d) => d.serialize(s),
            Number::Float(v) => s.serialize_f64(*v),
        }
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Number::Exact(d) => d.fmt(f),
            Number::Float(v) => write!(f, "{}", fmt_f64(*v)),
        }
    }
}

/// Shortest round-trip decimal form; `-0` prints as `0`.
pub fn fmt_f64(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v}")
    }
}

/// Element type of the bulk kernels: `i128` numerators (exact mode) or `f64`.
pub trait Sample:
    Copy
    + Send
    + Sync
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Neg<Output = Self>
    + Mul<Output = Self>
    + fmt::Debug
    + 'static
{
    const ZERO: Self;
    fn from_i64(v: i64) -> Self;
    fn abs(self) -> Self;

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
}

impl Sample for i128 {
    const ZERO: Self = 0;
    fn from_i64(v: i64) -> Self {
        v as i128
    }
    fn abs(self) -> Self {
        i128::abs(self)
    }
}

impl Sample for f64 {
    const ZERO: Self = 0.0;
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
}

/// Bits needed for the largest magnitude in `nums`.
pub fn magnitude_bits(nums: &[i128]) -> u32 {
    nums.iter()
        .map(|v| 128 - v.unsigned_abs().leading_zeros())
        .max()
        .unwrap_or(0)
}

/// Fails when growing every magnitude by `growth_bits` could overflow an `i128`.
pub fn ensure_headroom(nums: &[i128], growth_bits: u32, op: &'static str) -> Result<()> {
    if magnitude_bits(nums) + growth_bits > 126 {
        Err(Error::Overflow(op))
    } else {
        Ok(())
    }
}

/// Exact values with one shared denominator: `value[i] = nums[i] / 2^shift`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactValues {
    nums: Vec<i128>,
    shift: u32,
}

impl ExactValues {
    pub fn new(nums: Vec<i128>, shift: u32) -> Self {
        let mut v = ExactValues { nums, shift };
        v.normalize();
        v
    }

    fn normalize(&mut self) {
        let tz = self
            .nums
            .iter()
            .filter(|&&v| v != 0)
            .map(|v| v.trailing_zeros())
            .min();
        match tz {
            None => self.shift = 0,
            Some(tz) => {
                let k = tz.min(self.shift);
                if k > 0 {
                    for v in &mut self.nums {
                        *v >>= k;
                    }
                    self.shift -= k;
                }
            }
        }
    }

    pub fn nums(&self) -> &[i128] {
        &self.nums
    }

    pub fn shift(&self) -> u32 {
        self.shift
    }

    pub fn into_parts(self) -> (Vec<i128>, u32) {
        (self.nums, self.shift)
    }

    pub fn get(&self, i: usize) -> Dyadic {
        Dyadic::new(self.nums[i], self.shift)
    }

    /// Both operands rescaled to a common denominator.
    pub fn align(&self, other: &ExactValues) -> Result<(Vec<i128>, Vec<i128>, u32)> {
        let s = self.shift.max(other.shift);
        let up = |v: &ExactValues| -> Result<Vec<i128>> {
            let k = s - v.shift;
            ensure_headroom(&v.nums, k + 1, "alignment")?;
            Ok(v.nums.iter().map(|x| x << k).collect())
        };
        Ok((up(self)?, up(other)?, s))
    }
}

/// Storage for a vector of samples in either numeric mode.
#[derive(Clone, Debug, PartialEq)]
pub enum Values {
    Exact(ExactValues),
    Float(Vec<f64>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NumericMode {
    Exact,
    Float,
}

impl Values {
    pub fn len(&self) -> usize {
        match self {
            Values::Exact(e) => e.nums.len(),
            Values::Float(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn mode(&self) -> NumericMode {
        match self {
            Values::Exact(_) => NumericMode::Exact,
            Values::Float(_) => NumericMode::Float,
        }
    }

    pub fn get_f64(&self, i: usize) -> f64 {
        match self {
            Values::Exact(e) => exact_to_f64(e.nums[i], e.shift),
            Values::Float(v) => v[i],
        }
    }

    pub fn get(&self, i: usize) -> Number {
        match self {
            Values::Exact(e) => Number::Exact(e.get(i)),
            Values::Float(v) => Number::Float(v[i]),
        }
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        match self {
            Values::Exact(e) => e.nums.iter().map(|&v| exact_to_f64(v, e.shift)).collect(),
            Values::Float(v) => v.clone(),
        }
    }

    pub fn to_float(&self) -> Values {
        Values::Float(self.to_f64_vec())
    }

    pub fn is_zero_at(&self, i: usize) -> bool {
        match self {
            Values::Exact(e) => e.nums[i] == 0,
            Values::Float(v) => v[i] == 0.0,
        }
    }
}

pub(crate) fn exact_to_f64(num: i128, shift: u32) -> f64 {
    (num as f64) * 2f64.powi(-(shift as i32))
}
