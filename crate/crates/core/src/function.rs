//! `DyadicFunction`: a function on the group that is constant on the cosets of
//! `I_m`, stored as its `2^m` values, together with its Walsh spectrum type.

use crate::error::{Error, Result};
use crate::group::{IndexSet, Resolution};
use crate::numeric::{ensure_headroom, Dyadic, ExactValues, NumericMode, Number, Values};

#[derive(Clone, Debug, PartialEq)]
pub struct DyadicFunction {
    resolution: Resolution,
    values: Values,
}

/// Walsh–Fourier coefficients `f^(0..2^m)` in Paley order.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralVector {
    resolution: Resolution,
    coeffs: Values,
}

fn check_len(resolution: Resolution, len: usize) -> Result<()> {
    if len != resolution.size() {
        return Err(Error::range("value count", len, format!("= 2^{}", resolution.get())));
    }
    Ok(())
}

macro_rules! shared_accessors {
    ($field:ident) => {
        pub fn resolution(&self) -> Resolution {
            self.resolution
        }

        pub fn len(&self) -> usize {
            self.$field.len()
        }

        pub fn is_empty(&self) -> bool {
            false
        }

        pub fn mode(&self) -> NumericMode {
            self.$field.mode()
        }

        pub fn get(&self, i: usize) -> Number {
            self.$field.get(i)
        }

        pub fn get_f64(&self, i: usize) -> f64 {
            self.$field.get_f64(i)
        }

        pub fn to_f64_vec(&self) -> Vec<f64> {
            self.$field.to_f64_vec()
        }

        pub fn exact(&self) -> Option<&ExactValues> {
            match &self.$field {
                Values::Exact(e) => Some(e),
                Values::Float(_) => None,
            }
        }

        pub fn floats(&self) -> Option<&[f64]> {
            match &self.$field {
                Values::Float(v) => Some(v),
                Values::Exact(_) => None,
            }
        }
    };
}

impl DyadicFunction {
    pub fn new(resolution: Resolution, values: Values) -> Result<Self> {
        check_len(resolution, values.len())?;
        Ok(DyadicFunction { resolution, values })
    }

    pub fn from_exact(resolution: Resolution, nums: Vec<i128>, shift: u32) -> Result<Self> {
        DyadicFunction::new(resolution, Values::Exact(ExactValues::new(nums, shift)))
    }

    pub fn from_ints(resolution: Resolution, ints: Vec<i64>) -> Result<Self> {
        DyadicFunction::from_exact(resolution, ints.into_iter().map(i128::from).collect(), 0)
    }

    pub fn from_f64(resolution: Resolution, values: Vec<f64>) -> Result<Self> {
        DyadicFunction::new(resolution, Values::Float(values))
    }

    /// Builds an exact function from arbitrary dyadic values.
    pub fn from_dyadics(resolution: Resolution, values: &[Dyadic]) -> Result<Self> {
        check_len(resolution, values.len())?;
        let shift = values.iter().map(Dyadic::shift).max().unwrap_or(0);
        let nums = values
            .iter()
            .map(|d| d.numerator_at(shift).ok_or(Error::Overflow("from_dyadics")))
            .collect::<Result<Vec<_>>>()?;
        DyadicFunction::from_exact(resolution, nums, shift)
    }

    pub fn zeros(resolution: Resolution, mode: NumericMode) -> Self {
        let n = resolution.size();
        let values = match mode {
            NumericMode::Exact => Values::Exact(ExactValues::new(vec![0; n], 0)),
            NumericMode::Float => Values::Float(vec![0.0; n]),
        };
        DyadicFunction { resolution, values }
    }

    pub fn constant(resolution: Resolution, c: i64) -> Self {
        DyadicFunction {
            resolution,
            values: Values::Exact(ExactValues::new(vec![c as i128; resolution.size()], 0)),
        }
    }

    shared_accessors!(values);

    pub fn values(&self) -> &Values {
        &self.values
    }

    pub fn into_values(self) -> Values {
        self.values
    }

    pub fn to_float(&self) -> DyadicFunction {
        DyadicFunction {
            resolution: self.resolution,
            values: self.values.to_float(),
        }
    }

    pub fn is_zero_at(&self, i: usize) -> bool {
        self.values.is_zero_at(i)
    }

    /// Indices where the function is nonzero.
    pub fn support(&self) -> IndexSet {
        IndexSet::from_indices(self.resolution, (0..self.len()).filter(|&i| !self.is_zero_at(i)))
    }

    /// `∫ f dμ = 2^(-m) Σ f(x)`.
    pub fn integral(&self) -> Number {
        let m = self.resolution.get();
        match &self.values {
            Values::Exact(e) => {
                let sum = e.nums().iter().fold(Dyadic::zero(), |acc, &v| &acc + &Dyadic::from(v));
                Number::Exact(Dyadic::new(sum.numerator().clone(), sum.shift() + e.shift() + m))
            }
            Values::Float(v) => Number::Float(v.iter().sum::<f64>() / self.len() as f64),
        }
    }

    pub fn abs(&self) -> DyadicFunction {
        self.map_samples(|v| v.abs(), |v| v.abs())
    }

    pub fn neg(&self) -> DyadicFunction {
        self.map_samples(|v| -v, |v| -v)
    }

    fn map_samples(&self, fe: impl Fn(i128) -> i128, ff: impl Fn(f64) -> f64) -> DyadicFunction {
        let values = match &self.values {
            Values::Exact(e) => Values::Exact(ExactValues::new(
                e.nums().iter().map(|&v| fe(v)).collect(),
                e.shift(),
            )),
            Values::Float(v) => Values::Float(v.iter().map(|&x| ff(x)).collect()),
        };
        DyadicFunction {
            resolution: self.resolution,
            values,
        }
    }

    /// Multiply by an exact dyadic constant (exact input stays exact).
    pub fn scale(&self, c: &Dyadic) -> Result<DyadicFunction> {
        match &self.values {
            Values::Float(_) => Ok(self.scale_f64(c.to_f64())),
            Values::Exact(e) => {
                let num = num_traits::ToPrimitive::to_i128(c.numerator()).ok_or(Error::Overflow("scale"))?;
                let bits = 128 - num.unsigned_abs().leading_zeros();
                ensure_headroom(e.nums(), bits, "scale")?;
                DyadicFunction::from_exact(
                    self.resolution,
                    e.nums().iter().map(|&v| v * num).collect(),
                    e.shift() + c.shift(),
                )
            }
        }
    }

    pub fn scale_f64(&self, c: f64) -> DyadicFunction {
        DyadicFunction {
            resolution: self.resolution,
            values: Values::Float(self.values.to_f64_vec().into_iter().map(|v| v * c).collect()),
        }
    }

    fn binary(
        &self,
        other: &DyadicFunction,
        fe: impl Fn(i128, i128) -> i128,
        ff: impl Fn(f64, f64) -> f64,
    ) -> Result<DyadicFunction> {
        if self.resolution != other.resolution {
            return Err(Error::ResolutionMismatch(self.resolution.get(), other.resolution.get()));
        }
        let values = match (&self.values, &other.values) {
            (Values::Exact(a), Values::Exact(b)) => {
                let (a, b, s) = a.align(b)?;
                Values::Exact(ExactValues::new(
                    a.iter().zip(&b).map(|(&x, &y)| fe(x, y)).collect(),
                    s,
                ))
            }
            _ => {
                let a = self.values.to_f64_vec();
                let b = other.values.to_f64_vec();
                Values::Float(a.iter().zip(&b).map(|(&x, &y)| ff(x, y)).collect())
            }
        };
        Ok(DyadicFunction {
            resolution: self.resolution,
            values,
        })
    }

    pub fn add(&self, other: &DyadicFunction) -> Result<DyadicFunction> {
        self.binary(other, |a, b| a + b, |a, b| a + b)
    }

    pub fn sub(&self, other: &DyadicFunction) -> Result<DyadicFunction> {
        self.binary(other, |a, b| a - b, |a, b| a - b)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &DyadicFunction) -> Result<DyadicFunction> {
        if self.resolution != other.resolution {
            return Err(Error::ResolutionMismatch(self.resolution.get(), other.resolution.get()));
        }
        match (&self.values, &other.values) {
            (Values::Exact(a), Values::Exact(b)) => {
                let bits = crate::numeric::magnitude_bits(b.nums());
                ensure_headroom(a.nums(), bits, "pointwise product")?;
                DyadicFunction::from_exact(
                    self.resolution,
                    a.nums().iter().zip(b.nums()).map(|(&x, &y)| x * y).collect(),
                    a.shift() + b.shift(),
                )
            }
            _ => {
                let a = self.values.to_f64_vec();
                let b = other.values.to_f64_vec();
                DyadicFunction::from_f64(self.resolution, a.iter().zip(&b).map(|(x, y)| x * y).collect())
            }
        }
    }

    /// `g(x) = f(x + h)`, group translation by the point with index `h`.
    pub fn translate(&self, h: usize) -> DyadicFunction {
        let n = self.len();
        let h = h & (n - 1);
        let values = match &self.values {
            Values::Exact(e) => Values::Exact(ExactValues::new(
                (0..n).map(|i| e.nums()[i ^ h]).collect(),
                e.shift(),
            )),
            Values::Float(v) => Values::Float((0..n).map(|i| v[i ^ h]).collect()),
        };
        DyadicFunction {
            resolution: self.resolution,
            values,
        }
    }

    /// Largest absolute deviation from `other`, as a float.
    pub fn max_abs_diff(&self, other: &DyadicFunction) -> f64 {
        let a = self.to_f64_vec();
        let b = other.to_f64_vec();
        a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }
}

impl SpectralVector {
    pub fn new(resolution: Resolution, coeffs: Values) -> Result<Self> {
        check_len(resolution, coeffs.len())?;
        Ok(SpectralVector { resolution, coeffs })
    }

    pub fn from_exact(resolution: Resolution, nums: Vec<i128>, shift: u32) -> Result<Self> {
        SpectralVector::new(resolution, Values::Exact(ExactValues::new(nums, shift)))
    }

    pub fn from_f64(resolution: Resolution, coeffs: Vec<f64>) -> Result<Self> {
        SpectralVector::new(resolution, Values::Float(coeffs))
    }

    /// The coefficient vector with a single `1` at `k`.
    pub fn unit(resolution: Resolution, k: usize) -> Result<Self> {
        if k >= resolution.size() {
            return Err(Error::range("k", k, format!("< 2^{}", resolution.get())));
        }
        let mut nums = vec![0i128; resolution.size()];
        nums[k] = 1;
        SpectralVector::from_exact(resolution, nums, 0)
    }

    shared_accessors!(coeffs);

    pub fn coeffs(&self) -> &Values {
        &self.coeffs
    }

    /// Zero every coefficient with index `>= n`.
    pub fn truncate(&self, n: usize) -> SpectralVector {
        let coeffs = match &self.coeffs {
            Values::Exact(e) => {
                let mut nums = e.nums().to_vec();
                nums.iter_mut().skip(n).for_each(|v| *v = 0);
                Values::Exact(ExactValues::new(nums, e.shift()))
            }
            Values::Float(v) => {
                let mut v = v.clone();
                v.iter_mut().skip(n).for_each(|x| *x = 0.0);
                Values::Float(v)
            }
        };
        SpectralVector {
            resolution: self.resolution,
            coeffs,
        }
    }
}

#[cfg(test)]
#[allow(clippy::single_range_in_vec_init)]
mod tests {
    use super::*;

    fn res(m: u32) -> Resolution {
        Resolution::new(m).unwrap()
    }

    #[test]
    fn length_must_match_resolution() {
        assert!(DyadicFunction::from_ints(res(2), vec![1, 2, 3]).is_err());
        assert!(DyadicFunction::from_ints(res(2), vec![1, 2, 3, 4]).is_ok());
    }

    #[test]
    fn integral_is_exact_mean() {
        let f = DyadicFunction::from_ints(res(2), vec![3, 1, 1, -1]).unwrap();
        assert_eq!(f.integral(), Number::Exact(Dyadic::new(1, 0)));
        let g = DyadicFunction::from_exact(res(1), vec![1, 0], 1).unwrap();
        assert_eq!(g.integral(), Number::Exact(Dyadic::new(1, 2)));
    }

    #[test]
    fn exact_arithmetic_aligns_denominators() {
        let a = DyadicFunction::from_exact(res(1), vec![1, 3], 1).unwrap();
        let b = DyadicFunction::from_exact(res(1), vec![1, 1], 2).unwrap();
        let s = a.add(&b).unwrap();
        assert_eq!(s.exact().unwrap().nums(), &[3, 7]);
        assert_eq!(s.exact().unwrap().shift(), 2);
        let d = a.sub(&a).unwrap();
        assert_eq!(d, DyadicFunction::zeros(res(1), NumericMode::Exact));
    }

    #[test]
    fn translation_is_xor() {
        let f = DyadicFunction::from_ints(res(2), vec![10, 11, 12, 13]).unwrap();
        let g = f.translate(3);
        assert_eq!(g.exact().unwrap().nums(), &[13, 12, 11, 10]);
        assert_eq!(g.translate(3), f);
    }

    #[test]
    fn support_and_scale() {
        let f = DyadicFunction::from_ints(res(3), vec![0, 0, 2, -2, 0, 0, 0, 0]).unwrap();
        assert_eq!(f.support().ranges(), &[2..4]);
        let g = f.scale(&Dyadic::new(1, 1)).unwrap();
        assert_eq!(g.exact().unwrap().nums(), &[0, 0, 1, -1, 0, 0, 0, 0]);
    }
}
