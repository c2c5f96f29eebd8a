//! The dyadic group truncated to `m` coordinates.
//!
//! A point is stored as an index in `[0, 2^m)` whose most significant bit is
//! the coordinate `x_0`. Under this convention every dyadic interval
//! `I_n(x)` is a contiguous index range of length `2^(m-n)`, and group
//! addition is bitwise XOR of indices.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::Dyadic;

pub const MAX_RESOLUTION: u32 = 24;

/// Number of binary coordinates modelled, `1 <= m <= 24`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Resolution(u32);

impl Resolution {
    pub fn new(m: u32) -> Result<Self> {
        if (1..=MAX_RESOLUTION).contains(&m) {
            Ok(Resolution(m))
        } else {
            Err(Error::Resolution(m))
        }
    }

    pub fn get(self) -> u32 {
        self.0
    }

    /// Group size `2^m`.
    pub fn size(self) -> usize {
        1usize << self.0
    }

    /// Reverse the low `m` bits of `idx`: maps an index to the integer whose
    /// bit `j` is the coordinate `x_j`.
    #[inline]
    pub fn coord_bits(self, idx: usize) -> usize {
        idx.reverse_bits() >> (usize::BITS - self.0)
    }
}

impl TryFrom<u32> for Resolution {
    type Error = Error;
    fn try_from(m: u32) -> Result<Self> {
        Resolution::new(m)
    }
}

impl From<Resolution> for u32 {
    fn from(r: Resolution) -> u32 {
        r.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GroupPoint {
    resolution: Resolution,
    idx: usize,
}

impl GroupPoint {
    pub fn new(resolution: Resolution, idx: usize) -> Result<Self> {
        if idx >= resolution.size() {
            return Err(Error::range("point index", idx, format!("< 2^{}", resolution.get())));
        }
        Ok(GroupPoint { resolution, idx })
    }

    pub fn zero(resolution: Resolution) -> Self {
        GroupPoint { resolution, idx: 0 }
    }

    pub fn from_coords(resolution: Resolution, coords: &[u8]) -> Result<Self> {
        if coords.len() != resolution.get() as usize {
            return Err(Error::range(
                "coordinate count",
                coords.len(),
                format!("= {}", resolution.get()),
            ));
        }
        let mut idx = 0usize;
        for &c in coords {
            if c > 1 {
                return Err(Error::range("coordinate", c, "0 or 1"));
            }
            idx = (idx << 1) | c as usize;
        }
        Ok(GroupPoint { resolution, idx })
    }

    pub fn resolution(&self) -> Resolution {
        self.resolution
    }

    pub fn idx(&self) -> usize {
        self.idx
    }

    /// Coordinate `x_j`, for `j < m`.
    pub fn coord(&self, j: u32) -> u8 {
        debug_assert!(j < self.resolution.get());
        ((self.idx >> (self.resolution.get() - 1 - j)) & 1) as u8
    }

    pub fn coords(&self) -> Vec<u8> {
        (0..self.resolution.get()).map(|j| self.coord(j)).collect()
    }

    /// Group addition (coordinate-wise mod 2).
    pub fn add(&self, other: &GroupPoint) -> GroupPoint {
        GroupPoint {
            resolution: self.resolution,
            idx: self.idx ^ other.idx,
        }
    }
}

/// The point `e_k` with `x_k = 1` and every other coordinate zero.
pub fn point_e(k: u32, m: Resolution) -> Result<GroupPoint> {
    if k >= m.get() {
        return Err(Error::range("k", k, format!("< {}", m.get())));
    }
    Ok(GroupPoint {
        resolution: m,
        idx: 1 << (m.get() - 1 - k),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DyadicInterval {
    level: u32,
    base: GroupPoint,
}

impl DyadicInterval {
    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn base(&self) -> GroupPoint {
        self.base
    }

    pub fn resolution(&self) -> Resolution {
        self.base.resolution
    }

    pub fn len(&self) -> usize {
        1 << (self.base.resolution.get() - self.level)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn start(&self) -> usize {
        let len = self.len();
        self.base.idx / len * len
    }

    pub fn range(&self) -> Range<usize> {
        let start = self.start();
        start..start + self.len()
    }

    pub fn contains(&self, x: &GroupPoint) -> bool {
        self.contains_idx(x.idx)
    }

    pub fn contains_idx(&self, idx: usize) -> bool {
        self.range().contains(&idx)
    }

    pub fn measure(&self) -> Dyadic {
        Dyadic::pow2(-(self.level as i64))
    }

    pub fn to_set(&self) -> IndexSet {
        IndexSet::from_range(self.resolution(), self.range())
    }
}

/// `I_n(x)`: the points agreeing with `x` in coordinates `0..n`.
pub fn interval(x: GroupPoint, n: u32) -> Result<DyadicInterval> {
    let m = x.resolution.get();
    if n > m {
        return Err(Error::range("interval level", n, format!("<= {m}")));
    }
    Ok(DyadicInterval { level: n, base: x })
}

/// A subset of `[0, 2^m)` kept as sorted, disjoint, non-adjacent ranges.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IndexSet {
    resolution: Resolution,
    ranges: Vec<Range<usize>>,
}

impl IndexSet {
    pub fn empty(resolution: Resolution) -> Self {
        IndexSet {
            resolution,
            ranges: Vec::new(),
        }
    }

    // one range covering everything, not a range of indices
    #[allow(clippy::single_range_in_vec_init)]
    pub fn full(resolution: Resolution) -> Self {
        IndexSet {
            resolution,
            ranges: vec![0..resolution.size()],
        }
    }

    pub fn from_range(resolution: Resolution, r: Range<usize>) -> Self {
        IndexSet::from_ranges(resolution, vec![r])
    }

    pub fn from_ranges(resolution: Resolution, mut ranges: Vec<Range<usize>>) -> Self {
        let n = resolution.size();
        ranges.retain(|r| r.start < r.end.min(n));
        ranges.sort_by_key(|r| r.start);
        let mut merged: Vec<Range<usize>> = Vec::with_capacity(ranges.len());
        for r in ranges {
            let r = r.start..r.end.min(n);
            match merged.last_mut() {
                Some(last) if r.start <= last.end => last.end = last.end.max(r.end),
                _ => merged.push(r),
            }
        }
        IndexSet {
            resolution,
            ranges: merged,
        }
    }

    pub fn from_indices(resolution: Resolution, idx: impl IntoIterator<Item = usize>) -> Self {
        IndexSet::from_ranges(resolution, idx.into_iter().map(|i| i..i + 1).collect())
    }

    pub fn resolution(&self) -> Resolution {
        self.resolution
    }

    pub fn ranges(&self) -> &[Range<usize>] {
        &self.ranges
    }

    pub fn len(&self) -> usize {
        self.ranges.iter().map(|r| r.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.ranges.iter().any(|r| r.contains(&idx))
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.ranges.iter().flat_map(|r| r.clone())
    }

    pub fn complement(&self) -> IndexSet {
        let mut out = Vec::new();
        let mut at = 0;
        for r in &self.ranges {
            if r.start > at {
                out.push(at..r.start);
            }
            at = r.end;
        }
        if at < self.resolution.size() {
            out.push(at..self.resolution.size());
        }
        IndexSet {
            resolution: self.resolution,
            ranges: out,
        }
    }

    pub fn union(&self, other: &IndexSet) -> IndexSet {
        let mut all = self.ranges.clone();
        all.extend(other.ranges.iter().cloned());
        IndexSet::from_ranges(self.resolution, all)
    }

    pub fn intersects(&self, other: &IndexSet) -> bool {
        self.iter().any(|i| other.contains(i))
    }

    pub fn measure(&self) -> Dyadic {
        measure(self)
    }
}

/// Haar measure of an index set: `|set| * 2^(-m)`.
pub fn measure(set: &IndexSet) -> Dyadic {
    Dyadic::new(set.len() as i64, set.resolution.get())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Shell {
    pub level: u32,
    pub set: IndexSet,
}

/// The complement of `I_m` split into the shells `I_s \ I_{s+1}`, `s = 0..m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShellDecomposition {
    resolution: Resolution,
    shells: Vec<Shell>,
}

impl ShellDecomposition {
    pub fn resolution(&self) -> Resolution {
        self.resolution
    }

    pub fn shells(&self) -> &[Shell] {
        &self.shells
    }
}

/// Index range of the shell `I_s \ I_{s+1}` (equal to `I_{s+1}(e_s)`).
pub fn shell_range(m: Resolution, s: u32) -> Range<usize> {
    debug_assert!(s < m.get());
    let lo = 1usize << (m.get() - s - 1);
    lo..2 * lo
}

/// The shell containing `idx`, or `None` for the point `0` (which is `I_m(0)`).
pub fn shell_of(m: Resolution, idx: usize) -> Option<u32> {
    if idx == 0 {
        None
    } else {
        Some(m.get() - (usize::BITS - idx.leading_zeros()))
    }
}

pub fn shell_decomposition(m: Resolution) -> ShellDecomposition {
    let shells = (0..m.get())
        .map(|s| Shell {
            level: s,
            set: IndexSet::from_range(m, shell_range(m, s)),
        })
        .collect();
    ShellDecomposition {
        resolution: m,
        shells,
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
    fn resolution_bounds() {
        assert!(Resolution::new(0).is_err());
        assert!(Resolution::new(25).is_err());
        assert_eq!(Resolution::new(24).unwrap().size(), 1 << 24);
    }

    #[test]
    fn e_points() {
        assert_eq!(point_e(0, res(3)).unwrap().idx(), 4);
        assert_eq!(point_e(2, res(3)).unwrap().idx(), 1);
        assert!(point_e(3, res(3)).is_err());
        let e1 = point_e(1, res(4)).unwrap();
        assert_eq!(e1.coords(), vec![0, 1, 0, 0]);
    }

    #[test]
    fn coords_roundtrip() {
        let m = res(5);
        for idx in 0..32 {
            let p = GroupPoint::new(m, idx).unwrap();
            assert_eq!(GroupPoint::from_coords(m, &p.coords()).unwrap(), p);
        }
        assert!(GroupPoint::new(m, 32).is_err());
    }

    #[test]
    fn interval_examples() {
        let m = res(4);
        let any = GroupPoint::new(m, 11).unwrap();
        assert_eq!(interval(any, 0).unwrap().range(), 0..16);

        let m3 = res(3);
        let e0 = point_e(0, m3).unwrap();
        assert_eq!(interval(e0, 1).unwrap().range(), 4..8);

        let x5 = GroupPoint::new(m3, 5).unwrap();
        let i = interval(x5, 2).unwrap();
        assert_eq!(i.range(), 4..6);
        // membership by coordinate agreement
        let by_coords: Vec<usize> = (0..8)
            .filter(|&y| {
                let p = GroupPoint::new(m3, y).unwrap();
                (0..2).all(|j| p.coord(j) == x5.coord(j))
            })
            .collect();
        assert_eq!(by_coords, vec![4, 5]);
        assert!(interval(x5, 4).is_err());
    }

    #[test]
    fn shells_small() {
        let d = shell_decomposition(res(2));
        assert_eq!(d.shells().len(), 2);
        assert_eq!(d.shells()[0].set.ranges(), &[2..4]);
        assert_eq!(d.shells()[0].set.measure(), Dyadic::new(1, 1));
        assert_eq!(d.shells()[1].set.ranges(), &[1..2]);
        assert_eq!(d.shells()[1].set.measure(), Dyadic::new(1, 2));

        let d1 = shell_decomposition(res(1));
        assert_eq!(d1.shells().len(), 1);
        assert_eq!(d1.shells()[0].set.ranges(), &[1..2]);

        let total = shell_decomposition(res(4))
            .shells()
            .iter()
            .fold(Dyadic::zero(), |acc, s| &acc + &s.set.measure());
        assert_eq!(total, Dyadic::new(15, 4));
    }

    #[test]
    fn measures() {
        let m = res(5);
        assert_eq!(measure(&IndexSet::empty(m)), Dyadic::zero());
        assert_eq!(measure(&IndexSet::full(m)), Dyadic::one());
        let i2 = interval(GroupPoint::zero(m), 2).unwrap();
        assert_eq!(measure(&i2.to_set()), Dyadic::new(1, 2));
    }

    #[test]
    fn nested_intervals_halve() {
        for m in 1..=8 {
            let r = res(m);
            for idx in 0..r.size() {
                let x = GroupPoint::new(r, idx).unwrap();
                for n in 0..m {
                    let outer = interval(x, n).unwrap();
                    let inner = interval(x, n + 1).unwrap();
                    assert!(inner.contains(&x));
                    assert!(outer.range().start <= inner.range().start);
                    assert!(inner.range().end <= outer.range().end);
                    assert_eq!(&inner.measure() + &inner.measure(), outer.measure());
                }
            }
        }
    }

    #[test]
    fn same_level_intervals_are_disjoint_or_equal() {
        let m = res(6);
        for n in 0..=6 {
            for a in 0..64 {
                for b in 0..64 {
                    let ia = interval(GroupPoint::new(m, a).unwrap(), n).unwrap();
                    let ib = interval(GroupPoint::new(m, b).unwrap(), n).unwrap();
                    let overlap = ia.range().start < ib.range().end && ib.range().start < ia.range().end;
                    assert!(!overlap || ia.range() == ib.range());
                }
            }
        }
    }

    #[test]
    fn shells_partition_complement_of_origin_cell() {
        for m in 1..=10 {
            let r = res(m);
            let mut seen = vec![0u8; r.size()];
            for sh in shell_decomposition(r).shells() {
                for i in sh.set.iter() {
                    seen[i] += 1;
                    assert_eq!(shell_of(r, i), Some(sh.level));
                }
            }
            let origin = interval(GroupPoint::zero(r), m).unwrap();
            for i in origin.range() {
                seen[i] += 1;
            }
            assert!(seen.iter().all(|&c| c == 1));
        }
    }

    #[test]
    fn index_set_complement_and_union() {
        let m = res(4);
        let a = IndexSet::from_ranges(m, vec![3..5, 0..2, 4..7]);
        assert_eq!(a.ranges(), &[0..2, 3..7]);
        let c = a.complement();
        assert_eq!(c.ranges(), &[2..3, 7..16]);
        assert_eq!(a.union(&c), IndexSet::full(m));
        assert!(!a.intersects(&c));
        assert_eq!(IndexSet::from_indices(m, [5, 4, 9]).ranges(), &[4..6, 9..10]);
    }
}
