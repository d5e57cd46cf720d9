//! Exact lattice geometry in the plane (and a little in higher dimension).
//!
//! Every quantity here is an exact integer or rational. Angles, sines and
//! Euclidean lengths are replaced by 2x2 determinants: for plane vectors
//! `u`, `v` the product `|u| |v| sin(angle)` is exactly `|det2(u, v)|`.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::codec;
use crate::error::{Error, Result};

/// Exact rational number, always stored reduced with a positive denominator.
pub type Rat = BigRational;

/// A point of `N^d`: nonnegative, arbitrary precision coordinates.
///
/// `Ord` is the canonical atom order: squared norm first, then
/// lexicographic coordinates.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntVec(Vec<BigInt>);

impl IntVec {
    pub fn new(coords: Vec<BigInt>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Precondition("vectors need dimension >= 1".into()));
        }
        if coords.iter().any(|c| c.is_negative()) {
            return Err(Error::NegativeCoordinate(fmt_coords(&coords)));
        }
        Ok(IntVec(coords))
    }

    pub fn from_u64s(coords: &[u64]) -> Self {
        assert!(!coords.is_empty());
        IntVec(coords.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn zero(dim: usize) -> Self {
        IntVec(vec![BigInt::zero(); dim])
    }

    /// The `i`-th standard unit vector of `N^dim`.
    pub fn unit(dim: usize, i: usize) -> Self {
        let mut v = Self::zero(dim);
        v.0[i] = BigInt::one();
        v
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[BigInt] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<BigInt> {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    pub fn norm_sq(&self) -> BigInt {
        self.0.iter().map(|c| c * c).sum()
    }

    /// Sum of coordinates.
    pub fn l1(&self) -> BigInt {
        self.0.iter().sum()
    }

    pub fn add(&self, other: &IntVec) -> IntVec {
        debug_assert_eq!(self.dim(), other.dim());
        IntVec(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn scale(&self, k: &BigInt) -> IntVec {
        assert!(!k.is_negative(), "negative scale factor");
        IntVec(self.0.iter().map(|c| c * k).collect())
    }

    pub fn scale_u64(&self, k: u64) -> IntVec {
        self.scale(&BigInt::from(k))
    }

    /// `self - other` when the difference stays in `N^d`.
    pub fn checked_sub(&self, other: &IntVec) -> Option<IntVec> {
        if self.dim() != other.dim() {
            return None;
        }
        let mut out = Vec::with_capacity(self.dim());
        for (a, b) in self.0.iter().zip(&other.0) {
            if a < b {
                return None;
            }
            out.push(a - b);
        }
        Some(IntVec(out))
    }

    /// Componentwise `self <= other`.
    pub fn le_componentwise(&self, other: &IntVec) -> bool {
        self.dim() == other.dim() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// Coordinates as `u64`, if they all fit.
    pub fn to_u64s(&self) -> Option<Vec<u64>> {
        self.0.iter().map(ToPrimitive::to_u64).collect()
    }

    /// Divides out the gcd of the coordinates. The zero vector is returned
    /// unchanged.
    pub fn primitive(&self) -> IntVec {
        let g = self.0.iter().fold(BigInt::zero(), |g, c| g.gcd(c));
        if g.is_zero() || g.is_one() {
            return self.clone();
        }
        IntVec(self.0.iter().map(|c| c / &g).collect())
    }

    /// Pads with zeros (or keeps) to dimension `d >= self.dim()`.
    pub fn embed(&self, d: usize) -> IntVec {
        assert!(d >= self.dim());
        let mut c = self.0.clone();
        c.resize(d, BigInt::zero());
        IntVec(c)
    }
}

fn fmt_coords(c: &[BigInt]) -> String {
    let parts: Vec<String> = c.iter().map(|x| x.to_string()).collect();
    format!("({})", parts.join(","))
}

impl fmt::Display for IntVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&fmt_coords(&self.0))
    }
}

impl fmt::Debug for IntVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&fmt_coords(&self.0))
    }
}

impl Ord for IntVec {
    fn cmp(&self, other: &Self) -> Ordering {
        self.norm_sq()
            .cmp(&other.norm_sq())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for IntVec {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Serialize for IntVec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        codec::bigint_vec::serialize(&self.0, s)
    }
}

impl<'de> Deserialize<'de> for IntVec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let c = codec::bigint_vec::deserialize(d)?;
        IntVec::new(c).map_err(serde::de::Error::custom)
    }
}

/// Builds an [`IntVec`] from integer literals: `iv![1, 2]`.
#[macro_export]
macro_rules! iv {
    ($($x:expr),+ $(,)?) => {
        $crate::geometry::IntVec::from_u64s(&[$($x as u64),+])
    };
}

/// Slope `q/p` of a nonzero plane vector `(p, q)`; vertical rays have
/// slope [`SlopeValue::Infinity`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SlopeValue {
    Finite(Rat),
    Infinity,
}

impl SlopeValue {
    pub fn of(v: &IntVec) -> Result<SlopeValue> {
        check_dim2(v)?;
        check_nonzero(v, "slope")?;
        let [p, q] = [&v.0[0], &v.0[1]];
        Ok(if p.is_zero() {
            SlopeValue::Infinity
        } else {
            SlopeValue::Finite(Rat::new(q.clone(), p.clone()))
        })
    }

    /// Smallest nonzero lattice vector on the ray with this slope.
    pub fn direction(&self) -> IntVec {
        match self {
            SlopeValue::Infinity => IntVec::from_u64s(&[0, 1]),
            SlopeValue::Finite(r) => IntVec(vec![r.denom().clone(), r.numer().clone()]),
        }
    }
}

impl fmt::Display for SlopeValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SlopeValue::Finite(r) => write!(f, "{}", codec::rat_to_string(r)),
            SlopeValue::Infinity => f.write_str("inf"),
        }
    }
}

impl Serialize for SlopeValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

fn check_dim2(v: &IntVec) -> Result<()> {
    if v.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: v.dim(),
        });
    }
    Ok(())
}

fn check_nonzero(v: &IntVec, what: &str) -> Result<()> {
    if v.is_zero() {
        return Err(Error::ZeroVector(format!("{what} needs a nonzero vector")));
    }
    Ok(())
}

/// Determinant of two signed coefficient pairs.
pub fn det2_raw(u: &[BigInt], v: &[BigInt]) -> BigInt {
    &u[0] * &v[1] - &u[1] * &v[0]
}

/// Signed area `u1*v2 - u2*v1` of the lattice parallelogram spanned by `u`, `v`.
pub fn det2(u: &IntVec, v: &IntVec) -> Result<BigInt> {
    check_dim2(u)?;
    check_dim2(v)?;
    Ok(det2_raw(&u.0, &v.0))
}

/// Compares slopes of two nonzero plane vectors without dividing.
///
/// In the closed first quadrant `slope(u) < slope(v)` exactly when
/// `det2(u, v) > 0`.
pub fn slope_cmp(u: &IntVec, v: &IntVec) -> Result<Ordering> {
    check_nonzero(u, "slope_cmp")?;
    check_nonzero(v, "slope_cmp")?;
    let d = det2(u, v)?;
    Ok(BigInt::zero().cmp(&d))
}

/// Coefficients `(c_x, c_y, c_a)` with `c_x x + c_y y = c_a a`.
///
/// Requires `slope(x) < slope(a) < slope(y)`; all three coefficients are
/// then positive integers: `c_x = det2(a, y)`, `c_y = det2(x, a)`,
/// `c_a = det2(x, y)`.
pub fn cramer_decompose(x: &IntVec, a: &IntVec, y: &IntVec) -> Result<(BigInt, BigInt, BigInt)> {
    for (v, name) in [(x, "x"), (a, "a"), (y, "y")] {
        check_dim2(v)?;
        if v.is_zero() {
            return Err(Error::ZeroVector(format!(
                "cramer_decompose: {name} is zero"
            )));
        }
    }
    if slope_cmp(x, a)? != Ordering::Less {
        return Err(Error::Precondition(format!(
            "cramer_decompose needs slope(x) < slope(a); got x = {x}, a = {a}"
        )));
    }
    if slope_cmp(a, y)? != Ordering::Less {
        return Err(Error::Precondition(format!(
            "cramer_decompose needs slope(a) < slope(y); got a = {a}, y = {y}"
        )));
    }
    Ok((det2(a, y)?, det2(x, a)?, det2(x, y)?))
}

/// `|det2(v, a)|`: the length of the component of `a` orthogonal to `v`,
/// scaled by `|v|`. Zero iff `a` lies on the line through `v`.
pub fn projection_weight(v: &IntVec, a: &IntVec) -> Result<BigInt> {
    check_nonzero(v, "projection_weight")?;
    Ok(det2(v, a)?.abs())
}

/// Hilbert basis of the lattice points of `cone(r1, r2)` in the plane,
/// sorted by increasing slope.
///
/// Candidates are the two primitive ray generators and the nonzero lattice
/// points of the half-open fundamental parallelogram; reducible candidates
/// are then discarded.
pub fn hilbert_basis_2d(r1: &IntVec, r2: &IntVec) -> Result<Vec<IntVec>> {
    check_dim2(r1)?;
    check_dim2(r2)?;
    check_nonzero(r1, "hilbert_basis_2d")?;
    check_nonzero(r2, "hilbert_basis_2d")?;
    let d = det2(r1, r2)?;
    if d.is_zero() {
        return Err(Error::DegenerateCone(format!(
            "rays {r1} and {r2} are colinear"
        )));
    }
    let (u, v) = if d.is_positive() {
        (r1.primitive(), r2.primitive())
    } else {
        (r2.primitive(), r1.primitive())
    };
    let area = det2(&u, &v)?;

    let in_cone = |p: &[BigInt]| -> bool {
        !det2_raw(&u.0, p).is_negative() && !det2_raw(p, &v.0).is_negative()
    };

    let mut candidates = vec![u.clone(), v.clone()];
    let xmax = &u.0[0] + &v.0[0];
    let ymax = &u.0[1] + &v.0[1];
    let mut px = BigInt::zero();
    while px <= xmax {
        let mut py = BigInt::zero();
        while py <= ymax {
            let p = [px.clone(), py.clone()];
            let s = det2_raw(&p, &v.0);
            let t = det2_raw(&u.0, &p);
            let nonzero = !(px.is_zero() && py.is_zero());
            if nonzero && !s.is_negative() && s < area && !t.is_negative() && t < area {
                let pv = IntVec(p.to_vec());
                if pv != u && pv != v {
                    candidates.push(pv);
                }
            }
            py += 1;
        }
        px += 1;
    }

    let mut basis: Vec<IntVec> = candidates
        .iter()
        .filter(|p| {
            !candidates.iter().any(|q| {
                if q == *p {
                    return false;
                }
                let diff = [&p.0[0] - &q.0[0], &p.0[1] - &q.0[1]];
                let nonzero = !(diff[0].is_zero() && diff[1].is_zero());
                nonzero && !diff[0].is_negative() && !diff[1].is_negative() && in_cone(&diff)
            })
        })
        .cloned()
        .collect();
    basis.sort_by(|a, b| slope_cmp(a, b).expect("nonzero plane vectors"));
    Ok(basis)
}
