//! Monoid specifications: finite generator lists and infinite atom families
//! given by polynomial sequences, with atomhood and membership checks.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factor::{to_u64_target, Enumerator};
use crate::geometry::{det2_raw, IntVec, SlopeValue};

/// Largest number of indices inspected directly when validating a
/// sequence before its coordinates become monotone.
pub const SEQUENCE_VALIDATION_SPAN: u64 = 1_000_000;

/// Duplicate free list of nonzero vectors in canonical order (squared norm,
/// then lexicographic).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct AtomList {
    dim: usize,
    atoms: Vec<IntVec>,
}

impl AtomList {
    /// Sorts and deduplicates `atoms`. Atomhood is not checked; use
    /// [`atoms_of`] for that.
    pub fn from_atoms(mut atoms: Vec<IntVec>) -> Result<Self> {
        let dim = check_common(&atoms)?;
        atoms.sort();
        atoms.dedup();
        Ok(AtomList { dim, atoms })
    }

    pub fn empty(dim: usize) -> Self {
        AtomList {
            dim,
            atoms: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[IntVec] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn index_of(&self, v: &IntVec) -> Option<usize> {
        self.atoms.binary_search(v).ok()
    }

    /// Every atom multiplied by `k`.
    pub fn scaled(&self, k: &BigInt) -> AtomList {
        AtomList {
            dim: self.dim,
            atoms: self.atoms.iter().map(|a| a.scale(k)).collect(),
        }
    }
}

impl Serialize for AtomList {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.atoms.serialize(s)
    }
}

impl<'de> Deserialize<'de> for AtomList {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<IntVec>::deserialize(d)?;
        AtomList::from_atoms(v).map_err(serde::de::Error::custom)
    }
}

fn check_common(vs: &[IntVec]) -> Result<usize> {
    let Some(first) = vs.first() else {
        return Ok(0);
    };
    let dim = first.dim();
    for v in vs {
        if v.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: v.dim(),
            });
        }
        if v.is_zero() {
            return Err(Error::ZeroVector(
                "generators and atoms must be nonzero".into(),
            ));
        }
    }
    Ok(dim)
}

/// `a(n) = c0 + n c1 + n^2 c2` for `n >= n_start`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AtomSequence {
    c0: Vec<BigInt>,
    c1: Vec<BigInt>,
    c2: Vec<BigInt>,
    n_start: u64,
    /// For `n >= monotone_from`, every coordinate is nondecreasing and the
    /// squared norm strictly increases from `a(n)` to `a(n + 1)`.
    monotone_from: u64,
    /// Plane sequences only: `Less` when slopes increase with `n`.
    trend: Option<Ordering>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SequenceFile {
    #[serde(with = "crate::codec::bigint_vec")]
    c0: Vec<BigInt>,
    #[serde(with = "crate::codec::bigint_vec")]
    c1: Vec<BigInt>,
    #[serde(with = "crate::codec::bigint_vec", default)]
    c2: Vec<BigInt>,
    n_start: u64,
}

fn eval_poly(c: [&BigInt; 3], n: &BigInt) -> BigInt {
    c[0] + n * c[1] + n * n * c[2]
}

impl AtomSequence {
    /// Validates and builds a sequence. An empty `c2` means zero.
    pub fn new(c0: Vec<BigInt>, c1: Vec<BigInt>, c2: Vec<BigInt>, n_start: u64) -> Result<Self> {
        let d = c0.len();
        let c2 = if c2.is_empty() {
            vec![BigInt::zero(); d]
        } else {
            c2
        };
        if d == 0 {
            return Err(Error::Validation("sequence coefficients are empty".into()));
        }
        for c in [&c1, &c2] {
            if c.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: c.len(),
                });
            }
        }
        if n_start < 1 {
            return Err(Error::Validation("n_start must be at least 1".into()));
        }
        let name = format!("sequence {}", describe(&c0, &c1, &c2));
        if c1.iter().all(Zero::is_zero) && c2.iter().all(Zero::is_zero) {
            return Err(Error::Validation(format!(
                "{name} is constant, so its norms do not increase"
            )));
        }
        // per coordinate, the index from which the coordinate is nondecreasing
        let mut threshold = n_start;
        for j in 0..d {
            let (b, a) = (&c1[j], &c2[j]);
            if a.is_negative() || (a.is_zero() && b.is_negative()) {
                return Err(Error::Validation(format!(
                    "{name}: coordinate {j} is eventually negative"
                )));
            }
            if a.is_positive() {
                // a(m+1) - a(m) = b + a(2m+1) >= 0  <=>  m >= (-b - a) / (2a)
                let t = (-b - a).div_ceil(&(a * 2));
                if let Some(t) = t.to_u64() {
                    threshold = threshold.max(t);
                }
            }
        }
        if threshold - n_start > SEQUENCE_VALIDATION_SPAN {
            return Err(Error::Validation(format!(
                "{name} needs more than {SEQUENCE_VALIDATION_SPAN} indices to become monotone"
            )));
        }
        for n in n_start..=threshold + 1 {
            let nb = BigInt::from(n);
            let v: Vec<BigInt> = (0..d)
                .map(|j| eval_poly([&c0[j], &c1[j], &c2[j]], &nb))
                .collect();
            if v.iter().any(Signed::is_negative) {
                return Err(Error::Validation(format!(
                    "{name}: a({n}) has a negative coordinate"
                )));
            }
            if v.iter().all(Zero::is_zero) {
                return Err(Error::Validation(format!("{name}: a({n}) is zero")));
            }
        }
        let mut seq = AtomSequence {
            c0,
            c1,
            c2,
            n_start,
            monotone_from: threshold + 1,
            trend: None,
        };
        if d == 2 {
            seq.trend = Some(seq.slope_trend(&name)?);
        }
        Ok(seq)
    }

    /// Sign of `det2(a(n), a(n+1))`, which is a quadratic polynomial in `n`,
    /// checked to be constant and nonzero on `n >= n_start`.
    fn slope_trend(&self, name: &str) -> Result<Ordering> {
        let d01 = det2_raw(&self.c0, &self.c1);
        let d02 = det2_raw(&self.c0, &self.c2);
        let d12 = det2_raw(&self.c1, &self.c2);
        let p = [&d01 + &d02, &d02 * 2 + &d12, d12];
        let Some(deg) = (0..3).rev().find(|&i| !p[i].is_zero()) else {
            return Err(Error::Validation(format!("{name} has constant slope")));
        };
        let lead = p[deg].abs();
        // Cauchy bound on the real roots
        let bound: BigInt = p[..deg]
            .iter()
            .map(|c| c.abs().div_ceil(&lead))
            .max()
            .unwrap_or_else(BigInt::zero)
            + 1;
        let bound = bound.to_u64().unwrap_or(u64::MAX).max(self.n_start);
        if bound - self.n_start > SEQUENCE_VALIDATION_SPAN {
            return Err(Error::Validation(format!(
                "{name}: slope monotonicity needs more than {SEQUENCE_VALIDATION_SPAN} checks"
            )));
        }
        let want = p[deg].is_positive();
        for n in self.n_start..=bound {
            let nb = BigInt::from(n);
            let v = eval_poly([&p[0], &p[1], &p[2]], &nb);
            if v.is_zero() || v.is_positive() != want {
                return Err(Error::Validation(format!(
                    "{name}: slopes are not strictly monotone near n = {n}"
                )));
            }
        }
        Ok(if want {
            Ordering::Less
        } else {
            Ordering::Greater
        })
    }

    pub fn from_coeffs(c0: &[i64], c1: &[i64], c2: &[i64], n_start: u64) -> Result<Self> {
        let f = |c: &[i64]| c.iter().map(|&x| BigInt::from(x)).collect::<Vec<_>>();
        Self::new(f(c0), f(c1), f(c2), n_start)
    }

    pub fn dim(&self) -> usize {
        self.c0.len()
    }

    pub fn c0(&self) -> &[BigInt] {
        &self.c0
    }

    pub fn c1(&self) -> &[BigInt] {
        &self.c1
    }

    pub fn c2(&self) -> &[BigInt] {
        &self.c2
    }

    pub fn n_start(&self) -> u64 {
        self.n_start
    }

    pub fn monotone_from(&self) -> u64 {
        self.monotone_from
    }

    pub fn is_quadratic(&self) -> bool {
        self.c2.iter().any(|c| !c.is_zero())
    }

    /// `a(n)`; panics for `n < n_start`.
    pub fn at(&self, n: u64) -> IntVec {
        assert!(
            n >= self.n_start,
            "index {n} below n_start = {}",
            self.n_start
        );
        let nb = BigInt::from(n);
        let v = (0..self.dim())
            .map(|j| eval_poly([&self.c0[j], &self.c1[j], &self.c2[j]], &nb))
            .collect();
        IntVec::new(v).expect("validated sequence stays in N^d")
    }

    /// `c2` if nonzero, else `c1`.
    pub fn leading(&self) -> IntVec {
        let c = if self.is_quadratic() {
            &self.c2
        } else {
            &self.c1
        };
        IntVec::new(c.clone()).expect("validated leading coefficient")
    }

    /// Primitive vector on the ray the sequence converges to.
    pub fn limit_direction(&self) -> IntVec {
        self.leading().primitive()
    }

    pub fn limit_slope(&self) -> Result<SlopeValue> {
        SlopeValue::of(&self.leading())
    }

    /// `Less` if slopes increase toward the limit, `Greater` if they
    /// decrease; `None` outside the plane.
    pub fn trend(&self) -> Option<Ordering> {
        self.trend
    }

    /// Members `a(n)` with `|a(n)|^2 <= bound`, in index order.
    pub fn members_up_to(&self, bound: &BigInt) -> Vec<(u64, IntVec)> {
        let mut out = Vec::new();
        let mut n = self.n_start;
        loop {
            let v = self.at(n);
            let inside = &v.norm_sq() <= bound;
            if !inside && n >= self.monotone_from {
                break;
            }
            if inside {
                out.push((n, v));
            }
            n += 1;
        }
        out
    }
}

fn describe(c0: &[BigInt], c1: &[BigInt], c2: &[BigInt]) -> String {
    let f = |c: &[BigInt]| {
        let s: Vec<String> = c.iter().map(ToString::to_string).collect();
        format!("({})", s.join(","))
    };
    if c2.iter().all(Zero::is_zero) {
        format!("{} + n{}", f(c0), f(c1))
    } else {
        format!("{} + n{} + n^2{}", f(c0), f(c1), f(c2))
    }
}

impl fmt::Display for AtomSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}, n >= {}",
            describe(&self.c0, &self.c1, &self.c2),
            self.n_start
        )
    }
}

impl Serialize for AtomSequence {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SequenceFile {
            c0: self.c0.clone(),
            c1: self.c1.clone(),
            c2: self.c2.clone(),
            n_start: self.n_start,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for AtomSequence {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let f = SequenceFile::deserialize(d)?;
        AtomSequence::new(f.c0, f.c1, f.c2, f.n_start).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MonoidBody {
    FiniteGenerators(Vec<IntVec>),
    AtomFamily {
        finite_atoms: Vec<IntVec>,
        sequences: Vec<AtomSequence>,
    },
}

/// A finitely generated monoid or an infinite atom family in `N^dim`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonoidSpec {
    pub dim: usize,
    pub body: MonoidBody,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    dim: usize,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    generators: Option<Vec<IntVec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    finite_atoms: Option<Vec<IntVec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sequences: Option<Vec<AtomSequence>>,
}

impl MonoidSpec {
    pub fn finite(dim: usize, generators: Vec<IntVec>) -> Result<Self> {
        let spec = MonoidSpec {
            dim,
            body: MonoidBody::FiniteGenerators(generators),
        };
        spec.check()?;
        Ok(spec)
    }

    pub fn family(
        dim: usize,
        finite_atoms: Vec<IntVec>,
        sequences: Vec<AtomSequence>,
    ) -> Result<Self> {
        let spec = MonoidSpec {
            dim,
            body: MonoidBody::AtomFamily {
                finite_atoms,
                sequences,
            },
        };
        spec.check()?;
        Ok(spec)
    }

    fn check(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Validation("dim must be at least 1".into()));
        }
        let check_vecs = |vs: &[IntVec]| -> Result<()> {
            for v in vs {
                if v.dim() != self.dim {
                    return Err(Error::DimensionMismatch {
                        expected: self.dim,
                        found: v.dim(),
                    });
                }
                if v.is_zero() {
                    return Err(Error::ZeroVector(
                        "monoid spec vectors must be nonzero".into(),
                    ));
                }
            }
            Ok(())
        };
        match &self.body {
            MonoidBody::FiniteGenerators(g) => check_vecs(g),
            MonoidBody::AtomFamily {
                finite_atoms,
                sequences,
            } => {
                check_vecs(finite_atoms)?;
                for s in sequences {
                    if s.dim() != self.dim {
                        return Err(Error::DimensionMismatch {
                            expected: self.dim,
                            found: s.dim(),
                        });
                    }
                }
                Ok(())
            }
        }
    }

    pub fn is_family(&self) -> bool {
        matches!(self.body, MonoidBody::AtomFamily { .. })
    }

    pub fn generators(&self) -> Option<&[IntVec]> {
        match &self.body {
            MonoidBody::FiniteGenerators(g) => Some(g),
            _ => None,
        }
    }

    pub fn finite_atoms(&self) -> &[IntVec] {
        match &self.body {
            MonoidBody::FiniteGenerators(g) => g,
            MonoidBody::AtomFamily { finite_atoms, .. } => finite_atoms,
        }
    }

    pub fn sequences(&self) -> &[AtomSequence] {
        match &self.body {
            MonoidBody::FiniteGenerators(_) => &[],
            MonoidBody::AtomFamily { sequences, .. } => sequences,
        }
    }

    /// Parses the JSON spec format; errors carry line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        let f: SpecFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        MonoidSpec::from_file(f)
    }

    fn from_file(f: SpecFile) -> Result<Self> {
        let spec = match f.kind.as_str() {
            "finite" => {
                if f.finite_atoms.is_some() || f.sequences.is_some() {
                    return Err(Error::Parse(
                        "a finite spec takes only \"generators\"".into(),
                    ));
                }
                let g = f
                    .generators
                    .ok_or_else(|| Error::Parse("missing field \"generators\"".into()))?;
                MonoidSpec::finite(f.dim, g)?
            }
            "family" => {
                if f.generators.is_some() {
                    return Err(Error::Parse(
                        "a family spec takes \"finite_atoms\" and \"sequences\"".into(),
                    ));
                }
                MonoidSpec::family(
                    f.dim,
                    f.finite_atoms.unwrap_or_default(),
                    f.sequences.unwrap_or_default(),
                )?
            }
            other => {
                return Err(Error::Parse(format!(
                    "unknown kind {other:?}, expected \"finite\" or \"family\""
                )))
            }
        };
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("spec serialization")
    }
}

impl<'de> Deserialize<'de> for MonoidSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        MonoidSpec::from_file(SpecFile::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

impl Serialize for MonoidSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let f = match &self.body {
            MonoidBody::FiniteGenerators(g) => SpecFile {
                dim: self.dim,
                kind: "finite".into(),
                generators: Some(g.clone()),
                finite_atoms: None,
                sequences: None,
            },
            MonoidBody::AtomFamily {
                finite_atoms,
                sequences,
            } => SpecFile {
                dim: self.dim,
                kind: "family".into(),
                generators: None,
                finite_atoms: Some(finite_atoms.clone()),
                sequences: Some(sequences.clone()),
            },
        };
        f.serialize(s)
    }
}

/// The atoms among `generators`: those not a sum of two or more generators.
pub fn atoms_of(generators: &[IntVec]) -> Result<AtomList> {
    let dim = check_common(generators)?;
    if generators.is_empty() {
        return Ok(AtomList::empty(0));
    }
    let mut g = generators.to_vec();
    g.sort();
    g.dedup();
    // drop multiples k*h, k >= 2, of another generator h
    let g: Vec<IntVec> = g
        .iter()
        .filter(|v| {
            let p = v.primitive();
            !g.iter()
                .any(|h| h != *v && h.primitive() == p && is_multiple(v, h))
        })
        .cloned()
        .collect();
    let keep: Vec<bool> = g
        .par_iter()
        .enumerate()
        .map(|(i, v)| -> Result<bool> {
            let others: Vec<IntVec> = g
                .iter()
                .enumerate()
                .filter(|&(j, h)| j != i && h.le_componentwise(v))
                .map(|(_, h)| h.clone())
                .collect();
            if others.is_empty() {
                return Ok(true);
            }
            let target = to_u64_target(v)?;
            let mut e = Enumerator::from_vectors(dim, &others);
            Ok(e.first(&target)?.is_none())
        })
        .collect::<Result<_>>()?;
    let atoms = g
        .into_iter()
        .zip(keep)
        .filter_map(|(v, k)| k.then_some(v))
        .collect();
    AtomList::from_atoms(atoms)
}

fn is_multiple(v: &IntVec, h: &IntVec) -> bool {
    // v and h are on the same ray; v = k h with k integer
    let (vc, hc) = (v.coords(), h.coords());
    let j = hc.iter().position(|c| !c.is_zero()).expect("nonzero");
    let (q, r) = vc[j].div_rem(&hc[j]);
    r.is_zero() && q > BigInt::one() && h.scale(&q) == *v
}

/// `true` iff `x` is an `N`-combination of `atoms`; `x = 0` is a member.
pub fn is_member(atoms: &AtomList, x: &IntVec) -> Result<bool> {
    if x.is_zero() {
        return Ok(true);
    }
    if atoms.is_empty() {
        return Ok(false);
    }
    if atoms.dim() != x.dim() {
        return Err(Error::DimensionMismatch {
            expected: atoms.dim(),
            found: x.dim(),
        });
    }
    let target = to_u64_target(x)?;
    Ok(Enumerator::new(atoms).first(&target)?.is_some())
}

/// Finite atoms and sequence members with squared norm at most `bound`.
pub fn family_members_up_to(spec: &MonoidSpec, bound: &BigInt) -> Result<AtomList> {
    let MonoidBody::AtomFamily {
        finite_atoms,
        sequences,
    } = &spec.body
    else {
        return Err(Error::Precondition(
            "family_members_up_to needs an atom family".into(),
        ));
    };
    let mut out: Vec<IntVec> = finite_atoms
        .iter()
        .filter(|a| &a.norm_sq() <= bound)
        .cloned()
        .collect();
    for s in sequences {
        out.extend(s.members_up_to(bound).into_iter().map(|(_, v)| v));
    }
    let mut list = AtomList::from_atoms(out)?;
    list.dim = spec.dim;
    Ok(list)
}

/// The `count` smallest family members in canonical order.
pub fn smallest_members(spec: &MonoidSpec, count: usize) -> Result<Vec<IntVec>> {
    let mut bound = BigInt::one();
    loop {
        let list = family_members_up_to(spec, &bound)?;
        if list.len() >= count || spec.sequences().is_empty() && bound > max_finite_norm(spec) {
            return Ok(list.atoms.into_iter().take(count).collect());
        }
        bound *= 4;
    }
}

fn max_finite_norm(spec: &MonoidSpec) -> BigInt {
    spec.finite_atoms()
        .iter()
        .map(IntVec::norm_sq)
        .max()
        .unwrap_or_else(BigInt::zero)
}

/// A family member that is a sum of at least two other members.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub member: IntVec,
    /// `(summand, multiplicity)` pairs in canonical order.
    pub decomposition: Vec<(IntVec, u64)>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .decomposition
            .iter()
            .flat_map(|(v, k)| std::iter::repeat_n(v.to_string(), *k as usize))
            .collect();
        write!(f, "{} = {}", self.member, parts.join("+"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub window: usize,
    pub checked: Vec<IntVec>,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<Self> {
        match self.violations.first() {
            None => Ok(self),
            Some(v) => Err(Error::Validation(format!(
                "family member is not an atom: {v}"
            ))),
        }
    }
}

/// Checks that each of the `window` smallest members is not a sum of two
/// or more family members. Any summand of `m` has smaller squared norm
/// than `m`, so the search over shorter members is exhaustive.
pub fn validate_family_atoms(spec: &MonoidSpec, window: usize) -> Result<ValidationReport> {
    if window < 1 {
        return Err(Error::Precondition("window must be at least 1".into()));
    }
    let checked = smallest_members(spec, window)?;
    let violations: Vec<Option<Violation>> = checked
        .par_iter()
        .map(|m| -> Result<Option<Violation>> {
            let nm = m.norm_sq();
            let shorter: Vec<IntVec> = family_members_up_to(spec, &nm)?
                .atoms
                .into_iter()
                .filter(|a| a.norm_sq() < nm && a.le_componentwise(m))
                .collect();
            let target = to_u64_target(m)?;
            let mut e = Enumerator::from_vectors(spec.dim, &shorter);
            Ok(e.first(&target)?.map(|exps| Violation {
                member: m.clone(),
                decomposition: shorter
                    .iter()
                    .zip(exps)
                    .filter(|(_, k)| *k > 0)
                    .map(|(a, k)| (a.clone(), k))
                    .collect(),
            }))
        })
        .collect::<Result<_>>()?;
    Ok(ValidationReport {
        window,
        checked,
        violations: violations.into_iter().flatten().collect(),
    })
}

/// Finite generator spec listing the members of squared norm at most
/// `bound`; identity on finite specs.
pub fn truncate(spec: &MonoidSpec, bound: &BigInt) -> Result<MonoidSpec> {
    match &spec.body {
        MonoidBody::FiniteGenerators(_) => Ok(spec.clone()),
        MonoidBody::AtomFamily { .. } => {
            let list = family_members_up_to(spec, bound)?;
            MonoidSpec::finite(spec.dim, list.atoms)
        }
    }
}
