//! Elasticity of finitely generated monoids (exact LP), the rational versus
//! infinite classification of rank-2 atom families, and certificates for
//! infinite elasticity.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::codec;
use crate::error::{Error, Result};
use crate::factor::{to_u64_target, Enumerator, Factorization};
use crate::geometry::{cramer_decompose, det2_raw, projection_weight, IntVec, Rat, SlopeValue};
use crate::lp::{feasible_point, maximize, LpOutcome};
use crate::monoid::{
    family_members_up_to, validate_family_atoms, AtomList, AtomSequence, MonoidSpec,
};

/// Default ratio an automatically generated witness must exceed.
pub const DEFAULT_TARGET_RATIO: u64 = 10;
/// Default bound on sequence indices visited by witness searches.
pub const DEFAULT_INDEX_BOUND: u64 = 10_000;
/// Default number of family members validated before classification.
pub const DEFAULT_WINDOW: usize = 12;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ElasticityValue {
    Rational(Rat),
    Infinite,
}

impl fmt::Display for ElasticityValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ElasticityValue::Rational(r) => f.write_str(&codec::rat_to_string(r)),
            ElasticityValue::Infinite => f.write_str("infinite"),
        }
    }
}

impl Serialize for ElasticityValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Attainment {
    Attained,
    NotAttained,
    Unknown,
}

/// An element with two factorizations whose length ratio bounds the
/// elasticity from below.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatioWitness {
    pub element: IntVec,
    pub short: Factorization,
    pub long: Factorization,
    pub atom_list: AtomList,
}

/// On-disk form of a [`RatioWitness`]: exponent vectors index `atoms` in
/// the listed (canonical) order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateFile {
    pub element: IntVec,
    pub atoms: Vec<IntVec>,
    pub short: Vec<u64>,
    pub long: Vec<u64>,
    pub ratio: String,
}

impl RatioWitness {
    /// Orders the two factorizations by length.
    pub fn new(element: IntVec, atom_list: AtomList, z1: Factorization, z2: Factorization) -> Self {
        let (short, long) = if z1.len() <= z2.len() {
            (z1, z2)
        } else {
            (z2, z1)
        };
        RatioWitness {
            element,
            short,
            long,
            atom_list,
        }
    }

    /// `|long| / |short|`; `None` if the short factorization is empty.
    pub fn ratio(&self) -> Option<Rat> {
        let s = self.short.len();
        (s > 0).then(|| Rat::new(BigInt::from(self.long.len()), BigInt::from(s)))
    }

    pub fn to_file(&self) -> CertificateFile {
        CertificateFile {
            element: self.element.clone(),
            atoms: self.atom_list.atoms().to_vec(),
            short: self.short.exponents.clone(),
            long: self.long.exponents.clone(),
            ratio: self
                .ratio()
                .map(|r| codec::rat_to_string(&r))
                .unwrap_or_else(|| "undefined".into()),
        }
    }

    /// Rebuilds a witness, rejecting atom lists not in canonical order.
    pub fn from_file(f: &CertificateFile) -> Result<Self> {
        let list = AtomList::from_atoms(f.atoms.clone())?;
        if list.atoms() != f.atoms.as_slice() {
            return Err(Error::Validation(
                "certificate atoms must be duplicate free and in canonical order".into(),
            ));
        }
        Ok(RatioWitness {
            element: f.element.clone(),
            short: Factorization::new(f.short.clone()),
            long: Factorization::new(f.long.clone()),
            atom_list: list,
        })
    }
}

impl Serialize for RatioWitness {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_file().serialize(s)
    }
}

/// Recomputes both sums; returns the exact length ratio when both
/// factorizations map to the element and have positive length.
pub fn verify_certificate(w: &RatioWitness) -> Result<Rat> {
    let atoms = w.atom_list.atoms();
    for (name, z) in [("short", &w.short), ("long", &w.long)] {
        if z.exponents.len() != atoms.len() {
            return Err(Error::Validation(format!(
                "{name} factorization has {} exponents for {} atoms",
                z.exponents.len(),
                atoms.len()
            )));
        }
        if z.is_empty() {
            return Err(Error::Validation(format!(
                "{name} factorization has length 0"
            )));
        }
        let sum = z.evaluate(atoms)?;
        if sum.dim() != w.element.dim() {
            return Err(Error::DimensionMismatch {
                expected: w.element.dim(),
                found: sum.dim(),
            });
        }
        if let Some(j) = (0..sum.dim()).find(|&j| sum.coords()[j] != w.element.coords()[j]) {
            return Err(Error::Validation(format!(
                "{name} factorization sums to {sum}, which differs from the element {} at coordinate {j}",
                w.element
            )));
        }
    }
    Ok(w.ratio().expect("positive short length"))
}

/// Verifies a certificate file, including its claimed ratio.
pub fn verify_certificate_file(f: &CertificateFile) -> Result<Rat> {
    let w = RatioWitness::from_file(f)?;
    let r = verify_certificate(&w)?;
    let claimed = codec::parse_rat(&f.ratio)?;
    if claimed != r {
        return Err(Error::Validation(format!(
            "claimed ratio {} differs from the recomputed ratio {}",
            f.ratio,
            codec::rat_to_string(&r)
        )));
    }
    Ok(r)
}

/// Optimal solution of the elasticity LP and its integer scaling.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LpWitness {
    #[serde(with = "codec::rat_vec")]
    pub optimal_u: Vec<Rat>,
    #[serde(with = "codec::rat_vec")]
    pub optimal_v: Vec<Rat>,
    /// `u` and `v` scaled to integers: an element with factorizations
    /// attaining the optimum.
    pub scaled: RatioWitness,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CaseId {
    C1_1,
    C1_2,
    C2_1,
    C2_2_1,
    C2_2_2,
    Fg,
}

impl CaseId {
    pub fn as_str(self) -> &'static str {
        match self {
            CaseId::C1_1 => "1.1",
            CaseId::C1_2 => "1.2",
            CaseId::C2_1 => "2.1",
            CaseId::C2_2_1 => "2.2.1",
            CaseId::C2_2_2 => "2.2.2",
            CaseId::Fg => "fg",
        }
    }
}

impl Serialize for CaseId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Sides {
    pub atoms_below: bool,
    pub atoms_above: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WeightSet {
    Finite(Vec<BigInt>),
    Infinite,
    /// Only computed when there is a single limit slope.
    NotComputed,
}

impl Serialize for WeightSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            WeightSet::Finite(v) => codec::bigint_vec::serialize(v, s),
            WeightSet::Infinite => s.serialize_str("infinite"),
            WeightSet::NotComputed => s.serialize_none(),
        }
    }
}

/// Limit slopes of the atom slopes, which sides of each limit carry atoms,
/// and the projection weights `S` against the limit direction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LimitSlopeProfile {
    pub limit_slopes: Vec<SlopeValue>,
    pub sides: Vec<Sides>,
    pub projection_weights: WeightSet,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CaseTag {
    pub case: CaseId,
    pub profile: LimitSlopeProfile,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<RatioWitness>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Certificate {
    RatioWitness(RatioWitness),
    LpWitness(LpWitness),
    CaseTag(CaseTag),
}

impl Certificate {
    /// The ratio witness carried by this certificate, if any.
    pub fn ratio_witness(&self) -> Option<&RatioWitness> {
        match self {
            Certificate::RatioWitness(w) => Some(w),
            Certificate::LpWitness(l) => Some(&l.scaled),
            Certificate::CaseTag(t) => t.witness.as_ref(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ElasticityResult {
    pub value: ElasticityValue,
    pub attained: Attainment,
    pub certificate: Certificate,
}

fn lcm_of_denominators<'a>(vals: impl Iterator<Item = &'a Rat>) -> BigInt {
    vals.fold(BigInt::one(), |l, r| l.lcm(r.denom()))
}

fn to_u64_exponent(v: &BigInt) -> Result<u64> {
    v.to_u64()
        .ok_or_else(|| Error::Resource(format!("exponent {v} exceeds 64 bits")))
}

fn atom_matrix(atoms: &[IntVec], dim: usize) -> Vec<Vec<Rat>> {
    (0..dim)
        .map(|j| {
            atoms
                .iter()
                .map(|a| Rat::from_integer(a.coords()[j].clone()))
                .collect()
        })
        .collect()
}

/// Elasticity of the monoid generated by `atoms` via the exact LP
/// `max sum(u)  s.t.  sum(v) = 1, A u = A v, u, v >= 0`.
pub fn elasticity_fg(atoms: &AtomList) -> Result<ElasticityResult> {
    if atoms.is_empty() {
        return Err(Error::Domain("elasticity of the trivial monoid".into()));
    }
    let k = atoms.len();
    let d = atoms.dim();
    let mat = atom_matrix(atoms.atoms(), d);
    let mut rows = Vec::with_capacity(d + 1);
    let mut first: Vec<Rat> = vec![Rat::zero(); k];
    first.extend(vec![Rat::one(); k]);
    rows.push(first);
    for r in &mat {
        let mut row: Vec<Rat> = r.clone();
        row.extend(r.iter().map(|x| -x.clone()));
        rows.push(row);
    }
    let mut b = vec![Rat::zero(); d + 1];
    b[0] = Rat::one();
    let mut c = vec![Rat::one(); k];
    c.extend(vec![Rat::zero(); k]);
    let (x, value) = match maximize(&c, &rows, &b) {
        LpOutcome::Optimal { x, value } => (x, value),
        other => {
            return Err(Error::Internal(format!(
                "elasticity program should be feasible and bounded, got {other:?}"
            )))
        }
    };
    let (u, v) = x.split_at(k);
    let scale = lcm_of_denominators(x.iter());
    let to_int = |r: &Rat| -> Result<u64> { to_u64_exponent(&(r * &scale).to_integer()) };
    let uu: Vec<u64> = u.iter().map(to_int).collect::<Result<_>>()?;
    let vv: Vec<u64> = v.iter().map(to_int).collect::<Result<_>>()?;
    let zv = Factorization::new(vv);
    let element = zv.evaluate(atoms.atoms())?;
    let w = RatioWitness::new(element, atoms.clone(), Factorization::new(uu), zv);
    let r = verify_certificate(&w)?;
    if r != value {
        return Err(Error::Internal(format!(
            "scaled LP witness ratio {r} differs from the optimum {value}"
        )));
    }
    Ok(ElasticityResult {
        value: ElasticityValue::Rational(value),
        attained: Attainment::Attained,
        certificate: Certificate::LpWitness(LpWitness {
            optimal_u: u.to_vec(),
            optimal_v: v.to_vec(),
            scaled: w,
        }),
    })
}

/// Search limits and the ratio target for generated witnesses.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CertOptions {
    pub target: Rat,
    pub index_bound: u64,
}

impl Default for CertOptions {
    fn default() -> Self {
        CertOptions {
            target: Rat::from_integer(BigInt::from(DEFAULT_TARGET_RATIO)),
            index_bound: DEFAULT_INDEX_BOUND,
        }
    }
}

fn slope(v: &IntVec) -> SlopeValue {
    SlopeValue::of(v).expect("nonzero plane vector")
}

/// Slope range of one sequence: `(lowest, highest)` together with the
/// index of the first member, whose slope is the attained end.
struct SeqRange {
    first: SlopeValue,
    limit: SlopeValue,
    increasing: bool,
}

impl SeqRange {
    fn of(s: &AtomSequence) -> Result<Self> {
        Ok(SeqRange {
            first: slope(&s.at(s.n_start())),
            limit: s.limit_slope()?,
            increasing: s.trend() == Some(Ordering::Less),
        })
    }

    fn has_below(&self, t: &SlopeValue) -> bool {
        if self.increasing {
            &self.first < t
        } else {
            &self.limit < t
        }
    }

    fn has_above(&self, t: &SlopeValue) -> bool {
        if self.increasing {
            &self.limit > t
        } else {
            &self.first > t
        }
    }
}

fn require_plane_family(spec: &MonoidSpec) -> Result<()> {
    if spec.dim != 2 {
        return Err(Error::Precondition(format!(
            "rank-2 classification needs dim = 2, got {}",
            spec.dim
        )));
    }
    if !spec.is_family() || spec.sequences().is_empty() {
        return Err(Error::Precondition(
            "classification needs an atom family with at least one sequence; use elasticity_fg for finite specs"
                .into(),
        ));
    }
    Ok(())
}

fn any_below(spec: &MonoidSpec, ranges: &[SeqRange], t: &SlopeValue) -> bool {
    spec.finite_atoms().iter().any(|a| &slope(a) < t) || ranges.iter().any(|r| r.has_below(t))
}

fn any_above(spec: &MonoidSpec, ranges: &[SeqRange], t: &SlopeValue) -> bool {
    spec.finite_atoms().iter().any(|a| &slope(a) > t) || ranges.iter().any(|r| r.has_above(t))
}

/// Canonically smallest member with slope strictly inside `(lo, hi)`.
fn member_strictly_between(
    spec: &MonoidSpec,
    lo: &SlopeValue,
    hi: &SlopeValue,
    index_bound: u64,
) -> Result<Option<IntVec>> {
    let inside = |v: &IntVec| {
        let s = slope(v);
        &s > lo && &s < hi
    };
    let mut found: Vec<IntVec> = spec
        .finite_atoms()
        .iter()
        .filter(|a| inside(a))
        .cloned()
        .collect();
    for s in spec.sequences() {
        let r = SeqRange::of(s)?;
        // members on the far side of the limit never enter the interval;
        // past the crossing index they stay outside for good
        let reachable = if r.increasing {
            &r.limit > lo
        } else {
            &r.limit < hi
        };
        if !reachable {
            continue;
        }
        let mut n = s.n_start();
        loop {
            if n - s.n_start() > index_bound {
                return Err(Error::Resource(format!(
                    "searching {s} for a member between {lo} and {hi} passed the index bound {index_bound}"
                )));
            }
            let v = s.at(n);
            if inside(&v) {
                found.push(v);
                break;
            }
            let sv = slope(&v);
            let passed = if r.increasing { &sv >= hi } else { &sv <= lo };
            if passed {
                break;
            }
            n += 1;
        }
    }
    Ok(found.into_iter().min())
}

/// Canonically smallest member with slope strictly below (`below = true`)
/// or above `t`, known to exist.
fn first_member_beyond(spec: &MonoidSpec, t: &SlopeValue, below: bool) -> Result<IntVec> {
    let mut bound = BigInt::from(4);
    loop {
        let list = family_members_up_to(spec, &bound)?;
        let hit = list.atoms().iter().find(|a| {
            let s = slope(a);
            if below {
                &s < t
            } else {
                &s > t
            }
        });
        if let Some(a) = hit {
            return Ok(a.clone());
        }
        bound *= 4;
    }
}

fn witness_from_triple(x: &IntVec, a: &IntVec, y: &IntVec) -> Result<RatioWitness> {
    let (cx, cy, ca) = cramer_decompose(x, a, y)?;
    let g = cx.gcd(&cy).gcd(&ca);
    let (cx, cy, ca) = (cx / &g, cy / &g, ca / &g);
    let list = AtomList::from_atoms(vec![x.clone(), a.clone(), y.clone()])?;
    let idx = |v: &IntVec| list.index_of(v).expect("listed atom");
    let mut z1 = vec![0u64; list.len()];
    z1[idx(a)] = to_u64_exponent(&ca)?;
    let mut z2 = vec![0u64; list.len()];
    z2[idx(x)] = to_u64_exponent(&cx)?;
    z2[idx(y)] = to_u64_exponent(&cy)?;
    let element = a.scale(&ca);
    Ok(RatioWitness::new(
        element,
        list,
        Factorization::new(z1),
        Factorization::new(z2),
    ))
}

fn accept(w: RatioWitness, target: &Rat) -> Result<Option<RatioWitness>> {
    let r = verify_certificate(&w)?;
    Ok((&r > target).then_some(w))
}

fn index_exhausted(what: &str, bound: u64) -> Error {
    Error::Resource(format!("{what}: no witness within the index bound {bound}"))
}

/// `a` walks along a sequence; `x` and `y` are fixed atoms on either side.
fn strategy_walk(spec: &MonoidSpec, opts: &CertOptions) -> Result<Option<RatioWitness>> {
    for s in spec.sequences() {
        let r = SeqRange::of(s)?;
        let first = s.at(s.n_start());
        let (x, y) = if r.increasing {
            if !any_above(spec, &seq_ranges(spec)?, &r.limit) {
                continue;
            }
            (first, first_member_beyond(spec, &r.limit, false)?)
        } else {
            if !any_below(spec, &seq_ranges(spec)?, &r.limit) {
                continue;
            }
            (first_member_beyond(spec, &r.limit, true)?, first)
        };
        for n in s.n_start() + 1..=s.n_start() + opts.index_bound {
            let a = s.at(n);
            if let Some(w) = accept(witness_from_triple(&x, &a, &y)?, &opts.target)? {
                return Ok(Some(w));
            }
        }
        return Err(index_exhausted(
            &format!("walking along {s}"),
            opts.index_bound,
        ));
    }
    Ok(None)
}

/// `a` fixed strictly between two limits; `x` and `y` walk toward them.
fn strategy_squeeze(
    spec: &MonoidSpec,
    limits: &[SlopeValue],
    opts: &CertOptions,
) -> Result<Option<RatioWitness>> {
    let (lo, hi) = (&limits[0], &limits[limits.len() - 1]);
    let Some(a) = member_strictly_between(spec, lo, hi, opts.index_bound)? else {
        return Ok(None);
    };
    let sa = slope(&a);
    let pick = |want_below: bool| -> Result<&AtomSequence> {
        for s in spec.sequences() {
            let l = s.limit_slope()?;
            if (want_below && l < sa) || (!want_below && l > sa) {
                return Ok(s);
            }
        }
        Err(Error::Internal(
            "limits on both sides of a middle atom".into(),
        ))
    };
    let (sx, sy) = (pick(true)?, pick(false)?);
    let start = sx.n_start().max(sy.n_start());
    for k in start..=start + opts.index_bound {
        let (x, y) = (sx.at(k), sy.at(k));
        if slope(&x) >= sa || slope(&y) <= sa {
            continue;
        }
        if let Some(w) = accept(witness_from_triple(&x, &a, &y)?, &opts.target)? {
            return Ok(Some(w));
        }
    }
    Err(index_exhausted(
        "squeezing around a middle atom",
        opts.index_bound,
    ))
}

/// One-sided sequence with unbounded projection weight: `x = s(n0)`,
/// `a = s(j)`, `y = s(2j)`.
fn strategy_weight(spec: &MonoidSpec, opts: &CertOptions) -> Result<Option<RatioWitness>> {
    for s in spec.sequences() {
        if det2_raw(s.c2(), s.c1()).is_zero() {
            continue;
        }
        let n0 = s.n_start();
        let x = s.at(n0);
        for j in n0 + 1..=n0 + opts.index_bound {
            let (a, y) = (s.at(j), s.at(2 * j));
            let (lo, hi) = if s.trend() == Some(Ordering::Less) {
                (x.clone(), y.clone())
            } else {
                (y.clone(), x.clone())
            };
            if let Some(w) = accept(witness_from_triple(&lo, &a, &hi)?, &opts.target)? {
                return Ok(Some(w));
            }
        }
        return Err(index_exhausted(
            &format!("walking along {s}"),
            opts.index_bound,
        ));
    }
    Ok(None)
}

fn seq_ranges(spec: &MonoidSpec) -> Result<Vec<SeqRange>> {
    spec.sequences().iter().map(SeqRange::of).collect()
}

/// Limit slopes and sides; projection weights for a single limit.
pub fn limit_slope_profile(spec: &MonoidSpec) -> Result<LimitSlopeProfile> {
    require_plane_family(spec)?;
    let ranges = seq_ranges(spec)?;
    let mut limits: Vec<SlopeValue> = ranges.iter().map(|r| r.limit.clone()).collect();
    limits.sort();
    limits.dedup();
    let sides = limits
        .iter()
        .map(|l| Sides {
            atoms_below: any_below(spec, &ranges, l),
            atoms_above: any_above(spec, &ranges, l),
        })
        .collect();
    let projection_weights = if limits.len() == 1 {
        let v = limits[0].direction();
        let unbounded = spec.sequences().iter().any(|s| {
            !det2_raw(v.coords(), s.c1()).is_zero() || !det2_raw(v.coords(), s.c2()).is_zero()
        });
        if unbounded {
            WeightSet::Infinite
        } else {
            let mut w: Vec<BigInt> = spec
                .finite_atoms()
                .iter()
                .map(|a| projection_weight(&v, a))
                .collect::<Result<_>>()?;
            w.extend(
                spec.sequences()
                    .iter()
                    .map(|s| det2_raw(v.coords(), s.c0()).abs()),
            );
            w.sort();
            w.dedup();
            WeightSet::Finite(w)
        }
    } else {
        WeightSet::NotComputed
    };
    Ok(LimitSlopeProfile {
        limit_slopes: limits,
        sides,
        projection_weights,
    })
}

/// Decides rational versus infinite elasticity of a rank-2 atom family.
///
/// Infinite results carry a verified witness of ratio above
/// `opts.target`.
pub fn classify_rank2(
    spec: &MonoidSpec,
    window: usize,
    opts: &CertOptions,
) -> Result<ElasticityResult> {
    require_plane_family(spec)?;
    validate_family_atoms(spec, window)?.into_result()?;
    let profile = limit_slope_profile(spec)?;
    let limits = profile.limit_slopes.clone();
    let infinite = |case: CaseId, witness: RatioWitness| ElasticityResult {
        value: ElasticityValue::Infinite,
        attained: Attainment::NotAttained,
        certificate: Certificate::CaseTag(CaseTag {
            case,
            profile: profile.clone(),
            witness: Some(witness),
        }),
    };
    let no_witness = |case: CaseId| {
        Error::Internal(format!(
            "case {} admits a witness but none was found",
            case.as_str()
        ))
    };

    if limits.len() >= 2 {
        let (lo, hi) = (&limits[0], &limits[limits.len() - 1]);
        let case = if member_strictly_between(spec, lo, hi, opts.index_bound)?.is_some() {
            CaseId::C1_1
        } else {
            CaseId::C1_2
        };
        let w = match strategy_walk(spec, opts)? {
            Some(w) => w,
            None => strategy_squeeze(spec, &limits, opts)?.ok_or_else(|| no_witness(case))?,
        };
        return Ok(infinite(case, w));
    }
    let sides = &profile.sides[0];
    if sides.atoms_below && sides.atoms_above {
        let w = strategy_walk(spec, opts)?.ok_or_else(|| no_witness(CaseId::C2_1))?;
        return Ok(infinite(CaseId::C2_1, w));
    }
    match &profile.projection_weights {
        WeightSet::Infinite => {
            let w = strategy_weight(spec, opts)?.ok_or_else(|| no_witness(CaseId::C2_2_1))?;
            Ok(infinite(CaseId::C2_2_1, w))
        }
        WeightSet::Finite(s) => {
            if s.first().is_some_and(Zero::is_zero) {
                let on_ray: Vec<String> = spec
                    .finite_atoms()
                    .iter()
                    .filter(|a| slope(a) == limits[0])
                    .map(ToString::to_string)
                    .collect();
                return Err(Error::Unsupported(format!(
                    "atom {} lies on the limit ray {}, giving projection weight 0",
                    on_ray.join(", "),
                    limits[0]
                )));
            }
            let value = Rat::new(s[s.len() - 1].clone(), s[0].clone());
            Ok(ElasticityResult {
                value: ElasticityValue::Rational(value),
                attained: Attainment::Unknown,
                certificate: Certificate::CaseTag(CaseTag {
                    case: CaseId::C2_2_2,
                    profile: profile.clone(),
                    witness: None,
                }),
            })
        }
        WeightSet::NotComputed => Err(Error::Internal("missing projection weights".into())),
    }
}

/// A verified witness of ratio above `opts.target` for a family with
/// infinite elasticity.
pub fn unbounded_certificate(
    spec: &MonoidSpec,
    window: usize,
    opts: &CertOptions,
) -> Result<RatioWitness> {
    let r = classify_rank2(spec, window, opts)?;
    match (r.value, r.certificate) {
        (
            ElasticityValue::Infinite,
            Certificate::CaseTag(CaseTag {
                witness: Some(w), ..
            }),
        ) => Ok(w),
        (v, _) => Err(Error::Precondition(format!(
            "family has elasticity {v}; unbounded certificates need infinite elasticity"
        ))),
    }
}

/// Witness for a polyhedral family together with the data used to build it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PolyhedralCertificate {
    pub witness: RatioWitness,
    /// Smallest `N0` with `N0 z` in the monoid of the extreme atoms for all
    /// lattice points `z` of the closed fundamental parallelepiped.
    pub n0: u64,
    /// The family member `a`; the element is `N0 a`.
    pub member: IntVec,
    pub sequence_index: u64,
    pub parallelepiped_points: usize,
    #[serde(with = "codec::rat")]
    pub ratio: Rat,
}

/// Maximum lattice points visited in the fundamental parallelepiped box.
pub const PARALLELEPIPED_LIMIT: u64 = 1_000_000;
/// Maximum `N0` tried.
pub const N0_LIMIT: u64 = 10_000;

fn in_cone(mat: &[Vec<Rat>], x: &IntVec) -> Option<Vec<Rat>> {
    let b: Vec<Rat> = x
        .coords()
        .iter()
        .map(|c| Rat::from_integer(c.clone()))
        .collect();
    feasible_point(mat, &b)
}

fn in_closed_parallelepiped(mat: &[Vec<Rat>], z: &IntVec) -> bool {
    // A t = z, t + s = 1, t, s >= 0
    let d = mat.len();
    let n = mat.first().map(Vec::len).unwrap_or(0);
    let mut rows = Vec::with_capacity(d + n);
    for r in mat {
        let mut row = r.clone();
        row.extend(vec![Rat::zero(); n]);
        rows.push(row);
    }
    for i in 0..n {
        let mut row = vec![Rat::zero(); 2 * n];
        row[i] = Rat::one();
        row[n + i] = Rat::one();
        rows.push(row);
    }
    let mut b: Vec<Rat> = z
        .coords()
        .iter()
        .map(|c| Rat::from_integer(c.clone()))
        .collect();
    b.extend(vec![Rat::one(); n]);
    feasible_point(&rows, &b).is_some()
}

fn lattice_box(upper: &[u64]) -> Result<Vec<Vec<u64>>> {
    let total = upper
        .iter()
        .try_fold(1u64, |acc, &u| acc.checked_mul(u + 1))
        .filter(|&t| t <= PARALLELEPIPED_LIMIT)
        .ok_or_else(|| {
            Error::Resource(format!(
                "fundamental parallelepiped box exceeds {PARALLELEPIPED_LIMIT} lattice points"
            ))
        })?;
    let mut out = Vec::with_capacity(total as usize);
    let mut cur = vec![0u64; upper.len()];
    loop {
        out.push(cur.clone());
        let mut j = upper.len();
        loop {
            if j == 0 {
                return Ok(out);
            }
            j -= 1;
            if cur[j] < upper[j] {
                cur[j] += 1;
                break;
            }
            cur[j] = 0;
        }
    }
}

/// Witness of ratio above `n` for a family whose cone is spanned by the
/// declared extreme atoms.
pub fn polyhedral_certificate(
    spec: &MonoidSpec,
    extreme: &[IntVec],
    n: u64,
    opts: &CertOptions,
) -> Result<PolyhedralCertificate> {
    let d = spec.dim;
    if !spec.is_family() || spec.sequences().is_empty() {
        return Err(Error::Precondition(
            "polyhedral certificates need a family with at least one sequence".into(),
        ));
    }
    if extreme.is_empty() {
        return Err(Error::Precondition("no extreme atoms declared".into()));
    }
    for a in extreme {
        if a.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: a.dim(),
            });
        }
        if a.is_zero() {
            return Err(Error::ZeroVector("extreme atoms must be nonzero".into()));
        }
    }
    let mat = atom_matrix(extreme, d);
    for f in spec.finite_atoms() {
        if in_cone(&mat, f).is_none() {
            return Err(Error::Precondition(format!(
                "finite atom {f} lies outside the declared cone"
            )));
        }
    }

    // the member a: first index with |a|^2 > (N+1)^2 * k * sum |a_i|^2
    let k = BigInt::from(extreme.len());
    let sum_sq: BigInt = extreme.iter().map(IntVec::norm_sq).sum();
    let threshold = BigInt::from(n + 1).pow(2) * k * sum_sq;
    let s = &spec.sequences()[0];
    let mut idx = s.n_start();
    let member = loop {
        if idx - s.n_start() > opts.index_bound {
            return Err(Error::Resource(format!(
                "no member of {s} beats the norm threshold within the index bound {}",
                opts.index_bound
            )));
        }
        let a = s.at(idx);
        if in_cone(&mat, &a).is_none() {
            return Err(Error::Precondition(format!(
                "family member {a} = a({idx}) lies outside the declared cone"
            )));
        }
        if a.norm_sq() > threshold {
            break a;
        }
        idx += 1;
    };
    for other in &spec.sequences()[1..] {
        for (i, a) in other.members_up_to(&member.norm_sq()) {
            if in_cone(&mat, &a).is_none() {
                return Err(Error::Precondition(format!(
                    "family member {a} = a({i}) of {other} lies outside the declared cone"
                )));
            }
        }
    }

    // lattice points of the closed fundamental parallelepiped
    let upper: Vec<u64> = (0..d)
        .map(|j| {
            let t: BigInt = extreme.iter().map(|a| a.coords()[j].clone()).sum();
            t.to_u64()
                .ok_or_else(|| Error::Resource("parallelepiped too large".into()))
        })
        .collect::<Result<_>>()?;
    let points: Vec<IntVec> = lattice_box(&upper)?
        .into_iter()
        .map(|p| IntVec::from_u64s(&p))
        .filter(|z| !z.is_zero() && in_closed_parallelepiped(&mat, z))
        .collect();
    let mut enumer = Enumerator::from_vectors(d, extreme);
    let mut n0 = None;
    'outer: for k0 in 1..=N0_LIMIT {
        for z in &points {
            let t = to_u64_target(&z.scale_u64(k0))?;
            if enumer.first(&t)?.is_none() {
                continue 'outer;
            }
        }
        n0 = Some(k0);
        break;
    }
    let n0 = n0.ok_or_else(|| Error::Resource(format!("N0 exceeds {N0_LIMIT}")))?;

    // a = v + sum c_i a_i with v in the parallelepiped
    let lambda = in_cone(&mat, &member).expect("checked above");
    let c: Vec<BigInt> = lambda.iter().map(|l| l.floor().to_integer()).collect();
    let mut rest = member.coords().to_vec();
    for (ci, a) in c.iter().zip(extreme) {
        for (r, x) in rest.iter_mut().zip(a.coords()) {
            *r -= ci * x;
        }
    }
    let v = IntVec::new(rest).map_err(|e| Error::Internal(format!("remainder left N^d: {e}")))?;
    let cprime = enumer
        .first(&to_u64_target(&v.scale_u64(n0))?)?
        .ok_or_else(|| {
            Error::Internal(format!("N0 v = {} has no representation", v.scale_u64(n0)))
        })?;

    let mut all = extreme.to_vec();
    all.push(member.clone());
    let list = AtomList::from_atoms(all)?;
    let mut long = vec![0u64; list.len()];
    for ((a, ci), cpi) in extreme.iter().zip(&c).zip(&cprime) {
        let i = list.index_of(a).expect("listed");
        long[i] += cpi + n0 * to_u64_exponent(ci)?;
    }
    let mut short = vec![0u64; list.len()];
    short[list.index_of(&member).expect("listed")] = n0;
    let element = member.scale_u64(n0);
    let w = RatioWitness::new(
        element,
        list,
        Factorization::new(short),
        Factorization::new(long),
    );
    let ratio = verify_certificate(&w)?;
    if ratio <= Rat::from_integer(BigInt::from(n)) {
        return Err(Error::Internal(format!(
            "polyhedral witness ratio {ratio} does not exceed {n}"
        )));
    }
    Ok(PolyhedralCertificate {
        witness: w,
        n0,
        member,
        sequence_index: idx,
        parallelepiped_points: points.len(),
        ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor::elasticity_of_element;
    use crate::iv;

    fn r(p: i64, q: i64) -> Rat {
        Rat::new(BigInt::from(p), BigInt::from(q))
    }

    fn lin(c0: &[i64], c1: &[i64], n_start: u64) -> AtomSequence {
        AtomSequence::from_coeffs(c0, c1, &[], n_start).unwrap()
    }

    fn two_limit() -> MonoidSpec {
        MonoidSpec::family(
            2,
            vec![],
            vec![lin(&[1, 0], &[2, 1], 1), lin(&[0, 1], &[1, 2], 1)],
        )
        .unwrap()
    }

    fn value(r: &ElasticityResult) -> Rat {
        match &r.value {
            ElasticityValue::Rational(v) => v.clone(),
            ElasticityValue::Infinite => panic!("infinite"),
        }
    }

    #[test]
    fn fg_examples() {
        let a = AtomList::from_atoms(vec![iv![1, 0], iv![0, 1]]).unwrap();
        assert_eq!(value(&elasticity_fg(&a).unwrap()), r(1, 1));
        let a = AtomList::from_atoms(vec![iv![1, 2], iv![2, 1], iv![1, 1]]).unwrap();
        let res = elasticity_fg(&a).unwrap();
        assert_eq!(value(&res), r(3, 2));
        let w = res.certificate.ratio_witness().unwrap();
        assert_eq!(verify_certificate(w).unwrap(), r(3, 2));
        let a = AtomList::from_atoms(vec![iv![2], iv![3]]).unwrap();
        assert_eq!(value(&elasticity_fg(&a).unwrap()), r(3, 2));
        assert!(matches!(
            elasticity_fg(&AtomList::empty(2)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn two_limit_family_is_infinite() {
        let res = classify_rank2(&two_limit(), 12, &CertOptions::default()).unwrap();
        assert_eq!(res.value, ElasticityValue::Infinite);
        let Certificate::CaseTag(tag) = &res.certificate else {
            panic!()
        };
        assert_eq!(tag.case, CaseId::C1_2);
        let w = tag.witness.as_ref().unwrap();
        assert_eq!(w.element, iv![232, 112]);
        assert_eq!(verify_certificate(w).unwrap(), r(43, 4));
        assert_eq!(w.short.len(), 8);
        assert_eq!(w.long.len(), 86);

        let opts = CertOptions {
            target: r(100, 1),
            ..CertOptions::default()
        };
        let w = unbounded_certificate(&two_limit(), 12, &opts).unwrap();
        assert_eq!(w.element, iv![269, 134].scale_u64(8));
        assert_eq!(verify_certificate(&w).unwrap(), r(806, 8));
    }

    #[test]
    fn one_limit_families_are_rational() {
        let s = MonoidSpec::family(2, vec![], vec![lin(&[0, 1], &[1, 1], 1)]).unwrap();
        let res = classify_rank2(&s, 12, &CertOptions::default()).unwrap();
        assert_eq!(value(&res), r(1, 1));
        assert_eq!(res.attained, Attainment::Unknown);

        let s = MonoidSpec::family(2, vec![iv![2, 5]], vec![lin(&[0, 1], &[1, 1], 4)]).unwrap();
        let res = classify_rank2(&s, 12, &CertOptions::default()).unwrap();
        assert_eq!(value(&res), r(3, 1));
        let Certificate::CaseTag(tag) = &res.certificate else {
            panic!()
        };
        assert_eq!(tag.case, CaseId::C2_2_2);
        assert_eq!(
            tag.profile.projection_weights,
            WeightSet::Finite(vec![BigInt::from(1), BigInt::from(3)])
        );
        assert!(matches!(
            unbounded_certificate(&s, 12, &CertOptions::default()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn atom_on_limit_ray_is_unsupported() {
        // a(n + 5) = a(n) + (5,5), so only a short window passes validation
        let s = MonoidSpec::family(2, vec![iv![5, 5]], vec![lin(&[0, 1], &[1, 1], 1)]).unwrap();
        assert!(classify_rank2(&s, 7, &CertOptions::default())
            .is_err_and(|e| matches!(e, Error::Validation(_))));
        assert!(matches!(
            classify_rank2(&s, 6, &CertOptions::default()),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn both_sides_of_one_limit() {
        // (n, n+1) above slope 1 and (3, 1) below it
        let s = MonoidSpec::family(2, vec![iv![3, 1]], vec![lin(&[0, 1], &[1, 1], 10)]).unwrap();
        let res = classify_rank2(&s, 12, &CertOptions::default()).unwrap();
        let Certificate::CaseTag(tag) = &res.certificate else {
            panic!()
        };
        assert_eq!(tag.case, CaseId::C2_1);
        assert!(verify_certificate(tag.witness.as_ref().unwrap()).unwrap() > r(10, 1));
    }

    #[test]
    fn unbounded_weights_on_one_side() {
        // (n^2 + 1, n^2 + n + 1): slope decreases to 1 with weight n
        let s = AtomSequence::from_coeffs(&[1, 1], &[0, 1], &[1, 1], 1).unwrap();
        let spec = MonoidSpec::family(2, vec![], vec![s]).unwrap();
        let res = classify_rank2(&spec, 10, &CertOptions::default()).unwrap();
        let Certificate::CaseTag(tag) = &res.certificate else {
            panic!()
        };
        assert_eq!(tag.case, CaseId::C2_2_1);
        assert_eq!(tag.profile.projection_weights, WeightSet::Infinite);
        assert!(verify_certificate(tag.witness.as_ref().unwrap()).unwrap() > r(10, 1));
    }

    #[test]
    fn middle_atoms_give_case_1_1() {
        // slopes decrease to 1/2 from above and increase to 2 from below
        let s1 = lin(&[1, 1], &[2, 1], 1);
        let s2 = lin(&[1, 1], &[1, 2], 1);
        let spec = MonoidSpec::family(2, vec![], vec![s1, s2]).unwrap();
        let res = classify_rank2(&spec, 8, &CertOptions::default()).unwrap();
        let Certificate::CaseTag(tag) = &res.certificate else {
            panic!()
        };
        assert_eq!(tag.case, CaseId::C1_1);
        assert!(verify_certificate(tag.witness.as_ref().unwrap()).unwrap() > r(10, 1));
    }

    #[test]
    fn polyhedral_examples() {
        let s = AtomSequence::from_coeffs(&[1, 1, 1], &[0, 0, 2], &[], 1).unwrap();
        let ext = vec![iv![2, 0, 0], iv![0, 2, 0], iv![0, 0, 2]];
        let spec = MonoidSpec::family(3, ext.clone(), vec![s]).unwrap();
        let c = polyhedral_certificate(&spec, &ext, 25, &CertOptions::default()).unwrap();
        assert_eq!(c.n0, 2);
        assert!(c.ratio >= r(53, 2));
        assert_eq!(verify_certificate(&c.witness).unwrap(), c.ratio);
        assert_eq!(c.member, iv![1, 1, 157]);
        let c1 = polyhedral_certificate(&spec, &ext, 1, &CertOptions::default()).unwrap();
        assert!(c1.ratio > r(1, 1));

        // the cone z >= x + y does not contain (n, n, 1)
        let out = AtomSequence::from_coeffs(&[0, 0, 1], &[1, 1, 0], &[], 1).unwrap();
        let ext2 = vec![iv![1, 0, 1], iv![0, 1, 1], iv![0, 0, 1]];
        let spec2 = MonoidSpec::family(3, ext2.clone(), vec![out]).unwrap();
        assert!(matches!(
            polyhedral_certificate(&spec2, &ext2, 5, &CertOptions::default()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn corrupted_certificates_fail() {
        let res = classify_rank2(&two_limit(), 12, &CertOptions::default()).unwrap();
        let w = res.certificate.ratio_witness().unwrap().clone();
        let mut bad = w.clone();
        bad.long.exponents[0] += 1;
        let err = verify_certificate(&bad).unwrap_err();
        assert!(err.to_string().contains("coordinate"), "{err}");
        let same = RatioWitness {
            long: w.short.clone(),
            ..w.clone()
        };
        assert_eq!(verify_certificate(&same).unwrap(), r(1, 1));

        let f = w.to_file();
        assert_eq!(f.ratio, "43/4");
        let text = serde_json::to_string(&f).unwrap();
        let back: CertificateFile = serde_json::from_str(&text).unwrap();
        assert_eq!(verify_certificate_file(&back).unwrap(), r(43, 4));
        let mut lie = back.clone();
        lie.ratio = "11/1".into();
        assert!(verify_certificate_file(&lie).is_err());
    }

    #[test]
    fn lp_dominates_element_elasticity() {
        let a = AtomList::from_atoms(vec![iv![1, 3], iv![2, 1], iv![3, 3], iv![1, 0]]).unwrap();
        let rho = value(&elasticity_fg(&a).unwrap());
        for x0 in 1..12u64 {
            for x1 in 1..12u64 {
                if let Ok(e) = elasticity_of_element(&a, &iv![x0, x1]) {
                    assert!(e <= rho);
                }
            }
        }
    }
}
