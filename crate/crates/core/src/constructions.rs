//! Truncated constructions: realizations of prescribed sets of lengths,
//! rank-2 monoids whose systems of sets of lengths contain a prefix of
//! `P_fin`, rank lifts, primality checks and isomorphism invariants.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::codec;
use crate::error::{Error, Result};
use crate::factor::{generalized_length_table, to_u64_target, Enumerator, LengthSet};
use crate::geometry::{IntVec, Rat, SlopeValue};
use crate::lp::feasible_point;
use crate::monoid::{atoms_of, AtomList, AtomSequence, MonoidBody, MonoidSpec};

/// Subsets of `{2, 3, ...}` in (max, size, lex) order.
#[derive(Clone, Debug, Default)]
pub struct HighSubsets {
    max: u64,
    size: usize,
    // indices into 2..max of the current combination, excluding max itself
    comb: Vec<u64>,
    started: bool,
}

impl HighSubsets {
    pub fn new() -> Self {
        HighSubsets {
            max: 2,
            size: 1,
            comb: Vec::new(),
            started: false,
        }
    }

    fn advance(&mut self) {
        // next combination of size - 1 from 2..max in lex order
        let k = self.comb.len();
        let top = self.max; // exclusive
        let mut i = k;
        while i > 0 {
            i -= 1;
            if self.comb[i] < top - (k - i) as u64 {
                self.comb[i] += 1;
                for j in i + 1..k {
                    self.comb[j] = self.comb[j - 1] + 1;
                }
                return;
            }
        }
        // combinations of this size exhausted
        self.size += 1;
        if self.size as u64 > self.max - 1 {
            self.max += 1;
            self.size = 1;
        }
        self.comb = (0..self.size as u64 - 1).map(|j| 2 + j).collect();
    }
}

impl Iterator for HighSubsets {
    type Item = Vec<u64>;

    fn next(&mut self) -> Option<Vec<u64>> {
        if self.started {
            self.advance();
        }
        self.started = true;
        let mut s = self.comb.clone();
        s.push(self.max);
        Some(s)
    }
}

/// The canonical enumeration `{0}, {1}`, then [`HighSubsets`].
pub fn pfin_iter() -> impl Iterator<Item = Vec<u64>> {
    [vec![0], vec![1]].into_iter().chain(HighSubsets::new())
}

/// The first `m` sets of the canonical enumeration of `P_fin`.
pub fn enumerate_pfin(m: usize) -> Result<Vec<Vec<u64>>> {
    if m == 0 {
        return Err(Error::Precondition("enumerate_pfin needs m >= 1".into()));
    }
    Ok(pfin_iter().take(m).collect())
}

/// Checks that `s` is a member of `P_fin` and returns it sorted.
pub fn check_pfin(s: &[u64]) -> Result<Vec<u64>> {
    let mut v = s.to_vec();
    v.sort_unstable();
    v.dedup();
    let ok = match v.as_slice() {
        [] => false,
        [0] | [1] => true,
        _ => v[0] >= 2,
    };
    if !ok {
        return Err(Error::Precondition(format!(
            "{v:?} is not in P_fin: expected {{0}}, {{1}} or a nonempty finite subset of {{2, 3, ...}}"
        )));
    }
    Ok(v)
}

/// `x` in the numerical monoid generated by `gens` with `L(x) = set`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Realization {
    pub generators: Vec<u64>,
    pub element: u64,
}

pub const DEFAULT_MAX_GENERATOR: u64 = 32;
/// Generator sets with maximum up to this bound are searched exhaustively.
pub const EXHAUSTIVE_MAX_GENERATOR: u64 = 16;
/// Above [`EXHAUSTIVE_MAX_GENERATOR`], only sets of at most this size.
pub const MAX_EXTENDED_GENERATORS: usize = 6;

/// Minimal generating subset of a set of positive integers.
fn numerical_atoms(gens: &[u64]) -> Vec<u64> {
    let mut out: Vec<u64> = Vec::new();
    let mut g = gens.to_vec();
    g.sort_unstable();
    g.dedup();
    for &v in &g {
        // reachable[y]: y is a sum of already accepted atoms
        let mut reach = vec![false; v as usize + 1];
        reach[0] = true;
        for y in 1..=v as usize {
            reach[y] = out
                .iter()
                .any(|&a| a as usize <= y && reach[y - a as usize]);
        }
        if !reach[v as usize] {
            out.push(v);
        }
    }
    out
}

/// Finds generators in `[2, B]` and an element with the prescribed set of
/// lengths, deepening `B` up to [`DEFAULT_MAX_GENERATOR`].
///
/// Generator sets are tried in (max, size, lex) order: all of them while
/// `B <= EXHAUSTIVE_MAX_GENERATOR`, then only those with at most
/// [`MAX_EXTENDED_GENERATORS`] elements.
pub fn realize_length_set(set: &[u64]) -> Result<Realization> {
    realize_length_set_with(set, DEFAULT_MAX_GENERATOR)
}

pub fn realize_length_set_with(set: &[u64], max_generator: u64) -> Result<Realization> {
    let s = check_pfin(set)?;
    match s.as_slice() {
        [0] => {
            return Ok(Realization {
                generators: vec![2],
                element: 0,
            })
        }
        [1] => {
            return Ok(Realization {
                generators: vec![2],
                element: 2,
            })
        }
        _ => {}
    }
    let target = LengthSet::from_values(s.clone());
    let cap = max_generator.min(EXHAUSTIVE_MAX_GENERATOR);
    let exhaustive = HighSubsets::new().take_while(|g| *g.last().unwrap() <= cap);
    let extended = (EXHAUSTIVE_MAX_GENERATOR + 1..=max_generator).flat_map(|top| {
        (1..=MAX_EXTENDED_GENERATORS).flat_map(move |size| {
            combinations(2, top, size - 1).map(move |mut c| {
                c.push(top);
                c
            })
        })
    });
    for gens in exhaustive.chain(extended) {
        if let Some(x) = realize_with_generators(&gens, &target)? {
            return Ok(Realization {
                generators: gens,
                element: x,
            });
        }
    }
    Err(Error::Resource(format!(
        "no realization of {s:?} with generators up to {max_generator}"
    )))
}

/// An element with set of lengths `target` over the minimal generating set
/// `gens`, if there is one.
fn realize_with_generators(gens: &[u64], target: &LengthSet) -> Result<Option<u64>> {
    if numerical_atoms(gens) != gens {
        return Ok(None);
    }
    let (smin, smax) = (target.min().unwrap(), target.max().unwrap());
    let gmax = *gens.last().unwrap();
    // every length l of x satisfies l * gmin <= x <= l * gmax
    let (Some(lo), Some(hi)) = (gens[0].checked_mul(smax), gmax.checked_mul(smin)) else {
        return Ok(None);
    };
    if lo > hi {
        return Ok(None);
    }
    let table = generalized_length_table(gens, hi)?;
    Ok((lo..=hi).find(|&x| table[x as usize] == *target))
}

/// Increasing `k`-subsets of `from..to` in lex order.
fn combinations(from: u64, to: u64, k: usize) -> impl Iterator<Item = Vec<u64>> {
    let mut cur: Option<Vec<u64>> = if from + k as u64 <= to {
        Some((0..k as u64).map(|j| from + j).collect())
    } else {
        None
    };
    std::iter::from_fn(move || {
        let out = cur.clone()?;
        let next = {
            let c = cur.as_mut().unwrap();
            let mut i = k;
            loop {
                if i == 0 {
                    break false;
                }
                i -= 1;
                if c[i] < to - (k - i) as u64 {
                    c[i] += 1;
                    for j in i + 1..k {
                        c[j] = c[j - 1] + 1;
                    }
                    break true;
                }
            }
        };
        if !next {
            cur = None;
        }
        Some(out)
    })
}

/// Slope schedule of a full-system build.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SlopeProfile {
    /// Odd blocks decrease toward `low`, even blocks increase toward `high`.
    TwoLimit {
        #[serde(with = "codec::rat")]
        low: Rat,
        #[serde(with = "codec::rat")]
        high: Rat,
    },
    /// All blocks decrease toward `limit`.
    OneLimit {
        #[serde(with = "codec::rat")]
        limit: Rat,
    },
}

impl SlopeProfile {
    pub fn two_limit() -> Self {
        SlopeProfile::TwoLimit {
            low: Rat::one(),
            high: Rat::from_integer(2.into()),
        }
    }

    pub fn one_limit() -> Self {
        SlopeProfile::OneLimit { limit: Rat::one() }
    }

    fn check(&self) -> Result<()> {
        match self {
            SlopeProfile::TwoLimit { low, high } => {
                if !low.is_positive() || low >= high {
                    return Err(Error::Precondition(format!(
                        "two-limit profile needs 0 < low < high, got {} and {}",
                        codec::rat_to_string(low),
                        codec::rat_to_string(high)
                    )));
                }
                // odd blocks start at low + (high-low)/4, even at high - (high-low)/4
                let odd_max = self.slope(1);
                let even_min = self.slope(2);
                if odd_max >= even_min {
                    return Err(Error::Precondition(
                        "odd and even slopes do not interleave".into(),
                    ));
                }
                Ok(())
            }
            SlopeProfile::OneLimit { limit } => {
                if !limit.is_positive() {
                    return Err(Error::Precondition(
                        "one-limit profile needs a positive limit".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Scheduled slope of block `n >= 1`.
    pub fn slope(&self, n: u64) -> Rat {
        let n = BigInt::from(n);
        match self {
            SlopeProfile::TwoLimit { low, high } => {
                let gap = high - low;
                if n.is_odd() {
                    low + gap / Rat::from_integer(2 * (n + 1))
                } else {
                    high - gap / Rat::from_integer(n + 2)
                }
            }
            SlopeProfile::OneLimit { limit } => {
                limit * (Rat::one() + Rat::new(BigInt::one(), n + 1))
            }
        }
    }

    /// Smallest lattice vector with the slope of block `n`.
    pub fn direction(&self, n: u64) -> IntVec {
        SlopeValue::Finite(self.slope(n)).direction()
    }

    /// Linear atom sequences carrying the scheduled slopes, indexed by
    /// `k >= 1`: block `2k - 1` and block `2k` (two-limit) or block `k`
    /// (one-limit).
    pub fn defining_family(&self) -> Result<MonoidSpec> {
        let den = |r: &Rat| r.denom().clone();
        let int = |r: Rat| -> BigInt {
            debug_assert!(r.is_integer());
            r.to_integer()
        };
        let seqs = match self {
            SlopeProfile::TwoLimit { low, high } => {
                let d = Rat::from_integer(den(low).lcm(&den(high)));
                let gap = high - low;
                // block 2k-1: (4k d, 4k low d + gap d)
                let odd = AtomSequence::new(
                    vec![BigInt::zero(), int(&gap * &d)],
                    vec![
                        int(&d * Rat::from_integer(4.into())),
                        int(low * &d * Rat::from_integer(4.into())),
                    ],
                    vec![],
                    1,
                )?;
                // block 2k: ((2k+2) d, (2k+2) high d - gap d)
                let two = Rat::from_integer(2.into());
                let even = AtomSequence::new(
                    vec![int(&two * &d), int(&two * high * &d - &gap * &d)],
                    vec![int(&two * &d), int(&two * high * &d)],
                    vec![],
                    1,
                )?;
                vec![odd, even]
            }
            SlopeProfile::OneLimit { limit } => {
                let d = Rat::from_integer(den(limit));
                // block n: ((n+1) d, (n+2) limit d)
                let two = Rat::from_integer(2.into());
                vec![AtomSequence::new(
                    vec![int(d.clone()), int(&two * limit * &d)],
                    vec![int(d.clone()), int(limit * &d)],
                    vec![],
                    1,
                )?]
            }
        };
        MonoidSpec::family(2, vec![], seqs)
    }
}

/// One embedded numerical monoid of a full-system build.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub index: u64,
    pub set: Vec<u64>,
    pub realization: Realization,
    pub direction: IntVec,
    #[serde(with = "codec::bigint")]
    pub scale: BigInt,
    /// `scale * g * direction` for the generators `g` of the realization.
    pub atoms: Vec<IntVec>,
    /// `scale * element * direction`.
    pub target: IntVec,
}

impl Block {
    fn new(
        index: u64,
        set: Vec<u64>,
        realization: Realization,
        direction: IntVec,
        scale: BigInt,
    ) -> Self {
        let base = direction.scale(&scale);
        let atoms = realization
            .generators
            .iter()
            .map(|&g| base.scale_u64(g))
            .collect();
        let target = base.scale_u64(realization.element);
        Block {
            index,
            set,
            realization,
            direction,
            scale,
            atoms,
            target,
        }
    }

    fn min_atom_norm(&self) -> BigInt {
        self.atoms
            .iter()
            .map(IntVec::norm_sq)
            .min()
            .expect("blocks have atoms")
    }

    fn max_norm(&self) -> BigInt {
        self.atoms
            .iter()
            .map(IntVec::norm_sq)
            .chain([self.target.norm_sq()])
            .max()
            .expect("blocks have atoms")
    }
}

/// Outcome of re-checking one block against the union monoid.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockCheck {
    pub index: u64,
    /// `L(x_n)` over the atoms of the union monoid.
    pub lengths: LengthSet,
    pub matches: bool,
    /// `L_{scale H_n}(scale x) = L_{H_n}(x)`.
    pub scaling_invariant: bool,
    /// Atoms `a <= x_n` off the ray of `x_n` with `x_n - a` in the monoid.
    pub off_ray_divisors: Vec<IntVec>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildVerification {
    pub blocks: Vec<BlockCheck>,
    /// Consecutive blocks satisfy the rescaling inequality.
    pub rescaling_holds: bool,
    pub atom_count: usize,
    pub verified: bool,
}

/// Truncated monoid realizing `S_1, ..., S_m` as sets of lengths.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FullSystemBuild {
    pub profile: SlopeProfile,
    pub blocks: Vec<Block>,
    pub monoid: MonoidSpec,
    pub verification: BuildVerification,
}

/// How many times a failing build may enlarge a scale factor.
pub const BUILD_RETRY_CAP: usize = 8;

impl FullSystemBuild {
    pub fn targets(&self) -> Vec<(IntVec, Vec<u64>)> {
        self.blocks
            .iter()
            .map(|b| (b.target.clone(), b.set.clone()))
            .collect()
    }

    pub fn scales(&self) -> Vec<BigInt> {
        self.blocks.iter().map(|b| b.scale.clone()).collect()
    }

    pub fn atoms(&self) -> Result<AtomList> {
        atoms_of(self.monoid.generators().unwrap_or(&[]))
    }

    pub fn defining_family(&self) -> Result<MonoidSpec> {
        self.profile.defining_family()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Recomputes every check from the blocks alone; the stored
    /// verification and monoid are ignored.
    pub fn reverify(&self) -> Result<BuildVerification> {
        for (i, b) in self.blocks.iter().enumerate() {
            let expect = Block::new(
                b.index,
                b.set.clone(),
                b.realization.clone(),
                b.direction.clone(),
                b.scale.clone(),
            );
            if expect != *b || b.index != i as u64 + 1 {
                return Err(Error::Validation(format!(
                    "block {} is inconsistent with its realization, direction and scale",
                    b.index
                )));
            }
            if b.direction != self.profile.direction(b.index) {
                return Err(Error::Validation(format!(
                    "block {} direction {} does not follow the profile",
                    b.index, b.direction
                )));
            }
        }
        let expected = union_spec(&self.blocks)?;
        if expected != self.monoid {
            return Err(Error::Validation(
                "monoid is not the union of the blocks".into(),
            ));
        }
        verify_blocks(&self.blocks)
    }
}

fn union_spec(blocks: &[Block]) -> Result<MonoidSpec> {
    let mut gens: Vec<IntVec> = blocks
        .iter()
        .flat_map(|b| b.atoms.iter().cloned())
        .collect();
    gens.sort();
    gens.dedup();
    MonoidSpec::finite(2, gens)
}

/// Smallest `lambda >= 1` with `lambda^2 * base > bound`.
fn min_scale(base: &BigInt, bound: &BigInt) -> BigInt {
    let mut l = (bound / base).sqrt();
    if l.is_zero() {
        l = BigInt::one();
    }
    while &(&l * &l * base) <= bound {
        l += 1;
    }
    l
}

fn lengths_1d(gens: &[u64], x: u64) -> Result<LengthSet> {
    let table = generalized_length_table(gens, x)?;
    Ok(table[x as usize].clone())
}

fn verify_blocks(blocks: &[Block]) -> Result<BuildVerification> {
    let spec = union_spec(blocks)?;
    let atoms = atoms_of(spec.generators().unwrap_or(&[]))?;
    let rescaling_holds = blocks
        .windows(2)
        .all(|w| w[1].min_atom_norm() > w[0].max_norm());
    let mut checks = Vec::with_capacity(blocks.len());
    let mut en = Enumerator::new(&atoms);
    for b in blocks {
        let x = &b.target;
        let xs = to_u64_target(x)?;
        let lengths = if x.is_zero() {
            LengthSet::from_values(vec![0])
        } else {
            en.lengths(&xs)?
        };
        let matches = lengths.values() == b.set.as_slice();
        // the block on its own, before the union
        let own = lengths_1d(&b.realization.generators, b.realization.element)?;
        let scaled = if x.is_zero() {
            LengthSet::from_values(vec![0])
        } else {
            let list = AtomList::from_atoms(b.atoms.clone())?;
            Enumerator::new(&list).lengths(&xs)?
        };
        let scaling_invariant = own == scaled && own.values() == b.set.as_slice();
        let mut off_ray_divisors = Vec::new();
        if !x.is_zero() {
            let ray = b.direction.clone();
            for a in atoms.atoms() {
                if a.primitive() == ray {
                    continue;
                }
                let Some(rest) = x.checked_sub(a) else {
                    continue;
                };
                let divides = rest.is_zero() || en.first(&to_u64_target(&rest)?)?.is_some();
                if divides {
                    off_ray_divisors.push(a.clone());
                }
            }
        }
        checks.push(BlockCheck {
            index: b.index,
            lengths,
            matches,
            scaling_invariant,
            off_ray_divisors,
        });
    }
    let verified = rescaling_holds
        && checks
            .iter()
            .all(|c| c.matches && c.scaling_invariant && c.off_ray_divisors.is_empty());
    Ok(BuildVerification {
        blocks: checks,
        rescaling_holds,
        atom_count: atoms.len(),
        verified,
    })
}

/// Builds the truncated monoid for the first `m` sets of `P_fin`.
///
/// Block `n` is the realization of `S_n` embedded on the ray of the
/// profile's `n`-th direction and rescaled so that its atoms are longer
/// than every atom and target of block `n - 1`. The union is verified
/// block by block; a failure enlarges the scale of the block owning the
/// offending divisor and rebuilds.
pub fn build_full_system(m: usize, profile: &SlopeProfile) -> Result<FullSystemBuild> {
    profile.check()?;
    let sets = enumerate_pfin(m)?;
    let realizations: Vec<Realization> = sets
        .iter()
        .map(|s| realize_length_set(s))
        .collect::<Result<_>>()?;
    let mut extra: Vec<BigInt> = vec![BigInt::one(); m];
    for attempt in 0..=BUILD_RETRY_CAP {
        let mut blocks: Vec<Block> = Vec::with_capacity(m);
        for (i, (set, r)) in sets.iter().zip(&realizations).enumerate() {
            let n = i as u64 + 1;
            let dir = profile.direction(n);
            let minimal = match blocks.last() {
                None => BigInt::one(),
                Some(prev) => {
                    let g = BigInt::from(r.generators[0]);
                    min_scale(&(&g * &g * dir.norm_sq()), &prev.max_norm())
                }
            };
            blocks.push(Block::new(
                n,
                set.clone(),
                r.clone(),
                dir,
                minimal * &extra[i],
            ));
        }
        let verification = verify_blocks(&blocks)?;
        if verification.verified {
            return Ok(FullSystemBuild {
                profile: profile.clone(),
                monoid: union_spec(&blocks)?,
                blocks,
                verification,
            });
        }
        let culprit = verification
            .blocks
            .iter()
            .flat_map(|c| c.off_ray_divisors.iter())
            .next()
            .cloned();
        let owner = culprit
            .as_ref()
            .and_then(|a| blocks.iter().position(|b| b.atoms.contains(a)));
        match owner {
            Some(j) => extra[j] *= 2,
            None => {
                return Err(Error::Internal(format!(
                    "build for m = {m} failed verification without an off-ray divisor: {:?}",
                    verification
                        .blocks
                        .iter()
                        .filter(|c| !c.matches || !c.scaling_invariant)
                        .map(|c| c.index)
                        .collect::<Vec<_>>()
                )))
            }
        }
        if attempt == BUILD_RETRY_CAP {
            return Err(Error::Internal(format!(
                "build for m = {m} still fails after {BUILD_RETRY_CAP} rescalings; offending divisor {}",
                culprit.expect("culprit found above")
            )));
        }
    }
    unreachable!("the retry loop returns")
}

/// Embeds the build into `N^d` and appends `e_3, ..., e_d`.
pub fn lift_rank(build: &FullSystemBuild, d: usize) -> Result<MonoidSpec> {
    if d < 3 {
        return Err(Error::Precondition(format!(
            "lift_rank needs d >= 3, got {d}"
        )));
    }
    let gens = build.monoid.generators().unwrap_or(&[]);
    let mut out: Vec<IntVec> = gens.iter().map(|g| g.embed(d)).collect();
    out.extend((2..d).map(|i| IntVec::unit(d, i)));
    MonoidSpec::finite(d, out)
}

/// Answer of [`is_primary_family`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PrimaryReport {
    pub primary: bool,
    pub explanation: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attaining_atom: Option<IntVec>,
    /// Coordinate `j` whose hyperplane slice is a nonempty proper
    /// divisor-closed submonoid.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub divisor_closed_face: Option<usize>,
}

fn slope(v: &IntVec) -> SlopeValue {
    SlopeValue::of(v).expect("plane atoms are nonzero")
}

/// Extreme slope of a plane family together with the atoms attaining it.
struct Extreme {
    value: SlopeValue,
    attained_by: Vec<IntVec>,
}

/// Infimum and supremum of the atom slopes of a plane family.
fn slope_extremes(spec: &MonoidSpec) -> Result<(Extreme, Extreme)> {
    // (value, attaining atom) candidates for each side
    let mut lows: Vec<(SlopeValue, Option<IntVec>)> = Vec::new();
    let mut highs: Vec<(SlopeValue, Option<IntVec>)> = Vec::new();
    for a in spec.finite_atoms() {
        lows.push((slope(a), Some(a.clone())));
        highs.push((slope(a), Some(a.clone())));
    }
    for s in spec.sequences() {
        let first = s.at(s.n_start());
        let limit = s.limit_slope()?;
        if s.trend() == Some(std::cmp::Ordering::Less) {
            lows.push((slope(&first), Some(first)));
            highs.push((limit, None));
        } else {
            lows.push((limit, None));
            highs.push((slope(&first), Some(first)));
        }
    }
    let pick = |c: Vec<(SlopeValue, Option<IntVec>)>, low: bool| -> Option<Extreme> {
        let value = if low {
            c.iter().map(|(v, _)| v.clone()).min()?
        } else {
            c.iter().map(|(v, _)| v.clone()).max()?
        };
        let mut attained_by: Vec<IntVec> = c
            .into_iter()
            .filter(|(v, a)| *v == value && a.is_some())
            .filter_map(|(_, a)| a)
            .collect();
        attained_by.sort();
        attained_by.dedup();
        Some(Extreme { value, attained_by })
    };
    let lo =
        pick(lows, true).ok_or_else(|| Error::Precondition("the family has no atoms".into()))?;
    let hi = pick(highs, false).expect("same candidates");
    Ok((lo, hi))
}

/// Primality through the cone criterion: a rank-2 family is primary iff
/// neither extreme atom slope is attained.
pub fn is_primary_family(spec: &MonoidSpec) -> Result<PrimaryReport> {
    match &spec.body {
        MonoidBody::AtomFamily { .. } if spec.dim == 2 => {
            let (lo, hi) = slope_extremes(spec)?;
            for (e, side) in [(&lo, "infimum"), (&hi, "supremum")] {
                if let Some(a) = e.attained_by.first() {
                    return Ok(PrimaryReport {
                        primary: false,
                        explanation: format!(
                            "the atom {a} attains the {side} {} of the atom slopes, so the cone is not open",
                            e.value
                        ),
                        attaining_atom: Some(a.clone()),
                        divisor_closed_face: None,
                    });
                }
            }
            Ok(PrimaryReport {
                primary: true,
                explanation: format!(
                    "atom slopes have infimum {} and supremum {}, neither attained",
                    lo.value, hi.value
                ),
                attaining_atom: None,
                divisor_closed_face: None,
            })
        }
        MonoidBody::AtomFamily { .. } => Err(Error::Unsupported(format!(
            "primality of atom families is decided in dimension 2 only, got {}",
            spec.dim
        ))),
        MonoidBody::FiniteGenerators(gens) => finite_primary(spec.dim, gens),
    }
}

fn finite_primary(dim: usize, gens: &[IntVec]) -> Result<PrimaryReport> {
    let atoms = atoms_of(gens)?;
    if atoms.is_empty() {
        return Ok(PrimaryReport {
            primary: true,
            explanation: "the trivial monoid is primary".into(),
            attaining_atom: None,
            divisor_closed_face: None,
        });
    }
    // a coordinate vanishing on some atoms but not all cuts out a face
    for j in 0..dim {
        let zero = atoms
            .atoms()
            .iter()
            .filter(|a| a.coords()[j].is_zero())
            .count();
        if zero > 0 && zero < atoms.len() {
            return Ok(PrimaryReport {
                primary: false,
                explanation: format!(
                    "the elements with coordinate {} equal to 0 form a nonempty proper divisor-closed submonoid",
                    j + 1
                ),
                attaining_atom: None,
                divisor_closed_face: Some(j),
            });
        }
    }
    let rank = rank_of(atoms.atoms());
    if rank <= 1 {
        return Ok(PrimaryReport {
            primary: true,
            explanation: "rank 1: the cone minus the origin is an open ray".into(),
            attaining_atom: None,
            divisor_closed_face: None,
        });
    }
    let rays = extreme_ray_atoms(atoms.atoms());
    let (ray, members) = rays.iter().next().expect("rank >= 2 has extreme rays");
    Ok(PrimaryReport {
        primary: false,
        explanation: format!(
            "finitely generated of rank {rank}: the extreme ray through {ray} is a nonempty proper divisor-closed face"
        ),
        attaining_atom: members.first().cloned(),
        divisor_closed_face: None,
    })
}

/// Rank of a set of integer vectors, by exact elimination.
pub fn rank_of(vs: &[IntVec]) -> usize {
    rank_of_raw(vs.iter().map(|v| v.coords().to_vec()).collect())
}

fn rank_of_raw(mut rows: Vec<Vec<BigInt>>) -> usize {
    rows.retain(|r| r.iter().any(|c| !c.is_zero()));
    let Some(width) = rows.first().map(Vec::len) else {
        return 0;
    };
    let mut rows: Vec<Vec<Rat>> = rows
        .into_iter()
        .map(|r| r.into_iter().map(Rat::from_integer).collect())
        .collect();
    let mut rank = 0;
    for col in 0..width {
        let Some(p) = (rank..rows.len()).find(|&i| !rows[i][col].is_zero()) else {
            continue;
        };
        rows.swap(rank, p);
        let pivot = rows[rank].clone();
        for r in rows.iter_mut().skip(rank + 1) {
            if r[col].is_zero() {
                continue;
            }
            let f = &r[col] / &pivot[col];
            for (v, pv) in r.iter_mut().zip(&pivot) {
                *v -= &f * pv;
            }
        }
        rank += 1;
    }
    rank
}

/// Atoms grouped by the extreme rays of their cone, keyed by the primitive
/// ray vector.
fn extreme_ray_atoms(atoms: &[IntVec]) -> BTreeMap<IntVec, Vec<IntVec>> {
    let mut rays: BTreeMap<IntVec, Vec<IntVec>> = BTreeMap::new();
    for a in atoms {
        rays.entry(a.primitive()).or_default().push(a.clone());
    }
    let dirs: Vec<IntVec> = rays.keys().cloned().collect();
    rays.retain(|r, _| {
        let others: Vec<&IntVec> = dirs.iter().filter(|d| *d != r).collect();
        if others.is_empty() {
            return true;
        }
        let a: Vec<Vec<Rat>> = (0..r.dim())
            .map(|j| {
                others
                    .iter()
                    .map(|o| Rat::from_integer(o.coords()[j].clone()))
                    .collect()
            })
            .collect();
        let b: Vec<Rat> = r.coords().iter().cloned().map(Rat::from_integer).collect();
        feasible_point(&a, &b).is_none()
    });
    rays
}

/// Isomorphism invariants compared by [`noniso_witness`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IsoInvariants {
    pub rank: usize,
    pub limit_slopes: usize,
    /// Sorted numbers of atoms on the extreme rays; `None` when not
    /// computed (atom families outside the plane).
    pub extreme_ray_atoms: Option<Vec<usize>>,
}

pub fn iso_invariants(spec: &MonoidSpec) -> Result<IsoInvariants> {
    match &spec.body {
        MonoidBody::FiniteGenerators(g) => {
            let atoms = atoms_of(g)?;
            let mut counts: Vec<usize> = extreme_ray_atoms(atoms.atoms())
                .values()
                .map(Vec::len)
                .collect();
            counts.sort_unstable();
            Ok(IsoInvariants {
                rank: rank_of(atoms.atoms()),
                limit_slopes: 0,
                extreme_ray_atoms: Some(counts),
            })
        }
        MonoidBody::AtomFamily {
            finite_atoms,
            sequences,
        } => {
            let mut rows: Vec<Vec<BigInt>> =
                finite_atoms.iter().map(|a| a.coords().to_vec()).collect();
            for s in sequences {
                rows.push(s.c0().to_vec());
                rows.push(s.c1().to_vec());
                if s.is_quadratic() {
                    rows.push(s.c2().to_vec());
                }
            }
            let mut limits: Vec<IntVec> = sequences
                .iter()
                .map(AtomSequence::limit_direction)
                .collect();
            limits.sort();
            limits.dedup();
            let extreme_ray_atoms = if spec.dim == 2 {
                let (lo, hi) = slope_extremes(spec)?;
                let mut c = vec![lo.attained_by.len(), hi.attained_by.len()];
                if lo.value == hi.value {
                    c.truncate(1);
                }
                c.sort_unstable();
                Some(c)
            } else {
                None
            };
            Ok(IsoInvariants {
                rank: rank_of_raw(rows),
                limit_slopes: limits.len(),
                extreme_ray_atoms,
            })
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "not isomorphic")]
    NotIsomorphic,
    #[serde(rename = "inconclusive")]
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::NotIsomorphic => "not isomorphic",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NonIsoReport {
    pub verdict: Verdict,
    pub left: IsoInvariants,
    pub right: IsoInvariants,
    /// Human-readable descriptions of the invariants that differ.
    pub differing: Vec<String>,
}

/// Compares isomorphism invariants of two monoids.
pub fn noniso_witness(a: &MonoidSpec, b: &MonoidSpec) -> Result<NonIsoReport> {
    let left = iso_invariants(a)?;
    let right = iso_invariants(b)?;
    let mut differing = Vec::new();
    if left.rank != right.rank {
        differing.push(format!("rank {} vs {}", left.rank, right.rank));
    }
    if left.limit_slopes != right.limit_slopes {
        differing.push(format!(
            "limit-slope counts {} vs {}",
            left.limit_slopes, right.limit_slopes
        ));
    }
    if let (Some(x), Some(y)) = (&left.extreme_ray_atoms, &right.extreme_ray_atoms) {
        if x != y {
            differing.push(format!("atoms per extreme ray {x:?} vs {y:?}"));
        }
    }
    let verdict = if differing.is_empty() {
        Verdict::Inconclusive
    } else {
        Verdict::NotIsomorphic
    };
    Ok(NonIsoReport {
        verdict,
        left,
        right,
        differing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor::length_set;
    use crate::iv;
    use crate::monoid::validate_family_atoms;

    #[test]
    fn pfin_prefixes() {
        assert_eq!(
            enumerate_pfin(5).unwrap(),
            vec![vec![0], vec![1], vec![2], vec![3], vec![2, 3]]
        );
        let nine = enumerate_pfin(9).unwrap();
        assert_eq!(
            &nine[5..],
            &[vec![4], vec![2, 4], vec![3, 4], vec![2, 3, 4]]
        );
        assert_eq!(enumerate_pfin(1).unwrap(), vec![vec![0]]);
        assert!(enumerate_pfin(0).is_err());
    }

    #[test]
    fn pfin_order_is_max_size_lex() {
        let v = enumerate_pfin(2000).unwrap();
        let key = |s: &Vec<u64>| (*s.last().unwrap(), s.len(), s.clone());
        for w in v[2..].windows(2) {
            assert!(key(&w[0]) < key(&w[1]), "{:?} {:?}", w[0], w[1]);
        }
    }

    #[test]
    fn realization_examples() {
        assert_eq!(realize_length_set(&[0]).unwrap().element, 0);
        assert_eq!(
            realize_length_set(&[1]).unwrap(),
            Realization {
                generators: vec![2],
                element: 2
            }
        );
        assert_eq!(
            realize_length_set(&[2, 3]).unwrap(),
            Realization {
                generators: vec![2, 3],
                element: 6
            }
        );
        assert_eq!(
            realize_length_set(&[4, 5, 6]).unwrap(),
            Realization {
                generators: vec![2, 3],
                element: 12
            }
        );
        assert!(matches!(
            realize_length_set(&[0, 2]),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            realize_length_set_with(&[2, 9], 3),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn realizations_hold_in_the_plane_embedding() {
        for s in enumerate_pfin(20).unwrap().into_iter().skip(1) {
            let r = realize_length_set(&s).unwrap();
            let atoms =
                AtomList::from_atoms(r.generators.iter().map(|&g| iv![g]).collect()).unwrap();
            let l = length_set(&atoms, &iv![r.element]).unwrap();
            assert_eq!(l.values(), s.as_slice(), "{r:?}");
        }
    }

    #[test]
    fn numerical_atoms_drop_sums() {
        assert_eq!(numerical_atoms(&[2, 3, 4, 5, 7]), vec![2, 3]);
        assert_eq!(numerical_atoms(&[3, 5, 7]), vec![3, 5, 7]);
    }

    #[test]
    fn profile_schedules() {
        let two = SlopeProfile::two_limit();
        let s: Vec<String> = (1..=4)
            .map(|n| codec::rat_to_string(&two.slope(n)))
            .collect();
        assert_eq!(s, ["5/4", "7/4", "9/8", "11/6"]);
        assert_eq!(two.direction(2), iv![4, 7]);
        let one = SlopeProfile::one_limit();
        assert_eq!(one.direction(1), iv![2, 3]);
        let bad = SlopeProfile::TwoLimit {
            low: Rat::from_integer(2.into()),
            high: Rat::one(),
        };
        assert!(bad.check().is_err());
    }

    #[test]
    fn defining_families_follow_the_schedule() {
        for profile in [SlopeProfile::two_limit(), SlopeProfile::one_limit()] {
            let fam = profile.defining_family().unwrap();
            let per = fam.sequences().len() as u64;
            for k in 1..=5u64 {
                for (j, s) in fam.sequences().iter().enumerate() {
                    let n = per * (k - 1) + j as u64 + 1;
                    assert_eq!(s.at(k).primitive(), profile.direction(n), "block {n}");
                }
            }
        }
        let fam = SlopeProfile::two_limit().defining_family().unwrap();
        assert!(validate_family_atoms(&fam, 12).unwrap().passed());
    }

    #[test]
    fn small_builds() {
        let b = build_full_system(1, &SlopeProfile::two_limit()).unwrap();
        assert_eq!(b.blocks.len(), 1);
        assert_eq!(b.verification.blocks[0].lengths.values(), &[0]);

        let b = build_full_system(5, &SlopeProfile::two_limit()).unwrap();
        assert!(b.verification.verified);
        assert_eq!(b.verification.blocks[4].lengths.values(), &[2, 3]);
        assert_eq!(b.scales()[0], BigInt::one());
        assert_eq!(b.reverify().unwrap(), b.verification);

        let b = build_full_system(3, &SlopeProfile::one_limit()).unwrap();
        assert_eq!(b.verification.blocks[2].lengths.values(), &[2]);
    }

    #[test]
    fn scales_are_minimal() {
        let b = build_full_system(6, &SlopeProfile::two_limit()).unwrap();
        for w in b.blocks.windows(2) {
            let smaller = Block::new(
                w[1].index,
                w[1].set.clone(),
                w[1].realization.clone(),
                w[1].direction.clone(),
                &w[1].scale - 1,
            );
            assert!(w[1].scale == BigInt::one() || smaller.min_atom_norm() <= w[0].max_norm());
        }
    }

    #[test]
    fn manifest_round_trip_and_tamper() {
        let b = build_full_system(4, &SlopeProfile::two_limit()).unwrap();
        let text = serde_json::to_string(&b).unwrap();
        let back = FullSystemBuild::from_json(&text).unwrap();
        assert_eq!(back, b);
        assert!(back.reverify().unwrap().verified);
        let mut bad = b.clone();
        bad.blocks[2].scale += 1;
        assert!(matches!(bad.reverify(), Err(Error::Validation(_))));
    }

    #[test]
    fn lift_examples() {
        let b = build_full_system(2, &SlopeProfile::two_limit()).unwrap();
        let l = lift_rank(&b, 3).unwrap();
        let g = l.generators().unwrap();
        assert_eq!(g.len(), b.monoid.generators().unwrap().len() + 1);
        assert_eq!(g.last().unwrap(), &iv![0, 0, 1]);
        assert_eq!(rank_of(g), 3);
        assert!(lift_rank(&b, 2).is_err());
    }

    #[test]
    fn primary_examples() {
        let fam = SlopeProfile::two_limit().defining_family().unwrap();
        assert!(is_primary_family(&fam).unwrap().primary);
        // a single decreasing sequence attains its supremum at the first member
        let one = SlopeProfile::one_limit().defining_family().unwrap();
        let r = is_primary_family(&one).unwrap();
        assert!(!r.primary);
        assert_eq!(r.attaining_atom, Some(iv![2, 3]));

        let s = AtomSequence::from_coeffs(&[0, 1], &[1, 1], &[], 1).unwrap();
        let with_boundary = MonoidSpec::family(2, vec![iv![1, 1]], vec![s]).unwrap();
        let r = is_primary_family(&with_boundary).unwrap();
        assert!(!r.primary);
        assert_eq!(r.attaining_atom, Some(iv![1, 1]));

        let b = build_full_system(2, &SlopeProfile::two_limit()).unwrap();
        let r = is_primary_family(&lift_rank(&b, 3).unwrap()).unwrap();
        assert!(!r.primary);
        assert!(r.divisor_closed_face.is_some());

        let numerical = MonoidSpec::finite(1, vec![iv![2], iv![3]]).unwrap();
        assert!(is_primary_family(&numerical).unwrap().primary);
        let plane = MonoidSpec::finite(2, vec![iv![1, 2], iv![2, 1]]).unwrap();
        assert!(!is_primary_family(&plane).unwrap().primary);
    }

    #[test]
    fn noniso_examples() {
        let one = SlopeProfile::one_limit().defining_family().unwrap();
        let two = SlopeProfile::two_limit().defining_family().unwrap();
        let r = noniso_witness(&one, &two).unwrap();
        assert_eq!(r.verdict, Verdict::NotIsomorphic);
        assert!(r
            .differing
            .contains(&"limit-slope counts 1 vs 2".to_string()));
        assert_eq!((r.left.limit_slopes, r.right.limit_slopes), (1, 2));
        assert_eq!(
            noniso_witness(&two, &two).unwrap().verdict,
            Verdict::Inconclusive
        );

        let single = MonoidSpec::finite(3, vec![iv![1, 0, 0], iv![0, 1, 0], iv![0, 0, 1]]).unwrap();
        let double = MonoidSpec::finite(
            3,
            vec![iv![1, 0, 0], iv![0, 1, 0], iv![0, 0, 2], iv![0, 0, 3]],
        )
        .unwrap();
        let r = noniso_witness(&single, &double).unwrap();
        assert_eq!(r.verdict, Verdict::NotIsomorphic);
        assert_eq!(r.left.extreme_ray_atoms, Some(vec![1, 1, 1]));
        assert_eq!(r.right.extreme_ray_atoms, Some(vec![1, 1, 2]));
    }

    #[test]
    fn extreme_rays_skip_interior_atoms() {
        let rays = extreme_ray_atoms(&[iv![1, 0], iv![1, 1], iv![0, 1], iv![2, 2]]);
        assert_eq!(
            rays.keys().cloned().collect::<Vec<_>>(),
            vec![iv![0, 1], iv![1, 0]]
        );
    }
}
