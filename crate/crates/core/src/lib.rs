//! Exact factorization invariants of submonoids of `N^d`: sets of lengths,
//! elasticity, generalized lengths, certificates for infinite elasticity and
//! truncated constructions of monoids with prescribed systems of sets of
//! lengths.

pub mod codec;
pub mod constructions;
pub mod elasticity;
pub mod error;
pub mod factor;
pub mod geometry;
pub mod lp;
pub mod monoid;

pub use error::{Error, Result};
pub use factor::{
    elasticity_of_element, factorizations, generalized_elasticity_scan, generalized_length_set,
    length_set, system_sample, Factorization, LengthSet,
};
pub use geometry::{
    cramer_decompose, det2, hilbert_basis_2d, projection_weight, slope_cmp, IntVec, Rat, SlopeValue,
};
pub use monoid::{
    atoms_of, family_members_up_to, is_member, truncate, validate_family_atoms, AtomList,
    AtomSequence, MonoidBody, MonoidSpec,
};
