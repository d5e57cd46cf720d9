mod common;

use std::collections::BTreeSet;

use common::{iv, naive_lengths};
use elastica::constructions::{
    build_full_system, enumerate_pfin, lift_rank, realize_length_set, FullSystemBuild, SlopeProfile,
};
use elastica::{atoms_of, length_set, IntVec};

#[test]
fn pfin_prefix_is_injective() {
    let sets = enumerate_pfin(10_000).unwrap();
    let distinct: BTreeSet<&Vec<u64>> = sets.iter().collect();
    assert_eq!(distinct.len(), sets.len());
    for s in &sets {
        assert!(s.windows(2).all(|w| w[0] < w[1]));
    }
}

#[test]
fn subsets_of_2_to_6_come_early() {
    let sets = enumerate_pfin(64).unwrap();
    for mask in 1u32..32 {
        let s: Vec<u64> = (0..5)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| i + 2)
            .collect();
        assert!(sets.contains(&s), "{s:?}");
    }
    assert_eq!(&sets[..2], &[vec![0], vec![1]]);
}

#[test]
fn realizations_pass_the_naive_oracle() {
    for s in enumerate_pfin(64).unwrap() {
        let r = realize_length_set(&s).unwrap();
        let gens: Vec<Vec<u64>> = r.generators.iter().map(|&g| vec![g]).collect();
        let list = atoms_of(&gens.iter().map(|g| iv(g)).collect::<Vec<_>>()).unwrap();
        assert_eq!(list.len(), gens.len(), "{s:?}: generators are not minimal");
        assert_eq!(naive_lengths(&gens, &[r.element]), s, "{s:?}");
    }
}

fn sample(build: &FullSystemBuild) -> Vec<IntVec> {
    let t: Vec<IntVec> = build.targets().into_iter().map(|(x, _)| x).collect();
    let mut out: BTreeSet<IntVec> = t.iter().cloned().collect();
    for i in 0..t.len() {
        for j in i..t.len() {
            out.insert(t[i].add(&t[j]));
        }
    }
    out.into_iter().collect()
}

#[test]
fn lift_preserves_lengths() {
    let build = build_full_system(5, &SlopeProfile::two_limit()).unwrap();
    let plane = build.atoms().unwrap();
    for d in [3, 4] {
        let lifted = lift_rank(&build, d).unwrap();
        let space = atoms_of(lifted.generators().unwrap()).unwrap();
        for x in sample(&build) {
            assert_eq!(
                length_set(&plane, &x).unwrap(),
                length_set(&space, &x.embed(d)).unwrap(),
                "{x} in rank {d}"
            );
        }
    }
}

#[test]
fn builds_realize_the_prefix() {
    for profile in [SlopeProfile::two_limit(), SlopeProfile::one_limit()] {
        let build = build_full_system(7, &profile).unwrap();
        assert!(build.verification.verified);
        assert!(build.verification.rescaling_holds);
        let sets = enumerate_pfin(7).unwrap();
        let atoms = build.atoms().unwrap();
        let targets = build.targets();
        assert_eq!(targets.len(), sets.len());
        for ((x, set), s) in targets.iter().zip(&sets) {
            assert_eq!(set, s);
            assert_eq!(length_set(&atoms, x).unwrap().values(), s.as_slice());
        }
        for c in &build.verification.blocks {
            assert!(c.matches && c.scaling_invariant && c.off_ray_divisors.is_empty());
        }
    }
}

#[test]
fn manifest_round_trip() {
    let build = build_full_system(5, &SlopeProfile::one_limit()).unwrap();
    let text = serde_json::to_string(&build).unwrap();
    let back = FullSystemBuild::from_json(&text).unwrap();
    assert_eq!(serde_json::to_string(&back).unwrap(), text);
    back.reverify().unwrap();
}
