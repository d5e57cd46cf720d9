mod common;

use common::{iv, naive_factorizations, naive_lengths, u64_atoms};
use elastica::factor::{generalized_length_set, generalized_length_table};
use elastica::{atoms_of, factorizations, is_member, length_set, Rat};
use proptest::prelude::*;

fn atoms_strategy(d: usize, max: u64) -> impl Strategy<Value = Vec<Vec<u64>>> {
    prop::collection::vec(prop::collection::vec(0..=max, d), 1..=5)
        .prop_filter("nonzero generators", |g| {
            g.iter().all(|v| v.iter().any(|&c| c > 0))
        })
}

fn check_against_oracle(gens: &[Vec<u64>], x: &[u64]) -> Result<(), TestCaseError> {
    let list = atoms_of(&gens.iter().map(|g| iv(g)).collect::<Vec<_>>()).unwrap();
    let atoms = u64_atoms(&list);
    let mut want = naive_factorizations(&atoms, x);
    let got: Vec<Vec<u64>> = factorizations(&list, &iv(x))
        .unwrap()
        .into_iter()
        .map(|z| z.exponents)
        .collect();
    // emitted in descending lexicographic order
    prop_assert!(got.windows(2).all(|w| w[0] > w[1]));
    want.sort_unstable_by(|a, b| b.cmp(a));
    prop_assert_eq!(&got, &want);
    let lengths = length_set(&list, &iv(x)).unwrap();
    let naive = naive_lengths(&atoms, x);
    prop_assert_eq!(lengths.values(), naive.as_slice());
    prop_assert_eq!(is_member(&list, &iv(x)).unwrap(), !want.is_empty());
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn planar_factorizations_match_oracle(gens in atoms_strategy(2, 7), x in prop::collection::vec(0u64..=24, 2)) {
        check_against_oracle(&gens, &x)?;
    }

    #[test]
    fn numerical_factorizations_match_oracle(gens in atoms_strategy(1, 12), x in 0u64..=60) {
        check_against_oracle(&gens, &[x])?;
    }

    #[test]
    fn spatial_factorizations_match_oracle(gens in atoms_strategy(3, 4), x in prop::collection::vec(0u64..=10, 3)) {
        check_against_oracle(&gens, &x)?;
    }

    // elements supported on two coordinates take the planar path
    #[test]
    fn two_support_factorizations_match_oracle(
        gens in atoms_strategy(3, 4),
        a in 0u64..=12,
        b in 0u64..=12,
        zero in 0usize..3,
    ) {
        let mut x = vec![a, b];
        x.insert(zero, 0);
        check_against_oracle(&gens, &x)?;
    }

    #[test]
    fn every_factorization_evaluates_to_x(gens in atoms_strategy(2, 6), x in prop::collection::vec(0u64..=30, 2)) {
        let list = atoms_of(&gens.iter().map(|g| iv(g)).collect::<Vec<_>>()).unwrap();
        for z in factorizations(&list, &iv(&x)).unwrap() {
            prop_assert_eq!(z.evaluate(list.atoms()).unwrap(), iv(&x));
        }
    }

    #[test]
    fn generalized_lengths_specialize(gens in prop::collection::btree_set(2u64..=15, 1..=4), x in 1u64..=80) {
        let gens: Vec<u64> = gens.into_iter().collect();
        let list = atoms_of(&gens.iter().map(|&g| iv(&[g])).collect::<Vec<_>>()).unwrap();
        let atoms: Vec<u64> = u64_atoms(&list).into_iter().map(|a| a[0]).collect();
        if atoms == gens {
            let lg = generalized_length_set(&gens, x).unwrap();
            let l = length_set(&list, &iv(&[x])).unwrap();
            prop_assert_eq!(lg.values.values(), l.values());
        }
    }

    #[test]
    fn generalized_elasticity_bound(gens in prop::collection::btree_set(1u64..=20, 1..=4)) {
        let gens: Vec<u64> = gens.into_iter().collect();
        let (n1, nk) = (gens[0], *gens.last().unwrap());
        let table = generalized_length_table(&gens, 300).unwrap();
        for (x, l) in table.iter().enumerate().skip(1) {
            if let (Some(lo), Some(hi)) = (l.min(), l.max()) {
                prop_assert!(hi * n1 <= x as u64 && lo * nk >= x as u64);
                prop_assert!(Rat::new(hi.into(), lo.into()) <= Rat::new(nk.into(), n1.into()));
            }
        }
    }
}

#[test]
fn zero_has_the_empty_factorization() {
    let list = atoms_of(&[iv(&[1, 2]), iv(&[3, 1])]).unwrap();
    let z = factorizations(&list, &iv(&[0, 0])).unwrap();
    assert_eq!(z.len(), 1);
    assert!(z[0].exponents.iter().all(|&e| e == 0));
}

#[test]
fn listed_examples() {
    let list = atoms_of(&[iv(&[1, 2]), iv(&[2, 1]), iv(&[1, 1])]).unwrap();
    let got: Vec<Vec<u64>> = factorizations(&list, &iv(&[3, 3]))
        .unwrap()
        .into_iter()
        .map(|z| z.exponents)
        .collect();
    assert_eq!(
        got,
        naive_factorizations(&u64_atoms(&list), &[3, 3])
            .into_iter()
            .rev()
            .collect::<Vec<_>>()
    );
    let list = atoms_of(&[iv(&[2]), iv(&[3])]).unwrap();
    let got: Vec<Vec<u64>> = factorizations(&list, &iv(&[12]))
        .unwrap()
        .into_iter()
        .map(|z| z.exponents)
        .collect();
    assert_eq!(got, vec![vec![6, 0], vec![3, 2], vec![0, 4]]);
}
