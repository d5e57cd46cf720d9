//! Deliberately naive factorization oracle: plain recursion over the atoms,
//! no pruning beyond staying below the target.

#![allow(dead_code)]

use elastica::{AtomList, IntVec};

pub fn u64_atoms(list: &AtomList) -> Vec<Vec<u64>> {
    list.atoms().iter().map(|a| a.to_u64s().unwrap()).collect()
}

/// All exponent vectors `e` with `sum e_i atoms[i] = x`.
pub fn naive_factorizations(atoms: &[Vec<u64>], x: &[u64]) -> Vec<Vec<u64>> {
    fn go(
        atoms: &[Vec<u64>],
        i: usize,
        rem: Vec<u64>,
        exps: &mut Vec<u64>,
        out: &mut Vec<Vec<u64>>,
    ) {
        if i == atoms.len() {
            if rem.iter().all(|&c| c == 0) {
                out.push(exps.clone());
            }
            return;
        }
        let mut rem = rem;
        let mut c = 0;
        loop {
            exps[i] = c;
            go(atoms, i + 1, rem.clone(), exps, out);
            if rem.iter().zip(&atoms[i]).any(|(r, a)| a > r) {
                break;
            }
            for (r, a) in rem.iter_mut().zip(&atoms[i]) {
                *r -= a;
            }
            c += 1;
        }
        exps[i] = 0;
    }
    let mut out = Vec::new();
    go(atoms, 0, x.to_vec(), &mut vec![0; atoms.len()], &mut out);
    out
}

pub fn naive_lengths(atoms: &[Vec<u64>], x: &[u64]) -> Vec<u64> {
    let mut l: Vec<u64> = naive_factorizations(atoms, x)
        .iter()
        .map(|z| z.iter().sum())
        .collect();
    l.sort_unstable();
    l.dedup();
    l
}

pub fn iv(c: &[u64]) -> IntVec {
    IntVec::from_u64s(c)
}
