//! Exact rational simplex for `max c.x  s.t.  A x = b, x >= 0`.
//!
//! Two phases over a dense tableau. Pivoting follows Bland's rule: the
//! entering column is the lowest index with positive reduced cost and
//! ratio ties leave by the lowest basic variable index, so the method
//! cannot cycle and every run is deterministic.

use num_traits::{One, Signed, Zero};

use crate::geometry::Rat;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LpOutcome {
    Optimal { x: Vec<Rat>, value: Rat },
    Infeasible,
    Unbounded,
}

struct Tableau {
    rows: Vec<Vec<Rat>>,
    rhs: Vec<Rat>,
    basis: Vec<usize>,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        if !p.is_one() {
            for v in self.rows[r].iter_mut() {
                *v /= &p;
            }
            self.rhs[r] /= &p;
        }
        let prow = self.rows[r].clone();
        let prhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r || self.rows[i][c].is_zero() {
                continue;
            }
            let f = self.rows[i][c].clone();
            for (v, pv) in self.rows[i].iter_mut().zip(&prow) {
                if !pv.is_zero() {
                    *v -= &f * pv;
                }
            }
            self.rhs[i] -= &f * &prhs;
        }
        self.basis[r] = c;
    }

    /// Maximizes `cost . x` over columns for which `allowed` holds.
    /// Returns `false` when unbounded.
    fn optimize(&mut self, cost: &[Rat], allowed: &dyn Fn(usize) -> bool) -> bool {
        let ncols = cost.len();
        loop {
            let mut entering = None;
            for j in (0..ncols).filter(|&j| allowed(j)) {
                if self.basis.contains(&j) {
                    continue;
                }
                let mut d = cost[j].clone();
                for (i, &b) in self.basis.iter().enumerate() {
                    if !cost[b].is_zero() && !self.rows[i][j].is_zero() {
                        d -= &cost[b] * &self.rows[i][j];
                    }
                }
                if d.is_positive() {
                    entering = Some(j);
                    break;
                }
            }
            let Some(j) = entering else {
                return true;
            };
            let mut leave: Option<(usize, Rat)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][j];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.rhs[i] / a;
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => {
                        ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li])
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            let Some((r, _)) = leave else {
                return false;
            };
            self.pivot(r, j);
        }
    }
}

/// Solves `max c.x  s.t.  A x = b, x >= 0` exactly.
pub fn maximize(c: &[Rat], a: &[Vec<Rat>], b: &[Rat]) -> LpOutcome {
    let m = a.len();
    let n = c.len();
    assert_eq!(b.len(), m, "right-hand side length");
    assert!(a.iter().all(|r| r.len() == n), "constraint width");

    // phase 1: artificial columns n..n+m, rhs made nonnegative
    let mut rows = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    for (i, (row, bi)) in a.iter().zip(b).enumerate() {
        let flip = bi.is_negative();
        let mut r: Vec<Rat> = row
            .iter()
            .map(|v| if flip { -v.clone() } else { v.clone() })
            .collect();
        r.extend((0..m).map(|k| if k == i { Rat::one() } else { Rat::zero() }));
        rows.push(r);
        rhs.push(if flip { -bi.clone() } else { bi.clone() });
    }
    let mut t = Tableau {
        rows,
        rhs,
        basis: (n..n + m).collect(),
    };
    let mut cost1 = vec![Rat::zero(); n + m];
    for c in cost1.iter_mut().skip(n) {
        *c = -Rat::one();
    }
    t.optimize(&cost1, &|_| true);
    let infeas: Rat = t
        .basis
        .iter()
        .zip(&t.rhs)
        .filter(|(&b, _)| b >= n)
        .map(|(_, v)| v.clone())
        .fold(Rat::zero(), |s, v| s + v);
    if infeas.is_positive() {
        return LpOutcome::Infeasible;
    }
    // drive zero-level artificials out of the basis; drop redundant rows
    let mut i = 0;
    while i < t.rows.len() {
        if t.basis[i] >= n {
            match (0..n).find(|&j| !t.rows[i][j].is_zero()) {
                Some(j) => t.pivot(i, j),
                None => {
                    t.rows.remove(i);
                    t.rhs.remove(i);
                    t.basis.remove(i);
                    continue;
                }
            }
        }
        i += 1;
    }
    for r in t.rows.iter_mut() {
        r.truncate(n);
    }

    // phase 2
    if !t.optimize(c, &|_| true) {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![Rat::zero(); n];
    for (&bcol, v) in t.basis.iter().zip(&t.rhs) {
        x[bcol] = v.clone();
    }
    let value = c
        .iter()
        .zip(&x)
        .fold(Rat::zero(), |s, (ci, xi)| s + ci * xi);
    LpOutcome::Optimal { x, value }
}

/// A point of `{x >= 0 : A x = b}`, if any.
pub fn feasible_point(a: &[Vec<Rat>], b: &[Rat]) -> Option<Vec<Rat>> {
    let n = a.first().map(Vec::len).unwrap_or(0);
    match maximize(&vec![Rat::zero(); n], a, b) {
        LpOutcome::Optimal { x, .. } => Some(x),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn r(p: i64, q: i64) -> Rat {
        Rat::new(BigInt::from(p), BigInt::from(q))
    }

    fn ri(p: i64) -> Rat {
        r(p, 1)
    }

    #[test]
    fn small_program() {
        // max x + y  s.t.  x + 2y + s = 4, 3x + y + t = 6
        let c = vec![ri(1), ri(1), ri(0), ri(0)];
        let a = vec![
            vec![ri(1), ri(2), ri(1), ri(0)],
            vec![ri(3), ri(1), ri(0), ri(1)],
        ];
        let b = vec![ri(4), ri(6)];
        match maximize(&c, &a, &b) {
            LpOutcome::Optimal { x, value } => {
                assert_eq!(value, r(14, 5));
                assert_eq!(x[0], r(8, 5));
                assert_eq!(x[1], r(6, 5));
            }
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn infeasible_and_unbounded() {
        let a = vec![vec![ri(1), ri(1)]];
        assert_eq!(
            maximize(&[ri(0), ri(0)], &a, &[ri(-1)]),
            LpOutcome::Infeasible
        );
        let a = vec![vec![ri(1), ri(-1)]];
        assert_eq!(
            maximize(&[ri(1), ri(0)], &a, &[ri(1)]),
            LpOutcome::Unbounded
        );
    }

    #[test]
    fn redundant_rows_are_dropped() {
        let a = vec![vec![ri(1), ri(1)], vec![ri(2), ri(2)]];
        match maximize(&[ri(1), ri(2)], &a, &[ri(3), ri(6)]) {
            LpOutcome::Optimal { value, .. } => assert_eq!(value, ri(6)),
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn degenerate_program_terminates() {
        // a classic cycling example for the largest-coefficient rule
        let c = vec![r(3, 4), ri(-150), r(1, 50), ri(-6), ri(0), ri(0), ri(0)];
        let a = vec![
            vec![r(1, 4), ri(-60), r(-1, 25), ri(9), ri(1), ri(0), ri(0)],
            vec![r(1, 2), ri(-90), r(-1, 50), ri(3), ri(0), ri(1), ri(0)],
            vec![ri(0), ri(0), ri(1), ri(0), ri(0), ri(0), ri(1)],
        ];
        let b = vec![ri(0), ri(0), ri(1)];
        match maximize(&c, &a, &b) {
            LpOutcome::Optimal { value, .. } => assert_eq!(value, r(1, 20)),
            o => panic!("{o:?}"),
        }
    }
}
