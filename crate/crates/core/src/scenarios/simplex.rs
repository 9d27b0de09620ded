//! Dense two-phase primal simplex over exact rationals.
//!
//! Minimizes `c x` subject to rows `a x (<=|>=|=) b` and `x >= 0`. Pivoting
//! follows Bland's rule (lowest-index entering column, lowest-index basic
//! variable among tied ratios), so it terminates on degenerate problems. The
//! optimum returned is a basic solution, which is what the integrality tests
//! need. Meant for problems with tens of variables.

use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearProgram {
    pub objective: Vec<Rational>,
    pub rows: Vec<(Vec<Rational>, Sense, Rational)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpOutcome {
    Optimal { x: Vec<Rational>, value: Rational },
    Infeasible,
    Unbounded,
}

struct Tableau {
    rows: Vec<Vec<Rational>>,
    basis: Vec<usize>,
}

impl Tableau {
    fn rhs(&self) -> usize {
        self.rows[0].len() - 1
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        for v in &mut self.rows[r] {
            *v = *v / p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            let f = row[c];
            if i != r && !f.is_zero() {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * *pv;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Runs simplex with columns `0..allowed` eligible to enter. Returns
    /// false when unbounded.
    fn optimize(&mut self, cost: &[Rational], allowed: usize) -> bool {
        if self.rows.is_empty() {
            return cost[..allowed].iter().all(|c| !c.is_negative());
        }
        let rhs = self.rhs();
        loop {
            let enter = (0..allowed).find(|&j| {
                let z: Rational = self.rows.iter().zip(&self.basis).map(|(row, &b)| cost[b] * row[j]).sum();
                (cost[j] - z).is_negative()
            });
            let Some(j) = enter else { return true };
            let mut leave: Option<(Rational, usize, usize)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[j].is_positive() {
                    let key = (row[rhs] / row[j], self.basis[i], i);
                    if leave.is_none_or(|l| (key.0, key.1) < (l.0, l.1)) {
                        leave = Some(key);
                    }
                }
            }
            let Some((_, _, r)) = leave else { return false };
            self.pivot(r, j);
        }
    }
}

pub fn solve(lp: &LinearProgram) -> LpOutcome {
    let n = lp.objective.len();
    let m = lp.rows.len();
    // Normalize to b >= 0.
    let rows: Vec<(Vec<Rational>, Sense, Rational)> = lp
        .rows
        .iter()
        .map(|(a, sense, b)| {
            if b.is_negative() {
                let flipped = match sense {
                    Sense::Le => Sense::Ge,
                    Sense::Ge => Sense::Le,
                    Sense::Eq => Sense::Eq,
                };
                (a.iter().map(|v| -*v).collect(), flipped, -*b)
            } else {
                (a.clone(), *sense, *b)
            }
        })
        .collect();
    let slacks = rows.iter().filter(|r| r.1 != Sense::Eq).count();
    let artificials = rows.iter().filter(|r| r.1 != Sense::Le).count();
    let width = n + slacks + artificials;
    let mut tab = Tableau {
        rows: Vec::with_capacity(m),
        basis: Vec::with_capacity(m),
    };
    let (mut next_slack, mut next_art) = (n, n + slacks);
    for (a, sense, b) in &rows {
        let mut row = vec![Rational::ZERO; width + 1];
        row[..n].copy_from_slice(a);
        row[width] = *b;
        match sense {
            Sense::Le => {
                row[next_slack] = Rational::ONE;
                tab.basis.push(next_slack);
                next_slack += 1;
            }
            Sense::Ge => {
                row[next_slack] = -Rational::ONE;
                next_slack += 1;
                row[next_art] = Rational::ONE;
                tab.basis.push(next_art);
                next_art += 1;
            }
            Sense::Eq => {
                row[next_art] = Rational::ONE;
                tab.basis.push(next_art);
                next_art += 1;
            }
        }
        tab.rows.push(row);
    }

    let real = n + slacks;
    if artificials > 0 {
        let mut phase1 = vec![Rational::ZERO; width];
        for c in &mut phase1[real..] {
            *c = Rational::ONE;
        }
        tab.optimize(&phase1, width);
        let infeasibility: Rational = tab
            .rows
            .iter()
            .zip(&tab.basis)
            .filter(|(_, &b)| b >= real)
            .map(|(row, _)| row[width])
            .sum();
        if infeasibility.is_positive() {
            return LpOutcome::Infeasible;
        }
        // Drive zero-valued artificials out of the basis; drop redundant rows.
        let mut i = 0;
        while i < tab.rows.len() {
            if tab.basis[i] >= real {
                match (0..real).find(|&j| !tab.rows[i][j].is_zero()) {
                    Some(j) => tab.pivot(i, j),
                    None => {
                        tab.rows.remove(i);
                        tab.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
    }

    let mut cost = vec![Rational::ZERO; width];
    cost[..n].copy_from_slice(&lp.objective);
    if !tab.optimize(&cost, real) {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![Rational::ZERO; n];
    for (row, &b) in tab.rows.iter().zip(&tab.basis) {
        if b < n {
            x[b] = row[width];
        }
    }
    let value = x.iter().zip(&lp.objective).map(|(a, b)| *a * *b).sum();
    LpOutcome::Optimal { x, value }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(v: i128) -> Rational {
        Rational::from_int(v)
    }

    #[test]
    fn textbook() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36
        let lp = LinearProgram {
            objective: vec![r(-3), r(-5)],
            rows: vec![
                (vec![r(1), r(0)], Sense::Le, r(4)),
                (vec![r(0), r(2)], Sense::Le, r(12)),
                (vec![r(3), r(2)], Sense::Le, r(18)),
            ],
        };
        assert_eq!(
            solve(&lp),
            LpOutcome::Optimal {
                x: vec![r(2), r(6)],
                value: r(-36)
            }
        );
    }

    #[test]
    fn equality_fractional_and_infeasible() {
        let lp = LinearProgram {
            objective: vec![r(1), r(1)],
            rows: vec![(vec![r(2), r(3)], Sense::Eq, r(1)), (vec![r(1), r(0)], Sense::Ge, r(0))],
        };
        match solve(&lp) {
            LpOutcome::Optimal { value, .. } => assert_eq!(value, Rational::new(1, 3)),
            other => panic!("{other:?}"),
        }
        let bad = LinearProgram {
            objective: vec![r(1)],
            rows: vec![(vec![r(1)], Sense::Le, r(1)), (vec![r(1)], Sense::Ge, r(2))],
        };
        assert_eq!(solve(&bad), LpOutcome::Infeasible);
        let unbounded = LinearProgram {
            objective: vec![r(-1)],
            rows: vec![(vec![r(1)], Sense::Ge, r(1))],
        };
        assert_eq!(solve(&unbounded), LpOutcome::Unbounded);
    }
}
