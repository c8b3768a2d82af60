//! Dense two-phase tableau simplex over any [`Scalar`].
//!
//! Minimizes `c·x` subject to linear rows and `x >= 0`. Entering columns are
//! chosen by Dantzig's rule, switching to Bland's rule once a run of
//! degenerate pivots suggests cycling. With an exact scalar the result is the
//! exact optimum of the LP.

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Eq,
    Ge,
    Le,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearRow<T> {
    pub coeffs: Vec<(usize, T)>,
    pub sense: Sense,
    pub rhs: T,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimplexError {
    #[error("LP is infeasible")]
    Infeasible,
    #[error("LP is unbounded")]
    Unbounded,
    #[error("pivot limit of {0} exceeded")]
    PivotLimit(usize),
}

const PIVOT_LIMIT: usize = 200_000;
const DEGENERATE_RUN_BEFORE_BLAND: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColumnKind {
    Structural,
    Slack,
    Artificial,
}

struct Tableau<T> {
    /// `rows[r]` has one entry per column followed by the right-hand side.
    rows: Vec<Vec<T>>,
    /// Reduced costs followed by the negated objective value.
    objective: Vec<T>,
    basis: Vec<usize>,
    kinds: Vec<ColumnKind>,
    pivot_tol: T,
    drop_tol: T,
    pivots: usize,
}

impl<T: Scalar> Tableau<T> {
    fn width(&self) -> usize {
        self.kinds.len()
    }

    fn rhs(&self, r: usize) -> &T {
        &self.rows[r][self.width()]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let width = self.width();
        let p = self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            if !v.is_zero() {
                *v = v.clone() / p.clone();
            }
        }
        self.rows[r][c] = T::one();
        let support: Vec<usize> = (0..=width)
            .filter(|&j| !self.rows[r][j].is_zero())
            .collect();
        let pivot_row = self.rows[r].clone();

        let eliminate = |row: &mut Vec<T>, drop_tol: &T| {
            let f = row[c].clone();
            if f.is_zero() {
                return;
            }
            for &j in &support {
                let v = row[j].clone() - f.clone() * pivot_row[j].clone();
                row[j] = if !T::EXACT && v.abs() <= *drop_tol {
                    T::zero()
                } else {
                    v
                };
            }
            row[c] = T::zero();
        };
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                eliminate(row, &self.drop_tol);
            }
        }
        eliminate(&mut self.objective, &self.drop_tol);
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Sets the objective row to reduced costs of `costs` under the current basis.
    fn load_objective(&mut self, costs: &[T]) {
        let width = self.width();
        let mut obj: Vec<T> = costs.to_vec();
        obj.push(T::zero());
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = costs[b].clone();
            if cb.is_zero() {
                continue;
            }
            for j in 0..=width {
                if !self.rows[r][j].is_zero() {
                    obj[j] = obj[j].clone() - cb.clone() * self.rows[r][j].clone();
                }
            }
        }
        self.objective = obj;
    }

    fn entering(&self, allowed: &dyn Fn(usize) -> bool, bland: bool) -> Option<usize> {
        let neg_tol = -self.pivot_tol.clone();
        let mut best: Option<usize> = None;
        for j in 0..self.width() {
            if !allowed(j) || self.objective[j] >= neg_tol {
                continue;
            }
            if bland {
                return Some(j);
            }
            match best {
                Some(b) if self.objective[j] >= self.objective[b] => {}
                _ => best = Some(j),
            }
        }
        best
    }

    fn leaving(&self, c: usize) -> Option<usize> {
        let mut best: Option<(usize, T)> = None;
        for r in 0..self.rows.len() {
            let a = &self.rows[r][c];
            if *a <= self.pivot_tol {
                continue;
            }
            let ratio = self.rhs(r).clone() / a.clone();
            best = match best {
                None => Some((r, ratio)),
                Some((br, bratio)) => {
                    let diff = ratio.clone() - bratio.clone();
                    let tie = diff.abs() <= self.pivot_tol;
                    if (tie && self.basis[r] < self.basis[br]) || (!tie && diff.is_negative()) {
                        Some((r, ratio))
                    } else {
                        Some((br, bratio))
                    }
                }
            };
        }
        best.map(|(r, _)| r)
    }

    fn optimize(&mut self, allowed: &dyn Fn(usize) -> bool) -> Result<(), SimplexError> {
        let mut degenerate_run = 0;
        loop {
            if self.pivots > PIVOT_LIMIT {
                return Err(SimplexError::PivotLimit(PIVOT_LIMIT));
            }
            let bland = degenerate_run >= DEGENERATE_RUN_BEFORE_BLAND;
            let Some(c) = self.entering(allowed, bland) else {
                return Ok(());
            };
            let Some(r) = self.leaving(c) else {
                return Err(SimplexError::Unbounded);
            };
            if self.rhs(r).abs() <= self.pivot_tol {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(r, c);
        }
    }
}

/// Minimizes `objective · x` over `x >= 0` and the given rows.
pub fn minimize<T: Scalar>(
    num_cols: usize,
    objective: &[T],
    rows: &[LinearRow<T>],
) -> Result<Vec<T>, SimplexError> {
    assert_eq!(objective.len(), num_cols);

    // Orient every row to a nonnegative right-hand side; `>= 0` rows become
    // `<= 0` so their slack can start in the basis.
    let mut oriented: Vec<(Vec<(usize, T)>, Sense, T)> = Vec::with_capacity(rows.len());
    for row in rows {
        let flip = row.rhs.is_negative() || (row.rhs.is_zero() && row.sense == Sense::Ge);
        if flip {
            let sense = match row.sense {
                Sense::Eq => Sense::Eq,
                Sense::Ge => Sense::Le,
                Sense::Le => Sense::Ge,
            };
            let coeffs = row.coeffs.iter().map(|(j, a)| (*j, -a.clone())).collect();
            oriented.push((coeffs, sense, -row.rhs.clone()));
        } else {
            oriented.push((row.coeffs.clone(), row.sense, row.rhs.clone()));
        }
    }

    let mut kinds = vec![ColumnKind::Structural; num_cols];
    let mut basis = Vec::with_capacity(oriented.len());
    let mut extra: Vec<Vec<(usize, T)>> = Vec::with_capacity(oriented.len());
    for (_, sense, _) in &oriented {
        let mut cols = Vec::new();
        match sense {
            Sense::Le => {
                cols.push((kinds.len(), T::one()));
                basis.push(kinds.len());
                kinds.push(ColumnKind::Slack);
            }
            Sense::Ge => {
                cols.push((kinds.len(), -T::one()));
                kinds.push(ColumnKind::Slack);
                cols.push((kinds.len(), T::one()));
                basis.push(kinds.len());
                kinds.push(ColumnKind::Artificial);
            }
            Sense::Eq => {
                cols.push((kinds.len(), T::one()));
                basis.push(kinds.len());
                kinds.push(ColumnKind::Artificial);
            }
        }
        extra.push(cols);
    }

    let width = kinds.len();
    let mut table = Vec::with_capacity(oriented.len());
    for ((coeffs, _, rhs), cols) in oriented.iter().zip(&extra) {
        let mut row = vec![T::zero(); width + 1];
        for (j, a) in coeffs.iter().chain(cols.iter()) {
            row[*j] = row[*j].clone() + a.clone();
        }
        row[width] = rhs.clone();
        table.push(row);
    }

    let pivot_tol = T::pivot_tolerance();
    let drop_tol = pivot_tol.clone() / T::from_count(1000);
    let mut tab = Tableau {
        rows: table,
        objective: Vec::new(),
        basis,
        kinds,
        pivot_tol,
        drop_tol,
        pivots: 0,
    };

    // Phase 1: minimize the sum of artificials.
    if tab.kinds.contains(&ColumnKind::Artificial) {
        let phase1: Vec<T> = tab
            .kinds
            .iter()
            .map(|k| {
                if *k == ColumnKind::Artificial {
                    T::one()
                } else {
                    T::zero()
                }
            })
            .collect();
        tab.load_objective(&phase1);
        tab.optimize(&|_| true)?;
        let infeasibility = -tab.objective[width].clone();
        if infeasibility > T::lp_tolerance() {
            return Err(SimplexError::Infeasible);
        }
        // Drive artificials out of the basis; rows where that is impossible
        // are redundant and keep a zero artificial forever.
        for r in 0..tab.rows.len() {
            if tab.kinds[tab.basis[r]] != ColumnKind::Artificial {
                continue;
            }
            let candidate = (0..width)
                .filter(|&j| tab.kinds[j] != ColumnKind::Artificial)
                .max_by(|&a, &b| {
                    tab.rows[r][a]
                        .abs()
                        .partial_cmp(&tab.rows[r][b].abs())
                        .expect("comparable")
                        .then(b.cmp(&a))
                });
            if let Some(j) = candidate {
                if tab.rows[r][j].abs() > tab.pivot_tol {
                    tab.pivot(r, j);
                }
            }
        }
    }

    // Phase 2.
    let mut costs = objective.to_vec();
    costs.resize(width, T::zero());
    tab.load_objective(&costs);
    let kinds = tab.kinds.clone();
    tab.optimize(&|j| kinds[j] != ColumnKind::Artificial)?;

    let mut x = vec![T::zero(); num_cols];
    for (r, &b) in tab.basis.iter().enumerate() {
        if b < num_cols {
            let v = tab.rhs(r).clone();
            x[b] = if !T::EXACT && v.is_negative() { T::zero() } else { v };
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn row(coeffs: &[(usize, f64)], sense: Sense, rhs: f64) -> LinearRow<f64> {
        LinearRow {
            coeffs: coeffs.to_vec(),
            sense,
            rhs,
        }
    }

    #[test]
    fn textbook_minimum() {
        // min -x - y  s.t. x + 2y <= 4, 3x + y <= 6  -> x = 1.6, y = 1.2
        let x = minimize(
            2,
            &[-1.0, -1.0],
            &[
                row(&[(0, 1.0), (1, 2.0)], Sense::Le, 4.0),
                row(&[(0, 3.0), (1, 1.0)], Sense::Le, 6.0),
            ],
        )
        .unwrap();
        assert!((x[0] - 1.6).abs() < 1e-9 && (x[1] - 1.2).abs() < 1e-9);
    }

    #[test]
    fn equality_and_cover_rows() {
        // min x + y + z  s.t. x + y = 1, y + z >= 1, x - z >= 0 -> y = 1
        let x = minimize(
            3,
            &[1.0, 1.0, 1.0],
            &[
                row(&[(0, 1.0), (1, 1.0)], Sense::Eq, 1.0),
                row(&[(1, 1.0), (2, 1.0)], Sense::Ge, 1.0),
                row(&[(0, 1.0), (2, -1.0)], Sense::Ge, 0.0),
            ],
        )
        .unwrap();
        assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!((x[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn redundant_equalities() {
        // Two copies of the same equality plus their sum.
        let x = minimize(
            2,
            &[1.0, 2.0],
            &[
                row(&[(0, 1.0), (1, 1.0)], Sense::Eq, 2.0),
                row(&[(0, 1.0), (1, 1.0)], Sense::Eq, 2.0),
                row(&[(0, 2.0), (1, 2.0)], Sense::Eq, 4.0),
                row(&[], Sense::Eq, 0.0),
            ],
        )
        .unwrap();
        assert!((x[0] - 2.0).abs() < 1e-9 && x[1].abs() < 1e-9);
    }

    #[test]
    fn infeasible_and_unbounded() {
        assert_eq!(
            minimize(1, &[1.0], &[row(&[(0, 1.0)], Sense::Le, -1.0)]),
            Err(SimplexError::Infeasible)
        );
        assert_eq!(
            minimize(1, &[-1.0], &[row(&[(0, 1.0)], Sense::Ge, 1.0)]),
            Err(SimplexError::Unbounded)
        );
        assert_eq!(
            minimize(0, &[], &[row(&[], Sense::Ge, 1.0)]),
            Err(SimplexError::Infeasible)
        );
    }

    #[test]
    fn exact_rational_optimum() {
        let q = |p: i64, d: i64| BigRational::new(p.into(), d.into());
        // min x + y  s.t. 3x + y >= 2, x + 3y >= 2 -> x = y = 1/2
        let rows = vec![
            LinearRow {
                coeffs: vec![(0, q(3, 1)), (1, q(1, 1))],
                sense: Sense::Ge,
                rhs: q(2, 1),
            },
            LinearRow {
                coeffs: vec![(0, q(1, 1)), (1, q(3, 1))],
                sense: Sense::Ge,
                rhs: q(2, 1),
            },
        ];
        let x = minimize(2, &[q(1, 1), q(1, 1)], &rows).unwrap();
        assert_eq!(x, vec![q(1, 2), q(1, 2)]);
    }

    #[test]
    fn degenerate_cycling_example_terminates() {
        // Beale's classic cycling LP (as minimization).
        let x = minimize(
            4,
            &[-0.75, 20.0, -0.5, 6.0],
            &[
                row(&[(0, 0.25), (1, -8.0), (2, -1.0), (3, 9.0)], Sense::Le, 0.0),
                row(&[(0, 0.5), (1, -12.0), (2, -0.5), (3, 3.0)], Sense::Le, 0.0),
                row(&[(2, 1.0)], Sense::Le, 1.0),
            ],
        )
        .unwrap();
        let obj = -0.75 * x[0] + 20.0 * x[1] - 0.5 * x[2] + 6.0 * x[3];
        assert!((obj + 1.25).abs() < 1e-9, "objective {obj}");
    }
}
