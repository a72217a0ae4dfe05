//! Two-phase tableau simplex with Bland's anti-cycling rule.
//!
//! All variables are nonnegative; equality and `<=` inequality rows are
//! both supported. Instantiated with [`crate::value::Rat`] the solver is
//! exact: pivots, the optimum and the dual certificate are all rational.
//! Pivot selection is deterministic (lowest eligible index), so the
//! returned basis — and hence the extracted vertex — is reproducible.

use crate::error::{Error, Result};
use crate::value::Scalar;

/// `maximize c.z  s.t.  A z = b, G z <= h, z >= 0`.
#[derive(Debug, Clone)]
pub struct LinearProgram<T: Scalar> {
    pub num_vars: usize,
    pub objective: Vec<T>,
    /// Equality rows `(a, b)` meaning `a.z = b`.
    pub eq: Vec<(Vec<T>, T)>,
    /// Inequality rows `(g, h)` meaning `g.z <= h`.
    pub le: Vec<(Vec<T>, T)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution<T: Scalar> {
    pub status: LpStatus,
    /// Optimal objective value (zero unless optimal).
    pub value: T,
    /// Primal point over the original variables (empty unless optimal).
    pub point: Vec<T>,
    /// Basic column indices in the augmented (slack-extended) system,
    /// identifying the vertex.
    pub basis: Vec<usize>,
    /// Dual multipliers, one per row (equalities first, then inequalities).
    pub dual: Vec<T>,
}

struct Tableau<T: Scalar> {
    /// rows x (cols + 1); last column is the rhs.
    rows: Vec<Vec<T>>,
    cols: usize,
    basis: Vec<usize>,
}

impl<T: Scalar> Tableau<T> {
    fn pivot(&mut self, row: usize, col: usize) {
        let piv = self.rows[row][col].clone();
        for v in self.rows[row].iter_mut() {
            *v = v.clone() / piv.clone();
        }
        let prow = self.rows[row].clone();
        for (r, cur) in self.rows.iter_mut().enumerate() {
            if r == row || cur[col].is_zero() {
                continue;
            }
            let f = cur[col].clone();
            for (c, v) in cur.iter_mut().enumerate() {
                *v = v.clone() - f.clone() * prow[c].clone();
            }
        }
        self.basis[row] = col;
    }

    /// Maximize `obj` over the current feasible tableau using Bland's rule.
    /// Returns the reduced-cost row at optimality, or None if unbounded.
    fn optimize(&mut self, obj: &[T]) -> Option<Vec<T>> {
        loop {
            // Reduced costs: c_j - c_B . B^-1 A_j, computed from scratch to
            // keep the tableau rows as the only mutable state.
            let mut reduced = vec![T::zero(); self.cols + 1];
            for j in 0..=self.cols {
                let mut v = if j < obj.len() {
                    obj[j].clone()
                } else {
                    T::zero()
                };
                for (r, &bi) in self.basis.iter().enumerate() {
                    let cb = if bi < obj.len() {
                        obj[bi].clone()
                    } else {
                        T::zero()
                    };
                    v = v - cb * self.rows[r][j].clone();
                }
                reduced[j] = v;
            }
            // Bland: lowest-index column with positive reduced cost.
            let enter = (0..self.cols).find(|&j| reduced[j] > T::zero());
            let Some(enter) = enter else {
                return Some(reduced);
            };
            // Ratio test; ties broken by lowest basic variable index.
            let mut leave: Option<(usize, T)> = None;
            for r in 0..self.rows.len() {
                let coef = &self.rows[r][enter];
                if *coef <= T::zero() {
                    continue;
                }
                let ratio = self.rows[r][self.cols].clone() / coef.clone();
                match &leave {
                    None => leave = Some((r, ratio)),
                    Some((lr, lratio)) => {
                        if ratio < *lratio
                            || (ratio == *lratio && self.basis[r] < self.basis[*lr])
                        {
                            leave = Some((r, ratio));
                        }
                    }
                }
            }
            let Some((row, _)) = leave else {
                return None; // unbounded
            };
            self.pivot(row, enter);
        }
    }
}

/// Solve `lp` exactly. Infeasibility and unboundedness are reported in the
/// status, never as silent values.
pub fn solve_lp<T: Scalar>(lp: &LinearProgram<T>) -> Result<LpSolution<T>> {
    let n = lp.num_vars;
    if lp.objective.len() != n
        || lp.eq.iter().any(|(a, _)| a.len() != n)
        || lp.le.iter().any(|(g, _)| g.len() != n)
    {
        return Err(Error::Lp("inconsistent dimensions".into()));
    }
    let m_eq = lp.eq.len();
    let m_le = lp.le.len();
    let m = m_eq + m_le;
    let cols = n + m_le; // slacks for inequality rows
    let total_cols = cols + m; // + artificials

    // Build rows with nonnegative rhs.
    let mut rows: Vec<Vec<T>> = Vec::with_capacity(m);
    for (i, (a, b)) in lp.eq.iter().chain(lp.le.iter()).enumerate() {
        let mut row = vec![T::zero(); total_cols + 1];
        for (j, v) in a.iter().enumerate() {
            row[j] = v.clone();
        }
        if i >= m_eq {
            row[n + (i - m_eq)] = T::one(); // slack
        }
        row[total_cols] = b.clone();
        if row[total_cols] < T::zero() {
            for v in row.iter_mut() {
                *v = -v.clone();
            }
        }
        row[cols + i] = T::one(); // artificial
        rows.push(row);
    }

    let mut tab = Tableau {
        rows,
        cols: total_cols,
        basis: (cols..cols + m).collect(),
    };

    // Phase 1: maximize -(sum of artificials).
    let mut phase1 = vec![T::zero(); total_cols];
    for j in cols..cols + m {
        phase1[j] = -T::one();
    }
    tab.optimize(&phase1)
        .ok_or_else(|| Error::Lp("phase-1 unbounded (internal error)".into()))?;
    let infeas: T = tab
        .basis
        .iter()
        .enumerate()
        .filter(|(_, &bi)| bi >= cols)
        .map(|(r, _)| tab.rows[r][total_cols].clone())
        .sum();
    if !infeas.is_zero() {
        return Ok(LpSolution {
            status: LpStatus::Infeasible,
            value: T::zero(),
            point: vec![],
            basis: vec![],
            dual: vec![],
        });
    }
    // Drive remaining artificials out of the basis (degenerate rows).
    for r in 0..m {
        if tab.basis[r] >= cols {
            if let Some(c) = (0..cols).find(|&c| !tab.rows[r][c].is_zero()) {
                tab.pivot(r, c);
            }
            // A fully zero row is a redundant constraint; its artificial
            // stays basic at zero and never re-enters (phase-2 ratio ties
            // prefer lower indices, and the column is excluded below).
        }
    }

    // Phase 2 over the real columns only.
    let mut tab2 = Tableau {
        rows: tab
            .rows
            .iter()
            .map(|row| {
                let mut r: Vec<T> = row[..cols].to_vec();
                r.push(row[total_cols].clone());
                r
            })
            .collect(),
        cols,
        basis: tab.basis.clone(),
    };
    // Redundant rows whose artificial is still basic are dropped.
    let keep: Vec<usize> = (0..m).filter(|&r| tab2.basis[r] < cols).collect();
    if keep.len() < m {
        tab2.rows = keep.iter().map(|&r| tab2.rows[r].clone()).collect();
        tab2.basis = keep.iter().map(|&r| tab2.basis[r]).collect();
    }
    let mut obj = lp.objective.clone();
    obj.resize(cols, T::zero());
    let Some(reduced) = tab2.optimize(&obj) else {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            value: T::zero(),
            point: vec![],
            basis: vec![],
            dual: vec![],
        });
    };

    let mut point = vec![T::zero(); n];
    let mut value = T::zero();
    for (r, &bi) in tab2.basis.iter().enumerate() {
        let v = tab2.rows[r][cols].clone();
        if bi < n {
            value = value + obj[bi].clone() * v.clone();
            point[bi] = v;
        }
    }

    let _ = reduced;
    let _ = keep;
    // Dual multipliers y solve B^T y = c_B; with redundant rows the system
    // is underdetermined and free multipliers are set to zero.
    let dual = recover_dual(lp, &tab2, &obj)?;

    Ok(LpSolution {
        status: LpStatus::Optimal,
        value,
        point,
        basis: tab2.basis.clone(),
        dual,
    })
}

fn recover_dual<T: Scalar>(
    lp: &LinearProgram<T>,
    tab2: &Tableau<T>,
    obj: &[T],
) -> Result<Vec<T>> {
    let m_eq = lp.eq.len();
    let m = m_eq + lp.le.len();
    let n = lp.num_vars;
    // Original constraint rows (eq then le, slack columns appended),
    // sign-normalized the same way solve_lp did.
    let mut orig: Vec<(Vec<T>, bool)> = Vec::with_capacity(m);
    for (i, (a, b)) in lp.eq.iter().chain(lp.le.iter()).enumerate() {
        let mut row = vec![T::zero(); n + lp.le.len()];
        for (j, v) in a.iter().enumerate() {
            row[j] = v.clone();
        }
        if i >= m_eq {
            row[n + (i - m_eq)] = T::one();
        }
        let flip = *b < T::zero();
        if flip {
            for v in row.iter_mut() {
                *v = -v.clone();
            }
        }
        orig.push((row, flip));
    }
    // One equation per basic column bj: sum_i y_i orig[i][bj] = c_bj. With
    // redundant constraints the system is underdetermined; reduce to row
    // echelon form and set non-pivot multipliers to zero.
    let k = tab2.basis.len();
    let mut aug: Vec<Vec<T>> = vec![vec![T::zero(); m + 1]; k];
    for (eqn, &bj) in tab2.basis.iter().enumerate() {
        for (i, o) in orig.iter().enumerate() {
            aug[eqn][i] = o.0[bj].clone();
        }
        aug[eqn][m] = obj[bj].clone();
    }
    let mut row = 0usize;
    for col in 0..m {
        let Some(piv) = (row..k).find(|&r| !aug[r][col].is_zero()) else {
            continue;
        };
        aug.swap(row, piv);
        let p = aug[row][col].clone();
        for v in aug[row].iter_mut() {
            *v = v.clone() / p.clone();
        }
        let prow = aug[row].clone();
        for (r, other) in aug.iter_mut().enumerate() {
            if r == row || other[col].is_zero() {
                continue;
            }
            let f = other[col].clone();
            for (c, v) in other.iter_mut().enumerate() {
                *v = v.clone() - f.clone() * prow[c].clone();
            }
        }
        row += 1;
        if row == k {
            break;
        }
    }
    // Each fully reduced row has its pivot column as the leading nonzero;
    // free multipliers stay zero.
    let mut y = vec![T::zero(); m];
    for r in aug.iter() {
        if let Some(col) = (0..m).find(|&c| !r[c].is_zero()) {
            y[col] = r[m].clone();
        } else if !r[m].is_zero() {
            return Err(Error::Lp("inconsistent dual system".into()));
        }
    }
    let mut dual = vec![T::zero(); m];
    for (i, o) in orig.iter().enumerate() {
        dual[i] = if o.1 { -y[i].clone() } else { y[i].clone() };
    }
    Ok(dual)
}
