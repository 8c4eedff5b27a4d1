//! Exact minimax solving of finite zero-sum matrix games over rationals.
//!
//! The game value of a rational payoff matrix is rational; this module
//! computes it exactly with a tableau simplex using Bland's rule, via the
//! standard normalization trick on a positively shifted matrix. The row
//! player maximizes, the column player minimizes.

// Tableau code reads better with explicit indices.
#![allow(clippy::needless_range_loop)]

use num_traits::{One, Signed, Zero};

use crate::error::Error;
use crate::num::Q;

/// Optimal mixed strategies and the exact game value.
#[derive(Debug, Clone)]
pub struct MatrixGameSolution {
    pub row_strategy: Vec<Q>,
    pub col_strategy: Vec<Q>,
    pub value: Q,
}

/// Solves `max_x min_y x^T B y` over mixed strategies. `payoff[i][j]` is
/// the row player's payoff for pure pair `(i, j)`.
pub fn solve_matrix_game(payoff: &[Vec<Q>]) -> Result<MatrixGameSolution, Error> {
    let rows = payoff.len();
    if rows == 0 {
        return Err(Error::Shape("empty payoff matrix".into()));
    }
    let cols = payoff[0].len();
    if cols == 0 || payoff.iter().any(|r| r.len() != cols) {
        return Err(Error::Shape("ragged payoff matrix".into()));
    }

    // Shift so every entry is at least 1; the game value shifts with it.
    let min_entry = payoff
        .iter()
        .flat_map(|r| r.iter())
        .min()
        .expect("nonempty matrix")
        .clone();
    let shift = Q::one() - &min_entry;
    let b: Vec<Vec<Q>> = payoff
        .iter()
        .map(|r| r.iter().map(|v| v + &shift).collect())
        .collect();

    // Column player's normalized program: max sum(z) s.t. B z <= 1, z >= 0.
    // Optimal z recovers y = z * v'; the duals recover x = w * v', where
    // v' = 1 / sum(z) is the shifted game value.
    let (z, w) = simplex_max_sum(&b)?;
    let total: Q = z.iter().fold(Q::zero(), |acc, v| acc + v);
    if total.is_zero() {
        return Err(Error::Contract("degenerate matrix game".into()));
    }
    let v_shifted = Q::one() / &total;
    let col_strategy: Vec<Q> = z.iter().map(|v| v * &v_shifted).collect();
    let row_strategy: Vec<Q> = w.iter().map(|v| v * &v_shifted).collect();
    let value = &v_shifted - &shift;

    // Exact optimality certificate for both strategies.
    let row_sum: Q = row_strategy.iter().fold(Q::zero(), |acc, v| acc + v);
    let col_sum: Q = col_strategy.iter().fold(Q::zero(), |acc, v| acc + v);
    if !row_sum.is_one() || !col_sum.is_one() {
        return Err(Error::Contract(
            "matrix game strategies not normalized".into(),
        ));
    }
    for j in 0..cols {
        let mut acc = Q::zero();
        for i in 0..rows {
            acc += &row_strategy[i] * &payoff[i][j];
        }
        if acc < value {
            return Err(Error::Contract("row strategy fails its guarantee".into()));
        }
    }
    for i in 0..rows {
        let mut acc = Q::zero();
        for j in 0..cols {
            acc += &col_strategy[j] * &payoff[i][j];
        }
        if acc > value {
            return Err(Error::Contract(
                "column strategy fails its guarantee".into(),
            ));
        }
    }
    Ok(MatrixGameSolution {
        row_strategy,
        col_strategy,
        value,
    })
}

/// Maximizes `sum(z)` subject to `B z <= 1`, `z >= 0` for a strictly
/// positive `B`; returns the optimal `z` and the dual values of the row
/// constraints.
fn simplex_max_sum(b: &[Vec<Q>]) -> Result<(Vec<Q>, Vec<Q>), Error> {
    let m = b.len();
    let n = b[0].len();
    let width = n + m + 1; // structural vars, slacks, rhs
    let mut tableau: Vec<Vec<Q>> = Vec::with_capacity(m + 1);
    for (i, row) in b.iter().enumerate() {
        let mut t = vec![Q::zero(); width];
        for (j, v) in row.iter().enumerate() {
            t[j] = v.clone();
        }
        t[n + i] = Q::one();
        t[width - 1] = Q::one();
        tableau.push(t);
    }
    // Objective row holds negated reduced costs: maximize sum of z.
    let mut obj = vec![Q::zero(); width];
    for j in 0..n {
        obj[j] = -Q::one();
    }
    tableau.push(obj);

    let mut basis: Vec<usize> = (n..n + m).collect();
    loop {
        // Bland's rule: the lowest-index improving column.
        let entering = (0..n + m).find(|&j| tableau[m][j].is_negative());
        let Some(e) = entering else { break };
        let mut leaving: Option<usize> = None;
        let mut best_ratio: Option<Q> = None;
        for i in 0..m {
            if tableau[i][e] > Q::zero() {
                let ratio = &tableau[i][width - 1] / &tableau[i][e];
                let better = match &best_ratio {
                    None => true,
                    Some(r) if &ratio < r => true,
                    Some(r) if &ratio == r => basis[i] < basis[leaving.expect("set with ratio")],
                    _ => false,
                };
                if better {
                    best_ratio = Some(ratio);
                    leaving = Some(i);
                }
            }
        }
        let Some(l) = leaving else {
            return Err(Error::Contract("unbounded matrix game program".into()));
        };
        let pivot = tableau[l][e].clone();
        for v in tableau[l].iter_mut() {
            *v /= &pivot;
        }
        for i in 0..=m {
            if i != l && !tableau[i][e].is_zero() {
                let factor = tableau[i][e].clone();
                for j in 0..width {
                    let delta = &factor * &tableau[l][j];
                    tableau[i][j] -= delta;
                }
            }
        }
        basis[l] = e;
    }

    let mut z = vec![Q::zero(); n];
    for (i, &var) in basis.iter().enumerate() {
        if var < n {
            z[var] = tableau[i][width - 1].clone();
        }
    }
    // Duals are the final reduced costs of the slack columns.
    let w: Vec<Q> = (0..m).map(|i| tableau[m][n + i].clone()).collect();
    Ok((z, w))
}
