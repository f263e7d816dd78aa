//! Dense two-phase primal simplex for `max c^T w  s.t.  A w = b, w >= 0`.
//!
//! Sized for a handful of equality rows and up to a few tens of thousands of
//! columns. Pricing is Dantzig's largest-reduced-cost rule; after a run of
//! degenerate pivots it switches to Bland's smallest-index rule, which cannot
//! cycle. The final basis is re-solved from the original data so the reported
//! weights and duals do not carry accumulated tableau round-off.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-11;
const PRICE_TOL: f64 = 1e-12;
const DEGENERATE_STREAK: usize = 32;

/// Dual feasibility threshold for an optimality certificate.
pub const DUAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    /// Objective coefficients, one per column.
    pub objective: Vec<f64>,
    /// Equality-constraint rows, each with one entry per column.
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub weights: Vec<f64>,
    pub objective: f64,
    /// Dual prices `y` with `B^T y = c_B` for the final basis.
    pub duals: Vec<f64>,
    /// Basic column indices.
    pub basis: Vec<usize>,
    /// `max_j (c_j - y^T A_j)`; at most [`DUAL_TOL`] for an optimal basis.
    pub max_reduced_cost: f64,
    pub iterations: usize,
}

impl LpProblem {
    pub fn new(objective: Vec<f64>, rows: Vec<Vec<f64>>, rhs: Vec<f64>) -> Result<Self> {
        let p = Self { objective, rows, rhs };
        p.validate()?;
        Ok(p)
    }

    pub fn num_columns(&self) -> usize {
        self.objective.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.objective.len();
        if n == 0 {
            return Err(Error::invalid("LP needs at least one column"));
        }
        if self.rows.len() != self.rhs.len() {
            return Err(Error::invalid(format!(
                "LP has {} rows but {} right-hand sides",
                self.rows.len(),
                self.rhs.len()
            )));
        }
        if let Some(i) = self.rows.iter().position(|r| r.len() != n) {
            return Err(Error::invalid(format!("LP row {i} has wrong length")));
        }
        let finite = self.objective.iter().chain(self.rhs.iter()).chain(self.rows.iter().flatten());
        if finite.into_iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("LP entries must be finite"));
        }
        Ok(())
    }
}

struct Tableau {
    /// `m` rows of `width = n_total + 1`, last entry is the right-hand side.
    t: Vec<Vec<f64>>,
    reduced: Vec<f64>,
    basis: Vec<usize>,
    /// Original row index of each tableau row.
    row_ids: Vec<usize>,
    n_original: usize,
    iterations: usize,
    max_iters: usize,
}

enum Step {
    Optimal,
    Pivoted,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        *self.t[i].last().unwrap()
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c];
        for x in self.t[r].iter_mut() {
            *x /= p;
        }
        let pivot_row = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (x, &pr) in row.iter_mut().zip(&pivot_row) {
                    *x -= f * pr;
                }
                row[c] = 0.0;
            }
        }
        let f = self.reduced[c];
        if f != 0.0 {
            for (x, &pr) in self.reduced.iter_mut().zip(&pivot_row[..pivot_row.len() - 1]) {
                *x -= f * pr;
            }
            self.reduced[c] = 0.0;
        }
        self.basis[r] = c;
        self.iterations += 1;
    }

    /// One pricing + ratio-test step over columns `< allowed`.
    fn step(&mut self, allowed: usize, bland: bool) -> Result<(Step, bool)> {
        let entering = if bland {
            (0..allowed).find(|&j| self.reduced[j] > PRICE_TOL)
        } else {
            (0..allowed)
                .filter(|&j| self.reduced[j] > PRICE_TOL)
                .max_by(|&a, &b| self.reduced[a].total_cmp(&self.reduced[b]))
        };
        let Some(c) = entering else {
            return Ok((Step::Optimal, false));
        };
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..self.t.len() {
            let a = self.t[i][c];
            if a > PIVOT_TOL {
                let ratio = self.rhs(i).max(0.0) / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((li, lr)) => {
                        let tie = (ratio - lr).abs() <= 1e-14 * lr.abs().max(1.0);
                        if ratio < lr && !tie || tie && self.basis[i] < self.basis[li] {
                            Some((i, ratio))
                        } else {
                            Some((li, lr))
                        }
                    }
                };
            }
        }
        let Some((r, ratio)) = leave else {
            return Err(Error::Numeric(format!("LP is unbounded along column {c}")));
        };
        if self.iterations >= self.max_iters {
            return Err(Error::Numeric(format!(
                "simplex did not converge within {} pivots (largest reduced cost {:.3e})",
                self.max_iters, self.reduced[c]
            )));
        }
        self.pivot(r, c);
        Ok((Step::Pivoted, ratio <= 1e-14))
    }

    fn run(&mut self, allowed: usize) -> Result<()> {
        let mut streak = 0usize;
        loop {
            match self.step(allowed, streak >= DEGENERATE_STREAK)? {
                (Step::Optimal, _) => return Ok(()),
                (Step::Pivoted, degenerate) => {
                    streak = if degenerate { streak + 1 } else { 0 };
                }
            }
        }
    }
}

/// Solves `max c^T w  s.t.  A w = b, w >= 0` with the default pivot budget.
pub fn solve_lp(p: &LpProblem) -> Result<LpSolution> {
    solve_lp_with_budget(p, 200_000)
}

pub fn solve_lp_with_budget(p: &LpProblem, max_iters: usize) -> Result<LpSolution> {
    p.validate()?;
    let n = p.num_columns();
    let m = p.rows.len();
    if m == 0 {
        // no constraints: the problem is bounded only if c <= 0
        if let Some(j) = p.objective.iter().position(|&c| c > 0.0) {
            return Err(Error::Numeric(format!("LP is unbounded along column {j}")));
        }
        return Ok(LpSolution {
            weights: vec![0.0; n],
            objective: 0.0,
            duals: vec![],
            basis: vec![],
            max_reduced_cost: p.objective.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            iterations: 0,
        });
    }

    // rows flipped so b >= 0, then one artificial per row
    let width = n + m + 1;
    let mut t = Vec::with_capacity(m);
    for (i, (row, &b)) in p.rows.iter().zip(&p.rhs).enumerate() {
        let sign = if b < 0.0 { -1.0 } else { 1.0 };
        let mut r = Vec::with_capacity(width);
        r.extend(row.iter().map(|&a| sign * a));
        r.extend((0..m).map(|j| if j == i { 1.0 } else { 0.0 }));
        r.push(sign * b);
        t.push(r);
    }
    let mut reduced = vec![0.0; n + m];
    for row in &t {
        for (rj, &a) in reduced.iter_mut().zip(&row[..n]) {
            *rj += a;
        }
    }
    let mut tab = Tableau {
        t,
        reduced,
        basis: (n..n + m).collect(),
        row_ids: (0..m).collect(),
        n_original: n,
        iterations: 0,
        max_iters,
    };

    // phase 1: maximize -sum(artificials)
    tab.run(n + m)?;
    let infeasibility: f64 = (0..m).filter(|&i| tab.basis[i] >= n).map(|i| tab.rhs(i).abs()).sum();
    let scale = p.rhs.iter().fold(1.0f64, |a, b| a.max(b.abs()));
    if infeasibility > 1e-9 * scale {
        return Err(Error::Numeric(format!("LP is infeasible (phase-1 residual {infeasibility:.3e})")));
    }

    // drive zero-level artificials out of the basis; drop redundant rows
    let mut i = 0;
    while i < tab.t.len() {
        if tab.basis[i] >= n {
            let col = (0..n)
                .filter(|&j| tab.t[i][j].abs() > 1e-9)
                .max_by(|&a, &b| tab.t[i][a].abs().total_cmp(&tab.t[i][b].abs()));
            match col {
                Some(j) => tab.pivot(i, j),
                None => {
                    tab.t.remove(i);
                    tab.basis.remove(i);
                    tab.row_ids.remove(i);
                    continue;
                }
            }
        }
        i += 1;
    }
    let kept_rows = tab.row_ids.clone();

    // phase 2 reduced costs from the current basis
    let mut reduced = vec![0.0; n + m];
    reduced[..n].copy_from_slice(&p.objective[..n]);
    for (i, &b) in tab.basis.iter().enumerate() {
        let cb = p.objective[b];
        if cb != 0.0 {
            for (rj, &a) in reduced[..n].iter_mut().zip(&tab.t[i][..n]) {
                *rj -= cb * a;
            }
        }
    }
    for j in tab.basis.iter() {
        reduced[*j] = 0.0;
    }
    tab.reduced = reduced;
    tab.run(tab.n_original)?;

    polish(p, &tab.basis, &kept_rows, tab.iterations)
}

fn polish(p: &LpProblem, basis: &[usize], rows: &[usize], iterations: usize) -> Result<LpSolution> {
    let n = p.num_columns();
    let k = basis.len();
    let b_mat = DMatrix::from_fn(k, k, |r, c| p.rows[rows[r]][basis[c]]);
    let rhs = DVector::from_iterator(k, rows.iter().map(|&r| p.rhs[r]));
    let cb = DVector::from_iterator(k, basis.iter().map(|&j| p.objective[j]));
    let lu = b_mat.clone().lu();
    let xb = lu.solve(&rhs).ok_or_else(|| Error::Numeric("final simplex basis is singular".into()))?;
    let y_kept =
        b_mat.transpose().lu().solve(&cb).ok_or_else(|| Error::Numeric("final simplex basis is singular".into()))?;

    let mut weights = vec![0.0; n];
    for (&j, &x) in basis.iter().zip(xb.iter()) {
        weights[j] = x.max(0.0);
    }
    let mut duals = vec![0.0; p.rows.len()];
    for (&r, &y) in rows.iter().zip(y_kept.iter()) {
        duals[r] = y;
    }
    let max_reduced_cost = (0..n)
        .map(|j| {
            let ya: f64 = p.rows.iter().zip(&duals).map(|(row, y)| y * row[j]).sum();
            p.objective[j] - ya
        })
        .fold(f64::NEG_INFINITY, f64::max);
    if max_reduced_cost > DUAL_TOL {
        return Err(Error::Numeric(format!(
            "simplex stopped without a dual certificate: reduced cost {max_reduced_cost:.3e} after {iterations} pivots"
        )));
    }
    let objective = weights.iter().zip(&p.objective).map(|(w, c)| w * c).sum();
    Ok(LpSolution { weights, objective, duals, basis: basis.to_vec(), max_reduced_cost, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn maximize_single_coordinate() {
        let p = LpProblem::new(vec![1.0, 0.0], vec![vec![1.0, 1.0]], vec![1.0]).unwrap();
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.weights, vec![1.0, 0.0]);
        assert_eq!(s.objective, 1.0);
    }

    #[test]
    fn zero_objective_returns_a_vertex() {
        let p = LpProblem::new(vec![0.0; 3], vec![vec![1.0, 1.0, 1.0], vec![1.0, 2.0, 3.0]], vec![1.0, 2.0]).unwrap();
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.objective, 0.0);
        assert!(s.weights.iter().filter(|&&w| w > 0.0).count() <= 2);
        let r: f64 = s.weights.iter().zip([1.0, 2.0, 3.0]).map(|(w, a)| w * a).sum();
        assert!((r - 2.0).abs() < 1e-12);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let inf = LpProblem::new(vec![1.0, 1.0], vec![vec![1.0, 1.0]], vec![-1.0]).unwrap();
        assert!(matches!(solve_lp(&inf), Err(Error::Numeric(_))));
        let unb = LpProblem::new(vec![1.0, 0.0], vec![vec![1.0, -1.0]], vec![0.0]).unwrap();
        assert!(matches!(solve_lp(&unb), Err(Error::Numeric(_))));
    }

    #[test]
    fn redundant_rows_are_tolerated() {
        let p = LpProblem::new(vec![3.0, 1.0, 2.0], vec![vec![1.0, 1.0, 1.0], vec![2.0, 2.0, 2.0]], vec![1.0, 2.0])
            .unwrap();
        let s = solve_lp(&p).unwrap();
        assert!((s.objective - 3.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_inconsistent_dimensions() {
        assert!(LpProblem::new(vec![1.0, 1.0], vec![vec![1.0]], vec![1.0]).is_err());
        assert!(LpProblem::new(vec![1.0], vec![vec![1.0]], vec![]).is_err());
        assert!(LpProblem::new(vec![f64::NAN], vec![vec![1.0]], vec![1.0]).is_err());
    }

    /// Best objective over all basic feasible solutions, by brute force.
    fn vertex_oracle(p: &LpProblem) -> f64 {
        let m = p.rows.len();
        let n = p.num_columns();
        let mut best = f64::NEG_INFINITY;
        let mut combo: Vec<usize> = (0..m).collect();
        loop {
            let b = DMatrix::from_fn(m, m, |r, c| p.rows[r][combo[c]]);
            if b.determinant().abs() > 1e-10 {
                if let Some(x) = b.lu().solve(&DVector::from_vec(p.rhs.clone())) {
                    if x.iter().all(|&v| v >= -1e-12) {
                        let obj: f64 = combo.iter().zip(x.iter()).map(|(&j, v)| p.objective[j] * v).sum();
                        best = best.max(obj);
                    }
                }
            }
            // next combination in lexicographic order
            let mut i = m;
            loop {
                if i == 0 {
                    return best;
                }
                i -= 1;
                if combo[i] < n - m + i {
                    combo[i] += 1;
                    for j in i + 1..m {
                        combo[j] = combo[j - 1] + 1;
                    }
                    break;
                }
            }
        }
    }

    #[test]
    fn random_three_by_twenty_matches_vertex_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..30 {
            // feasible by construction: b = A w0 for a random w0 >= 0; last row keeps it bounded
            let n = 20;
            let mut rows: Vec<Vec<f64>> =
                (0..2).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            rows.push(vec![1.0; n]);
            let w0: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let rhs: Vec<f64> = rows.iter().map(|r| r.iter().zip(&w0).map(|(a, w)| a * w).sum()).collect();
            let objective: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let p = LpProblem::new(objective, rows, rhs).unwrap();
            let s = solve_lp(&p).unwrap();
            let oracle = vertex_oracle(&p);
            assert!((s.objective - oracle).abs() < 1e-9, "{} vs {}", s.objective, oracle);
            assert!(s.max_reduced_cost <= DUAL_TOL);
            for (row, b) in p.rows.iter().zip(&p.rhs) {
                let lhs: f64 = row.iter().zip(&s.weights).map(|(a, w)| a * w).sum();
                assert!((lhs - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn degenerate_problem_terminates() {
        // many columns tied at the degenerate starting vertex
        let n = 200;
        let rows = vec![(0..n).map(|j| ((j % 7) as f64 - 3.0) / 3.0).collect::<Vec<_>>(), vec![1.0; n]];
        let objective: Vec<f64> = (0..n).map(|j| ((j * 37) % 11) as f64 / 11.0).collect();
        let p = LpProblem::new(objective, rows, vec![0.0, 1.0]).unwrap();
        let s = solve_lp(&p).unwrap();
        assert!(s.max_reduced_cost <= DUAL_TOL);
    }
}
