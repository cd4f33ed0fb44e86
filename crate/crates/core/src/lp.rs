//! Dense two-phase simplex for `max c·x  s.t.  Ax = b, x ≥ 0`.
//!
//! Pricing is Dantzig (most positive reduced cost) until the objective stalls,
//! then permanently Bland's rule, whose anti-cycling guarantee makes
//! termination certain. Both rules are deterministic given the column order,
//! so ties among equal-value vertices always resolve to the first optimal
//! basis found. Exact over rationals; the float backend compares within the
//! global tolerance.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::num::Scalar;

/// One equality row, sparse: Σ coeffs·x = rhs.
#[derive(Clone, Debug)]
pub struct Row<T> {
    pub coeffs: Vec<(usize, T)>,
    pub rhs: T,
}

/// Equality-form LP with nonnegative variables.
#[derive(Clone, Debug)]
pub struct LinearProgram<T> {
    pub n_vars: usize,
    pub objective: Vec<T>,
    pub rows: Vec<Row<T>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LpError {
    Infeasible,
    Unbounded,
    Malformed(String),
}

#[derive(Clone, Debug)]
pub struct LpSolution<T> {
    pub value: T,
    pub x: Vec<T>,
}

#[derive(Clone)]
struct Tableau<T> {
    n: usize,
    m: usize,
    /// columns before the rhs: n + artificials (phase 1) or n (compacted)
    ncols: usize,
    rows: Vec<Vec<T>>,
    /// reduced-cost row (length ncols), then the objective value
    obj: Vec<T>,
    obj_value: T,
    basis: Vec<usize>,
    artificial_banned: bool,
}

impl<T: Scalar> Tableau<T> {
    fn width(&self) -> usize {
        self.ncols
    }

    /// Dantzig pricing (most positive reduced cost) while the objective moves;
    /// after a stretch of stalling pivots, fall back to Bland's rule, whose
    /// anti-cycling guarantee makes termination certain.
    fn entering_dantzig(&self) -> Option<usize> {
        let limit = if self.artificial_banned { self.n } else { self.width() };
        let mut best: Option<(usize, &T)> = None;
        for j in 0..limit {
            let r = &self.obj[j];
            if r.is_zero_tol() || *r <= T::zero() {
                continue;
            }
            match &best {
                None => best = Some((j, r)),
                Some((_, b)) if r > *b => best = Some((j, r)),
                _ => {}
            }
        }
        best.map(|(j, _)| j)
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let inv = self.rows[row][col].recip();
        for v in self.rows[row].iter_mut() {
            if !v.is_zero_tol() {
                v.mul_assign_ref(&inv);
            }
        }
        // only columns with a nonzero pivot-row entry change
        let touched: Vec<usize> = (0..=self.width())
            .filter(|&c| !self.rows[row][c].is_zero_tol())
            .collect();
        let pivot_row = core::mem::take(&mut self.rows[row]);
        for r in 0..self.m {
            if r == row {
                continue;
            }
            let factor = self.rows[r][col].clone();
            if factor.is_zero_tol() {
                continue;
            }
            let target = &mut self.rows[r];
            for &c in &touched {
                target[c].sub_mul(&factor, &pivot_row[c]);
            }
        }
        let factor = self.obj[col].clone();
        if !factor.is_zero_tol() {
            for &c in &touched {
                if c < self.width() {
                    self.obj[c].sub_mul(&factor, &pivot_row[c]);
                }
            }
            let mut delta = factor;
            delta.mul_assign_ref(&pivot_row[self.width()]);
            self.obj_value = self.obj_value.clone() + delta;
        }
        self.rows[row] = pivot_row;
        self.basis[row] = col;
    }

    /// Bland: entering = lowest-index column with positive reduced cost.
    fn entering(&self) -> Option<usize> {
        let limit = if self.artificial_banned { self.n } else { self.width() };
        (0..limit).find(|&j| {
            let r = &self.obj[j];
            !r.is_zero_tol() && *r > T::zero()
        })
    }

    /// Ratio test with Bland ties: lowest basis index among the minimizers.
    fn leaving(&self, col: usize) -> Option<usize> {
        let rhs_col = self.width();
        let mut best: Option<(T, usize)> = None;
        for r in 0..self.m {
            let a = &self.rows[r][col];
            if a.is_zero_tol() || *a <= T::zero() {
                continue;
            }
            let ratio = self.rows[r][rhs_col].clone() / a.clone();
            match &best {
                None => best = Some((ratio, r)),
                Some((b, br)) => {
                    if ratio < *b
                        || ((ratio.clone() - b.clone()).is_zero_tol()
                            && self.basis[r] < self.basis[*br])
                    {
                        best = Some((ratio, r));
                    }
                }
            }
        }
        best.map(|(_, r)| r)
    }

    fn run(&mut self) -> Result<(), LpError> {
        const STALL_LIMIT: usize = 40;
        let mut stalls = 0usize;
        let mut bland = false;
        loop {
            let col = if bland { self.entering() } else { self.entering_dantzig() };
            let Some(col) = col else { return Ok(()) };
            let Some(row) = self.leaving(col) else { return Err(LpError::Unbounded) };
            let before = self.obj_value.clone();
            self.pivot(row, col);
            if !bland {
                if (self.obj_value.clone() - before).is_zero_tol() {
                    stalls += 1;
                    if stalls > STALL_LIMIT {
                        bland = true;
                    }
                } else {
                    stalls = 0;
                }
            }
        }
    }
}

fn build_phase1<T: Scalar>(lp: &LinearProgram<T>) -> Result<Tableau<T>, LpError> {
    let n = lp.n_vars;
    let m = lp.rows.len();
    let mut rows = Vec::with_capacity(m);
    for (ri, row) in lp.rows.iter().enumerate() {
        let mut dense = vec![T::zero(); n + m + 1];
        for (j, c) in &row.coeffs {
            if *j >= n {
                return Err(LpError::Malformed(alloc::format!("row {ri} references variable {j}")));
            }
            dense[*j] = dense[*j].clone() + c.clone();
        }
        dense[n + m] = row.rhs.clone();
        // make rhs nonnegative so artificials start feasible
        if dense[n + m] < T::zero() {
            for v in dense.iter_mut() {
                *v = -v.clone();
            }
        }
        dense[n + ri] = T::one();
        rows.push(dense);
    }
    // phase-1: max(-Σ artificials); with artificial basis the reduced cost of
    // structural column j is the column sum, and the objective starts at -Σ rhs
    let mut obj = vec![T::zero(); n + m];
    let mut obj_value = T::zero();
    for r in &rows {
        for (j, item) in obj.iter_mut().enumerate().take(n) {
            *item = item.clone() + r[j].clone();
        }
        obj_value = obj_value - r[n + m].clone();
    }
    Ok(Tableau {
        n,
        m,
        ncols: n + m,
        rows,
        obj,
        obj_value,
        basis: (n..n + m).collect(),
        artificial_banned: false,
    })
}

/// Runs phase 1 and returns a feasible tableau, or `Infeasible`.
fn phase1<T: Scalar>(lp: &LinearProgram<T>) -> Result<Tableau<T>, LpError> {
    let mut t = build_phase1(lp)?;
    t.run()?;
    if !t.obj_value.is_zero_tol() {
        return Err(LpError::Infeasible);
    }
    // drive leftover artificials out of the basis where possible; rows that
    // cannot pivot are redundant zero rows and stay harmlessly basic at zero
    for r in 0..t.m {
        if t.basis[r] >= t.n {
            if let Some(col) = (0..t.n).find(|&j| !t.rows[r][j].is_zero_tol()) {
                t.pivot(r, col);
            }
        }
    }
    t.artificial_banned = true;
    Ok(t)
}

/// Feasibility check only: returns one feasible point.
pub fn solve_feasibility<T: Scalar>(lp: &LinearProgram<T>) -> Result<Vec<T>, LpError> {
    let t = phase1(lp)?;
    Ok(extract(&t))
}

fn extract<T: Scalar>(t: &Tableau<T>) -> Vec<T> {
    let mut x = vec![T::zero(); t.n];
    let rhs_col = t.width();
    for (r, &b) in t.basis.iter().enumerate() {
        if b < t.n {
            x[b] = t.rows[r][rhs_col].clone();
        }
    }
    x
}

/// A feasibility-solved tableau for a fixed constraint set, reusable across
/// objectives. Phase 1 runs once here; each [`PreparedLp::maximize`] is a
/// phase-2-only solve from the cached feasible vertex. This is what makes the
/// 10^6-LP scans tractable: all those LPs share one constraint matrix.
#[derive(Clone)]
pub struct PreparedLp<T> {
    tableau: Tableau<T>,
}

impl<T: Scalar> PreparedLp<T> {
    pub fn new(n_vars: usize, rows: &[Row<T>]) -> Result<Self, LpError> {
        let lp = LinearProgram {
            n_vars,
            objective: vec![T::zero(); n_vars],
            rows: rows.to_vec(),
        };
        let t = phase1(&lp)?;
        // compact: drop redundant rows still held by artificials, then the
        // artificial columns themselves
        let mut rows_c = Vec::with_capacity(t.m);
        let mut basis_c = Vec::with_capacity(t.m);
        for (r, &b) in t.basis.iter().enumerate() {
            if b >= t.n {
                continue; // redundant zero row
            }
            let mut row: Vec<T> = t.rows[r][..t.n].to_vec();
            row.push(t.rows[r][t.ncols].clone());
            rows_c.push(row);
            basis_c.push(b);
        }
        let m = rows_c.len();
        let tableau = Tableau {
            n: n_vars,
            m,
            ncols: n_vars,
            rows: rows_c,
            obj: vec![T::zero(); n_vars],
            obj_value: T::zero(),
            basis: basis_c,
            artificial_banned: true,
        };
        Ok(PreparedLp { tableau })
    }

    pub fn n_vars(&self) -> usize {
        self.tableau.n
    }

    /// Maximizes one objective over the prepared feasible set.
    pub fn maximize(&self, objective: &[T]) -> Result<LpSolution<T>, LpError> {
        if objective.len() != self.tableau.n {
            return Err(LpError::Malformed("objective length != n_vars".into()));
        }
        let mut t = self.tableau.clone();
        install_objective_raw(&mut t, objective);
        t.run()?;
        let x = extract(&t);
        let value = objective
            .iter()
            .zip(&x)
            .map(|(c, v)| c.clone() * v.clone())
            .sum();
        Ok(LpSolution { value, x })
    }
}

fn install_objective_raw<T: Scalar>(t: &mut Tableau<T>, objective: &[T]) {
    let rhs_col = t.width();
    let basic_costs: Vec<T> = t
        .basis
        .iter()
        .map(|&b| if b < t.n { objective[b].clone() } else { T::zero() })
        .collect();
    let mut obj = vec![T::zero(); t.ncols];
    for (j, item) in obj.iter_mut().enumerate().take(t.n) {
        let mut z = T::zero();
        for (row, cost) in t.rows.iter().zip(&basic_costs) {
            if !row[j].is_zero_tol() && !cost.is_zero_tol() {
                z = z + cost.clone() * row[j].clone();
            }
        }
        *item = objective[j].clone() - z;
    }
    let mut obj_value = T::zero();
    for (row, cost) in t.rows.iter().zip(&basic_costs) {
        obj_value = obj_value + cost.clone() * row[rhs_col].clone();
    }
    t.obj = obj;
    t.obj_value = obj_value;
}

/// Two-phase maximization.
pub fn maximize<T: Scalar>(lp: &LinearProgram<T>) -> Result<LpSolution<T>, LpError> {
    if lp.objective.len() != lp.n_vars {
        return Err(LpError::Malformed("objective length != n_vars".into()));
    }
    let mut t = phase1(lp)?;
    install_objective_raw(&mut t, &lp.objective);
    t.run()?;
    let x = extract(&t);
    let value = lp
        .objective
        .iter()
        .zip(&x)
        .map(|(c, v)| c.clone() * v.clone())
        .sum();
    Ok(LpSolution { value, x })
}
