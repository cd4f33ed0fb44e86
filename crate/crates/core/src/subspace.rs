//! Linear-constraint machinery shared by the validators, the random generators,
//! and the LP row assembly.
//!
//! Every linear constraint of the theory is a polynomial identity in
//! reduce-and-replace operators. All such operators commute and are
//! simultaneously diagonalized by splitting each axis into its uniform
//! component and a mean-zero complement: on a product basis vector, the
//! operator `_S` acts as 1 when every axis in `S` carries the uniform
//! component and as 0 otherwise. A constraint `expr(W) = 0` therefore kills
//! exactly the product-basis coefficients whose pattern gives the expression
//! a nonzero eigenvalue, which turns subspace projection, dimension counting,
//! and equality-row generation into bookkeeping over patterns.

use alloc::vec;
use alloc::vec::Vec;

use crate::num::Scalar;
use crate::tensor::{AxisSpec, LabeledTensor, RrExpr, TensorError};

/// Pattern entry per axis: 0 = uniform component, k >= 1 = k-th mean-zero vector.
pub type Pattern = Vec<usize>;

/// Integer basis vector `k` for an axis of the given cardinality.
/// k = 0 is all ones; k >= 1 is (1,...,1,-k,0,...,0) with k leading ones.
pub fn basis_vector(cardinality: usize, k: usize) -> Vec<i64> {
    if k == 0 {
        return vec![1; cardinality];
    }
    let mut v = vec![0i64; cardinality];
    for item in v.iter_mut().take(k) {
        *item = 1;
    }
    v[k] = -(k as i64);
    v
}

/// Dual functional of `basis_vector(c, k)`, as (integer row, denominator).
/// The basis vectors are mutually orthogonal, so duals are just rescaled rows.
pub fn dual_vector(cardinality: usize, k: usize) -> (Vec<i64>, i64) {
    let v = basis_vector(cardinality, k);
    let norm: i64 = v.iter().map(|x| x * x).sum();
    (v, norm)
}

/// Eigenvalue of `expr` on a pattern: Σ coeff over terms whose axis set is
/// entirely uniform in the pattern. Returned as (num, den).
pub fn expr_eigenvalue(expr: &RrExpr, axes: &[AxisSpec], pattern: &Pattern) -> (i64, i64) {
    let mut num = 0i64;
    let mut den = 1i64;
    for term in &expr.terms {
        let all_uniform = term.axes.iter().all(|name| {
            axes.iter()
                .position(|a| &a.name == name)
                .map(|i| pattern[i] == 0)
                .unwrap_or(true)
        });
        if all_uniform {
            // num/den + term.num/term.den
            num = num * term.den + term.num * den;
            den *= term.den;
        }
    }
    if num == 0 {
        (0, 1)
    } else {
        (num, den)
    }
}

/// A set of homogeneous reduce-and-replace constraints on a fixed axis layout,
/// diagonalized once into good/bad patterns.
pub struct ConstraintSystem {
    pub axes: Vec<AxisSpec>,
    pub exprs: Vec<RrExpr>,
    good: Vec<Pattern>,
    bad: Vec<Pattern>,
}

impl ConstraintSystem {
    pub fn new(axes: Vec<AxisSpec>, exprs: Vec<RrExpr>) -> Self {
        let cards: Vec<usize> = axes.iter().map(|a| a.cardinality).collect();
        let mut good = Vec::new();
        let mut bad = Vec::new();
        let mut pattern = vec![0usize; cards.len()];
        loop {
            let ok = exprs
                .iter()
                .all(|e| expr_eigenvalue(e, &axes, &pattern).0 == 0);
            if ok {
                good.push(pattern.clone());
            } else {
                bad.push(pattern.clone());
            }
            let mut pos = cards.len();
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                pattern[pos] += 1;
                if pattern[pos] < cards[pos] {
                    break;
                }
                pattern[pos] = 0;
            }
            if pattern.iter().all(|&p| p == 0) {
                break;
            }
        }
        ConstraintSystem { axes, exprs, good, bad }
    }

    /// Dimension of the solution subspace (good patterns, including all-uniform).
    pub fn dimension(&self) -> usize {
        self.good.len()
    }

    pub fn good_patterns(&self) -> &[Pattern] {
        &self.good
    }

    pub fn bad_patterns(&self) -> &[Pattern] {
        &self.bad
    }

    /// Product basis tensor for a pattern (integer entries).
    pub fn pattern_tensor<T: Scalar>(&self, pattern: &Pattern) -> LabeledTensor<T> {
        let vecs: Vec<Vec<i64>> = self
            .axes
            .iter()
            .zip(pattern)
            .map(|(a, &k)| basis_vector(a.cardinality, k))
            .collect();
        LabeledTensor::from_fn(self.axes.clone(), |idx| {
            let mut prod = 1i64;
            for (i, &x) in idx.iter().enumerate() {
                prod *= vecs[i][x];
            }
            T::from_i64(prod)
        })
    }

    /// Dense dual row for a pattern, scaled to integer entries.
    /// `row · vec(W)` is proportional to the pattern coefficient of W.
    pub fn dual_row<T: Scalar>(&self, pattern: &Pattern) -> Vec<T> {
        let vecs: Vec<Vec<i64>> = self
            .axes
            .iter()
            .zip(pattern)
            .map(|(a, &k)| dual_vector(a.cardinality, k).0)
            .collect();
        let size: usize = self.axes.iter().map(|a| a.cardinality).product();
        let cards: Vec<usize> = self.axes.iter().map(|a| a.cardinality).collect();
        let mut row = Vec::with_capacity(size);
        let mut idx = vec![0usize; cards.len()];
        for _ in 0..size {
            let mut prod = 1i64;
            for (i, &x) in idx.iter().enumerate() {
                prod *= vecs[i][x];
            }
            row.push(T::from_i64(prod));
            for p in (0..idx.len()).rev() {
                idx[p] += 1;
                if idx[p] < cards[p] {
                    break;
                }
                idx[p] = 0;
            }
        }
        row
    }

    /// Orthogonal projection of `t` onto the solution subspace, optionally
    /// pinning the total (the all-uniform coefficient) to `norm`.
    pub fn project<T: Scalar>(
        &self,
        t: &LabeledTensor<T>,
        norm: Option<T>,
    ) -> Result<LabeledTensor<T>, TensorError> {
        let t = t.permuted_like(&LabeledTensor::<T>::constant(self.axes.clone(), T::zero()))?;
        let cards: Vec<usize> = self.axes.iter().map(|a| a.cardinality).collect();
        let size = t.len();

        // analysis: coefficient c_pattern = <dual_pattern, t>
        let mut coeffs: Vec<T> = t.data().to_vec();
        for (axis_pos, &card) in cards.iter().enumerate() {
            coeffs = transform_axis::<T>(&coeffs, &cards, axis_pos, card, true);
        }
        // zero out bad patterns, optionally pin the all-uniform coefficient
        for pat in &self.bad {
            let flat = flat_of(pat, &cards);
            coeffs[flat] = T::zero();
        }
        if let Some(n) = norm {
            let flat = flat_of(&vec![0; cards.len()], &cards);
            coeffs[flat] = n / T::from_i64(size as i64);
        }
        // synthesis
        let mut data = coeffs;
        for (axis_pos, &card) in cards.iter().enumerate() {
            data = transform_axis::<T>(&data, &cards, axis_pos, card, false);
        }
        LabeledTensor::new_unchecked(self.axes.clone(), data)
    }
}

fn flat_of(pattern: &Pattern, cards: &[usize]) -> usize {
    let mut flat = 0usize;
    for (i, &p) in pattern.iter().enumerate() {
        flat = flat * cards[i] + p;
    }
    flat
}

/// Applies the per-axis analysis (dual) or synthesis (basis) matrix along one axis.
fn transform_axis<T: Scalar>(
    data: &[T],
    cards: &[usize],
    axis: usize,
    card: usize,
    analysis: bool,
) -> Vec<T> {
    let inner: usize = cards[axis + 1..].iter().product();
    let outer: usize = cards[..axis].iter().product();
    let mut matrix = Vec::with_capacity(card);
    for k in 0..card {
        if analysis {
            let (v, norm) = dual_vector(card, k);
            let inv = T::from_i64(norm).recip();
            matrix.push(v.iter().map(|&x| T::from_i64(x) * inv.clone()).collect::<Vec<T>>());
        } else {
            matrix.push(basis_vector(card, k).iter().map(|&x| T::from_i64(x)).collect());
        }
    }
    let mut out = vec![T::zero(); data.len()];
    for o in 0..outer {
        for i in 0..inner {
            for k in 0..card {
                let mut acc = T::zero();
                for (x, row) in matrix.iter().enumerate() {
                    let src = o * card * inner + x * inner + i;
                    let m = if analysis { &matrix[k][x] } else { &row[k] };
                    acc = acc + m.clone() * data[src].clone();
                }
                out[o * card * inner + k * inner + i] = acc;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{rat, Rat};
    use crate::tensor::{apply_rr_expr, Role};

    #[test]
    fn projection_satisfies_constraints() {
        let axes = vec![
            AxisSpec::new("P", 2, Role::Output),
            AxisSpec::new("Q", 3, Role::Input),
        ];
        // constraint: _P t = _PQ t
        let expr = RrExpr::new(vec![(1, &["P"]), (-1, &["P", "Q"])]);
        let sys = ConstraintSystem::new(axes.clone(), vec![expr.clone()]);
        let t = LabeledTensor::<Rat>::from_fn(axes, |idx| rat((3 * idx[0] + idx[1] + 1) as i64, 4));
        let p = sys.project(&t, None).unwrap();
        let residual = apply_rr_expr(&p, &expr).unwrap();
        assert!(residual.max_abs().is_zero_tol());
        // projection is idempotent
        let pp = sys.project(&p, None).unwrap();
        assert!(pp.tensor_eq(&p));
    }

    #[test]
    fn dual_rows_recover_coefficients() {
        let axes = vec![AxisSpec::new("P", 2, Role::Output)];
        let sys = ConstraintSystem::new(axes, vec![]);
        let pat = vec![1usize];
        let basis = sys.pattern_tensor::<Rat>(&pat);
        let dual = sys.dual_row::<Rat>(&pat);
        let dot: Rat = basis
            .data()
            .iter()
            .zip(&dual)
            .map(|(a, b)| a.clone() * b.clone())
            .sum();
        // <dual, basis> = |basis|^2 > 0; orthogonal to the uniform pattern
        assert!(dot > rat(0, 1));
        let uni = sys.pattern_tensor::<Rat>(&vec![0usize]);
        let dot0: Rat = uni
            .data()
            .iter()
            .zip(&dual)
            .map(|(a, b)| a.clone() * b.clone())
            .sum();
        assert!(dot0.is_zero_tol());
    }

    #[test]
    fn norm_pinning() {
        let axes = vec![AxisSpec::new("P", 2, Role::Output), AxisSpec::new("Q", 2, Role::Input)];
        let sys = ConstraintSystem::new(axes.clone(), vec![]);
        let t = LabeledTensor::<Rat>::from_fn(axes, |idx| rat((idx[0] + idx[1]) as i64, 1));
        let p = sys.project(&t, Some(rat(4, 1))).unwrap();
        assert_eq!(p.total(), rat(4, 1));
    }
}
