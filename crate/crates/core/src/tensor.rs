//! Labeled probability tensors and the tensor calculus of the theory:
//! contraction over shared variable names, tensor product, reduction, and
//! the reduce-and-replace operation together with polynomial expressions in it.
//!
//! Axes are identified by name, not position. Equality and serialization use a
//! canonical axis order (party, role, name) so that two tensors built in
//! different orders compare equal.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::num::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    Input,
    Output,
}

/// One named finite random variable carried by a tensor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AxisSpec {
    pub name: String,
    pub cardinality: usize,
    pub role: Role,
}

impl AxisSpec {
    pub fn new(name: &str, cardinality: usize, role: Role) -> Self {
        AxisSpec { name: name.to_string(), cardinality, role }
    }

    pub fn input(name: &str, cardinality: usize) -> Self {
        Self::new(name, cardinality, Role::Input)
    }

    pub fn output(name: &str, cardinality: usize) -> Self {
        Self::new(name, cardinality, Role::Output)
    }

    /// Party tag derived from a trailing `_A` / `_B`, empty otherwise.
    pub fn party(&self) -> &str {
        match self.name.rsplit_once('_') {
            Some((_, p)) if p == "A" || p == "B" => p,
            _ => "",
        }
    }

    /// Canonical sort key: (party, role, name).
    fn sort_key(&self) -> (String, Role, String) {
        (self.party().to_string(), self.role, self.name.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TensorError {
    /// An axis name appears twice on one tensor.
    DuplicateAxis(String),
    /// A referenced axis does not exist on the tensor.
    UnknownAxis(String),
    /// Shared axis names with different cardinalities.
    DimensionMismatch(String, usize, usize),
    /// Shared axis with the same role on both sides of a contraction.
    RoleMismatch(String),
    /// Data length does not match the product of cardinalities.
    DataLength { expected: usize, got: usize },
    /// Negative entry in a checked constructor.
    NegativeEntry(usize),
    /// Axis cardinality of zero.
    EmptyAxis(String),
    /// Tensor-product operands share an axis name.
    OverlappingAxes(String),
}

impl core::fmt::Display for TensorError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            TensorError::DuplicateAxis(n) => write!(f, "duplicate axis name {n}"),
            TensorError::UnknownAxis(n) => write!(f, "unknown axis {n}"),
            TensorError::DimensionMismatch(n, a, b) => {
                write!(f, "axis {n} has cardinality {a} on one side and {b} on the other")
            }
            TensorError::RoleMismatch(n) => write!(f, "shared axis {n} has the same role on both sides"),
            TensorError::DataLength { expected, got } => {
                write!(f, "data length {got}, expected {expected}")
            }
            TensorError::NegativeEntry(i) => write!(f, "negative entry at flat index {i}"),
            TensorError::EmptyAxis(n) => write!(f, "axis {n} has cardinality 0"),
            TensorError::OverlappingAxes(n) => write!(f, "tensor product operands share axis {n}"),
        }
    }
}

/// Dense tensor over named axes, row-major in axis order.
///
/// All public theory objects are elementwise nonnegative; intermediate affine
/// objects (projector residuals) may carry negative entries and are built with
/// [`LabeledTensor::new_unchecked`].
#[derive(Clone, Debug)]
pub struct LabeledTensor<T> {
    axes: Vec<AxisSpec>,
    data: Vec<T>,
}

impl<T: Scalar> LabeledTensor<T> {
    /// Checked constructor: validates axis names, data length, and nonnegativity.
    pub fn new(axes: Vec<AxisSpec>, data: Vec<T>) -> Result<Self, TensorError> {
        let t = Self::new_unchecked(axes, data)?;
        if let Some(i) = t.data.iter().position(|v| !v.is_nonneg_tol()) {
            return Err(TensorError::NegativeEntry(i));
        }
        Ok(t)
    }

    /// Constructor for raw affine intermediates: entries may be negative.
    pub fn new_unchecked(axes: Vec<AxisSpec>, data: Vec<T>) -> Result<Self, TensorError> {
        let mut seen = BTreeSet::new();
        for a in &axes {
            if a.cardinality == 0 {
                return Err(TensorError::EmptyAxis(a.name.clone()));
            }
            if !seen.insert(a.name.clone()) {
                return Err(TensorError::DuplicateAxis(a.name.clone()));
            }
        }
        let expected: usize = axes.iter().map(|a| a.cardinality).product();
        if data.len() != expected {
            return Err(TensorError::DataLength { expected, got: data.len() });
        }
        Ok(LabeledTensor { axes, data })
    }

    /// Builds a tensor by evaluating `f` on every multi-index (values listed in axis order).
    pub fn from_fn(axes: Vec<AxisSpec>, mut f: impl FnMut(&[usize]) -> T) -> Self {
        let size: usize = axes.iter().map(|a| a.cardinality).product();
        let mut idx = vec![0usize; axes.len()];
        let mut data = Vec::with_capacity(size);
        for _ in 0..size {
            data.push(f(&idx));
            for (pos, a) in axes.iter().enumerate().rev() {
                idx[pos] += 1;
                if idx[pos] < a.cardinality {
                    break;
                }
                idx[pos] = 0;
            }
        }
        LabeledTensor { axes, data }
    }

    /// Tensor filled with a constant.
    pub fn constant(axes: Vec<AxisSpec>, value: T) -> Self {
        let size: usize = axes.iter().map(|a| a.cardinality).product();
        LabeledTensor { axes, data: vec![value; size] }
    }

    /// The identity tensor: all ones over the given axes.
    pub fn identity(axes: Vec<AxisSpec>) -> Self {
        Self::constant(axes, T::one())
    }

    pub fn axes(&self) -> &[AxisSpec] {
        &self.axes
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn axis(&self, name: &str) -> Option<&AxisSpec> {
        self.axes.iter().find(|a| a.name == name)
    }

    pub fn axis_pos(&self, name: &str) -> Option<usize> {
        self.axes.iter().position(|a| a.name == name)
    }

    pub fn cardinality(&self, name: &str) -> Result<usize, TensorError> {
        self.axis(name)
            .map(|a| a.cardinality)
            .ok_or_else(|| TensorError::UnknownAxis(name.to_string()))
    }

    fn strides(&self) -> Vec<usize> {
        let mut s = vec![1usize; self.axes.len()];
        for i in (0..self.axes.len().saturating_sub(1)).rev() {
            s[i] = s[i + 1] * self.axes[i + 1].cardinality;
        }
        s
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        let strides = self.strides();
        idx.iter().zip(&strides).map(|(i, s)| i * s).sum()
    }

    pub fn get(&self, idx: &[usize]) -> &T {
        &self.data[self.flat_index(idx)]
    }

    /// Iterates (multi-index, value) in row-major order.
    pub fn iter_indexed(&self) -> IndexedIter<'_, T> {
        IndexedIter { t: self, idx: vec![0; self.axes.len()], pos: 0 }
    }

    pub fn map(&self, f: impl Fn(&T) -> T) -> Self {
        LabeledTensor { axes: self.axes.clone(), data: self.data.iter().map(f).collect() }
    }

    pub fn scale(&self, c: &T) -> Self {
        self.map(|v| v.clone() * c.clone())
    }

    /// Entrywise sum; axes may be in different orders.
    pub fn add(&self, other: &Self) -> Result<Self, TensorError> {
        let aligned = other.permuted_like(self)?;
        let data = self
            .data
            .iter()
            .zip(aligned.data.iter())
            .map(|(a, b)| a.clone() + b.clone())
            .collect();
        Ok(LabeledTensor { axes: self.axes.clone(), data })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, TensorError> {
        self.add(&other.map(|v| -v.clone()))
    }

    /// Reorders `self`'s axes to match `reference`'s axis order.
    pub fn permuted_like(&self, reference: &Self) -> Result<Self, TensorError> {
        let mut order = Vec::with_capacity(self.axes.len());
        if reference.axes.len() != self.axes.len() {
            return Err(TensorError::DataLength { expected: reference.axes.len(), got: self.axes.len() });
        }
        for a in &reference.axes {
            let pos = self
                .axis_pos(&a.name)
                .ok_or_else(|| TensorError::UnknownAxis(a.name.clone()))?;
            if self.axes[pos].cardinality != a.cardinality {
                return Err(TensorError::DimensionMismatch(
                    a.name.clone(),
                    self.axes[pos].cardinality,
                    a.cardinality,
                ));
            }
            order.push(pos);
        }
        Ok(self.permute(&order))
    }

    fn permute(&self, order: &[usize]) -> Self {
        let axes: Vec<AxisSpec> = order.iter().map(|&i| self.axes[i].clone()).collect();
        let old_strides = self.strides();
        let mut out = LabeledTensor {
            axes,
            data: vec![T::zero(); self.data.len()],
        };
        let new_cards: Vec<usize> = out.axes.iter().map(|a| a.cardinality).collect();
        let mut idx = vec![0usize; order.len()];
        for slot in 0..out.data.len() {
            let old_flat: usize = idx.iter().zip(order).map(|(i, &o)| i * old_strides[o]).sum();
            out.data[slot] = self.data[old_flat].clone();
            for pos in (0..idx.len()).rev() {
                idx[pos] += 1;
                if idx[pos] < new_cards[pos] {
                    break;
                }
                idx[pos] = 0;
            }
        }
        out
    }

    /// Axes sorted by (party, role, name); used before serialization and comparison.
    pub fn canonicalized(&self) -> Self {
        let mut order: Vec<usize> = (0..self.axes.len()).collect();
        order.sort_by_key(|&i| self.axes[i].sort_key());
        self.permute(&order)
    }

    /// Order-independent equality, exact or within the float tolerance.
    pub fn tensor_eq(&self, other: &Self) -> bool {
        if self.axes.len() != other.axes.len() {
            return false;
        }
        let a = self.canonicalized();
        let b = other.canonicalized();
        if a.axes != b.axes {
            return false;
        }
        a.data
            .iter()
            .zip(b.data.iter())
            .all(|(x, y)| (x.clone() - y.clone()).is_zero_tol())
    }

    /// Renames an axis in place (cardinality and role unchanged).
    pub fn renamed(&self, old: &str, new: &str) -> Result<Self, TensorError> {
        let pos = self.axis_pos(old).ok_or_else(|| TensorError::UnknownAxis(old.to_string()))?;
        if self.axes.iter().any(|a| a.name == new) {
            return Err(TensorError::DuplicateAxis(new.to_string()));
        }
        let mut axes = self.axes.clone();
        axes[pos].name = new.to_string();
        Ok(LabeledTensor { axes, data: self.data.clone() })
    }

    /// Replaces an axis role.
    pub fn with_role(&self, name: &str, role: Role) -> Result<Self, TensorError> {
        let pos = self.axis_pos(name).ok_or_else(|| TensorError::UnknownAxis(name.to_string()))?;
        let mut axes = self.axes.clone();
        axes[pos].role = role;
        Ok(LabeledTensor { axes, data: self.data.clone() })
    }

    pub fn total(&self) -> T {
        self.data.iter().cloned().sum()
    }

    pub fn min_entry(&self) -> T {
        let mut it = self.data.iter();
        let mut m = it.next().expect("nonempty tensor").clone();
        for v in it {
            if *v < m {
                m = v.clone();
            }
        }
        m
    }

    pub fn max_abs(&self) -> T {
        let mut m = T::zero();
        for v in &self.data {
            let a = v.abs();
            if a > m {
                m = a;
            }
        }
        m
    }

    pub fn is_nonnegative(&self) -> bool {
        self.data.iter().all(|v| v.is_nonneg_tol())
    }

    /// Stable byte fingerprint of the canonical form, for dedupe maps.
    pub fn fingerprint(&self) -> Vec<u8> {
        let c = self.canonicalized();
        let mut out = Vec::new();
        for a in &c.axes {
            out.extend_from_slice(a.name.as_bytes());
            out.push(0);
            out.extend_from_slice(&(a.cardinality as u32).to_le_bytes());
            out.push(match a.role {
                Role::Input => 1,
                Role::Output => 2,
            });
        }
        out.push(0xff);
        for v in &c.data {
            let s = alloc::format!("{:?};", v);
            out.extend_from_slice(s.as_bytes());
        }
        out
    }
}

pub struct IndexedIter<'a, T> {
    t: &'a LabeledTensor<T>,
    idx: Vec<usize>,
    pos: usize,
}

impl<'a, T: Scalar> Iterator for IndexedIter<'a, T> {
    type Item = (Vec<usize>, &'a T);

    fn next(&mut self) -> Option<Self::Item> {
        if self.pos >= self.t.data.len() {
            return None;
        }
        let item = (self.idx.clone(), &self.t.data[self.pos]);
        self.pos += 1;
        for p in (0..self.idx.len()).rev() {
            self.idx[p] += 1;
            if self.idx[p] < self.t.axes[p].cardinality {
                break;
            }
            self.idx[p] = 0;
        }
        Some(item)
    }
}

/// Contraction over all and only the shared axis names (the `*` of the theory).
///
/// Shared names must agree in cardinality and meet with opposite roles
/// (one side's output is the other side's input).
pub fn contract<T: Scalar>(
    a: &LabeledTensor<T>,
    b: &LabeledTensor<T>,
) -> Result<LabeledTensor<T>, TensorError> {
    let shared: Vec<String> = a
        .axes
        .iter()
        .filter(|ax| b.axis(&ax.name).is_some())
        .map(|ax| ax.name.clone())
        .collect();
    for name in &shared {
        let ax_a = a.axis(name).unwrap();
        let ax_b = b.axis(name).unwrap();
        if ax_a.cardinality != ax_b.cardinality {
            return Err(TensorError::DimensionMismatch(
                name.clone(),
                ax_a.cardinality,
                ax_b.cardinality,
            ));
        }
        if ax_a.role == ax_b.role {
            return Err(TensorError::RoleMismatch(name.clone()));
        }
    }

    let free_a: Vec<usize> = (0..a.axes.len())
        .filter(|&i| !shared.contains(&a.axes[i].name))
        .collect();
    let free_b: Vec<usize> = (0..b.axes.len())
        .filter(|&i| !shared.contains(&b.axes[i].name))
        .collect();
    let mut out_axes: Vec<AxisSpec> = free_a.iter().map(|&i| a.axes[i].clone()).collect();
    out_axes.extend(free_b.iter().map(|&i| b.axes[i].clone()));

    let shared_pos_a: Vec<usize> = shared.iter().map(|n| a.axis_pos(n).unwrap()).collect();
    let shared_pos_b: Vec<usize> = shared.iter().map(|n| b.axis_pos(n).unwrap()).collect();
    let shared_cards: Vec<usize> = shared_pos_a.iter().map(|&i| a.axes[i].cardinality).collect();

    let strides_a = a.strides();
    let strides_b = b.strides();
    let out_size: usize = out_axes.iter().map(|ax| ax.cardinality).product();
    let mut data = vec![T::zero(); out_size];

    // iterate free_a x free_b x shared
    let cards_fa: Vec<usize> = free_a.iter().map(|&i| a.axes[i].cardinality).collect();
    let cards_fb: Vec<usize> = free_b.iter().map(|&i| b.axes[i].cardinality).collect();
    let size_fa: usize = cards_fa.iter().product();
    let size_fb: usize = cards_fb.iter().product();
    let size_sh: usize = shared_cards.iter().product();

    let unrank = |mut r: usize, cards: &[usize]| -> Vec<usize> {
        let mut v = vec![0usize; cards.len()];
        for i in (0..cards.len()).rev() {
            v[i] = r % cards[i];
            r /= cards[i];
        }
        v
    };

    for ra in 0..size_fa {
        let ia = unrank(ra, &cards_fa);
        let base_a: usize = ia.iter().zip(&free_a).map(|(v, &p)| v * strides_a[p]).sum();
        for rb in 0..size_fb {
            let ib = unrank(rb, &cards_fb);
            let base_b: usize = ib.iter().zip(&free_b).map(|(v, &p)| v * strides_b[p]).sum();
            let mut acc = T::zero();
            for rs in 0..size_sh {
                let is = unrank(rs, &shared_cards);
                let off_a: usize = is.iter().zip(&shared_pos_a).map(|(v, &p)| v * strides_a[p]).sum();
                let off_b: usize = is.iter().zip(&shared_pos_b).map(|(v, &p)| v * strides_b[p]).sum();
                acc = acc + a.data[base_a + off_a].clone() * b.data[base_b + off_b].clone();
            }
            data[ra * size_fb + rb] = acc;
        }
    }
    LabeledTensor::new_unchecked(out_axes, data)
}

/// Entrywise product over the union of axes; operand axis sets must be disjoint.
pub fn tensor_product<T: Scalar>(
    a: &LabeledTensor<T>,
    b: &LabeledTensor<T>,
) -> Result<LabeledTensor<T>, TensorError> {
    for ax in a.axes() {
        if b.axis(&ax.name).is_some() {
            return Err(TensorError::OverlappingAxes(ax.name.clone()));
        }
    }
    let mut axes = a.axes.to_vec();
    axes.extend(b.axes.iter().cloned());
    let mut data = Vec::with_capacity(a.len() * b.len());
    for va in &a.data {
        for vb in &b.data {
            data.push(va.clone() * vb.clone());
        }
    }
    LabeledTensor::new_unchecked(axes, data)
}

/// Partial reduction: sums out the given axes (contraction with the identity tensor).
pub fn reduction<T: Scalar>(
    t: &LabeledTensor<T>,
    axes: &[&str],
) -> Result<LabeledTensor<T>, TensorError> {
    for n in axes {
        if t.axis(n).is_none() {
            return Err(TensorError::UnknownAxis((*n).to_string()));
        }
    }
    let keep: Vec<usize> = (0..t.axes.len())
        .filter(|&i| !axes.contains(&t.axes[i].name.as_str()))
        .collect();
    let out_axes: Vec<AxisSpec> = keep.iter().map(|&i| t.axes[i].clone()).collect();
    let out_size: usize = out_axes.iter().map(|a| a.cardinality).product();
    let mut data = vec![T::zero(); out_size];
    let strides_out: Vec<usize> = {
        let mut s = vec![1usize; out_axes.len()];
        for i in (0..out_axes.len().saturating_sub(1)).rev() {
            s[i] = s[i + 1] * out_axes[i + 1].cardinality;
        }
        s
    };
    for (idx, v) in t.iter_indexed() {
        let flat: usize = keep
            .iter()
            .enumerate()
            .map(|(o, &i)| idx[i] * strides_out[o])
            .sum();
        data[flat] = data[flat].clone() + v.clone();
    }
    LabeledTensor::new_unchecked(out_axes, data)
}

/// Total reduction to a scalar: contraction of every axis with the identity.
pub fn total_reduction<T: Scalar>(t: &LabeledTensor<T>) -> T {
    t.total()
}

/// Reduce-and-replace over the given axes: every slice along them is replaced
/// by the slice average. Same shape as the input; idempotent; self-adjoint
/// under contraction.
pub fn reduce_and_replace<T: Scalar>(
    t: &LabeledTensor<T>,
    axes: &[&str],
) -> Result<LabeledTensor<T>, TensorError> {
    let summed = reduction(t, axes)?;
    let mut denom = T::one();
    for n in axes {
        denom = denom * T::from_i64(t.cardinality(n)? as i64);
    }
    let inv = denom.recip();
    // broadcast back
    let positions: Vec<Option<usize>> = t
        .axes
        .iter()
        .map(|a| summed.axis_pos(&a.name))
        .collect();
    let out = LabeledTensor::from_fn(t.axes.clone(), |idx| {
        let sub: Vec<usize> = positions
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.map(|_| idx[i]))
            .collect();
        // positions preserves the axis order of `summed` because reduction keeps order
        summed.get(&sub).clone() * inv.clone()
    });
    Ok(out)
}

/// Formal polynomial in reduce-and-replace operators: Σ coeff · _{subset}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RrExpr {
    pub terms: Vec<RrTerm>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RrTerm {
    pub num: i64,
    pub den: i64,
    pub axes: BTreeSet<String>,
}

impl RrExpr {
    pub fn new(terms: Vec<(i64, &[&str])>) -> Self {
        RrExpr {
            terms: terms
                .into_iter()
                .map(|(c, names)| RrTerm {
                    num: c,
                    den: 1,
                    axes: names.iter().map(|n| n.to_string()).collect(),
                })
                .collect(),
        }
    }

    /// Composition (operator product); reduce-and-replace sets merge by union.
    pub fn compose(&self, other: &RrExpr) -> RrExpr {
        let mut terms = Vec::new();
        for a in &self.terms {
            for b in &other.terms {
                terms.push(RrTerm {
                    num: a.num * b.num,
                    den: a.den * b.den,
                    axes: a.axes.union(&b.axes).cloned().collect(),
                });
            }
        }
        RrExpr { terms }
    }

    /// Every axis name referenced by any term.
    pub fn axis_names(&self) -> BTreeSet<String> {
        let mut s = BTreeSet::new();
        for t in &self.terms {
            s.extend(t.axes.iter().cloned());
        }
        s
    }
}

/// Applies an [`RrExpr`] to a tensor: Σ coeff · reduce_and_replace(t, subset).
/// The result is an affine object and may carry negative entries.
pub fn apply_rr_expr<T: Scalar>(
    t: &LabeledTensor<T>,
    expr: &RrExpr,
) -> Result<LabeledTensor<T>, TensorError> {
    for name in expr.axis_names() {
        if t.axis(&name).is_none() {
            return Err(TensorError::UnknownAxis(name));
        }
    }
    let mut acc = LabeledTensor::constant(t.axes().to_vec(), T::zero());
    for term in &expr.terms {
        let names: Vec<&str> = term.axes.iter().map(|s| s.as_str()).collect();
        let piece = reduce_and_replace(t, &names)?;
        let coeff = T::from_ratio(term.num, term.den);
        acc = acc.add(&piece.scale(&coeff))?;
    }
    Ok(acc)
}

/// Kronecker-delta tensor on one axis: point mass at `value`.
pub fn point_mass<T: Scalar>(axis: AxisSpec, value: usize) -> LabeledTensor<T> {
    LabeledTensor::from_fn(vec![axis], |idx| {
        if idx[0] == value {
            T::one()
        } else {
            T::zero()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{rat, Rat};

    fn t1(name: &str, vals: &[i64]) -> LabeledTensor<Rat> {
        LabeledTensor::new_unchecked(
            vec![AxisSpec::output(name, vals.len())],
            vals.iter().map(|&v| rat(v, 1)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn identity_contraction_relabels() {
        // delta_{A',A} * P_A -> P over A'
        let delta = LabeledTensor::<Rat>::from_fn(
            vec![AxisSpec::output("A'", 2), AxisSpec::input("A", 2)],
            |idx| if idx[0] == idx[1] { rat(1, 1) } else { rat(0, 1) },
        );
        let p = t1("A", &[1, 3]);
        let r = contract(&delta, &p).unwrap();
        assert_eq!(r.axes().len(), 1);
        assert_eq!(r.axes()[0].name, "A'");
        assert_eq!(r.data(), &[rat(1, 1), rat(3, 1)]);
    }

    #[test]
    fn pr_box_at_fixed_inputs() {
        // PR * point mass at (I_A,I_B)=(0,0) -> uniform 1/2 on {O_A=O_B}
        let pr = LabeledTensor::<Rat>::from_fn(
            vec![
                AxisSpec::output("O_A", 2),
                AxisSpec::output("O_B", 2),
                AxisSpec::input("I_A", 2),
                AxisSpec::input("I_B", 2),
            ],
            |idx| {
                if (idx[0] ^ idx[1]) == idx[2] * idx[3] {
                    rat(1, 2)
                } else {
                    rat(0, 1)
                }
            },
        );
        let inputs = tensor_product(
            &point_mass::<Rat>(AxisSpec::output("I_A", 2), 0),
            &point_mass::<Rat>(AxisSpec::output("I_B", 2), 0),
        )
        .unwrap();
        let r = contract(&pr, &inputs).unwrap();
        for (idx, v) in r.iter_indexed() {
            let expect = if idx[0] == idx[1] { rat(1, 2) } else { rat(0, 1) };
            assert_eq!(*v, expect);
        }
    }

    #[test]
    fn contract_rejects_dimension_mismatch() {
        let a = t1("A", &[1, 2]);
        let b = LabeledTensor::<Rat>::from_fn(vec![AxisSpec::input("A", 3)], |_| rat(1, 1));
        assert!(matches!(
            contract(&a, &b),
            Err(TensorError::DimensionMismatch(_, 2, 3))
        ));
    }

    #[test]
    fn tensor_product_cases() {
        let one = LabeledTensor::<Rat>::identity(vec![AxisSpec::input("U", 1)]);
        let p = t1("A", &[1, 3]);
        let r = tensor_product(&one, &p).unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r.total(), rat(4, 1));

        let q = t1("B", &[2, 2]);
        let joint = tensor_product(&p, &q).unwrap();
        assert_eq!(joint.total(), rat(16, 1));

        let d = tensor_product(
            &point_mass::<Rat>(AxisSpec::output("A", 2), 0),
            &point_mass::<Rat>(AxisSpec::output("B", 2), 1),
        )
        .unwrap();
        assert_eq!(*d.get(&[0, 1]), rat(1, 1));
        assert_eq!(d.total(), rat(1, 1));

        assert!(matches!(
            tensor_product(&p, &t1("A", &[1, 1])),
            Err(TensorError::OverlappingAxes(_))
        ));
    }

    #[test]
    fn reduce_and_replace_arithmetic() {
        let t = t1("A", &[1, 3]);
        let r = reduce_and_replace(&t, &["A"]).unwrap();
        assert_eq!(r.data(), &[rat(2, 1), rat(2, 1)]);
        // idempotence
        let rr2 = reduce_and_replace(&r, &["A"]).unwrap();
        assert!(rr2.tensor_eq(&r));
        // uniform fixed point
        let u = LabeledTensor::constant(vec![AxisSpec::output("A", 4)], rat(1, 4));
        assert!(reduce_and_replace(&u, &["A"]).unwrap().tensor_eq(&u));
        // unknown axis errors
        assert!(reduce_and_replace(&t, &["Z"]).is_err());
    }

    #[test]
    fn reduction_examples() {
        let t = t1("A", &[1, 3]);
        let r = reduction(&t, &["A"]).unwrap();
        assert_eq!(r.data(), &[rat(4, 1)]);
        let p = t1("A", &[1, 1]).scale(&rat(1, 2));
        assert_eq!(total_reduction(&p), rat(1, 1));
    }

    #[test]
    fn rr_expr_telescopes() {
        let t = LabeledTensor::<Rat>::from_fn(
            vec![AxisSpec::output("A", 2), AxisSpec::output("B", 3)],
            |idx| rat((idx[0] * 3 + idx[1] + 1) as i64, 7),
        );
        // identity expression
        let e1 = RrExpr::new(vec![(1, &[])]);
        assert!(apply_rr_expr(&t, &e1).unwrap().tensor_eq(&t));
        // (1 - A): sums to zero along A
        let e2 = RrExpr::new(vec![(1, &[]), (-1, &["A"])]);
        let r = apply_rr_expr(&t, &e2).unwrap();
        let s = reduction(&r, &["A"]).unwrap();
        assert!(s.data().iter().all(|v| v.is_zero_tol()));
    }

    #[test]
    fn rr_self_adjoint_and_commuting() {
        // contract(W, _A T) = contract(_A W, T) on random-ish tensors
        let w = LabeledTensor::<Rat>::from_fn(
            vec![AxisSpec::output("A", 2), AxisSpec::output("C", 2)],
            |idx| rat((2 * idx[0] + idx[1] + 1) as i64, 5),
        );
        let t = LabeledTensor::<Rat>::from_fn(
            vec![AxisSpec::input("A", 2), AxisSpec::input("D", 3)],
            |idx| rat((3 * idx[0] + idx[1] + 2) as i64, 11),
        );
        let lhs = contract(&w, &reduce_and_replace(&t, &["A"]).unwrap()).unwrap();
        let rhs = contract(&reduce_and_replace(&w, &["A"]).unwrap(), &t).unwrap();
        assert!(lhs.tensor_eq(&rhs));

        let a = reduce_and_replace(&reduce_and_replace(&w, &["A"]).unwrap(), &["C"]).unwrap();
        let b = reduce_and_replace(&reduce_and_replace(&w, &["C"]).unwrap(), &["A"]).unwrap();
        assert!(a.tensor_eq(&b));
    }

    #[test]
    fn contract_commutative_associative() {
        let a = LabeledTensor::<Rat>::from_fn(
            vec![AxisSpec::output("A", 2), AxisSpec::output("B", 2)],
            |idx| rat((idx[0] + 2 * idx[1] + 1) as i64, 3),
        );
        let b = LabeledTensor::<Rat>::from_fn(
            vec![AxisSpec::input("B", 2), AxisSpec::output("C", 2)],
            |idx| rat((idx[0] * idx[1] + 1) as i64, 2),
        );
        let c = LabeledTensor::<Rat>::from_fn(vec![AxisSpec::input("C", 2)], |idx| rat(idx[0] as i64 + 1, 4));
        let ab_c = contract(&contract(&a, &b).unwrap(), &c).unwrap();
        let a_bc = contract(&a, &contract(&b, &c).unwrap()).unwrap();
        assert!(ab_c.tensor_eq(&a_bc));
        let ba = contract(&b, &a).unwrap();
        assert!(contract(&a, &b).unwrap().tensor_eq(&ba));
    }

    #[test]
    fn rr_expr_is_linear() {
        let axes = vec![AxisSpec::output("A", 2), AxisSpec::output("B", 2)];
        let t1 = LabeledTensor::<Rat>::from_fn(axes.clone(), |idx| rat((idx[0] + 3 * idx[1] + 1) as i64, 5));
        let t2 = LabeledTensor::<Rat>::from_fn(axes, |idx| rat((2 * idx[0] + idx[1] + 1) as i64, 3));
        let e = RrExpr::new(vec![(1, &[]), (-2, &["A"]), (1, &["A", "B"])]);
        // linear in the tensor argument
        let combo = t1.scale(&rat(2, 7)).add(&t2.scale(&rat(5, 7))).unwrap();
        let lhs = apply_rr_expr(&combo, &e).unwrap();
        let rhs = apply_rr_expr(&t1, &e)
            .unwrap()
            .scale(&rat(2, 7))
            .add(&apply_rr_expr(&t2, &e).unwrap().scale(&rat(5, 7)))
            .unwrap();
        assert!(lhs.tensor_eq(&rhs));
        // linear in the expression coefficients
        let e1 = RrExpr::new(vec![(1, &[]), (-2, &["A"])]);
        let e2 = RrExpr::new(vec![(1, &["A", "B"])]);
        let sum = apply_rr_expr(&t1, &e1)
            .unwrap()
            .add(&apply_rr_expr(&t1, &e2).unwrap())
            .unwrap();
        assert!(apply_rr_expr(&t1, &e).unwrap().tensor_eq(&sum));
    }

    #[test]
    fn canonical_equality_ignores_axis_order() {
        let a = LabeledTensor::<Rat>::from_fn(
            vec![AxisSpec::output("O_A", 2), AxisSpec::input("I_A", 2)],
            |idx| rat((idx[0] + 2 * idx[1]) as i64, 4),
        );
        let b = LabeledTensor::<Rat>::from_fn(
            vec![AxisSpec::input("I_A", 2), AxisSpec::output("O_A", 2)],
            |idx| rat((idx[1] + 2 * idx[0]) as i64, 4),
        );
        assert!(a.tensor_eq(&b));
    }

    #[test]
    fn checked_constructor_rejects_negatives() {
        let r = LabeledTensor::<Rat>::new(
            vec![AxisSpec::output("A", 2)],
            vec![rat(1, 2), rat(-1, 2)],
        );
        assert!(matches!(r, Err(TensorError::NegativeEntry(1))));
    }
}
