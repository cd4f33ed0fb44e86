//! States of the theory: boxes (sets of conditional distributions) and
//! nonsignaling boxes, plus the standard all-bit catalog.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::num::Scalar;
use crate::tensor::{reduction, AxisSpec, LabeledTensor, Role, TensorError};

/// A box: nonnegative tensor normalized over its output axes for every fixing
/// of its input axes.
#[derive(Clone, Debug)]
pub struct BoxTensor<T> {
    tensor: LabeledTensor<T>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BoxError {
    Tensor(TensorError),
    NotNormalized,
    Negative,
    Signaling,
    /// Two-party layout expected ("O_A","O_B" outputs and "I_A","I_B" inputs, or a relabeling).
    BadLayout(String),
    /// Vertex catalog only exists for the all-bit scenario.
    Unsupported(String),
}

impl From<TensorError> for BoxError {
    fn from(e: TensorError) -> Self {
        BoxError::Tensor(e)
    }
}

impl<T: Scalar> BoxTensor<T> {
    pub fn new(tensor: LabeledTensor<T>) -> Result<Self, BoxError> {
        if !tensor.is_nonnegative() {
            return Err(BoxError::Negative);
        }
        if !is_normalized_per_input(&tensor)? {
            return Err(BoxError::NotNormalized);
        }
        Ok(BoxTensor { tensor })
    }

    pub fn tensor(&self) -> &LabeledTensor<T> {
        &self.tensor
    }

    pub fn into_tensor(self) -> LabeledTensor<T> {
        self.tensor
    }
}

/// Two-party nonsignaling box over (O_A, O_B | I_A, I_B)-style axes.
#[derive(Clone, Debug)]
pub struct NsBox<T> {
    inner: BoxTensor<T>,
}

impl<T: Scalar> NsBox<T> {
    pub fn new(tensor: LabeledTensor<T>) -> Result<Self, BoxError> {
        if !is_nonsignaling_box(&tensor)? {
            return Err(BoxError::Signaling);
        }
        Ok(NsBox { inner: BoxTensor::new(tensor)? })
    }

    pub fn tensor(&self) -> &LabeledTensor<T> {
        self.inner.tensor()
    }
}

fn output_names<T: Scalar>(t: &LabeledTensor<T>) -> Vec<String> {
    t.axes()
        .iter()
        .filter(|a| a.role == Role::Output)
        .map(|a| a.name.clone())
        .collect()
}

fn is_normalized_per_input<T: Scalar>(t: &LabeledTensor<T>) -> Result<bool, TensorError> {
    let outs = output_names(t);
    let out_refs: Vec<&str> = outs.iter().map(|s| s.as_str()).collect();
    let sums = reduction(t, &out_refs)?;
    Ok(sums
        .data()
        .iter()
        .all(|v| (v.clone() - T::one()).is_zero_tol()))
}

/// Normalization + nonnegativity for an arbitrary box layout.
pub fn is_box<T: Scalar>(t: &LabeledTensor<T>) -> Result<bool, TensorError> {
    Ok(t.is_nonnegative() && is_normalized_per_input(t)?)
}

/// Names the two-party layout of a candidate NS box: one output and one input
/// axis per party, identified by the `_A` / `_B` suffix.
struct TwoPartyLayout {
    out_a: String,
    out_b: String,
    in_a: String,
    in_b: String,
}

fn two_party_layout<T: Scalar>(t: &LabeledTensor<T>) -> Result<TwoPartyLayout, BoxError> {
    let mut out_a = None;
    let mut out_b = None;
    let mut in_a = None;
    let mut in_b = None;
    for a in t.axes() {
        let slot = match (a.party(), a.role) {
            ("A", Role::Output) => &mut out_a,
            ("B", Role::Output) => &mut out_b,
            ("A", Role::Input) => &mut in_a,
            ("B", Role::Input) => &mut in_b,
            _ => return Err(BoxError::BadLayout(a.name.clone())),
        };
        if slot.replace(a.name.clone()).is_some() {
            return Err(BoxError::BadLayout(a.name.clone()));
        }
    }
    match (out_a, out_b, in_a, in_b) {
        (Some(out_a), Some(out_b), Some(in_a), Some(in_b)) => {
            Ok(TwoPartyLayout { out_a, out_b, in_a, in_b })
        }
        _ => Err(BoxError::BadLayout("missing party axis".to_string())),
    }
}

/// No signaling from B to A: the marginal over B's output is independent of B's input.
pub fn no_signaling_b_to_a<T: Scalar>(t: &LabeledTensor<T>) -> Result<bool, BoxError> {
    let l = two_party_layout(t)?;
    marginal_independent(t, &l.out_b, &l.in_b)
}

/// No signaling from A to B: the marginal over A's output is independent of A's input.
pub fn no_signaling_a_to_b<T: Scalar>(t: &LabeledTensor<T>) -> Result<bool, BoxError> {
    let l = two_party_layout(t)?;
    marginal_independent(t, &l.out_a, &l.in_a)
}

fn marginal_independent<T: Scalar>(
    t: &LabeledTensor<T>,
    summed_output: &str,
    probe_input: &str,
) -> Result<bool, BoxError> {
    let marg = reduction(t, &[summed_output])?;
    let probe_pos = marg
        .axis_pos(probe_input)
        .ok_or_else(|| BoxError::BadLayout(probe_input.to_string()))?;
    let card = marg.axes()[probe_pos].cardinality;
    for (idx, v) in marg.iter_indexed() {
        if idx[probe_pos] != 0 {
            continue;
        }
        for c in 1..card {
            let mut other = idx.clone();
            other[probe_pos] = c;
            if !(v.clone() - marg.get(&other).clone()).is_zero_tol() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Full nonsignaling test: valid box plus both marginal conditions.
pub fn is_nonsignaling_box<T: Scalar>(t: &LabeledTensor<T>) -> Result<bool, BoxError> {
    if !is_box(t)? {
        return Ok(false);
    }
    Ok(no_signaling_b_to_a(t)? && no_signaling_a_to_b(t)?)
}

fn bit_axes() -> Vec<AxisSpec> {
    vec![
        AxisSpec::output("O_A", 2),
        AxisSpec::output("O_B", 2),
        AxisSpec::input("I_A", 2),
        AxisSpec::input("I_B", 2),
    ]
}

/// The PR box: P(o_A, o_B | i_A, i_B) = 1/2 · δ_{o_A ⊕ o_B, i_A · i_B}.
pub fn pr_box<T: Scalar>() -> NsBox<T> {
    let t = LabeledTensor::from_fn(bit_axes(), |idx| {
        if (idx[0] ^ idx[1]) == idx[2] * idx[3] {
            T::from_ratio(1, 2)
        } else {
            T::zero()
        }
    });
    NsBox::new(t).expect("PR box is nonsignaling")
}

/// PR-family box with parity target i_A·i_B ⊕ α·i_A ⊕ β·i_B ⊕ γ.
pub fn pr_box_relabeled<T: Scalar>(alpha: usize, beta: usize, gamma: usize) -> NsBox<T> {
    let t = LabeledTensor::from_fn(bit_axes(), |idx| {
        let target = (idx[2] * idx[3] + alpha * idx[2] + beta * idx[3] + gamma) % 2;
        if (idx[0] ^ idx[1]) == target {
            T::from_ratio(1, 2)
        } else {
            T::zero()
        }
    });
    NsBox::new(t).expect("PR relabeling is nonsignaling")
}

/// Local deterministic box o_A = f_A(i_A), o_B = f_B(i_B).
pub fn deterministic_box<T: Scalar>(fa: [usize; 2], fb: [usize; 2]) -> NsBox<T> {
    let t = LabeledTensor::from_fn(bit_axes(), |idx| {
        if idx[0] == fa[idx[2]] && idx[1] == fb[idx[3]] {
            T::one()
        } else {
            T::zero()
        }
    });
    NsBox::new(t).expect("local deterministic box is nonsignaling")
}

/// The 24 vertices of the two-party/two-input/two-output NS polytope:
/// 16 local deterministic boxes plus 8 PR relabelings. Only the all-bit case
/// is cataloged; larger scenarios go through the half-space checks.
pub fn ns_bit_vertices<T: Scalar>() -> Vec<NsBox<T>> {
    let mut out = Vec::with_capacity(24);
    for fa0 in 0..2 {
        for fa1 in 0..2 {
            for fb0 in 0..2 {
                for fb1 in 0..2 {
                    out.push(deterministic_box([fa0, fa1], [fb0, fb1]));
                }
            }
        }
    }
    for alpha in 0..2 {
        for beta in 0..2 {
            for gamma in 0..2 {
                out.push(pr_box_relabeled(alpha, beta, gamma));
            }
        }
    }
    out
}

/// Guarded entry point: the vertex catalog exists only at all-bit.
pub fn ns_vertices<T: Scalar>(cardinalities: [usize; 4]) -> Result<Vec<NsBox<T>>, BoxError> {
    if cardinalities != [2, 2, 2, 2] {
        return Err(BoxError::Unsupported(
            "NS vertex catalog is hardcoded for the all-bit scenario only".to_string(),
        ));
    }
    Ok(ns_bit_vertices())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{rat, Rat};
    use crate::tensor::tensor_product;

    #[test]
    fn pr_box_entries_and_ns() {
        let pr = pr_box::<Rat>();
        let t = pr.tensor();
        assert_eq!(*t.get(&[0, 0, 0, 0]), rat(1, 2));
        assert_eq!(*t.get(&[1, 1, 0, 0]), rat(1, 2));
        assert_eq!(*t.get(&[0, 1, 0, 0]), rat(0, 1));
        assert!(is_nonsignaling_box(t).unwrap());
    }

    #[test]
    fn signaling_box_detected() {
        // O_B = I_A with uniform O_A signals from A to B
        let t = LabeledTensor::<Rat>::from_fn(bit_axes(), |idx| {
            if idx[1] == idx[2] {
                rat(1, 2)
            } else {
                rat(0, 1)
            }
        });
        assert!(is_box(&t).unwrap());
        assert!(!is_nonsignaling_box(&t).unwrap());
        assert!(no_signaling_b_to_a(&t).unwrap());
        assert!(!no_signaling_a_to_b(&t).unwrap());
    }

    #[test]
    fn product_of_marginals_is_ns() {
        let pa = LabeledTensor::<Rat>::from_fn(
            vec![AxisSpec::output("O_A", 2), AxisSpec::input("I_A", 2)],
            |idx| {
                if idx[0] == idx[1] {
                    rat(3, 4)
                } else {
                    rat(1, 4)
                }
            },
        );
        let pb = LabeledTensor::<Rat>::constant(
            vec![AxisSpec::output("O_B", 2), AxisSpec::input("I_B", 2)],
            rat(1, 2),
        );
        let t = tensor_product(&pa, &pb).unwrap();
        assert!(is_nonsignaling_box(&t).unwrap());
    }

    #[test]
    fn vertex_catalog() {
        let vs = ns_bit_vertices::<Rat>();
        assert_eq!(vs.len(), 24);
        // all distinct
        let mut prints: Vec<_> = vs.iter().map(|v| v.tensor().fingerprint()).collect();
        prints.sort();
        prints.dedup();
        assert_eq!(prints.len(), 24);
        // deterministic members are products of deterministic marginals by construction;
        // the PR box itself is in the list
        let pr = pr_box::<Rat>();
        assert!(vs.iter().any(|v| v.tensor().tensor_eq(pr.tensor())));
        assert!(ns_vertices::<Rat>([2, 2, 2, 3]).is_err());
    }

    #[test]
    fn mixtures_of_vertices_stay_ns() {
        let vs = ns_bit_vertices::<Rat>();
        // fixed pseudo-random weights
        let weights: Vec<Rat> = (0..24).map(|i| rat((i * 7 + 3) % 11 + 1, 1)).collect();
        let total: Rat = weights.iter().cloned().sum();
        let mut acc = LabeledTensor::<Rat>::constant(bit_axes(), rat(0, 1));
        for (v, w) in vs.iter().zip(&weights) {
            acc = acc.add(&v.tensor().scale(&(w.clone() / total.clone()))).unwrap();
        }
        assert!(is_nonsignaling_box(&acc).unwrap());
    }

    #[test]
    fn relabeling_preserves_ns() {
        // flip Alice's input and output of the PR box
        let pr = pr_box::<Rat>();
        let t = LabeledTensor::<Rat>::from_fn(bit_axes(), |idx| {
            pr.tensor().get(&[1 - idx[0], idx[1], 1 - idx[2], idx[3]]).clone()
        });
        assert!(is_nonsignaling_box(&t).unwrap());
    }
}
