//! The explicit processes and instruments of the theory: the state-preparation
//! and one-way-channel counterexamples, the GYNI/LGYNI/OCB violating
//! constructions, and the constructive realization of causal correlations.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::boxes::{is_box, BoxError};
use crate::inequalities::{
    causal_decomposition, signaling_profile, Correlation, IneqError, OneWayKind, SignalingProfile,
};
use crate::num::Scalar;
use crate::operations::{Instrument, OpDims, OpError, Party};
use crate::process::{born_rule, ProcessDims, ProcessError, ProcessTensor};
use crate::tensor::{LabeledTensor, TensorError};

#[derive(Clone, Debug)]
pub enum ConstructionError {
    Tensor(TensorError),
    Process(ProcessError),
    Op(OpError),
    Ineq(IneqError),
    Box_(BoxError),
    /// The assembled triple did not reproduce its expected correlation.
    SelfCheckFailed(String),
    /// realize_causal was handed a correlation that is not of the claimed kind.
    WrongKind(String),
}

impl From<TensorError> for ConstructionError {
    fn from(e: TensorError) -> Self {
        ConstructionError::Tensor(e)
    }
}
impl From<ProcessError> for ConstructionError {
    fn from(e: ProcessError) -> Self {
        ConstructionError::Process(e)
    }
}
impl From<OpError> for ConstructionError {
    fn from(e: OpError) -> Self {
        ConstructionError::Op(e)
    }
}
impl From<IneqError> for ConstructionError {
    fn from(e: IneqError) -> Self {
        ConstructionError::Ineq(e)
    }
}
impl From<BoxError> for ConstructionError {
    fn from(e: BoxError) -> Self {
        ConstructionError::Box_(e)
    }
}

/// A process with matching instruments and the correlation they generate.
/// Construction always goes through [`NamedConstruction::checked`], which
/// re-derives the correlation by contraction and compares entrywise.
#[derive(Clone, Debug)]
pub struct NamedConstruction<T> {
    pub name: String,
    pub process: ProcessTensor<T>,
    pub alice: Instrument<T>,
    pub bob: Instrument<T>,
    pub expected: Correlation<T>,
}

impl<T: Scalar> NamedConstruction<T> {
    pub fn checked(
        name: String,
        process: ProcessTensor<T>,
        alice: Instrument<T>,
        bob: Instrument<T>,
        expected: Correlation<T>,
    ) -> Result<Self, ConstructionError> {
        let got = born_rule(&process, &alice, &bob)?;
        if !got.tensor().tensor_eq(expected.tensor()) {
            return Err(ConstructionError::SelfCheckFailed(name));
        }
        Ok(NamedConstruction { name, process, alice, bob, expected })
    }
}

fn delta_instrument<T: Scalar>(
    party: Party,
    dims: OpDims,
    n_outcomes: usize,
    n_settings: usize,
    // (a, x, i, o', i', o) -> included?
    f: impl Fn(usize, usize, usize, usize, usize, usize) -> bool,
) -> Instrument<T> {
    let axes = dims.axes(party);
    let mut elements = Vec::with_capacity(n_outcomes * n_settings);
    for a in 0..n_outcomes {
        for x in 0..n_settings {
            elements.push(LabeledTensor::from_fn(axes.clone(), |idx| {
                if f(a, x, idx[0], idx[1], idx[2], idx[3]) {
                    T::one()
                } else {
                    T::zero()
                }
            }));
        }
    }
    Instrument::new(party, n_outcomes, n_settings, dims, elements).expect("delta instrument")
}

// ---------------------------------------------------------------------------
// state preparation (diamond) and one-way channel (triangle)
// ---------------------------------------------------------------------------

/// Joint state preparation: W = δ_{I'_A,φ} δ_{I'_B,φ} P_{O_A O_B|I_A I_B}.
/// Valid for any payload box; nonsignaling-preserving iff the payload is
/// nonsignaling. The primed wires are trivial (φ is a cardinality-1 axis).
pub fn w_diamond<T: Scalar>(payload: &LabeledTensor<T>) -> Result<ProcessTensor<T>, ConstructionError> {
    if !is_box(payload)? {
        return Err(ConstructionError::WrongKind("diamond payload must be a box".to_string()));
    }
    let d_oa = payload.cardinality("O_A")?;
    let d_ob = payload.cardinality("O_B")?;
    let d_ia = payload.cardinality("I_A")?;
    let d_ib = payload.cardinality("I_B")?;
    let dims = ProcessDims {
        alice: OpDims { d_in: d_ia, d_out_prime: 1, d_in_prime: 1, d_out: d_oa },
        bob: OpDims { d_in: d_ib, d_out_prime: 1, d_in_prime: 1, d_out: d_ob },
    };
    let p = payload.clone();
    let pos = ["O_A", "O_B", "I_A", "I_B"].map(|n| p.axis_pos(n).unwrap());
    let t = LabeledTensor::from_fn(dims.axes(), move |idx| {
        // process axes order: I'_A, O_A, I'_B, O_B, I_A, O'_A, I_B, O'_B
        let mut pidx = [0usize; 4];
        for (slot, &v) in pos.iter().zip([idx[1], idx[3], idx[4], idx[6]].iter()) {
            pidx[*slot] = v;
        }
        p.get(&pidx).clone()
    });
    Ok(ProcessTensor::new(t)?)
}

/// The readout instruments paired with the diamond process:
/// T = δ_{I,X} δ_{O',φ} δ_{A,O}.
pub fn t_diamond<T: Scalar>(party: Party) -> Instrument<T> {
    let dims = OpDims { d_in: 2, d_out_prime: 1, d_in_prime: 1, d_out: 2 };
    delta_instrument(party, dims, 2, 2, |a, x, i, _op, _ip, o| i == x && a == o)
}

/// The perfect two-way-signaling correlation δ_{A,Y} δ_{B,X}.
pub fn two_way_signaling_correlation<T: Scalar>() -> Correlation<T> {
    Correlation::from_fn((2, 2, 2, 2), |a, b, x, y| {
        if a == y && b == x {
            T::one()
        } else {
            T::zero()
        }
    })
    .expect("deterministic correlation")
}

/// One-way identity channel from Alice's output space to Bob's input space:
/// W = δ_{I'_A,I_B} δ_{O_A,φ} δ_{I'_B,φ} δ_{O_B,O'_A}. Nonsignaling-preserving
/// but able to generate perfect two-way signaling, hence not a boxworld process.
pub fn w_triangle<T: Scalar>() -> ProcessTensor<T> {
    let dims = ProcessDims {
        alice: OpDims { d_in: 1, d_out_prime: 2, d_in_prime: 2, d_out: 1 },
        bob: OpDims { d_in: 2, d_out_prime: 1, d_in_prime: 1, d_out: 2 },
    };
    let t = LabeledTensor::from_fn(dims.axes(), |idx| {
        // I'_A, O_A, I'_B, O_B, I_A, O'_A, I_B, O'_B
        if idx[0] == idx[6] && idx[3] == idx[5] {
            T::one()
        } else {
            T::zero()
        }
    });
    ProcessTensor::new(t).expect("triangle layout")
}

/// Alice's triangle instrument: sends X out, reports the received wire.
pub fn t_triangle_a<T: Scalar>() -> Instrument<T> {
    let dims = OpDims { d_in: 1, d_out_prime: 2, d_in_prime: 2, d_out: 1 };
    delta_instrument(Party::A, dims, 2, 2, |a, x, _i, op, ip, _o| op == x && a == ip)
}

/// Bob's triangle instrument: feeds Y in, reports the output wire.
pub fn t_triangle_b<T: Scalar>() -> Instrument<T> {
    let dims = OpDims { d_in: 2, d_out_prime: 1, d_in_prime: 1, d_out: 2 };
    delta_instrument(Party::B, dims, 2, 2, |b, y, i, _op, _ip, o| i == y && b == o)
}

/// The triangle triple as a checked construction reproducing δ_{A,Y} δ_{B,X}.
pub fn triangle<T: Scalar>() -> Result<NamedConstruction<T>, ConstructionError> {
    NamedConstruction::checked(
        "triangle".to_string(),
        w_triangle(),
        t_triangle_a(),
        t_triangle_b(),
        two_way_signaling_correlation(),
    )
}

/// The diamond triple loaded with the perfect two-way-signaling box.
pub fn diamond_2sig<T: Scalar>() -> Result<NamedConstruction<T>, ConstructionError> {
    let payload = LabeledTensor::from_fn(
        vec![
            crate::tensor::AxisSpec::output("O_A", 2),
            crate::tensor::AxisSpec::output("O_B", 2),
            crate::tensor::AxisSpec::input("I_A", 2),
            crate::tensor::AxisSpec::input("I_B", 2),
        ],
        |idx| {
            if idx[0] == idx[3] && idx[1] == idx[2] {
                T::one()
            } else {
                T::zero()
            }
        },
    );
    NamedConstruction::checked(
        "diamond_2sig".to_string(),
        w_diamond(&payload)?,
        t_diamond(Party::A),
        t_diamond(Party::B),
        two_way_signaling_correlation(),
    )
}

// ---------------------------------------------------------------------------
// GYNI (bit), value 2/3
// ---------------------------------------------------------------------------

/// The bit-scenario GYNI process: conditioned on (O'_A, O'_B), a (1/3, 2/3)
/// mixture of a swap-constant box and a parameterized PR box.
pub fn w_gyni_bit<T: Scalar>() -> ProcessTensor<T> {
    let dims = ProcessDims {
        alice: OpDims { d_in: 2, d_out_prime: 2, d_in_prime: 1, d_out: 2 },
        bob: OpDims { d_in: 2, d_out_prime: 2, d_in_prime: 1, d_out: 2 },
    };
    let third = T::from_ratio(1, 3);
    let pr_weight = T::from_ratio(1, 3); // (2/3)·(1/2)
    let t = LabeledTensor::from_fn(dims.axes(), move |idx| {
        let (oa, ob, ia, opa, ib, opb) = (idx[1], idx[3], idx[4], idx[5], idx[6], idx[7]);
        let mut v = T::zero();
        if oa == opb && ob == opa {
            v = v + third.clone();
        }
        let parity = oa ^ ob ^ opa ^ opb ^ 1;
        let target = ((ia ^ opa ^ 1) * (ib ^ opb ^ 1)) % 2;
        if parity == target {
            v = v + pr_weight.clone();
        }
        v
    });
    ProcessTensor::new(t).expect("gyni-bit layout")
}

/// GYNI instruments: T = δ_{I,X} δ_{O',X} δ_{A,O} (same shape both parties).
pub fn t_gyni_bit<T: Scalar>(party: Party) -> Instrument<T> {
    let dims = OpDims { d_in: 2, d_out_prime: 2, d_in_prime: 1, d_out: 2 };
    delta_instrument(party, dims, 2, 2, |a, x, i, op, _ip, o| i == x && op == x && a == o)
}

/// GYNI = 2/3 construction: correlation (2/3)·δ_{A,Y}δ_{B,X} + (1/3)·flipped.
pub fn gyni_bit<T: Scalar>() -> Result<NamedConstruction<T>, ConstructionError> {
    let expected = Correlation::from_fn((2, 2, 2, 2), |a, b, x, y| {
        let mut v = T::zero();
        if a == y && b == x {
            v = v + T::from_ratio(2, 3);
        }
        if (a ^ 1) == y && (b ^ 1) == x {
            v = v + T::from_ratio(1, 3);
        }
        v
    })?;
    NamedConstruction::checked(
        "gyni_bit".to_string(),
        w_gyni_bit(),
        t_gyni_bit(Party::A),
        t_gyni_bit(Party::B),
        expected,
    )
}

// ---------------------------------------------------------------------------
// GYNI (trit), value 3/4
// ---------------------------------------------------------------------------

/// The trit-GYNI process table, transcribed literally: one block per
/// (O'_A, O'_B); within a block, rows are (O_A, O_B) with O_B ternary and
/// columns (I_A, I_B); entries are quarters. No closed form is known.
const GYNI_TRIT_QUARTERS: [[[u8; 4]; 6]; 9] = [
    // (O'_A, O'_B) = (0,0)
    [[1, 2, 0, 2], [1, 0, 2, 0], [0, 0, 0, 0], [1, 2, 2, 2], [1, 0, 0, 0], [0, 0, 0, 0]],
    // (0,1)
    [[1, 2, 2, 4], [1, 0, 2, 0], [0, 0, 0, 0], [1, 2, 0, 0], [1, 0, 0, 0], [0, 0, 0, 0]],
    // (0,2)
    [[1, 2, 2, 2], [1, 0, 0, 0], [0, 0, 0, 0], [1, 2, 0, 2], [1, 0, 2, 0], [0, 0, 0, 0]],
    // (1,0)
    [[1, 0, 0, 0], [1, 0, 2, 0], [0, 2, 0, 2], [1, 2, 2, 2], [1, 0, 0, 0], [0, 0, 0, 0]],
    // (1,1)
    [[1, 0, 2, 2], [1, 0, 2, 0], [0, 2, 0, 2], [1, 2, 0, 0], [1, 0, 0, 0], [0, 0, 0, 0]],
    // (1,2)
    [[1, 0, 2, 0], [1, 0, 0, 0], [0, 2, 0, 2], [1, 2, 0, 2], [1, 0, 2, 0], [0, 0, 0, 0]],
    // (2,0)
    [[1, 2, 0, 0], [1, 0, 2, 0], [0, 0, 0, 2], [1, 0, 2, 2], [1, 0, 0, 0], [0, 2, 0, 0]],
    // (2,1)
    [[1, 2, 2, 2], [1, 0, 2, 0], [0, 0, 0, 2], [1, 0, 0, 0], [1, 0, 0, 0], [0, 2, 0, 0]],
    // (2,2)
    [[1, 2, 2, 0], [1, 0, 0, 0], [0, 0, 0, 2], [1, 0, 0, 2], [1, 0, 2, 0], [0, 2, 0, 0]],
];

/// Per-block column checksum of the table: every (O'_A, O'_B, I_A, I_B) slice
/// is a distribution over the six (O_A, O_B) outputs.
pub fn gyni_trit_table_checksums_ok() -> bool {
    GYNI_TRIT_QUARTERS.iter().all(|block| {
        (0..4).all(|col| block.iter().map(|row| row[col] as u32).sum::<u32>() == 4)
    })
}

/// The trit-GYNI process: O'_A, O_B, O'_B augmented to {0,1,2}.
pub fn w_gyni_trit<T: Scalar>() -> ProcessTensor<T> {
    let dims = ProcessDims {
        alice: OpDims { d_in: 2, d_out_prime: 3, d_in_prime: 1, d_out: 2 },
        bob: OpDims { d_in: 2, d_out_prime: 3, d_in_prime: 1, d_out: 3 },
    };
    let t = LabeledTensor::from_fn(dims.axes(), |idx| {
        let (oa, ob, ia, opa, ib, opb) = (idx[1], idx[3], idx[4], idx[5], idx[6], idx[7]);
        let block = &GYNI_TRIT_QUARTERS[opa * 3 + opb];
        let q = block[oa * 3 + ob][ia * 2 + ib];
        T::from_ratio(q as i64, 4)
    });
    ProcessTensor::new(t).expect("gyni-trit layout")
}

/// Alice's trit-GYNI operation: (X, O_A) -> (A, O'_A, I_A) lookup table.
pub fn t_gyni_trit_a<T: Scalar>() -> Instrument<T> {
    const TABLE: [(usize, usize, usize); 4] = [(1, 1, 0), (1, 2, 0), (1, 0, 1), (0, 2, 1)];
    let dims = OpDims { d_in: 2, d_out_prime: 3, d_in_prime: 1, d_out: 2 };
    delta_instrument(Party::A, dims, 2, 2, |a, x, i, op, _ip, o| {
        let (ta, top, ti) = TABLE[x * 2 + o];
        a == ta && op == top && i == ti
    })
}

/// Bob's trit-GYNI operation: (Y, O_B) -> (B, O'_B, I_B) lookup table.
pub fn t_gyni_trit_b<T: Scalar>() -> Instrument<T> {
    const TABLE: [(usize, usize, usize); 6] =
        [(1, 0, 0), (1, 2, 0), (0, 0, 0), (1, 1, 1), (1, 1, 1), (0, 0, 1)];
    let dims = OpDims { d_in: 2, d_out_prime: 3, d_in_prime: 1, d_out: 3 };
    delta_instrument(Party::B, dims, 2, 2, |b, y, i, op, _ip, o| {
        let (tb, top, ti) = TABLE[y * 3 + o];
        b == tb && op == top && i == ti
    })
}

/// GYNI = 3/4 construction: correlation δ_{A, X(Y⊕1)⊕1} δ_{B, (X⊕1)Y⊕1};
/// only X = Y = 0 misses the guess.
pub fn gyni_trit<T: Scalar>() -> Result<NamedConstruction<T>, ConstructionError> {
    let expected = Correlation::from_fn((2, 2, 2, 2), |a, b, x, y| {
        let ta = (x * (y ^ 1)) ^ 1;
        let tb = ((x ^ 1) * y) ^ 1;
        if a == ta && b == tb {
            T::one()
        } else {
            T::zero()
        }
    })?;
    NamedConstruction::checked(
        "gyni_trit".to_string(),
        w_gyni_trit(),
        t_gyni_trit_a(),
        t_gyni_trit_b(),
        expected,
    )
}

// ---------------------------------------------------------------------------
// LGYNI, value 11/12
// ---------------------------------------------------------------------------

/// The LGYNI process: (1/3, 2/3) mixture of a box with LGYNI functionality
/// and a PR-like box whose parity target depends on (O'_A, O'_B).
pub fn w_lgyni<T: Scalar>() -> ProcessTensor<T> {
    let dims = ProcessDims {
        alice: OpDims { d_in: 2, d_out_prime: 2, d_in_prime: 1, d_out: 2 },
        bob: OpDims { d_in: 2, d_out_prime: 2, d_in_prime: 1, d_out: 2 },
    };
    let t = LabeledTensor::from_fn(dims.axes(), |idx| {
        let (oa, ob, ia, opa, ib, opb) = (idx[1], idx[3], idx[4], idx[5], idx[6], idx[7]);
        let mut v = T::zero();
        if oa == ia * opb && ob == ib * opa {
            v = v + T::from_ratio(1, 3);
        }
        let target = match (opa, opb) {
            (0, 0) => ia * ib,
            (0, 1) => ia * (ib ^ 1),
            (1, 0) => ia ^ 1,
            _ => (ia * ib) ^ 1,
        };
        if (oa ^ ob) == target {
            v = v + T::from_ratio(1, 3); // (2/3)·(1/2)
        }
        v
    });
    ProcessTensor::new(t).expect("lgyni layout")
}

/// LGYNI instruments: T = δ_{I,X} δ_{O',O} δ_{A,X·O}.
pub fn t_lgyni<T: Scalar>(party: Party) -> Instrument<T> {
    let dims = OpDims { d_in: 2, d_out_prime: 2, d_in_prime: 1, d_out: 2 };
    delta_instrument(party, dims, 2, 2, |a, x, i, op, _ip, o| i == x && op == o && a == x * o)
}

/// LGYNI = 11/12 construction: correlation (1/3)δ_{A,0}δ_{B,0} + (2/3)δ_{A,XY}δ_{B,XY}.
pub fn lgyni_construction<T: Scalar>() -> Result<NamedConstruction<T>, ConstructionError> {
    let expected = Correlation::from_fn((2, 2, 2, 2), |a, b, x, y| {
        let mut v = T::zero();
        if a == 0 && b == 0 {
            v = v + T::from_ratio(1, 3);
        }
        if a == x * y && b == x * y {
            v = v + T::from_ratio(2, 3);
        }
        v
    })?;
    NamedConstruction::checked(
        "lgyni".to_string(),
        w_lgyni(),
        t_lgyni(Party::A),
        t_lgyni(Party::B),
        expected,
    )
}

// ---------------------------------------------------------------------------
// OCB, value 1
// ---------------------------------------------------------------------------

/// The OCB process: a relabeled PR box for fixed (O'_A, O'_B):
/// W = 1/2 · δ_{O_A ⊕ O_B ⊕ O'_B, (I_A ⊕ O'_A ⊕ O'_B)·I_B}.
pub fn w_ocb<T: Scalar>() -> ProcessTensor<T> {
    let dims = ProcessDims {
        alice: OpDims { d_in: 2, d_out_prime: 2, d_in_prime: 1, d_out: 2 },
        bob: OpDims { d_in: 2, d_out_prime: 2, d_in_prime: 1, d_out: 2 },
    };
    let t = LabeledTensor::from_fn(dims.axes(), |idx| {
        let (oa, ob, ia, opa, ib, opb) = (idx[1], idx[3], idx[4], idx[5], idx[6], idx[7]);
        if (oa ^ ob ^ opb) == ((ia ^ opa ^ opb) * ib) % 2 {
            T::from_ratio(1, 2)
        } else {
            T::zero()
        }
    });
    ProcessTensor::new(t).expect("ocb layout")
}

/// Alice's OCB operation: T = δ_{I_A,0} δ_{O'_A, O_A ⊕ X} δ_{A, O_A}.
pub fn t_ocb_a<T: Scalar>() -> Instrument<T> {
    let dims = OpDims { d_in: 2, d_out_prime: 2, d_in_prime: 1, d_out: 2 };
    delta_instrument(Party::A, dims, 2, 2, |a, x, i, op, _ip, o| i == 0 && op == (o ^ x) && a == o)
}

/// Bob's OCB operation with the 4-valued setting s = 2y + y':
/// T = δ_{I_B, y'} δ_{O'_B, O_B ⊕ y} δ_{B, O_B}.
pub fn t_ocb_b<T: Scalar>() -> Instrument<T> {
    let dims = OpDims { d_in: 2, d_out_prime: 2, d_in_prime: 1, d_out: 2 };
    delta_instrument(Party::B, dims, 2, 4, |b, s, i, op, _ip, o| {
        let (y, yp) = (s >> 1, s & 1);
        i == yp && op == (o ^ y) && b == o
    })
}

/// OCB = 1 construction; the winning correlation is 1/2·δ_{A,Y} for y' = 0 and
/// 1/2·δ_{B,X} for y' = 1 — nondeterministic, with marginals P(A=Y)=P(B=X)=3/4.
pub fn ocb_construction<T: Scalar>() -> Result<NamedConstruction<T>, ConstructionError> {
    let expected = Correlation::from_fn((2, 2, 2, 4), |a, b, x, s| {
        let (y, yp) = (s >> 1, s & 1);
        let hit = if yp == 0 { a == y } else { b == x };
        if hit {
            T::from_ratio(1, 2)
        } else {
            T::zero()
        }
    })?;
    NamedConstruction::checked(
        "ocb".to_string(),
        w_ocb(),
        t_ocb_a(),
        t_ocb_b(),
        expected,
    )
}

// ---------------------------------------------------------------------------
// catalog
// ---------------------------------------------------------------------------

pub const CATALOG: [&str; 6] = ["diamond_2sig", "triangle", "gyni_bit", "gyni_trit", "lgyni", "ocb"];

pub fn by_name<T: Scalar>(name: &str) -> Option<Result<NamedConstruction<T>, ConstructionError>> {
    match name {
        "diamond_2sig" => Some(diamond_2sig()),
        "triangle" => Some(triangle()),
        "gyni_bit" => Some(gyni_bit()),
        "gyni_trit" => Some(gyni_trit()),
        "lgyni" => Some(lgyni_construction()),
        "ocb" => Some(ocb_construction()),
        _ => None,
    }
}

// ---------------------------------------------------------------------------
// realization of causal correlations
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CausalKind {
    AliceFirst,
    BobFirst,
    NonSignaling,
    /// Convex mixture of both orders, realized with a flag wire per party.
    Mixture,
}

/// Greedy exact decomposition of a stochastic map P(a|x) into deterministic
/// functions with convex weights.
fn stochastic_decomposition<T: Scalar>(p: &[Vec<T>]) -> Vec<(T, Vec<usize>)> {
    let nx = p.len();
    let mut rem: Vec<Vec<T>> = p.to_vec();
    let mut out = Vec::new();
    // at most one entry of `rem` hits zero per round
    let max_rounds = nx * p[0].len() + 1;
    for _ in 0..max_rounds {
        let mut f = Vec::with_capacity(nx);
        let mut ok = true;
        for row in rem.iter() {
            let mut best: Option<(usize, T)> = None;
            for (a, v) in row.iter().enumerate() {
                if !v.is_zero_tol() && v.clone() > T::zero() {
                    match &best {
                        None => best = Some((a, v.clone())),
                        Some((_, b)) if v > b => best = Some((a, v.clone())),
                        _ => {}
                    }
                }
            }
            match best {
                Some((a, _)) => f.push(a),
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            break;
        }
        let mut weight = rem[0][f[0]].clone();
        for (x, &a) in f.iter().enumerate() {
            if rem[x][a] < weight {
                weight = rem[x][a].clone();
            }
        }
        for (x, &a) in f.iter().enumerate() {
            rem[x][a] = rem[x][a].clone() - weight.clone();
        }
        out.push((weight, f));
        if rem.iter().all(|row| row.iter().all(|v| v.is_zero_tol())) {
            break;
        }
    }
    out
}

struct OrderedPieces<T> {
    /// sender marginal P(out|setting), indexed [setting][outcome]
    marginal: Vec<Vec<T>>,
    decomposition: Vec<(T, Vec<usize>)>,
}

fn ordered_pieces<T: Scalar>(
    p: &Correlation<T>,
    kind: OneWayKind,
) -> Result<OrderedPieces<T>, ConstructionError> {
    let (na, nb, nx, ny) = p.cards();
    let (n_out, n_set, n_avg) = match kind {
        OneWayKind::AliceFirst => (na, nx, ny),
        OneWayKind::BobFirst => (nb, ny, nx),
    };
    let mut marginal = vec![vec![T::zero(); n_out]; n_set];
    for a in 0..na {
        for b in 0..nb {
            for x in 0..nx {
                for y in 0..ny {
                    let (s, o) = match kind {
                        OneWayKind::AliceFirst => (x, a),
                        OneWayKind::BobFirst => (y, b),
                    };
                    marginal[s][o] = marginal[s][o].clone() + p.value(a, b, x, y);
                }
            }
        }
    }
    let inv = T::from_i64(n_avg as i64).recip();
    for row in &mut marginal {
        for v in row.iter_mut() {
            *v = v.clone() * inv.clone();
        }
    }
    let decomposition = stochastic_decomposition(&marginal);
    Ok(OrderedPieces { marginal, decomposition })
}

/// Conditional P(receiver-out | sender-out, sender-setting, receiver-setting),
/// uniform where the sender marginal vanishes (those messages never occur).
fn conditional<T: Scalar>(
    p: &Correlation<T>,
    kind: OneWayKind,
    pieces: &OrderedPieces<T>,
    recv_out: usize,
    send_out: usize,
    send_set: usize,
    recv_set: usize,
) -> T {
    let pa = pieces.marginal[send_set][send_out].clone();
    let n_recv_out = match kind {
        OneWayKind::AliceFirst => p.cards().1,
        OneWayKind::BobFirst => p.cards().0,
    };
    if pa.is_zero_tol() {
        return T::from_ratio(1, n_recv_out as i64);
    }
    let joint = match kind {
        OneWayKind::AliceFirst => p.value(send_out, recv_out, send_set, recv_set),
        OneWayKind::BobFirst => p.value(recv_out, send_out, recv_set, send_set),
    };
    joint / pa
}

fn realize_one_way<T: Scalar>(
    p: &Correlation<T>,
    kind: OneWayKind,
) -> Result<NamedConstruction<T>, ConstructionError> {
    let (na, nb, nx, ny) = p.cards();
    let pieces = ordered_pieces(p, kind)?;
    let (n_send_out, n_send_set) = match kind {
        OneWayKind::AliceFirst => (na, nx),
        OneWayKind::BobFirst => (nb, ny),
    };
    let msg = n_send_out * n_send_set;
    let enc = move |set: usize, out: usize| set * n_send_out + out;

    // wire layouts: sender holds O' of cardinality msg, receiver holds I' of msg
    let (alice_dims, bob_dims) = match kind {
        OneWayKind::AliceFirst => (
            OpDims { d_in: 1, d_out_prime: msg, d_in_prime: 1, d_out: 1 },
            OpDims { d_in: 1, d_out_prime: 1, d_in_prime: msg, d_out: 1 },
        ),
        OneWayKind::BobFirst => (
            OpDims { d_in: 1, d_out_prime: 1, d_in_prime: msg, d_out: 1 },
            OpDims { d_in: 1, d_out_prime: msg, d_in_prime: 1, d_out: 1 },
        ),
    };
    let dims = ProcessDims { alice: alice_dims, bob: bob_dims };
    let w = LabeledTensor::from_fn(dims.axes(), |idx| {
        // I'_A, O_A, I'_B, O_B, I_A, O'_A, I_B, O'_B
        let hit = match kind {
            OneWayKind::AliceFirst => idx[2] == idx[5],
            OneWayKind::BobFirst => idx[0] == idx[7],
        };
        if hit {
            T::one()
        } else {
            T::zero()
        }
    });
    let process = ProcessTensor::new(w)?;

    // sender instrument: weight on O' = enc(set, out) from the decomposition
    let sender_axes = match kind {
        OneWayKind::AliceFirst => alice_dims.axes(Party::A),
        OneWayKind::BobFirst => bob_dims.axes(Party::B),
    };
    let mut sender_elements = Vec::new();
    for out in 0..n_send_out {
        for set in 0..n_send_set {
            sender_elements.push(LabeledTensor::from_fn(sender_axes.clone(), |idx| {
                let opv = idx[1];
                let mut v = T::zero();
                if opv == enc(set, out) {
                    for (w, f) in &pieces.decomposition {
                        if f[set] == out {
                            v = v.clone() + w.clone();
                        }
                    }
                }
                v
            }));
        }
    }
    // receiver instrument: read the message from I', emit the conditional
    let receiver_axes = match kind {
        OneWayKind::AliceFirst => bob_dims.axes(Party::B),
        OneWayKind::BobFirst => alice_dims.axes(Party::A),
    };
    let (n_recv_out, n_recv_set) = match kind {
        OneWayKind::AliceFirst => (nb, ny),
        OneWayKind::BobFirst => (na, nx),
    };
    let mut receiver_elements = Vec::new();
    for out in 0..n_recv_out {
        for set in 0..n_recv_set {
            receiver_elements.push(LabeledTensor::from_fn(receiver_axes.clone(), |idx| {
                let m = idx[2];
                let (send_set, send_out) = (m / n_send_out, m % n_send_out);
                conditional(p, kind, &pieces, out, send_out, send_set, set)
            }));
        }
    }
    let (alice, bob) = match kind {
        OneWayKind::AliceFirst => (
            Instrument::new(Party::A, na, nx, alice_dims, sender_elements)?,
            Instrument::new(Party::B, nb, ny, bob_dims, receiver_elements)?,
        ),
        OneWayKind::BobFirst => (
            Instrument::new(Party::A, na, nx, alice_dims, receiver_elements)?,
            Instrument::new(Party::B, nb, ny, bob_dims, sender_elements)?,
        ),
    };
    let name = match kind {
        OneWayKind::AliceFirst => "realize_a_first",
        OneWayKind::BobFirst => "realize_b_first",
    };
    NamedConstruction::checked(name.to_string(), process, alice, bob, p.clone())
}

fn realize_nonsignaling<T: Scalar>(
    p: &Correlation<T>,
) -> Result<NamedConstruction<T>, ConstructionError> {
    let (na, nb, nx, ny) = p.cards();
    let dims = ProcessDims {
        alice: OpDims { d_in: nx, d_out_prime: 1, d_in_prime: 1, d_out: na },
        bob: OpDims { d_in: ny, d_out_prime: 1, d_in_prime: 1, d_out: nb },
    };
    let w = LabeledTensor::from_fn(dims.axes(), |idx| {
        p.value(idx[1], idx[3], idx[4], idx[6])
    });
    let process = ProcessTensor::new(w)?;
    let alice = delta_instrument(Party::A, dims.alice, na, nx, |a, x, i, _op, _ip, o| i == x && a == o);
    let bob = delta_instrument(Party::B, dims.bob, nb, ny, |b, y, i, _op, _ip, o| i == y && b == o);
    NamedConstruction::checked("realize_nonsignaling".to_string(), process, alice, bob, p.clone())
}

fn realize_mixture<T: Scalar>(
    p: &Correlation<T>,
) -> Result<NamedConstruction<T>, ConstructionError> {
    let Some(weights) = causal_decomposition(p)? else {
        return Err(ConstructionError::WrongKind("correlation is not causal".to_string()));
    };
    let mut q = T::zero();
    let mut p_ab = LabeledTensor::constant(p.tensor().axes().to_vec(), T::zero());
    let mut rest = LabeledTensor::constant(p.tensor().axes().to_vec(), T::zero());
    for (kind, vert, w) in &weights.weights {
        let scaled = vert.tensor().permuted_like(&p_ab)?.scale(w);
        match kind {
            OneWayKind::AliceFirst => {
                q = q + w.clone();
                p_ab = p_ab.add(&scaled)?;
            }
            OneWayKind::BobFirst => {
                rest = rest.add(&scaled)?;
            }
        }
    }
    if q.is_zero_tol() {
        return realize_one_way(p, OneWayKind::BobFirst);
    }
    if (T::one() - q.clone()).is_zero_tol() {
        return realize_one_way(p, OneWayKind::AliceFirst);
    }
    let pab = Correlation::new(p_ab.scale(&q.recip()))?;
    let pba = Correlation::new(rest.scale(&(T::one() - q.clone()).recip()))?;
    let (na, nb, nx, ny) = p.cards();
    let m_a = na * nx; // Alice-side message (x, a)
    let m_b = nb * ny; // Bob-side message (y, b)
    let enc_a = move |x: usize, a: usize| x * na + a;
    let enc_b = move |y: usize, b: usize| y * nb + b;

    let alice_dims = OpDims { d_in: 1, d_out_prime: m_a, d_in_prime: 2 * m_b, d_out: 1 };
    let bob_dims = OpDims { d_in: 1, d_out_prime: m_b, d_in_prime: 2 * m_a, d_out: 1 };
    let dims = ProcessDims { alice: alice_dims, bob: bob_dims };

    // W = q·[flags 0, Bob hears Alice] + (1-q)·[flags 1, Alice hears Bob];
    // a party's I' packs (flag, message) as flag·m + message
    let q2 = q.clone();
    let w = LabeledTensor::from_fn(dims.axes(), move |idx| {
        let (ipa, ipb, opa, opb) = (idx[0], idx[2], idx[5], idx[7]);
        let mut v = T::zero();
        if ipa == 0 && ipb == opa {
            v = v + q2.clone();
        }
        if ipa == m_b + opb && ipb == m_a {
            v = v + (T::one() - q2.clone());
        }
        v
    });
    let process = ProcessTensor::new(w)?;

    let pieces_ab = ordered_pieces(&pab, OneWayKind::AliceFirst)?;
    let pieces_ba = ordered_pieces(&pba, OneWayKind::BobFirst)?;

    let mut alice_elements = Vec::new();
    for a in 0..na {
        for x in 0..nx {
            let pba_ref = &pba;
            let pieces = &pieces_ab;
            let pieces_b = &pieces_ba;
            alice_elements.push(LabeledTensor::from_fn(alice_dims.axes(Party::A), |idx| {
                let (opa, ipa) = (idx[1], idx[2]);
                let flag = ipa / m_b;
                let msg = ipa % m_b;
                if flag == 0 {
                    // Alice acts first: send (x, a) with the decomposition weight
                    let mut v = T::zero();
                    if opa == enc_a(x, a) {
                        for (w, f) in &pieces.decomposition {
                            if f[x] == a {
                                v = v.clone() + w.clone();
                            }
                        }
                    }
                    v
                } else {
                    // Bob acted first: msg = (y, b); emit P(a | b, y, x)
                    if opa != 0 {
                        return T::zero();
                    }
                    let (y, b) = (msg / nb, msg % nb);
                    conditional(pba_ref, OneWayKind::BobFirst, pieces_b, a, b, y, x)
                }
            }));
        }
    }
    let mut bob_elements = Vec::new();
    for b in 0..nb {
        for y in 0..ny {
            let pab_ref = &pab;
            let pieces = &pieces_ba;
            let pieces_a = &pieces_ab;
            bob_elements.push(LabeledTensor::from_fn(bob_dims.axes(Party::B), |idx| {
                let (opb, ipb) = (idx[1], idx[2]);
                let flag = ipb / m_a;
                let msg = ipb % m_a;
                if flag == 0 {
                    // Alice acted first: msg = (x, a); emit P(b | a, x, y)
                    if opb != 0 {
                        return T::zero();
                    }
                    let (x, a) = (msg / na, msg % na);
                    conditional(pab_ref, OneWayKind::AliceFirst, pieces_a, b, a, x, y)
                } else {
                    let mut v = T::zero();
                    if opb == enc_b(y, b) {
                        for (w, f) in &pieces.decomposition {
                            if f[y] == b {
                                v = v.clone() + w.clone();
                            }
                        }
                    }
                    v
                }
            }));
        }
    }
    let alice = Instrument::new(Party::A, na, nx, alice_dims, alice_elements)?;
    let bob = Instrument::new(Party::B, nb, ny, bob_dims, bob_elements)?;
    NamedConstruction::checked("realize_mixture".to_string(), process, alice, bob, p.clone())
}

/// Realizes a causal correlation with a process of the matching causal class.
/// The correlation must actually be of the claimed kind.
pub fn realize_causal<T: Scalar>(
    p: &Correlation<T>,
    kind: CausalKind,
) -> Result<NamedConstruction<T>, ConstructionError> {
    let profile = signaling_profile(p)?.profile;
    match kind {
        CausalKind::AliceFirst => {
            if !matches!(profile, SignalingProfile::NonSignaling | SignalingProfile::AliceToBobOnly) {
                return Err(ConstructionError::WrongKind("signaling from B to A present".to_string()));
            }
            realize_one_way(p, OneWayKind::AliceFirst)
        }
        CausalKind::BobFirst => {
            if !matches!(profile, SignalingProfile::NonSignaling | SignalingProfile::BobToAliceOnly) {
                return Err(ConstructionError::WrongKind("signaling from A to B present".to_string()));
            }
            realize_one_way(p, OneWayKind::BobFirst)
        }
        CausalKind::NonSignaling => {
            if profile != SignalingProfile::NonSignaling {
                return Err(ConstructionError::WrongKind("correlation is signaling".to_string()));
            }
            realize_nonsignaling(p)
        }
        CausalKind::Mixture => realize_mixture(p),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{rat, Rat};

    #[test]
    fn trit_table_columns_are_distributions() {
        assert!(gyni_trit_table_checksums_ok());
    }

    #[test]
    fn catalog_constructions_self_check() {
        for name in CATALOG {
            let c = by_name::<Rat>(name).unwrap().unwrap();
            assert_eq!(c.name, name);
        }
    }

    #[test]
    fn diamond_rejects_non_box_payload() {
        let bad = LabeledTensor::<Rat>::constant(
            vec![
                crate::tensor::AxisSpec::output("O_A", 2),
                crate::tensor::AxisSpec::output("O_B", 2),
                crate::tensor::AxisSpec::input("I_A", 2),
                crate::tensor::AxisSpec::input("I_B", 2),
            ],
            rat(1, 3),
        );
        assert!(matches!(w_diamond(&bad), Err(ConstructionError::WrongKind(_))));
    }

    #[test]
    fn uniform_payload_gives_uniform_correlation() {
        let uniform = LabeledTensor::<Rat>::constant(
            vec![
                crate::tensor::AxisSpec::output("O_A", 2),
                crate::tensor::AxisSpec::output("O_B", 2),
                crate::tensor::AxisSpec::input("I_A", 2),
                crate::tensor::AxisSpec::input("I_B", 2),
            ],
            rat(1, 4),
        );
        let w = w_diamond(&uniform).unwrap();
        let corr = born_rule(&w, &t_diamond(Party::A), &t_diamond(Party::B)).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                for x in 0..2 {
                    for y in 0..2 {
                        assert_eq!(corr.value(a, b, x, y), rat(1, 4));
                    }
                }
            }
        }
    }
}
