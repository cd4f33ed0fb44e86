//! Process tensors on the eight party wires and the full validator ladder:
//! general validity, nonsignaling preservation (NSP), no signaling without
//! system exchange (NSWSE / boxworld), causal order, the affine decomposition
//! into causally ordered parts, and the contraction rule producing correlations.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::boxes::{is_nonsignaling_box, ns_bit_vertices, BoxError};
use crate::inequalities::Correlation;
use crate::num::Scalar;
use crate::operations::{
    enumerate_det_components, Instrument, OpDims, OpError, Party,
};
use crate::report::Report;
use crate::subspace::ConstraintSystem;
use crate::tensor::{
    apply_rr_expr, contract, AxisSpec, LabeledTensor, Role, RrExpr, TensorError,
};

pub const ALICE_WIRES: [&str; 4] = ["I'_A", "I_A", "O_A", "O'_A"];
pub const BOB_WIRES: [&str; 4] = ["I'_B", "I_B", "O_B", "O'_B"];

/// Cardinalities of the eight wires of a bipartite process.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProcessDims {
    pub alice: OpDims,
    pub bob: OpDims,
}

impl ProcessDims {
    pub fn all(d: usize) -> Self {
        ProcessDims { alice: OpDims::all(d), bob: OpDims::all(d) }
    }

    /// Axis layout in the fixed order (I'_A, O_A, I'_B, O_B | I_A, O'_A, I_B, O'_B).
    pub fn axes(&self) -> Vec<AxisSpec> {
        vec![
            AxisSpec::output("I'_A", self.alice.d_in_prime),
            AxisSpec::output("O_A", self.alice.d_out),
            AxisSpec::output("I'_B", self.bob.d_in_prime),
            AxisSpec::output("O_B", self.bob.d_out),
            AxisSpec::input("I_A", self.alice.d_in),
            AxisSpec::input("O'_A", self.alice.d_out_prime),
            AxisSpec::input("I_B", self.bob.d_in),
            AxisSpec::input("O'_B", self.bob.d_out_prime),
        ]
    }

    /// Required total reduction: d_{I_A} d_{O'_A} d_{I_B} d_{O'_B}.
    pub fn norm(&self) -> i64 {
        (self.alice.d_in * self.alice.d_out_prime * self.bob.d_in * self.bob.d_out_prime) as i64
    }

    pub fn size(&self) -> usize {
        self.axes().iter().map(|a| a.cardinality).product()
    }

    pub fn from_tensor<T: Scalar>(t: &LabeledTensor<T>) -> Result<Self, ProcessError> {
        let card = |n: &str, role: Role| -> Result<usize, ProcessError> {
            let a = t
                .axis(n)
                .ok_or_else(|| ProcessError::AxisLayout(alloc::format!("missing wire {n}")))?;
            if a.role != role {
                return Err(ProcessError::AxisLayout(alloc::format!("wire {n} has the wrong role")));
            }
            Ok(a.cardinality)
        };
        if t.axes().len() != 8 {
            return Err(ProcessError::AxisLayout("expected exactly eight wires".to_string()));
        }
        Ok(ProcessDims {
            alice: OpDims {
                d_in: card("I_A", Role::Input)?,
                d_out_prime: card("O'_A", Role::Input)?,
                d_in_prime: card("I'_A", Role::Output)?,
                d_out: card("O_A", Role::Output)?,
            },
            bob: OpDims {
                d_in: card("I_B", Role::Input)?,
                d_out_prime: card("O'_B", Role::Input)?,
                d_in_prime: card("I'_B", Role::Output)?,
                d_out: card("O_B", Role::Output)?,
            },
        })
    }
}

#[derive(Clone, Debug)]
pub enum ProcessError {
    Tensor(TensorError),
    Box_(BoxError),
    Op(OpError),
    AxisLayout(String),
    /// The operation needed a valid (process/NSP/boxworld) tensor and got an invalid one.
    Invalid(String),
    /// affine_decompose needs the pivot wire to have cardinality >= 2.
    DegenerateDimension(String),
    Unsupported(String),
}

impl From<TensorError> for ProcessError {
    fn from(e: TensorError) -> Self {
        ProcessError::Tensor(e)
    }
}
impl From<BoxError> for ProcessError {
    fn from(e: BoxError) -> Self {
        ProcessError::Box_(e)
    }
}
impl From<OpError> for ProcessError {
    fn from(e: OpError) -> Self {
        ProcessError::Op(e)
    }
}
impl From<crate::inequalities::IneqError> for ProcessError {
    fn from(e: crate::inequalities::IneqError) -> Self {
        ProcessError::Invalid(alloc::format!("correlation: {e:?}"))
    }
}

/// Validity classes a process tensor can hold, cached after classification.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CausalClass {
    AliceFirst,
    BobFirst,
    NonSignaling,
    NoneOfOrdered,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClassTags {
    pub process: bool,
    pub nsp: bool,
    pub boxworld: bool,
    pub causal: Option<CausalClass>,
}

/// A tensor on the eight party wires with cached validator verdicts.
#[derive(Clone, Debug)]
pub struct ProcessTensor<T> {
    tensor: LabeledTensor<T>,
    dims: ProcessDims,
    tags: Option<ClassTags>,
}

impl<T: Scalar> ProcessTensor<T> {
    /// Wraps a tensor after checking only the axis layout; validity is separate.
    pub fn new(tensor: LabeledTensor<T>) -> Result<Self, ProcessError> {
        let dims = ProcessDims::from_tensor(&tensor)?;
        let reference = LabeledTensor::<T>::constant(dims.axes(), T::zero());
        let tensor = tensor.permuted_like(&reference)?;
        Ok(ProcessTensor { tensor, dims, tags: None })
    }

    pub fn tensor(&self) -> &LabeledTensor<T> {
        &self.tensor
    }

    pub fn dims(&self) -> ProcessDims {
        self.dims
    }

    pub fn tags(&self) -> Option<ClassTags> {
        self.tags
    }

    /// Runs the whole validator ladder once and caches the verdicts.
    pub fn classify(&mut self) -> Result<ClassTags, ProcessError> {
        if let Some(t) = self.tags {
            return Ok(t);
        }
        let process = validate_process_tensor(self)?.is_valid();
        let nsp = if process { satisfies_nsp(self)? } else { false };
        let boxworld = if nsp { is_boxworld_process(self)? } else { false };
        let causal = if boxworld { Some(causal_class(self)?) } else { None };
        let tags = ClassTags { process, nsp, boxworld, causal };
        self.tags = Some(tags);
        Ok(tags)
    }
}

// ---------------------------------------------------------------------------
// constraint expressions
// ---------------------------------------------------------------------------

/// The party polynomial (1 - O' + OO' - IOO') appearing in the validity projector.
fn party_poly(p: Party) -> RrExpr {
    let i = p.wire_in();
    let o = p.wire_out();
    let op = p.wire_out_prime();
    RrExpr::new(vec![(1, &[]), (-1, &[op]), (1, &[o, op]), (-1, &[i, o, op])])
}

fn wires_expr(wires: &[&str]) -> RrExpr {
    RrExpr::new(vec![(1, wires)])
}

/// Homogeneous constraints of a valid process tensor (the three nullity conditions).
pub fn process_constraints() -> Vec<RrExpr> {
    vec![
        wires_expr(&ALICE_WIRES).compose(&party_poly(Party::B)),
        party_poly(Party::A).compose(&wires_expr(&BOB_WIRES)),
        party_poly(Party::A).compose(&party_poly(Party::B)),
    ]
}

/// The NSP conditions on top of validity, as homogeneous expressions
/// (each is LHS - RHS of the corresponding pair of reduce-and-replace images).
pub fn nsp_constraints() -> Vec<RrExpr> {
    let group = ["O'_A", "O'_B", "I'_A", "I'_B"];
    let mut out = Vec::new();
    for p in [Party::A, Party::B] {
        let o = p.wire_out();
        let i = p.wire_in();
        let with_o = wires_expr(&[o]).compose(&wires_expr(&group));
        let with_oi = wires_expr(&[o, i]).compose(&wires_expr(&group));
        out.push(diff(&with_o, &with_oi));
    }
    for p in [Party::A, Party::B] {
        let o = p.wire_out();
        let i = p.wire_in();
        let op = p.wire_out_prime();
        let ip = p.wire_in_prime();
        let oq = p.other().wire_out_prime();
        let poly = RrExpr::new(vec![(1, &[]), (-1, &[op]), (1, &[op, ip]), (-1, &[oq, op, ip])]);
        let lhs = wires_expr(&[o]).compose(&poly);
        let rhs = wires_expr(&[o, i]).compose(&poly);
        out.push(diff(&lhs, &rhs));
    }
    out
}

/// The two NSWSE conditions _O W = _IO W per party.
pub fn nswse_constraints() -> Vec<RrExpr> {
    [Party::A, Party::B]
        .iter()
        .map(|p| {
            diff(
                &wires_expr(&[p.wire_out()]),
                &wires_expr(&[p.wire_out(), p.wire_in()]),
            )
        })
        .collect()
}

/// The simplified boxworld characterization (validity + NSWSE combined).
pub fn boxworld_constraints() -> Vec<RrExpr> {
    let mut out = vec![
        diff(
            &wires_expr(&ALICE_WIRES),
            &wires_expr(&["I'_A", "I_A", "O_A", "O'_A", "O'_B"]),
        ),
        diff(
            &wires_expr(&BOB_WIRES),
            &wires_expr(&["O'_A", "I'_B", "I_B", "O_B", "O'_B"]),
        ),
        RrExpr::new(vec![
            (1, &[]),
            (-1, &["O'_A"]),
            (-1, &["O'_B"]),
            (1, &["O'_A", "O'_B"]),
        ]),
    ];
    out.extend(nswse_constraints());
    out
}

/// Causal-order condition W = _{O'_pivot} W, homogeneous form.
pub fn causal_order_constraint(later_party: Party) -> RrExpr {
    diff(
        &RrExpr::new(vec![(1, &[])]),
        &wires_expr(&[later_party.wire_out_prime()]),
    )
}

fn diff(a: &RrExpr, b: &RrExpr) -> RrExpr {
    let mut terms = a.terms.clone();
    for t in &b.terms {
        let mut t = t.clone();
        t.num = -t.num;
        terms.push(t);
    }
    RrExpr { terms }
}

// ---------------------------------------------------------------------------
// validators
// ---------------------------------------------------------------------------

fn residual<T: Scalar>(w: &LabeledTensor<T>, e: &RrExpr) -> Result<T, ProcessError> {
    Ok(apply_rr_expr(w, e)?.max_abs())
}

/// Full validity report: nonnegativity, total reduction, the three nullity
/// conditions, and the derived fact that W is itself a conditional
/// distribution from its input wires to its output wires.
pub fn validate_process_tensor<T: Scalar>(
    w: &ProcessTensor<T>,
) -> Result<Report<T>, ProcessError> {
    let t = w.tensor();
    let mut report = Report::new();
    if !t.is_nonnegative() {
        let worst = t
            .data()
            .iter()
            .filter(|v| !v.is_nonneg_tol())
            .map(|v| v.abs())
            .fold(T::zero(), |m, v| if v > m { v } else { m });
        report.push("nonnegativity", worst);
    }
    let norm = T::from_i64(w.dims().norm());
    report.check_residual("total reduction", (t.total() - norm).abs());
    let labels = ["A-block validity", "B-block validity", "joint validity"];
    for (e, label) in process_constraints().iter().zip(labels) {
        report.check_residual(label, residual(t, e)?);
    }
    // derived: W is a conditional distribution over its output wires
    let out_wires = ["I'_A", "O_A", "I'_B", "O_B"];
    let all: Vec<&str> = ALICE_WIRES.iter().chain(BOB_WIRES.iter()).copied().collect();
    let cond = diff(&wires_expr(&out_wires), &wires_expr(&all));
    report.check_residual("conditional-distribution (derived)", residual(t, &cond)?);
    Ok(report)
}

/// NSP on top of validity; an invalid process tensor is an error, not `false`.
pub fn satisfies_nsp<T: Scalar>(w: &ProcessTensor<T>) -> Result<bool, ProcessError> {
    let base = validate_process_tensor(w)?;
    if !base.is_valid() {
        return Err(ProcessError::Invalid(base.summary()));
    }
    for e in nsp_constraints() {
        if !residual(w.tensor(), &e)?.is_zero_tol() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// NSP with a per-constraint report (used by the CLI validator).
pub fn nsp_report<T: Scalar>(w: &ProcessTensor<T>) -> Result<Report<T>, ProcessError> {
    let mut report = validate_process_tensor(w)?;
    let labels = ["NSP A-marginal", "NSP B-marginal", "NSP A-affine", "NSP B-affine"];
    for (e, label) in nsp_constraints().iter().zip(labels) {
        report.check_residual(label, residual(w.tensor(), e)?);
    }
    Ok(report)
}

/// The NSWSE check: _{O_A}W = _{I_A O_A}W and _{O_B}W = _{I_B O_B}W.
pub fn is_boxworld_process<T: Scalar>(w: &ProcessTensor<T>) -> Result<bool, ProcessError> {
    let base = validate_process_tensor(w)?;
    if !base.is_valid() {
        return Err(ProcessError::Invalid(base.summary()));
    }
    for e in nswse_constraints() {
        if !residual(w.tensor(), &e)?.is_zero_tol() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Boxworld check with a per-constraint report over the simplified characterization.
pub fn boxworld_report<T: Scalar>(w: &ProcessTensor<T>) -> Result<Report<T>, ProcessError> {
    let t = w.tensor();
    let mut report = Report::new();
    if !t.is_nonnegative() {
        report.push("nonnegativity", T::one());
    }
    let norm = T::from_i64(w.dims().norm());
    report.check_residual("total reduction", (t.total() - norm).abs());
    let labels = [
        "A-block marginal",
        "B-block marginal",
        "structural identity",
        "NSWSE A",
        "NSWSE B",
    ];
    for (e, label) in boxworld_constraints().iter().zip(labels) {
        report.check_residual(label, residual(t, e)?);
    }
    Ok(report)
}

/// Causal classification of a boxworld process; non-boxworld input is an error.
pub fn causal_class<T: Scalar>(w: &ProcessTensor<T>) -> Result<CausalClass, ProcessError> {
    if !is_boxworld_process(w)? {
        return Err(ProcessError::Invalid("causal_class needs a boxworld process".to_string()));
    }
    let ab = residual(w.tensor(), &causal_order_constraint(Party::B))?.is_zero_tol();
    let ba = residual(w.tensor(), &causal_order_constraint(Party::A))?.is_zero_tol();
    Ok(match (ab, ba) {
        (true, true) => CausalClass::NonSignaling,
        (true, false) => CausalClass::AliceFirst,
        (false, true) => CausalClass::BobFirst,
        (false, false) => CausalClass::NoneOfOrdered,
    })
}

// ---------------------------------------------------------------------------
// affine decomposition (causally ordered parts)
// ---------------------------------------------------------------------------

/// λ together with the two causally ordered components of the affine split.
#[derive(Clone, Debug)]
pub struct CausalDecomposition<T> {
    pub lambda: T,
    pub w_ab: ProcessTensor<T>,
    pub w_ba: ProcessTensor<T>,
}

/// Affine decomposition W = λ·W^{A≺B} + (1-λ)·W^{B≺A} with λ = d_{O'_pivot}.
///
/// With the default pivot on Bob's side:
///   W^{A≺B} = ((d-1)·_{O'_A O'_B}W + _{O'_B}W) / d
///   W^{B≺A} = (d·_{O'_A O'_B}W - _{O'_A}W) / (d-1)
/// Nonnegativity of the second part is the elementwise-positivity lemma
/// d·_α P - P >= 0. A mirrored variant pivots on O'_A for symmetry tests.
pub fn affine_decompose<T: Scalar>(
    w: &ProcessTensor<T>,
    pivot: Party,
) -> Result<CausalDecomposition<T>, ProcessError> {
    if !is_boxworld_process(w)? {
        return Err(ProcessError::Invalid("affine_decompose needs a boxworld process".to_string()));
    }
    let op_pivot = pivot.wire_out_prime();
    let op_other = pivot.other().wire_out_prime();
    let d = w.tensor().cardinality(op_pivot)?;
    if d < 2 {
        return Err(ProcessError::DegenerateDimension(alloc::format!(
            "{op_pivot} has cardinality 1, the process is already ordered with {op_pivot}'s party last"
        )));
    }
    let t = w.tensor();
    let both = apply_rr_expr(t, &wires_expr(&[op_pivot, op_other]))?;
    let r_pivot = apply_rr_expr(t, &wires_expr(&[op_pivot]))?;
    let r_other = apply_rr_expr(t, &wires_expr(&[op_other]))?;
    let d_t = T::from_i64(d as i64);
    let first = both
        .scale(&(d_t.clone() - T::one()))
        .add(&r_pivot)?
        .scale(&d_t.recip());
    let second = both
        .scale(&d_t.clone())
        .sub(&r_other)?
        .scale(&(d_t.clone() - T::one()).recip());
    // the λ weight belongs to the pivot-side component: with the default
    // pivot W = d·first + (1-d)·second and first is ordered A≺B; mirrored,
    // first is ordered B≺A and the weights swap, so λ = 1-d keeps the
    // invariant W = λ·w_ab + (1-λ)·w_ba.
    let (lambda, w_ab, w_ba) = match pivot {
        Party::B => (d_t, first, second),
        Party::A => (T::one() - d_t, second, first),
    };
    Ok(CausalDecomposition {
        lambda,
        w_ab: ProcessTensor::new(w_ab)?,
        w_ba: ProcessTensor::new(w_ba)?,
    })
}

impl<T: Scalar> CausalDecomposition<T> {
    /// Entrywise recombination λ·w_ab + (1-λ)·w_ba.
    pub fn recombined(&self) -> Result<LabeledTensor<T>, ProcessError> {
        Ok(self
            .w_ab
            .tensor()
            .scale(&self.lambda)
            .add(&self.w_ba.tensor().scale(&(T::one() - self.lambda.clone())))?)
    }
}

// ---------------------------------------------------------------------------
// contraction with instruments
// ---------------------------------------------------------------------------

/// The contraction rule: P_{AB|XY} = W * T^{A|X} * T^{B|Y}.
pub fn born_rule<T: Scalar>(
    w: &ProcessTensor<T>,
    alice: &Instrument<T>,
    bob: &Instrument<T>,
) -> Result<Correlation<T>, ProcessError> {
    if alice.party != Party::A || bob.party != Party::B {
        return Err(ProcessError::AxisLayout("instruments must be one per party".to_string()));
    }
    let first = contract(w.tensor(), &alice.as_tensor())?;
    let full = contract(&first, &bob.as_tensor())?;
    Correlation::new(full).map_err(ProcessError::from)
}

// ---------------------------------------------------------------------------
// definitional oracles
// ---------------------------------------------------------------------------

/// Brute-force NSP check at all-bit interface wires: contracting with each of
/// the 24 NS vertices on (O'_A, O'_B | I'_A, I'_B) must give an NS box on
/// (O_A, O_B | I_A, I_B). Convexity makes the vertex check exhaustive.
pub fn nsp_definitional_oracle<T: Scalar>(w: &ProcessTensor<T>) -> Result<bool, ProcessError> {
    let d = w.dims();
    if d.alice.d_out_prime != 2
        || d.bob.d_out_prime != 2
        || d.alice.d_in_prime != 2
        || d.bob.d_in_prime != 2
    {
        return Err(ProcessError::Unsupported(
            "NSP vertex oracle needs all-bit primed wires".to_string(),
        ));
    }
    for v in ns_bit_vertices::<T>() {
        let probe = v
            .tensor()
            .renamed("O_A", "O'_A")?
            .renamed("O_B", "O'_B")?
            .renamed("I_A", "I'_A")?
            .renamed("I_B", "I'_B")?;
        let image = contract(w.tensor(), &probe)?;
        if !is_nonsignaling_box(&image)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Basis of the span of one party's deterministic outcome-resolved operation
/// slices, via exact Gaussian elimination on flattened tensors.
fn probe_span<T: Scalar>(party: Party, dims: OpDims) -> Vec<Vec<T>> {
    let comps = enumerate_det_components(dims, 2);
    let mut basis: Vec<Vec<T>> = Vec::new();
    for c in comps {
        for a in 0..2 {
            let t = c.element_tensor::<T>(party, dims, 2, a);
            let mut vec: Vec<T> = t.data().to_vec();
            for b in &basis {
                let pivot = b.iter().position(|v| !v.is_zero_tol()).unwrap();
                if !vec[pivot].is_zero_tol() {
                    let factor = vec[pivot].clone() / b[pivot].clone();
                    for (x, y) in vec.iter_mut().zip(b) {
                        *x = x.clone() - factor.clone() * y.clone();
                    }
                }
            }
            if vec.iter().any(|v| !v.is_zero_tol()) {
                basis.push(vec);
            }
        }
    }
    basis
}

/// Case-2 nonsignaling channel differences for the signalling party: tensors
/// (δ_{I,f(I')} - δ_{I,f'(I')})·δ_{O',g(I')} over the party's four wires.
fn ns_channel_diffs<T: Scalar>(party: Party, dims: OpDims) -> Vec<LabeledTensor<T>> {
    let axes = dims.axes(party);
    let fs = maps(dims.d_in_prime, dims.d_in);
    let gs = maps(dims.d_in_prime, dims.d_out_prime);
    let mut out = Vec::new();
    for g in &gs {
        for i1 in 0..fs.len() {
            for i2 in (i1 + 1)..fs.len() {
                let (f1, f2) = (&fs[i1], &fs[i2]);
                let t = LabeledTensor::from_fn(axes.clone(), |idx| {
                    let (i, op, ip, _o) = (idx[0], idx[1], idx[2], idx[3]);
                    if op != g[ip] {
                        return T::zero();
                    }
                    let a = if i == f1[ip] { T::one() } else { T::zero() };
                    let b = if i == f2[ip] { T::one() } else { T::zero() };
                    a - b
                });
                out.push(t);
            }
        }
    }
    out
}

fn maps(domain: usize, codomain: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let total = (codomain as u64).pow(domain as u32);
    let mut c = vec![0usize; domain];
    for _ in 0..total {
        out.push(c.clone());
        for p in (0..domain).rev() {
            c[p] += 1;
            if c[p] < codomain {
                break;
            }
            c[p] = 0;
        }
    }
    out
}

/// Definitional NSWSE oracle: the correlation is nonsignaling for every pair
/// of deterministic nonsignaling instruments.
///
/// Evaluated through bilinearity rather than the raw pair loop: for each
/// direction, the setting-dependence of a nonsignaling instrument enters only
/// through case-2 pre-processing differences, and the probe party's outcome
/// slices span the same space as its full set of deterministic components
/// (any component can occur inside a trivially nonsignaling instrument). The
/// correlation marginal is setting-independent for all pairs iff every
/// channel difference contracted with W annihilates the probe span.
pub fn nswse_definitional_oracle<T: Scalar>(w: &ProcessTensor<T>) -> Result<bool, ProcessError> {
    let dims = w.dims();
    for (signal, probe_dims, signal_dims) in [
        (Party::A, dims.bob, dims.alice),
        (Party::B, dims.alice, dims.bob),
    ] {
        let probe_party = signal.other();
        if det_component_count(probe_dims) > 1 << 16 || det_component_count(signal_dims) > 1 << 16 {
            return Err(ProcessError::Unsupported(
                "NSWSE oracle needs enumerable wire dimensions".to_string(),
            ));
        }
        let probes = probe_span::<T>(probe_party, probe_dims);
        for d in ns_channel_diffs::<T>(signal, signal_dims) {
            let delta = contract(w.tensor(), &d)?;
            // delta lives on the probe party's wires in the fixed layout
            let delta_flat = delta
                .permuted_like(&LabeledTensor::<T>::constant(probe_dims.axes_dual(probe_party), T::zero()))?;
            for p in &probes {
                let dot: T = delta_flat
                    .data()
                    .iter()
                    .zip(p)
                    .map(|(x, y)| x.clone() * y.clone())
                    .sum();
                if !dot.is_zero_tol() {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

fn det_component_count(dims: OpDims) -> u128 {
    crate::operations::det_component_count(dims, 2)
}

impl OpDims {
    /// Axis layout of the *process side* of one party's wires: same names,
    /// roles flipped relative to the operation layout, in the operation order.
    fn axes_dual(&self, party: Party) -> Vec<AxisSpec> {
        vec![
            AxisSpec::input(party.wire_in(), self.d_in),
            AxisSpec::input(party.wire_out_prime(), self.d_out_prime),
            AxisSpec::output(party.wire_in_prime(), self.d_in_prime),
            AxisSpec::output(party.wire_out(), self.d_out),
        ]
    }
}

// ---------------------------------------------------------------------------
// random generation
// ---------------------------------------------------------------------------

fn random_in_system<T: Scalar>(
    sys: &ConstraintSystem,
    norm: i64,
    rng: &mut impl Rng,
) -> LabeledTensor<T> {
    let size: usize = sys.axes.iter().map(|a| a.cardinality).product();
    let raw = LabeledTensor::<T>::from_fn(sys.axes.clone(), |_| {
        T::from_ratio(rng.gen_range(-3..=3), 24)
    });
    let projected = sys.project(&raw, Some(T::from_i64(norm))).expect("projection");
    if projected.is_nonnegative() {
        return projected;
    }
    // mix toward the uniform point far enough to clear the most negative entry
    let uniform = LabeledTensor::<T>::constant(sys.axes.clone(), T::from_ratio(norm, size as i64));
    let min = projected.min_entry();
    let base = T::from_ratio(norm, size as i64);
    // t such that (1-t)·u + t·p >= 0, shrunk a little to stay interior
    let t = base.clone() / (base - min) * T::from_ratio(9, 10);
    uniform
        .scale(&(T::one() - t.clone()))
        .add(&projected.scale(&t))
        .expect("aligned")
}

/// Random valid process tensor (interior point of the validity polytope).
pub fn random_process_tensor<T: Scalar>(
    dims: ProcessDims,
    rng: &mut impl Rng,
) -> ProcessTensor<T> {
    let sys = ConstraintSystem::new(dims.axes(), process_constraints());
    ProcessTensor::new(random_in_system(&sys, dims.norm(), rng)).expect("valid layout")
}

/// Random boxworld process (interior point of the Eqs-31 polytope).
pub fn random_boxworld_process<T: Scalar>(
    dims: ProcessDims,
    rng: &mut impl Rng,
) -> ProcessTensor<T> {
    let sys = ConstraintSystem::new(dims.axes(), boxworld_constraints());
    ProcessTensor::new(random_in_system(&sys, dims.norm(), rng)).expect("valid layout")
}

/// The uniform process: every validator accepts it and its causal class is NS.
pub fn uniform_process<T: Scalar>(dims: ProcessDims) -> ProcessTensor<T> {
    let size = dims.size();
    let t = LabeledTensor::constant(dims.axes(), T::from_ratio(dims.norm(), size as i64));
    ProcessTensor::new(t).expect("valid layout")
}
