//! Local operations: outcome-indexed instruments, their characterization,
//! the nonsignaling subclass, parametrization, and deterministic enumeration.
//!
//! An instrument element T^{a|x} lives on four wires (I, O' outputs; I', O
//! inputs). The outcome-summed channel T^x must be nonnegative, reduce to
//! d_I'·d_O, and satisfy the two reduce-and-replace identities that carve out
//! the pre/post-processing subspace.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::num::Scalar;
use crate::report::Report;
use crate::tensor::{
    apply_rr_expr, contract, reduce_and_replace, AxisSpec, LabeledTensor, RrExpr,
    TensorError,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Party {
    A,
    B,
}

impl Party {
    pub fn wire_in(&self) -> &'static str {
        match self {
            Party::A => "I_A",
            Party::B => "I_B",
        }
    }
    pub fn wire_out(&self) -> &'static str {
        match self {
            Party::A => "O_A",
            Party::B => "O_B",
        }
    }
    pub fn wire_in_prime(&self) -> &'static str {
        match self {
            Party::A => "I'_A",
            Party::B => "I'_B",
        }
    }
    pub fn wire_out_prime(&self) -> &'static str {
        match self {
            Party::A => "O'_A",
            Party::B => "O'_B",
        }
    }
    pub fn outcome_name(&self) -> &'static str {
        match self {
            Party::A => "A",
            Party::B => "B",
        }
    }
    pub fn setting_name(&self) -> &'static str {
        match self {
            Party::A => "X",
            Party::B => "Y",
        }
    }
    pub fn other(&self) -> Party {
        match self {
            Party::A => Party::B,
            Party::B => Party::A,
        }
    }
}

/// Wire cardinalities of one party's operation: (I, O', I', O).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OpDims {
    pub d_in: usize,
    pub d_out_prime: usize,
    pub d_in_prime: usize,
    pub d_out: usize,
}

impl OpDims {
    pub fn all(d: usize) -> Self {
        OpDims { d_in: d, d_out_prime: d, d_in_prime: d, d_out: d }
    }

    /// Element axes in the fixed order (I, O', I', O).
    pub fn axes(&self, party: Party) -> Vec<AxisSpec> {
        vec![
            AxisSpec::output(party.wire_in(), self.d_in),
            AxisSpec::output(party.wire_out_prime(), self.d_out_prime),
            AxisSpec::input(party.wire_in_prime(), self.d_in_prime),
            AxisSpec::input(party.wire_out(), self.d_out),
        ]
    }
}

#[derive(Clone, Debug)]
pub enum OpError {
    Tensor(TensorError),
    /// Element axes do not match the expected wire layout (distinct from "invalid").
    AxisLayout(String),
    /// A validity check failed where a valid instrument is a precondition.
    Invalid(String),
    NegativeWeight,
    WeightsNotNormalized,
    /// Enumeration would exceed the configured cap; carries the count estimate.
    CapExceeded(u128),
    Unsupported(String),
}

impl From<TensorError> for OpError {
    fn from(e: TensorError) -> Self {
        OpError::Tensor(e)
    }
}

/// Outcome-indexed family of operation tensors for one party.
#[derive(Clone, Debug)]
pub struct Instrument<T> {
    pub party: Party,
    pub n_outcomes: usize,
    pub n_settings: usize,
    pub dims: OpDims,
    /// Element (a, x) at index a * n_settings + x, axes in OpDims order.
    elements: Vec<LabeledTensor<T>>,
}

impl<T: Scalar> Instrument<T> {
    pub fn new(
        party: Party,
        n_outcomes: usize,
        n_settings: usize,
        dims: OpDims,
        elements: Vec<LabeledTensor<T>>,
    ) -> Result<Self, OpError> {
        if elements.len() != n_outcomes * n_settings {
            return Err(OpError::AxisLayout("element count mismatch".to_string()));
        }
        let reference = LabeledTensor::<T>::constant(dims.axes(party), T::zero());
        let mut aligned = Vec::with_capacity(elements.len());
        for e in elements {
            let e = e
                .permuted_like(&reference)
                .map_err(|err| OpError::AxisLayout(alloc::format!("{err}")))?;
            aligned.push(e);
        }
        Ok(Instrument { party, n_outcomes, n_settings, dims, elements: aligned })
    }

    pub fn element(&self, outcome: usize, setting: usize) -> &LabeledTensor<T> {
        &self.elements[outcome * self.n_settings + setting]
    }

    pub fn elements(&self) -> &[LabeledTensor<T>] {
        &self.elements
    }

    /// Outcome-summed channel at one setting.
    pub fn channel(&self, setting: usize) -> LabeledTensor<T> {
        let mut acc = LabeledTensor::constant(self.dims.axes(self.party), T::zero());
        for a in 0..self.n_outcomes {
            acc = acc.add(self.element(a, setting)).expect("aligned axes");
        }
        acc
    }

    /// Full tensor with outcome (output role) and setting (input role) axes prepended.
    pub fn as_tensor(&self) -> LabeledTensor<T> {
        let mut axes = vec![
            AxisSpec::output(self.party.outcome_name(), self.n_outcomes),
            AxisSpec::input(self.party.setting_name(), self.n_settings),
        ];
        axes.extend(self.dims.axes(self.party));
        let inner = self.elements[0].len();
        let mut data = Vec::with_capacity(self.n_outcomes * self.n_settings * inner);
        for e in &self.elements {
            data.extend(e.data().iter().cloned());
        }
        LabeledTensor::new_unchecked(axes, data).expect("consistent element shapes")
    }

    /// Canonical fingerprint over all elements, for dedupe.
    pub fn fingerprint(&self) -> Vec<u8> {
        self.as_tensor().fingerprint()
    }

    /// The same instrument transplanted to the other party's wires (used by
    /// symmetric searches, where Bob plays Alice's tables).
    pub fn mirrored(&self) -> Instrument<T> {
        let other = self.party.other();
        let axes = self.dims.axes(other);
        let elements = self
            .elements
            .iter()
            .map(|e| LabeledTensor::new_unchecked(axes.clone(), e.data().to_vec()).expect("same shape"))
            .collect();
        Instrument {
            party: other,
            n_outcomes: self.n_outcomes,
            n_settings: self.n_settings,
            dims: self.dims,
            elements,
        }
    }
}

fn party_op_projector_terms(party: Party) -> (RrExpr, RrExpr) {
    let i = party.wire_in();
    let o = party.wire_out();
    let ip = party.wire_in_prime();
    let op = party.wire_out_prime();
    // _{IO'} T = _{I'IOO'} T and _{O'} T = _{OO'} T
    let pre = RrExpr::new(vec![(1, &[i, op]), (-1, &[ip, i, o, op])]);
    let post = RrExpr::new(vec![(1, &[op]), (-1, &[o, op])]);
    (pre, post)
}

/// Homogeneous channel-subspace constraints for one party (used by the LP too).
pub fn channel_constraints(party: Party) -> Vec<RrExpr> {
    let (a, b) = party_op_projector_terms(party);
    vec![a, b]
}

/// Validates the full instrument characterization; the returned report lists
/// each failed constraint with its maximum residual. Axis-layout problems are
/// errors, not violations.
pub fn validate_instrument<T: Scalar>(inst: &Instrument<T>) -> Result<Report<T>, OpError> {
    let mut report = Report::new();
    for e in inst.elements() {
        if !e.is_nonnegative() {
            let mut worst = T::zero();
            for v in e.data() {
                if !v.is_nonneg_tol() {
                    let a = v.abs();
                    if a > worst {
                        worst = a;
                    }
                }
            }
            report.push("nonnegativity", worst);
            break;
        }
    }
    let (pre_cond, post_cond) = party_op_projector_terms(inst.party);
    let expected_norm =
        T::from_i64((inst.dims.d_in_prime * inst.dims.d_out) as i64);
    let mut worst_norm = T::zero();
    let mut worst_c = T::zero();
    let mut worst_d = T::zero();
    for x in 0..inst.n_settings {
        let ch = inst.channel(x);
        let norm_residual = (ch.total() - expected_norm.clone()).abs();
        if norm_residual > worst_norm {
            worst_norm = norm_residual;
        }
        let rc = apply_rr_expr(&ch, &pre_cond)?.max_abs();
        if rc > worst_c {
            worst_c = rc;
        }
        let rd = apply_rr_expr(&ch, &post_cond)?.max_abs();
        if rd > worst_d {
            worst_d = rd;
        }
    }
    report.check_residual("total reduction", worst_norm);
    report.check_residual("pre-processing subspace", worst_c);
    report.check_residual("post-processing subspace", worst_d);
    Ok(report)
}

/// The combined operation-subspace projector: idempotent, and its fixed points
/// are exactly the tensors satisfying the two subspace identities.
pub fn project_to_operation_subspace<T: Scalar>(
    t: &LabeledTensor<T>,
    party: Party,
) -> Result<LabeledTensor<T>, OpError> {
    let i = party.wire_in();
    let o = party.wire_out();
    let ip = party.wire_in_prime();
    let op = party.wire_out_prime();
    let proj = RrExpr::new(vec![
        (1, &[]),
        (-1, &[op]),
        (1, &[o, op]),
        (-1, &[i, o, op]),
        (1, &[ip, i, o, op]),
    ]);
    Ok(apply_rr_expr(t, &proj)?)
}

/// Builds a deterministic-operation channel from an arbitrary parameter tensor:
/// uniform + (X - _{O'}X + _{OO'}X - _{IOO'}X). The caller must check that the
/// result is nonnegative; X = 0 gives the uniform channel 1/(d_I d_O').
pub fn channel_from_parameter<T: Scalar>(
    param: &LabeledTensor<T>,
    party: Party,
    dims: OpDims,
) -> Result<LabeledTensor<T>, OpError> {
    let i = party.wire_in();
    let o = party.wire_out();
    let op = party.wire_out_prime();
    let uniform = LabeledTensor::constant(
        dims.axes(party),
        T::from_ratio(1, (dims.d_in * dims.d_out_prime) as i64),
    );
    let shifted = apply_rr_expr(
        param,
        &RrExpr::new(vec![(1, &[]), (-1, &[op]), (1, &[o, op]), (-1, &[i, o, op])]),
    )?;
    Ok(uniform.add(&shifted.permuted_like(&uniform)?)?)
}

// ---------------------------------------------------------------------------
// deterministic components and enumeration
// ---------------------------------------------------------------------------

/// One deterministic per-setting component: f: I' -> I, g: (I',O) -> O',
/// h: (I',O) -> A, tables in row-major (I', O) order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DetComponent {
    pub pre: Vec<usize>,
    pub post: Vec<usize>,
    pub outcome: Vec<usize>,
}

impl DetComponent {
    pub fn element_tensor<T: Scalar>(
        &self,
        party: Party,
        dims: OpDims,
        n_outcomes: usize,
        a: usize,
    ) -> LabeledTensor<T> {
        debug_assert!(self.outcome.iter().all(|&v| v < n_outcomes));
        LabeledTensor::from_fn(dims.axes(party), |idx| {
            let (i, op, ip, o) = (idx[0], idx[1], idx[2], idx[3]);
            let cell = ip * dims.d_out + o;
            if i == self.pre[ip] && op == self.post[cell] && self.outcome[cell] == a {
                T::one()
            } else {
                T::zero()
            }
        })
    }

    /// Channel tensor (outcome summed out).
    pub fn channel_tensor<T: Scalar>(&self, party: Party, dims: OpDims) -> LabeledTensor<T> {
        LabeledTensor::from_fn(dims.axes(party), |idx| {
            let (i, op, ip, o) = (idx[0], idx[1], idx[2], idx[3]);
            let cell = ip * dims.d_out + o;
            if i == self.pre[ip] && op == self.post[cell] {
                T::one()
            } else {
                T::zero()
            }
        })
    }
}

/// Number of deterministic per-setting components for the given dims:
/// d_I^{d_I'} · d_O'^{d_I'·d_O} · n_A^{d_I'·d_O}.
pub fn det_component_count(dims: OpDims, n_outcomes: usize) -> u128 {
    let cells = (dims.d_in_prime * dims.d_out) as u32;
    (dims.d_in as u128).pow(dims.d_in_prime as u32)
        * (dims.d_out_prime as u128).pow(cells)
        * (n_outcomes as u128).pow(cells)
}

fn all_maps(domain: usize, codomain: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let total = (codomain as u128).pow(domain as u32);
    let mut counter = vec![0usize; domain];
    for _ in 0..total {
        out.push(counter.clone());
        for p in (0..domain).rev() {
            counter[p] += 1;
            if counter[p] < codomain {
                break;
            }
            counter[p] = 0;
        }
    }
    out
}

/// All deterministic per-setting components (1024 at all-bit with binary outcome).
pub fn enumerate_det_components(dims: OpDims, n_outcomes: usize) -> Vec<DetComponent> {
    let cells = dims.d_in_prime * dims.d_out;
    let mut out = Vec::new();
    for pre in all_maps(dims.d_in_prime, dims.d_in) {
        for post in all_maps(cells, dims.d_out_prime) {
            for outcome in all_maps(cells, n_outcomes) {
                out.push(DetComponent { pre: pre.clone(), post: post.clone(), outcome });
            }
        }
    }
    out
}

/// Deterministic instruments: one component per setting value. Deduped by
/// canonical tensor equality (distinct function triples can induce equal
/// tensors when some cardinality is 1). Refuses with the count estimate when
/// the total exceeds `cap`.
pub fn enumerate_deterministic_instruments<T: Scalar>(
    party: Party,
    dims: OpDims,
    n_outcomes: usize,
    n_settings: usize,
    cap: u128,
) -> Result<Vec<Instrument<T>>, OpError> {
    let per_setting = det_component_count(dims, n_outcomes);
    let total = per_setting.checked_pow(n_settings as u32).ok_or(OpError::CapExceeded(u128::MAX))?;
    if total > cap {
        return Err(OpError::CapExceeded(total));
    }
    // dedupe components by their stacked outcome tensors
    let mut unique: Vec<DetComponent> = Vec::new();
    let mut seen: alloc::collections::BTreeSet<Vec<u8>> = alloc::collections::BTreeSet::new();
    for c in enumerate_det_components(dims, n_outcomes) {
        let mut print = Vec::new();
        for a in 0..n_outcomes {
            print.extend(c.element_tensor::<T>(party, dims, n_outcomes, a).fingerprint());
            print.push(b'|');
        }
        if seen.insert(print) {
            unique.push(c);
        }
    }
    let k = unique.len();
    let mut out = Vec::new();
    let mut choice = vec![0usize; n_settings];
    loop {
        let mut elements = Vec::with_capacity(n_outcomes * n_settings);
        for a in 0..n_outcomes {
            for x in 0..n_settings {
                elements.push(unique[choice[x]].element_tensor::<T>(party, dims, n_outcomes, a));
            }
        }
        out.push(Instrument::new(party, n_outcomes, n_settings, dims, elements)?);
        let mut pos = n_settings;
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            choice[pos] += 1;
            if choice[pos] < k {
                break;
            }
            choice[pos] = 0;
        }
    }
}

/// Builds a deterministic instrument from one component per setting.
pub fn instrument_from_components<T: Scalar>(
    party: Party,
    dims: OpDims,
    n_outcomes: usize,
    components: &[DetComponent],
) -> Result<Instrument<T>, OpError> {
    let n_settings = components.len();
    let mut elements = Vec::with_capacity(n_outcomes * n_settings);
    for a in 0..n_outcomes {
        for comp in components {
            elements.push(comp.element_tensor(party, dims, n_outcomes, a));
        }
    }
    Instrument::new(party, n_outcomes, n_settings, dims, elements)
}

// ---------------------------------------------------------------------------
// convex decompositions
// ---------------------------------------------------------------------------

/// Setting-dependent deterministic triple: pre (i',x) -> i, post (i',o,x) -> o',
/// outcome (i',o,x) -> a; tables row-major over the listed arguments.
#[derive(Clone, Debug)]
pub struct DetTriple {
    pub pre: Vec<usize>,
    pub post: Vec<usize>,
    pub outcome: Vec<usize>,
}

/// Convex mixture of deterministic triples.
#[derive(Clone, Debug)]
pub struct DeterministicDecomposition<T> {
    pub weights: Vec<T>,
    pub components: Vec<DetTriple>,
}

/// Assembles the instrument Σ_λ π_λ D_pre·D_post·D_outcome.
pub fn from_decomposition<T: Scalar>(
    party: Party,
    dims: OpDims,
    n_outcomes: usize,
    n_settings: usize,
    decomp: &DeterministicDecomposition<T>,
) -> Result<Instrument<T>, OpError> {
    if decomp.weights.iter().any(|w| !w.is_nonneg_tol()) {
        return Err(OpError::NegativeWeight);
    }
    let total: T = decomp.weights.iter().cloned().sum();
    if !(total - T::one()).is_zero_tol() {
        return Err(OpError::WeightsNotNormalized);
    }
    let axes = dims.axes(party);
    let mut elements = Vec::with_capacity(n_outcomes * n_settings);
    for a in 0..n_outcomes {
        for x in 0..n_settings {
            let mut acc = LabeledTensor::constant(axes.clone(), T::zero());
            for (w, triple) in decomp.weights.iter().zip(&decomp.components) {
                let piece = LabeledTensor::from_fn(axes.clone(), |idx| {
                    let (i, op, ip, o) = (idx[0], idx[1], idx[2], idx[3]);
                    let cell = (ip * dims.d_out + o) * n_settings + x;
                    if i == triple.pre[ip * n_settings + x]
                        && op == triple.post[cell]
                        && triple.outcome[cell] == a
                    {
                        T::one()
                    } else {
                        T::zero()
                    }
                });
                acc = acc.add(&piece.scale(w))?;
            }
            elements.push(acc);
        }
    }
    Instrument::new(party, n_outcomes, n_settings, dims, elements)
}

/// Random instrument: Dirichlet-style integer weights over sampled triples.
pub fn random_instrument<T: Scalar>(
    party: Party,
    dims: OpDims,
    n_outcomes: usize,
    n_settings: usize,
    rng: &mut impl Rng,
) -> Instrument<T> {
    let n_triples = rng.gen_range(1..=4usize);
    let mut components = Vec::with_capacity(n_triples);
    let mut raw = Vec::with_capacity(n_triples);
    for _ in 0..n_triples {
        let pre = (0..dims.d_in_prime * n_settings)
            .map(|_| rng.gen_range(0..dims.d_in))
            .collect();
        let cells = dims.d_in_prime * dims.d_out * n_settings;
        let post = (0..cells).map(|_| rng.gen_range(0..dims.d_out_prime)).collect();
        let outcome = (0..cells).map(|_| rng.gen_range(0..n_outcomes)).collect();
        components.push(DetTriple { pre, post, outcome });
        raw.push(rng.gen_range(1..=8i64));
    }
    let total: i64 = raw.iter().sum();
    let weights = raw.into_iter().map(|w| T::from_ratio(w, total)).collect();
    from_decomposition(party, dims, n_outcomes, n_settings, &DeterministicDecomposition { weights, components })
        .expect("sampled decomposition is well-formed")
}

// ---------------------------------------------------------------------------
// nonsignaling classification
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NsClass {
    /// The channel family does not depend on the setting at all.
    Trivial,
    /// Setting-dependent, but no input box can reveal the setting.
    Nontrivial,
    Signaling,
}

/// Classifies an instrument's channel family by the definitional condition:
/// the transformed box is independent of the setting for every input box.
/// Checking the deterministic kernels O = h(I) is exhaustive (they span every
/// slice of a nonsignaling input, so this also covers action on parts of
/// larger nonsignaling boxes).
pub fn is_nonsignaling_instrument<T: Scalar>(inst: &Instrument<T>) -> Result<NsClass, OpError> {
    let report = validate_instrument(inst)?;
    if !report.is_valid() {
        return Err(OpError::Invalid(report.summary()));
    }
    let channels: Vec<LabeledTensor<T>> = (0..inst.n_settings).map(|x| inst.channel(x)).collect();
    if channels.iter().skip(1).all(|c| c.tensor_eq(&channels[0])) {
        return Ok(NsClass::Trivial);
    }
    let d_in = inst.dims.d_in;
    let d_out = inst.dims.d_out;
    let kernel_count = (d_out as u128).pow(d_in as u32);
    if kernel_count > 1 << 20 {
        return Err(OpError::Unsupported(
            "definitional classification needs d_O^{d_I} enumerable kernels".to_string(),
        ));
    }
    let kernels = all_maps(d_in, d_out);
    let in_axis = AxisSpec::input(inst.party.wire_in(), d_in);
    let out_axis = AxisSpec::output(inst.party.wire_out(), d_out);
    for x in 1..inst.n_settings {
        let diff = channels[x].sub(&channels[0]).expect("aligned channels");
        for h in &kernels {
            let kernel = LabeledTensor::from_fn(vec![out_axis.clone(), in_axis.clone()], |idx| {
                if idx[0] == h[idx[1]] {
                    T::one()
                } else {
                    T::zero()
                }
            });
            let image = contract(&diff, &kernel)?;
            if !image.max_abs().is_zero_tol() {
                return Ok(NsClass::Signaling);
            }
        }
    }
    Ok(NsClass::Nontrivial)
}

/// The literal two-case structural test: a setting-independent channel
/// family, or setting-independent input-averages with output-independent
/// post-processing. Kept for comparison: it is sufficient but not necessary
/// for the definitional condition, so it may report Signaling for some
/// nonsignaling families.
pub fn structural_ns_class<T: Scalar>(inst: &Instrument<T>) -> Result<NsClass, OpError> {
    let report = validate_instrument(inst)?;
    if !report.is_valid() {
        return Err(OpError::Invalid(report.summary()));
    }
    let channels: Vec<LabeledTensor<T>> = (0..inst.n_settings).map(|x| inst.channel(x)).collect();
    if channels.iter().skip(1).all(|c| c.tensor_eq(&channels[0])) {
        return Ok(NsClass::Trivial);
    }
    let i = inst.party.wire_in();
    let o = inst.party.wire_out();
    let base = reduce_and_replace(&channels[0], &[i])?;
    let cond_27a = channels
        .iter()
        .skip(1)
        .all(|c| reduce_and_replace(c, &[i]).map(|r| r.tensor_eq(&base)).unwrap_or(false));
    let cond_27b = channels
        .iter()
        .all(|c| reduce_and_replace(c, &[o]).map(|r| r.tensor_eq(c)).unwrap_or(false));
    if cond_27a && cond_27b {
        Ok(NsClass::Nontrivial)
    } else {
        Ok(NsClass::Signaling)
    }
}
