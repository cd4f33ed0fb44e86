//! Correlations P_{AB|XY}, signaling tests, the GYNI/LGYNI/OCB functionals,
//! their reference bounds, and causal-polytope membership at the all-bit scale.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::lp::{solve_feasibility, LinearProgram, LpError, Row};
use crate::num::Scalar;
use crate::tensor::{reduction, AxisSpec, LabeledTensor, Role, TensorError};

#[derive(Clone, Debug)]
pub enum IneqError {
    Tensor(TensorError),
    /// Correlation tensor is malformed (axes, normalization, negativity).
    Malformed(String),
    /// Functional evaluated on the wrong scenario shape.
    ShapeMismatch(String),
    Unsupported(String),
    Lp(LpError),
}

impl From<TensorError> for IneqError {
    fn from(e: TensorError) -> Self {
        IneqError::Tensor(e)
    }
}
impl From<LpError> for IneqError {
    fn from(e: LpError) -> Self {
        IneqError::Lp(e)
    }
}

/// A correlation: outputs A, B conditioned on inputs X, Y (Y may have
/// cardinality 4 in the OCB scenario, encoding (y, y') as 2y + y').
#[derive(Clone, Debug)]
pub struct Correlation<T> {
    tensor: LabeledTensor<T>,
}

impl<T: Scalar> Correlation<T> {
    pub fn new(tensor: LabeledTensor<T>) -> Result<Self, IneqError> {
        let mut names: Vec<&str> = tensor.axes().iter().map(|a| a.name.as_str()).collect();
        names.sort_unstable();
        if names != ["A", "B", "X", "Y"] {
            return Err(IneqError::Malformed(alloc::format!(
                "expected axes A,B,X,Y; got {names:?}"
            )));
        }
        for a in tensor.axes() {
            let want = if a.name == "A" || a.name == "B" { Role::Output } else { Role::Input };
            if a.role != want {
                return Err(IneqError::Malformed(alloc::format!("axis {} has the wrong role", a.name)));
            }
        }
        if !tensor.is_nonnegative() {
            return Err(IneqError::Malformed("negative entry".to_string()));
        }
        let sums = reduction(&tensor, &["A", "B"])?;
        if !sums.data().iter().all(|v| (v.clone() - T::one()).is_zero_tol()) {
            return Err(IneqError::Malformed("not normalized per input".to_string()));
        }
        Ok(Correlation { tensor })
    }

    /// Builds from P(a, b | x, y) without further ceremony.
    pub fn from_fn(
        cards: (usize, usize, usize, usize),
        f: impl Fn(usize, usize, usize, usize) -> T,
    ) -> Result<Self, IneqError> {
        let axes = vec![
            AxisSpec::output("A", cards.0),
            AxisSpec::output("B", cards.1),
            AxisSpec::input("X", cards.2),
            AxisSpec::input("Y", cards.3),
        ];
        let t = LabeledTensor::from_fn(axes, |idx| f(idx[0], idx[1], idx[2], idx[3]));
        Self::new(t)
    }

    pub fn tensor(&self) -> &LabeledTensor<T> {
        &self.tensor
    }

    pub fn cards(&self) -> (usize, usize, usize, usize) {
        let c = |n: &str| self.tensor.axis(n).unwrap().cardinality;
        (c("A"), c("B"), c("X"), c("Y"))
    }

    pub fn value(&self, a: usize, b: usize, x: usize, y: usize) -> T {
        let pos = |n: &str| self.tensor.axis_pos(n).unwrap();
        let mut idx = vec![0usize; 4];
        idx[pos("A")] = a;
        idx[pos("B")] = b;
        idx[pos("X")] = x;
        idx[pos("Y")] = y;
        self.tensor.get(&idx).clone()
    }

    /// Convex mixture of correlations on the same scenario.
    pub fn mix(parts: &[(T, &Correlation<T>)]) -> Result<Self, IneqError> {
        let first = parts.first().ok_or_else(|| IneqError::Malformed("empty mixture".to_string()))?;
        let mut acc = first.1.tensor.scale(&first.0);
        for (w, p) in &parts[1..] {
            acc = acc.add(&p.tensor.scale(w))?;
        }
        Correlation::new(acc)
    }

    /// OCB helper: averages over the y' half of a 4-valued Y axis, giving the
    /// 2-input-per-party correlation whose GYNI score the table discussion uses.
    pub fn marginal_over_y_prime(&self) -> Result<Correlation<T>, IneqError> {
        let (na, nb, nx, ny) = self.cards();
        if ny != 4 {
            return Err(IneqError::ShapeMismatch("Y must have cardinality 4".to_string()));
        }
        let half = T::from_ratio(1, 2);
        Correlation::from_fn((na, nb, nx, 2), |a, b, x, y| {
            (self.value(a, b, x, 2 * y) + self.value(a, b, x, 2 * y + 1)) * half.clone()
        })
    }
}

fn require_2222<T: Scalar>(p: &Correlation<T>, which: &str) -> Result<(), IneqError> {
    if p.cards() != (2, 2, 2, 2) {
        return Err(IneqError::ShapeMismatch(alloc::format!(
            "{which} needs the 2-party/2-input/2-output scenario"
        )));
    }
    Ok(())
}

/// GYNI(P) = (1/4) Σ δ_{A,Y} δ_{B,X} P; causal bound 1/2.
pub fn gyni<T: Scalar>(p: &Correlation<T>) -> Result<T, IneqError> {
    require_2222(p, "GYNI")?;
    let mut acc = T::zero();
    for x in 0..2 {
        for y in 0..2 {
            acc = acc + p.value(y, x, x, y);
        }
    }
    Ok(acc * T::from_ratio(1, 4))
}

/// LGYNI(P) = (1/4) Σ δ_{X(A⊕Y),0} δ_{Y(B⊕X),0} P; causal bound 3/4.
pub fn lgyni<T: Scalar>(p: &Correlation<T>) -> Result<T, IneqError> {
    require_2222(p, "LGYNI")?;
    let mut acc = T::zero();
    for a in 0..2usize {
        for b in 0..2usize {
            for x in 0..2usize {
                for y in 0..2usize {
                    if x * (a ^ y) == 0 && y * (b ^ x) == 0 {
                        acc = acc + p.value(a, b, x, y);
                    }
                }
            }
        }
    }
    Ok(acc * T::from_ratio(1, 4))
}

/// OCB(P) = (1/8) Σ δ_{(Y'⊕1)(A⊕Y),0} δ_{Y'(B⊕X),0} P with Bob's 4-valued
/// setting encoding (y, y') as 2y + y'; causal bound 3/4.
pub fn ocb<T: Scalar>(p: &Correlation<T>) -> Result<T, IneqError> {
    if p.cards() != (2, 2, 2, 4) {
        return Err(IneqError::ShapeMismatch(
            "OCB needs Bob's setting of cardinality 4 (2y + y')".to_string(),
        ));
    }
    let mut acc = T::zero();
    for a in 0..2usize {
        for b in 0..2usize {
            for x in 0..2usize {
                for s in 0..4usize {
                    let (y, yp) = (s >> 1, s & 1);
                    if (yp ^ 1) * (a ^ y) == 0 && yp * (b ^ x) == 0 {
                        acc = acc + p.value(a, b, x, s);
                    }
                }
            }
        }
    }
    Ok(acc * T::from_ratio(1, 8))
}

/// The bound on two-way signaling in boxworld: GYNI ≤ 1 - 1/(2d) where
/// d = min{|O'_A|, |O'_B|} of the generating process.
pub fn two_way_signaling_bound<T: Scalar>(d: usize) -> Result<T, IneqError> {
    if d < 1 {
        return Err(IneqError::Malformed("d must be at least 1".to_string()));
    }
    Ok(T::one() - T::from_ratio(1, 2 * d as i64))
}

// ---------------------------------------------------------------------------
// signaling profile
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SignalingProfile {
    NonSignaling,
    AliceToBobOnly,
    BobToAliceOnly,
    TwoWay,
}

/// Per-direction residuals of the marginal-independence conditions.
#[derive(Clone, Debug)]
pub struct SignalingReport<T> {
    pub profile: SignalingProfile,
    /// max deviation of Σ_B P from Y-independence (signal B -> A)
    pub residual_b_to_a: T,
    /// max deviation of Σ_A P from X-independence (signal A -> B)
    pub residual_a_to_b: T,
}

fn direction_residual<T: Scalar>(
    p: &Correlation<T>,
    summed_output: &str,
    probe_input: &str,
) -> Result<T, IneqError> {
    let marg = reduction(p.tensor(), &[summed_output])?;
    let probe = marg.axis_pos(probe_input).expect("axis exists");
    let card = marg.axes()[probe].cardinality;
    let mut worst = T::zero();
    for (idx, v) in marg.iter_indexed() {
        if idx[probe] != 0 {
            continue;
        }
        for c in 1..card {
            let mut other = idx.clone();
            other[probe] = c;
            let d = (v.clone() - marg.get(&other).clone()).abs();
            if d > worst {
                worst = d;
            }
        }
    }
    Ok(worst)
}

/// Direction-wise signaling analysis of a correlation.
pub fn signaling_profile<T: Scalar>(p: &Correlation<T>) -> Result<SignalingReport<T>, IneqError> {
    // B -> A signaling shows as Y-dependence of Alice's marginal
    let residual_b_to_a = direction_residual(p, "B", "Y")?;
    let residual_a_to_b = direction_residual(p, "A", "X")?;
    let b_to_a = !residual_b_to_a.is_zero_tol();
    let a_to_b = !residual_a_to_b.is_zero_tol();
    let profile = match (a_to_b, b_to_a) {
        (false, false) => SignalingProfile::NonSignaling,
        (true, false) => SignalingProfile::AliceToBobOnly,
        (false, true) => SignalingProfile::BobToAliceOnly,
        (true, true) => SignalingProfile::TwoWay,
    };
    Ok(SignalingReport { profile, residual_b_to_a, residual_a_to_b })
}

// ---------------------------------------------------------------------------
// reference bounds
// ---------------------------------------------------------------------------

/// Causal, process-matrix, and boxworld reference values for the three
/// inequalities. The process-matrix column is documentation only: those
/// numbers come from the literature and are never recomputed here (the GYNI
/// one is an upper bound that may not be tight).
pub struct BoundTable;

impl BoundTable {
    pub fn causal<T: Scalar>() -> [T; 3] {
        [T::from_ratio(1, 2), T::from_ratio(3, 4), T::from_ratio(3, 4)]
    }

    /// Boxworld values reproduced by this crate's constructions.
    pub fn boxworld<T: Scalar>() -> [T; 3] {
        [T::from_ratio(3, 4), T::from_ratio(11, 12), T::from_ratio(1, 1)]
    }

    /// Literature constants for process matrices: GYNI ≤ 0.7592 (possibly not
    /// tight), LGYNI ≈ 0.8194, OCB = (2+√2)/4.
    pub fn process_matrix() -> [f64; 3] {
        [0.7592, 0.8194, 0.8535533905932737]
    }
}

// ---------------------------------------------------------------------------
// causal polytope membership (vertex representation)
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OneWayKind {
    AliceFirst,
    BobFirst,
}

/// Deterministic one-way correlations for a (n_A, n_B, n_X, n_Y) scenario:
/// a = f(x), b = g(x, y) for Alice-first, mirrored for Bob-first.
pub fn one_way_deterministic_vertices<T: Scalar>(
    cards: (usize, usize, usize, usize),
    kind: OneWayKind,
) -> Vec<Correlation<T>> {
    let (na, nb, nx, ny) = cards;
    let mut out = Vec::new();
    match kind {
        OneWayKind::AliceFirst => {
            for f in all_maps(nx, na) {
                for g in all_maps(nx * ny, nb) {
                    out.push(
                        Correlation::from_fn(cards, |a, b, x, y| {
                            if a == f[x] && b == g[x * ny + y] {
                                T::one()
                            } else {
                                T::zero()
                            }
                        })
                        .expect("deterministic correlation"),
                    );
                }
            }
        }
        OneWayKind::BobFirst => {
            for g in all_maps(ny, nb) {
                for f in all_maps(nx * ny, na) {
                    out.push(
                        Correlation::from_fn(cards, |a, b, x, y| {
                            if b == g[y] && a == f[x * ny + y] {
                                T::one()
                            } else {
                                T::zero()
                            }
                        })
                        .expect("deterministic correlation"),
                    );
                }
            }
        }
    }
    out
}

fn all_maps(domain: usize, codomain: usize) -> Vec<Vec<usize>> {
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

/// The deduped union of both one-way vertex families (112 at all-bit).
pub fn causal_vertices<T: Scalar>(
    cards: (usize, usize, usize, usize),
) -> Vec<(OneWayKind, Correlation<T>)> {
    let mut out: Vec<(OneWayKind, Correlation<T>)> = Vec::new();
    let mut seen = alloc::collections::BTreeSet::new();
    for v in one_way_deterministic_vertices::<T>(cards, OneWayKind::AliceFirst) {
        if seen.insert(v.tensor().fingerprint()) {
            out.push((OneWayKind::AliceFirst, v));
        }
    }
    for v in one_way_deterministic_vertices::<T>(cards, OneWayKind::BobFirst) {
        if seen.insert(v.tensor().fingerprint()) {
            out.push((OneWayKind::BobFirst, v));
        }
    }
    out
}

/// Decomposition weights over the one-way vertices, when the correlation is causal.
pub struct CausalWeights<T> {
    pub weights: Vec<(OneWayKind, Correlation<T>, T)>,
}

/// Membership LP in the convex hull of one-way correlations (2222 scenario).
/// Vertex representation: feasibility of p = Σ λ_v P_v with λ ≥ 0, Σλ = 1.
pub fn causal_decomposition<T: Scalar>(
    p: &Correlation<T>,
) -> Result<Option<CausalWeights<T>>, IneqError> {
    require_2222(p, "causal membership")
        .map_err(|_| IneqError::Unsupported("membership LP is implemented at 2222 only".to_string()))?;
    let verts = causal_vertices::<T>((2, 2, 2, 2));
    let n = verts.len();
    // rows: one per correlation entry, plus total weight 1
    let mut rows = Vec::new();
    let flat = |c: &Correlation<T>| -> Vec<T> {
        let mut v = Vec::with_capacity(16);
        for a in 0..2 {
            for b in 0..2 {
                for x in 0..2 {
                    for y in 0..2 {
                        v.push(c.value(a, b, x, y));
                    }
                }
            }
        }
        v
    };
    let target = flat(p);
    let vert_flat: Vec<Vec<T>> = verts.iter().map(|(_, v)| flat(v)).collect();
    for e in 0..16 {
        let coeffs: Vec<(usize, T)> = (0..n)
            .filter(|&j| !vert_flat[j][e].is_zero_tol())
            .map(|j| (j, vert_flat[j][e].clone()))
            .collect();
        rows.push(Row { coeffs, rhs: target[e].clone() });
    }
    rows.push(Row { coeffs: (0..n).map(|j| (j, T::one())).collect(), rhs: T::one() });
    let lp = LinearProgram { n_vars: n, objective: vec![T::zero(); n], rows };
    match solve_feasibility(&lp) {
        Ok(x) => {
            let weights = verts
                .into_iter()
                .zip(x)
                .filter(|(_, w)| !w.is_zero_tol())
                .map(|((k, v), w)| (k, v, w))
                .collect();
            Ok(Some(CausalWeights { weights }))
        }
        Err(LpError::Infeasible) => Ok(None),
        Err(e) => Err(IneqError::Lp(e)),
    }
}

/// Membership in the causal polytope (the convex hull of one-way
/// correlations), 2222 scenario only.
pub fn is_causal<T: Scalar>(p: &Correlation<T>) -> Result<bool, IneqError> {
    Ok(causal_decomposition(p)?.is_some())
}
