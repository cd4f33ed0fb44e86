//! LP-based optimization over the boxworld polytope: the fixed-instruments
//! process LP, the instrument LP, seesaw alternation, and the symmetric
//! deterministic scan for GYNI.
//!
//! The polytope constraints are generated by diagonalizing the
//! reduce-and-replace conditions once per wire layout: each killed pattern
//! contributes one integer equality row, so no row reduction is needed.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::constructions::NamedConstruction;
use crate::inequalities::{gyni, lgyni, ocb, two_way_signaling_bound, Correlation, IneqError};
use crate::lp::{maximize, LinearProgram, LpError, PreparedLp, Row};
use crate::num::Scalar;
use crate::operations::{
    channel_constraints, det_component_count, enumerate_det_components, instrument_from_components,
    validate_instrument, DetComponent, Instrument, OpDims, OpError, Party,
};
use crate::process::{
    born_rule, boxworld_constraints, is_boxworld_process, ProcessDims, ProcessError, ProcessTensor,
};
use crate::subspace::ConstraintSystem;
use crate::tensor::{AxisSpec, LabeledTensor, TensorError};

#[derive(Clone, Debug)]
pub enum OptError {
    Lp(LpError),
    Process(ProcessError),
    Op(OpError),
    Ineq(IneqError),
    Tensor(TensorError),
    Shape(String),
    /// An LP produced a tensor that fails its own feasible-set validator.
    EncodingBug(String),
    /// A GYNI value exceeded the two-way-signaling bound 1 - 1/(2d).
    BoundViolated(String),
    /// The exhaustive scan refuses to run without the long-run flag.
    LongRunRequired { lp_count: u128 },
}

impl From<LpError> for OptError {
    fn from(e: LpError) -> Self {
        OptError::Lp(e)
    }
}
impl From<ProcessError> for OptError {
    fn from(e: ProcessError) -> Self {
        OptError::Process(e)
    }
}
impl From<OpError> for OptError {
    fn from(e: OpError) -> Self {
        OptError::Op(e)
    }
}
impl From<IneqError> for OptError {
    fn from(e: IneqError) -> Self {
        OptError::Ineq(e)
    }
}
impl From<TensorError> for OptError {
    fn from(e: TensorError) -> Self {
        OptError::Tensor(e)
    }
}
impl From<crate::constructions::ConstructionError> for OptError {
    fn from(e: crate::constructions::ConstructionError) -> Self {
        OptError::EncodingBug(alloc::format!("construction self-check: {e:?}"))
    }
}

/// The linear functionals this optimizer knows how to maximize.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Objective {
    Gyni,
    Lgyni,
    Ocb,
    Zero,
}

impl Objective {
    /// (|A|, |X|, |B|, |Y|) the functional expects.
    pub fn scenario(&self) -> (usize, usize, usize, usize) {
        match self {
            Objective::Ocb => (2, 2, 2, 4),
            _ => (2, 2, 2, 2),
        }
    }

    /// Indicator coefficient of P(a,b|x,y), without the prefactor.
    fn indicator(&self, a: usize, b: usize, x: usize, y: usize) -> bool {
        match self {
            Objective::Gyni => a == y && b == x,
            Objective::Lgyni => x * (a ^ y) == 0 && y * (b ^ x) == 0,
            Objective::Ocb => {
                let (yy, yp) = (y >> 1, y & 1);
                (yp ^ 1) * (a ^ yy) == 0 && yp * (b ^ x) == 0
            }
            Objective::Zero => false,
        }
    }

    fn prefactor<T: Scalar>(&self) -> T {
        match self {
            Objective::Ocb => T::from_ratio(1, 8),
            _ => T::from_ratio(1, 4),
        }
    }

    /// Evaluates the functional on a correlation.
    pub fn evaluate<T: Scalar>(&self, p: &Correlation<T>) -> Result<T, IneqError> {
        match self {
            Objective::Gyni => gyni(p),
            Objective::Lgyni => lgyni(p),
            Objective::Ocb => ocb(p),
            Objective::Zero => Ok(T::zero()),
        }
    }
}

/// Equality rows of the boxworld polytope for a wire layout, plus the
/// normalization row. The feasible set IS the boxworld characterization.
pub fn boxworld_rows<T: Scalar>(dims: ProcessDims) -> (ConstraintSystem, Vec<Row<T>>) {
    let sys = ConstraintSystem::new(dims.axes(), boxworld_constraints());
    let mut rows = Vec::with_capacity(sys.bad_patterns().len() + 1);
    for pat in sys.bad_patterns() {
        let dense = sys.dual_row::<T>(pat);
        let coeffs: Vec<(usize, T)> = dense
            .into_iter()
            .enumerate()
            .filter(|(_, v)| !v.is_zero_tol())
            .collect();
        rows.push(Row { coeffs, rhs: T::zero() });
    }
    let size = dims.size();
    rows.push(Row {
        coeffs: (0..size).map(|j| (j, T::one())).collect(),
        rhs: T::from_i64(dims.norm()),
    });
    (sys, rows)
}

fn check_scenario<T: Scalar>(
    obj: Objective,
    alice: &Instrument<T>,
    bob: &Instrument<T>,
) -> Result<(), OptError> {
    if obj == Objective::Zero {
        return Ok(());
    }
    let (na, nx, nb, ny) = obj.scenario();
    if alice.n_outcomes != na || alice.n_settings != nx || bob.n_outcomes != nb || bob.n_settings != ny {
        return Err(OptError::Shape(alloc::format!(
            "objective {obj:?} expects scenario ({na},{nx},{nb},{ny})"
        )));
    }
    Ok(())
}

/// Objective vector over the flattened process tensor for fixed instruments.
fn objective_over_process<T: Scalar>(
    obj: Objective,
    alice: &Instrument<T>,
    bob: &Instrument<T>,
    dims: ProcessDims,
) -> Vec<T> {
    let axes = dims.axes();
    let w_ref = LabeledTensor::<T>::constant(axes, T::zero());
    let pre: T = obj.prefactor();
    let mut coeff = vec![T::zero(); dims.size()];
    for a in 0..alice.n_outcomes {
        for x in 0..alice.n_settings {
            for b in 0..bob.n_outcomes {
                for y in 0..bob.n_settings {
                    if !obj.indicator(a, b, x, y) {
                        continue;
                    }
                    let ea = alice.element(a, x);
                    let eb = bob.element(b, y);
                    for (c, (widx, _)) in coeff.iter_mut().zip(w_ref.iter_indexed()) {
                        // W axes order: I'_A, O_A, I'_B, O_B, I_A, O'_A, I_B, O'_B
                        // element axes order: I, O', I', O
                        let va = ea.get(&[widx[4], widx[5], widx[0], widx[1]]);
                        if va.is_zero_tol() {
                            continue;
                        }
                        let vb = eb.get(&[widx[6], widx[7], widx[2], widx[3]]);
                        if vb.is_zero_tol() {
                            continue;
                        }
                        *c = c.clone() + pre.clone() * va.clone() * vb.clone();
                    }
                }
            }
        }
    }
    coeff
}

fn gyni_bound_check<T: Scalar>(obj: Objective, dims: ProcessDims, value: &T) -> Result<(), OptError> {
    if obj != Objective::Gyni {
        return Ok(());
    }
    let d = dims.alice.d_out_prime.min(dims.bob.d_out_prime);
    let bound: T = two_way_signaling_bound(d).map_err(OptError::Ineq)?;
    if !(bound - value.clone()).is_nonneg_tol() {
        return Err(OptError::BoundViolated(alloc::format!(
            "GYNI value {} exceeds 1 - 1/(2·{d})",
            value.to_f64_lossy()
        )));
    }
    Ok(())
}

/// The boxworld polytope at a fixed wire layout with its feasibility work
/// done once. Every fixed-instrument LP over the same layout (seesaw rounds,
/// scan indices) reuses the prepared tableau and only runs phase 2.
#[derive(Clone)]
pub struct ProcessPolytope<T> {
    dims: ProcessDims,
    axes: alloc::vec::Vec<crate::tensor::AxisSpec>,
    prepared: PreparedLp<T>,
}

impl<T: Scalar> ProcessPolytope<T> {
    pub fn new(dims: ProcessDims) -> Result<Self, OptError> {
        let (sys, rows) = boxworld_rows::<T>(dims);
        let prepared = PreparedLp::new(dims.size(), &rows)?;
        Ok(ProcessPolytope { dims, axes: sys.axes, prepared })
    }

    pub fn dims(&self) -> ProcessDims {
        self.dims
    }

    /// One fixed-instruments LP over this polytope.
    pub fn maximize(
        &self,
        obj: Objective,
        alice: &Instrument<T>,
        bob: &Instrument<T>,
    ) -> Result<(T, ProcessTensor<T>), OptError> {
        check_scenario(obj, alice, bob)?;
        if (ProcessDims { alice: alice.dims, bob: bob.dims }) != self.dims {
            return Err(OptError::Shape("instrument wires do not match the polytope".to_string()));
        }
        let objective = objective_over_process(obj, alice, bob, self.dims);
        let sol = self.prepared.maximize(&objective)?;
        let tensor = LabeledTensor::new_unchecked(self.axes.clone(), sol.x)?;
        let w = ProcessTensor::new(tensor)?;
        if !is_boxworld_process(&w).map_err(OptError::Process)? {
            return Err(OptError::EncodingBug(
                "LP optimum failed the boxworld validator".to_string(),
            ));
        }
        gyni_bound_check(obj, self.dims, &sol.value)?;
        Ok((sol.value, w))
    }
}

/// Maximizes the objective over all boxworld processes with both instruments
/// fixed. Returns the optimum and an optimal vertex, revalidated against the
/// full boxworld characterization. One-shot convenience over
/// [`ProcessPolytope::maximize`].
pub fn max_over_processes<T: Scalar>(
    obj: Objective,
    alice: &Instrument<T>,
    bob: &Instrument<T>,
) -> Result<(T, ProcessTensor<T>), OptError> {
    let dims = ProcessDims { alice: alice.dims, bob: bob.dims };
    ProcessPolytope::new(dims)?.maximize(obj, alice, bob)
}

/// Maximizes the objective over one party's instrument polytope (the
/// operation characterization, linearized), with the process and the other
/// instrument fixed.
pub fn max_over_instrument<T: Scalar>(
    obj: Objective,
    w: &ProcessTensor<T>,
    other: &Instrument<T>,
    party: Party,
) -> Result<(T, Instrument<T>), OptError> {
    if other.party == party {
        return Err(OptError::Shape("fixed instrument must belong to the other party".to_string()));
    }
    let (na, nx, nb, ny) = match (obj, party) {
        (Objective::Zero, _) => (2, 2, other.n_outcomes, other.n_settings),
        (o, Party::A) => {
            let (na, nx, nb, ny) = o.scenario();
            (na, nx, nb, ny)
        }
        (o, Party::B) => {
            let (na, nx, nb, ny) = o.scenario();
            (nb, ny, na, nx)
        }
    };
    if other.n_outcomes != nb || other.n_settings != ny {
        return Err(OptError::Shape("fixed instrument does not match the objective scenario".to_string()));
    }
    let dims = match party {
        Party::A => w.dims().alice,
        Party::B => w.dims().bob,
    };
    let wire_axes = dims.axes(party);
    let wire_size: usize = wire_axes.iter().map(|a| a.cardinality).product();
    let n_vars = na * nx * wire_size;

    // channel-subspace rows per setting (constraints act on the outcome sum)
    let sys = ConstraintSystem::new(wire_axes.clone(), channel_constraints(party));
    let mut rows: Vec<Row<T>> = Vec::new();
    for x in 0..nx {
        for pat in sys.bad_patterns() {
            let dense = sys.dual_row::<T>(pat);
            let mut coeffs = Vec::new();
            for a in 0..na {
                for (widx, v) in dense.iter().enumerate() {
                    if !v.is_zero_tol() {
                        coeffs.push(((a * nx + x) * wire_size + widx, v.clone()));
                    }
                }
            }
            rows.push(Row { coeffs, rhs: T::zero() });
        }
        let mut coeffs = Vec::with_capacity(na * wire_size);
        for a in 0..na {
            for widx in 0..wire_size {
                coeffs.push(((a * nx + x) * wire_size + widx, T::one()));
            }
        }
        rows.push(Row {
            coeffs,
            rhs: T::from_i64((dims.d_in_prime * dims.d_out) as i64),
        });
    }

    // objective: contract W with the fixed instrument once, then read off the
    // coefficient of every (outcome, setting, wire) entry
    let m = crate::tensor::contract(w.tensor(), &other.as_tensor())?;
    let m_ref = {
        let mut axes = vec![
            AxisSpec::output(other.party.outcome_name(), nb),
            AxisSpec::input(other.party.setting_name(), ny),
        ];
        // W-side wires of the optimized party, in the instrument's (I,O',I',O) order
        let w_axes = dims.axes(party);
        axes.push(AxisSpec::input(&w_axes[0].name, w_axes[0].cardinality));
        axes.push(AxisSpec::input(&w_axes[1].name, w_axes[1].cardinality));
        axes.push(AxisSpec::output(&w_axes[2].name, w_axes[2].cardinality));
        axes.push(AxisSpec::output(&w_axes[3].name, w_axes[3].cardinality));
        LabeledTensor::<T>::constant(axes, T::zero())
    };
    let m = m.permuted_like(&m_ref)?;
    let pre: T = obj.prefactor();
    let mut objective = vec![T::zero(); n_vars];
    for (midx, v) in m.iter_indexed() {
        if v.is_zero_tol() {
            continue;
        }
        let (b, y) = (midx[0], midx[1]);
        let widx = ((midx[2] * dims.d_out_prime + midx[3]) * dims.d_in_prime + midx[4])
            * dims.d_out
            + midx[5];
        for a in 0..na {
            for x in 0..nx {
                let hit = match party {
                    Party::A => obj.indicator(a, b, x, y),
                    Party::B => obj.indicator(b, a, y, x),
                };
                if hit {
                    let var = (a * nx + x) * wire_size + widx;
                    objective[var] = objective[var].clone() + pre.clone() * v.clone();
                }
            }
        }
    }

    let lp = LinearProgram { n_vars, objective, rows };
    let sol = maximize(&lp)?;
    let mut elements = Vec::with_capacity(na * nx);
    for a in 0..na {
        for x in 0..nx {
            let start = (a * nx + x) * wire_size;
            let data = sol.x[start..start + wire_size].to_vec();
            elements.push(LabeledTensor::new_unchecked(wire_axes.clone(), data)?);
        }
    }
    let inst = Instrument::new(party, na, nx, dims, elements)?;
    let report = validate_instrument(&inst).map_err(OptError::Op)?;
    if !report.is_valid() {
        return Err(OptError::EncodingBug(report.summary()));
    }
    Ok((sol.value, inst))
}

// ---------------------------------------------------------------------------
// seesaw
// ---------------------------------------------------------------------------

/// Rolling state of one seesaw restart: the incumbent triple and its value
/// trace (nondecreasing by construction). Convergence is an exact repeat in
/// rational mode and a sub-tolerance improvement in float mode.
#[derive(Clone, Debug)]
pub struct SeesawState<T> {
    pub alice: Instrument<T>,
    pub bob: Instrument<T>,
    pub process: ProcessTensor<T>,
    pub trace: Vec<T>,
    pub seed: u64,
}

impl<T: Scalar> SeesawState<T> {
    pub fn value(&self) -> &T {
        self.trace.last().expect("trace starts nonempty")
    }
}

#[derive(Clone, Debug)]
pub struct SeesawOutcome<T> {
    pub best_value: T,
    pub best: NamedConstruction<T>,
    pub traces: Vec<Vec<T>>,
}

#[derive(Clone, Copy, Debug)]
pub struct SeesawOptions {
    pub restarts: usize,
    pub seed: u64,
    /// Force Bob to play Alice's instrument (mirrored) at every step.
    pub symmetric: bool,
    pub max_rounds: usize,
}

impl Default for SeesawOptions {
    fn default() -> Self {
        SeesawOptions { restarts: 64, seed: 0, symmetric: false, max_rounds: 64 }
    }
}

fn random_det_instrument<T: Scalar>(
    party: Party,
    dims: OpDims,
    n_outcomes: usize,
    n_settings: usize,
    rng: &mut impl Rng,
) -> Instrument<T> {
    let comps: Vec<DetComponent> = (0..n_settings)
        .map(|_| {
            let cells = dims.d_in_prime * dims.d_out;
            DetComponent {
                pre: (0..dims.d_in_prime).map(|_| rng.gen_range(0..dims.d_in)).collect(),
                post: (0..cells).map(|_| rng.gen_range(0..dims.d_out_prime)).collect(),
                outcome: (0..cells).map(|_| rng.gen_range(0..n_outcomes)).collect(),
            }
        })
        .collect();
    instrument_from_components(party, dims, n_outcomes, &comps).expect("well-formed components")
}

/// Alternating LP maximization: W against fixed instruments, then each
/// instrument against the rest, until the value stops improving. The trace is
/// nondecreasing within a restart because each step's LP contains the
/// incumbent in its feasible set.
pub fn seesaw<T: Scalar>(
    obj: Objective,
    dims: ProcessDims,
    opts: SeesawOptions,
) -> Result<SeesawOutcome<T>, OptError> {
    let (na, nx, nb, ny) = obj.scenario();
    let polytope = ProcessPolytope::<T>::new(dims)?;
    let algebraic_max = T::one();
    let mut best: Option<(T, NamedConstruction<T>)> = None;
    let mut traces = Vec::new();
    for restart in 0..opts.restarts {
        let seed = opts.seed.wrapping_add(restart as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut alice = random_det_instrument::<T>(Party::A, dims.alice, na, nx, &mut rng);
        let mut bob = if opts.symmetric {
            alice.mirrored()
        } else {
            random_det_instrument::<T>(Party::B, dims.bob, nb, ny, &mut rng)
        };
        let (mut value, mut w) = polytope.maximize(obj, &alice, &bob)?;
        let mut trace = vec![value.clone()];
        for _ in 0..opts.max_rounds {
            let before = value.clone();
            if opts.symmetric {
                let (_, cand) = max_over_instrument(obj, &w, &bob, Party::A)?;
                let cand_bob = cand.mirrored();
                let (v_pair, w_pair) = polytope.maximize(obj, &cand, &cand_bob)?;
                if v_pair > value {
                    alice = cand;
                    bob = cand_bob;
                    w = w_pair;
                    value = v_pair;
                    trace.push(value.clone());
                }
            } else {
                let (va, new_a) = max_over_instrument(obj, &w, &bob, Party::A)?;
                alice = new_a;
                value = va;
                trace.push(value.clone());
                let (vb, new_b) = max_over_instrument(obj, &w, &alice, Party::B)?;
                bob = new_b;
                value = vb;
                trace.push(value.clone());
                let (vw, new_w) = polytope.maximize(obj, &alice, &bob)?;
                w = new_w;
                value = vw;
                trace.push(value.clone());
            }
            debug_assert!(trace.windows(2).all(|p| p[0] <= p[1]));
            if (value.clone() - before).is_zero_tol() {
                break;
            }
        }
        traces.push(trace);
        let better = match &best {
            None => true,
            Some((b, _)) => value > *b,
        };
        if better {
            let expected = born_rule(&w, &alice, &bob)?;
            let construction = NamedConstruction::checked(
                alloc::format!("seesaw-{obj:?}-seed{seed}"),
                w,
                alice,
                bob,
                expected,
            )?;
            best = Some((value.clone(), construction));
        }
        if let Some((b, _)) = &best {
            if (algebraic_max.clone() - b.clone()).is_zero_tol() {
                break;
            }
        }
    }
    let (best_value, best) = best.expect("at least one restart");
    Ok(SeesawOutcome { best_value, best, traces })
}

// ---------------------------------------------------------------------------
// exhaustive symmetric GYNI scan
// ---------------------------------------------------------------------------

/// Index space of the symmetric deterministic GYNI scan at the given wire
/// layout: one deterministic component per setting, Bob mirroring Alice.
pub struct SymmetricScan<T> {
    pub dims: ProcessDims,
    components: Vec<DetComponent>,
    polytope: ProcessPolytope<T>,
}

impl<T: Scalar> SymmetricScan<T> {
    pub fn new(dims: ProcessDims) -> Result<Self, OptError> {
        if dims.alice != dims.bob {
            return Err(OptError::Shape("symmetric scan needs equal wire layouts".to_string()));
        }
        if det_component_count(dims.alice, 2) > 1 << 14 {
            return Err(OptError::Shape("component space too large to enumerate".to_string()));
        }
        let components = enumerate_det_components(dims.alice, 2);
        let polytope = ProcessPolytope::new(dims)?;
        Ok(SymmetricScan { dims, components, polytope })
    }

    /// Number of LPs in the full scan: (components per setting)^2.
    pub fn lp_count(&self) -> u128 {
        (self.components.len() as u128).pow(2)
    }

    /// Solves the LP for one index (component pair), Bob mirrored.
    pub fn value_at(&self, index: u64) -> Result<T, OptError> {
        let k = self.components.len() as u64;
        if index >= k * k {
            return Err(OptError::Shape("scan index out of range".to_string()));
        }
        let c0 = &self.components[(index / k) as usize];
        let c1 = &self.components[(index % k) as usize];
        let alice: Instrument<T> =
            instrument_from_components(Party::A, self.dims.alice, 2, &[c0.clone(), c1.clone()])?;
        let bob = alice.mirrored();
        let (value, _) = self.polytope.maximize(Objective::Gyni, &alice, &bob)?;
        Ok(value)
    }
}

/// The full symmetric scan (about 10^6 LPs at all-bit). Refuses without the
/// long-run flag; `record` sees every (index, value) so callers can checkpoint,
/// and `resume_after` skips already-recorded indices.
pub fn exhaustive_symmetric_gyni<T: Scalar>(
    dims: ProcessDims,
    long_run: bool,
    resume_after: Option<u64>,
    mut record: impl FnMut(u64, &T),
) -> Result<T, OptError> {
    let scan = SymmetricScan::<T>::new(dims)?;
    if !long_run {
        return Err(OptError::LongRunRequired { lp_count: scan.lp_count() });
    }
    let start = resume_after.map(|i| i + 1).unwrap_or(0);
    let mut best = T::zero();
    for index in start..scan.lp_count() as u64 {
        let v = scan.value_at(index)?;
        record(index, &v);
        if v > best {
            best = v;
        }
    }
    Ok(best)
}
