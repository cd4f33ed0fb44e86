//! Behaviors beyond the acceptance gate: correlation values of
//! the named constructions, classification of the example operations, vertex
//! extremality, and LP-vs-brute-force agreement on the instrument polytope.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use boxworld::boxes::{is_nonsignaling_box, ns_bit_vertices, pr_box};
use boxworld::constructions::{
    by_name, gyni_bit, gyni_trit, lgyni_construction, ocb_construction, realize_causal,
    t_diamond, t_triangle_a, t_triangle_b, w_diamond, CausalKind, NamedConstruction, CATALOG,
};
use boxworld::inequalities::{
    gyni, is_causal, lgyni, ocb, two_way_signaling_bound, BoundTable, Correlation,
    SignalingProfile,
};
use boxworld::lp::{solve_feasibility, LinearProgram, LpError, Row};
use boxworld::num::{rat, Rat};
use boxworld::operations::{
    enumerate_det_components, instrument_from_components, is_nonsignaling_instrument,
    project_to_operation_subspace, random_instrument, validate_instrument, Instrument, NsClass,
    OpDims, Party,
};
use boxworld::optimizer::{max_over_instrument, max_over_processes, Objective};
use boxworld::process::{
    born_rule, causal_class, is_boxworld_process, satisfies_nsp, uniform_process,
    validate_process_tensor, CausalClass, ProcessDims,
};
use boxworld::tensor::{contract, total_reduction, AxisSpec, LabeledTensor};

fn catalog(name: &str) -> NamedConstruction<Rat> {
    by_name::<Rat>(name).unwrap().unwrap()
}

#[test]
fn catalog_processes_classify_as_documented() {
    // all constructions are boxworld processes except the two counterexamples
    for name in CATALOG {
        let c = catalog(name);
        let bw = is_boxworld_process(&c.process).unwrap();
        match name {
            "diamond_2sig" | "triangle" => assert!(!bw, "{name}"),
            _ => assert!(bw, "{name}"),
        }
    }
    // the violating processes are in no causal order
    for name in ["gyni_bit", "gyni_trit", "lgyni", "ocb"] {
        let c = catalog(name);
        assert_eq!(causal_class(&c.process).unwrap(), CausalClass::NoneOfOrdered, "{name}");
    }
}

#[test]
fn diamond_nsp_tracks_payload_signaling() {
    // nonsignaling payload -> NSP (and in fact boxworld); signaling payload -> not NSP
    let w_ns = w_diamond(pr_box::<Rat>().tensor()).unwrap();
    assert!(satisfies_nsp(&w_ns).unwrap());
    assert!(is_boxworld_process(&w_ns).unwrap());

    // the payload delta_{O_A,I_B} delta_{O_B,0} signals from Bob to Alice
    let signaling = LabeledTensor::<Rat>::from_fn(
        vec![
            AxisSpec::output("O_A", 2),
            AxisSpec::output("O_B", 2),
            AxisSpec::input("I_A", 2),
            AxisSpec::input("I_B", 2),
        ],
        |idx| {
            if idx[0] == idx[3] && idx[1] == 0 {
                rat(1, 1)
            } else {
                rat(0, 1)
            }
        },
    );
    let w_sig = w_diamond(&signaling).unwrap();
    assert!(validate_process_tensor(&w_sig).unwrap().is_valid());
    assert!(!satisfies_nsp(&w_sig).unwrap());
}

#[test]
fn diamond_process_total_reduction_is_four() {
    let c = catalog("diamond_2sig");
    assert_eq!(total_reduction(c.process.tensor()), rat(4, 1));
}

#[test]
fn diamond_channels_sit_in_the_operation_subspace() {
    let t = t_diamond::<Rat>(Party::A);
    for x in 0..2 {
        let ch = t.channel(x);
        assert!(project_to_operation_subspace(&ch, Party::A).unwrap().tensor_eq(&ch));
    }
}

#[test]
fn triangle_instrument_classification() {
    // Alice's operation encodes the setting into O'_A: signaling.
    // Bob's feeds the setting into I_B only: nonsignaling (nontrivial case).
    assert_eq!(
        is_nonsignaling_instrument(&t_triangle_a::<Rat>()).unwrap(),
        NsClass::Signaling
    );
    assert_eq!(
        is_nonsignaling_instrument(&t_triangle_b::<Rat>()).unwrap(),
        NsClass::Nontrivial
    );
}

#[test]
fn lgyni_correlation_scores() {
    let c = catalog("lgyni");
    assert_eq!(lgyni(&c.expected).unwrap(), rat(11, 12));
    // the same correlation scores 5/12 in the GYNI game: only the inputs
    // (0,0) and (1,1) can satisfy both guesses, with weights 1 and 2/3
    assert_eq!(gyni(&c.expected).unwrap(), rat(5, 12));
}

#[test]
fn ocb_correlation_marginals_and_gyni_score() {
    let c = catalog("ocb");
    assert_eq!(ocb(&c.expected).unwrap(), rat(1, 1));
    // marginal guessing probabilities are only 3/4: no perfect two-way signaling
    let mut p_ay = rat(0, 1);
    let mut p_bx = rat(0, 1);
    for a in 0..2 {
        for b in 0..2 {
            for x in 0..2 {
                for s in 0..4 {
                    let v = c.expected.value(a, b, x, s);
                    if a == s >> 1 {
                        p_ay = p_ay.clone() + v.clone();
                    }
                    if b == x {
                        p_bx = p_bx.clone() + v;
                    }
                }
            }
        }
    }
    assert_eq!(p_ay / rat(8, 1), rat(3, 4));
    assert_eq!(p_bx / rat(8, 1), rat(3, 4));
    // GYNI of the y'-averaged correlation sits exactly at the causal bound
    let marg = c.expected.marginal_over_y_prime().unwrap();
    assert_eq!(gyni(&marg).unwrap(), rat(1, 2));
    assert_eq!(
        boxworld::inequalities::signaling_profile(&c.expected).unwrap().profile,
        SignalingProfile::TwoWay
    );
}

#[test]
fn gyni_constructions_respect_the_signaling_bound() {
    for name in ["gyni_bit", "gyni_trit", "lgyni", "ocb"] {
        let c = catalog(name);
        let dims = c.process.dims();
        let d = dims.alice.d_out_prime.min(dims.bob.d_out_prime);
        let bound: Rat = two_way_signaling_bound(d).unwrap();
        if c.expected.cards() == (2, 2, 2, 2) {
            assert!(gyni(&c.expected).unwrap() <= bound, "{name}");
        }
    }
}

#[test]
fn gyni_bit_correlation_is_not_causal() {
    let c = catalog("gyni_bit");
    assert!(!is_causal(&c.expected).unwrap());
}

#[test]
fn ns_bit_vertices_are_extremal() {
    // vertex-representation LP: no vertex is a convex combination of the rest
    let verts = ns_bit_vertices::<Rat>();
    let flat: Vec<Vec<Rat>> = verts
        .iter()
        .map(|v| v.tensor().canonicalized().data().to_vec())
        .collect();
    for target in 0..verts.len() {
        let others: Vec<&Vec<Rat>> = flat
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != target)
            .map(|(_, v)| v)
            .collect();
        let mut rows: Vec<Row<Rat>> = Vec::new();
        for e in 0..flat[target].len() {
            rows.push(Row {
                coeffs: others
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| !boxworld::Scalar::is_zero_tol(&v[e]))
                    .map(|(j, v)| (j, v[e].clone()))
                    .collect(),
                rhs: flat[target][e].clone(),
            });
        }
        rows.push(Row {
            coeffs: (0..others.len()).map(|j| (j, rat(1, 1))).collect(),
            rhs: rat(1, 1),
        });
        let lp = LinearProgram { n_vars: others.len(), objective: vec![rat(0, 1); others.len()], rows };
        assert_eq!(solve_feasibility(&lp).unwrap_err(), LpError::Infeasible, "vertex {target}");
    }
}

#[test]
fn thousand_random_instruments_validate() {
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    for _ in 0..1000 {
        let inst = random_instrument::<Rat>(Party::A, OpDims::all(2), 2, 2, &mut rng);
        assert!(validate_instrument(&inst).unwrap().is_valid());
    }
}

#[test]
fn convex_mixtures_of_instruments_validate() {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let dims = OpDims::all(2);
    for _ in 0..20 {
        let a = random_instrument::<Rat>(Party::A, dims, 2, 2, &mut rng);
        let b = random_instrument::<Rat>(Party::A, dims, 2, 2, &mut rng);
        let mixed: Vec<LabeledTensor<Rat>> = a
            .elements()
            .iter()
            .zip(b.elements())
            .map(|(ea, eb)| {
                ea.scale(&rat(2, 5)).add(&eb.scale(&rat(3, 5))).unwrap()
            })
            .collect();
        let inst = Instrument::new(Party::A, 2, 2, dims, mixed).unwrap();
        assert!(validate_instrument(&inst).unwrap().is_valid());
    }
}

#[test]
fn every_deterministic_channel_wing_preserves_ns_boxes() {
    // local operations map nonsignaling boxes to nonsignaling boxes, even on
    // one wing; checked over all 64 all-bit channels and all 24 vertices
    let dims = OpDims::all(2);
    let mut seen = std::collections::BTreeSet::new();
    let verts = ns_bit_vertices::<Rat>();
    for comp in enumerate_det_components(dims, 2) {
        if !seen.insert((comp.pre.clone(), comp.post.clone())) {
            continue;
        }
        let ch = comp.channel_tensor::<Rat>(Party::A, dims);
        for v in &verts {
            let image = contract(&ch, v.tensor()).unwrap();
            // result lives on (O'_A, O_B | I'_A, I_B); rename to box layout
            let as_box = image
                .renamed("O'_A", "O_A")
                .unwrap()
                .renamed("I'_A", "I_A")
                .unwrap();
            assert!(is_nonsignaling_box(&as_box).unwrap());
        }
    }
    assert_eq!(seen.len(), 64);
}

#[test]
fn deterministic_one_way_correlation_realizes_with_matching_class() {
    // a = x reported to Bob: delta_{A,X} delta_{B,X}
    let p = Correlation::from_fn((2, 2, 2, 2), |a, b, x, _y| {
        if a == x && b == x {
            rat(1, 1)
        } else {
            rat(0, 1)
        }
    })
    .unwrap();
    let c = realize_causal(&p, CausalKind::AliceFirst).unwrap();
    assert!(c.expected.tensor().tensor_eq(p.tensor()));
    assert_eq!(causal_class(&c.process).unwrap(), CausalClass::AliceFirst);
    // handing it to the wrong realizer is an error
    assert!(realize_causal(&two_way(), CausalKind::AliceFirst).is_err());
}

fn two_way() -> Correlation<Rat> {
    Correlation::from_fn((2, 2, 2, 2), |a, b, x, y| {
        if a == y && b == x {
            rat(1, 1)
        } else {
            rat(0, 1)
        }
    })
    .unwrap()
}

#[test]
fn halfway_mixture_realizes_exactly() {
    let pab = Correlation::from_fn((2, 2, 2, 2), |a, b, x, _| {
        if a == x && b == x {
            rat(1, 1)
        } else {
            rat(0, 1)
        }
    })
    .unwrap();
    let pba = Correlation::from_fn((2, 2, 2, 2), |a, b, _, y| {
        if b == y && a == (y ^ 1) {
            rat(1, 1)
        } else {
            rat(0, 1)
        }
    })
    .unwrap();
    let p = Correlation::mix(&[(rat(1, 2), &pab), (rat(1, 2), &pba)]).unwrap();
    let c = realize_causal(&p, CausalKind::Mixture).unwrap();
    assert!(c.expected.tensor().tensor_eq(p.tensor()));
    assert!(is_boxworld_process(&c.process).unwrap());
}

#[test]
fn lp_matches_brute_force_on_instrument_polytope_against_uniform_process() {
    // with W uniform and the construction partner fixed, the LP over the
    // instrument polytope must agree with the maximum over all deterministic
    // instruments — evidence that the characterization generates the polytope
    let dims = OpDims { d_in: 2, d_out_prime: 2, d_in_prime: 1, d_out: 2 };
    let comps = enumerate_det_components(dims, 2);
    assert_eq!(comps.len(), 32);

    let cases: [(Objective, Instrument<Rat>, Rat); 3] = [
        (Objective::Gyni, gyni_bit::<Rat>().unwrap().bob, rat(1, 4)),
        (Objective::Lgyni, lgyni_construction::<Rat>().unwrap().bob, rat(5, 8)),
        (Objective::Ocb, ocb_construction::<Rat>().unwrap().bob, rat(1, 2)),
    ];
    for (obj, partner, expected) in cases {
        let w = uniform_process::<Rat>(ProcessDims { alice: dims, bob: partner.dims });
        let mut brute = rat(0, 1);
        for i in 0..comps.len() {
            for j in 0..comps.len() {
                let inst: Instrument<Rat> = instrument_from_components(
                    Party::A,
                    dims,
                    2,
                    &[comps[i].clone(), comps[j].clone()],
                )
                .unwrap();
                let p = born_rule(&w, &inst, &partner).unwrap();
                let v = obj.evaluate(&p).unwrap();
                if v > brute {
                    brute = v;
                }
            }
        }
        let (lp_value, _) = max_over_instrument(obj, &w, &partner, Party::A).unwrap();
        assert_eq!(lp_value, brute, "{obj:?}");
        assert_eq!(lp_value, expected, "{obj:?}");
    }
}

#[test]
fn instrument_lp_recovers_ocb_maximum() {
    let o = ocb_construction::<Rat>().unwrap();
    let (v, _) = max_over_instrument(Objective::Ocb, &o.process, &o.bob, Party::A).unwrap();
    assert_eq!(v, rat(1, 1));
}

#[test]
fn process_lp_dominates_the_fixed_constructions() {
    for (name, obj) in [
        ("gyni_bit", Objective::Gyni),
        ("gyni_trit", Objective::Gyni),
        ("lgyni", Objective::Lgyni),
        ("ocb", Objective::Ocb),
    ] {
        let c = catalog(name);
        let achieved = obj.evaluate(&c.expected).unwrap();
        let (best, _) = max_over_processes(obj, &c.alice, &c.bob).unwrap();
        assert!(best >= achieved, "{name}");
    }
}

#[test]
fn bound_table_matches_the_stored_constants() {
    assert_eq!(BoundTable::causal::<Rat>(), [rat(1, 2), rat(3, 4), rat(3, 4)]);
    assert_eq!(BoundTable::boxworld::<Rat>(), [rat(3, 4), rat(11, 12), rat(1, 1)]);
    let pm = BoundTable::process_matrix();
    assert_eq!(pm[0], 0.7592);
    assert_eq!(pm[1], 0.8194);
    assert!((pm[2] - (2.0 + 2.0_f64.sqrt()) / 4.0).abs() < 1e-12);
}

#[test]
fn born_rule_outputs_are_correlations_for_random_valid_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let dims = ProcessDims::all(2);
    for _ in 0..10 {
        let w = boxworld::process::random_boxworld_process::<Rat>(dims, &mut rng);
        let a = random_instrument::<Rat>(Party::A, dims.alice, 2, 2, &mut rng);
        let b = random_instrument::<Rat>(Party::B, dims.bob, 2, 2, &mut rng);
        // Correlation::new re-checks normalization and nonnegativity
        let p = born_rule(&w, &a, &b).unwrap();
        assert!(gyni(&p).unwrap() <= rat(3, 4));
    }
}

#[test]
fn catalog_instruments_all_validate() {
    for name in CATALOG {
        let c = catalog(name);
        assert!(validate_instrument(&c.alice).unwrap().is_valid(), "{name} alice");
        assert!(validate_instrument(&c.bob).unwrap().is_valid(), "{name} bob");
    }
}

#[test]
fn triangle_alice_is_a_single_deterministic_triple() {
    // pre: I constant (trivial wire); post: O' = X; outcome: A = I'
    use boxworld::operations::{from_decomposition, DetTriple, DeterministicDecomposition};
    let dims = OpDims { d_in: 1, d_out_prime: 2, d_in_prime: 2, d_out: 1 };
    let n_settings = 2;
    let mut post = Vec::new();
    let mut outcome = Vec::new();
    for ip in 0..2 {
        for _o in 0..1 {
            for x in 0..n_settings {
                post.push(x);
                outcome.push(ip);
            }
        }
    }
    let triple = DetTriple { pre: vec![0; 2 * n_settings], post, outcome };
    let built = from_decomposition::<Rat>(
        Party::A,
        dims,
        2,
        n_settings,
        &DeterministicDecomposition { weights: vec![rat(1, 1)], components: vec![triple] },
    )
    .unwrap();
    let reference = t_triangle_a::<Rat>();
    assert!(built.as_tensor().tensor_eq(&reference.as_tensor()));
}

#[test]
fn gyni_bit_process_decomposes_into_ordered_parts() {
    use boxworld::process::affine_decompose;
    let c = catalog("gyni_bit");
    let d = affine_decompose(&c.process, Party::B).unwrap();
    assert_eq!(d.lambda, rat(2, 1));
    assert_eq!(causal_class(&d.w_ab).unwrap(), CausalClass::AliceFirst);
    assert_eq!(causal_class(&d.w_ba).unwrap(), CausalClass::BobFirst);
    assert!(d.recombined().unwrap().tensor_eq(c.process.tensor()));
}

#[test]
fn float_backend_agrees_on_the_ladder() {
    use boxworld::constructions::{gyni_bit as gb, triangle as tri};
    let g = gb::<f64>().unwrap();
    assert!(is_boxworld_process(&g.process).unwrap());
    assert!((gyni(&g.expected).unwrap() - 2.0 / 3.0).abs() < 1e-9);
    let t = tri::<f64>().unwrap();
    assert!(satisfies_nsp(&t.process).unwrap());
    assert!(!is_boxworld_process(&t.process).unwrap());
}

#[test]
fn gyni_trit_expected_correlation_misses_only_the_zero_inputs() {
    let c = gyni_trit::<Rat>().unwrap();
    for x in 0..2 {
        for y in 0..2 {
            let win = c.expected.value(y, x, x, y);
            if x == 0 && y == 0 {
                assert_eq!(win, rat(0, 1));
            } else {
                assert_eq!(win, rat(1, 1));
            }
        }
    }
}

#[test]
fn seesaw_reaches_the_trit_gyni_value_on_the_augmented_layout() {
    // the 3/4 point lives on the layout with O'_A, O_B, O'_B ternary; a
    // seeded seesaw over that layout finds it (the fully ternary layout has
    // 3^8 variables per LP and is out of reach for the dense exact solver)
    use boxworld::optimizer::{seesaw, SeesawOptions};
    let dims = ProcessDims {
        alice: OpDims { d_in: 2, d_out_prime: 3, d_in_prime: 1, d_out: 2 },
        bob: OpDims { d_in: 2, d_out_prime: 3, d_in_prime: 1, d_out: 3 },
    };
    let out = seesaw::<Rat>(
        Objective::Gyni,
        dims,
        SeesawOptions { restarts: 96, seed: 100, symmetric: false, max_rounds: 48 },
    )
    .unwrap();
    assert_eq!(out.best_value, rat(3, 4));
}
