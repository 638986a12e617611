use vbcast::broadcast::{
    canonical_b, check_axioms, classical_bcl, cloner, decoherence, family_b_lambda, verify_uniqueness,
    verify_uniqueness_with, UniquenessOptions,
};
use vbcast::densemat::{
    eigh, haar_unitary, kron, kron_all, partial_trace, random_channel, random_density, random_pure, Keep, Operator,
    Rng, C64,
};
use vbcast::hovm::depolarizing_mp;
use vbcast::sot::{star, star_function, theorem4_pipeline, BroadcastStar, WrongSideStar};
use vbcast::SuperMap;

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// `½(ρ⊗I·SWAP + SWAP·ρ⊗I)` entry by entry: `⟨ab|·|cd⟩ = ½(ρ_ad δ_bc + δ_ad ρ_cb)`
/// with the second term from `SWAP·(ρ⊗I)`.
fn b_by_index(rho: &Operator) -> Operator {
    let d = rho.rows();
    let delta = |x: usize, y: usize| if x == y { 1.0 } else { 0.0 };
    Operator::from_fn(d * d, d * d, |r, c| {
        let (a, b) = (r / d, r % d);
        let (cc, dd) = (c / d, c % d);
        (rho[(a, dd)] * delta(b, cc) + rho[(b, cc)] * delta(a, dd)) * 0.5
    })
}

#[test]
fn b_matches_index_formula() {
    let mut rng = Rng::new(1, 0);
    for d in 2..=4 {
        let b = canonical_b(d).unwrap();
        for _ in 0..5 {
            let rho = random_density(d, &mut rng);
            assert!(b.apply(&rho).unwrap().max_abs_diff(&b_by_index(&rho)) < 1e-14);
        }
    }
}

#[test]
fn b_on_qubit_ket_zero() {
    let b = canonical_b(2).unwrap();
    let out = b.apply(&Operator::unit(2, 0, 0)).unwrap();
    let mut expect = Operator::zeros(4, 4);
    expect[(0, 0)] = re(1.0);
    expect[(1, 2)] = re(0.5);
    expect[(2, 1)] = re(0.5);
    assert!(out.max_abs_diff(&expect) < 1e-15);
}

#[test]
fn swap_marginal_returns_input() {
    let mut rng = Rng::new(2, 0);
    for d in 2..=4 {
        let rho = random_density(d, &mut rng);
        let x = kron(&rho, &Operator::identity(d)).matmul(&Operator::swap(d));
        assert!(partial_trace(&x, (d, d), Keep::Second).unwrap().max_abs_diff(&rho) < 1e-12);
    }
}

#[test]
fn classical_copy_examples() {
    let id = Operator::identity(2);
    let bcl = classical_bcl(2, &id).unwrap();
    assert!(bcl.apply(&Operator::unit(2, 0, 1)).unwrap().max_abs() < 1e-15);
    let p = 0.3;
    let rho = Operator::from_real_diag(&[p, 1.0 - p]);
    let out = bcl.apply(&rho).unwrap();
    assert!(out.max_abs_diff(&Operator::from_real_diag(&[p, 0.0, 0.0, 1.0 - p])) < 1e-15);
    for keep in [Keep::First, Keep::Second] {
        assert!(partial_trace(&out, (2, 2), keep).unwrap().max_abs_diff(&rho) < 1e-15);
    }
}

#[test]
fn decohered_b_is_classical_copy() {
    for d in 2..=4 {
        let id = Operator::identity(d);
        let deco = decoherence(d, &id).unwrap();
        let dd = SuperMap::tensor(&deco, &deco);
        let b = canonical_b(d).unwrap();
        let sandwich = SuperMap::compose(&dd, &SuperMap::compose(&b, &deco).unwrap()).unwrap();
        assert!(sandwich.max_abs_diff(&classical_bcl(d, &id).unwrap()) < 1e-10);
    }
}

#[test]
fn decoherence_is_self_adjoint_projector() {
    let mut rng = Rng::new(3, 0);
    let u = haar_unitary(3, &mut rng);
    let deco = decoherence(3, &u).unwrap();
    assert!(deco.hs_adjoint().max_abs_diff(&deco) < 1e-12);
    assert!(SuperMap::compose(&deco, &deco).unwrap().max_abs_diff(&deco) < 1e-12);
}

#[test]
fn b_jamiolkowski_is_symmetrized_swaps() {
    for d in 2..=3 {
        let id = Operator::identity(d);
        let s = Operator::swap(d);
        let expect = kron(&s, &id).anticommutator(&kron(&id, &s)).scale_re(0.5);
        assert!(canonical_b(d).unwrap().jamiolkowski().max_abs_diff(&expect) < 1e-12);
        let j = depolarizing_mp(d).unwrap().jamiolkowski();
        let flat = kron_all(&[&id, &id, &id]).scale_re(1.0 / (d * d) as f64);
        assert!(j.max_abs_diff(&flat) < 1e-12);
        assert!(SuperMap::identity(d).jamiolkowski().max_abs_diff(&s) < 1e-15);
    }
}

#[test]
fn choi_trace_is_dimension() {
    for d in 2..=5 {
        assert!((canonical_b(d).unwrap().choi().trace().re - d as f64).abs() < 1e-12);
    }
}

#[test]
fn covariance_is_exact_on_many_unitaries() {
    let mut rng = Rng::new(4, 0);
    for d in 2..=4 {
        let r = check_axioms(&canonical_b(d).unwrap(), 10, 50, &mut rng).unwrap();
        assert!(r.covariance_residual < 1e-10, "d = {d}: {}", r.covariance_residual);
    }
}

fn first_marginal_by_sum(x: &Operator, d: usize) -> Operator {
    Operator::from_fn(d, d, |i, j| (0..d).map(|k| x[(i * d + k, j * d + k)]).sum())
}

#[test]
fn cloner_is_not_broadcasting() {
    // marginal defect (I − dψ)/(2(d+1)): trace norm (d−1)/(d+1) for every ψ,
    // largest entry (d−1)/(2(d+1)) on basis states
    let mut rng = Rng::new(5, 0);
    for d in 2..=4 {
        let df = d as f64;
        let m = cloner(d).unwrap();
        let psi = random_pure(d, &mut rng);
        let diff = &first_marginal_by_sum(&m.apply(&psi).unwrap(), d) - &psi;
        let tn: f64 = eigh(&diff).unwrap().values.iter().map(|v| v.abs()).sum();
        assert!(tn >= (df - 1.0) / (df + 1.0) - 1e-6, "d = {d}: trace norm {tn}");

        let zero = Operator::unit(d, 0, 0);
        let diff = &first_marginal_by_sum(&m.apply(&zero).unwrap(), d) - &zero;
        assert!(diff.max_abs() >= (df - 1.0) / (2.0 * (df + 1.0)) - 1e-6, "d = {d}: entry {}", diff.max_abs());
    }
}

#[test]
fn uniqueness_qubit() {
    let cert = verify_uniqueness(2, 20, &mut Rng::new(6, 0)).unwrap();
    assert_eq!(cert.nullity, 0);
    assert!(cert.candidate_residual < 1e-8);
    assert!(cert.singular_value_gap >= 1e6);
    assert!(cert.solution.unwrap().max_abs_diff(&canonical_b(2).unwrap()) < 1e-8);
}

#[test]
fn uniqueness_over_complex_unknowns() {
    let opts = UniquenessOptions { complex_unknowns: true, ..UniquenessOptions::new(20) };
    let cert = verify_uniqueness_with(2, &opts, &mut Rng::new(7, 0)).unwrap();
    assert_eq!(cert.nullity, 0);
    assert!(cert.candidate_residual < 1e-8);
}

#[test]
fn dropping_permutation_admits_b_lambda() {
    let opts = UniquenessOptions { include_permutation: false, ..UniquenessOptions::new(20) };
    let cert = verify_uniqueness_with(2, &opts, &mut Rng::new(8, 0)).unwrap();
    assert!(cert.nullity >= 1);
    // B_λ − B is a null direction
    let dir = family_b_lambda(2, 1.0).unwrap().sub(&canonical_b(2).unwrap()).unwrap();
    let dir = dir.choi().scale_re(1.0 / dir.choi().frobenius_norm());
    let captured: f64 = cert.null_space.iter().map(|v| v.hs_inner(&dir).norm_sqr()).sum();
    assert!((captured - 1.0).abs() < 1e-8, "overlap {captured}");
}

#[test]
fn dropping_classical_leaves_freedom() {
    let opts = UniquenessOptions { include_classical: false, ..UniquenessOptions::new(20) };
    let cert = verify_uniqueness_with(2, &opts, &mut Rng::new(9, 0)).unwrap();
    assert!(cert.nullity >= 1);
    // every null direction is still covariant and permutation invariant
    let d = 2;
    for v in &cert.null_space {
        let m = SuperMap::from_choi(d, d * d, v.clone()).unwrap();
        let r = check_axioms(&m, 10, 10, &mut Rng::new(10, 0)).unwrap();
        assert!(r.covariance_residual < 1e-8 && r.permutation_residual < 1e-8);
    }
}

#[test]
fn star_examples() {
    let mut rng = Rng::new(11, 0);
    let d = 3;
    let b = canonical_b(d).unwrap();
    let rho = random_density(d, &mut rng);
    let t = star(&SuperMap::identity(d), &rho, &b).unwrap();
    let anti = (&kron(&rho, &Operator::identity(d)).matmul(&Operator::swap(d))
        + &Operator::swap(d).matmul(&kron(&rho, &Operator::identity(d))))
        .scale_re(0.5);
    assert!(t.operator.max_abs_diff(&anti) < 1e-14);

    let dep = SuperMap::from_action(d, d, |x| Operator::identity(d).scale(x.trace() / re(d as f64))).unwrap();
    let t = star(&dep, &rho, &b).unwrap();
    assert!(t.first_marginal().max_abs_diff(&rho) < 1e-12);
    assert!(t.second_marginal().max_abs_diff(&Operator::identity(d).scale_re(1.0 / d as f64)) < 1e-12);
    assert!(t.marginal_residual().unwrap() < 1e-12);
}

#[test]
fn pure_qubit_state_over_time_has_eigenvalue_minus_half() {
    let b = canonical_b(2).unwrap();
    let t = star(&SuperMap::identity(2), &Operator::unit(2, 0, 0), &b).unwrap();
    let min = *eigh(&t.operator).unwrap().values.last().unwrap();
    assert!((min + 0.5).abs() < 1e-10);
}

#[test]
fn pure_state_minimum_eigenvalue_is_minus_half_in_every_dimension() {
    // On span{|0a⟩, |a0⟩} the operator is ½σₓ, so −½ appears d−1 times.
    let mut rng = Rng::new(12, 0);
    for d in 2..=5 {
        let b = canonical_b(d).unwrap();
        let psi = random_pure(d, &mut rng);
        let vals = eigh(&b.apply(&psi).unwrap()).unwrap().values;
        let negatives: Vec<f64> = vals.iter().copied().filter(|v| *v < -1e-10).collect();
        assert_eq!(negatives.len(), d - 1, "d = {d}");
        assert!(negatives.iter().all(|v| (v + 0.5).abs() < 1e-10), "d = {d}: {negatives:?}");
    }
}

#[test]
fn canonical_star_singles_out_b() {
    let b = canonical_b(2).unwrap();
    let good = BroadcastStar { broadcaster: b.clone() };
    let report = theorem4_pipeline(&good, 20, 20, &mut Rng::new(13, 0)).unwrap();
    assert!(report.passes_axioms && report.agrees);
    assert!(report.distance_to_solution.unwrap() < 1e-6);

    let bad = BroadcastStar { broadcaster: family_b_lambda(2, 0.3).unwrap() };
    let report = theorem4_pipeline(&bad, 20, 20, &mut Rng::new(13, 0)).unwrap();
    assert!(!report.passes_axioms && !report.agrees);

    assert!(star_function("wrong-side", &b).is_some());
    let wrong = WrongSideStar { broadcaster: b };
    let e = random_channel(2, 2, &mut Rng::new(14, 0));
    let t = vbcast::sot::StarFunction::star(&wrong, &e, &Operator::identity(2).scale_re(0.5)).unwrap();
    assert!((t.operator.trace().re - 1.0).abs() < 1e-12);
}
