use std::sync::Arc;

use korovkin::bounds::{
    compute_delta, compute_mu, remark1_decomposition_check, theorem2_report, BoundEvaluator,
};
use korovkin::function_space::{
    product_grid, tol_grid, uniform_grid, CorpusFn, Domain, SampledFunction,
};
use korovkin::operators::{
    lcm, make_composition_map, Family, OperatorHandle, OperatorSpec, PhiSpec,
};

fn warps() -> Vec<PhiSpec> {
    vec![
        PhiSpec::Identity,
        PhiSpec::Quadratic,
        PhiSpec::Table {
            values: vec![0.0, 0.9, 0.2, 1.0],
        },
    ]
}

/// `(T_n, A = f o phi)` on a source grid holding the nodes of `T_n`.
fn pair(
    family: Family,
    phi: &PhiSpec,
    n: usize,
    target: usize,
) -> (OperatorHandle, OperatorHandle) {
    let spec = OperatorSpec::new(family).with_phi(phi.clone()).with_n(n);
    let l = spec.node_lcm(None);
    let k = uniform_grid(0.0, 1.0, lcm(l, 600) + 1).unwrap();
    let x = uniform_grid(0.0, 1.0, target).unwrap();
    let t = spec.build_on(&k, &x).unwrap();
    let a = OperatorSpec::new(Family::Composition)
        .with_phi(phi.clone())
        .build_on(&k, &x)
        .unwrap();
    (t, a)
}

fn mu_sq_tol(k: &Arc<Domain>) -> f64 {
    tol_grid(&CorpusFn::Square.sample(k).unwrap())
}

#[test]
fn mu_decreases_for_max_and_sup_bernstein() {
    for family in [Family::MaxBernstein, Family::SupBernstein] {
        let mut prev = f64::INFINITY;
        let mut first = 0.0;
        for n in 1..=256 {
            let (t, a) = pair(family, &PhiSpec::Identity, n, 201);
            let mu = compute_mu(&t, &a).unwrap();
            assert!(mu <= prev + 1e-10, "{family} n={n}: {mu} > {prev}");
            if n == 4 {
                first = mu;
            }
            prev = mu;
        }
        // qualitative limit
        assert!(
            prev <= 0.15 && prev < first / 4.0,
            "{family}: mu(256) = {prev}, mu(4) = {first}"
        );
    }
}

#[test]
fn mu_caps_hold_for_every_warp() {
    for phi in warps() {
        for n in [1, 2, 3, 5, 8, 13, 32] {
            let nf = n as f64;
            let (t, a) = pair(Family::MaxBernstein, &phi, n, 301);
            let mu = compute_mu(&t, &a).unwrap();
            assert!(
                mu * mu <= 0.25 / nf + mu_sq_tol(t.source_domain()),
                "{} n={n}",
                phi.label()
            );
            let (t, a) = pair(Family::SupBernstein, &phi, n, 301);
            let mu = compute_mu(&t, &a).unwrap();
            assert!(
                mu * mu <= 4.0 / nf + mu_sq_tol(t.source_domain()),
                "{} n={n}",
                phi.label()
            );
        }
    }
}

#[test]
fn composition_type_limits_have_zero_delta() {
    let k = uniform_grid(0.0, 1.0, 601).unwrap();
    let x = uniform_grid(0.0, 1.0, 151).unwrap();
    for phi in warps() {
        for scale in [None, Some(2.0), Some(0.3)] {
            let mut spec = OperatorSpec::new(Family::Composition).with_phi(phi.clone());
            if let Some(c) = scale {
                spec = spec.with_scale(c);
            }
            let a = spec.build_on(&k, &x).unwrap();
            assert!(compute_delta(&a).unwrap() <= 1e-10, "{}", spec.label());
        }
    }
}

#[test]
fn decomposition_identity_in_two_dimensions() {
    let g = uniform_grid(0.0, 1.0, 9).unwrap();
    let k = product_grid(&[g.clone(), g]).unwrap();
    // swap the coordinates, and a second map folding onto the diagonal
    let swap: Vec<usize> = k
        .points()
        .map(|p| k.locate(&[p[1], p[0]]).unwrap())
        .collect();
    let diag: Vec<usize> = k
        .points()
        .map(|p| k.locate(&[p[0], p[0]]).unwrap())
        .collect();
    let t = make_composition_map(swap, &k, &k).unwrap();
    let a = make_composition_map(diag, &k, &k).unwrap();
    assert!(remark1_decomposition_check(&t, &a).unwrap() <= 1e-10);
    assert!(compute_delta(&a).unwrap() <= 1e-10);
    let f = SampledFunction::from_fn(&k, |p| (p[0] - 0.3).abs() + p[1] * p[1]).unwrap();
    let r = theorem2_report(&t, &a, &f).unwrap();
    assert!(r.pass, "{r:?}");
    assert!(r.mu > 0.0 && r.lhs > 0.0);
}

#[test]
fn zero_mu_branch() {
    let k = uniform_grid(0.0, 1.0, 241).unwrap();
    let a = OperatorSpec::new(Family::Composition)
        .with_phi(PhiSpec::Quadratic)
        .build_on(&k, &k)
        .unwrap();
    let eval = BoundEvaluator::new(&k);
    for c in CorpusFn::ALL {
        let r = eval.report(&a, &a, &c.sample(&k).unwrap()).unwrap();
        assert_eq!(
            (r.mu, r.omega_f_mu, r.lhs, r.rhs),
            (0.0, 0.0, 0.0, 0.0),
            "{c}"
        );
        assert!(r.unital_fast_path && r.pass);
    }
}
