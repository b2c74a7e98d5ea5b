use proptest::prelude::*;
use ptasep::bethe::solve_at;
use ptasep::finite::{integrand_at, multipoint_prob, ContourSpec};
use ptasep::linalg::{det_i_minus_product, Matrix};
use ptasep::scalar::c64_to_dd;
use ptasep::toeplitz::{
    c_factor, generic_identity_check, multipoint_prob_oracle, random_instance, toeplitz_integrand_at,
    GenericIdentityInstance,
};
use ptasep::{Error, InitialCondition, ModelParams, ObsPoint, ObservationSet, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn obs(points: &[(i64, f64, i64)]) -> ObservationSet {
    ObservationSet::new(points.iter().map(|&(k, t, a)| ObsPoint { k, t, a }).collect()).unwrap()
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[test]
fn sets_without_extra_points_reduce_to_det_m() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for m in 1..=3 {
        let inst = random_instance(&mut rng, m, 3, &vec![3; m]);
        let rep = generic_identity_check(&inst).unwrap();
        assert!(rep.rel_err < 1e-8, "m={m}: {}", rep.rel_err);
        assert!((rep.lhs - rep.det_m).norm() < 1e-8 * rep.lhs.norm());
        // the chained sums cancel for m = 3; in double-double the gap disappears
        assert!(generic_identity_check(&inst.map(c64_to_dd)).unwrap().rel_err < 1e-20);
    }
}

#[test]
fn genuine_toeplitz_matrix() {
    // p_i(x) = x^i, q_j(x) = x^(-j) on one set
    let s: Vec<C64> = (0..6).map(|j| C64::from_polar(0.5 + 0.2 * j as f64, 1.1 * j as f64)).collect();
    let n = 3;
    let p = (1..=n).map(|i| s.iter().map(|w| w.powi(i as i32)).collect()).collect();
    let q = (1..=n).map(|j| s.iter().map(|w| w.powi(-(j as i32))).collect()).collect();
    let h = vec![s.iter().map(|w| w + 2.0).collect()];
    let inst = GenericIdentityInstance { s: vec![s], r: vec![vec![0, 2, 5]], p, q, h };
    let rep = generic_identity_check(&inst).unwrap();
    assert!(rep.rel_err < 1e-8, "{}", rep.rel_err);
}

#[test]
fn batch_of_random_instances() {
    let mut worst = 0.0f64;
    for index in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        rng.set_stream(index);
        let m = rng.gen_range(1..=3);
        let n = rng.gen_range(1..=4);
        let sizes: Vec<usize> = (0..m).map(|_| rng.gen_range(n..=7)).collect();
        let inst = random_instance(&mut rng, m, n, &sizes);
        let rep = generic_identity_check(&inst).unwrap();
        assert!((rep.det_m - rep.det_m_closed).norm() < 1e-8 * rep.det_m.norm());
        worst = worst.max(rep.rel_err);
    }
    assert!(worst < 1e-7, "{worst}");
}

#[test]
fn double_double_tightens_the_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let inst = random_instance(&mut rng, 2, 3, &[6, 5]);
    let rep = generic_identity_check(&inst.map(c64_to_dd)).unwrap();
    assert!(rep.rel_err < 1e-20, "{}", rep.rel_err);
}

#[test]
fn violated_preconditions_are_reported() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut inst = random_instance(&mut rng, 2, 2, &[4, 4]);
    let x = inst.r[1][0];
    inst.h[1][x] = c(0.0, 0.0);
    assert!(matches!(generic_identity_check(&inst), Err(Error::Precondition(_))));

    let mut inst = random_instance(&mut rng, 2, 2, &[4, 4]);
    inst.s[1][3] = inst.s[0][1];
    assert!(matches!(generic_identity_check(&inst), Err(Error::Precondition(_))));
}

#[test]
fn conjugation_leaves_the_determinant_alone() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut draw = || c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let (p, q) = (4, 3);
    let a = Matrix::from_fn(p, q, |_, _| draw());
    let b = Matrix::from_fn(q, p, |_, _| draw());
    // lambda(w) mu(w) = 1 on the row points and lambda'(w') mu'(w') = 1 on the columns
    let lam: Vec<C64> = (0..p).map(|_| draw() + 2.0).collect();
    let lam2: Vec<C64> = (0..q).map(|_| draw() + 2.0).collect();
    let a2 = Matrix::from_fn(p, q, |i, j| lam[i] * a[(i, j)] * lam2[j]);
    let b2 = Matrix::from_fn(q, p, |j, i| b[(j, i)] / (lam2[j] * lam[i]));
    let d1 = det_i_minus_product(&a, &b);
    let d2 = det_i_minus_product(&a2, &b2);
    assert!((d1 - d2).norm() < 1e-12 * d1.norm());
}

#[test]
fn c_factor_small_cases() {
    let p = ModelParams::new(5, 2).unwrap();
    let r1 = solve_at(&p, c(0.6, 0.2)).unwrap();
    assert!((c_factor(&[&r1], &obs(&[(1, 1.0, 0)])) - c(1.0, 0.0)).norm() < 1e-14);
    // m = 1: (-1)^((k-1)(N+1)) z^((k-1)L)
    let zl = r1.z.zl;
    let expect = zl.powi(2);
    assert!((c_factor(&[&r1], &obs(&[(3, 1.0, 0)])) - expect).norm() < 1e-14 * expect.norm());
}

#[test]
fn integrands_agree_at_random_nested_points() {
    let ics = [
        InitialCondition::step(6, 3).unwrap(),
        InitialCondition::flat(3, 2).unwrap(),
        InitialCondition::stepflat(2, 2, 2).unwrap(),
        InitialCondition::explicit(7, vec![-5, -2, -1, 0]).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for ic in &ics {
        for _ in 0..5 {
            let o = obs(&[(1, rng.gen_range(0.2..1.0), 0), (ic.n as i64, rng.gen_range(1.0..2.0), 2)]);
            let r1 = rng.gen_range(0.6..0.9);
            let z = [C64::from_polar(r1, rng.gen_range(0.0..6.28)), C64::from_polar(0.5 * r1, rng.gen_range(0.0..6.28))];
            let f = integrand_at(ic, &z, &o).unwrap();
            let t = toeplitz_integrand_at(ic, &z, &o).unwrap();
            assert!((f - t).norm() < 1e-6 * t.norm(), "{:?}: {f} vs {t}", ic.y);
        }
    }
}

#[test]
fn oracle_probabilities_match_fredholm() {
    let spec = ContourSpec::default();
    for ic in [InitialCondition::step(4, 2).unwrap(), InitialCondition::flat(2, 2).unwrap()] {
        let o = obs(&[(2, 0.8, 1)]);
        let a = multipoint_prob_oracle(&ic, &o, &spec).unwrap().probability;
        let b = multipoint_prob(&ic, &o, &spec).unwrap().probability;
        assert!((a - b).abs() < 1e-6);
        let o = obs(&[(1, 0.5, 1), (2, 1.2, 1)]);
        let a = multipoint_prob_oracle(&ic, &o, &spec).unwrap().probability;
        let b = multipoint_prob(&ic, &o, &spec).unwrap().probability;
        assert!((a - b).abs() < 1e-5);
    }
    let p = multipoint_prob_oracle(&InitialCondition::step(2, 1).unwrap(), &obs(&[(1, 1.0, 1)]), &spec).unwrap();
    assert!((p.probability - (1.0 - (-1.0f64).exp())).abs() < 1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn identity_holds_for_random_shapes(seed in any::<u64>(), m in 1usize..=3, n in 1usize..=4, extra in prop::collection::vec(0usize..4, 3)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sizes: Vec<usize> = extra[..m].iter().map(|e| n + e).collect();
        let inst = random_instance(&mut rng, m, n, &sizes);
        let rep = generic_identity_check(&inst).unwrap();
        prop_assert!(rep.rel_err < 1e-7, "{}", rep.rel_err);
    }
}
