use proptest::prelude::*;
use ptasep::bethe::{solve_at, BetheRootSet};
use ptasep::symfun::{
    ch_flat, ch_flat_via_left, ch_stepflat, char_fn, energy, energy_flat, energy_stepflat, g_fn, g_lambda, g_tilde, u_set,
    u_z,
};
use ptasep::{InitialCondition, ModelParams, C64};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

fn roots(l: usize, n: usize, r: f64, phase: f64) -> BetheRootSet {
    solve_at(&ModelParams::new(l, n).unwrap(), C64::from_polar(r, phase)).unwrap()
}

#[test]
fn g_small_examples() {
    let w = [c(0.3, 0.1), c(-0.2, 0.5)];
    assert!(rel(g_lambda(&[0, 0], &w).unwrap(), c(1.0, 0.0)) < 1e-14);
    let expect = w[0] + w[1] + 1.0;
    assert!(rel(g_lambda(&[1, 0], &w).unwrap(), expect) < 1e-13);
    let x = c(0.4, -0.3);
    assert!(rel(g_lambda(&[-2], &[x]).unwrap(), (x + 1.0).powi(-2)) < 1e-14);
}

#[test]
fn g_tilde_examples() {
    let w = [c(0.3, 0.1), c(-0.2, 0.5)];
    let lambda = [0, -1];
    assert!(rel(g_tilde(&lambda, &w, 2).unwrap(), g_lambda(&lambda, &w).unwrap()) < 1e-13);
    let p = w[0] * w[1];
    let expect = (p + w[0] + w[1]) / p;
    assert!(rel(g_tilde(&[0], &w, 1).unwrap(), expect) < 1e-13);
    assert!(g_tilde(&[0], &[c(0.0, 0.0), c(0.5, 0.0)], 1).is_err());
}

#[test]
fn step_energy_and_characteristic_function_are_one() {
    let r = roots(9, 4, 0.6, 0.8);
    let ic = InitialCondition::step(9, 4).unwrap();
    assert!(rel(energy(&ic, &r).unwrap(), c(1.0, 0.0)) < 1e-12);
    for &v in &r.right {
        for &u in &r.left {
            assert!(rel(char_fn(&ic, &r, v, u).unwrap(), c(1.0, 0.0)) < 1e-10);
        }
    }
}

#[test]
fn energy_near_zero_z_is_one() {
    let ic = InitialCondition::explicit(9, vec![-6, -3, -2, 0]).unwrap();
    let r = roots(9, 4, 1e-6, 0.3);
    assert!(rel(energy(&ic, &r).unwrap(), c(1.0, 0.0)) < 1e-3);
}

#[test]
fn flat_energy_fast_path_agrees() {
    let ic = InitialCondition::flat(2, 2).unwrap();
    for j in 0..10 {
        let r = roots(4, 2, 0.1 + 0.08 * j as f64, 0.37 * j as f64 + 0.1);
        let a = energy(&ic, &r).unwrap();
        assert!(rel(energy_flat(&r, 2).unwrap(), a) < 1e-8, "j={j}");
    }
    for (n, d) in [(3, 3), (4, 2), (2, 4)] {
        let ic = InitialCondition::flat(n, d).unwrap();
        let r = roots(n * d, n, 0.55, 1.1);
        assert!(rel(energy_flat(&r, d).unwrap(), energy(&ic, &r).unwrap()) < 1e-8);
    }
}

#[test]
fn stepflat_energy_fast_path_agrees() {
    let ic = InitialCondition::stepflat(2, 2, 1).unwrap();
    for j in 0..10 {
        let r = roots(5, 2, 0.1 + 0.08 * j as f64, 0.41 * j as f64 + 0.2);
        let a = energy(&ic, &r).unwrap();
        assert!(rel(energy_stepflat(&r, 2, 1).unwrap(), a) < 1e-7, "j={j}");
    }
    let ic = InitialCondition::stepflat(3, 3, 2).unwrap();
    let r = roots(11, 3, 0.5, 2.0);
    assert!(rel(energy_stepflat(&r, 3, 2).unwrap(), energy(&ic, &r).unwrap()) < 1e-7);
}

#[test]
fn stepflat_with_no_step_is_flat() {
    let r = roots(9, 3, 0.6, 0.5);
    assert!(rel(energy_stepflat(&r, 3, 0).unwrap(), energy_flat(&r, 3).unwrap()) < 1e-8);
    assert_eq!(u_z(&r, 3).unwrap().len(), 2 * 3);
}

#[test]
fn flat_characteristic_function_closed_form() {
    let (n, d) = (3, 2);
    let ic = InitialCondition::flat(n, d).unwrap();
    let r = roots(n * d, n, 0.5, 0.9);
    let mut matched = 0;
    for &v in &r.right {
        for &u in &r.left {
            let generic = char_fn(&ic, &r, v, u).unwrap();
            let closed = ch_flat(&r, d, v, u).unwrap();
            assert!((generic - closed).norm() < 1e-7 * (1.0 + generic.norm()), "v={v} u={u}");
            let p = |w: C64| w * (w + 1.0).powi(d as i32 - 1);
            if (p(v) - p(u)).norm() < 1e-8 {
                matched += 1;
                assert!(rel(ch_flat_via_left(&r, d, v, u), closed) < 1e-7);
            } else {
                assert!(generic.norm() < 1e-7);
            }
        }
    }
    assert_eq!(matched, n * (d - 1));
}

#[test]
fn stepflat_characteristic_function_product_form() {
    let (n, d, ls) = (2, 3, 2);
    let ic = InitialCondition::stepflat(n, d, ls).unwrap();
    let r = roots(n * d + ls, n, 0.5, 0.4);
    for &v in &r.right {
        for &u in &r.left {
            let generic = char_fn(&ic, &r, v, u).unwrap();
            assert!(rel(ch_stepflat(&r, d, v, u).unwrap(), generic) < 1e-7);
        }
    }
}

#[test]
fn characteristic_function_under_translation() {
    let y = vec![-5, -2, -1, 0];
    let l = 8;
    let r = roots(l, 4, 0.6, 1.7);
    let base = InitialCondition::explicit(l, y.clone()).unwrap();
    for shift in [1i64, 2, -3] {
        let moved = InitialCondition::explicit(l, y.iter().map(|x| x + shift).collect()).unwrap();
        for &v in &r.right {
            for &u in &r.left {
                let expect = char_fn(&base, &r, v, u).unwrap() * ((u + 1.0) / (v + 1.0)).powi(shift as i32);
                assert!(rel(char_fn(&moved, &r, v, u).unwrap(), expect) < 1e-8);
            }
        }
    }
}

#[test]
fn energy_under_relabeling() {
    // moving the first n labels past the last one multiplies the energy by
    // (-1)^(n(N-n)) z^(nL) prod v^(-n) (v+1)^n
    let y = vec![-6, -4, -1, 0];
    let (l, big_n) = (9usize, 4usize);
    let r = roots(l, big_n, 0.7, 0.6);
    let e = energy(&InitialCondition::explicit(l, y.clone()).unwrap(), &r).unwrap();
    for n in 1..big_n {
        let mut yt: Vec<i64> = y[n..].to_vec();
        yt.extend(y[..n].iter().map(|x| x + l as i64));
        let et = energy(&InitialCondition::explicit(l, yt).unwrap(), &r).unwrap();
        let sign = if (n * (big_n - n)) % 2 == 0 { 1.0 } else { -1.0 };
        let prod: C64 = r.right.iter().map(|v| ((v + 1.0) / v).powi(n as i32)).product();
        let factor = sign * r.z.zl.powi(n as i32) * prod;
        assert!(rel(et, e * factor) < 1e-8, "n={n}");
    }
}

#[test]
fn auxiliary_roots_solve_g() {
    for d in 2..6 {
        let v = c(0.3, -0.4);
        let us = u_set(v, d).unwrap();
        assert_eq!(us.len(), d - 1);
        for u in us {
            assert!(g_fn(u, v, d).norm() < 1e-12);
        }
    }
    assert!(u_set(c(0.1, 0.0), 1).is_err());
}

fn point() -> impl Strategy<Value = C64> {
    (-1.5f64..1.5, -1.5f64..1.5).prop_map(|(a, b)| c(a, b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn g_lambda_is_symmetric(
        w in prop::collection::vec(point(), 1..6),
        seed in any::<u64>(),
        top in 0i64..4,
    ) {
        prop_assume!(w.iter().enumerate().all(|(i, a)| w[i + 1..].iter().all(|b| (a - b).norm() > 1e-2)));
        prop_assume!(w.iter().all(|x| (x + 1.0).norm() > 1e-2));
        let lambda: Vec<i64> = (0..w.len() as i64).map(|j| top - j).collect();
        let base = g_lambda(&lambda, &w).unwrap();
        let mut perm = w.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            perm.shuffle(&mut rng);
            prop_assert!(rel(g_lambda(&lambda, &perm).unwrap(), base) < 1e-10);
        }
    }

    #[test]
    fn g_fn_symmetry_and_diagonal(w in point(), w2 in point(), d in 2usize..8) {
        let scale = (1.0 + w.norm() + w2.norm()).powi(d as i32);
        prop_assert!((g_fn(w, w2, d) - g_fn(w2, w, d)).norm() < 1e-13 * scale);
        let diag = (d as f64 * w + 1.0) * (w + 1.0).powi(d as i32 - 2);
        prop_assert!((g_fn(w, w, d) - diag).norm() < 1e-10 * (1.0 + diag.norm()));
    }

    #[test]
    fn flat_energy_agrees_at_random_z(n in 1usize..4, d in 2usize..4, r in 0.1f64..0.9, phase in 0.0..2.0 * PI) {
        let ic = InitialCondition::flat(n, d).unwrap();
        let rs = roots(n * d, n, r, phase);
        let e = energy(&ic, &rs).unwrap();
        prop_assume!(e.norm() > 1e-6);
        prop_assert!(rel(energy_flat(&rs, d).unwrap(), e) < 1e-8);
    }
}
