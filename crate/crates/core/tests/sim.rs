use ptasep::finite::{multipoint_prob, ContourSpec};
use ptasep::sim::{ctmc_exact_prob, ctmc_exact_prob_random, estimate_joint_prob, IcSource, RingState};
use ptasep::{Error, InitialCondition, ObsPoint, ObservationSet, RandomIc};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn obs(points: &[(i64, f64, i64)]) -> ObservationSet {
    ObservationSet::new(points.iter().map(|&(k, t, a)| ObsPoint { k, t, a }).collect()).unwrap()
}

fn fixed(ic: InitialCondition) -> IcSource {
    IcSource::Fixed(ic)
}

#[test]
fn free_particle_moves_like_a_poisson_clock() {
    let ic = InitialCondition::step(2, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 100_000;
    let t = 4.0;
    let mut sum = 0.0;
    for _ in 0..n {
        let mut s = RingState::new(&ic);
        s.simulate_to(t, &mut rng);
        sum += (s.position(1) - ic.y[0]) as f64;
    }
    let mean = sum / n as f64;
    assert!((mean - t).abs() < 3.0 * (t / n as f64).sqrt(), "{mean}");
}

#[test]
fn single_hole_displacement_counts_hole_jumps() {
    // with one hole, exactly one particle can move and the hole jumps at rate 1
    let ic = InitialCondition::step(6, 5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (n, t) = (50_000, 2.5);
    let (mut sum, mut sq) = (0.0, 0.0);
    for _ in 0..n {
        let mut s = RingState::new(&ic);
        s.simulate_to(t, &mut rng);
        let d: i64 = (1..=5).map(|k| s.position(k) - ic.y[k as usize - 1]).sum();
        sum += d as f64;
        sq += (d * d) as f64;
    }
    let mean = sum / n as f64;
    let var = sq / n as f64 - mean * mean;
    assert!((mean - t).abs() < 3.0 * (t / n as f64).sqrt(), "{mean}");
    assert!((var - t).abs() < 0.1 * t, "{var}");
}

#[test]
fn ordering_survives_a_million_jumps() {
    let ic = InitialCondition::flat(10, 2).unwrap();
    let l = ic.l as i64;
    let mut s = RingState::new(&ic);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut t = 0.0;
    let start: i64 = s.positions().iter().sum();
    let mut jumps = 0;
    while jumps < 1_000_000 {
        t += 50.0;
        s.simulate_to(t, &mut rng);
        let x = s.positions();
        assert!(x.windows(2).all(|w| w[1] > w[0]));
        assert!(x[x.len() - 1] - x[0] <= l - 1);
        jumps = s.positions().iter().sum::<i64>() - start;
    }
}

#[test]
fn trivially_true_events_are_certain() {
    let ic = InitialCondition::step(5, 3).unwrap();
    let r = estimate_joint_prob(&fixed(ic), &obs(&[(1, 1.0, -2), (3, 2.0, 0)]), 1000, 0).unwrap();
    assert_eq!((r.p_hat, r.std_err), (1.0, 0.0));
    assert!(estimate_joint_prob(&fixed(InitialCondition::step(2, 1).unwrap()), &obs(&[(1, 1.0, 1)]), 999, 0).is_err());
}

#[test]
fn two_site_estimate_and_exact_chain() {
    let ic = InitialCondition::step(2, 1).unwrap();
    let o = obs(&[(1, 1.0, 1)]);
    let exact = 1.0 - (-1.0f64).exp();
    let r = estimate_joint_prob(&fixed(ic.clone()), &o, 200_000, 4).unwrap();
    assert!((r.p_hat - exact).abs() < 3.0 * r.std_err);
    assert!((r.std_err - (r.p_hat * (1.0 - r.p_hat) / 200_000.0).sqrt()).abs() < 1e-15);
    assert!((ctmc_exact_prob(&ic, &o).unwrap() - exact).abs() < 1e-9);
}

#[test]
fn exact_chain_telescopes() {
    let ic = InitialCondition::step(3, 2).unwrap();
    for k in 1..=2 {
        let p = |a| ctmc_exact_prob(&ic, &obs(&[(k, 1.3, a)])).unwrap();
        let lo = ic.y[k as usize - 1];
        assert!((p(lo) - 1.0).abs() < 1e-9);
        let total: f64 = (lo..lo + 30).map(|a| p(a) - p(a + 1)).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }
}

#[test]
fn joint_event_agrees_with_fredholm() {
    let ic = InitialCondition::step(4, 2).unwrap();
    let o = obs(&[(1, 0.6, 1), (2, 1.4, 1)]);
    let f = multipoint_prob(&ic, &o, &ContourSpec::default()).unwrap().probability;
    let r = estimate_joint_prob(&fixed(ic.clone()), &o, 100_000, 5).unwrap();
    assert!((r.p_hat - f).abs() < 3.0 * r.std_err, "{} vs {f}", r.p_hat);
    assert!((ctmc_exact_prob(&ic, &o).unwrap() - f).abs() < 1e-6);
}

#[test]
fn random_initial_condition_against_exact_chain() {
    let ric = RandomIc::uniform(5, 2).unwrap();
    let o = obs(&[(2, 0.9, 1)]);
    let exact = ctmc_exact_prob_random(&ric, &o).unwrap();
    let r = estimate_joint_prob(&IcSource::Random(ric), &o, 100_000, 6).unwrap();
    assert!((r.p_hat - exact).abs() < 3.0 * r.std_err, "{} vs {exact}", r.p_hat);
}

#[test]
fn oversized_chain_is_refused() {
    let ic = InitialCondition::flat(12, 2).unwrap();
    assert!(matches!(ctmc_exact_prob(&ic, &obs(&[(1, 1.0, 1)])), Err(Error::Size(_))));
}

#[test]
fn seeds_reproduce_and_agree() {
    let src = fixed(InitialCondition::flat(3, 2).unwrap());
    let o = obs(&[(2, 1.0, 0)]);
    let a = estimate_joint_prob(&src, &o, 20_000, 9).unwrap();
    let again = estimate_joint_prob(&src, &o, 20_000, 9).unwrap();
    assert_eq!(a.p_hat.to_bits(), again.p_hat.to_bits());
    let b = estimate_joint_prob(&src, &o, 20_000, 10).unwrap();
    let sigma = (a.std_err.powi(2) + b.std_err.powi(2)).sqrt();
    assert!((a.p_hat - b.p_hat).abs() < 4.0 * sigma);
}

#[test]
fn height_profile_of_the_step_wedge() {
    let ic = InitialCondition::step(8, 3).unwrap();
    let s = RingState::new(&ic);
    let h = s.height_profile(-8, 8);
    // sites -2, -1, 0 are occupied, so the profile is a wedge around 0
    assert_eq!(&h[5..=12], &[3, 2, 1, 0, 1, 2, 3, 4]);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut s = RingState::new(&ic);
    s.simulate_to(3.0, &mut rng);
    let h = s.height_profile(-8, 8);
    for i in 0..=8 {
        assert_eq!(h[i + 8] - h[i], 8 - 2 * 3);
    }
}
