use proptest::prelude::*;
use ptasep::model::{height_event_to_particle_event, initial_height, is_admissible, lambda_of, scaled_params, subsets};
use ptasep::sim::RingState;
use ptasep::{InitialCondition, LimitCoordinates, LimitPoint, ModelParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn constructors_follow_definitions() {
    assert_eq!(InitialCondition::step(16, 4).unwrap().y, vec![-3, -2, -1, 0]);
    let flat = InitialCondition::flat(4, 3).unwrap();
    assert_eq!((flat.l, flat.y.clone()), (12, vec![-9, -6, -3, 0]));
    let sf = InitialCondition::stepflat(4, 3, 4).unwrap();
    assert_eq!((sf.l, sf.y.clone()), (16, vec![-9, -6, -3, 0]));
    assert_eq!(InitialCondition::stepflat(2, 2, 2).unwrap().l, 6);
    assert!(InitialCondition::flat(3, 1).is_err());
    assert!(InitialCondition::step(3, 3).is_err());
    assert!(InitialCondition::explicit(4, vec![0, 4]).is_err());
}

#[test]
fn lambda_examples() {
    assert_eq!(lambda_of(&[-1, 0]), vec![0, 0]);
    assert_eq!(lambda_of(&[-2, 0]), vec![0, -1]);
    assert_eq!(lambda_of(&[-3, -1, 0]), vec![0, 0, -1]);
}

#[test]
fn height_event_examples() {
    let ic = InitialCondition::step(4, 2).unwrap();
    assert_eq!(height_event_to_particle_event(0, 0, &ic).unwrap(), (3, 1));
    assert_eq!(height_event_to_particle_event(2, 2, &ic).unwrap(), (3, 3));
    assert!(height_event_to_particle_event(1, 2, &ic).is_err());
    assert!(height_event_to_particle_event(-2, -4, &ic).is_err());
}

#[test]
fn height_particle_duality_on_small_rings() {
    // every configuration of every ring with L <= 6, along random trajectories
    for l in 2..=6usize {
        for n in 1..l {
            for y in subsets(1 - l as i64, 0, n) {
                if y[n - 1] != 0 {
                    continue;
                }
                let ic = InitialCondition::explicit(l, y).unwrap();
                let li = l as i64;
                for seed in 0..4 {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let mut s = RingState::new(&ic);
                    for step in 1..=6 {
                        s.simulate_to(0.5 * step as f64, &mut rng);
                        let h = s.height_profile(-li, li);
                        for ell in -li..=li {
                            let h0 = initial_height(&ic, ell);
                            for db in 0..=(2 * li) {
                                let b = h0 + 2 * db;
                                let (k, a) = height_event_to_particle_event(ell, b, &ic).unwrap();
                                let by_height = h[(ell + li) as usize] >= b;
                                let by_particle = s.position(k) >= a;
                                assert_eq!(by_height, by_particle, "L={l} y={:?} ell={ell} b={b} t={}", ic.y, s.time);
                            }
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn scaled_params_on_half_filled_ring() {
    let p = ModelParams::new(100, 50).unwrap();
    let obs = scaled_params(&LimitCoordinates::single(0.5, 1.0, 0.0).unwrap(), &p).unwrap();
    let q = obs.points()[0];
    assert!((q.t - 2000.0).abs() < 1e-9);
    assert!((1..=50).contains(&q.k));
}

#[test]
fn scaled_params_period_shift() {
    // gamma -> gamma + 1 moves k by N and a by L, which is the same event
    let p = ModelParams::new(64, 16).unwrap();
    let pt = |gamma| LimitCoordinates::new(vec![LimitPoint { gamma, tau: 0.4, x: 0.3 }]).unwrap();
    let a = scaled_params(&pt(0.0), &p).unwrap().points()[0];
    let b = scaled_params(&pt(1.0), &p).unwrap().points()[0];
    assert_eq!((a.k, a.t, a.a), (b.k, b.t, b.a));
}

proptest! {
    #[test]
    fn constructors_are_admissible(n in 1usize..30, d in 2usize..6, ls in 1usize..20) {
        let ics = [
            InitialCondition::step(n + ls, n).unwrap(),
            InitialCondition::flat(n, d).unwrap(),
            InitialCondition::stepflat(n, d, ls).unwrap(),
        ];
        for ic in ics {
            prop_assert!(is_admissible(&ic.y, ic.l));
            let lambda = lambda_of(&ic.y);
            prop_assert!(lambda.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn explicit_normalization_lands_in_window(
        gaps in prop::collection::vec(1i64..4, 1..8),
        spare in 2i64..5,
        offset in -30i64..30,
    ) {
        let mut y = vec![offset];
        for g in &gaps[1..] {
            y.push(y.last().unwrap() + g);
        }
        let l = (y.last().unwrap() - y[0] + spare) as usize;
        let ic = InitialCondition::explicit(l, y).unwrap();
        let (norm, _) = ic.normalized();
        let last = *norm.y.last().unwrap();
        prop_assert!(last <= 0 && 0 < norm.y[0] + l as i64);
        prop_assert!(is_admissible(&norm.y, l));
        let lambda = lambda_of(&norm.y);
        prop_assert!(lambda.windows(2).all(|w| w[0] >= w[1]));
    }
}
