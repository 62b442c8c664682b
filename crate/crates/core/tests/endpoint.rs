use proptest::prelude::*;
use rollgeo_core::bending::{bend, break_limits, BendSpec, EndpointMap, JacobianMode};
use rollgeo_core::jacobian::{audit, DeviationCategory};
use rollgeo_core::sampling::{random_schedule, random_state, seeded};
use rollgeo_core::state::equivalence_defect;
use rollgeo_core::{roll, HorizontalPath, RadiusRatio};

fn path_to_base(seed: u64, r: f64, length: f64) -> HorizontalPath {
    let mut rng = seeded(seed);
    let c = random_schedule(&mut rng, 4, length);
    let p = roll(&random_state(&mut rng), RadiusRatio::new(r).unwrap(), &c, 2e-3).unwrap();
    p.transported_to_base(p.end_time()).unwrap()
}

fn spread_times(length: f64, shift: f64) -> [f64; 5] {
    std::array::from_fn(|k| (k as f64 + 0.3 + 0.4 * shift) / 5.0 * length)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn quoted_columns_are_fd_columns_times_r(seed in 0u64..1000, r in 0.3f64..3.0, shift in 0.0f64..1.0) {
        let p = path_to_base(seed, r, 2.5);
        let map = EndpointMap::new(&p, spread_times(2.5, shift), p.end_time()).unwrap();
        let a = audit(&map).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let fd = a.finite_difference.matrix[i][j];
                let expect = if j == 2 || j == 3 { r * fd } else { fd };
                prop_assert!((a.quoted.matrix[i][j] - expect).abs() <= 1e-6 * expect.abs().max(1e-3));
            }
        }
        prop_assert_eq!(a.count(DeviationCategory::Unexpected), 0);
    }

    #[test]
    fn bending_keeps_length_invariants_and_class(seed in 0u64..1000, r in 0.3f64..3.0, scale in 0.0f64..1.5) {
        let p = path_to_base(seed, r, 2.0);
        let mut rng = seeded(seed + 1);
        let angles: [f64; 5] = std::array::from_fn(|_| scale * (rand_angle(&mut rng)));
        let spec = BendSpec::new(spread_times(2.0, 0.5), angles);
        let q = bend(&p, &spec).unwrap();
        prop_assert_eq!(q.end_time(), p.end_time());
        prop_assert!(q.max_invariant_defect() <= 1e-12);
        for (left, right) in break_limits(&p, &spec).unwrap() {
            prop_assert!((left.u() - right.u()).amax() <= 1e-15);
            prop_assert!((left.v() - right.v()).amax() <= 1e-15);
            prop_assert!(equivalence_defect(&left, &right) <= 1e-12);
        }
    }
}

fn rand_angle(rng: &mut rollgeo_core::sampling::SeededRng) -> f64 {
    use rand::Rng;
    rng.gen_range(-1.0..1.0)
}

#[test]
fn audit_finds_only_documented_entries() {
    for seed in 0..6 {
        let r = [0.5, 1.0, 2.0][seed as usize % 3];
        let p = path_to_base(seed, r, 3.0);
        let map = EndpointMap::new(&p, spread_times(3.0, 0.2), p.end_time()).unwrap();
        let a = audit(&map).unwrap();
        assert_eq!(a.count(DeviationCategory::Unexpected), 0);
        if r == 1.0 {
            assert_eq!(a.count(DeviationCategory::RadiusScaling), 0);
        } else {
            assert!(a.count(DeviationCategory::RadiusScaling) > 0);
        }
        assert!(a.count(DeviationCategory::MarkerDerivativeSign) > 0);
        for d in &a.deviations {
            match d.category {
                DeviationCategory::MarkerDerivativeSign => {
                    assert!(d.entry.starts_with("da[2]") || d.entry.starts_with("db[2]"))
                }
                DeviationCategory::RadiusScaling => assert!(
                    d.entry.ends_with("][2]") || d.entry.ends_with("][3]") || d.entry.starts_with("dv")
                ),
                DeviationCategory::Unexpected => unreachable!(),
            }
        }
    }
}

#[test]
fn fd_jacobian_converges_at_second_order() {
    let p = path_to_base(9, 1.3, 3.0);
    let map = EndpointMap::new(&p, spread_times(3.0, 0.7), p.end_time()).unwrap();
    let an = map.jacobian(JacobianMode::Analytic).unwrap();
    let err = |h: f64| {
        let fd = map.fd_jacobian_at(&[0.0; 5], h).unwrap();
        (0..5)
            .flat_map(|i| (0..5).map(move |j| (i, j)))
            .map(|(i, j)| (fd.matrix[i][j] - an.matrix[i][j]).abs())
            .fold(0.0, f64::max)
    };
    let (e1, e2) = (err(1e-2), err(5e-3));
    assert!(e1 / e2 > 3.5 && e1 / e2 < 4.5, "{e1} {e2}");
}
