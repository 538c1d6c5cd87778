use lplq::blpq::{canonical_representation, closed_form_norm, BKpqSpec};
use lplq::equimeasure::*;
use lplq::random::{random_indicator_tuple, random_interval_exchange, exchange_automorphism, random_unit_fixing};
use lplq::stepfn::{mixed_norm, NormParams, StepFunction2D};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn p21() -> NormParams {
    NormParams::new(2.0, 1.0).unwrap()
}

#[test]
fn rearrangement_invariance_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let fs = random_indicator_tuple(&mut rng, 3);
        let t = exchange_automorphism(&random_interval_exchange(&mut rng, 4), p21());
        let a = pushforward(&fs, p21()).unwrap();
        let b = pushforward(&t.apply_all(&fs), p21()).unwrap();
        assert!(equimeasurable(&a, &b, 1e-12, 1e-12).unwrap());
    }
}

#[test]
fn canonical_atoms_under_unit_fixing_maps() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let spec = BKpqSpec::new(vec![1, 2], p21()).unwrap();
    let atoms = canonical_representation(&spec).atoms;
    let m = pushforward(&atoms, p21()).unwrap();
    for _ in 0..10 {
        let t = random_unit_fixing(&mut rng, p21()).unwrap();
        let moved = pushforward(&t.apply_all(&atoms), p21()).unwrap();
        assert!(equimeasurable(&m, &moved, TAU_VAL, TAU_MASS).unwrap());
    }
}

#[test]
fn norm_via_moments_matches_mixed_norm() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (p, q) in [(2.0, 1.0), (3.0, 2.0), (1.5, 3.0)] {
        let params = NormParams::new(p, q).unwrap();
        for _ in 0..20 {
            let fs: Vec<StepFunction2D> = random_indicator_tuple(&mut rng, 3)
                .into_iter()
                .map(|f| f.scale(rng.gen_range(0.5..2.0)))
                .collect();
            let c: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..2.0)).collect();
            let direct = mixed_norm(&StepFunction2D::linear_combination(&c, &fs), params);
            let via = norm_via_moments(&fs, &c, params).unwrap();
            assert!((direct - via).abs() <= 1e-10 * direct.max(1.0), "{direct} vs {via}");
        }
    }
    let spec = BKpqSpec::new(vec![1, 2], p21()).unwrap();
    let atoms = canonical_representation(&spec).atoms;
    let via = norm_via_moments(&atoms, &[1.0, 1.0, 1.0], p21()).unwrap();
    assert!((via - closed_form_norm(&spec, &[1.0, 1.0, 1.0]).unwrap()).abs() < 1e-12);
}

#[test]
fn overlapping_functions_are_rejected() {
    let f = StepFunction2D::unit();
    assert!(norm_via_moments(&[f.clone(), f], &[1.0, 1.0], p21()).is_err());
}

#[test]
fn functional_is_increasing_in_offset() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let fs = random_indicator_tuple(&mut rng, 2);
        let m = pushforward(&fs, p21()).unwrap();
        let v = [rng.gen_range(0.0..2.0), rng.gen_range(0.0..2.0)];
        let r = rng.gen_range(0.5..4.0);
        let a = moment_functional(&m, 0.5, &v, r).unwrap();
        let b = moment_functional(&m, 0.6, &v, r).unwrap();
        assert!(b > a);
    }
}

#[test]
fn self_report_is_all_zero() {
    let spec = BKpqSpec::new(vec![2, 1], p21()).unwrap();
    let m = pushforward(&canonical_representation(&spec).atoms, p21()).unwrap();
    let samples = vec![(1.0, vec![1.0, 0.5, 2.0]), (0.2, vec![0.0, 1.0, 1.0])];
    let rep = moment_match_report(&m, &m, 2.0, default_degree_cap(2.0), &samples, 0.0).unwrap();
    assert!(rep.moments.iter().all(|m| m.diff == 0.0));
    assert_eq!(rep.max_functional_diff, 0.0);
    assert_eq!(rep.first_mismatch_degree, None);
    let mut csv = Vec::new();
    rep.write_csv(&mut csv).unwrap();
    assert!(String::from_utf8(csv).unwrap().starts_with("kind,key,degree,lhs,rhs,diff\n"));
}

#[test]
fn dimension_mismatch_is_an_error() {
    let a = VectorMeasure::new(1, vec![(1.0, vec![0.0])]).unwrap();
    let b = VectorMeasure::new(2, vec![(1.0, vec![0.0, 0.0])]).unwrap();
    assert!(equimeasurable(&a, &b, 1e-9, 1e-9).is_err());
}
