use lplq::blpq::{quantize_to_kpq, verify_blpq_structure};
use lplq::counterexample::*;
use lplq::equimeasure::{default_degree_cap, moment_functional, moment_match_report, pushforward_q};
use lplq::stepfn::{dist, mixed_norm, NormParams};
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn p21() -> NormParams {
    NormParams::new(2.0, 1.0).unwrap()
}

#[test]
fn roots_are_distinct_and_interior() {
    for r in 2..6usize {
        let g = hilbert_nullspace(r);
        let roots = g.isolate_roots(&rat(0, 1), &rat(1, 1), 40);
        assert_eq!(roots.len(), r + 1);
        for w in roots.windows(2) {
            assert!(w[0].hi < w[1].lo);
        }
        assert!(roots[0].lo > rat(0, 1) && roots[r].hi < rat(1, 1));
    }
}

#[test]
fn positive_combinations_r2() {
    let b = build_counterexample(p21(), 32).unwrap();
    let samples = vec![(rat(1, 1), rat(1, 1)), (rat(2, 1), rat(1, 1)), (rat(1, 1), rat(3, 1))];
    let cert = certify_isometry(&b, &samples).unwrap();
    assert!(cert.all_equal);
    for row in &cert.rows {
        assert_eq!(row.lhs, "0/1");
        assert!((row.values[0] - row.values[1]).abs() < 1e-13);
    }
}

#[test]
fn certificate_json_shape() {
    let b = build_counterexample(NormParams::new(3.0, 1.0).unwrap(), 16).unwrap();
    let json = serde_json::to_value(moment_certificate(&b).to_json()).unwrap();
    assert_eq!(json["r"], 3);
    assert_eq!(json["gap_degree"], 4);
    assert_eq!(json["g"].as_array().unwrap().len(), 5);
    assert_eq!(json["moment_identities"].as_array().unwrap().len(), 4);
    for m in json["moment_identities"].as_array().unwrap() {
        assert_eq!(m["lhs"], m["rhs"]);
    }
    assert_ne!(json["gap"], "0/1");
}

#[test]
fn q_other_than_one() {
    let params = NormParams::new(4.0, 2.0).unwrap();
    let b = build_counterexample(params, 512).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10 {
        let (a1, a2) = (rng.gen_range(0.0..2.0), rng.gen_range(0.0..2.0));
        let norms: Vec<f64> = b
            .step
            .iter()
            .map(|e| mixed_norm(&e.images[0].scale(a1).add(&e.images[1].scale(a2)), params))
            .collect();
        assert!((norms[0] - norms[1]).abs() < 1e-4);
    }
}

#[test]
fn step_layer_norms_at_2048() {
    let params = p21();
    let b = build_counterexample(params, 2048).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let (a1, a2) = (rng.gen_range(0.0..3.0), rng.gen_range(0.0..3.0));
        let norms: Vec<f64> = b
            .step
            .iter()
            .map(|e| mixed_norm(&e.images[0].scale(a1).add(&e.images[1].scale(a2)), params))
            .collect();
        assert!((norms[0] - norms[1]).abs() < 1e-4);
    }
    let report = certify_non_equimeasurable(&b).unwrap();
    assert!(report.unmatched_mass > 0.01);
}

#[test]
fn step_moments_match_below_gap_degree() {
    for n in [256usize, 1024] {
        let b = build_counterexample(p21(), n).unwrap();
        let m1 = pushforward_q(&b.step[0].images, p21()).unwrap();
        let m2 = pushforward_q(&b.step[1].images, p21()).unwrap();
        let rep = moment_match_report(&m1, &m2, 2.0, default_degree_cap(2.0), &[], 5.0 / n as f64).unwrap();
        for d in 0..=2 {
            assert!(rep.max_diff_at(d) <= 5.0 / n as f64);
        }
        assert_eq!(rep.first_mismatch_degree, Some(3));
        let exact = rat_to_f64(&moment_certificate(&b).gap) * b.scale();
        assert!(rep.max_diff_at(3) >= 0.5 * exact);
    }
}

#[test]
fn integer_functional_matches() {
    let b = build_counterexample(p21(), 1024).unwrap();
    let m1 = pushforward_q(&b.step[0].images, p21()).unwrap();
    let m2 = pushforward_q(&b.step[1].images, p21()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let v0 = rng.gen_range(0.0..1.0);
        let v = [rng.gen_range(0.0..2.0), rng.gen_range(0.0..2.0)];
        let a = moment_functional(&m1, v0, &v, 2.0).unwrap();
        let c = moment_functional(&m2, v0, &v, 2.0).unwrap();
        assert!((a - c).abs() < 1e-12, "{a} vs {c}");
    }
}

#[test]
fn pair_is_not_blpq() {
    let b = build_counterexample(p21(), 64).unwrap();
    assert!(!verify_blpq_structure(&b.step[0], 1e-9).is_blpq);
}

#[test]
fn quantized_pair_stays_close_and_obstructed() {
    let params = p21();
    let b = build_counterexample(params, 256).unwrap();
    let q: Vec<_> = b.step.iter().map(|e| quantize_to_kpq(e, 0.1).unwrap()).collect();
    for (old, new) in b.step.iter().zip(&q) {
        for (f, g) in old.images.iter().zip(&new.images) {
            assert!(dist(f, g, params) < 0.1);
        }
    }
    let q: Vec<_> = b.step.iter().map(|e| quantize_to_kpq(e, 0.05).unwrap()).collect();
    let m1 = pushforward_q(&q[0].images, params).unwrap();
    let m2 = pushforward_q(&q[1].images, params).unwrap();
    let rep = obstruction_report(&m1, &m2).unwrap();
    assert!(rep.witness.is_some() && rep.best_epsilon > 0.005);
}

#[test]
fn identical_pair_has_no_obstruction() {
    let b = build_counterexample(p21(), 128).unwrap();
    let m = pushforward_q(&b.step[0].images, p21()).unwrap();
    let rep = obstruction_report(&m, &m).unwrap();
    assert!(rep.witness.is_none());
}

#[test]
fn gap_is_int_g_squared_over_leading() {
    for r in 2..6usize {
        let g = hilbert_nullspace(r);
        let lead = g.leading().unwrap().clone();
        let gap = g.moment(r + 1);
        assert!(!gap.is_zero());
        assert_eq!(gap, g.mul(&g).integral_unit() / lead);
    }
}
