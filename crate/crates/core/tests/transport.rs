use lplq::blpq::{canonical_representation, BKpqSpec, Embedding};
use lplq::random::{random_embedding, random_positive_unit, random_step_function};
use lplq::stepfn::{dist, mixed_norm, NormParams, StepFunction2D};
use lplq::transport::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn p21() -> NormParams {
    NormParams::new(2.0, 1.0).unwrap()
}

#[test]
fn base_swapped_canonical_atoms_are_matched() {
    let spec = BKpqSpec::new(vec![1, 2], p21()).unwrap();
    let canon = canonical_representation(&spec);
    let (a, b) = (canon.base_interval(0), canon.base_interval(1));
    // move block 0 to the right end, block 1 to the left
    let shifted = [(b.1 - (a.1 - a.0), b.1)];
    let rest = [(0.0, b.1 - (a.1 - a.0))];
    let swap = base_rearrangement(&[vec![a], vec![b]], &[shifted.to_vec(), rest.to_vec()], p21()).unwrap();
    let moved = swap.apply_embedding(&canon.embedding());
    let t = match_bands(&canon.embedding(), &moved).unwrap();
    for (x, y) in canon.atoms.iter().zip(&moved.images) {
        assert!(dist(&t.apply(x), y, p21()) < 1e-12);
    }
    let (_, rep) = auh_pipeline(&canon.embedding(), &moved, 1e-3).unwrap();
    assert!(rep.max_residual < 1e-3);
}

#[test]
fn three_cell_rotation_preserves_norms() {
    let params = NormParams::new(3.0, 2.0).unwrap();
    let src = [vec![(0.0, 0.2)], vec![(0.2, 0.5)], vec![(0.5, 1.0)]];
    let dst = [vec![(0.8, 1.0)], vec![(0.0, 0.3)], vec![(0.3, 0.8)]];
    let t = base_rearrangement(&src, &dst, params).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        let f = random_step_function(&mut rng, 5, 5, (-2.0, 2.0), 0.2);
        assert!((mixed_norm(&t.apply(&f), params) - mixed_norm(&f, params)).abs() < 1e-12);
    }
}

#[test]
fn automorphism_json_replays() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let e = random_positive_unit(&mut rng, p21(), 4, 4);
    let phi = unit_to_e(&e, p21()).unwrap();
    let text = serde_json::to_string(&phi).unwrap();
    let back: LatticeAutomorphism = serde_json::from_str(&text).unwrap();
    assert_eq!(back, phi);
    let f = random_step_function(&mut rng, 4, 4, (-1.0, 1.0), 0.1);
    assert_eq!(back.apply(&f), phi.apply(&f));
}

#[test]
fn broken_automorphism_json_is_rejected() {
    let phi = unit_to_e(&StepFunction2D::unit(), p21()).unwrap();
    let mut v = serde_json::to_value(&phi).unwrap();
    v["blocks"][0]["fiber"][0]["weight"] = serde_json::json!(2.0);
    assert!(serde_json::from_value::<LatticeAutomorphism>(v).is_err());
}

#[test]
fn pipeline_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (blocks, p, q) in [(vec![1, 1], 1.0, 2.0), (vec![3], 2.0, 1.0), (vec![1, 2, 2], 4.0, 2.0)] {
        let spec = BKpqSpec::new(blocks, NormParams::new(p, q).unwrap()).unwrap();
        for _ in 0..2 {
            let e1 = random_embedding(&mut rng, &spec).unwrap();
            let e2 = random_embedding(&mut rng, &spec).unwrap();
            let (t, rep) = auh_pipeline(&e1, &e2, 1e-3).unwrap();
            assert!(rep.max_residual < 1e-3);
            assert!(t.isometry_defect(&e1.images) < 1e-9);
        }
    }
}

#[test]
fn missing_base_support_gets_small_mass() {
    let params = p21();
    let f = StepFunction2D::rect((0.0, 0.5), (0.0, 1.0), 2f64.sqrt()).unwrap();
    let eps = 0.05;
    let g = full_support_perturbation(&Embedding::new(params, vec![f.clone()]), eps).unwrap();
    let right = g.images[0].mul(&StepFunction2D::rect((0.5, 1.0), (0.0, 1.0), 1.0).unwrap());
    let n = mixed_norm(&right, params);
    assert!(n > 0.0 && n <= eps * mixed_norm(&f, params) + 1e-12);
}

#[test]
fn stability_probe_rejects_non_partitions() {
    let half = StepFunction2D::rect((0.0, 1.0), (0.0, 0.5), 1.0).unwrap();
    assert!(stability_probe(&[half], &StepFunction2D::unit(), p21()).is_err());
}
