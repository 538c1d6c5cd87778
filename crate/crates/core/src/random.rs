//! Seeded generators of random step functions, units and automorphisms.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::blpq::{canonical_representation, BKpqSpec, Embedding};
use crate::error::Result;
use crate::stepfn::{mixed_norm, NormParams, Partition1D, StepFunction1D, StepFunction2D};
use crate::transport::{AffinePiece, BaseRearrangement, LatticeAutomorphism, unit_to_e};

/// Smallest cell produced by [`random_partition`].
const MIN_CELL: f64 = 1e-3;

/// A partition with `n` cells whose lengths are at least `1e-3`.
pub fn random_partition<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Partition1D {
    assert!(n > 0 && (n as f64) * MIN_CELL < 0.5);
    loop {
        let mut cuts: Vec<f64> = (0..n - 1).map(|_| rng.gen::<f64>()).collect();
        cuts.push(0.0);
        cuts.push(1.0);
        cuts.sort_by(|a, b| a.total_cmp(b));
        if cuts.windows(2).all(|w| w[1] - w[0] >= MIN_CELL) {
            return Partition1D::from_breaks(cuts).expect("separated cuts");
        }
    }
}

/// Values drawn uniformly from `[lo, hi]`, with each cell zeroed with probability `zero_prob`.
pub fn random_step_function<R: Rng + ?Sized>(
    rng: &mut R,
    max_base: usize,
    max_fiber: usize,
    (lo, hi): (f64, f64),
    zero_prob: f64,
) -> StepFunction2D {
    let nb = rng.gen_range(1..=max_base);
    let base = random_partition(rng, nb);
    let fibers = (0..base.len())
        .map(|_| {
            let nf = rng.gen_range(1..=max_fiber);
            let part = random_partition(rng, nf);
            let vals = (0..part.len())
                .map(|_| if rng.gen::<f64>() < zero_prob { 0.0 } else { rng.gen_range(lo..=hi) })
                .collect();
            StepFunction1D::new(part, vals).expect("matching lengths")
        })
        .collect();
    StepFunction2D::new(base, fibers).expect("random function")
}

/// A positive unit vector with cell values log-uniform in `[0.2, 5]` before normalization.
pub fn random_positive_unit<R: Rng + ?Sized>(
    rng: &mut R,
    params: NormParams,
    max_base: usize,
    max_fiber: usize,
) -> StepFunction2D {
    let raw = random_step_function(rng, max_base, max_fiber, (0.0, 1.0), 0.0)
        .map(|u| (0.2f64.ln() + u * (5.0f64.ln() - 0.2f64.ln())).exp());
    raw.scale(1.0 / mixed_norm(&raw, params))
}

/// Random permutation of the cells of a random base partition.
pub fn random_interval_exchange<R: Rng + ?Sized>(rng: &mut R, cells: usize) -> BaseRearrangement {
    let part = random_partition(rng, cells);
    let mut order: Vec<usize> = (0..cells).collect();
    order.shuffle(rng);
    BaseRearrangement::from_permutation(part.lengths(), &order).expect("valid permutation")
}

/// The automorphism `f -> f o r` of an interval exchange `r`.
pub fn exchange_automorphism(r: &BaseRearrangement, params: NormParams) -> LatticeAutomorphism {
    let id = AffinePiece { start: 0.0, end: 1.0, image_start: 0.0, slope: 1.0 };
    let fibers = vec![vec![id]; r.pieces().len()];
    LatticeAutomorphism::from_maps(params, r.pieces().to_vec(), fibers).expect("unit slopes")
}

/// Independent interval exchanges of the fibers over the cells of a random base partition.
pub fn random_fiber_exchange<R: Rng + ?Sized>(
    rng: &mut R,
    params: NormParams,
    base_cells: usize,
    fiber_cells: usize,
) -> LatticeAutomorphism {
    let part = random_partition(rng, base_cells);
    let base: Vec<AffinePiece> = (0..part.len())
        .map(|i| {
            let (a, b) = part.cell(i);
            AffinePiece { start: a, end: b, image_start: a, slope: 1.0 }
        })
        .collect();
    let fibers = (0..part.len())
        .map(|_| random_interval_exchange(rng, fiber_cells).pieces().to_vec())
        .collect();
    LatticeAutomorphism::from_maps(params, base, fibers).expect("unit slopes")
}

/// A composite automorphism fixing `1`: base exchange, fiber exchange,
/// `unit_to_e(e)^-1 o unit_to_e(e)` and another base exchange.
pub fn random_unit_fixing<R: Rng + ?Sized>(rng: &mut R, params: NormParams) -> Result<LatticeAutomorphism> {
    let (n1, n2) = (rng.gen_range(2..=5), rng.gen_range(2..=5));
    let r1 = exchange_automorphism(&random_interval_exchange(rng, n1), params);
    let r2 = exchange_automorphism(&random_interval_exchange(rng, n2), params);
    let (nb, nf) = (rng.gen_range(1..=4), rng.gen_range(2..=4));
    let fx = random_fiber_exchange(rng, params, nb, nf);
    let e = random_positive_unit(rng, params, 3, 3);
    let phi = unit_to_e(&e, params)?;
    let loop_back = LatticeAutomorphism::compose(&phi.inverse(), &phi);
    let inner = LatticeAutomorphism::compose(&fx, &loop_back);
    Ok(LatticeAutomorphism::compose(&r1, &LatticeAutomorphism::compose(&inner, &r2)))
}

/// `n` disjoint rectangle-union indicators with random labels (some cells left empty).
pub fn random_indicator_tuple<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<StepFunction2D> {
    let nb = rng.gen_range(1..=6);
    let base = random_partition(rng, nb);
    let mut fibers: Vec<Vec<StepFunction1D>> = vec![Vec::new(); n];
    for _ in 0..base.len() {
        let nf = rng.gen_range(1..=5);
        let part = random_partition(rng, nf);
        let labels: Vec<usize> = (0..part.len()).map(|_| rng.gen_range(0..=n)).collect();
        for (t, out) in fibers.iter_mut().enumerate() {
            let vals = labels.iter().map(|l| if *l == t { 1.0 } else { 0.0 }).collect();
            out.push(StepFunction1D::new(part.clone(), vals).expect("matching lengths"));
        }
    }
    fibers
        .into_iter()
        .map(|f| StepFunction2D::new(base.clone(), f).expect("indicator").normalized())
        .collect()
}

/// The automorphism used to build random embeddings: an interval exchange
/// after `unit_to_e` of a random positive unit.
pub fn random_transport<R: Rng + ?Sized>(rng: &mut R, params: NormParams) -> Result<LatticeAutomorphism> {
    let e = random_positive_unit(rng, params, 6, 5);
    let phi = unit_to_e(&e, params)?;
    let cells = rng.gen_range(2..=6);
    let ex = exchange_automorphism(&random_interval_exchange(rng, cells), params);
    Ok(LatticeAutomorphism::compose(&ex, &phi))
}

/// Canonical atoms of `spec` moved by [`random_transport`].
pub fn random_embedding<R: Rng + ?Sized>(rng: &mut R, spec: &BKpqSpec) -> Result<Embedding> {
    let t = random_transport(rng, spec.params())?;
    Ok(t.apply_embedding(&canonical_representation(spec).embedding()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generators_are_seeded() {
        let a = random_step_function(&mut ChaCha8Rng::seed_from_u64(7), 4, 4, (-1.0, 1.0), 0.2);
        let b = random_step_function(&mut ChaCha8Rng::seed_from_u64(7), 4, 4, (-1.0, 1.0), 0.2);
        assert_eq!(a, b);
    }

    #[test]
    fn positive_unit_is_unit() {
        let params = NormParams::new(3.0, 2.0).unwrap();
        let e = random_positive_unit(&mut ChaCha8Rng::seed_from_u64(1), params, 5, 5);
        assert!(e.has_full_support());
        assert!((mixed_norm(&e, params) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unit_fixing_fixes_unit() {
        let params = NormParams::new(2.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let t = random_unit_fixing(&mut rng, params).unwrap();
            assert!(t.multiplier().max_abs_diff(&StepFunction2D::unit()) < 1e-12);
        }
    }
}
