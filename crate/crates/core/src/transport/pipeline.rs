use serde::Serialize;

use crate::blpq::Embedding;
use crate::error::{Error, Result};
use crate::stepfn::{dist, mixed_norm, refine_all, NormParams, StepFunction1D, StepFunction2D};

use super::build::{band_swap, canonical_transport, shared_groups, unit_to_e};
use super::LatticeAutomorphism;

/// Grouping tolerance for block detection inside the pipeline.
const STRUCTURE_TOL: f64 = 1e-9;

/// Upper bound on the per-atom distance moved by [`full_support_perturbation`].
pub fn perturbation_bound(eps: f64, params: NormParams) -> f64 {
    let (p, q) = (params.p(), params.q());
    (1.0 - (1.0 - eps).powf(1.0 / q)) + eps + (1.0 - (1.0 - eps.powf(p)).powf(1.0 / p)) + eps
}

/// Moves an embedding by at most [`perturbation_bound`] so that its atoms
/// together have full support.
///
/// First, on every base cell where the atoms leave part of the fiber empty,
/// the first atom present there spreads mass `eps^q` (in `N^q` units) over the
/// empty part, which keeps every `N`-profile unchanged. Then, if some base
/// cells carry no atom at all, the result is mixed with a copy moved there by
/// a band swap: `(1 - eps^p)^(1/p) g + eps B(g)`.
pub fn full_support_perturbation(emb: &Embedding, eps: f64) -> Result<Embedding> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::OutOfRange { name: "epsilon", value: eps });
    }
    if emb.is_empty() {
        return Err(Error::Precondition("empty embedding".into()));
    }
    if emb.sum().has_full_support() {
        return Ok(emb.clone());
    }
    let params = emb.params;
    let q = params.q();
    let refined = refine_all(&emb.images);
    let base = refined[0].base().clone();
    let n = refined.len();
    let mixing = eps.powf(q);
    let keep = (1.0 - mixing).powf(1.0 / q);

    let mut fibers: Vec<Vec<StepFunction1D>> = refined.iter().map(|f| f.fibers().to_vec()).collect();
    let mut covered = Vec::new();
    let mut empty = Vec::new();
    for c in 0..base.len() {
        let fp = refined[0].fiber(c).partition().clone();
        let present: Vec<usize> = (0..n)
            .filter(|t| refined[*t].fiber(c).values().iter().any(|v| *v != 0.0))
            .collect();
        let Some(&k) = present.first() else {
            empty.push(base.cell(c));
            continue;
        };
        covered.push(base.cell(c));
        let slack: Vec<bool> = (0..fp.len())
            .map(|y| refined.iter().all(|f| f.fiber(c).values()[y] == 0.0))
            .collect();
        let slack_mass: f64 = fp.lengths().iter().zip(&slack).filter(|(_, s)| **s).map(|(l, _)| l).sum();
        if slack_mass <= 0.0 {
            continue;
        }
        let nk = refined[k].fiber(c).power_sum(q).powf(1.0 / q);
        let fill = (mixing * nk.powf(q) / slack_mass).powf(1.0 / q);
        let vals: Vec<f64> = refined[k]
            .fiber(c)
            .values()
            .iter()
            .zip(&slack)
            .map(|(v, s)| if *s { fill } else { keep * v })
            .collect();
        fibers[k][c] = StepFunction1D::new(fp, vals)?;
    }
    let mut images: Vec<StepFunction2D> = fibers
        .into_iter()
        .map(|fib| StepFunction2D::new(base.clone(), fib).map(|f| f.normalized()))
        .collect::<Result<_>>()?;

    if !empty.is_empty() {
        if covered.is_empty() {
            return Err(Error::Precondition("all atoms vanish".into()));
        }
        let swap = band_swap(&empty, &covered, params)?;
        let scale = (1.0 - eps.powf(params.p())).powf(1.0 / params.p());
        images = images
            .iter()
            .map(|g| g.scale(scale).add(&swap.apply(g).scale(eps)).normalized())
            .collect();
    }
    Ok(Embedding::new(params, images))
}

/// An automorphism `T` with `T(emb1[t]) = emb2[t]`, for two fully supporting
/// copies of the same lattice whose atoms sum to the same multiple of `1`.
pub fn match_bands(emb1: &Embedding, emb2: &Embedding) -> Result<LatticeAutomorphism> {
    let w1 = emb1.unit_weights(1e-9)?;
    let w2 = emb2.unit_weights(1e-9)?;
    let c = w1[0];
    if w1.iter().chain(&w2).any(|w| (w - c).abs() > 1e-9 * c) {
        return Err(Error::Precondition(
            "both embeddings must sum to the same multiple of 1".into(),
        ));
    }
    let (spec, groups) = shared_groups(emb1, emb2, STRUCTURE_TOL)?;
    let psi1 = canonical_transport(emb1, &spec, &groups)?;
    let psi2 = canonical_transport(emb2, &spec, &groups)?;
    Ok(LatticeAutomorphism::compose(&psi2, &psi1.inverse()))
}

/// Diagnostics from [`auh_pipeline`].
#[derive(Clone, Debug, Serialize)]
pub struct PipelineReport {
    pub epsilon: f64,
    /// Parameter handed to the full-support perturbation.
    pub delta: f64,
    /// Per-atom distance moved by the perturbation, for each embedding.
    pub perturbation: [Vec<f64>; 2],
    /// `||sum g_t||` for each perturbed embedding.
    pub eta: [f64; 2],
    /// `||Phi(h1[t]) - h2[t]||` for the band-matching stage.
    pub match_residuals: Vec<f64>,
    /// `||T(emb1[t]) - emb2[t]||`.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    pub pieces: usize,
}

/// An automorphism `T` with `||T(emb1[t]) - emb2[t]|| < eps` for every atom.
///
/// Both embeddings are perturbed to full support, pulled back by `unit_to_e`
/// of their atom sums so that the atoms sum to a multiple of `1`, and then
/// matched block by block.
pub fn auh_pipeline(emb1: &Embedding, emb2: &Embedding, eps: f64) -> Result<(LatticeAutomorphism, PipelineReport)> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::OutOfRange { name: "epsilon", value: eps });
    }
    if emb1.len() != emb2.len() {
        return Err(Error::StructureMismatch(format!("{} atoms vs {} atoms", emb1.len(), emb2.len())));
    }
    let params = emb1.params;
    let delta = eps / 16.0;
    let mut phis = Vec::with_capacity(2);
    let mut hs = Vec::with_capacity(2);
    let mut perturbation: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    let mut etas = [0.0; 2];
    for (i, emb) in [emb1, emb2].into_iter().enumerate() {
        let g = full_support_perturbation(emb, delta)?;
        perturbation[i] = g.images.iter().zip(&emb.images).map(|(a, b)| dist(a, b, params)).collect();
        let s = g.sum();
        let eta = mixed_norm(&s, params);
        etas[i] = eta;
        let phi = unit_to_e(&s.scale(1.0 / eta), params)?;
        let h = phi.inverse().apply_embedding(&g);
        phis.push(phi);
        hs.push(h);
    }
    let matcher = match_bands(&hs[0], &hs[1])?;
    let match_residuals = hs[0]
        .images
        .iter()
        .zip(&hs[1].images)
        .map(|(a, b)| dist(&matcher.apply(a), b, params))
        .collect();
    let t = LatticeAutomorphism::compose(&phis[1], &LatticeAutomorphism::compose(&matcher, &phis[0].inverse()));
    let residuals: Vec<f64> = emb1
        .images
        .iter()
        .zip(&emb2.images)
        .map(|(a, b)| dist(&t.apply(a), b, params))
        .collect();
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    let pieces = t.piece_count();
    Ok((
        t,
        PipelineReport {
            epsilon: eps,
            delta,
            perturbation,
            eta: etas,
            match_residuals,
            residuals,
            max_residual,
            pieces,
        },
    ))
}

/// `max_k ||unit_to_e(e)(f_k) - f_k||` for fiber-interval indicators summing to `1`.
pub fn stability_probe(fs: &[StepFunction2D], e: &StepFunction2D, params: NormParams) -> Result<f64> {
    if fs.is_empty() {
        return Err(Error::Precondition("no functions".into()));
    }
    let dev = StepFunction2D::sum(fs).max_abs_diff(&StepFunction2D::unit());
    if dev > 1e-9 {
        return Err(Error::Precondition(format!("functions do not sum to 1 (deviation {dev})")));
    }
    for (k, f) in fs.iter().enumerate() {
        for (c, fib) in f.normalized().fibers().iter().enumerate() {
            let vals = fib.values();
            let ones = vals.iter().filter(|v| **v == 1.0).count();
            let ok = vals.iter().all(|v| *v == 0.0 || *v == 1.0) && ones <= 1;
            if !ok {
                return Err(Error::Precondition(format!(
                    "function {k} is not an interval indicator over base cell {c}"
                )));
            }
        }
    }
    let phi = unit_to_e(e, params)?;
    Ok(fs
        .iter()
        .map(|f| dist(&phi.apply(f), f, params))
        .fold(0.0, f64::max))
}

/// The unit `e_t = (1 + t D) / ||1 + t D||` with `||1 - e_t|| = delta`, found by bisection on `t >= 0`.
///
/// `direction` must keep `1 + t D` positive for the `t` reached.
pub fn unit_at_distance(direction: &StepFunction2D, delta: f64, params: NormParams) -> Result<StepFunction2D> {
    let unit = StepFunction2D::unit();
    let at = |t: f64| -> Option<(StepFunction2D, f64)> {
        let raw = unit.add(&direction.scale(t));
        if !raw.has_full_support() {
            return None;
        }
        let e = raw.scale(1.0 / mixed_norm(&raw, params));
        let d = dist(&unit, &e, params);
        Some((e, d))
    };
    if delta == 0.0 {
        return Ok(unit);
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while at(hi).map(|(_, d)| d < delta).unwrap_or(false) {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::OutOfRange { name: "delta", value: delta });
        }
    }
    if at(hi).is_none() {
        // shrink until 1 + tD stays positive
        while at(hi).is_none() {
            hi *= 0.5;
        }
        if at(hi).map(|(_, d)| d < delta).unwrap_or(true) {
            return Err(Error::OutOfRange { name: "delta", value: delta });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        match at(mid) {
            Some((_, d)) if d < delta => lo = mid,
            _ => hi = mid,
        }
    }
    Ok(at(lo).expect("lower end stays positive").0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blpq::{canonical_representation, BKpqSpec};
    use crate::stepfn::n_map;

    #[test]
    fn slack_example() {
        let params = NormParams::new(2.0, 1.0).unwrap();
        let f = StepFunction2D::rect((0.0, 1.0), (0.0, 0.5), 2.0).unwrap();
        let g = full_support_perturbation(&Embedding::new(params, vec![f]), 0.19).unwrap();
        let fib = g.images[0].fiber(0);
        assert!((fib.values()[0] - 1.62).abs() < 1e-14);
        assert!((fib.values()[1] - 0.38).abs() < 1e-14);
        assert!((n_map(&g.images[0], params).values()[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn fully_supported_input_is_unchanged() {
        let params = NormParams::new(2.0, 1.0).unwrap();
        let emb = Embedding::new(params, vec![StepFunction2D::unit()]);
        let g = full_support_perturbation(&emb, 0.1).unwrap();
        assert_eq!(g.images, emb.images);
    }

    #[test]
    fn identical_embeddings_match_exactly() {
        let params = NormParams::new(2.0, 1.0).unwrap();
        let canon = canonical_representation(&BKpqSpec::new(vec![1, 2], params).unwrap());
        let emb = canon.embedding();
        let t = match_bands(&emb, &emb).unwrap();
        for a in &emb.images {
            assert!(dist(&t.apply(a), a, params) < 1e-12);
        }
    }

    #[test]
    fn random_pairs_are_intertwined() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for (blocks, p, q) in [(vec![1, 2], 2.0, 1.0), (vec![2, 3], 3.0, 2.0)] {
            let params = NormParams::new(p, q).unwrap();
            let spec = BKpqSpec::new(blocks, params).unwrap();
            for _ in 0..3 {
                let e1 = crate::random::random_embedding(&mut rng, &spec).unwrap();
                let e2 = crate::random::random_embedding(&mut rng, &spec).unwrap();
                let (_, rep) = auh_pipeline(&e1, &e2, 1e-3).unwrap();
                assert!(rep.max_residual < 1e-3);
            }
        }
    }

    #[test]
    fn partially_supported_atoms_are_perturbed() {
        let params = NormParams::new(2.0, 1.0).unwrap();
        let base_half = StepFunction2D::rect((0.0, 0.5), (0.0, 1.0), 2f64.sqrt()).unwrap();
        let fiber_half = StepFunction2D::rect((0.0, 1.0), (0.5, 1.0), 2.0).unwrap();
        let unit = Embedding::new(params, vec![StepFunction2D::unit()]);
        for f in [base_half, fiber_half] {
            let emb = Embedding::new(params, vec![f]);
            let g = full_support_perturbation(&emb, 0.01).unwrap();
            assert!(g.sum().has_full_support());
            assert!(dist(&g.images[0], &emb.images[0], params) <= perturbation_bound(0.01, params));
            let (_, rep) = auh_pipeline(&emb, &unit, 1e-3).unwrap();
            assert!(rep.max_residual < 1e-3);
        }
    }
}
