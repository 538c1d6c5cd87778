use crate::blpq::{verify_blpq_structure, BKpqSpec, Embedding};
use crate::error::{Error, Result};
use crate::stepfn::{mixed_norm, refine_all, NormParams, Tolerances};

use super::maps::{close_tiling, lay_out, AffinePiece};
use super::{isometric_weight, BaseBlock, FiberPiece, LatticeAutomorphism};

/// The automorphism `phi` with `phi(1) = e`:
/// `phi(f)(x, y) = e(x, y) f(int_0^x N[e]^p, int_0^y e(x, .)^q / N[e](x)^q)`.
pub fn unit_to_e(e: &crate::StepFunction2D, params: NormParams) -> Result<LatticeAutomorphism> {
    if !e.has_full_support() {
        return Err(Error::Precondition("e must be strictly positive on every cell".into()));
    }
    let norm = mixed_norm(e, params);
    let tol = Tolerances::from_env().norm;
    if (norm - 1.0).abs() > tol {
        return Err(Error::Precondition(format!("e must have unit norm, got {norm}")));
    }
    let e = e.scale(1.0 / norm);
    let (p, q) = (params.p(), params.q());
    let mut blocks = Vec::with_capacity(e.base().len());
    let mut xacc = 0.0;
    for (i, fib) in e.fibers().iter().enumerate() {
        let nq = fib.power_sum(q);
        let base_slope = nq.powf(p / q);
        let (x0, x1) = e.base().cell(i);
        let mut fiber = Vec::with_capacity(fib.len());
        let mut yacc = 0.0;
        for (c, v) in fib.values().iter().enumerate() {
            let (y0, y1) = fib.partition().cell(c);
            let slope = v.powf(q) / nq;
            fiber.push(FiberPiece {
                map: AffinePiece { start: y0, end: y1, image_start: yacc, slope },
                weight: *v,
            });
            yacc += slope * (y1 - y0);
        }
        blocks.push(BaseBlock {
            map: AffinePiece { start: x0, end: x1, image_start: xacc, slope: base_slope },
            fiber,
        });
        xacc += base_slope * (x1 - x0);
    }
    LatticeAutomorphism::new(params, blocks)
}

/// Interval exchange `T` with `T(1_{src_k x B}) = 1_{dst_k x B}` for every family `k`.
///
/// Whatever both lists leave uncovered is exchanged as one extra family.
pub fn base_rearrangement(
    src: &[Vec<(f64, f64)>],
    dst: &[Vec<(f64, f64)>],
    params: NormParams,
) -> Result<LatticeAutomorphism> {
    if src.len() != dst.len() {
        return Err(Error::DimensionMismatch(src.len(), dst.len()));
    }
    let total = |fam: &[(f64, f64)]| fam.iter().map(|(a, b)| b - a).sum::<f64>();
    for (k, (s, d)) in src.iter().zip(dst).enumerate() {
        let (ls, ld) = (total(s), total(d));
        if (ls - ld).abs() > 1e-12 {
            return Err(Error::LengthMismatch { index: k, src: ls, dst: ld });
        }
    }
    let mut src_fams: Vec<Vec<(f64, f64)>> = src.iter().map(|f| sorted(f)).collect();
    let mut dst_fams: Vec<Vec<(f64, f64)>> = dst.iter().map(|f| sorted(f)).collect();
    for fams in [&src_fams, &dst_fams] {
        check_disjoint(fams)?;
    }
    src_fams.push(complement(&src_fams));
    dst_fams.push(complement(&dst_fams));
    let mut base = Vec::new();
    for (s, d) in src_fams.iter().zip(&dst_fams) {
        // the base map sends dst_k onto src_k, so T f = f o b moves mass from src to dst
        base.extend(lay_out(d, s).into_iter().map(|mut p| {
            p.slope = 1.0;
            p
        }));
    }
    close_tiling(&mut base);
    let id = AffinePiece { start: 0.0, end: 1.0, image_start: 0.0, slope: 1.0 };
    let fibers = vec![vec![id]; base.len()];
    LatticeAutomorphism::from_maps(params, base, fibers)
}

/// Exchanges the base sets `a` and `b` (each a list of disjoint intervals,
/// together covering the base) with constant slopes; fibers are untouched.
pub fn band_swap(a: &[(f64, f64)], b: &[(f64, f64)], params: NormParams) -> Result<LatticeAutomorphism> {
    let mut base = lay_out(a, b);
    base.extend(lay_out(b, a));
    close_tiling(&mut base);
    let id = AffinePiece { start: 0.0, end: 1.0, image_start: 0.0, slope: 1.0 };
    let fibers = vec![vec![id]; base.len()];
    LatticeAutomorphism::from_maps(params, base, fibers)
}

/// The automorphism `Psi` with `Psi(e(k, j)) = emb[t]` for the canonical atoms of
/// `spec`, where block `k` of the canonical atoms corresponds to `groups[k]`
/// and atom `j` of it to `groups[k][j]`.
///
/// `emb` must be a fully supporting `BL_pL_q` embedding with `sum emb = c 1`.
pub fn canonical_transport(
    emb: &Embedding,
    spec: &BKpqSpec,
    groups: &[Vec<usize>],
) -> Result<LatticeAutomorphism> {
    let params = emb.params;
    let canon = crate::blpq::canonical_representation(spec);
    let refined = refine_all(&emb.images);
    let base = refined[0].base().clone();
    let mut owner_of_image = vec![usize::MAX; emb.images.len()];
    for (k, g) in groups.iter().enumerate() {
        if g.len() != spec.blocks()[k] {
            return Err(Error::StructureMismatch(format!(
                "block {k} has {} atoms, expected {}",
                g.len(),
                spec.blocks()[k]
            )));
        }
        for &t in g {
            owner_of_image[t] = k;
        }
    }

    // block of every base cell
    let mut cell_block = Vec::with_capacity(base.len());
    for c in 0..base.len() {
        let present: Vec<usize> = (0..refined.len())
            .filter(|t| refined[*t].fiber(c).values().iter().any(|v| *v != 0.0))
            .collect();
        let k = match present.first() {
            Some(t) => owner_of_image[*t],
            None => {
                return Err(Error::Precondition(format!(
                    "base cell {c} carries no atom; the embedding is not fully supporting"
                )))
            }
        };
        if present.iter().any(|t| owner_of_image[*t] != k) {
            return Err(Error::StructureMismatch(format!("base cell {c} meets two blocks")));
        }
        cell_block.push(k);
    }

    let mut base_pieces: Vec<AffinePiece> = Vec::new();
    for k in 0..groups.len() {
        let cells: Vec<(f64, f64)> = (0..base.len())
            .filter(|c| cell_block[*c] == k)
            .map(|c| base.cell(c))
            .collect();
        base_pieces.extend(lay_out(&cells, &[canon.base_interval(k)]));
    }
    close_tiling(&mut base_pieces);

    let mut blocks = Vec::with_capacity(base_pieces.len());
    for bp in base_pieces {
        let c = base.locate(0.5 * (bp.start + bp.end));
        let k = cell_block[c];
        let m = spec.blocks()[k];
        let fp = refined[0].fiber(c).partition();
        let mut pieces = Vec::new();
        for (j, &t) in groups[k].iter().enumerate() {
            let cells: Vec<(f64, f64)> = (0..fp.len())
                .filter(|y| refined[t].fiber(c).values()[*y] != 0.0)
                .map(|y| fp.cell(y))
                .collect();
            let v = (j as f64 / m as f64, if j + 1 == m { 1.0 } else { (j + 1) as f64 / m as f64 });
            pieces.extend(lay_out(&cells, &[v]));
        }
        let covered: f64 = pieces.iter().map(|p| p.len()).sum();
        if (covered - 1.0).abs() > 1e-9 {
            return Err(Error::Precondition(format!(
                "fiber over base cell {c} is only {covered} covered by the block atoms"
            )));
        }
        close_tiling(&mut pieces);
        let fiber = pieces
            .into_iter()
            .map(|map| FiberPiece { map, weight: isometric_weight(params, bp.slope, map.slope) })
            .collect();
        blocks.push(BaseBlock { map: bp, fiber });
    }
    LatticeAutomorphism::new(params, blocks)
}

/// Block structure shared by two embeddings, in the order of the first.
pub(crate) fn shared_groups(e1: &Embedding, e2: &Embedding, tol: f64) -> Result<(BKpqSpec, Vec<Vec<usize>>)> {
    if e1.len() != e2.len() {
        return Err(Error::StructureMismatch(format!("{} atoms vs {} atoms", e1.len(), e2.len())));
    }
    let r1 = verify_blpq_structure(e1, tol);
    let r2 = verify_blpq_structure(e2, tol);
    for (name, r) in [("first", &r1), ("second", &r2)] {
        if !r.is_blpq {
            return Err(Error::StructureMismatch(format!(
                "{name} embedding is not a BLpLq copy: {}",
                r.violations.join("; ")
            )));
        }
    }
    let norm = |g: &Vec<usize>| {
        let mut g = g.clone();
        g.sort_unstable();
        g
    };
    let groups: Vec<Vec<usize>> = r1.block_partition.iter().map(norm).collect();
    let mut other: Vec<Vec<usize>> = r2.block_partition.iter().map(norm).collect();
    other.sort();
    let mut mine = groups.clone();
    mine.sort();
    if mine != other {
        return Err(Error::StructureMismatch(format!(
            "block groupings differ: {:?} vs {:?}",
            r1.block_partition, r2.block_partition
        )));
    }
    let spec = BKpqSpec::new(groups.iter().map(Vec::len).collect(), e1.params)?;
    Ok((spec, groups))
}

fn sorted(fam: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut v: Vec<(f64, f64)> = fam.iter().copied().filter(|(a, b)| b > a).collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    v
}

fn check_disjoint(fams: &[Vec<(f64, f64)>]) -> Result<()> {
    let mut all: Vec<(f64, f64)> = fams.iter().flatten().copied().collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    for w in all.windows(2) {
        if w[1].0 < w[0].1 - 1e-12 {
            return Err(Error::Precondition(format!(
                "intervals [{}, {}] and [{}, {}] overlap",
                w[0].0, w[0].1, w[1].0, w[1].1
            )));
        }
    }
    if all.iter().any(|(a, b)| *a < 0.0 || *b > 1.0) {
        return Err(Error::Precondition("intervals must lie in [0, 1]".into()));
    }
    Ok(())
}

fn complement(fams: &[Vec<(f64, f64)>]) -> Vec<(f64, f64)> {
    let mut all: Vec<(f64, f64)> = fams.iter().flatten().copied().collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out = Vec::new();
    let mut pos = 0.0;
    for (a, b) in all {
        if a > pos {
            out.push((pos, a));
        }
        pos = f64::max(pos, b);
    }
    if pos < 1.0 {
        out.push((pos, 1.0));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stepfn::{n_map, StepFunction2D};

    #[test]
    fn unit_gives_identity() {
        let params = NormParams::new(2.0, 1.0).unwrap();
        let phi = unit_to_e(&StepFunction2D::unit(), params).unwrap();
        assert_eq!(phi, LatticeAutomorphism::identity(params));
    }

    #[test]
    fn base_only_example() {
        let params = NormParams::new(2.0, 1.0).unwrap();
        let e = StepFunction2D::rect((0.0, 0.5), (0.0, 1.0), 1.5f64.sqrt())
            .unwrap()
            .add(&StepFunction2D::rect((0.5, 1.0), (0.0, 1.0), 0.5f64.sqrt()).unwrap());
        let phi = unit_to_e(&e, params).unwrap();
        let f = StepFunction2D::rect((0.0, 0.5), (0.0, 1.0), 1.0).unwrap();
        let g = phi.apply(&f);
        assert_eq!(g.base().len(), 2);
        assert!((g.base().breaks()[1] - 1.0 / 3.0).abs() < 1e-15);
        assert!((g.eval(0.1, 0.5) - 1.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(g.eval(0.5, 0.5), 0.0);
        assert!((mixed_norm(&g, params) - mixed_norm(&f, params)).abs() < 1e-15);
    }

    #[test]
    fn fiber_only_example() {
        let params = NormParams::new(2.0, 1.0).unwrap();
        let e = StepFunction2D::from_grid(&[0.0, 1.0], &[0.0, 0.5, 1.0], &[vec![0.5, 1.5]]).unwrap();
        let phi = unit_to_e(&e, params).unwrap();
        let f = StepFunction2D::rect((0.0, 1.0), (0.0, 0.5), 1.0).unwrap();
        let g = phi.apply(&f);
        let fib = g.fiber(0);
        assert_eq!(fib.len(), 3);
        assert!((fib.partition().breaks()[2] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(fib.values(), &[0.5, 1.5, 0.0]);
        assert!((n_map(&g, params).values()[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_unit() {
        let params = NormParams::new(2.0, 1.0).unwrap();
        assert!(unit_to_e(&StepFunction2D::constant(2.0), params).is_err());
        let holed = StepFunction2D::rect((0.0, 0.5), (0.0, 1.0), 2f64.sqrt()).unwrap();
        assert!(unit_to_e(&holed, params).is_err());
    }

    #[test]
    fn swap_halves() {
        let params = NormParams::new(2.0, 1.0).unwrap();
        let t = base_rearrangement(&[vec![(0.0, 0.5)]], &[vec![(0.5, 1.0)]], params).unwrap();
        let f = StepFunction2D::rect((0.0, 0.5), (0.2, 0.7), 1.0).unwrap();
        let g = StepFunction2D::rect((0.5, 1.0), (0.2, 0.7), 1.0).unwrap();
        assert!(t.apply(&f).max_abs_diff(&g) == 0.0);
        assert!(matches!(
            base_rearrangement(&[vec![(0.0, 0.5)]], &[vec![(0.5, 0.9)]], params),
            Err(Error::LengthMismatch { .. })
        ));
    }
}
