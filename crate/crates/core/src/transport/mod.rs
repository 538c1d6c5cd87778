//! Lattice automorphisms of step-function `L_p(L_q)`.
//!
//! Every automorphism has the form `T f(x, y) = w(x, y) f(b(x), c_x(y))` where
//! `b` is a piecewise-affine bijection of the base, `c_x` is a piecewise-affine
//! bijection of the fiber that only depends on the base piece containing `x`,
//! and `w > 0` is a step multiplier with `w^q = c'(y) b'(x)^(q/p)`. That
//! identity makes `T` an isometry, and the class is closed under inversion and
//! composition.

mod build;
mod maps;
mod pipeline;

pub use build::{band_swap, base_rearrangement, canonical_transport, unit_to_e};
pub use maps::{AffinePiece, BaseRearrangement, MonotoneMap1D};
pub use pipeline::{
    auh_pipeline, full_support_perturbation, match_bands, perturbation_bound, stability_probe,
    unit_at_distance, PipelineReport,
};

use serde::{Deserialize, Serialize};

use crate::blpq::Embedding;
use crate::error::{Error, Result};
use crate::stepfn::{
    mixed_norm, CellBuilder, NormParams, Partition1D, StepFunction1D, StepFunction2D,
};
use maps::{check_bijection, pull_back};

/// One affine piece of a fiber map together with its multiplier.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberPiece {
    pub map: AffinePiece,
    pub weight: f64,
}

/// A base piece with its fiber map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaseBlock {
    pub map: AffinePiece,
    pub fiber: Vec<FiberPiece>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawAutomorphism")]
pub struct LatticeAutomorphism {
    params: NormParams,
    blocks: Vec<BaseBlock>,
}

#[derive(Deserialize)]
struct RawAutomorphism {
    params: NormParams,
    blocks: Vec<BaseBlock>,
}

impl TryFrom<RawAutomorphism> for LatticeAutomorphism {
    type Error = Error;
    fn try_from(raw: RawAutomorphism) -> Result<Self> {
        LatticeAutomorphism::new(raw.params, raw.blocks)
    }
}

/// Relative tolerance on the isometry identity `w^q = c' b'^(q/p)`.
const ISOMETRY_TOL: f64 = 1e-9;

impl LatticeAutomorphism {
    pub fn new(params: NormParams, blocks: Vec<BaseBlock>) -> Result<Self> {
        let a = Self { params, blocks };
        a.validate()?;
        Ok(a)
    }

    pub(crate) fn from_parts(params: NormParams, blocks: Vec<BaseBlock>) -> Self {
        Self { params, blocks }
    }

    pub fn identity(params: NormParams) -> Self {
        let id = AffinePiece { start: 0.0, end: 1.0, image_start: 0.0, slope: 1.0 };
        Self::from_parts(
            params,
            vec![BaseBlock { map: id, fiber: vec![FiberPiece { map: id, weight: 1.0 }] }],
        )
    }

    /// Piecewise-affine base map and fiber maps with multipliers chosen to
    /// make the result an isometry.
    pub fn from_maps(params: NormParams, base: Vec<AffinePiece>, fibers: Vec<Vec<AffinePiece>>) -> Result<Self> {
        if base.len() != fibers.len() {
            return Err(Error::DimensionMismatch(base.len(), fibers.len()));
        }
        let blocks = base
            .into_iter()
            .zip(fibers)
            .map(|(map, fib)| BaseBlock {
                fiber: fib
                    .into_iter()
                    .map(|m| FiberPiece { map: m, weight: isometric_weight(params, map.slope, m.slope) })
                    .collect(),
                map,
            })
            .collect();
        Self::new(params, blocks)
    }

    pub fn params(&self) -> NormParams {
        self.params
    }

    pub fn blocks(&self) -> &[BaseBlock] {
        &self.blocks
    }

    pub fn piece_count(&self) -> usize {
        self.blocks.iter().map(|b| b.fiber.len()).sum()
    }

    /// Tiling of base and fibers, positive weights and the isometry identity.
    pub fn validate(&self) -> Result<()> {
        let base: Vec<AffinePiece> = self.blocks.iter().map(|b| b.map).collect();
        check_bijection(&base, 1e-9)?;
        let (p, q) = (self.params.p(), self.params.q());
        for (i, b) in self.blocks.iter().enumerate() {
            let fib: Vec<AffinePiece> = b.fiber.iter().map(|f| f.map).collect();
            check_bijection(&fib, 1e-9)
                .map_err(|e| Error::InvalidAutomorphism(format!("base block {i}: {e}")))?;
            for f in &b.fiber {
                if !(f.weight > 0.0 && f.weight.is_finite()) {
                    return Err(Error::InvalidAutomorphism(format!("base block {i}: weight {}", f.weight)));
                }
                let lhs = f.weight.powf(q);
                let rhs = f.map.slope * b.map.slope.powf(q / p);
                if (lhs - rhs).abs() > ISOMETRY_TOL * rhs {
                    return Err(Error::InvalidAutomorphism(format!(
                        "base block {i}: w^q = {lhs} but c' b'^(q/p) = {rhs}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// `T f(x, y) = w(x, y) f(b(x), c_x(y))`.
    pub fn apply(&self, f: &StepFunction2D) -> StepFunction2D {
        let fbreaks = f.base().breaks();
        let mut base = CellBuilder::new();
        for blk in &self.blocks {
            pull_back(&blk.map, fbreaks, |x_end, _, cell| {
                base.push(x_end, (blk, cell));
            });
        }
        let (xb, cells) = base.finish();
        let fibers = cells
            .into_iter()
            .map(|(blk, cell)| {
                let src = f.fiber(cell);
                let sb = src.partition().breaks();
                let mut fb = CellBuilder::new();
                for fp in &blk.fiber {
                    pull_back(&fp.map, sb, |y_end, _, c| fb.push(y_end, fp.weight * src.values()[c]));
                }
                let (yb, vals) = fb.finish();
                StepFunction1D::from_breaks(yb, vals).expect("pulled-back fiber").normalized()
            })
            .collect();
        let base = Partition1D::from_breaks(xb).expect("pulled-back base");
        StepFunction2D::new(base, fibers).expect("transported function").normalized()
    }

    pub fn apply_all(&self, fs: &[StepFunction2D]) -> Vec<StepFunction2D> {
        fs.iter().map(|f| self.apply(f)).collect()
    }

    pub fn apply_embedding(&self, emb: &Embedding) -> Embedding {
        Embedding::new(emb.params, self.apply_all(&emb.images))
    }

    /// `T(1)`.
    pub fn multiplier(&self) -> StepFunction2D {
        self.apply(&StepFunction2D::unit())
    }

    pub fn inverse(&self) -> Self {
        let mut blocks: Vec<BaseBlock> = self
            .blocks
            .iter()
            .map(|b| {
                let mut fiber: Vec<FiberPiece> = b
                    .fiber
                    .iter()
                    .map(|f| FiberPiece { map: f.map.inverse(), weight: 1.0 / f.weight })
                    .collect();
                fiber.sort_by(|a, c| a.map.start.total_cmp(&c.map.start));
                retile_fiber(&mut fiber);
                BaseBlock { map: b.map.inverse(), fiber }
            })
            .collect();
        blocks.sort_by(|a, c| a.map.start.total_cmp(&c.map.start));
        retile_base(&mut blocks);
        Self::from_parts(self.params, blocks)
    }

    /// `outer o inner`: apply `inner` first, then `outer`.
    pub fn compose(outer: &Self, inner: &Self) -> Self {
        // (A o B) f = A(B f) has base map b_B o b_A and fiber maps c_B o c_A.
        let (a, b) = (outer, inner);
        let bstarts = starts_of(b.blocks.iter().map(|blk| blk.map));
        let mut builder = CellBuilder::new();
        for ablk in &a.blocks {
            pull_back(&ablk.map, &bstarts, |x_end, u0, bi| {
                let bblk = &b.blocks[bi];
                let fstarts = starts_of(bblk.fiber.iter().map(|f| f.map));
                let mut fb = CellBuilder::new();
                for af in &ablk.fiber {
                    pull_back(&af.map, &fstarts, |y_end, v0, fi| {
                        let bf = &bblk.fiber[fi];
                        fb.push(
                            y_end,
                            (bf.map.eval(v0), af.map.slope * bf.map.slope, af.weight * bf.weight),
                        );
                    });
                }
                builder.push(x_end, (bblk.map.eval(u0), ablk.map.slope * bblk.map.slope, fb.finish()));
            });
        }
        let (xb, items) = builder.finish();
        let blocks = xb
            .windows(2)
            .zip(items)
            .map(|(w, (img, slope, (yb, fitems)))| BaseBlock {
                map: AffinePiece { start: w[0], end: w[1], image_start: img, slope },
                fiber: yb
                    .windows(2)
                    .zip(fitems)
                    .map(|(v, (fimg, fslope, weight))| FiberPiece {
                        map: AffinePiece { start: v[0], end: v[1], image_start: fimg, slope: fslope },
                        weight,
                    })
                    .collect(),
            })
            .collect();
        Self::from_parts(a.params, blocks)
    }

    /// Largest `|(||T f|| - ||f||)| / max(1, ||f||)` over `fs`.
    pub fn isometry_defect(&self, fs: &[StepFunction2D]) -> f64 {
        fs.iter()
            .map(|f| {
                let n = mixed_norm(f, self.params);
                (mixed_norm(&self.apply(f), self.params) - n).abs() / n.max(1.0)
            })
            .fold(0.0, f64::max)
    }
}

/// `w` with `w^q = c' b'^(q/p)`.
pub(crate) fn isometric_weight(params: NormParams, base_slope: f64, fiber_slope: f64) -> f64 {
    (fiber_slope * base_slope.powf(params.q() / params.p())).powf(1.0 / params.q())
}

fn starts_of(pieces: impl Iterator<Item = AffinePiece>) -> Vec<f64> {
    let mut v: Vec<f64> = pieces.map(|p| p.start).collect();
    v.push(1.0);
    v[0] = 0.0;
    v
}

fn retile_fiber(fiber: &mut [FiberPiece]) {
    let n = fiber.len();
    fiber[0].map.start = 0.0;
    for i in 1..n {
        let s = fiber[i].map.start;
        fiber[i - 1].map.end = s;
    }
    fiber[n - 1].map.end = 1.0;
}

fn retile_base(blocks: &mut [BaseBlock]) {
    let n = blocks.len();
    blocks[0].map.start = 0.0;
    for i in 1..n {
        let s = blocks[i].map.start;
        blocks[i - 1].map.end = s;
    }
    blocks[n - 1].map.end = 1.0;
}
