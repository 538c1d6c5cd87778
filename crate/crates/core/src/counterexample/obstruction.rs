//! Search for rectangles separating two planar pushforward measures.
//!
//! A lattice automorphism fixing `1` preserves the law of `N`-profiles, so
//! if it moved each `f^1_j` within `eps` of `f^2_j` the two laws could differ
//! by at most `eps` after an `eps`-enlargement. A rectangle `C` with
//! `m2(C) > m1(C + eps) + eps` rules that out.

use serde::Serialize;

use crate::equimeasure::VectorMeasure;
use crate::error::{Error, Result};

/// Thresholds per axis.
pub const GRID: usize = 64;

const SEARCH_STEPS: usize = 30;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    /// `[[x0, x1], [y0, y1]]`, half-open.
    pub rect: [[f64; 2]; 2],
    pub epsilon: f64,
    /// `m2(C)`.
    pub inner_mass: f64,
    /// `m1(C + eps)`.
    pub outer_mass: f64,
    /// `m2(C) - m1(C + eps) - eps`.
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ObstructionReport {
    pub grid: usize,
    /// Largest `eps` found with a witness, 0 when none.
    pub best_epsilon: f64,
    pub witness: Option<Witness>,
    pub conclusion: String,
}

/// 2D prefix sums of point masses bucketed by per-axis rank.
struct RankTable {
    stride: usize,
    prefix: Vec<f64>,
}

impl RankTable {
    /// Points land in cell `(#{bx <= x}, #{by <= y})`.
    fn new(m: &VectorMeasure, bx: &[f64], by: &[f64]) -> Self {
        let (nx, ny) = (bx.len() + 1, by.len() + 1);
        let stride = ny + 1;
        let mut prefix = vec![0.0; (nx + 1) * stride];
        for (mass, z) in m.atoms() {
            let i = bx.partition_point(|b| *b <= z[0]);
            let j = by.partition_point(|b| *b <= z[1]);
            prefix[(i + 1) * stride + j + 1] += mass;
        }
        for i in 1..=nx {
            for j in 1..=ny {
                prefix[i * stride + j] +=
                    prefix[(i - 1) * stride + j] + prefix[i * stride + j - 1] - prefix[(i - 1) * stride + j - 1];
            }
        }
        Self { stride, prefix }
    }

    /// Mass of cells `i0..=i1` by `j0..=j1`.
    fn mass(&self, i0: usize, i1: usize, j0: usize, j1: usize) -> f64 {
        if i1 < i0 || j1 < j0 {
            return 0.0;
        }
        let s = self.stride;
        let at = |i: usize, j: usize| self.prefix[i * s + j];
        at(i1 + 1, j1 + 1) - at(i0, j1 + 1) - at(i1 + 1, j0) + at(i0, j0)
    }
}

/// Inclusive cell index bounds of `[lo, hi)` in a rank table over sorted `breaks`.
fn cell_range(breaks: &[f64], lo: f64, hi: f64) -> (usize, usize) {
    let first = breaks.partition_point(|b| *b <= lo);
    let last = breaks.partition_point(|b| *b < hi);
    (first, last)
}

fn thresholds(lo: f64, hi: f64) -> Vec<f64> {
    (0..=GRID).map(|k| lo + (hi - lo) * k as f64 / GRID as f64).collect()
}

fn bounds(m1: &VectorMeasure, m2: &VectorMeasure, axis: usize) -> (f64, f64) {
    let vals = m1.atoms().iter().chain(m2.atoms()).map(|(_, z)| z[axis]);
    let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    // top threshold strictly above every point
    let pad = 1e-9 * (hi - lo).max(1.0);
    (lo, hi + pad)
}

/// Best rectangle `C` on the threshold grid for a fixed `eps`, maximizing
/// `m2(C) - m1(C + eps) - eps`. `None` unless that margin is positive.
pub fn find_witness(m1: &VectorMeasure, m2: &VectorMeasure, eps: f64) -> Result<Option<Witness>> {
    if m1.dim() != 2 {
        return Err(Error::DimensionMismatch(m1.dim(), 2));
    }
    if m2.dim() != 2 {
        return Err(Error::DimensionMismatch(m2.dim(), 2));
    }
    if m1.atoms().is_empty() && m2.atoms().is_empty() {
        return Ok(None);
    }
    let (x0, x1) = bounds(m1, m2, 0);
    let (y0, y1) = bounds(m1, m2, 1);
    let (tx, ty) = (thresholds(x0, x1), thresholds(y0, y1));
    let inner = RankTable::new(m2, &tx, &ty);
    let grow = |t: &[f64]| {
        let mut b: Vec<f64> = t.iter().flat_map(|v| [v - eps, v + eps]).collect();
        b.sort_by(|a, c| a.total_cmp(c));
        b
    };
    let (gx, gy) = (grow(&tx), grow(&ty));
    let outer = RankTable::new(m1, &gx, &gy);

    let k = GRID + 1;
    let span = |t: &[f64], g: &[f64], a: usize, b: usize| {
        (cell_range(t, t[a], t[b]), cell_range(g, t[a] - eps, t[b] + eps))
    };
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for a in 0..k {
        for b in a + 1..k {
            xs.push((a, b, span(&tx, &gx, a, b)));
            ys.push((a, b, span(&ty, &gy, a, b)));
        }
    }
    let mut best: Option<(f64, usize, usize, f64, f64)> = None;
    for (xi, (_, _, ((ix0, ix1), (ox0, ox1)))) in xs.iter().enumerate() {
        for (yi, (_, _, ((iy0, iy1), (oy0, oy1)))) in ys.iter().enumerate() {
            let m_in = inner.mass(*ix0, *ix1, *iy0, *iy1);
            if m_in <= eps {
                continue;
            }
            let m_out = outer.mass(*ox0, *ox1, *oy0, *oy1);
            let margin = m_in - m_out - eps;
            if best.is_none_or(|b| margin > b.0) {
                best = Some((margin, xi, yi, m_in, m_out));
            }
        }
    }
    Ok(best.filter(|b| b.0 > 0.0).map(|(margin, xi, yi, inner_mass, outer_mass)| {
        let (a, b, _) = xs[xi];
        let (c, d, _) = ys[yi];
        Witness { rect: [[tx[a], tx[b]], [ty[c], ty[d]]], epsilon: eps, inner_mass, outer_mass, margin }
    }))
}

/// Bisection for the largest `eps` in `[0, 1]` admitting a witness.
pub fn obstruction_report(m1: &VectorMeasure, m2: &VectorMeasure) -> Result<ObstructionReport> {
    let mut witness = find_witness(m1, m2, 0.0)?;
    let mut best_epsilon = 0.0;
    if witness.is_some() {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..SEARCH_STEPS {
            let mid = 0.5 * (lo + hi);
            match find_witness(m1, m2, mid)? {
                Some(w) => {
                    lo = mid;
                    witness = Some(w);
                }
                None => hi = mid,
            }
        }
        best_epsilon = lo;
    }
    let conclusion = match &witness {
        Some(w) if best_epsilon > 0.0 => format!(
            "no automorphism fixing 1 moves the first pair within {:.6} of the second (witness margin {:.3e})",
            best_epsilon, w.margin
        ),
        _ => "no witness found on the threshold grid".to_string(),
    };
    if best_epsilon == 0.0 {
        witness = None;
    }
    Ok(ObstructionReport { grid: GRID, best_epsilon, witness, conclusion })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(points: &[(f64, f64)]) -> VectorMeasure {
        let m = 1.0 / points.len() as f64;
        VectorMeasure::new(2, points.iter().map(|(a, b)| (m, vec![*a, *b])).collect()).unwrap()
    }

    #[test]
    fn identical_measures_have_no_witness() {
        let m = line(&[(0.1, 0.9), (0.5, 0.5), (0.8, 0.2)]);
        let rep = obstruction_report(&m, &m).unwrap();
        assert!(rep.witness.is_none());
        assert_eq!(rep.best_epsilon, 0.0);
    }

    #[test]
    fn separated_measures_have_large_witness() {
        let m1 = line(&[(0.0, 1.0)]);
        let m2 = line(&[(1.0, 0.0)]);
        let rep = obstruction_report(&m1, &m2).unwrap();
        let w = rep.witness.unwrap();
        // C around (1, 0) of mass 1, C + eps misses (0, 1) while eps < 1
        assert!(rep.best_epsilon > 0.49, "{}", rep.best_epsilon);
        assert!(w.inner_mass == 1.0 && w.outer_mass == 0.0);
    }

    #[test]
    fn witness_is_checked_directly() {
        let m1 = line(&[(0.2, 0.8), (0.3, 0.7), (0.6, 0.4)]);
        let m2 = line(&[(0.2, 0.8), (0.7, 0.3), (0.9, 0.1)]);
        let w = find_witness(&m1, &m2, 0.05).unwrap().unwrap();
        let count = |m: &VectorMeasure, e: f64| {
            m.atoms()
                .iter()
                .filter(|(_, z)| {
                    z[0] >= w.rect[0][0] - e && z[0] < w.rect[0][1] + e && z[1] >= w.rect[1][0] - e && z[1] < w.rect[1][1] + e
                })
                .map(|(m, _)| m)
                .sum::<f64>()
        };
        assert!((count(&m2, 0.0) - w.inner_mass).abs() < 1e-12);
        assert!((count(&m1, 0.05) - w.outer_mass).abs() < 1e-12);
        assert!(w.margin > 0.0);
    }
}
