use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stepfn::SNAP;

/// Increasing affine map from `[start, end]` onto
/// `[image_start, image_start + slope * (end - start)]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffinePiece {
    pub start: f64,
    pub end: f64,
    pub image_start: f64,
    pub slope: f64,
}

impl AffinePiece {
    pub fn len(&self) -> f64 {
        self.end - self.start
    }

    pub fn image_end(&self) -> f64 {
        self.image_start + self.slope * self.len()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.image_start + self.slope * (x - self.start)
    }

    pub fn inverse(&self) -> Self {
        Self {
            start: self.image_start,
            end: self.image_end(),
            image_start: self.start,
            slope: 1.0 / self.slope,
        }
    }
}

/// Splits `piece` along the cells of a partition of its image space.
///
/// Calls `emit(domain_end, image_start, cell)` for each sub-piece, left to right.
pub(crate) fn pull_back(piece: &AffinePiece, breaks: &[f64], mut emit: impl FnMut(f64, f64, usize)) {
    let ncell = breaks.len() - 1;
    let lo = piece.image_start;
    let hi = piece.image_end();
    let mut idx = breaks.partition_point(|b| *b <= lo).saturating_sub(1).min(ncell - 1);
    let mut img = lo;
    loop {
        let cell_end = breaks[idx + 1];
        if cell_end >= hi - SNAP * piece.slope.max(1.0) || idx + 1 == ncell {
            emit(piece.end, img, idx);
            return;
        }
        let dom_end = piece.start + (cell_end - lo) / piece.slope;
        emit(dom_end, img, idx);
        img = cell_end;
        idx += 1;
    }
}

/// Maps the concatenation of `domain` intervals onto the concatenation of
/// `image` intervals with one constant slope.
pub(crate) fn lay_out(domain: &[(f64, f64)], image: &[(f64, f64)]) -> Vec<AffinePiece> {
    let dtot: f64 = domain.iter().map(|(a, b)| b - a).sum();
    let itot: f64 = image.iter().map(|(a, b)| b - a).sum();
    if domain.is_empty() || image.is_empty() || dtot <= 0.0 || itot <= 0.0 {
        return Vec::new();
    }
    let slope = itot / dtot;
    let mut out = Vec::new();
    let (mut di, mut ii) = (0usize, 0usize);
    let (mut dpos, mut ipos) = (domain[0].0, image[0].0);
    while di < domain.len() && ii < image.len() {
        let drem = domain[di].1 - dpos;
        let irem = (image[ii].1 - ipos) / slope;
        let both = (drem - irem).abs() < SNAP;
        if drem <= irem || both {
            let end = domain[di].1;
            if end - dpos > 0.0 {
                out.push(AffinePiece { start: dpos, end, image_start: ipos, slope });
            }
            ipos += drem * slope;
            di += 1;
            if di < domain.len() {
                dpos = domain[di].0;
            }
            if both {
                ii += 1;
                if ii < image.len() {
                    ipos = image[ii].0;
                }
            }
        } else {
            let end = dpos + irem;
            out.push(AffinePiece { start: dpos, end, image_start: ipos, slope });
            dpos = end;
            ii += 1;
            if ii < image.len() {
                ipos = image[ii].0;
            }
        }
    }
    // leftover domain from rounding goes to the end of the image
    if di < domain.len() {
        let last_img = image[image.len() - 1].1;
        while di < domain.len() {
            let end = domain[di].1;
            if end - dpos > 0.0 {
                out.push(AffinePiece {
                    start: dpos,
                    end,
                    image_start: (last_img - (end - dpos) * slope).max(image[image.len() - 1].0),
                    slope,
                });
            }
            di += 1;
            if di < domain.len() {
                dpos = domain[di].0;
            }
        }
    }
    out
}

/// Sorts pieces by domain, drops slivers and makes the domains tile `[0, 1]` exactly.
pub(crate) fn close_tiling(pieces: &mut Vec<AffinePiece>) {
    pieces.sort_by(|a, b| a.start.total_cmp(&b.start));
    pieces.retain(|p| p.len() >= SNAP);
    if pieces.is_empty() {
        return;
    }
    pieces[0].start = 0.0;
    for i in 1..pieces.len() {
        let s = pieces[i].start;
        pieces[i - 1].end = s;
    }
    let last = pieces.len() - 1;
    pieces[last].end = 1.0;
}

/// Checks that domains tile `[0, 1]` in order and images tile `[0, 1]` in some order.
pub(crate) fn check_bijection(pieces: &[AffinePiece], tol: f64) -> Result<()> {
    if pieces.is_empty() {
        return Err(Error::InvalidAutomorphism("empty map".into()));
    }
    if pieces.iter().any(|p| !(p.slope > 0.0 && p.slope.is_finite()) || p.len() <= 0.0) {
        return Err(Error::InvalidAutomorphism("piece with non-positive slope or length".into()));
    }
    let mut pos = 0.0;
    for p in pieces {
        if (p.start - pos).abs() > tol {
            return Err(Error::InvalidAutomorphism(format!("domain gap at {pos}")));
        }
        pos = p.end;
    }
    if (pos - 1.0).abs() > tol {
        return Err(Error::InvalidAutomorphism(format!("domain ends at {pos}")));
    }
    let mut imgs: Vec<(f64, f64)> = pieces.iter().map(|p| (p.image_start, p.image_end())).collect();
    imgs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut pos = 0.0;
    for (a, b) in imgs {
        if (a - pos).abs() > tol {
            return Err(Error::InvalidAutomorphism(format!("image gap at {pos}")));
        }
        pos = b;
    }
    if (pos - 1.0).abs() > tol {
        return Err(Error::InvalidAutomorphism(format!("image ends at {pos}")));
    }
    Ok(())
}

/// Increasing piecewise-linear bijection of `[0, 1]`, stored by its knots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotoneMap1D {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl MonotoneMap1D {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let ok = xs.len() == ys.len()
            && xs.len() >= 2
            && xs[0] == 0.0
            && ys[0] == 0.0
            && xs[xs.len() - 1] == 1.0
            && ys[ys.len() - 1] == 1.0
            && xs.windows(2).all(|w| w[1] > w[0])
            && ys.windows(2).all(|w| w[1] > w[0]);
        if ok {
            Ok(Self { xs, ys })
        } else {
            Err(Error::InvalidAutomorphism("knots must increase from (0,0) to (1,1)".into()))
        }
    }

    pub fn identity() -> Self {
        Self { xs: vec![0.0, 1.0], ys: vec![0.0, 1.0] }
    }

    /// Normalized cumulative integral of a nonnegative step density.
    pub fn cdf(breaks: &[f64], density: &[f64]) -> Result<Self> {
        if density.iter().any(|d| !(*d > 0.0)) {
            return Err(Error::Precondition("density must be positive".into()));
        }
        let mut ys = vec![0.0];
        let mut acc = 0.0;
        for (w, d) in breaks.windows(2).zip(density) {
            acc += (w[1] - w[0]) * d;
            ys.push(acc);
        }
        for y in ys.iter_mut() {
            *y /= acc;
        }
        let n = ys.len() - 1;
        ys[n] = 1.0;
        Self::new(breaks.to_vec(), ys)
    }

    pub fn knots(&self) -> (&[f64], &[f64]) {
        (&self.xs, &self.ys)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let i = self.xs.partition_point(|k| *k <= x).saturating_sub(1).min(self.xs.len() - 2);
        let t = (x - self.xs[i]) / (self.xs[i + 1] - self.xs[i]);
        self.ys[i] + t * (self.ys[i + 1] - self.ys[i])
    }

    pub fn inverse(&self) -> Self {
        Self { xs: self.ys.clone(), ys: self.xs.clone() }
    }

    pub fn pieces(&self) -> Vec<AffinePiece> {
        self.xs
            .windows(2)
            .zip(self.ys.windows(2))
            .map(|(x, y)| AffinePiece {
                start: x[0],
                end: x[1],
                image_start: y[0],
                slope: (y[1] - y[0]) / (x[1] - x[0]),
            })
            .collect()
    }
}

/// Measure-preserving interval exchange of the base.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaseRearrangement {
    pieces: Vec<AffinePiece>,
}

impl BaseRearrangement {
    /// Cells of length `lengths[i]`, laid out in the order `order`.
    ///
    /// Cell `order[k]` of the source occupies the `k`-th slot of the image.
    pub fn from_permutation(lengths: &[f64], order: &[usize]) -> Result<Self> {
        if order.len() != lengths.len() {
            return Err(Error::DimensionMismatch(order.len(), lengths.len()));
        }
        let mut seen = vec![false; lengths.len()];
        for &o in order {
            if o >= lengths.len() || seen[o] {
                return Err(Error::InvalidAutomorphism("order is not a permutation".into()));
            }
            seen[o] = true;
        }
        let mut starts = Vec::with_capacity(lengths.len());
        let mut acc = 0.0;
        for l in lengths {
            starts.push(acc);
            acc += l;
        }
        let mut image_starts = vec![0.0; lengths.len()];
        let mut acc = 0.0;
        for &o in order {
            image_starts[o] = acc;
            acc += lengths[o];
        }
        let mut pieces: Vec<AffinePiece> = (0..lengths.len())
            .map(|i| AffinePiece {
                start: starts[i],
                end: starts[i] + lengths[i],
                image_start: image_starts[i],
                slope: 1.0,
            })
            .collect();
        close_tiling(&mut pieces);
        Self::new(pieces)
    }

    pub fn new(pieces: Vec<AffinePiece>) -> Result<Self> {
        check_bijection(&pieces, 1e-9)?;
        if pieces.iter().any(|p| (p.slope - 1.0).abs() > 1e-12) {
            return Err(Error::InvalidAutomorphism("interval exchange must have unit slopes".into()));
        }
        Ok(Self { pieces })
    }

    pub fn pieces(&self) -> &[AffinePiece] {
        &self.pieces
    }

    pub fn eval(&self, x: f64) -> f64 {
        let i = self.pieces.partition_point(|p| p.start <= x).saturating_sub(1);
        self.pieces[i].eval(x)
    }
}
