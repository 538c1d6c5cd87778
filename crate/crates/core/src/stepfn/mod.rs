//! Step functions on the unit square and the mixed `L_p(L_q)` norm calculus.
//!
//! A [`StepFunction2D`] is a base partition of `[0, 1]` together with one
//! fiber step function per base cell. All lattice operations work on common
//! refinements, so results are exact up to float rounding.

mod function;
mod json;
mod partition;

pub use function::{StepFunction1D, StepFunction2D};
pub use json::{FiberJson, StepFunctionJson};
pub use partition::Partition1D;

pub(crate) use partition::{snap_sorted, CellBuilder};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on partition lengths summing to one.
pub const EPS_PART: f64 = 1e-12;
/// Default tolerance for norm comparisons.
pub const EPS_NORM: f64 = 1e-9;
/// Cells shorter than this are absorbed by a neighbour when refining.
pub const SNAP: f64 = 1e-13;

/// Centralized tolerances. `LPLQ_TOLERANCE_SCALE` multiplies the norm tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub partition: f64,
    pub norm: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            partition: EPS_PART,
            norm: EPS_NORM,
        }
    }
}

impl Tolerances {
    pub fn from_env() -> Self {
        let scale = std::env::var("LPLQ_TOLERANCE_SCALE")
            .ok()
            .and_then(|s| s.trim().parse::<f64>().ok())
            .filter(|s| s.is_finite() && *s > 0.0)
            .unwrap_or(1.0);
        Self::default().scaled(scale)
    }

    pub fn scaled(self, scale: f64) -> Self {
        Self {
            norm: self.norm * scale,
            ..self
        }
    }
}

/// Exponents of the mixed norm, `1 <= p, q < inf` and `p != q`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct NormParams {
    p: f64,
    q: f64,
}

#[derive(Deserialize)]
struct RawParams {
    p: f64,
    q: f64,
}

impl TryFrom<RawParams> for NormParams {
    type Error = Error;
    fn try_from(raw: RawParams) -> Result<Self> {
        NormParams::new(raw.p, raw.q)
    }
}

impl NormParams {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        let ok = p.is_finite() && q.is_finite() && p >= 1.0 && q >= 1.0 && p != q;
        if ok {
            Ok(Self { p, q })
        } else {
            Err(Error::InvalidNormParams { p, q })
        }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// `r = p / q`.
    pub fn ratio(&self) -> f64 {
        self.p / self.q
    }

    /// `Some(r)` when `p / q` is an integer within `1e-12`.
    pub fn integer_ratio(&self) -> Option<u32> {
        let r = self.ratio();
        let k = r.round();
        ((r - k).abs() <= 1e-12 && k >= 1.0 && k < u32::MAX as f64).then_some(k as u32)
    }
}

/// `(sum_base len * (sum_fiber len * |v|^q)^(p/q))^(1/p)`.
pub fn mixed_norm(f: &StepFunction2D, params: NormParams) -> f64 {
    mixed_norm_pow(f, params).powf(1.0 / params.p())
}

/// The `p`-th power of [`mixed_norm`].
pub fn mixed_norm_pow(f: &StepFunction2D, params: NormParams) -> f64 {
    let (p, q) = (params.p(), params.q());
    f.base()
        .lengths()
        .iter()
        .zip(f.fibers())
        .map(|(len, fib)| len * fib.power_sum(q).powf(p / q))
        .sum()
}

/// Fiber norms `N[f](x) = ||f(x, .)||_q`.
pub fn n_map(f: &StepFunction2D, params: NormParams) -> StepFunction1D {
    let q = params.q();
    let values = f.fibers().iter().map(|fib| fib.power_sum(q).powf(1.0 / q)).collect();
    StepFunction1D::from_parts(f.base().clone(), values)
}

/// `inf(|f|, |g|) = 0` everywhere.
pub fn is_disjoint(f: &StepFunction2D, g: &StepFunction2D) -> bool {
    let m = f.zip_with(g, |a, b| a.abs().min(b.abs()));
    m.fibers().iter().all(|fib| fib.values().iter().all(|v| *v == 0.0))
}

/// `min(N[f], N[g]) = 0` on every base cell of the refinement.
pub fn is_base_disjoint(f: &StepFunction2D, g: &StepFunction2D, params: NormParams) -> bool {
    let nf = n_map(f, params);
    let ng = n_map(g, params);
    let m = nf.zip_with(&ng, |a, b| a.min(b));
    m.values().iter().all(|v| *v == 0.0)
}

/// Both functions expressed on one common product partition.
pub fn refine_common(f: &StepFunction2D, g: &StepFunction2D) -> (StepFunction2D, StepFunction2D) {
    f.refine_with(g)
}

/// All functions expressed on one common product partition.
pub fn refine_all(fs: &[StepFunction2D]) -> Vec<StepFunction2D> {
    if fs.is_empty() {
        return Vec::new();
    }
    let mut all: Vec<f64> = fs.iter().flat_map(|f| f.base().breaks().iter().copied()).collect();
    all.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
    let breaks = snap_sorted(all);
    let mut fibers: Vec<Vec<StepFunction1D>> = vec![Vec::with_capacity(breaks.len() - 1); fs.len()];
    for w in breaks.windows(2) {
        let m = 0.5 * (w[0] + w[1]);
        let cell: Vec<&StepFunction1D> = fs.iter().map(|f| f.fiber_at(m)).collect();
        let mut ys: Vec<f64> = cell.iter().flat_map(|f| f.partition().breaks().iter().copied()).collect();
        ys.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
        let ys = snap_sorted(ys);
        for (out, fib) in fibers.iter_mut().zip(&cell) {
            out.push(fib.resample(&ys));
        }
    }
    let base = Partition1D::from_breaks(breaks).expect("merged breakpoints");
    fibers
        .into_iter()
        .map(|fib| StepFunction2D::new(base.clone(), fib).expect("refined function"))
        .collect()
}

/// `||f - g||`.
pub fn dist(f: &StepFunction2D, g: &StepFunction2D, params: NormParams) -> f64 {
    mixed_norm(&f.sub(g), params)
}
