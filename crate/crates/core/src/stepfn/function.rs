use crate::error::{Error, Result};
use crate::stepfn::partition::{merge_breaks, Partition1D};

/// A step function on `[0, 1]`: one value per partition cell.
#[derive(Clone, Debug, PartialEq)]
pub struct StepFunction1D {
    partition: Partition1D,
    values: Vec<f64>,
}

impl StepFunction1D {
    pub fn new(partition: Partition1D, values: Vec<f64>) -> Result<Self> {
        if partition.len() != values.len() {
            return Err(Error::InvalidFunction(format!(
                "{} cells but {} values",
                partition.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidFunction("non-finite value".into()));
        }
        Ok(Self { partition, values })
    }

    pub(crate) fn from_parts(partition: Partition1D, values: Vec<f64>) -> Self {
        debug_assert_eq!(partition.len(), values.len());
        Self { partition, values }
    }

    pub fn constant(c: f64) -> Self {
        Self::from_parts(Partition1D::unit(), vec![c])
    }

    /// Build from breakpoints and values.
    pub fn from_breaks(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::new(Partition1D::from_breaks(breaks)?, values)
    }

    pub fn partition(&self) -> &Partition1D {
        &self.partition
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.values[self.partition.locate(x)]
    }

    /// `sum len * |v|^s`.
    pub fn power_sum(&self, s: f64) -> f64 {
        self.partition
            .lengths()
            .iter()
            .zip(&self.values)
            .map(|(l, v)| l * v.abs().powf(s))
            .sum()
    }

    pub fn lp_norm(&self, s: f64) -> f64 {
        self.power_sum(s).powf(1.0 / s)
    }

    pub fn integral(&self) -> f64 {
        self.partition
            .lengths()
            .iter()
            .zip(&self.values)
            .map(|(l, v)| l * v)
            .sum()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_parts(self.partition.clone(), self.values.iter().map(|v| f(*v)).collect())
    }

    /// Values resampled on a finer breakpoint list (looked up at cell midpoints).
    pub fn resample(&self, breaks: &[f64]) -> Self {
        let values = breaks
            .windows(2)
            .map(|w| self.eval(0.5 * (w[0] + w[1])))
            .collect();
        let partition = Partition1D::from_breaks(breaks.to_vec()).expect("refined breakpoints");
        Self::from_parts(partition, values)
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        if self.partition == other.partition {
            let values = self.values.iter().zip(&other.values).map(|(a, b)| f(*a, *b)).collect();
            return Self::from_parts(self.partition.clone(), values);
        }
        let breaks = merge_breaks(self.partition.breaks(), other.partition.breaks());
        let values = breaks
            .windows(2)
            .map(|w| {
                let m = 0.5 * (w[0] + w[1]);
                f(self.eval(m), other.eval(m))
            })
            .collect();
        Self::from_parts(Partition1D::from_breaks(breaks).expect("merged breakpoints"), values)
    }

    /// Adjacent cells with equal values merged.
    pub fn normalized(&self) -> Self {
        let mut breaks = vec![0.0];
        let mut values: Vec<f64> = Vec::new();
        for (i, v) in self.values.iter().enumerate() {
            let end = self.partition.breaks()[i + 1];
            if values.last() == Some(v) {
                *breaks.last_mut().unwrap() = end;
            } else {
                values.push(*v);
                breaks.push(end);
            }
        }
        Self::from_parts(Partition1D::from_breaks(breaks).expect("coarsened breakpoints"), values)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.zip_with(other, |a, b| (a - b).abs())
            .values
            .iter()
            .fold(0.0, |m, v| m.max(*v))
    }
}

/// A step function on `[0, 1]^2`: a base partition with one fiber function
/// per base cell.
#[derive(Clone, Debug, PartialEq)]
pub struct StepFunction2D {
    base: Partition1D,
    fibers: Vec<StepFunction1D>,
}

impl StepFunction2D {
    pub fn new(base: Partition1D, fibers: Vec<StepFunction1D>) -> Result<Self> {
        if base.len() != fibers.len() {
            return Err(Error::InvalidFunction(format!(
                "{} base cells but {} fibers",
                base.len(),
                fibers.len()
            )));
        }
        if fibers.iter().flat_map(|f| f.values()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidFunction("non-finite value".into()));
        }
        Ok(Self { base, fibers })
    }

    pub(crate) fn from_parts(base: Partition1D, fibers: Vec<StepFunction1D>) -> Self {
        debug_assert_eq!(base.len(), fibers.len());
        Self { base, fibers }
    }

    pub fn constant(c: f64) -> Self {
        Self::from_parts(Partition1D::unit(), vec![StepFunction1D::constant(c)])
    }

    pub fn unit() -> Self {
        Self::constant(1.0)
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    /// Same fiber function over every base cell.
    pub fn from_fiber(fiber: StepFunction1D) -> Self {
        Self::from_parts(Partition1D::unit(), vec![fiber])
    }

    /// Fiber-constant function with the given base profile.
    pub fn from_base(profile: &StepFunction1D) -> Self {
        let fibers = profile.values().iter().map(|v| StepFunction1D::constant(*v)).collect();
        Self::from_parts(profile.partition().clone(), fibers)
    }

    /// `value` on the rectangle `[x0, x1] x [y0, y1]`, zero elsewhere.
    pub fn rect(x: (f64, f64), y: (f64, f64), value: f64) -> Result<Self> {
        let xs = interval_breaks(x)?;
        let ys = interval_breaks(y)?;
        let inner = StepFunction1D::new(
            Partition1D::from_breaks(ys.0)?,
            ys.1.iter().map(|inside| if *inside { value } else { 0.0 }).collect(),
        )?;
        let fibers = xs
            .1
            .iter()
            .map(|inside| {
                if *inside {
                    inner.clone()
                } else {
                    StepFunction1D::constant(0.0)
                }
            })
            .collect();
        Self::new(Partition1D::from_breaks(xs.0)?, fibers)
    }

    /// Tensor grid: `values[i][j]` on `[xb[i], xb[i+1]] x [yb[j], yb[j+1]]`.
    pub fn from_grid(xb: &[f64], yb: &[f64], values: &[Vec<f64>]) -> Result<Self> {
        let base = Partition1D::from_breaks(xb.to_vec())?;
        let fiber_part = Partition1D::from_breaks(yb.to_vec())?;
        if values.len() != base.len() {
            return Err(Error::DimensionMismatch(values.len(), base.len()));
        }
        let fibers = values
            .iter()
            .map(|row| StepFunction1D::new(fiber_part.clone(), row.clone()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(base, fibers)
    }

    pub fn base(&self) -> &Partition1D {
        &self.base
    }

    pub fn fibers(&self) -> &[StepFunction1D] {
        &self.fibers
    }

    pub fn fiber(&self, i: usize) -> &StepFunction1D {
        &self.fibers[i]
    }

    /// The fiber over the base point `x`.
    pub fn fiber_at(&self, x: f64) -> &StepFunction1D {
        &self.fibers[self.base.locate(x)]
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.fiber_at(x).eval(y)
    }

    /// Total number of rectangles.
    pub fn piece_count(&self) -> usize {
        self.fibers.iter().map(|f| f.len()).sum()
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.fibers.iter().flat_map(|f| f.values().iter().copied())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_parts(self.base.clone(), self.fibers.iter().map(|fib| fib.map(&f)).collect())
    }

    /// Base partition refined to `breaks` (which must contain the current ones).
    pub fn resample_base(&self, breaks: &[f64]) -> Self {
        let fibers = breaks
            .windows(2)
            .map(|w| self.fiber_at(0.5 * (w[0] + w[1])).clone())
            .collect();
        let base = Partition1D::from_breaks(breaks.to_vec()).expect("refined base breakpoints");
        Self::from_parts(base, fibers)
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        if self.base == other.base {
            let fibers = self
                .fibers
                .iter()
                .zip(&other.fibers)
                .map(|(a, b)| a.zip_with(b, &f))
                .collect();
            return Self::from_parts(self.base.clone(), fibers);
        }
        let breaks = merge_breaks(self.base.breaks(), other.base.breaks());
        let fibers = breaks
            .windows(2)
            .map(|w| {
                let m = 0.5 * (w[0] + w[1]);
                self.fiber_at(m).zip_with(other.fiber_at(m), &f)
            })
            .collect();
        Self::from_parts(Partition1D::from_breaks(breaks).expect("merged breakpoints"), fibers)
    }

    /// Both functions on one shared product partition.
    pub fn refine_with(&self, other: &Self) -> (Self, Self) {
        let breaks = merge_breaks(self.base.breaks(), other.base.breaks());
        let mut fa = Vec::with_capacity(breaks.len() - 1);
        let mut fb = Vec::with_capacity(breaks.len() - 1);
        for w in breaks.windows(2) {
            let m = 0.5 * (w[0] + w[1]);
            let (a, b) = (self.fiber_at(m), other.fiber_at(m));
            let fbreaks = merge_breaks(a.partition().breaks(), b.partition().breaks());
            fa.push(a.resample(&fbreaks));
            fb.push(b.resample(&fbreaks));
        }
        let base = Partition1D::from_breaks(breaks).expect("merged breakpoints");
        (Self::from_parts(base.clone(), fa), Self::from_parts(base, fb))
    }

    /// Equal adjacent fiber cells and equal adjacent fibers merged.
    pub fn normalized(&self) -> Self {
        let mut breaks = vec![0.0];
        let mut fibers: Vec<StepFunction1D> = Vec::new();
        for (i, fib) in self.fibers.iter().enumerate() {
            let fib = fib.normalized();
            let end = self.base.breaks()[i + 1];
            if fibers.last() == Some(&fib) {
                *breaks.last_mut().unwrap() = end;
            } else {
                fibers.push(fib);
                breaks.push(end);
            }
        }
        Self::from_parts(Partition1D::from_breaks(breaks).expect("coarsened breakpoints"), fibers)
    }

    pub fn sup(&self, other: &Self) -> Self {
        self.zip_with(other, f64::max)
    }

    pub fn inf(&self, other: &Self) -> Self {
        self.zip_with(other, f64::min)
    }

    pub fn abs(&self) -> Self {
        self.map(f64::abs)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a * b)
    }

    /// Sum of a nonempty collection; `zero` for an empty one.
    pub fn sum<'a>(fs: impl IntoIterator<Item = &'a Self>) -> Self {
        let mut it = fs.into_iter();
        match it.next() {
            None => Self::zero(),
            Some(first) => it.fold(first.clone(), |acc, f| acc.add(f)),
        }
    }

    /// `sum c_i f_i`.
    pub fn linear_combination(coeffs: &[f64], fs: &[Self]) -> Self {
        let scaled: Vec<Self> = coeffs.iter().zip(fs).map(|(c, f)| f.scale(*c)).collect();
        Self::sum(&scaled)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values().all(|v| v >= 0.0)
    }

    /// No cell with value `<= 0`.
    pub fn has_full_support(&self) -> bool {
        self.values().all(|v| v > 0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.values().all(|v| v == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.values().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.sub(other).max_abs()
    }
}

fn interval_breaks((a, b): (f64, f64)) -> Result<(Vec<f64>, Vec<bool>)> {
    if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) || a >= b {
        return Err(Error::InvalidFunction(format!("bad interval [{a}, {b}]")));
    }
    let mut breaks = vec![0.0];
    let mut inside = Vec::new();
    if a > 0.0 {
        breaks.push(a);
        inside.push(false);
    }
    breaks.push(b);
    inside.push(true);
    if b < 1.0 {
        breaks.push(1.0);
        inside.push(false);
    }
    Ok((breaks, inside))
}
