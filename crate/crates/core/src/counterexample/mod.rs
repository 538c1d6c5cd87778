//! Isometric pairs of two-dimensional sublattices containing `1` whose
//! generators are not base-equimeasurable, for integer `r = p / q >= 2`.
//!
//! With `g` the degree `r + 1` polynomial orthogonal to `1, ..., u^r` and
//! scaled to `int |g| = 1`, the densities `h_1 = 1/2 + g_+` and
//! `h_2 = 1/2 + g_-` share their first `r` moments but not moment `r + 1`.
//! `F^i` is the inverse of `H_i(u) = int_0^u h_i` and the atoms are
//! `f^i_1 = 1_{[0, F^i(x)]}(y)`, `f^i_2 = 1 - f^i_1`.
//!
//! Exact statements are made about `g` itself so they do not depend on the
//! irrational scale `1 / int |g|`, which is carried as a rational enclosure.

mod obstruction;
mod poly;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::blpq::Embedding;
use crate::equimeasure::{compare, pushforward_q, TAU_MASS, TAU_VAL};
use crate::error::{Error, Result};
use crate::stepfn::{NormParams, Partition1D, StepFunction1D, StepFunction2D};

pub use obstruction::{find_witness, obstruction_report, ObstructionReport, Witness, GRID};
pub use poly::{gram_schmidt_last, hilbert_nullspace, rat, rat_string, rat_to_f64, RationalPoly, RootInterval};

/// Root enclosures are refined to this many bits.
const ROOT_BITS: u32 = 64;

/// `h(u) = 1/2 + scale * max(sign * g(u), 0)` on `[0, 1]`, evaluated in
/// double precision.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Density {
    sign: f64,
    scale: f64,
    g: Vec<f64>,
    /// `0`, the roots of `g`, `1`.
    knots: Vec<f64>,
    /// Whether `sign * g > 0` between consecutive knots.
    active: Vec<bool>,
}

impl Density {
    fn new(sign: f64, scale: f64, g: &RationalPoly, roots: &[f64]) -> Self {
        let g = g.to_f64();
        let mut knots = vec![0.0];
        knots.extend_from_slice(roots);
        knots.push(1.0);
        let active = knots
            .windows(2)
            .map(|w| sign * horner(&g, 0.5 * (w[0] + w[1])) > 0.0)
            .collect();
        Self { sign, scale, g, knots, active }
    }

    pub fn eval(&self, u: f64) -> f64 {
        0.5 + self.scale * (self.sign * horner(&self.g, u)).max(0.0)
    }

    /// `int_a^b u^j h(u) du` for `0 <= a <= b <= 1`.
    pub fn moment(&self, j: usize, a: f64, b: f64) -> f64 {
        let k = (j + 1) as f64;
        let mut total = (b.powi(j as i32 + 1) - a.powi(j as i32 + 1)) / (2.0 * k);
        for (w, on) in self.knots.windows(2).zip(&self.active) {
            let (s, e) = (w[0].max(a), w[1].min(b));
            if *on && s < e {
                total += self.scale * self.sign * (shifted_anti(&self.g, j, e) - shifted_anti(&self.g, j, s));
            }
        }
        total
    }

    /// `H(x) = int_0^x h`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.moment(0, 0.0, x)
    }

    /// `H^-1(t)` by bisection.
    pub fn quantile(&self, t: f64) -> f64 {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                return mid;
            }
            if self.cdf(mid) < t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }

    /// Cell means of `H^-1` over `n` equal cells, via `int F = int u h(u) du`.
    pub fn cell_means(&self, n: usize) -> Vec<f64> {
        let mut q: Vec<f64> = (0..=n).map(|k| self.quantile(k as f64 / n as f64)).collect();
        q[0] = 0.0;
        q[n] = 1.0;
        q.windows(2).map(|w| (n as f64 * self.moment(1, w[0], w[1])).clamp(0.0, 1.0)).collect()
    }
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, a| acc * x + a)
}

/// Antiderivative of `u^j g(u)` vanishing at 0.
fn shifted_anti(g: &[f64], j: usize, x: f64) -> f64 {
    g.iter()
        .enumerate()
        .map(|(i, c)| c * x.powi((i + j + 1) as i32) / (i + j + 1) as f64)
        .sum()
}

/// Exact and step-level data of the construction.
#[derive(Clone, Debug)]
pub struct CounterexampleBundle {
    pub params: NormParams,
    pub r: u32,
    /// Primitive integer polynomial orthogonal to degrees `<= r`.
    pub g: RationalPoly,
    pub roots: Vec<RootInterval>,
    /// Rational enclosure of `int_0^1 |g|`.
    pub abs_integral: (BigRational, BigRational),
    pub densities: [Density; 2],
    pub resolution: usize,
    /// Cell means of `F^1` and `F^2`.
    pub profiles: [StepFunction1D; 2],
    /// `(f^i_1, f^i_2)` for `i = 1, 2`.
    pub step: [Embedding; 2],
}

impl CounterexampleBundle {
    /// `1 / int |g|` at double precision.
    pub fn scale(&self) -> f64 {
        let (lo, hi) = &self.abs_integral;
        2.0 / (rat_to_f64(lo) + rat_to_f64(hi))
    }

    /// Rational enclosure of `1 / int |g|`.
    pub fn scale_enclosure(&self) -> (BigRational, BigRational) {
        let (lo, hi) = &self.abs_integral;
        (BigRational::one() / hi, BigRational::one() / lo)
    }
}

/// The pair `(1_{[0, F(x)]}(y), 1 - 1_{[0, F(x)]}(y))` over equal base cells.
pub fn indicator_pair(params: NormParams, profile: &StepFunction1D) -> Result<Embedding> {
    let mut lower = Vec::with_capacity(profile.len());
    let mut upper = Vec::with_capacity(profile.len());
    for &h in profile.values() {
        if !(0.0..=1.0).contains(&h) {
            return Err(Error::OutOfRange { name: "height", value: h });
        }
        let (f1, f2) = if h <= 0.0 {
            (StepFunction1D::constant(0.0), StepFunction1D::constant(1.0))
        } else if h >= 1.0 {
            (StepFunction1D::constant(1.0), StepFunction1D::constant(0.0))
        } else {
            let part = Partition1D::from_breaks(vec![0.0, h, 1.0])?;
            (StepFunction1D::new(part.clone(), vec![1.0, 0.0])?, StepFunction1D::new(part, vec![0.0, 1.0])?)
        };
        lower.push(f1);
        upper.push(f2);
    }
    let base = profile.partition().clone();
    Ok(Embedding::new(
        params,
        vec![StepFunction2D::new(base.clone(), lower)?, StepFunction2D::new(base, upper)?],
    ))
}

/// Builds the construction for `r = p / q` at base resolution `n`.
pub fn build_counterexample(params: NormParams, n: usize) -> Result<CounterexampleBundle> {
    let r = match params.integer_ratio() {
        Some(r) if r >= 2 => r,
        _ => {
            return Err(Error::Precondition(format!(
                "p / q = {} is not an integer >= 2",
                params.ratio()
            )))
        }
    };
    if n < 2 {
        return Err(Error::OutOfRange { name: "resolution", value: n as f64 });
    }
    let g = hilbert_nullspace(r as usize);
    let (zero, one) = (BigRational::zero(), BigRational::one());
    let roots = g.isolate_roots(&zero, &one, ROOT_BITS);
    let abs_integral = abs_integral_enclosure(&g, &roots);
    let scale = 2.0 / (rat_to_f64(&abs_integral.0) + rat_to_f64(&abs_integral.1));
    let root_f: Vec<f64> = roots.iter().map(RootInterval::to_f64).collect();
    let densities = [Density::new(1.0, scale, &g, &root_f), Density::new(-1.0, scale, &g, &root_f)];
    let base = Partition1D::uniform(n);
    let profiles = [0, 1].map(|i| {
        StepFunction1D::new(base.clone(), densities[i].cell_means(n)).expect("one value per cell")
    });
    let step = [indicator_pair(params, &profiles[0])?, indicator_pair(params, &profiles[1])?];
    Ok(CounterexampleBundle { params, r, g, roots, abs_integral, densities, resolution: n, profiles, step })
}

/// `int_0^1 |g|` from the antiderivative at enclosed roots. Moving a root by
/// `w` changes each adjacent term by at most `w * sum |g_i|`.
fn abs_integral_enclosure(g: &RationalPoly, roots: &[RootInterval]) -> (BigRational, BigRational) {
    let anti = g.antiderivative();
    let mut pts = vec![BigRational::zero()];
    pts.extend(roots.iter().map(RootInterval::mid));
    pts.push(BigRational::one());
    let vals: Vec<BigRational> = pts.iter().map(|x| anti.eval(x)).collect();
    let centre = vals.windows(2).fold(BigRational::zero(), |acc, w| acc + (&w[1] - &w[0]).abs());
    let lipschitz = g.coeffs().iter().fold(BigRational::zero(), |acc, c| acc + c.abs());
    let err = roots
        .iter()
        .fold(BigRational::zero(), |acc, iv| acc + iv.width() * &lipschitz);
    (&centre - &err, &centre + &err)
}

/// One exact identity between the parts of `int u^j h_1` and `int u^j h_2`
/// that differ, in units of the scale: `lhs = G_j / 2`, `rhs = -G_j / 2`
/// with `G_j = int u^j g`. The shared part `int u^j / 2 + int u^j |g| / 2`
/// cancels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MomentIdentity {
    pub degree: usize,
    pub lhs: BigRational,
    pub rhs: BigRational,
}

impl MomentIdentity {
    pub fn holds(&self) -> bool {
        self.lhs == self.rhs
    }
}

/// Moment identities for degrees `<= r` and the gap at degree `r + 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MomentCertificate {
    pub r: u32,
    pub g: RationalPoly,
    pub identities: Vec<MomentIdentity>,
    pub gap_degree: usize,
    /// `int u^(r+1) g`; the moment gap of the densities is this times the scale.
    pub gap: BigRational,
    pub abs_integral: (BigRational, BigRational),
}

impl MomentCertificate {
    /// Every identity holds exactly and the gap is nonzero.
    pub fn is_valid(&self) -> bool {
        self.identities.iter().all(MomentIdentity::holds) && !self.gap.is_zero()
    }

    pub fn to_json(&self) -> CertificateJson {
        CertificateJson {
            r: self.r,
            g: self.g.coeffs().iter().map(rat_string).collect(),
            moment_identities: self
                .identities
                .iter()
                .map(|m| IdentityJson { degree: m.degree, lhs: rat_string(&m.lhs), rhs: rat_string(&m.rhs) })
                .collect(),
            gap_degree: self.gap_degree,
            gap: rat_string(&self.gap),
            abs_integral: [rat_string(&self.abs_integral.0), rat_string(&self.abs_integral.1)],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityJson {
    pub degree: usize,
    pub lhs: String,
    pub rhs: String,
}

/// Serialized certificate, rationals written as `"num/den"`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificateJson {
    pub r: u32,
    pub g: Vec<String>,
    pub moment_identities: Vec<IdentityJson>,
    pub gap_degree: usize,
    pub gap: String,
    pub abs_integral: [String; 2],
}

pub fn moment_certificate(bundle: &CounterexampleBundle) -> MomentCertificate {
    let r = bundle.r as usize;
    let half = rat(1, 2);
    let identities = (0..=r)
        .map(|j| {
            let gj = bundle.g.moment(j);
            MomentIdentity { degree: j, lhs: &gj * &half, rhs: -(&gj * &half) }
        })
        .collect();
    MomentCertificate {
        r: bundle.r,
        g: bundle.g.clone(),
        identities,
        gap_degree: r + 1,
        gap: bundle.g.moment(r + 1),
        abs_integral: bundle.abs_integral.clone(),
    }
}

/// Both sides of `int |v_1 F^i_1 + v_2 F^i_2|^r` for one coefficient pair.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IsometryRow {
    pub v: [String; 2],
    /// Differing parts in units of the scale, as in [`MomentIdentity`].
    pub lhs: String,
    pub rhs: String,
    pub equal: bool,
    /// Full values `int (v_1 u + v_2 (1 - u))^r h_i(u) du` in double precision.
    pub values: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IsometryCertificate {
    pub rows: Vec<IsometryRow>,
    pub all_equal: bool,
}

/// Exact check that `(F^1_1, F^1_2)` and `(F^2_1, F^2_2)` give the same
/// `r`-th power integrals for every nonnegative `(v_1, v_2)` sampled. Under
/// `x = H_i(u)` the integrand is the polynomial `(v_1 u + v_2 (1 - u))^r`.
pub fn certify_isometry(
    bundle: &CounterexampleBundle,
    samples: &[(BigRational, BigRational)],
) -> Result<IsometryCertificate> {
    let half = rat(1, 2);
    let mut rows = Vec::with_capacity(samples.len());
    for (v1, v2) in samples {
        if v1.is_negative() || v2.is_negative() {
            return Err(Error::Precondition("coefficients must be nonnegative".into()));
        }
        let poly = RationalPoly::new(vec![v2.clone(), v1 - v2]).pow(bundle.r);
        let d = poly.mul(&bundle.g).integral_unit();
        let (lhs, rhs) = (&d * &half, -(&d * &half));
        let coeffs = poly.to_f64();
        let values = [0, 1].map(|i| {
            coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c * bundle.densities[i].moment(k, 0.0, 1.0))
                .sum()
        });
        rows.push(IsometryRow {
            v: [rat_string(v1), rat_string(v2)],
            equal: lhs == rhs,
            lhs: rat_string(&lhs),
            rhs: rat_string(&rhs),
            values,
        });
    }
    let all_equal = rows.iter().all(|r| r.equal);
    Ok(IsometryCertificate { rows, all_equal })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NonEquimeasurableReport {
    pub gap_degree: usize,
    /// `int u^(r+1) g`, exact.
    pub gap: String,
    pub gap_nonzero: bool,
    /// `int u^(r+1) (h_1 - h_2)` at double precision.
    pub density_gap: f64,
    /// Unmatched mass between the step-level pushforwards.
    pub unmatched_mass: f64,
    pub step_equimeasurable: bool,
}

pub fn certify_non_equimeasurable(bundle: &CounterexampleBundle) -> Result<NonEquimeasurableReport> {
    let k = bundle.r as usize + 1;
    let gap = bundle.g.moment(k);
    let density_gap = bundle.densities[0].moment(k, 0.0, 1.0) - bundle.densities[1].moment(k, 0.0, 1.0);
    let m1 = pushforward_q(&bundle.step[0].images, bundle.params)?;
    let m2 = pushforward_q(&bundle.step[1].images, bundle.params)?;
    let cmp = compare(&m1, &m2, TAU_VAL, TAU_MASS)?;
    Ok(NonEquimeasurableReport {
        gap_degree: k,
        gap: rat_string(&gap),
        gap_nonzero: !gap.is_zero(),
        density_gap,
        unmatched_mass: cmp.unmatched_mass,
        step_equimeasurable: cmp.equimeasurable,
    })
}

/// Exact rational conversion of nonnegative double coefficient pairs.
pub fn rational_samples(vs: &[(f64, f64)]) -> Vec<(BigRational, BigRational)> {
    vs.iter()
        .map(|(a, b)| {
            let conv = |x: f64| BigRational::from_float(x).unwrap_or_else(|| BigRational::from_integer(BigInt::zero()));
            (conv(*a), conv(*b))
        })
        .collect()
}
