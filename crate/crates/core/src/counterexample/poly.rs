//! Exact rational polynomials, Sturm sequences and root isolation.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Polynomial with exact rational coefficients, lowest degree first.
/// Trailing zeros are trimmed so the zero polynomial has no coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalPoly {
    coeffs: Vec<BigRational>,
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// `"num/den"`, denominator always written.
pub fn rat_string(x: &BigRational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

pub fn rat_to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

impl RationalPoly {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn from_ints(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|c| rat(*c, 1)).collect())
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: BigRational) -> Self {
        Self::new(vec![c])
    }

    /// `x^k`.
    pub fn monomial(k: usize) -> Self {
        let mut c = vec![BigRational::zero(); k + 1];
        c[k] = BigRational::one();
        Self::new(c)
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<&BigRational> {
        self.coeffs.last()
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        self.coeffs.iter().rev().fold(BigRational::zero(), |acc, c| acc * x + c)
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.to_f64().iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.coeffs.iter().map(rat_to_f64).collect()
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let zero = BigRational::zero();
        Self::new(
            (0..n)
                .map(|i| self.coeffs.get(i).unwrap_or(&zero) + other.coeffs.get(i).unwrap_or(&zero))
                .collect(),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-BigRational::one()))
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        Self::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![BigRational::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    pub fn pow(&self, k: u32) -> Self {
        (0..k).fold(Self::constant(BigRational::one()), |acc, _| acc.mul(self))
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * BigRational::from_integer(BigInt::from(i)))
                .collect(),
        )
    }

    /// Antiderivative vanishing at 0.
    pub fn antiderivative(&self) -> Self {
        let mut out = vec![BigRational::zero()];
        out.extend(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| c / BigRational::from_integer(BigInt::from(i + 1))),
        );
        Self::new(out)
    }

    /// `int_a^b`.
    pub fn integrate(&self, a: &BigRational, b: &BigRational) -> BigRational {
        let anti = self.antiderivative();
        anti.eval(b) - anti.eval(a)
    }

    /// `int_0^1`.
    pub fn integral_unit(&self) -> BigRational {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c / BigRational::from_integer(BigInt::from(i + 1)))
            .fold(BigRational::zero(), |a, b| a + b)
    }

    /// `int_0^1 x^j p(x) dx`.
    pub fn moment(&self, j: usize) -> BigRational {
        self.mul(&Self::monomial(j)).integral_unit()
    }

    /// Euclidean division `(quotient, remainder)`.
    pub fn div_rem(&self, divisor: &Self) -> (Self, Self) {
        let lead = divisor.leading().expect("division by the zero polynomial").clone();
        let dd = divisor.coeffs.len() - 1;
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return (Self::zero(), self.clone());
        }
        let mut quot = vec![BigRational::zero(); rem.len() - dd];
        for k in (0..quot.len()).rev() {
            let c = &rem[k + dd] / &lead;
            for (i, d) in divisor.coeffs.iter().enumerate() {
                rem[k + i] -= &c * d;
            }
            quot[k] = c;
        }
        rem.truncate(dd);
        (Self::new(quot), Self::new(rem))
    }

    /// Integer coefficients with gcd 1 and positive leading coefficient.
    pub fn primitive(&self) -> Self {
        let Some(lead) = self.leading() else {
            return Self::zero();
        };
        let lcm = self.coeffs.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let ints: Vec<BigInt> = self.coeffs.iter().map(|c| (c * BigRational::from_integer(lcm.clone())).to_integer()).collect();
        let mut g = ints.iter().fold(BigInt::zero(), |acc, c| acc.gcd(c));
        if lead.is_negative() {
            g = -g;
        }
        Self::new(ints.into_iter().map(|c| BigRational::from_integer(c / &g)).collect())
    }

    /// Sturm sequence `p, p', -rem(p, p'), ...`.
    pub fn sturm_sequence(&self) -> Vec<Self> {
        let mut seq = vec![self.clone(), self.derivative()];
        loop {
            let n = seq.len();
            if seq[n - 1].is_zero() {
                seq.pop();
                return seq;
            }
            let (_, r) = seq[n - 2].div_rem(&seq[n - 1]);
            seq.push(r.scale(&-BigRational::one()));
        }
    }

    /// Distinct real roots in `(a, b]`. `a` must not be a root.
    pub fn count_roots(&self, a: &BigRational, b: &BigRational) -> usize {
        let seq = self.sturm_sequence();
        sign_changes(&seq, a).saturating_sub(sign_changes(&seq, b))
    }

    /// Disjoint intervals, each holding exactly one root in `(a, b]`, refined to
    /// width at most `2^-bits`. Exact roots come back as degenerate intervals.
    pub fn isolate_roots(&self, a: &BigRational, b: &BigRational, bits: u32) -> Vec<RootInterval> {
        assert!(!self.eval(a).is_zero(), "left endpoint must not be a root");
        let seq = self.sturm_sequence();
        let width = BigRational::new(BigInt::one(), BigInt::one() << bits);
        let mut out = Vec::new();
        self.isolate(&seq, a.clone(), b.clone(), &width, &mut out);
        out
    }

    fn isolate(&self, seq: &[Self], a: BigRational, b: BigRational, width: &BigRational, out: &mut Vec<RootInterval>) {
        let k = sign_changes(seq, &a).saturating_sub(sign_changes(seq, &b));
        if k == 0 {
            return;
        }
        if k == 1 {
            out.push(self.refine(a, b, width));
            return;
        }
        // split at 1/2, or at k / (2k + 1) when that lands on a root
        let mut m = &a + (&b - &a) * rat(1, 2);
        let mut k = 1;
        while self.eval(&m).is_zero() {
            m = &a + (&b - &a) * rat(k, 2 * k + 1);
            k += 1;
        }
        self.isolate(seq, a, m.clone(), width, out);
        self.isolate(seq, m, b, width, out);
    }

    /// Bisection of a single root in `(a, b]`.
    fn refine(&self, mut a: BigRational, mut b: BigRational, width: &BigRational) -> RootInterval {
        if self.eval(&b).is_zero() {
            return RootInterval { lo: b.clone(), hi: b };
        }
        let sa = self.eval(&a).signum();
        let two = rat(2, 1);
        while &b - &a > *width {
            let m = (&a + &b) / &two;
            let v = self.eval(&m);
            if v.is_zero() {
                return RootInterval { lo: m.clone(), hi: m };
            }
            if v.signum() == sa {
                a = m;
            } else {
                b = m;
            }
        }
        RootInterval { lo: a, hi: b }
    }
}

fn sign_changes(seq: &[RationalPoly], x: &BigRational) -> usize {
    let signs: Vec<BigRational> = seq.iter().map(|p| p.eval(x).signum()).filter(|s| !s.is_zero()).collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Rational enclosure `[lo, hi]` of a real root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootInterval {
    pub lo: BigRational,
    pub hi: BigRational,
}

impl RootInterval {
    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn mid(&self) -> BigRational {
        (&self.lo + &self.hi) / rat(2, 1)
    }

    pub fn to_f64(&self) -> f64 {
        rat_to_f64(&self.mid())
    }
}

impl fmt::Display for RationalPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| match i {
                0 => format!("{c}"),
                1 => format!("({c})x"),
                _ => format!("({c})x^{i}"),
            })
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}

/// Exact nullspace vector of the `(r+1) x (r+2)` Hilbert-type matrix
/// `A(i, j) = 1 / (i + j + 1)`. As a polynomial it is orthogonal on `[0, 1]`
/// to every monomial of degree at most `r`. Normalized to integer
/// coefficients with gcd 1 and positive leading coefficient.
pub fn hilbert_nullspace(r: usize) -> RationalPoly {
    let rows = r + 1;
    let cols = r + 2;
    let mut a: Vec<Vec<BigRational>> =
        (0..rows).map(|i| (0..cols).map(|j| rat(1, (i + j + 1) as i64)).collect()).collect();
    // the leading r+1 columns form an invertible Hilbert matrix
    for c in 0..rows {
        let pivot = (c..rows).find(|&i| !a[i][c].is_zero()).expect("Hilbert matrices are invertible");
        a.swap(c, pivot);
        let inv = BigRational::one() / &a[c][c];
        for v in a[c].iter_mut() {
            *v *= &inv;
        }
        for i in 0..rows {
            if i != c && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for j in 0..cols {
                    let d = &f * &a[c][j];
                    a[i][j] -= d;
                }
            }
        }
    }
    let mut x: Vec<BigRational> = a.iter().map(|row| -row[cols - 1].clone()).collect();
    x.push(BigRational::one());
    RationalPoly::new(x).primitive()
}

/// Gram-Schmidt on `1, x, ..., x^d` over `[0, 1]`; returns the last vector.
pub fn gram_schmidt_last(d: usize) -> RationalPoly {
    let inner = |p: &RationalPoly, q: &RationalPoly| p.mul(q).integral_unit();
    let mut basis: Vec<RationalPoly> = Vec::new();
    for k in 0..=d {
        let mut v = RationalPoly::monomial(k);
        for b in &basis {
            let c = inner(&v, b) / inner(b, b);
            v = v.sub(&b.scale(&c));
        }
        basis.push(v);
    }
    basis.pop().expect("nonempty")
}
