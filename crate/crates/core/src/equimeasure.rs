//! Pushforward laws of `N`-profiles and the moment functional.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::stepfn::{is_disjoint, n_map, snap_sorted, NormParams, StepFunction1D, StepFunction2D};

/// Default clustering tolerances.
pub const TAU_VAL: f64 = 1e-9;
pub const TAU_MASS: f64 = 1e-9;

/// Finitely supported measure on `R^n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VectorMeasure {
    dim: usize,
    atoms: Vec<(f64, Vec<f64>)>,
}

impl VectorMeasure {
    pub fn new(dim: usize, atoms: Vec<(f64, Vec<f64>)>) -> Result<Self> {
        for (m, z) in &atoms {
            if !(*m > 0.0 && m.is_finite()) {
                return Err(Error::InvalidFunction(format!("atom mass {m} is not positive")));
            }
            if z.len() != dim {
                return Err(Error::DimensionMismatch(z.len(), dim));
            }
        }
        let total: f64 = atoms.iter().map(|(m, _)| m).sum();
        if total > 1.0 + 1e-12 {
            return Err(Error::InvalidFunction(format!("total mass {total} exceeds 1")));
        }
        Ok(Self { dim, atoms }.canonical())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `(mass, point)` pairs, points sorted lexicographically and distinct.
    pub fn atoms(&self) -> &[(f64, Vec<f64>)] {
        &self.atoms
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|(m, _)| m).sum()
    }

    fn canonical(mut self) -> Self {
        self.atoms.sort_by(|a, b| lex(&a.1, &b.1));
        let mut out: Vec<(f64, Vec<f64>)> = Vec::with_capacity(self.atoms.len());
        for (m, z) in self.atoms {
            match out.last_mut() {
                Some(last) if last.1 == z => last.0 += m,
                _ => out.push((m, z)),
            }
        }
        Self { dim: self.dim, atoms: out }
    }

    /// Coordinates raised to a power.
    pub fn map_points(&self, f: impl Fn(f64) -> f64) -> Self {
        let atoms = self
            .atoms
            .iter()
            .map(|(m, z)| (*m, z.iter().map(|x| f(*x)).collect()))
            .collect();
        Self { dim: self.dim, atoms }.canonical()
    }

    /// CSV rows `mass,z1,...,zn`.
    pub fn write_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["mass".to_string()];
        header.extend((1..=self.dim).map(|i| format!("z{i}")));
        out.write_record(&header)?;
        for (m, z) in &self.atoms {
            let mut row = vec![m.to_string()];
            row.extend(z.iter().map(|x| x.to_string()));
            out.write_record(&row)?;
        }
        out.flush()
    }
}

fn lex(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Law of `(N[f_1], ..., N[f_n])` under Lebesgue measure on the base.
pub fn pushforward(fs: &[StepFunction2D], params: NormParams) -> Result<VectorMeasure> {
    let profiles: Vec<StepFunction1D> = fs.iter().map(|f| n_map(f, params)).collect();
    profile_law(&profiles)
}

/// Law of `(N[f_1]^q, ..., N[f_n]^q)`.
pub fn pushforward_q(fs: &[StepFunction2D], params: NormParams) -> Result<VectorMeasure> {
    let q = params.q();
    let profiles: Vec<StepFunction1D> = fs.iter().map(|f| n_map(f, params).map(|v| v.powf(q))).collect();
    profile_law(&profiles)
}

/// Law of a vector of base functions.
pub fn profile_law(profiles: &[StepFunction1D]) -> Result<VectorMeasure> {
    if profiles.is_empty() {
        return Err(Error::Precondition("no functions".into()));
    }
    let mut all: Vec<f64> = profiles.iter().flat_map(|p| p.partition().breaks().iter().copied()).collect();
    all.sort_by(|a, b| a.total_cmp(b));
    let breaks = snap_sorted(all);
    let atoms = breaks
        .windows(2)
        .map(|w| {
            let m = 0.5 * (w[0] + w[1]);
            (w[1] - w[0], profiles.iter().map(|p| p.eval(m)).collect())
        })
        .collect();
    VectorMeasure::new(profiles.len(), atoms)
}

/// Cluster-by-cluster comparison of two measures.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub equimeasurable: bool,
    /// Half the total variation between the clustered measures.
    pub unmatched_mass: f64,
    pub clusters: usize,
    /// Largest per-cluster mass difference.
    pub max_mass_gap: f64,
}

/// Pools the points of both measures into `l_inf` clusters of radius `tau_val`
/// and compares cluster masses.
pub fn compare(m1: &VectorMeasure, m2: &VectorMeasure, tau_val: f64, tau_mass: f64) -> Result<Comparison> {
    if m1.dim != m2.dim {
        return Err(Error::DimensionMismatch(m1.dim, m2.dim));
    }
    let mut pts: Vec<(&Vec<f64>, f64, usize)> = m1
        .atoms
        .iter()
        .map(|(m, z)| (z, *m, 0))
        .chain(m2.atoms.iter().map(|(m, z)| (z, *m, 1)))
        .collect();
    pts.sort_by(|a, b| lex(a.0, b.0));
    // representatives are created in increasing first coordinate
    let mut reps: Vec<&Vec<f64>> = Vec::new();
    let mut mass: Vec<[f64; 2]> = Vec::new();
    for (z, m, side) in pts {
        let mut hit = None;
        for k in (0..reps.len()).rev() {
            if m1.dim > 0 && reps[k][0] < z[0] - tau_val {
                break;
            }
            if reps[k].iter().zip(z).all(|(a, b)| (a - b).abs() <= tau_val) {
                hit = Some(k);
                break;
            }
        }
        let k = hit.unwrap_or_else(|| {
            reps.push(z);
            mass.push([0.0, 0.0]);
            reps.len() - 1
        });
        mass[k][side] += m;
    }
    let gaps: Vec<f64> = mass.iter().map(|[a, b]| (a - b).abs()).collect();
    let max_mass_gap = gaps.iter().copied().fold(0.0, f64::max);
    let unmatched_mass = 0.5 * gaps.iter().sum::<f64>();
    Ok(Comparison {
        equimeasurable: max_mass_gap <= tau_mass,
        unmatched_mass,
        clusters: reps.len(),
        max_mass_gap,
    })
}

pub fn equimeasurable(m1: &VectorMeasure, m2: &VectorMeasure, tau_val: f64, tau_mass: f64) -> Result<bool> {
    Ok(compare(m1, m2, tau_val, tau_mass)?.equimeasurable)
}

/// `sum mass * (v0 + v . z)^r`.
pub fn moment_functional(m: &VectorMeasure, v0: f64, v: &[f64], r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::OutOfRange { name: "r", value: r });
    }
    if v.len() != m.dim {
        return Err(Error::DimensionMismatch(v.len(), m.dim));
    }
    Ok(m.atoms
        .iter()
        .map(|(mass, z)| {
            let s: f64 = v0 + v.iter().zip(z).map(|(a, b)| a * b).sum::<f64>();
            mass * s.abs().powf(r)
        })
        .sum())
}

/// `||sum c_j f_j||` computed from the law of the `N^q`-profiles of disjoint `f_j`.
pub fn norm_via_moments(fs: &[StepFunction2D], coeffs: &[f64], params: NormParams) -> Result<f64> {
    if fs.len() != coeffs.len() {
        return Err(Error::DimensionMismatch(fs.len(), coeffs.len()));
    }
    if coeffs.iter().any(|c| *c < 0.0) {
        return Err(Error::Precondition("coefficients must be nonnegative".into()));
    }
    for i in 0..fs.len() {
        for j in i + 1..fs.len() {
            if !is_disjoint(&fs[i], &fs[j]) {
                return Err(Error::Precondition(format!("functions {i} and {j} are not disjoint")));
            }
        }
    }
    let law = pushforward_q(fs, params)?;
    let q = params.q();
    let v: Vec<f64> = coeffs.iter().map(|c| c.powf(q)).collect();
    let np = moment_functional(&law, 0.0, &v, params.ratio())?;
    Ok(np.powf(1.0 / params.p()))
}

/// Degree cap used when none is given: `2 (ceil(r) + 2)`.
pub fn default_degree_cap(r: f64) -> u32 {
    2 * (r.ceil() as u32 + 2)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FunctionalRow {
    pub v0: f64,
    pub v: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub diff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentRow {
    pub exponents: Vec<u32>,
    pub degree: u32,
    pub lhs: f64,
    pub rhs: f64,
    pub diff: f64,
}

/// Evidence for or against equality of two laws: sampled functional values
/// and raw joint moments.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentReport {
    pub r: f64,
    pub functional: Vec<FunctionalRow>,
    pub moments: Vec<MomentRow>,
    pub max_functional_diff: f64,
    /// Lowest total degree with a moment difference above the tolerance.
    pub first_mismatch_degree: Option<u32>,
}

impl MomentReport {
    /// Largest moment difference at a given total degree.
    pub fn max_diff_at(&self, degree: u32) -> f64 {
        self.moments
            .iter()
            .filter(|m| m.degree == degree)
            .map(|m| m.diff.abs())
            .fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["kind", "key", "degree", "lhs", "rhs", "diff"])?;
        for row in &self.functional {
            let key = std::iter::once(row.v0)
                .chain(row.v.iter().copied())
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(" ");
            out.write_record([
                "functional".to_string(),
                key,
                String::new(),
                row.lhs.to_string(),
                row.rhs.to_string(),
                row.diff.to_string(),
            ])?;
        }
        for row in &self.moments {
            let key = row.exponents.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(" ");
            out.write_record([
                "moment".to_string(),
                key,
                row.degree.to_string(),
                row.lhs.to_string(),
                row.rhs.to_string(),
                row.diff.to_string(),
            ])?;
        }
        out.flush()
    }
}

/// Compares the functional at the sampled `(v0, v)` and every joint moment
/// `int z^a` with `|a| <= degree_max`. Moment differences above `tol` count
/// as mismatches.
pub fn moment_match_report(
    m1: &VectorMeasure,
    m2: &VectorMeasure,
    r: f64,
    degree_max: u32,
    sample_vs: &[(f64, Vec<f64>)],
    tol: f64,
) -> Result<MomentReport> {
    if m1.dim != m2.dim {
        return Err(Error::DimensionMismatch(m1.dim, m2.dim));
    }
    let mut functional = Vec::with_capacity(sample_vs.len());
    for (v0, v) in sample_vs {
        let lhs = moment_functional(m1, *v0, v, r)?;
        let rhs = moment_functional(m2, *v0, v, r)?;
        functional.push(FunctionalRow { v0: *v0, v: v.clone(), lhs, rhs, diff: lhs - rhs });
    }
    let mut moments = Vec::new();
    let mut first_mismatch_degree = None;
    for degree in 0..=degree_max {
        for exponents in compositions(degree, m1.dim) {
            let lhs = raw_moment(m1, &exponents);
            let rhs = raw_moment(m2, &exponents);
            let diff = lhs - rhs;
            if diff.abs() > tol && first_mismatch_degree.is_none() {
                first_mismatch_degree = Some(degree);
            }
            moments.push(MomentRow { exponents, degree, lhs, rhs, diff });
        }
    }
    let max_functional_diff = functional.iter().map(|f| f.diff.abs()).fold(0.0, f64::max);
    Ok(MomentReport { r, functional, moments, max_functional_diff, first_mismatch_degree })
}

fn raw_moment(m: &VectorMeasure, exps: &[u32]) -> f64 {
    m.atoms
        .iter()
        .map(|(mass, z)| mass * z.iter().zip(exps).map(|(x, e)| x.powi(*e as i32)).product::<f64>())
        .sum()
}

/// All exponent vectors of length `n` summing to `total`, lexicographically descending.
fn compositions(total: u32, n: usize) -> Vec<Vec<u32>> {
    if n == 0 {
        return if total == 0 { vec![Vec::new()] } else { Vec::new() };
    }
    if n == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in (0..=total).rev() {
        for mut rest in compositions(total - first, n - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blpq::{canonical_representation, BKpqSpec};

    fn p21() -> NormParams {
        NormParams::new(2.0, 1.0).unwrap()
    }

    #[test]
    fn unit_law() {
        let m = pushforward(&[StepFunction2D::unit()], p21()).unwrap();
        assert_eq!(m.atoms(), &[(1.0, vec![1.0])]);
    }

    #[test]
    fn canonical_law() {
        let c = canonical_representation(&BKpqSpec::new(vec![1, 2], p21()).unwrap());
        let m = pushforward(&c.atoms, p21()).unwrap();
        let s5 = 5f64.sqrt();
        assert_eq!(m.atoms().len(), 2);
        let (m0, z0) = &m.atoms()[0];
        let (m1, z1) = &m.atoms()[1];
        assert!((m0 - 0.8).abs() < 1e-15 && (z0[1] - s5 / 2.0).abs() < 1e-15 && z0[0] == 0.0);
        assert!((m1 - 0.2).abs() < 1e-15 && (z1[0] - s5).abs() < 1e-15 && z1[1] == 0.0);
    }

    #[test]
    fn functional_arithmetic() {
        let m = VectorMeasure::new(1, vec![(0.5, vec![0.0]), (0.5, vec![1.0])]).unwrap();
        assert!((moment_functional(&m, 1.0, &[1.0], 2.0).unwrap() - 2.5).abs() < 1e-15);
        let point = VectorMeasure::new(2, vec![(1.0, vec![0.0, 0.0])]).unwrap();
        assert!((moment_functional(&point, 3.0, &[1.0, 2.0], 2.5).unwrap() - 3f64.powf(2.5)).abs() < 1e-12);
        assert!(moment_functional(&point, 1.0, &[1.0], 2.0).is_err());
    }

    #[test]
    fn self_comparison() {
        let m = VectorMeasure::new(2, vec![(0.25, vec![0.1, 0.2]), (0.75, vec![1.0, 0.0])]).unwrap();
        let c = compare(&m, &m, 0.0, 0.0).unwrap();
        assert!(c.equimeasurable);
        assert_eq!(c.unmatched_mass, 0.0);
        let other = VectorMeasure::new(2, vec![(0.5, vec![0.1, 0.2]), (0.5, vec![1.0, 0.0])]).unwrap();
        let c = compare(&m, &other, 1e-9, 1e-9).unwrap();
        assert!(!c.equimeasurable);
        assert!((c.unmatched_mass - 0.25).abs() < 1e-15);
    }

    #[test]
    fn canonical_norm_via_moments() {
        let c = canonical_representation(&BKpqSpec::new(vec![1, 2], p21()).unwrap());
        let n = norm_via_moments(&c.atoms, &[1.0, 1.0, 1.0], p21()).unwrap();
        assert!((n - 5f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn compositions_count() {
        assert_eq!(compositions(3, 2).len(), 4);
        assert_eq!(compositions(2, 3).len(), 6);
        assert_eq!(compositions(0, 2), vec![vec![0, 0]]);
    }

    #[test]
    fn csv_export() {
        let m = VectorMeasure::new(1, vec![(1.0, vec![2.0])]).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "mass,z1\n1,2\n");
    }
}
