//! Finite-dimensional `BL_pL_q` lattices: `l_p`-sums of `l_q^{m_k}` blocks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stepfn::{
    is_disjoint, mixed_norm, n_map, refine_all, CellBuilder, NormParams, Partition1D,
    StepFunction1D, StepFunction2D,
};

/// Default level-merge tolerance for [`extract_blpq_atoms`].
pub const LEVEL_TOL: f64 = 1e-10;

/// Block sizes `m_1, ..., m_N` of a lattice in the class `BK_{p,q}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecJson", into = "SpecJson")]
pub struct BKpqSpec {
    params: NormParams,
    blocks: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct SpecJson {
    p: f64,
    q: f64,
    blocks: Vec<usize>,
}

impl TryFrom<SpecJson> for BKpqSpec {
    type Error = Error;
    fn try_from(raw: SpecJson) -> Result<Self> {
        BKpqSpec::new(raw.blocks, NormParams::new(raw.p, raw.q)?)
    }
}

impl From<BKpqSpec> for SpecJson {
    fn from(s: BKpqSpec) -> Self {
        SpecJson {
            p: s.params.p(),
            q: s.params.q(),
            blocks: s.blocks,
        }
    }
}

impl BKpqSpec {
    pub fn new(blocks: Vec<usize>, params: NormParams) -> Result<Self> {
        if blocks.is_empty() || blocks.contains(&0) {
            return Err(Error::Precondition(format!(
                "block sizes must be nonempty and positive, got {blocks:?}"
            )));
        }
        Ok(Self { params, blocks })
    }

    pub fn params(&self) -> NormParams {
        self.params
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    /// Total number of atoms `sum m_k`.
    pub fn atom_count(&self) -> usize {
        self.blocks.iter().sum()
    }

    /// Flat index of atom `(k, j)`, both zero-based.
    pub fn atom_index(&self, k: usize, j: usize) -> usize {
        assert!(j < self.blocks[k]);
        self.blocks[..k].iter().sum::<usize>() + j
    }

    /// `(k, j)` pairs in flat order.
    pub fn labels(&self) -> Vec<(usize, usize)> {
        self.blocks
            .iter()
            .enumerate()
            .flat_map(|(k, m)| (0..*m).map(move |j| (k, j)))
            .collect()
    }
}

/// The canonical realization `e(k, j) = eta * 1_{W_k x V_{k,j}}`.
#[derive(Clone, Debug)]
pub struct CanonicalAtoms {
    pub spec: BKpqSpec,
    pub eta: f64,
    /// Lengths of `W_1, ..., W_N`.
    pub base_cells: Vec<f64>,
    /// Lengths of `V_{k,1}, ..., V_{k,m_k}` per block.
    pub fiber_cells: Vec<Vec<f64>>,
    /// Atoms in flat `(k, j)` order.
    pub atoms: Vec<StepFunction2D>,
}

impl CanonicalAtoms {
    pub fn atom(&self, k: usize, j: usize) -> &StepFunction2D {
        &self.atoms[self.spec.atom_index(k, j)]
    }

    pub fn embedding(&self) -> Embedding {
        Embedding::new(self.spec.params(), self.atoms.clone())
    }

    /// `W_k` as an interval.
    pub fn base_interval(&self, k: usize) -> (f64, f64) {
        let start: f64 = self.base_cells[..k].iter().sum();
        let end = if k + 1 == self.base_cells.len() { 1.0 } else { start + self.base_cells[k] };
        (start, end)
    }
}

pub fn canonical_representation(spec: &BKpqSpec) -> CanonicalAtoms {
    let r = spec.params().ratio();
    let p = spec.params().p();
    let eta_p: f64 = spec.blocks().iter().map(|m| (*m as f64).powf(r)).sum();
    let eta = eta_p.powf(1.0 / p);
    let base_cells: Vec<f64> = spec.blocks().iter().map(|m| (*m as f64).powf(r) / eta_p).collect();

    let mut breaks = vec![0.0];
    let mut acc = 0.0;
    for l in &base_cells[..base_cells.len() - 1] {
        acc += l;
        breaks.push(acc);
    }
    breaks.push(1.0);
    let base = Partition1D::from_breaks(breaks).expect("block lengths are positive");

    let mut atoms = Vec::with_capacity(spec.atom_count());
    for (k, j) in spec.labels() {
        let m = spec.blocks()[k];
        let fibers = (0..spec.blocks().len())
            .map(|kk| {
                if kk == k {
                    let mut vals = vec![0.0; m];
                    vals[j] = eta;
                    StepFunction1D::new(Partition1D::uniform(m), vals).expect("uniform fiber")
                } else {
                    StepFunction1D::constant(0.0)
                }
            })
            .collect();
        atoms.push(StepFunction2D::new(base.clone(), fibers).expect("canonical atom"));
    }
    let fiber_cells = spec
        .blocks()
        .iter()
        .map(|m| Partition1D::uniform(*m).lengths().to_vec())
        .collect();
    CanonicalAtoms {
        spec: spec.clone(),
        eta,
        base_cells,
        fiber_cells,
        atoms,
    }
}

/// `(sum_k (sum_j |a(k,j)|^q)^(p/q))^(1/p)` for coefficients in flat order.
pub fn closed_form_norm(spec: &BKpqSpec, coeffs: &[f64]) -> Result<f64> {
    if coeffs.len() != spec.atom_count() {
        return Err(Error::DimensionMismatch(coeffs.len(), spec.atom_count()));
    }
    let (p, q) = (spec.params().p(), spec.params().q());
    let mut offset = 0;
    let mut total = 0.0;
    for m in spec.blocks() {
        let inner: f64 = coeffs[offset..offset + m].iter().map(|a| a.abs().powf(q)).sum();
        total += inner.powf(p / q);
        offset += m;
    }
    Ok(total.powf(1.0 / p))
}

/// Grid norm of `sum a(k,j) e(k,j)` next to the closed form.
pub fn grid_vs_closed_form(spec: &BKpqSpec, coeffs: &[f64]) -> Result<(f64, f64)> {
    let closed = closed_form_norm(spec, coeffs)?;
    let canon = canonical_representation(spec);
    let combo = StepFunction2D::linear_combination(coeffs, &canon.atoms);
    Ok((mixed_norm(&combo, spec.params()), closed))
}

/// Images of the atoms of a finite-dimensional lattice under a lattice embedding.
#[derive(Clone, Debug)]
pub struct Embedding {
    pub params: NormParams,
    pub images: Vec<StepFunction2D>,
}

impl Embedding {
    pub fn new(params: NormParams, images: Vec<StepFunction2D>) -> Self {
        Self { params, images }
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn sum(&self) -> StepFunction2D {
        StepFunction2D::sum(&self.images)
    }

    /// Positivity, pairwise disjointness and unit norms.
    pub fn validate(&self, tol: f64) -> Result<()> {
        for (i, f) in self.images.iter().enumerate() {
            if !f.is_nonnegative() || f.is_zero() {
                return Err(Error::Precondition(format!("image {i} is not positive")));
            }
            let n = mixed_norm(f, self.params);
            if (n - 1.0).abs() > tol {
                return Err(Error::Precondition(format!("image {i} has norm {n}")));
            }
            for (j, g) in self.images.iter().enumerate().skip(i + 1) {
                if !is_disjoint(f, g) {
                    return Err(Error::Precondition(format!("images {i} and {j} overlap")));
                }
            }
        }
        Ok(())
    }

    /// The value `v_j` each image takes on its support, when every image is
    /// constant on its support and `sum f_j / v_j = 1`.
    pub fn unit_weights(&self, tol: f64) -> Result<Vec<f64>> {
        let mut weights = Vec::with_capacity(self.images.len());
        for (i, f) in self.images.iter().enumerate() {
            let mut v: Option<f64> = None;
            for x in f.values().filter(|x| *x != 0.0) {
                match v {
                    None => v = Some(x),
                    Some(v0) if (x - v0).abs() <= tol * v0.abs() => {}
                    Some(v0) => {
                        return Err(Error::Precondition(format!(
                            "image {i} takes both {v0} and {x} on its support"
                        )))
                    }
                }
            }
            match v {
                Some(v) if v > 0.0 => weights.push(v),
                _ => return Err(Error::Precondition(format!("image {i} is not positive"))),
            }
        }
        let scaled: Vec<StepFunction2D> = self
            .images
            .iter()
            .zip(&weights)
            .map(|(f, v)| f.scale(1.0 / v))
            .collect();
        let dev = StepFunction2D::sum(&scaled).max_abs_diff(&StepFunction2D::unit());
        if dev > tol {
            return Err(Error::Precondition(format!(
                "images are not a weighted partition of unity (deviation {dev})"
            )));
        }
        Ok(weights)
    }
}

/// Outcome of [`verify_blpq_structure`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlpqReport {
    pub is_blpq: bool,
    /// Atom indices per recovered block.
    pub block_partition: Vec<Vec<usize>>,
    pub block_sizes: Vec<usize>,
    pub violations: Vec<String>,
}

/// Groups atoms by equal `N` profiles and checks base-disjointness across groups.
pub fn verify_blpq_structure(emb: &Embedding, tol: f64) -> BlpqReport {
    let params = emb.params;
    let n = emb.images.len();
    let mut violations = Vec::new();
    for i in 0..n {
        if emb.images[i].is_zero() {
            violations.push(format!("atom {i} is zero"));
        }
        for j in i + 1..n {
            if !is_disjoint(&emb.images[i], &emb.images[j]) {
                violations.push(format!("atoms {i} and {j} are not disjoint"));
            }
        }
    }
    let profiles: Vec<StepFunction1D> = emb.images.iter().map(|f| n_map(f, params)).collect();

    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        match groups
            .iter_mut()
            .find(|g| profiles[g[0]].max_abs_diff(&profiles[i]) <= tol)
        {
            Some(g) => g.push(i),
            None => groups.push(vec![i]),
        }
    }
    for a in 0..groups.len() {
        for b in a + 1..groups.len() {
            let (i, j) = (groups[a][0], groups[b][0]);
            let overlap = profiles[i]
                .zip_with(&profiles[j], f64::min)
                .values()
                .iter()
                .fold(0.0f64, |m, v| m.max(*v));
            if overlap > tol {
                violations.push(format!(
                    "atoms {i} and {j}: N profiles are neither equal nor base-disjoint"
                ));
            }
        }
    }

    let key = |g: &Vec<usize>| {
        let prof = &profiles[g[0]];
        let mut mass = 0.0;
        let mut first = f64::INFINITY;
        for (c, v) in prof.values().iter().enumerate() {
            if *v > tol {
                mass += prof.partition().lengths()[c];
                first = first.min(prof.partition().breaks()[c]);
            }
        }
        (g.len(), mass, first)
    };
    groups.sort_by(|a, b| {
        let (ka, kb) = (key(a), key(b));
        ka.0.cmp(&kb.0)
            .then(ka.1.total_cmp(&kb.1))
            .then(ka.2.total_cmp(&kb.2))
    });
    let block_sizes = groups.iter().map(Vec::len).collect();
    BlpqReport {
        is_blpq: violations.is_empty(),
        block_partition: groups,
        block_sizes,
        violations,
    }
}

/// Level-set decomposition returned by [`extract_blpq_atoms`].
#[derive(Clone, Debug)]
pub struct BlpqExtraction {
    pub spec: BKpqSpec,
    /// Distinct `N`-vectors `s^k`, one per block.
    pub levels: Vec<Vec<f64>>,
    /// `mu(S^k)`.
    pub level_masses: Vec<f64>,
    /// Normalized atoms `phi(k, j)` in flat block order.
    pub atoms: Vec<StepFunction2D>,
    /// `(k, image index)` of each atom.
    pub atom_labels: Vec<(usize, usize)>,
    /// `coeffs[k][i] = ||f_i 1_{S^k}||`, zero when image `i` vanishes on `S^k`.
    pub coeffs: Vec<Vec<f64>>,
}

impl BlpqExtraction {
    /// `f_i = sum_k coeffs[k][i] phi(k, i)`.
    pub fn reconstruct(&self, n_images: usize) -> Vec<StepFunction2D> {
        let mut out = vec![StepFunction2D::zero(); n_images];
        for (atom, (k, i)) in self.atoms.iter().zip(&self.atom_labels) {
            out[*i] = out[*i].add(&atom.scale(self.coeffs[*k][*i]));
        }
        out
    }

    pub fn embedding(&self) -> Embedding {
        Embedding::new(self.spec.params(), self.atoms.clone())
    }
}

/// Splits an embedding into level sets of its `N`-vector.
///
/// Requires every image to be constant on its support with the supports
/// covering the square (in particular `sum f_j = c 1` for disjoint images).
pub fn extract_blpq_atoms(emb: &Embedding, tau: f64) -> Result<BlpqExtraction> {
    let params = emb.params;
    emb.unit_weights(1e-9)?;
    let refined = refine_all(&emb.images);
    let base = refined[0].base().clone();
    let profiles: Vec<StepFunction1D> = refined.iter().map(|f| n_map(f, params)).collect();

    // level index per base cell
    let mut levels: Vec<Vec<f64>> = Vec::new();
    let mut cell_level = Vec::with_capacity(base.len());
    for c in 0..base.len() {
        let v: Vec<f64> = profiles.iter().map(|pr| pr.values()[c]).collect();
        let found = levels
            .iter()
            .position(|l| l.iter().zip(&v).all(|(a, b)| (a - b).abs() <= tau));
        match found {
            Some(k) => cell_level.push(k),
            None => {
                cell_level.push(levels.len());
                levels.push(v);
            }
        }
    }

    let mut masses = vec![0.0; levels.len()];
    let mut first = vec![f64::INFINITY; levels.len()];
    for (c, k) in cell_level.iter().enumerate() {
        masses[*k] += base.lengths()[c];
        first[*k] = first[*k].min(base.breaks()[c]);
    }
    let sizes: Vec<usize> = levels
        .iter()
        .map(|l| l.iter().filter(|v| **v > tau).count())
        .collect();
    let mut order: Vec<usize> = (0..levels.len()).filter(|k| sizes[*k] > 0).collect();
    order.sort_by(|a, b| {
        sizes[*a]
            .cmp(&sizes[*b])
            .then(first[*a].total_cmp(&first[*b]))
            .then_with(|| lex_cmp(&levels[*a], &levels[*b]))
    });

    let mut atoms = Vec::new();
    let mut atom_labels = Vec::new();
    let mut coeffs = Vec::new();
    for (k_new, k) in order.iter().enumerate() {
        let indicator = StepFunction1D::new(
            base.clone(),
            cell_level.iter().map(|l| if l == k { 1.0 } else { 0.0 }).collect(),
        )?;
        let mask = StepFunction2D::from_base(&indicator);
        let mut row = vec![0.0; refined.len()];
        for (i, f) in refined.iter().enumerate() {
            if levels[*k][i] <= tau {
                continue;
            }
            let piece = f.mul(&mask).normalized();
            let nrm = mixed_norm(&piece, params);
            row[i] = nrm;
            atoms.push(piece.scale(1.0 / nrm));
            atom_labels.push((k_new, i));
        }
        coeffs.push(row);
    }
    let spec = BKpqSpec::new(order.iter().map(|k| sizes[*k]).collect(), params)?;
    Ok(BlpqExtraction {
        spec,
        levels: order.iter().map(|k| levels[*k].clone()).collect(),
        level_masses: order.iter().map(|k| masses[*k]).collect(),
        atoms,
        atom_labels,
        coeffs,
    })
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = x.total_cmp(y);
        if o != std::cmp::Ordering::Equal {
            return o;
        }
    }
    a.len().cmp(&b.len())
}

/// Snaps the fiber-measure vector of every base cell to the dyadic lattice
/// `(1/M) Z^n` on the simplex, moving as little fiber support as possible.
///
/// `M` starts at the smallest power of two with `1/M <= eps / (2n)` and is
/// doubled until every image moves by less than `eps`.
pub fn quantize_to_kpq(emb: &Embedding, eps: f64) -> Result<Embedding> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::OutOfRange { name: "epsilon", value: eps });
    }
    let weights = emb.unit_weights(1e-9)?;
    let n = emb.images.len();
    let refined = refine_all(&emb.images);
    let mut m = (2.0 * n as f64 / eps).log2().ceil().max(0.0).exp2();
    loop {
        let images = quantize_at(&refined, &weights, m);
        let worst = images
            .iter()
            .zip(&emb.images)
            .map(|(a, b)| crate::stepfn::dist(a, b, emb.params))
            .fold(0.0f64, f64::max);
        if worst < eps || m >= 2f64.powi(40) {
            return Ok(Embedding::new(emb.params, images));
        }
        m *= 2.0;
    }
}

fn quantize_at(refined: &[StepFunction2D], weights: &[f64], m: f64) -> Vec<StepFunction2D> {
    let n = refined.len();
    let base = refined[0].base().clone();
    let mut fibers: Vec<Vec<StepFunction1D>> = vec![Vec::with_capacity(base.len()); n];
    for c in 0..base.len() {
        let fp = refined[0].fiber(c).partition();
        // owner of every fiber cell
        let owner: Vec<usize> = (0..fp.len())
            .map(|y| {
                (0..n)
                    .find(|i| refined[*i].fiber(c).values()[y] != 0.0)
                    .expect("supports cover the square")
            })
            .collect();
        let mut mass = vec![0.0; n];
        for (y, o) in owner.iter().enumerate() {
            mass[*o] += fp.lengths()[y];
        }
        let target = round_to_lattice(&mass, m);
        let mut segs: Vec<(f64, f64, usize)> = (0..fp.len())
            .map(|y| (fp.breaks()[y], fp.breaks()[y + 1], owner[y]))
            .collect();
        reshape(&mut segs, &mass, &target);
        for (i, out) in fibers.iter_mut().enumerate() {
            let mut b = CellBuilder::new();
            for (_, end, o) in &segs {
                b.push(*end, if *o == i { weights[i] } else { 0.0 });
            }
            let (br, vals) = b.finish();
            let f = StepFunction1D::from_breaks(br, vals).expect("reshaped fiber");
            out.push(f.normalized());
        }
    }
    fibers
        .into_iter()
        .map(|fib| StepFunction2D::new(base.clone(), fib).expect("quantized image").normalized())
        .collect()
}

/// Largest-remainder rounding of a probability vector to multiples of `1/m`.
fn round_to_lattice(mass: &[f64], m: f64) -> Vec<f64> {
    let total_units = m.round() as i64;
    let scaled: Vec<f64> = mass.iter().map(|x| x * m).collect();
    let mut units: Vec<i64> = scaled.iter().map(|x| x.floor() as i64).collect();
    let mut short = total_units - units.iter().sum::<i64>();
    let mut order: Vec<usize> = (0..mass.len()).collect();
    order.sort_by(|a, b| {
        let ra = scaled[*a] - scaled[*a].floor();
        let rb = scaled[*b] - scaled[*b].floor();
        rb.total_cmp(&ra).then(a.cmp(b))
    });
    let mut it = order.iter().cycle();
    while short > 0 {
        units[*it.next().unwrap()] += 1;
        short -= 1;
    }
    while short < 0 {
        let i = *it.next().unwrap();
        if units[i] > 0 {
            units[i] -= 1;
            short += 1;
        }
    }
    units.iter().map(|u| *u as f64 / m).collect()
}

/// Trims surplus owners from the left of their segments and hands the freed
/// pieces, in order, to owners that are short.
fn reshape(segs: &mut Vec<(f64, f64, usize)>, mass: &[f64], target: &[f64]) {
    let n = mass.len();
    let mut surplus: Vec<f64> = (0..n).map(|i| (mass[i] - target[i]).max(0.0)).collect();
    let mut deficit: Vec<f64> = (0..n).map(|i| (target[i] - mass[i]).max(0.0)).collect();
    if surplus.iter().all(|s| *s <= 0.0) {
        return;
    }
    // cut freed pieces out as separate segments marked with owner `n`
    let mut out: Vec<(f64, f64, usize)> = Vec::with_capacity(segs.len() + 2 * n);
    for (a, b, o) in segs.iter().copied() {
        let take = surplus[o].min(b - a);
        if take > 0.0 {
            surplus[o] -= take;
            out.push((a, a + take, n));
            if a + take < b {
                out.push((a + take, b, o));
            }
        } else {
            out.push((a, b, o));
        }
    }
    // hand freed segments to deficit owners in index order
    let mut recv = 0usize;
    let mut result = Vec::with_capacity(out.len() + n);
    for (a, b, o) in out {
        if o != n {
            result.push((a, b, o));
            continue;
        }
        let mut start = a;
        while start < b {
            while recv < n && deficit[recv] <= 0.0 {
                recv += 1;
            }
            if recv == n {
                // rounding leftovers go to the last receiver seen
                let last = result.last().map(|s: &(f64, f64, usize)| s.2).unwrap_or(0);
                result.push((start, b, last));
                break;
            }
            let take = deficit[recv].min(b - start);
            let end = if take >= b - start { b } else { start + take };
            result.push((start, end, recv));
            deficit[recv] -= end - start;
            start = end;
        }
    }
    *segs = result;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(blocks: &[usize], p: f64, q: f64) -> BKpqSpec {
        BKpqSpec::new(blocks.to_vec(), NormParams::new(p, q).unwrap()).unwrap()
    }

    #[test]
    fn canonical_one_two() {
        let c = canonical_representation(&spec(&[1, 2], 2.0, 1.0));
        assert!((c.eta - 5f64.sqrt()).abs() < 1e-15);
        assert!((c.base_cells[0] - 0.2).abs() < 1e-15);
        assert!((c.base_cells[1] - 0.8).abs() < 1e-15);
        assert_eq!(c.atom(1, 1).eval(0.5, 0.75), 5f64.sqrt());
        assert_eq!(c.atom(1, 1).eval(0.5, 0.25), 0.0);
        for a in &c.atoms {
            assert!((mixed_norm(a, c.spec.params()) - 1.0).abs() < 1e-12);
        }
        let n = n_map(c.atom(1, 0), c.spec.params());
        assert!((n.eval(0.5) - 5f64.sqrt() / 2.0).abs() < 1e-15);
        assert_eq!(n.eval(0.1), 0.0);
    }

    #[test]
    fn canonical_two_two() {
        let c = canonical_representation(&spec(&[2, 2], 4.0, 2.0));
        assert!((c.eta - 8f64.powf(0.25)).abs() < 1e-15);
        assert_eq!(c.base_cells, vec![0.5, 0.5]);
    }

    #[test]
    fn atoms_sum_to_eta() {
        let c = canonical_representation(&spec(&[3, 1, 2], 3.0, 2.0));
        let s = c.embedding().sum().normalized();
        assert_eq!(s, StepFunction2D::constant(c.eta));
    }

    #[test]
    fn closed_form_values() {
        let s = spec(&[1, 2], 2.0, 1.0);
        assert!((closed_form_norm(&s, &[1.0, 1.0, 1.0]).unwrap() - 5f64.sqrt()).abs() < 1e-15);
        assert_eq!(closed_form_norm(&s, &[0.0, 1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(closed_form_norm(&s, &[0.0; 3]).unwrap(), 0.0);
        assert!(closed_form_norm(&s, &[1.0]).is_err());
    }

    #[test]
    fn verify_recovers_blocks() {
        let c = canonical_representation(&spec(&[2, 1], 2.0, 1.0));
        let r = verify_blpq_structure(&c.embedding(), 1e-9);
        assert!(r.is_blpq, "{:?}", r.violations);
        assert_eq!(r.block_sizes, vec![1, 2]);
    }

    #[test]
    fn two_fiber_bands_form_one_block() {
        let params = NormParams::new(2.0, 1.0).unwrap();
        let a = StepFunction2D::rect((0.0, 1.0), (0.0, 0.5), 2.0).unwrap();
        let b = StepFunction2D::rect((0.0, 1.0), (0.5, 1.0), 2.0).unwrap();
        let r = verify_blpq_structure(&Embedding::new(params, vec![a, b]), 1e-9);
        assert!(r.is_blpq);
        assert_eq!(r.block_sizes, vec![2]);
    }

    #[test]
    fn extraction_of_unit_and_canonical() {
        let params = NormParams::new(2.0, 1.0).unwrap();
        let e = extract_blpq_atoms(&Embedding::new(params, vec![StepFunction2D::unit()]), LEVEL_TOL)
            .unwrap();
        assert_eq!(e.spec.blocks(), &[1]);
        assert_eq!(e.atoms[0].normalized(), StepFunction2D::unit());
        assert!((e.coeffs[0][0] - 1.0).abs() < 1e-15);

        let c = canonical_representation(&spec(&[1, 1], 2.0, 1.0));
        let x = extract_blpq_atoms(&c.embedding(), LEVEL_TOL).unwrap();
        assert_eq!(x.spec.blocks(), &[1, 1]);
        for (a, b) in x.atoms.iter().zip(&c.atoms) {
            assert!(a.max_abs_diff(b) < 1e-12);
        }
    }

    #[test]
    fn extraction_rejects_non_constant_sum() {
        let params = NormParams::new(2.0, 1.0).unwrap();
        let f = StepFunction2D::from_grid(&[0.0, 0.5, 1.0], &[0.0, 1.0], &[vec![1.0], vec![2.0]])
            .unwrap();
        assert!(extract_blpq_atoms(&Embedding::new(params, vec![f]), LEVEL_TOL).is_err());
    }

    #[test]
    fn lattice_rounding_sums_to_one() {
        let r = round_to_lattice(&[0.3, 0.3, 0.4], 8.0);
        assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(r.iter().zip([0.3, 0.3, 0.4]).all(|(a, b)| (a - b).abs() <= 0.125));
        assert_eq!(round_to_lattice(&[0.25, 0.75], 8.0), vec![0.25, 0.75]);
    }

    #[test]
    fn quantize_is_identity_on_dyadic_input() {
        let c = canonical_representation(&spec(&[1, 2], 2.0, 1.0));
        let emb = c.embedding();
        let qz = quantize_to_kpq(&emb, 0.5).unwrap();
        for (a, b) in qz.images.iter().zip(&emb.images) {
            assert!(a.max_abs_diff(b) < 1e-15);
        }
    }
}
