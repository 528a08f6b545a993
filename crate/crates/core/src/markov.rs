//! Density matrices, entropies and conditional-independence checks.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{QmnError, Result};
use crate::graphs::{all_shield_partitions, spanning_shield_partitions, Graph, Partition};
use crate::model::{ModelInstance, DEFAULT_DENSE_CAP};
use crate::par;
use crate::pauli::{Pauli, PauliSum, PauliTerm};
use crate::tensor::{eig, embed, partial_trace, ComplexMatrix, SiteSpace, C64};
use crate::SiteId;

/// Default absolute CMI tolerance.
pub const DEFAULT_CMI_TOL: f64 = 1e-8;
/// Eigenvalues in `[-CLIP, 0)` are treated as zero.
pub const NEGATIVE_CLIP: f64 = 1e-10;
/// Allowed deviation of a marginal's trace from one.
pub const TRACE_TOL: f64 = 1e-8;
/// Largest graph accepted by [`PartitionMode::All`].
pub const FULL_MODE_CAP: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub matrix: ComplexMatrix,
    pub space: SiteSpace,
}

impl DensityMatrix {
    /// Checks shape, Hermiticity and unit trace (within `1e-10`).
    pub fn new(matrix: ComplexMatrix, space: SiteSpace) -> Result<Self> {
        if !matrix.is_square() || matrix.rows() != space.total_dim() {
            return Err(QmnError::DimensionMismatch { expected: space.total_dim(), found: matrix.rows() });
        }
        if !matrix.is_hermitian(1e-10) {
            return Err(QmnError::NotHermitian { deviation: matrix.hermiticity_deviation() });
        }
        let tr = matrix.trace().re;
        if (tr - 1.0).abs() > 1e-10 {
            return Err(QmnError::TraceNotUnit(tr));
        }
        Ok(Self { matrix, space })
    }

    /// `|ψ⟩⟨ψ|` for a normalized vector.
    pub fn pure(psi: &[C64], space: SiteSpace) -> Result<Self> {
        let n = psi.len();
        let m = ComplexMatrix::from_fn(n, n, |i, j| psi[i] * psi[j].conj());
        Self::new(m, space)
    }

    pub fn maximally_mixed(space: SiteSpace) -> Self {
        let d = space.total_dim();
        Self { matrix: ComplexMatrix::identity(d).scale_real(1.0 / d as f64), space }
    }

    /// Reduced state on `sites` (ascending).
    pub fn marginal(&self, sites: &[SiteId]) -> Result<ComplexMatrix> {
        if sites.len() == self.space.len() {
            return Ok(self.matrix.clone());
        }
        Ok(partial_trace(&self.matrix, &self.space, sites)?.matrix)
    }

    pub fn entropy(&self) -> Result<f64> {
        entropy(&self.matrix)
    }

    /// Entropy of the marginal on `sites`; zero for the empty set.
    pub fn entropy_of(&self, sites: &[SiteId]) -> Result<f64> {
        if sites.is_empty() {
            return Ok(0.0);
        }
        entropy(&self.marginal(sites)?)
    }
}

/// `ρ = exp(β H) / Tr exp(β H)` with `H` the sum of the model terms.
pub fn gibbs(model: &ModelInstance) -> Result<DensityMatrix> {
    gibbs_capped(model, DEFAULT_DENSE_CAP)
}

pub fn gibbs_capped(model: &ModelInstance, cap: usize) -> Result<DensityMatrix> {
    let h = model.hamiltonian(cap)?.scale_real(model.beta);
    let e = eig::herm_eig(&h)?;
    let top = e.values.last().copied().unwrap_or(0.0);
    let z: f64 = e.values.iter().map(|&l| (l - top).exp()).sum();
    let rho = e.apply(|l| (l - top).exp() / z);
    Ok(DensityMatrix { matrix: rho, space: model.space.clone() })
}

/// Von Neumann entropy in nats.
pub fn entropy(rho: &ComplexMatrix) -> Result<f64> {
    let tr = rho.trace().re;
    if (tr - 1.0).abs() > TRACE_TOL {
        return Err(QmnError::TraceNotUnit(tr));
    }
    let vals = eig::eigvalsh(rho)?;
    let mut s = 0.0;
    for &l in &vals {
        if l < -NEGATIVE_CLIP {
            return Err(QmnError::NegativeEigenvalue(l));
        }
        if l > 0.0 {
            s -= l * l.ln();
        }
    }
    Ok(s.max(0.0))
}

fn sorted(set: impl IntoIterator<Item = SiteId>) -> Vec<SiteId> {
    let s: BTreeSet<SiteId> = set.into_iter().collect();
    s.into_iter().collect()
}

fn check_regions(a: &BTreeSet<SiteId>, b: &BTreeSet<SiteId>, c: &BTreeSet<SiteId>) -> Result<()> {
    if a.is_empty() || c.is_empty() {
        return Err(QmnError::InvalidPartition("A and C must be non-empty".into()));
    }
    if !a.is_disjoint(b) || !a.is_disjoint(c) || !b.is_disjoint(c) {
        return Err(QmnError::InvalidPartition("regions overlap".into()));
    }
    Ok(())
}

/// The four subsets whose entropies make up `I(A:C|B)`: AB, BC, ABC, B.
fn cmi_subsets(p: &Partition) -> [Vec<SiteId>; 4] {
    [
        sorted(p.a.iter().chain(&p.b).copied()),
        sorted(p.b.iter().chain(&p.c).copied()),
        sorted(p.union()),
        sorted(p.b.iter().copied()),
    ]
}

/// `I(A:C|B) = S(AB) + S(BC) − S(ABC) − S(B)`.
pub fn cmi(rho: &DensityMatrix, a: &[SiteId], b: &[SiteId], c: &[SiteId]) -> Result<f64> {
    let p = Partition::new(a.iter().copied(), b.iter().copied(), c.iter().copied());
    check_regions(&p.a, &p.b, &p.c)?;
    let [ab, bc, abc, bb] = cmi_subsets(&p);
    Ok(rho.entropy_of(&ab)? + rho.entropy_of(&bc)? - rho.entropy_of(&abc)? - rho.entropy_of(&bb)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_pass(pass: bool) -> Self {
        if pass {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn is_pass(self) -> bool {
        self == Verdict::Pass
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionRecord {
    #[serde(rename = "A")]
    pub a: Vec<SiteId>,
    #[serde(rename = "B")]
    pub b: Vec<SiteId>,
    #[serde(rename = "C")]
    pub c: Vec<SiteId>,
    pub cmi: f64,
    pub pass: bool,
}

impl PartitionRecord {
    pub fn partition(&self) -> Partition {
        Partition::new(self.a.iter().copied(), self.b.iter().copied(), self.c.iter().copied())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovReport {
    pub partitions: Vec<PartitionRecord>,
    pub max_cmi: f64,
    pub verdict: Verdict,
}

impl MarkovReport {
    fn build(records: Vec<(Partition, f64)>, tol: f64) -> Self {
        let partitions: Vec<PartitionRecord> = records
            .into_iter()
            .map(|(p, v)| PartitionRecord {
                a: p.a.into_iter().collect(),
                b: p.b.into_iter().collect(),
                c: p.c.into_iter().collect(),
                cmi: v,
                pass: v <= tol,
            })
            .collect();
        let max_cmi = partitions.iter().map(|r| r.cmi).fold(0.0f64, f64::max);
        let verdict = Verdict::from_pass(partitions.iter().all(|r| r.pass));
        Self { partitions, max_cmi, verdict }
    }

    /// Record with the largest CMI.
    pub fn worst(&self) -> Option<&PartitionRecord> {
        self.partitions.iter().max_by(|a, b| a.cmi.total_cmp(&b.cmi))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionMode {
    /// Spanning shielding partitions only.
    Spanning,
    /// Every shielding partition (graphs up to [`FULL_MODE_CAP`] vertices).
    All,
}

#[derive(Debug, Clone, Copy)]
pub struct MarkovOptions {
    pub tol: f64,
    pub mode: PartitionMode,
    /// Evaluate subset entropies in parallel (when the `parallel` feature is on).
    pub parallel: bool,
}

impl Default for MarkovOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_CMI_TOL, mode: PartitionMode::Spanning, parallel: true }
    }
}

/// CMI of each partition. Entropies are computed once per distinct subset.
pub fn cmi_batch(rho: &DensityMatrix, parts: &[Partition], parallel: bool) -> Result<Vec<f64>> {
    let mut subsets: BTreeSet<Vec<SiteId>> = BTreeSet::new();
    for p in parts {
        check_regions(&p.a, &p.b, &p.c)?;
        subsets.extend(cmi_subsets(p));
    }
    let subsets: Vec<Vec<SiteId>> = subsets.into_iter().collect();
    let values = par::map_collect(&subsets, parallel, |s| rho.entropy_of(s));
    let mut table = BTreeMap::new();
    for (s, v) in subsets.into_iter().zip(values) {
        table.insert(s, v?);
    }
    Ok(parts
        .iter()
        .map(|p| {
            let [ab, bc, abc, b] = cmi_subsets(p);
            table[&ab] + table[&bc] - table[&abc] - table[&b]
        })
        .collect())
}

/// Checks `I(A:C|B) ≤ tol` over the shielding partitions of `g`.
pub fn is_markov_network(rho: &DensityMatrix, g: &Graph, opts: &MarkovOptions) -> Result<MarkovReport> {
    if g.vertex_set() != rho.space.site_set() {
        return Err(QmnError::InvalidModel("graph vertices differ from the state's sites".into()));
    }
    let parts = match opts.mode {
        PartitionMode::Spanning => spanning_shield_partitions(g)?,
        PartitionMode::All => all_shield_partitions(g, FULL_MODE_CAP)?,
    };
    let values = cmi_batch(rho, &parts, opts.parallel)?;
    Ok(MarkovReport::build(parts.into_iter().zip(values).collect(), opts.tol))
}

/// Checks `I(x_1..x_{k−1} : x_{k+1}..x_N | x_k) ≤ tol` for every interior `k` of `ordering`.
pub fn is_markov_chain(rho: &DensityMatrix, ordering: &[SiteId], tol: f64) -> Result<MarkovReport> {
    let set: BTreeSet<SiteId> = ordering.iter().copied().collect();
    if set.len() != ordering.len() || set != rho.space.site_set() {
        return Err(QmnError::InvalidPartition("ordering must be a permutation of the sites".into()));
    }
    let parts: Vec<Partition> = (1..ordering.len().saturating_sub(1))
        .map(|k| Partition::new(ordering[..k].iter().copied(), [ordering[k]], ordering[k + 1..].iter().copied()))
        .collect();
    let values = cmi_batch(rho, &parts, true)?;
    Ok(MarkovReport::build(parts.into_iter().zip(values).collect(), tol))
}

/// Rank over GF(2) of Pauli words in symplectic form.
fn gf2_rank(words: &[&PauliTerm], qubits: &[SiteId]) -> usize {
    let n = qubits.len();
    let mut rows: Vec<Vec<bool>> = words
        .iter()
        .map(|t| {
            let mut v = vec![false; 2 * n];
            for &(s, p) in t.word() {
                let i = qubits.binary_search(&s).expect("qubit in list");
                v[i] = matches!(p, Pauli::X | Pauli::Y);
                v[n + i] = matches!(p, Pauli::Z | Pauli::Y);
            }
            v
        })
        .collect();
    let mut rank = 0;
    for col in 0..2 * n {
        let Some(pivot) = (rank..rows.len()).find(|&r| rows[r][col]) else { continue };
        rows.swap(rank, pivot);
        for r in 0..rows.len() {
            if r != rank && rows[r][col] {
                let src = rows[rank].clone();
                for (x, y) in rows[r].iter_mut().zip(src) {
                    *x ^= y;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Normalized projector onto the joint +1 eigenspace of commuting Pauli generators.
pub fn stabilizer_state(generators: &[PauliSum], space: &SiteSpace) -> Result<DensityMatrix> {
    let mut terms = Vec::with_capacity(generators.len());
    for (i, g) in generators.iter().enumerate() {
        let t: Vec<PauliTerm> = g.terms().collect();
        let ok = t.len() == 1 && t[0].coeff.im == 0.0 && t[0].coeff.re.abs() == 1.0 && !t[0].is_identity();
        if !ok {
            return Err(QmnError::InvalidGenerators(format!("generator {i} is not a ±1 Pauli word")));
        }
        terms.push(t.into_iter().next().expect("one term"));
    }
    for i in 0..terms.len() {
        for j in i + 1..terms.len() {
            if !terms[i].commutes(&terms[j]) {
                return Err(QmnError::InvalidGenerators(format!("generators {i} and {j} anticommute")));
            }
        }
    }
    let qubits = space.sites().to_vec();
    for t in &terms {
        for s in t.support() {
            if space.dim_of(s)? != 2 {
                return Err(QmnError::NonQubitSite(s));
            }
        }
    }
    let refs: Vec<&PauliTerm> = terms.iter().collect();
    if gf2_rank(&refs, &qubits) != terms.len() {
        return Err(QmnError::InvalidGenerators("generators are not independent".into()));
    }
    let half = C64::new(0.5, 0.0);
    let mut proj = PauliSum::from(PauliTerm::identity(C64::new(1.0, 0.0)));
    for t in &terms {
        let factor = PauliSum::from_terms([PauliTerm::identity(half), {
            let mut h = t.clone();
            h.coeff *= half;
            h
        }]);
        proj = proj.multiply(&factor);
    }
    let support = proj.support();
    let local = proj.to_dense_on(space, &support)?;
    let full = embed(&local, space)?;
    let rank = space.total_dim() >> terms.len();
    Ok(DensityMatrix { matrix: full.scale_real(1.0 / rank as f64), space: space.clone() })
}
