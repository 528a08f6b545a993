//! Local Hamiltonian models on an interaction graph.

use std::collections::BTreeMap;

use crate::error::{QmnError, Result};
use crate::graphs::Graph;
use crate::pauli::PauliSum;
use crate::tensor::{embed, ComplexMatrix, SiteSpace, SupportedOperator};
use crate::SiteId;

/// Default bound on the total Hilbert-space dimension for dense pipelines.
pub const DEFAULT_DENSE_CAP: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub enum TermBody {
    /// Pauli sum over qubit labels (see [`ModelInstance::qubit_layout`]).
    Pauli(PauliSum),
    /// Dense matrix in the ascending order of the term support.
    Dense(ComplexMatrix),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelTerm {
    pub label: Option<String>,
    /// Ascending site ids; must form a clique.
    pub support: Vec<SiteId>,
    pub body: TermBody,
}

impl ModelTerm {
    /// Pauli term whose support is the union support of `sum`.
    pub fn pauli(sum: PauliSum) -> Self {
        Self { label: None, support: sum.support(), body: TermBody::Pauli(sum) }
    }

    /// Pauli term declared on an explicit site support.
    pub fn pauli_on(support: impl IntoIterator<Item = SiteId>, sum: PauliSum) -> Self {
        let mut support: Vec<SiteId> = support.into_iter().collect();
        support.sort_unstable();
        support.dedup();
        Self { label: None, support, body: TermBody::Pauli(sum) }
    }

    /// Dense term; the support may be in any order and is canonicalized.
    pub fn dense(op: &SupportedOperator) -> Self {
        let c = op.canonical();
        Self { label: None, support: c.support, body: TermBody::Dense(c.matrix) }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn as_pauli(&self) -> Option<&PauliSum> {
        match &self.body {
            TermBody::Pauli(p) => Some(p),
            TermBody::Dense(_) => None,
        }
    }
}

/// Sites, graph, clique terms and inverse temperature. `ρ ∝ exp(β Σ terms)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelInstance {
    pub space: SiteSpace,
    pub graph: Graph,
    pub terms: Vec<ModelTerm>,
    pub beta: f64,
    qubits: BTreeMap<SiteId, Vec<SiteId>>,
}

impl ModelInstance {
    /// Qubit sites carry a Pauli layout with the single label equal to their id.
    pub fn new(space: SiteSpace, graph: Graph, terms: Vec<ModelTerm>, beta: f64) -> Result<Self> {
        let qubits = space.sites().iter().zip(space.dims()).filter(|(_, &d)| d == 2).map(|(&s, _)| (s, vec![s])).collect();
        Self::with_layout(space, graph, terms, beta, qubits)
    }

    /// Model with an explicit qubit layout: site → qubit labels, most significant first.
    pub fn with_layout(
        space: SiteSpace,
        graph: Graph,
        terms: Vec<ModelTerm>,
        beta: f64,
        qubits: BTreeMap<SiteId, Vec<SiteId>>,
    ) -> Result<Self> {
        if graph.vertex_set() != space.site_set() {
            return Err(QmnError::InvalidModel("graph vertices differ from the declared sites".into()));
        }
        if !beta.is_finite() {
            return Err(QmnError::InvalidModel("beta must be finite".into()));
        }
        for (&s, labels) in &qubits {
            let d = space.dim_of(s)?;
            if labels.is_empty() || 1usize.checked_shl(labels.len() as u32) != Some(d) {
                return Err(QmnError::InvalidModel(format!("site {s} of dim {d} cannot hold qubits {labels:?}")));
            }
        }
        let m = Self { space, graph, terms, beta, qubits };
        for (i, t) in m.terms.iter().enumerate() {
            m.check_term(i, t)?;
        }
        Ok(m)
    }

    fn check_term(&self, i: usize, t: &ModelTerm) -> Result<()> {
        if t.support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(QmnError::InvalidModel(format!("term {i}: support must be strictly ascending")));
        }
        for &s in &t.support {
            self.space.position(s)?;
        }
        if !self.graph.is_clique(&t.support) {
            return Err(QmnError::InvalidModel(format!("term {i}: support {:?} is not a clique", t.support)));
        }
        match &t.body {
            TermBody::Dense(m) => {
                let d = self.space.dim_of_set(&t.support)?;
                if !m.is_square() || m.rows() != d {
                    return Err(QmnError::DimensionMismatch { expected: d, found: m.rows() });
                }
            }
            TermBody::Pauli(p) => {
                let q = self.qubits_of(&t.support)?;
                if let Some(s) = p.support().into_iter().find(|s| !q.contains(s)) {
                    return Err(QmnError::InvalidModel(format!("term {i}: Pauli letter on qubit {s} outside the support")));
                }
            }
        }
        Ok(())
    }

    pub fn qubit_layout(&self) -> &BTreeMap<SiteId, Vec<SiteId>> {
        &self.qubits
    }

    /// Qubit labels of a site list, concatenated in the given order.
    pub fn qubits_of(&self, sites: &[SiteId]) -> Result<Vec<SiteId>> {
        let mut out = Vec::new();
        for &s in sites {
            out.extend(self.qubits.get(&s).ok_or(QmnError::NonQubitSite(s))?);
        }
        Ok(out)
    }

    pub fn label(&self, i: usize) -> String {
        self.terms[i].label.clone().unwrap_or_else(|| format!("t{i}"))
    }

    /// All term bodies as Pauli sums, if every term is symbolic.
    pub fn pauli_terms(&self) -> Option<Vec<&PauliSum>> {
        self.terms.iter().map(ModelTerm::as_pauli).collect()
    }

    /// Dense operator of term `i` on its ascending support.
    pub fn term_operator(&self, i: usize) -> Result<SupportedOperator> {
        let t = &self.terms[i];
        let dims = t.support.iter().map(|&s| self.space.dim_of(s)).collect::<Result<Vec<_>>>()?;
        match &t.body {
            TermBody::Dense(m) => SupportedOperator::new(t.support.clone(), dims, m.clone()),
            TermBody::Pauli(p) => {
                let q = self.qubits_of(&t.support)?;
                let qspace = SiteSpace::qubits(q.iter().copied())?;
                let op = p.to_dense_on(&qspace, &q)?.permuted(&q)?;
                SupportedOperator::new(t.support.clone(), dims, op.matrix)
            }
        }
    }

    pub fn check_dense_cap(&self, cap: usize) -> Result<()> {
        let d = self.space.total_dim();
        if d > cap {
            return Err(QmnError::CapExceeded { what: "total dimension", value: d, cap });
        }
        Ok(())
    }

    /// `Σ terms` on the full space (without `β`).
    pub fn hamiltonian(&self, cap: usize) -> Result<ComplexMatrix> {
        self.check_dense_cap(cap)?;
        let n = self.space.total_dim();
        let mut h = ComplexMatrix::zeros(n, n);
        for i in 0..self.terms.len() {
            h += &embed(&self.term_operator(i)?, &self.space)?;
        }
        Ok(h)
    }
}
