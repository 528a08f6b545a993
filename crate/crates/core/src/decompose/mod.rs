//! Shield splitting, Hamiltonian classification, the triangle-free commuting
//! decomposition and model coarse-graining.

pub mod algebra;
mod coarse;
mod star;

use std::collections::BTreeSet;

use serde::Serialize;

use crate::cumulants::CumulantExpansion;
use crate::error::{QmnError, Result};
use crate::graphs::{shields, Graph, Partition};
use crate::markov::{gibbs_capped, is_markov_network, MarkovOptions, MarkovReport, PartitionRecord};
use crate::model::ModelInstance;
use crate::tensor::{embed, ComplexMatrix, SiteSpace, SupportedOperator};
use crate::SiteId;

pub use algebra::{interaction_algebra, AlgebraBlock, InteractionAlgebra, OperatorSpan};
pub use coarse::coarse_grain_model;
pub use star::{star_decompose, theorem4_decompose, CommutingDecomposition, DecomposeOptions, StarDecomposition};

/// Default tolerance of the decomposition pipeline.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Largest number of B-internal cumulants searched exhaustively by [`split_shield`].
pub const SPLIT_SEARCH_BITS: usize = 12;

/// `H = H_AB + H_BC` across a shielding partition.
#[derive(Debug, Clone)]
pub struct ShieldSplit {
    pub partition: Partition,
    pub h_ab: SupportedOperator,
    pub h_bc: SupportedOperator,
    /// `‖[H_AB, H_BC]‖_F` on the full space.
    pub commutator_norm: f64,
    /// B-internal supports sent to `H_BC` (all others went to `H_AB`).
    pub b_internal_to_bc: Vec<Vec<SiteId>>,
}

fn sum_on(space: &SiteSpace, region: &BTreeSet<SiteId>, ops: &[&SupportedOperator]) -> Result<SupportedOperator> {
    let sites: Vec<SiteId> = region.iter().copied().collect();
    let sub = space.subspace(&sites)?;
    let n = sub.total_dim();
    let mut m = ComplexMatrix::zeros(n, n);
    for op in ops {
        m += &embed(op, &sub)?;
    }
    SupportedOperator::on(space, sites, m)
}

/// Splits an expansion across `p`. Supports meeting `A` go to `H_AB`, supports meeting
/// `C` to `H_BC`; supports inside `B` go to `H_AB` unless a search over their assignment
/// is needed to make the two halves commute.
pub fn split_shield(e: &CumulantExpansion, g: &Graph, p: &Partition, tol: f64) -> Result<ShieldSplit> {
    p.validate(g)?;
    if !p.is_spanning(g) {
        return Err(QmnError::InvalidPartition("split_shield needs a spanning partition".into()));
    }
    if !shields(g, p)? {
        return Err(QmnError::NotShielding);
    }
    let norm = e.source_norm_sqr.sqrt();
    let cut = tol * norm;
    let mut ab = Vec::new();
    let mut bc = Vec::new();
    let mut internal = Vec::new();
    for (s, mass) in e.masses() {
        let meets_a = s.iter().any(|x| p.a.contains(x));
        let meets_c = s.iter().any(|x| p.c.contains(x));
        match (meets_a, meets_c) {
            (true, true) => {
                if mass.sqrt() > cut {
                    return Err(QmnError::CrossCumulant { support: s, norm: mass.sqrt() });
                }
            }
            (true, false) => ab.push(e.cumulant(&s)?),
            (false, true) => bc.push(e.cumulant(&s)?),
            (false, false) if s.is_empty() => ab.push(e.cumulant(&s)?),
            (false, false) => internal.push((s.clone(), e.cumulant(&s)?)),
        }
    }
    let ab_region: BTreeSet<SiteId> = p.a.union(&p.b).copied().collect();
    let bc_region: BTreeSet<SiteId> = p.b.union(&p.c).copied().collect();
    let full_scale = (e.space.total_dim() as f64).sqrt();
    let attempt = |mask: u64| -> Result<ShieldSplit> {
        let mut l: Vec<&SupportedOperator> = ab.iter().collect();
        let mut r: Vec<&SupportedOperator> = bc.iter().collect();
        let mut moved = Vec::new();
        for (i, (s, op)) in internal.iter().enumerate() {
            if mask >> i & 1 == 1 {
                r.push(op);
                moved.push(s.clone());
            } else {
                l.push(op);
            }
        }
        let h_ab = sum_on(&e.space, &ab_region, &l)?;
        let h_bc = sum_on(&e.space, &bc_region, &r)?;
        let union: Vec<SiteId> = ab_region.union(&bc_region).copied().collect();
        let sub = e.space.subspace(&union)?;
        let c = embed(&h_ab, &sub)?.commutator(&embed(&h_bc, &sub)?);
        let commutator_norm = c.frobenius_norm() * full_scale / (sub.total_dim() as f64).sqrt();
        Ok(ShieldSplit { partition: p.clone(), h_ab, h_bc, commutator_norm, b_internal_to_bc: moved })
    };
    let ok = |s: &ShieldSplit| s.commutator_norm <= tol * norm.max(1.0) * norm.max(1.0);
    let first = attempt(0)?;
    if ok(&first) || internal.is_empty() {
        return Ok(first);
    }
    let k = internal.len().min(SPLIT_SEARCH_BITS);
    let mut best = first;
    for mask in 1..(1u64 << k) {
        let s = attempt(mask)?;
        if ok(&s) {
            return Ok(s);
        }
        if s.commutator_norm < best.commutator_norm {
            best = s;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ClassVerdict {
    LocalCommuting,
    ShieldCommutingOnly,
    NotShieldCommuting,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermPair {
    pub first: usize,
    pub second: usize,
    pub labels: [String; 2],
    /// Frobenius norm of the commutator on the union support.
    pub commutator_norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Classification {
    pub verdict: ClassVerdict,
    /// First non-commuting term pair, in term order.
    pub noncommuting_pair: Option<TermPair>,
    /// Worst shielding partition when the Markov check fails.
    pub failing_partition: Option<PartitionRecord>,
    pub markov: Option<MarkovReport>,
}

impl Classification {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("classification serializes")
    }
}

/// Commutator norm of terms `i` and `j`, symbolically when both are Pauli sums.
pub fn term_commutator_norm(model: &ModelInstance, i: usize, j: usize) -> Result<f64> {
    let (a, b) = (&model.terms[i], &model.terms[j]);
    if !a.support.iter().any(|s| b.support.contains(s)) {
        return Ok(0.0);
    }
    if let (Some(p), Some(q)) = (a.as_pauli(), b.as_pauli()) {
        let c = p.commutator(q);
        if c.is_zero() {
            return Ok(0.0);
        }
        let n = c.support().len() as i32;
        return Ok((c.coefficient_norm_sqr() * 2f64.powi(n)).sqrt());
    }
    let union: BTreeSet<SiteId> = a.support.iter().chain(&b.support).copied().collect();
    let union: Vec<SiteId> = union.into_iter().collect();
    let sub = model.space.subspace(&union)?;
    let x = embed(&model.term_operator(i)?, &sub)?;
    let y = embed(&model.term_operator(j)?, &sub)?;
    Ok(x.commutator(&y).frobenius_norm())
}

fn term_norm(model: &ModelInstance, i: usize) -> Result<f64> {
    match model.terms[i].as_pauli() {
        Some(p) => Ok((p.coefficient_norm_sqr() * 2f64.powi(p.support().len() as i32)).sqrt()),
        None => Ok(model.term_operator(i)?.frobenius_norm()),
    }
}

/// First pair of terms whose commutator exceeds `tol · M²`, `M` the largest term norm.
pub fn first_noncommuting_pair(model: &ModelInstance, tol: f64) -> Result<Option<TermPair>> {
    let mut scale = 0.0f64;
    for i in 0..model.terms.len() {
        scale = scale.max(term_norm(model, i)?);
    }
    for i in 0..model.terms.len() {
        for j in i + 1..model.terms.len() {
            let c = term_commutator_norm(model, i, j)?;
            if c > tol * scale * scale {
                return Ok(Some(TermPair { first: i, second: j, labels: [model.label(i), model.label(j)], commutator_norm: c }));
            }
        }
    }
    Ok(None)
}

/// LocalCommuting when all term pairs commute; otherwise the Gibbs state decides between
/// ShieldCommutingOnly (Markov) and NotShieldCommuting.
pub fn classify(model: &ModelInstance, tol: f64, cap: usize, markov: &MarkovOptions) -> Result<Classification> {
    if model.pauli_terms().is_none() {
        model.check_dense_cap(cap)?;
    }
    let Some(pair) = first_noncommuting_pair(model, tol)? else {
        return Ok(Classification {
            verdict: ClassVerdict::LocalCommuting,
            noncommuting_pair: None,
            failing_partition: None,
            markov: None,
        });
    };
    let rho = gibbs_capped(model, cap)?;
    let report = is_markov_network(&rho, &model.graph, markov)?;
    let (verdict, failing) = if report.verdict.is_pass() {
        (ClassVerdict::ShieldCommutingOnly, None)
    } else {
        (ClassVerdict::NotShieldCommuting, report.worst().cloned())
    };
    Ok(Classification { verdict, noncommuting_pair: Some(pair), failing_partition: failing, markov: Some(report) })
}

#[derive(Debug, Clone, Serialize)]
pub struct TwoBodyReport {
    pub pass: bool,
    pub pairs_checked: usize,
    /// Largest full-space commutator norm among edge-cumulant pairs.
    pub max_commutator: f64,
    pub worst: Option<([SiteId; 2], [SiteId; 2])>,
}

/// Checks that the edge cumulants of `e` commute pairwise. Only pairs sharing a vertex
/// can fail; the norm is measured on the full space.
pub fn two_body_commutation(e: &CumulantExpansion, g: &Graph, tol: f64) -> Result<TwoBodyReport> {
    let edges = g.edges();
    let ops: Vec<SupportedOperator> = edges.iter().map(|&(a, b)| e.cumulant(&[a, b])).collect::<Result<_>>()?;
    let total = e.space.total_dim() as f64;
    let mut report = TwoBodyReport { pass: true, pairs_checked: 0, max_commutator: 0.0, worst: None };
    for i in 0..edges.len() {
        for j in i + 1..edges.len() {
            let (a, b) = (edges[i], edges[j]);
            let shared = [a.0, a.1].iter().any(|v| *v == b.0 || *v == b.1);
            report.pairs_checked += 1;
            if !shared {
                continue;
            }
            let union: BTreeSet<SiteId> = [a.0, a.1, b.0, b.1].into_iter().collect();
            let union: Vec<SiteId> = union.into_iter().collect();
            let sub = e.space.subspace(&union)?;
            let c = embed(&ops[i], &sub)?.commutator(&embed(&ops[j], &sub)?);
            let n = c.frobenius_norm() * (total / sub.total_dim() as f64).sqrt();
            if n > report.max_commutator {
                report.max_commutator = n;
                report.worst = Some(([a.0, a.1], [b.0, b.1]));
            }
        }
    }
    report.pass = report.max_commutator <= tol * e.source_norm_sqr.sqrt().max(1.0);
    if report.pass {
        report.worst = None;
    }
    Ok(report)
}
