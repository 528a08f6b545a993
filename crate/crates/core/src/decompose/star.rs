use std::collections::BTreeSet;

use serde::Serialize;

use super::algebra::{commutant, generate_algebra, least_squares, schmidt_generators, OperatorSpan};
use super::{two_body_commutation, DEFAULT_TOL};
use crate::cumulants::{expand, SupportSelection};
use crate::error::{QmnError, Result};
use crate::graphs::{find_triangle, Graph};
use crate::markov::DensityMatrix;
use crate::model::{ModelInstance, ModelTerm};
use crate::par;
use crate::tensor::{embed, kron, logm_herm, ComplexMatrix, SiteSpace, SupportedOperator};
use crate::SiteId;

const MAX_SWEEPS: usize = 64;

/// `K_u = h_u + Σ_v G_u^v` on a single vertex.
#[derive(Debug, Clone)]
pub struct StarDecomposition {
    pub vertex: SiteId,
    pub h_u: ComplexMatrix,
    /// `(v, G_u^v)` in the order of the input edges.
    pub g: Vec<(SiteId, ComplexMatrix)>,
    /// Largest least-squares residual of the final sweep.
    pub residual: f64,
    pub sweeps: usize,
}

fn other_site(k_uv: &SupportedOperator, u: SiteId) -> Result<SiteId> {
    match k_uv.support.as_slice() {
        [a, b] if *a == u => Ok(*b),
        [a, b] if *b == u => Ok(*a),
        _ => Err(QmnError::InvalidModel(format!("edge cumulant on {:?} is not an edge at {u}", k_uv.support))),
    }
}

/// Splits the one-body cumulant `K_u` over the star of `u`.
///
/// Each neighbor `v` owns an algebra `B_v`, seeded with the interaction algebra of `K_uv`.
/// A sweep solves `K_u ≈ x + y` with `x` in the commutant of the other algebras and `y`
/// in `B_v′`, strips from `x` its part in the joint commutant (that part stays in `h_u`)
/// and adds the remainder to `B_v`. Sweeps stop once no algebra grows; then `G_u^v = x_v`.
pub fn star_decompose(k_u: &SupportedOperator, edges: &[SupportedOperator], tol: f64) -> Result<StarDecomposition> {
    let u = match k_u.support.as_slice() {
        [u] => *u,
        _ => return Err(QmnError::InvalidModel("K_u must live on a single site".into())),
    };
    let d = k_u.dims[0];
    let target = k_u.matrix.hermitian_part();
    let neighbors: Vec<SiteId> = edges.iter().map(|k| other_site(k, u)).collect::<Result<_>>()?;
    let gens: Vec<Vec<ComplexMatrix>> = edges.iter().map(|k| schmidt_generators(k, u)).collect::<Result<_>>()?;

    for i in 0..gens.len() {
        for j in i + 1..gens.len() {
            for f in &gens[i] {
                for h in &gens[j] {
                    let c = f.commutator(h).frobenius_norm();
                    if c > tol * f.frobenius_norm() * h.frobenius_norm() {
                        return Err(QmnError::NotMarkov(format!(
                            "Schmidt operators of K_{u}{} and K_{u}{} do not commute on site {u} ({c:.3e})",
                            neighbors[i], neighbors[j]
                        )));
                    }
                }
            }
        }
    }

    let k = edges.len();
    let mut algs: Vec<OperatorSpan> = gens.iter().map(|g| generate_algebra(g, d)).collect();
    let mut xs = vec![ComplexMatrix::zeros(d, d); k];
    let abs_tol = tol * target.frobenius_norm().max(1.0);
    let mut residual = 0.0;
    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS {
        sweeps += 1;
        let mut grew = false;
        residual = 0.0f64;
        for v in 0..k {
            let others: Vec<ComplexMatrix> =
                algs.iter().enumerate().filter(|(w, _)| *w != v).flat_map(|(_, a)| a.basis.iter().cloned()).collect();
            let t_v = commutant(&others, d)?;
            let b_comm = commutant(&algs[v].basis, d)?;
            let cols: Vec<&ComplexMatrix> = t_v.basis.iter().chain(&b_comm.basis).collect();
            let (coef, r) = least_squares(&cols, &target);
            residual = residual.max(r);
            if r > abs_tol {
                return Err(QmnError::DecompositionResidual { norm: r });
            }
            let mut x = ComplexMatrix::zeros(d, d);
            for (b, c) in t_v.basis.iter().zip(&coef) {
                x += &b.scale(*c);
            }
            let x = x.hermitian_part();
            let all: Vec<ComplexMatrix> = others.iter().chain(&algs[v].basis).cloned().collect();
            let joint = commutant(&all, d)?;
            let mut xv = joint.residual(&x).hermitian_part();
            if xv.frobenius_norm() <= abs_tol {
                xv = ComplexMatrix::zeros(d, d);
            } else if !algs[v].contains(&xv) {
                let mut g = algs[v].basis.clone();
                g.push(xv.clone());
                algs[v] = generate_algebra(&g, d);
                grew = true;
            }
            xs[v] = xv;
        }
        if !grew {
            break;
        }
    }
    if sweeps == MAX_SWEEPS {
        return Err(QmnError::NoConvergence);
    }
    let mut h_u = target.clone();
    for x in &xs {
        h_u -= x;
    }
    Ok(StarDecomposition { vertex: u, h_u, g: neighbors.into_iter().zip(xs).collect(), residual, sweeps })
}

#[derive(Debug, Clone, Copy)]
pub struct DecomposeOptions {
    pub tol: f64,
    /// Run the per-vertex star decompositions in parallel.
    pub parallel: bool,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL, parallel: true }
    }
}

/// Mutually commuting vertex and edge terms summing to `log ρ`.
#[derive(Debug, Clone)]
pub struct CommutingDecomposition {
    pub space: SiteSpace,
    pub graph: Graph,
    pub vertex_terms: Vec<SupportedOperator>,
    pub edge_terms: Vec<SupportedOperator>,
    /// `‖Σ h − log ρ‖_F / ‖log ρ‖_F`.
    pub residual: f64,
    /// Largest full-space Frobenius norm of a pairwise commutator.
    pub max_commutator: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub residual: f64,
    pub max_commutator: f64,
    pub verdict: &'static str,
}

impl CommutingDecomposition {
    pub fn terms(&self) -> impl Iterator<Item = &SupportedOperator> {
        self.vertex_terms.iter().chain(&self.edge_terms)
    }

    /// Dense model at `β = 1` whose Gibbs state is the decomposed state.
    pub fn to_model(&self) -> Result<ModelInstance> {
        let terms = self
            .terms()
            .map(|t| {
                let label = t.support.iter().map(|s| s.to_string()).collect::<Vec<_>>().join("_");
                ModelTerm::dense(t).with_label(format!("h_{label}"))
            })
            .collect();
        ModelInstance::new(self.space.clone(), self.graph.clone(), terms, 1.0)
    }

    pub fn certificate(&self, tol: f64) -> Certificate {
        let pass = self.residual <= tol && self.max_commutator <= tol;
        Certificate { residual: self.residual, max_commutator: self.max_commutator, verdict: if pass { "pass" } else { "fail" } }
    }
}

/// Largest full-space commutator norm over all term pairs with overlapping supports.
pub fn max_pairwise_commutator(terms: &[&SupportedOperator], space: &SiteSpace) -> Result<f64> {
    let total = space.total_dim() as f64;
    let mut worst = 0.0f64;
    for i in 0..terms.len() {
        for j in i + 1..terms.len() {
            let (a, b) = (terms[i], terms[j]);
            if !a.support.iter().any(|s| b.support.contains(s)) {
                continue;
            }
            let union: Vec<SiteId> = a.support.iter().chain(&b.support).copied().collect::<BTreeSet<_>>().into_iter().collect();
            let sub = space.subspace(&union)?;
            let c = embed(a, &sub)?.commutator(&embed(b, &sub)?);
            worst = worst.max(c.frobenius_norm() * (total / sub.total_dim() as f64).sqrt());
        }
    }
    Ok(worst)
}

/// Commuting two-body decomposition of `log ρ` for a positive Markov network on a
/// triangle-free graph.
pub fn theorem4_decompose(rho: &DensityMatrix, g: &Graph, opts: &DecomposeOptions) -> Result<CommutingDecomposition> {
    if let Some(t) = find_triangle(g) {
        return Err(QmnError::NotTriangleFree(t));
    }
    let space = &rho.space;
    if g.vertex_set() != space.site_set() {
        return Err(QmnError::InvalidModel("graph vertices differ from the state's sites".into()));
    }
    let h = logm_herm(&rho.matrix)?;
    let e = expand(&h, space, SupportSelection::None)?;
    let norm = e.source_norm_sqr.sqrt();
    let tol = opts.tol;

    // summed directly: the Parseval difference is limited by roundoff in ‖H‖²
    let off: Vec<(Vec<SiteId>, f64)> = e.masses().into_iter().filter(|(s, _)| s.len() >= 2 && !g.is_clique(s)).collect();
    let off_mass: f64 = off.iter().map(|(_, m)| m).sum();
    if off_mass.sqrt() > tol * norm {
        let (s, m) = off.iter().max_by(|a, b| a.1.total_cmp(&b.1)).cloned().unwrap_or_default();
        return Err(QmnError::NotMarkov(format!("off-clique cumulant on {s:?} with norm {:.3e}", m.sqrt())));
    }
    let tb = two_body_commutation(&e, g, tol)?;
    if !tb.pass {
        let (a, b) = tb.worst.expect("failing report has a witness");
        return Err(QmnError::NotMarkov(format!(
            "edge cumulants {a:?} and {b:?} do not commute ({:.3e})",
            tb.max_commutator
        )));
    }

    let vertices: Vec<SiteId> = g.vertices().collect();
    let stars = par::map_collect(&vertices, opts.parallel, |&u| -> Result<StarDecomposition> {
        let k_u = e.cumulant(&[u])?;
        let edges = g.neighbors(u)?.iter().map(|&v| e.cumulant(&[u, v])).collect::<Result<Vec<_>>>()?;
        star_decompose(&k_u, &edges, tol)
    });
    let stars: Vec<StarDecomposition> = stars.into_iter().collect::<Result<_>>()?;

    let k_empty = e.cumulant(&[])?.matrix[(0, 0)];
    let mut vertex_terms = Vec::with_capacity(stars.len());
    for (i, s) in stars.iter().enumerate() {
        let d = space.dim_of(s.vertex)?;
        let mut m = s.h_u.clone();
        if i == 0 {
            m += &ComplexMatrix::identity(d).scale(k_empty);
        }
        vertex_terms.push(SupportedOperator::new(vec![s.vertex], vec![d], m)?);
    }
    let g_of = |u: SiteId, v: SiteId| -> &ComplexMatrix {
        let s = &stars[vertices.iter().position(|&x| x == u).expect("vertex")];
        &s.g.iter().find(|(w, _)| *w == v).expect("neighbor").1
    };
    let mut edge_terms = Vec::with_capacity(g.edge_count());
    for (u, v) in g.edges() {
        let k_uv = e.cumulant(&[u, v])?;
        let (du, dv) = (space.dim_of(u)?, space.dim_of(v)?);
        let mut m = k_uv.matrix.clone();
        m += &kron(g_of(u, v), &ComplexMatrix::identity(dv));
        m += &kron(&ComplexMatrix::identity(du), g_of(v, u));
        edge_terms.push(SupportedOperator::new(vec![u, v], vec![du, dv], m)?);
    }

    let mut sum = ComplexMatrix::zeros(space.total_dim(), space.total_dim());
    for t in vertex_terms.iter().chain(&edge_terms) {
        sum += &embed(t, space)?;
    }
    let residual = sum.distance(&h) / norm.max(f64::MIN_POSITIVE);
    let all: Vec<&SupportedOperator> = vertex_terms.iter().chain(&edge_terms).collect();
    let max_commutator = max_pairwise_commutator(&all, space)?;
    if residual > tol {
        return Err(QmnError::DecompositionResidual { norm: residual });
    }
    if max_commutator > tol {
        return Err(QmnError::DecompositionResidual { norm: max_commutator });
    }
    Ok(CommutingDecomposition { space: space.clone(), graph: g.clone(), vertex_terms, edge_terms, residual, max_commutator })
}
