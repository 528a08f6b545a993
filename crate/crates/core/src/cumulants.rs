//! Partial-traceless cumulant expansion `H = Σ_X K_X`.
//!
//! Every site gets an orthonormal Hermitian operator basis whose first element is
//! `I/√d` (generalized Gell-Mann; Pauli/√2 for qubits). Expanding `H` in the product
//! basis, `K_X` collects exactly the coefficients whose non-identity factors sit on `X`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{QmnError, Result};
use crate::graphs::{cliques, Graph};
use crate::par;
use crate::tensor::matrix::{ComplexMatrix, C64, ZERO};
use crate::tensor::{embed, partial_trace, trace_out, SiteSpace, SupportedOperator};
use crate::SiteId;

/// Relative tolerance used by [`is_genuine`] by default.
pub const GENUINE_TOL: f64 = 1e-10;

/// Orthonormal Hermitian basis of `d×d` matrices, identity first.
pub fn site_basis(d: usize) -> Vec<ComplexMatrix> {
    let mut out = vec![ComplexMatrix::identity(d).scale_real(1.0 / (d as f64).sqrt())];
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for j in 0..d {
        for k in j + 1..d {
            let mut sym = ComplexMatrix::zeros(d, d);
            sym[(j, k)] = C64::new(s, 0.0);
            sym[(k, j)] = C64::new(s, 0.0);
            let mut asym = ComplexMatrix::zeros(d, d);
            asym[(j, k)] = C64::new(0.0, -s);
            asym[(k, j)] = C64::new(0.0, s);
            out.push(sym);
            out.push(asym);
        }
    }
    for l in 1..d {
        let norm = ((l * (l + 1)) as f64).sqrt();
        let mut diag = vec![0.0; d];
        for x in diag.iter_mut().take(l) {
            *x = 1.0 / norm;
        }
        diag[l] = -(l as f64) / norm;
        out.push(ComplexMatrix::from_real_diagonal(&diag));
    }
    out
}

/// Nonzero entries `(μ, p, e_μ[p])` of a site basis, with `p = i·d + j`.
struct SiteTransform {
    d2: usize,
    entries: Vec<(usize, usize, C64)>,
}

impl SiteTransform {
    fn new(d: usize) -> Self {
        let mut entries = Vec::new();
        for (mu, e) in site_basis(d).iter().enumerate() {
            for (p, &v) in e.as_slice().iter().enumerate() {
                if v != ZERO {
                    entries.push((mu, p, v));
                }
            }
        }
        Self { d2: d * d, entries }
    }
}

/// Reorders a matrix on `dims` into the pair tensor with axis index `p_a = i_a·d_a + j_a`.
fn to_pair_tensor(m: &ComplexMatrix, dims: &[usize]) -> Vec<C64> {
    let n = m.rows();
    let (row_off, col_off) = pair_offsets(dims);
    let mut t = vec![ZERO; n * n];
    for (r, &base) in row_off.iter().enumerate().take(n) {
        for (c, &v) in m.row(r).iter().enumerate() {
            t[base + col_off[c]] = v;
        }
    }
    t
}

fn from_pair_tensor(t: &[C64], dims: &[usize]) -> ComplexMatrix {
    let n: usize = dims.iter().product();
    let (row_off, col_off) = pair_offsets(dims);
    ComplexMatrix::from_fn(n, n, |r, c| t[row_off[r] + col_off[c]])
}

fn pair_offsets(dims: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let n: usize = dims.iter().product();
    let k = dims.len();
    let mut stride = vec![1usize; k];
    for a in (0..k.saturating_sub(1)).rev() {
        stride[a] = stride[a + 1] * dims[a + 1] * dims[a + 1];
    }
    let mut row_off = vec![0usize; n];
    let mut col_off = vec![0usize; n];
    let mut div = n;
    for a in 0..k {
        div /= dims[a];
        for x in 0..n {
            let digit = x / div % dims[a];
            row_off[x] += digit * dims[a] * stride[a];
            col_off[x] += digit * stride[a];
        }
    }
    (row_off, col_off)
}

/// Applies the site basis change along every axis. `forward` maps matrix entries to
/// coefficients (`c_μ = Σ_p conj(e_μ[p]) x_p`); the inverse maps coefficients back.
fn mode_products(t: &mut [C64], dims: &[usize], forward: bool) {
    let k = dims.len();
    let sizes: Vec<usize> = dims.iter().map(|d| d * d).collect();
    for a in 0..k {
        let tr = SiteTransform::new(dims[a]);
        let inner: usize = sizes[a + 1..].iter().product();
        let block = tr.d2 * inner;
        par::for_each_row(t, block, |_, chunk| {
            let mut fiber = vec![ZERO; tr.d2];
            for off in 0..inner {
                for (q, f) in fiber.iter_mut().enumerate() {
                    *f = chunk[q * inner + off];
                }
                for q in 0..tr.d2 {
                    chunk[q * inner + off] = ZERO;
                }
                for &(mu, p, e) in &tr.entries {
                    if forward {
                        chunk[mu * inner + off] += e.conj() * fiber[p];
                    } else {
                        chunk[p * inner + off] += e * fiber[mu];
                    }
                }
            }
        });
    }
}

/// Mask (by site position) of the non-identity axes of every coefficient index.
fn support_masks(dims: &[usize]) -> impl Fn(usize) -> u64 {
    let k = dims.len();
    let half = k / 2;
    let build = |axes: std::ops::Range<usize>| -> Vec<u64> {
        let mut masks = vec![0u64];
        for a in axes {
            let d2 = dims[a] * dims[a];
            masks = masks.iter().flat_map(|&m| (0..d2).map(move |mu| if mu == 0 { m } else { m | 1 << a })).collect();
        }
        masks
    };
    let hi = build(0..half);
    let lo = build(half..k);
    let lo_len = lo.len();
    move |idx| hi[idx / lo_len] | lo[idx % lo_len]
}

/// Which supports to materialize as operators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SupportSelection {
    All,
    UpTo(usize),
    List(Vec<Vec<SiteId>>),
    None,
}

/// Coefficients of `H` in the product basis plus the cumulants requested.
#[derive(Debug, Clone)]
pub struct CumulantExpansion {
    pub space: SiteSpace,
    /// `‖H‖_F²` computed directly from the matrix.
    pub source_norm_sqr: f64,
    /// `‖K_X ⊗ I‖_F²` for every support with a nonzero coefficient, keyed by position mask.
    masses: BTreeMap<u64, f64>,
    coeffs: Vec<C64>,
    pub entries: BTreeMap<Vec<SiteId>, SupportedOperator>,
}

impl CumulantExpansion {
    /// Squared full-space norm `‖K_X ⊗ I‖_F²` of the cumulant on `support`.
    pub fn mass(&self, support: &[SiteId]) -> Result<f64> {
        let m = self.space.mask_of(support)?;
        Ok(self.masses.get(&m).copied().unwrap_or(0.0))
    }

    /// Full-space Frobenius norm of `K_X`.
    pub fn hs_norm(&self, support: &[SiteId]) -> Result<f64> {
        Ok(self.mass(support)?.sqrt())
    }

    /// Every support carrying nonzero mass, with its mass, in (size, lexicographic) order.
    pub fn masses(&self) -> Vec<(Vec<SiteId>, f64)> {
        let mut v: Vec<(Vec<SiteId>, f64)> = self.masses.iter().map(|(&m, &x)| (self.space.sites_of_mask(m), x)).collect();
        v.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(&b.0)));
        v
    }

    /// Supports whose full-space norm exceeds `rel_tol · ‖H‖_F`.
    pub fn significant(&self, rel_tol: f64) -> Vec<Vec<SiteId>> {
        let cut = rel_tol * rel_tol * self.source_norm_sqr;
        self.masses().into_iter().filter(|(_, m)| *m > cut).map(|(s, _)| s).collect()
    }

    /// `‖H‖² − Σ_{X requested} ‖K_X‖²`.
    pub fn parseval_residual(&self) -> f64 {
        let kept: f64 = self.entries.keys().map(|s| self.mass(s).unwrap_or(0.0)).sum();
        self.source_norm_sqr - kept
    }

    /// `K_X` as an operator on `X` (ascending).
    pub fn cumulant(&self, support: &[SiteId]) -> Result<SupportedOperator> {
        let mut x: Vec<SiteId> = support.to_vec();
        x.sort_unstable();
        x.dedup();
        let pos: Vec<usize> = x.iter().map(|&s| self.space.position(s)).collect::<Result<_>>()?;
        let dims = self.space.dims();
        let k = dims.len();
        let mut stride = vec![1usize; k];
        for a in (0..k.saturating_sub(1)).rev() {
            stride[a] = stride[a + 1] * dims[a + 1] * dims[a + 1];
        }
        let xdims: Vec<usize> = pos.iter().map(|&a| dims[a]).collect();
        let sub_len: usize = xdims.iter().map(|d| d * d).product();
        let mut sub = vec![ZERO; sub_len];
        // walk the X-axes digits with all digits nonzero
        let mut digits = vec![1usize; pos.len()];
        if sub_len > 0 {
            'outer: loop {
                let mut global = 0;
                let mut local = 0;
                for (j, &a) in pos.iter().enumerate() {
                    global += digits[j] * stride[a];
                    local = local * xdims[j] * xdims[j] + digits[j];
                }
                sub[local] = self.coeffs[global];
                for j in (0..pos.len()).rev() {
                    digits[j] += 1;
                    if digits[j] < xdims[j] * xdims[j] {
                        continue 'outer;
                    }
                    digits[j] = 1;
                }
                break;
            }
        }
        mode_products(&mut sub, &xdims, false);
        let scale: f64 = (0..k).filter(|a| !pos.contains(a)).map(|a| 1.0 / (dims[a] as f64).sqrt()).product();
        let m = from_pair_tensor(&sub, &xdims).scale_real(scale);
        SupportedOperator::new(x, xdims, m)
    }

    pub fn report(&self) -> CumulantReport {
        let supports = self
            .masses()
            .into_iter()
            .map(|(s, m)| (support_key(&s), SupportNorm { hs_norm: m.sqrt() }))
            .collect();
        CumulantReport { source_norm: self.source_norm_sqr.sqrt(), parseval_gap: self.parseval_residual(), supports }
    }
}

/// `"[1,2]"`; `"[]"` for the identity component.
pub fn support_key(s: &[SiteId]) -> String {
    format!("[{}]", s.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","))
}

#[derive(Debug, Clone, Serialize)]
pub struct SupportNorm {
    pub hs_norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CumulantReport {
    pub source_norm: f64,
    pub parseval_gap: f64,
    pub supports: BTreeMap<String, SupportNorm>,
}

/// Expands a matrix on `space` into cumulants.
pub fn expand(h: &ComplexMatrix, space: &SiteSpace, selection: SupportSelection) -> Result<CumulantExpansion> {
    let d = space.total_dim();
    if !h.is_square() || h.rows() != d {
        return Err(QmnError::DimensionMismatch { expected: d, found: h.rows() });
    }
    if space.len() > 63 {
        return Err(QmnError::CapExceeded { what: "site count", value: space.len(), cap: 63 });
    }
    let dims = space.dims().to_vec();
    let mut coeffs = to_pair_tensor(h, &dims);
    mode_products(&mut coeffs, &dims, true);
    let mask_of = support_masks(&dims);
    let mut masses: BTreeMap<u64, f64> = BTreeMap::new();
    for (i, c) in coeffs.iter().enumerate() {
        let m2 = c.norm_sqr();
        if m2 > 0.0 {
            *masses.entry(mask_of(i)).or_insert(0.0) += m2;
        }
    }
    let mut out = CumulantExpansion {
        space: space.clone(),
        source_norm_sqr: h.frobenius_norm_sqr(),
        masses,
        coeffs,
        entries: BTreeMap::new(),
    };
    let wanted: Vec<Vec<SiteId>> = match selection {
        SupportSelection::None => vec![],
        SupportSelection::List(l) => l,
        SupportSelection::All => (0u64..1 << space.len()).map(|m| space.sites_of_mask(m)).collect(),
        SupportSelection::UpTo(s) => {
            (0u64..1 << space.len()).filter(|m| m.count_ones() as usize <= s).map(|m| space.sites_of_mask(m)).collect()
        }
    };
    for s in wanted {
        let op = out.cumulant(&s)?;
        out.entries.insert(op.support.clone(), op);
    }
    Ok(out)
}

/// Expands an operator on its own support.
pub fn expand_operator(op: &SupportedOperator, selection: SupportSelection) -> Result<CumulantExpansion> {
    let c = op.canonical();
    expand(&c.matrix, &c.local_space(), selection)
}

/// `E_a(H) = Tr_a(H)/d_a ⊗ I_a`, re-embedded in `space`.
pub fn site_average(h: &ComplexMatrix, space: &SiteSpace, a: SiteId) -> Result<ComplexMatrix> {
    let d = space.dim_of(a)?;
    let keep: Vec<SiteId> = space.sites().iter().copied().filter(|&s| s != a).collect();
    let mut reduced = partial_trace(h, space, &keep)?;
    reduced.matrix = reduced.matrix.scale_real(1.0 / d as f64);
    embed(&reduced, space)
}

/// `K_X`: average over the complement of `X`, then keep the part genuine on `X`.
pub fn cumulant(h: &ComplexMatrix, space: &SiteSpace, x: &[SiteId]) -> Result<SupportedOperator> {
    let mut x: Vec<SiteId> = x.to_vec();
    x.sort_unstable();
    x.dedup();
    let rest: f64 = space.sites().iter().filter(|s| !x.contains(s)).map(|&s| space.dim_of(s).unwrap_or(1) as f64).product();
    let mut local = partial_trace(h, space, &x)?;
    local.matrix = local.matrix.scale_real(1.0 / rest);
    if x.is_empty() {
        return Ok(local);
    }
    let sub = expand(&local.matrix, &local.local_space(), SupportSelection::None)?;
    sub.cumulant(&x)
}

/// Whether every single-site partial trace of `op` vanishes: `‖Tr_a op‖ ≤ tol·√d_a·‖op‖`.
pub fn is_genuine(op: &SupportedOperator, tol: f64) -> bool {
    genuine_violation(op, tol).is_none()
}

fn genuine_violation(op: &SupportedOperator, tol: f64) -> Option<(SiteId, f64)> {
    let norm = op.frobenius_norm();
    for (&a, &d) in op.support.iter().zip(&op.dims) {
        let t = trace_out(op, &[a]).expect("own site");
        let tn = t.frobenius_norm();
        if tn > tol * (d as f64).sqrt() * norm {
            return Some((a, tn));
        }
    }
    None
}

/// Outcome of checking that all cumulant mass sits on cliques.
#[derive(Debug, Clone, Serialize)]
pub struct CliqueSupportReport {
    pub total_mass: f64,
    pub clique_mass: f64,
    /// `‖H‖² − Σ_{X ∈ cliques ∪ {∅}} ‖K_X‖²`.
    pub off_clique_mass: f64,
    pub relative_gap: f64,
    pub pass: bool,
    /// Largest off-clique cumulant (support and full-space norm) when the check fails.
    pub witness: Option<(Vec<SiteId>, f64)>,
}

/// Checks that `H` only has cumulants on cliques of `g` (and the empty set).
pub fn verify_clique_support(h: &ComplexMatrix, space: &SiteSpace, g: &Graph, tol: f64) -> Result<CliqueSupportReport> {
    let e = expand(h, space, SupportSelection::None)?;
    Ok(clique_support_from(&e, g, tol))
}

pub fn clique_support_from(e: &CumulantExpansion, g: &Graph, tol: f64) -> CliqueSupportReport {
    let total = e.source_norm_sqr;
    let mut clique_mass = e.mass(&[]).unwrap_or(0.0);
    for c in cliques(g, usize::MAX) {
        clique_mass += e.mass(&c).unwrap_or(0.0);
    }
    let gap = (total - clique_mass).max(0.0);
    let pass = gap <= tol * total;
    let witness = if pass {
        None
    } else {
        let off: Vec<(Vec<SiteId>, f64)> = e.masses().into_iter().filter(|(s, _)| s.len() >= 2 && !g.is_clique(s)).collect();
        let cut = tol * total;
        let best = |it: &mut dyn Iterator<Item = &(Vec<SiteId>, f64)>| it.max_by(|a, b| a.1.total_cmp(&b.1)).cloned();
        let pair = best(&mut off.iter().filter(|(s, m)| s.len() == 2 && *m > cut));
        pair.or_else(|| best(&mut off.iter())).map(|(s, m)| (s, m.sqrt()))
    };
    CliqueSupportReport {
        total_mass: total,
        clique_mass,
        off_clique_mass: gap,
        relative_gap: if total > 0.0 { gap / total } else { 0.0 },
        pass,
        witness,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CommutatorSupport {
    Zero,
    /// Supports carrying the commutator's cumulant mass, with full-space norms.
    Supports(Vec<(Vec<SiteId>, f64)>),
}

/// Cumulant supports of `[P, Q]` for genuine `P` and `Q`.
pub fn commutator_support(p: &SupportedOperator, q: &SupportedOperator, tol: f64) -> Result<CommutatorSupport> {
    for op in [p, q] {
        if let Some((site, norm)) = genuine_violation(op, GENUINE_TOL) {
            return Err(QmnError::NotGenuine { site, norm });
        }
    }
    let mut union: Vec<(SiteId, usize)> = p.support.iter().copied().zip(p.dims.iter().copied()).collect();
    for (&s, &d) in q.support.iter().zip(&q.dims) {
        if !union.iter().any(|u| u.0 == s) {
            union.push((s, d));
        }
    }
    let space = SiteSpace::new(union)?;
    let pm = embed(p, &space)?;
    let qm = embed(q, &space)?;
    let c = pm.commutator(&qm);
    let scale = pm.frobenius_norm() * qm.frobenius_norm();
    let cn = c.frobenius_norm();
    if cn <= tol * scale.max(f64::MIN_POSITIVE) {
        return Ok(CommutatorSupport::Zero);
    }
    let e = expand(&c, &space, SupportSelection::None)?;
    Ok(CommutatorSupport::Supports(e.masses().into_iter().filter(|(_, m)| m.sqrt() > tol * cn).map(|(s, m)| (s, m.sqrt())).collect()))
}
