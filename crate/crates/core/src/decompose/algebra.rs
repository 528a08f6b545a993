//! Finite-dimensional operator algebras on a single site: spans, generated
//! *-algebras, commutants, centers and central block structure.

use crate::error::Result;
use crate::tensor::eig::{herm_eig, psd_null_space};
use crate::tensor::matrix::{kron, ComplexMatrix, C64, ZERO};
use crate::tensor::random::{rng, QmnRng};
use crate::tensor::schmidt::op_schmidt;
use crate::tensor::{hs_inner, SupportedOperator};
use crate::SiteId;

/// Relative eigenvalue threshold for commutant null spaces.
pub const NULL_TOL: f64 = 1e-9;
/// Relative norm below which a vector is considered inside a span.
pub const SPAN_TOL: f64 = 1e-9;

/// Hilbert–Schmidt orthonormal basis of a subspace of `d×d` matrices.
#[derive(Debug, Clone)]
pub struct OperatorSpan {
    pub d: usize,
    pub basis: Vec<ComplexMatrix>,
}

impl OperatorSpan {
    pub fn empty(d: usize) -> Self {
        Self { d, basis: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Orthogonal projection.
    pub fn project(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let mut p = ComplexMatrix::zeros(self.d, self.d);
        for b in &self.basis {
            let c = hs_inner(b, x).expect("same shape");
            p += &b.scale(c);
        }
        p
    }

    /// Component of `x` orthogonal to the span.
    pub fn residual(&self, x: &ComplexMatrix) -> ComplexMatrix {
        x - &self.project(x)
    }

    pub fn contains(&self, x: &ComplexMatrix) -> bool {
        self.residual(x).frobenius_norm() <= SPAN_TOL * x.frobenius_norm().max(1.0)
    }

    /// Adds `x` if it is not already in the span. Returns whether the span grew.
    /// Vectors of norm below one are compared against an absolute threshold.
    pub fn push(&mut self, x: &ComplexMatrix) -> bool {
        let scale = x.frobenius_norm().max(1.0);
        // two Gram-Schmidt passes
        let mut r = self.residual(x);
        r = self.residual(&r);
        let n = r.frobenius_norm();
        if n <= SPAN_TOL * scale {
            return false;
        }
        self.basis.push(r.scale_real(1.0 / n));
        true
    }
}

/// Unital *-algebra generated by `gens`, as an orthonormal span.
pub fn generate_algebra(gens: &[ComplexMatrix], d: usize) -> OperatorSpan {
    let mut span = OperatorSpan::empty(d);
    span.push(&ComplexMatrix::identity(d));
    for g in gens {
        let scale = g.frobenius_norm();
        for part in [g.hermitian_part(), (g - &g.adjoint()).scale(C64::new(0.0, -0.5))] {
            let n = part.frobenius_norm();
            if n > 1e-12 * scale {
                span.push(&part.scale_real(1.0 / n));
            }
        }
    }
    loop {
        let mut grew = false;
        let n = span.dim();
        for i in 0..n {
            for j in 0..n {
                let p = span.basis[i].matmul(&span.basis[j]);
                grew |= span.push(&p);
            }
        }
        if !grew {
            return span;
        }
    }
}

/// Linear map `x ↦ [x, g]` on row-major `vec(x)`.
fn commutator_map(g: &ComplexMatrix) -> ComplexMatrix {
    let d = g.rows();
    let id = ComplexMatrix::identity(d);
    &kron(&id, &g.transpose()) - &kron(g, &id)
}

fn traceless_normalized(g: &ComplexMatrix) -> Option<ComplexMatrix> {
    let d = g.rows();
    let t = g.trace() / d as f64;
    let mut h = g.clone();
    for i in 0..d {
        h[(i, i)] -= t;
    }
    let n = h.frobenius_norm();
    if n <= 1e-14 * g.frobenius_norm().max(f64::MIN_POSITIVE) || n == 0.0 {
        None
    } else {
        Some(h.scale_real(1.0 / n))
    }
}

/// Orthonormal basis of `{x : [x, g] = 0 for all g}`.
pub fn commutant(gens: &[ComplexMatrix], d: usize) -> Result<OperatorSpan> {
    let d2 = d * d;
    let mut form = ComplexMatrix::zeros(d2, d2);
    for g in gens.iter().filter_map(traceless_normalized) {
        let l = commutator_map(&g);
        form += &l.adjoint_matmul(&l);
    }
    let ns = psd_null_space(&form, NULL_TOL)?;
    let basis = (0..ns.cols()).map(|c| ComplexMatrix::from_fn(d, d, |i, j| ns[(i * d + j, c)])).collect();
    Ok(OperatorSpan { d, basis })
}

/// `A ∩ A′` for an algebra given by an orthonormal basis.
pub fn center(alg: &OperatorSpan) -> Result<OperatorSpan> {
    let n = alg.dim();
    let d = alg.d;
    // columns: vec([b_i, b_j]) stacked over j
    let mut form = ComplexMatrix::zeros(n, n);
    for g in &alg.basis {
        let cols: Vec<ComplexMatrix> = alg.basis.iter().map(|b| b.commutator(g)).collect();
        for i in 0..n {
            for k in 0..n {
                form[(i, k)] += hs_inner(&cols[i], &cols[k]).expect("same shape");
            }
        }
    }
    let scale = form.max_abs();
    let ns = if scale == 0.0 { ComplexMatrix::identity(n) } else { psd_null_space(&form, NULL_TOL)? };
    let mut out = OperatorSpan::empty(d);
    for c in 0..ns.cols() {
        let mut z = ComplexMatrix::zeros(d, d);
        for i in 0..n {
            z += &alg.basis[i].scale(ns[(i, c)]);
        }
        out.push(&z);
    }
    Ok(out)
}

/// One central summand `M_n ⊗ I_m` of an algebra.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlgebraBlock {
    pub dim: usize,
    pub n: usize,
    pub m: usize,
}

/// Site-local algebra generated by the Schmidt operators of an edge cumulant.
#[derive(Debug, Clone)]
pub struct InteractionAlgebra {
    pub site: SiteId,
    pub generators: Vec<ComplexMatrix>,
    pub algebra: OperatorSpan,
    pub center: OperatorSpan,
    pub blocks: Vec<AlgebraBlock>,
    /// Columns are eigenvectors of a generic central element, grouped by block.
    pub unitary: ComplexMatrix,
}

/// Site-`u` Schmidt operators of an operator on `{u, v}` (weights folded in).
pub fn schmidt_generators(k_uv: &SupportedOperator, u: SiteId) -> Result<Vec<ComplexMatrix>> {
    if k_uv.frobenius_norm() == 0.0 {
        return Ok(vec![]);
    }
    Ok(op_schmidt(k_uv, &[u])?.into_iter().map(|t| t.left.matrix.scale_real(t.weight)).collect())
}

/// Block structure of a *-algebra from the spectrum of a generic Hermitian central element.
pub fn block_structure(alg: &OperatorSpan, cent: &OperatorSpan, r: &mut QmnRng) -> Result<(Vec<AlgebraBlock>, ComplexMatrix)> {
    use rand::Rng;
    let d = alg.d;
    let mut z = ComplexMatrix::zeros(d, d);
    for c in &cent.basis {
        z += &c.hermitian_part().scale_real(r.gen_range(0.5..1.5));
        z += &(c - &c.adjoint()).scale(C64::new(0.0, -0.5)).scale_real(r.gen_range(0.5..1.5));
    }
    let e = herm_eig(&z)?;
    let spread = e.values.iter().fold(0.0f64, |a, &b| a.max(b.abs())).max(1.0);
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..d {
        match groups.last_mut() {
            Some(g) if (e.values[i] - e.values[*g.last().expect("non-empty")]).abs() <= 1e-8 * spread => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    let mut blocks = Vec::new();
    for g in &groups {
        let v = ComplexMatrix::from_fn(d, g.len(), |i, j| e.vectors[(i, g[j])]);
        let mut span = OperatorSpan::empty(g.len());
        for b in &alg.basis {
            span.push(&v.adjoint().matmul(b).matmul(&v));
        }
        let dim_a = span.dim();
        let n = (dim_a as f64).sqrt().round() as usize;
        blocks.push(AlgebraBlock { dim: g.len(), n, m: g.len() / n.max(1) });
    }
    let order: Vec<usize> = groups.concat();
    let unitary = ComplexMatrix::from_fn(d, d, |i, j| e.vectors[(i, order[j])]);
    Ok((blocks, unitary))
}

/// The unital *-algebra on site `u` generated by the `u`-side Schmidt operators of `K_uv`.
pub fn interaction_algebra(k_uv: &SupportedOperator, u: SiteId) -> Result<InteractionAlgebra> {
    let pos = k_uv.support.iter().position(|&s| s == u).ok_or(crate::QmnError::UnknownSite(u))?;
    let d = k_uv.dims[pos];
    let generators = schmidt_generators(k_uv, u)?;
    let algebra = generate_algebra(&generators, d);
    let cent = center(&algebra)?;
    let (blocks, unitary) = block_structure(&algebra, &cent, &mut rng(0x51ed))?;
    Ok(InteractionAlgebra { site: u, generators, algebra, center: cent, blocks, unitary })
}

/// Minimum-norm least-squares coefficients of `target` in the (possibly dependent) family `cols`.
pub fn least_squares(cols: &[&ComplexMatrix], target: &ComplexMatrix) -> (Vec<C64>, f64) {
    let d2 = target.rows() * target.cols();
    if cols.is_empty() {
        return (vec![], target.frobenius_norm());
    }
    let a = ComplexMatrix::from_fn(d2, cols.len(), |p, j| cols[j].as_slice()[p]);
    let dec = crate::tensor::svd(&a);
    let smax = dec.s.first().copied().unwrap_or(0.0);
    let b = target.as_slice();
    let mut x = vec![ZERO; cols.len()];
    for (k, &s) in dec.s.iter().enumerate() {
        if s <= 1e-12 * smax || s == 0.0 {
            continue;
        }
        let ub: C64 = (0..d2).map(|p| dec.u[(p, k)].conj() * b[p]).sum::<C64>() / s;
        for (j, xj) in x.iter_mut().enumerate() {
            *xj += dec.v[(j, k)] * ub;
        }
    }
    let mut fit = ComplexMatrix::zeros(target.rows(), target.cols());
    for (c, &w) in cols.iter().zip(&x) {
        fit += &c.scale(w);
    }
    (x, fit.distance(target))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::matrix::paulis;

    fn edge(m: ComplexMatrix, du: usize, dv: usize) -> SupportedOperator {
        SupportedOperator::new(vec![1, 2], vec![du, dv], m).unwrap()
    }

    #[test]
    fn abelian_zz_algebra() {
        let z = paulis::z();
        let a = interaction_algebra(&edge(kron(&z, &z), 2, 2), 1).unwrap();
        assert_eq!(a.algebra.dim(), 2);
        assert_eq!(a.center.dim(), 2);
        assert_eq!(a.blocks, vec![AlgebraBlock { dim: 1, n: 1, m: 1 }; 2]);
    }

    #[test]
    fn full_matrix_algebra_from_zz_plus_xx() {
        let (x, z) = (paulis::x(), paulis::z());
        let a = interaction_algebra(&edge(&kron(&z, &z) + &kron(&x, &x), 2, 2), 1).unwrap();
        assert_eq!(a.algebra.dim(), 4);
        assert_eq!(a.center.dim(), 1);
        assert_eq!(a.blocks, vec![AlgebraBlock { dim: 2, n: 2, m: 1 }]);
    }

    #[test]
    fn composite_site_factor_algebra() {
        // site 1 = 2 ⊗ 2; the edge acts on its first factor only
        let (x, z) = (paulis::x(), paulis::z());
        let i2 = ComplexMatrix::identity(2);
        let k = &kron(&kron(&z, &i2), &z) + &kron(&kron(&x, &i2), &x);
        let a = interaction_algebra(&edge(k, 4, 2), 1).unwrap();
        assert_eq!(a.algebra.dim(), 4);
        assert_eq!(a.blocks, vec![AlgebraBlock { dim: 4, n: 2, m: 2 }]);
        let comm = commutant(&a.algebra.basis, 4).unwrap();
        assert_eq!(comm.dim(), 4);
        assert!(comm.contains(&kron(&i2, &paulis::y())));
        assert!(!comm.contains(&kron(&paulis::y(), &i2)));
    }

    #[test]
    fn commutant_of_nothing_is_everything() {
        assert_eq!(commutant(&[], 3).unwrap().dim(), 9);
        assert_eq!(commutant(&[ComplexMatrix::identity(3).scale_real(2.0)], 3).unwrap().dim(), 9);
    }

    #[test]
    fn least_squares_min_norm() {
        let z = paulis::z();
        let (x, r) = least_squares(&[&z, &z], &z);
        assert!(r < 1e-14);
        assert!((x[0] - C64::new(0.5, 0.0)).norm() < 1e-14 && (x[1] - C64::new(0.5, 0.0)).norm() < 1e-14);
    }
}
