//! Operator Schmidt decomposition across a bipartition of the support.

use std::collections::BTreeSet;

use crate::error::{QmnError, Result};
use crate::tensor::matrix::ComplexMatrix;
use crate::tensor::space::SupportedOperator;
use crate::tensor::svd::svd;
use crate::SiteId;

/// Singular values below this fraction of the largest are discarded.
pub const SCHMIDT_REL_CUTOFF: f64 = 1e-11;

/// One term `weight · left ⊗ right`, with `left` and `right` of unit Frobenius norm.
#[derive(Debug, Clone)]
pub struct SchmidtTerm {
    pub weight: f64,
    pub left: SupportedOperator,
    pub right: SupportedOperator,
}

/// `op = Σ_k s_k F_k ⊗ G_k` with `{F_k}` and `{G_k}` Hilbert–Schmidt orthonormal
/// and `s_k` descending. `left` selects the sites of the `F` factor.
pub fn op_schmidt(op: &SupportedOperator, left: &[SiteId]) -> Result<Vec<SchmidtTerm>> {
    let support = op.support_set();
    let left: BTreeSet<SiteId> = left.iter().copied().collect();
    if let Some(&s) = left.iter().find(|s| !support.contains(s)) {
        return Err(QmnError::UnknownSite(s));
    }
    if left.is_empty() || left.len() == support.len() {
        return Err(QmnError::EmptyCut);
    }
    let space = op.local_space();
    let canon = op.canonical();
    let right: Vec<SiteId> = support.difference(&left).copied().collect();
    let left: Vec<SiteId> = left.into_iter().collect();
    let t = space.split_table(&right)?;
    let (dl, dr) = (t.rest_dim, t.keep_dim);

    // R[(iL jL), (iR jR)] = M[(iL iR), (jL jR)]
    let mut r = ComplexMatrix::zeros(dl * dl, dr * dr);
    for il in 0..dl {
        for jl in 0..dl {
            let row = r.row_mut(il * dl + jl);
            for ir in 0..dr {
                let g = t.global(il, ir);
                for jr in 0..dr {
                    row[ir * dr + jr] = canon.matrix[(g, t.global(jl, jr))];
                }
            }
        }
    }
    let d = svd(&r);
    let smax = d.s.first().copied().unwrap_or(0.0);
    let ldims = space.subspace(&left)?.dims().to_vec();
    let rdims = space.subspace(&right)?.dims().to_vec();
    let mut out = Vec::new();
    for (k, &s) in d.s.iter().enumerate() {
        if s <= SCHMIDT_REL_CUTOFF * smax || s == 0.0 {
            break;
        }
        let f = ComplexMatrix::from_fn(dl, dl, |i, j| d.u[(i * dl + j, k)]);
        let g = ComplexMatrix::from_fn(dr, dr, |i, j| d.v[(i * dr + j, k)].conj());
        out.push(SchmidtTerm {
            weight: s,
            left: SupportedOperator::new(left.clone(), ldims.clone(), f)?,
            right: SupportedOperator::new(right.clone(), rdims.clone(), g)?,
        });
    }
    Ok(out)
}

/// `Σ_k s_k F_k ⊗ G_k` on the ascending union support.
pub fn schmidt_reconstruct(terms: &[SchmidtTerm]) -> Result<Option<SupportedOperator>> {
    let Some(first) = terms.first() else { return Ok(None) };
    let mut support = first.left.support.clone();
    support.extend(&first.right.support);
    let mut dims = first.left.dims.clone();
    dims.extend(&first.right.dims);
    let n: usize = dims.iter().product();
    let mut acc = ComplexMatrix::zeros(n, n);
    for t in terms {
        acc += &crate::tensor::matrix::kron(&t.left.matrix, &t.right.matrix).scale_real(t.weight);
    }
    Ok(Some(SupportedOperator::new(support, dims, acc)?.canonical()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::matrix::{kron, paulis};
    use crate::tensor::random::{random_hermitian, rng};
    use crate::tensor::space::SiteSpace;

    #[test]
    fn zz_is_a_single_product() {
        let z = paulis::z();
        let op = SupportedOperator::new(vec![1, 2], vec![2, 2], kron(&z, &z)).unwrap();
        let t = op_schmidt(&op, &[1]).unwrap();
        assert_eq!(t.len(), 1);
        assert!((t[0].weight - 2.0).abs() < 1e-12);
        let zn = z.scale_real(0.5f64.sqrt());
        let sign = t[0].left.matrix[(0, 0)].re.signum();
        assert!(t[0].left.matrix.max_abs_diff(&zn.scale_real(sign)) < 1e-12);
        assert!(t[0].right.matrix.max_abs_diff(&zn.scale_real(sign)) < 1e-12);
    }

    #[test]
    fn zz_plus_xx_has_two_equal_weights() {
        let (x, z) = (paulis::x(), paulis::z());
        let op = SupportedOperator::new(vec![1, 2], vec![2, 2], &kron(&z, &z) + &kron(&x, &x)).unwrap();
        let t = op_schmidt(&op, &[1]).unwrap();
        assert_eq!(t.len(), 2);
        assert!((t[0].weight - 2.0).abs() < 1e-12 && (t[1].weight - 2.0).abs() < 1e-12);
    }

    #[test]
    fn reconstruction_on_mixed_dimensions() {
        let mut r = rng(5);
        let space = SiteSpace::new([(1, 2), (4, 3), (7, 2)]).unwrap();
        let m = random_hermitian(&mut r, 12);
        let op = SupportedOperator::on(&space, vec![1, 4, 7], m.clone()).unwrap();
        for left in [vec![1], vec![4], vec![1, 7], vec![7, 4]] {
            let t = op_schmidt(&op, &left).unwrap();
            for (i, a) in t.iter().enumerate() {
                for b in &t[i + 1..] {
                    assert!(crate::tensor::hs_inner(&a.left.matrix, &b.left.matrix).unwrap().norm() < 1e-12);
                }
            }
            let back = schmidt_reconstruct(&t).unwrap().unwrap();
            assert_eq!(back.support, vec![1, 4, 7]);
            assert!(back.matrix.distance(&m) <= 1e-10 * m.frobenius_norm());
        }
    }

    #[test]
    fn cut_errors() {
        let op = SupportedOperator::new(vec![1, 2], vec![2, 2], ComplexMatrix::identity(4)).unwrap();
        assert_eq!(op_schmidt(&op, &[]).unwrap_err(), QmnError::EmptyCut);
        assert_eq!(op_schmidt(&op, &[1, 2]).unwrap_err(), QmnError::EmptyCut);
        assert_eq!(op_schmidt(&op, &[3]).unwrap_err(), QmnError::UnknownSite(3));
    }
}
