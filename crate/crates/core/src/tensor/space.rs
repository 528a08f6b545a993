use std::collections::BTreeSet;

use crate::error::{QmnError, Result};
use crate::tensor::matrix::{ComplexMatrix, C64, ZERO};
use crate::SiteId;

/// Ordered collection of sites and their local dimensions.
///
/// Sites are kept in ascending id order; that order fixes the global
/// tensor-product indexing (the first site is the most significant digit).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SiteSpace {
    sites: Vec<SiteId>,
    dims: Vec<usize>,
}

impl SiteSpace {
    pub fn new(pairs: impl IntoIterator<Item = (SiteId, usize)>) -> Result<Self> {
        let mut pairs: Vec<(SiteId, usize)> = pairs.into_iter().collect();
        pairs.sort_unstable_by_key(|p| p.0);
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(QmnError::DuplicateSite(w[0].0));
            }
        }
        if let Some(&(site, dim)) = pairs.iter().find(|p| p.1 < 2) {
            return Err(QmnError::InvalidDimension { site, dim });
        }
        Ok(Self { sites: pairs.iter().map(|p| p.0).collect(), dims: pairs.iter().map(|p| p.1).collect() })
    }

    /// Qubits with the given ids.
    pub fn qubits(ids: impl IntoIterator<Item = SiteId>) -> Result<Self> {
        Self::new(ids.into_iter().map(|s| (s, 2)))
    }

    /// Sites `1..=n`, all of dimension `d`.
    pub fn uniform(n: usize, d: usize) -> Self {
        Self::new((1..=n as SiteId).map(|s| (s, d))).expect("uniform space is valid")
    }

    pub fn sites(&self) -> &[SiteId] {
        &self.sites
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn position(&self, site: SiteId) -> Result<usize> {
        self.sites.binary_search(&site).map_err(|_| QmnError::UnknownSite(site))
    }

    pub fn contains(&self, site: SiteId) -> bool {
        self.sites.binary_search(&site).is_ok()
    }

    pub fn dim_of(&self, site: SiteId) -> Result<usize> {
        Ok(self.dims[self.position(site)?])
    }

    pub fn dim_of_set<'a>(&self, sites: impl IntoIterator<Item = &'a SiteId>) -> Result<usize> {
        sites.into_iter().map(|&s| self.dim_of(s)).product()
    }

    pub fn is_qubit_space(&self) -> bool {
        self.dims.iter().all(|&d| d == 2)
    }

    /// The subspace made of `sites` (returned in ascending order).
    pub fn subspace<'a>(&self, sites: impl IntoIterator<Item = &'a SiteId>) -> Result<Self> {
        let mut pairs = Vec::new();
        for &s in sites {
            pairs.push((s, self.dim_of(s)?));
        }
        Self::new(pairs)
    }

    pub fn site_set(&self) -> BTreeSet<SiteId> {
        self.sites.iter().copied().collect()
    }

    /// Bit mask (by position) of a set of sites.
    pub fn mask_of<'a>(&self, sites: impl IntoIterator<Item = &'a SiteId>) -> Result<u64> {
        let mut m = 0u64;
        for &s in sites {
            m |= 1 << self.position(s)?;
        }
        Ok(m)
    }

    pub fn sites_of_mask(&self, mask: u64) -> Vec<SiteId> {
        self.sites.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &s)| s).collect()
    }

    /// Global-index table for splitting the space into `keep` (in the given
    /// order) and the remaining sites (ascending). Entry `rest * keep_dim + local`
    /// holds the global index.
    pub(crate) fn split_table(&self, keep: &[SiteId]) -> Result<SplitTable> {
        let n = self.len();
        let mut kept_pos = vec![None; n];
        let mut seen = BTreeSet::new();
        for (k, &s) in keep.iter().enumerate() {
            if !seen.insert(s) {
                return Err(QmnError::DuplicateSite(s));
            }
            kept_pos[self.position(s)?] = Some(k);
        }
        let keep_dims: Vec<usize> = keep.iter().map(|&s| self.dim_of(s)).collect::<Result<_>>()?;
        let mut keep_stride = vec![1usize; keep.len()];
        for k in (0..keep.len().saturating_sub(1)).rev() {
            keep_stride[k] = keep_stride[k + 1] * keep_dims[k + 1];
        }
        let keep_dim: usize = keep_dims.iter().product();
        let total = self.total_dim();
        let rest_dim = total / keep_dim;

        let mut local = vec![0usize; total];
        let mut rest = vec![0usize; total];
        let mut global_stride = 1usize;
        let mut rest_stride = 1usize;
        for a in (0..n).rev() {
            let d = self.dims[a];
            match kept_pos[a] {
                Some(k) => {
                    let ls = keep_stride[k];
                    for (g, l) in local.iter_mut().enumerate() {
                        *l += (g / global_stride) % d * ls;
                    }
                }
                None => {
                    for (g, r) in rest.iter_mut().enumerate() {
                        *r += (g / global_stride) % d * rest_stride;
                    }
                    rest_stride *= d;
                }
            }
            global_stride *= d;
        }
        let mut table = vec![0usize; total];
        for g in 0..total {
            table[rest[g] * keep_dim + local[g]] = g;
        }
        Ok(SplitTable { table, keep_dim, rest_dim })
    }
}

pub(crate) struct SplitTable {
    pub table: Vec<usize>,
    pub keep_dim: usize,
    pub rest_dim: usize,
}

impl SplitTable {
    #[inline]
    pub fn global(&self, rest: usize, local: usize) -> usize {
        self.table[rest * self.keep_dim + local]
    }
}

/// An operator together with the sites it acts on. The matrix is expressed in
/// the tensor order of `support`, which need not be ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportedOperator {
    pub support: Vec<SiteId>,
    pub dims: Vec<usize>,
    pub matrix: ComplexMatrix,
}

impl SupportedOperator {
    pub fn new(support: Vec<SiteId>, dims: Vec<usize>, matrix: ComplexMatrix) -> Result<Self> {
        if support.len() != dims.len() {
            return Err(QmnError::DimensionMismatch { expected: support.len(), found: dims.len() });
        }
        let mut seen = BTreeSet::new();
        for &s in &support {
            if !seen.insert(s) {
                return Err(QmnError::DuplicateSite(s));
            }
        }
        let d: usize = dims.iter().product();
        if !matrix.is_square() || matrix.rows() != d {
            return Err(QmnError::DimensionMismatch { expected: d, found: matrix.rows() });
        }
        Ok(Self { support, dims, matrix })
    }

    /// Operator on `support` with local dimensions taken from `space`.
    pub fn on(space: &SiteSpace, support: Vec<SiteId>, matrix: ComplexMatrix) -> Result<Self> {
        let dims = support.iter().map(|&s| space.dim_of(s)).collect::<Result<Vec<_>>>()?;
        Self::new(support, dims, matrix)
    }

    /// `c · I` on the empty support.
    pub fn scalar(c: C64) -> Self {
        Self { support: vec![], dims: vec![], matrix: ComplexMatrix::from_diagonal(&[c]) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn support_set(&self) -> BTreeSet<SiteId> {
        self.support.iter().copied().collect()
    }

    pub fn local_space(&self) -> SiteSpace {
        SiteSpace::new(self.support.iter().copied().zip(self.dims.iter().copied()))
            .expect("validated at construction")
    }

    /// Same operator with its support sorted ascending.
    pub fn canonical(&self) -> Self {
        if self.support.windows(2).all(|w| w[0] < w[1]) {
            return self.clone();
        }
        let space = self.local_space();
        let matrix = embed(self, &space).expect("own space");
        Self { support: space.sites().to_vec(), dims: space.dims().to_vec(), matrix }
    }

    /// Same operator with its tensor factors reordered to `order` (a permutation of the support).
    pub fn permuted(&self, order: &[SiteId]) -> Result<Self> {
        if order.len() != self.support.len() {
            return Err(QmnError::DimensionMismatch { expected: self.support.len(), found: order.len() });
        }
        let space = self.local_space();
        let canon = self.canonical();
        let t = space.split_table(order)?;
        let n = self.dim();
        let matrix = ComplexMatrix::from_fn(n, n, |a, b| canon.matrix[(t.table[a], t.table[b])]);
        let dims = order.iter().map(|&s| space.dim_of(s)).collect::<Result<Vec<_>>>()?;
        Self::new(order.to_vec(), dims, matrix)
    }

    /// Re-expresses the operator on a larger support (identity on the new sites).
    pub fn extend_to(&self, space: &SiteSpace) -> Result<Self> {
        let matrix = embed(self, space)?;
        Ok(Self { support: space.sites().to_vec(), dims: space.dims().to_vec(), matrix })
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.frobenius_norm()
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.matrix.max_abs() <= tol
    }
}

/// Embeds `op` into `space`: `op ⊗ I` on the complement, permuted to the global site order.
pub fn embed(op: &SupportedOperator, space: &SiteSpace) -> Result<ComplexMatrix> {
    for (&s, &d) in op.support.iter().zip(&op.dims) {
        let sd = space.dim_of(s)?;
        if sd != d {
            return Err(QmnError::DimensionMismatch { expected: sd, found: d });
        }
    }
    let t = space.split_table(&op.support)?;
    let total = space.total_dim();
    let mut out = ComplexMatrix::zeros(total, total);
    let k = t.keep_dim;
    for r in 0..t.rest_dim {
        for a in 0..k {
            let ga = t.global(r, a);
            for b in 0..k {
                let v = op.matrix[(a, b)];
                if v != ZERO {
                    out[(ga, t.global(r, b))] = v;
                }
            }
        }
    }
    Ok(out)
}

/// Partial trace over every site not in `keep`. The result is on `keep` in ascending order.
pub fn partial_trace<'a>(
    m: &ComplexMatrix,
    space: &SiteSpace,
    keep: impl IntoIterator<Item = &'a SiteId>,
) -> Result<SupportedOperator> {
    if !m.is_square() || m.rows() != space.total_dim() {
        return Err(QmnError::DimensionMismatch { expected: space.total_dim(), found: m.rows() });
    }
    let mut keep: Vec<SiteId> = keep.into_iter().copied().collect();
    keep.sort_unstable();
    keep.dedup();
    let dims = keep.iter().map(|&s| space.dim_of(s)).collect::<Result<Vec<_>>>()?;
    let t = space.split_table(&keep)?;
    let k = t.keep_dim;
    let mut out = ComplexMatrix::zeros(k, k);
    for r in 0..t.rest_dim {
        for a in 0..k {
            let ga = t.global(r, a);
            let row = m.row(ga);
            let orow = out.row_mut(a);
            for (b, o) in orow.iter_mut().enumerate() {
                *o += row[t.table[r * k + b]];
            }
        }
    }
    SupportedOperator::new(keep, dims, out)
}

/// Partial trace of a supported operator over some of its own sites.
pub fn trace_out<'a>(
    op: &SupportedOperator,
    remove: impl IntoIterator<Item = &'a SiteId>,
) -> Result<SupportedOperator> {
    let remove: BTreeSet<SiteId> = remove.into_iter().copied().collect();
    for s in &remove {
        if !op.support.contains(s) {
            return Err(QmnError::UnknownSite(*s));
        }
    }
    let keep: Vec<SiteId> = op.support.iter().copied().filter(|s| !remove.contains(s)).collect();
    let space = op.local_space();
    let canon = op.canonical();
    partial_trace(&canon.matrix, &space, &keep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::matrix::{kron, paulis, ONE};
    use crate::tensor::random::{random_density, random_hermitian, rng};

    fn q3() -> SiteSpace {
        SiteSpace::qubits([1, 2, 3]).unwrap()
    }

    #[test]
    fn embed_single_site() {
        let op = SupportedOperator::on(&q3(), vec![2], paulis::z()).unwrap();
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(embed(&op, &q3()).unwrap(), kron(&kron(&i2, &paulis::z()), &i2));
    }

    #[test]
    fn embed_identity_is_global_identity() {
        let space = SiteSpace::new([(1, 3), (4, 2), (7, 2)]).unwrap();
        let op = SupportedOperator::on(&space, vec![4], ComplexMatrix::identity(2)).unwrap();
        assert_eq!(embed(&op, &space).unwrap(), ComplexMatrix::identity(12));
    }

    #[test]
    fn embed_unsorted_support_matches_explicit_index_map() {
        let mut r = rng(3);
        let space = SiteSpace::new([(1, 2), (2, 2), (3, 3)]).unwrap();
        // operator on (3, 1): local index = i3 * 2 + i1
        let m = random_hermitian(&mut r, 6);
        let op = SupportedOperator::on(&space, vec![3, 1], m.clone()).unwrap();
        let e = embed(&op, &space).unwrap();
        // oracle: global index = i1 * 6 + i2 * 3 + i3
        for g in 0..12 {
            for h in 0..12 {
                let (i1, i2, i3) = (g / 6, (g / 3) % 2, g % 3);
                let (j1, j2, j3) = (h / 6, (h / 3) % 2, h % 3);
                let expect = if i2 == j2 { m[(i3 * 2 + i1, j3 * 2 + j1)] } else { ZERO };
                assert_eq!(e[(g, h)], expect);
            }
        }
        // canonical form re-expressed on {1,3} embeds identically
        assert_eq!(embed(&op.canonical(), &space).unwrap(), e);
        assert_eq!(op.canonical().support, vec![1, 3]);
    }

    #[test]
    fn embed_trace_scales_with_complement() {
        let mut r = rng(5);
        let space = SiteSpace::new([(1, 2), (2, 3), (3, 2)]).unwrap();
        let op = SupportedOperator::on(&space, vec![2], random_hermitian(&mut r, 3)).unwrap();
        let e = embed(&op, &space).unwrap();
        assert!((e.trace() - op.matrix.trace() * 4.0).norm() < 1e-12);
        let bad = SupportedOperator::new(vec![9], vec![2], ComplexMatrix::identity(2)).unwrap();
        assert_eq!(embed(&bad, &space), Err(QmnError::UnknownSite(9)));
        let wrong_dim = SupportedOperator::new(vec![2], vec![2], ComplexMatrix::identity(2)).unwrap();
        assert!(matches!(embed(&wrong_dim, &space), Err(QmnError::DimensionMismatch { .. })));
    }

    #[test]
    fn partial_trace_of_product_state() {
        let mut r = rng(7);
        let a = random_density(&mut r, 2);
        let b = random_density(&mut r, 3);
        let space = SiteSpace::new([(1, 2), (2, 3)]).unwrap();
        let pa = partial_trace(&kron(&a, &b), &space, &[1]).unwrap();
        assert!(pa.matrix.max_abs_diff(&a) < 1e-14);
        let pb = partial_trace(&kron(&a, &b), &space, &[2]).unwrap();
        assert!(pb.matrix.max_abs_diff(&b) < 1e-14);
    }

    #[test]
    fn bell_marginal_is_maximally_mixed() {
        let s = 0.5f64.sqrt();
        let psi = [C64::new(s, 0.0), ZERO, ZERO, C64::new(s, 0.0)];
        let bell = ComplexMatrix::from_fn(4, 4, |i, j| psi[i] * psi[j].conj());
        let space = SiteSpace::qubits([1, 2]).unwrap();
        let m = partial_trace(&bell, &space, &[1]).unwrap();
        assert!(m.matrix.max_abs_diff(&ComplexMatrix::identity(2).scale_real(0.5)) < 1e-15);
    }

    #[test]
    fn partial_trace_matches_index_sum_oracle() {
        let mut r = rng(11);
        let rho = random_density(&mut r, 8);
        let got = partial_trace(&rho, &q3(), &[3, 1]).unwrap();
        assert_eq!(got.support, vec![1, 3]);
        for a1 in 0..2 {
            for a3 in 0..2 {
                for b1 in 0..2 {
                    for b3 in 0..2 {
                        let mut s = ZERO;
                        for k in 0..2 {
                            s += rho[(a1 * 4 + k * 2 + a3, b1 * 4 + k * 2 + b3)];
                        }
                        assert!((got.matrix[(a1 * 2 + a3, b1 * 2 + b3)] - s).norm() < 1e-15);
                    }
                }
            }
        }
        assert!((got.matrix.trace() - ONE).norm() < 1e-12);
    }

    #[test]
    fn embed_and_partial_trace_are_adjoint() {
        let mut r = rng(13);
        let space = SiteSpace::new([(1, 2), (2, 3), (3, 2)]).unwrap();
        for keep in [vec![1], vec![2, 3], vec![1, 3]] {
            let d: usize = keep.iter().map(|&s| space.dim_of(s).unwrap()).product();
            let a = SupportedOperator::on(&space, keep.clone(), random_hermitian(&mut r, d)).unwrap();
            let m = random_hermitian(&mut r, 12);
            let lhs = crate::tensor::hs_inner(&embed(&a, &space).unwrap(), &m).unwrap();
            let rhs = crate::tensor::hs_inner(&a.matrix, &partial_trace(&m, &space, &keep).unwrap().matrix).unwrap();
            assert!((lhs - rhs).norm() < 1e-10);
        }
    }

    #[test]
    fn trace_out_own_sites() {
        let space = SiteSpace::qubits([1, 2]).unwrap();
        let zz = SupportedOperator::on(&space, vec![2, 1], kron(&paulis::z(), &paulis::x())).unwrap();
        let t = trace_out(&zz, &[1]).unwrap();
        assert_eq!(t.support, vec![2]);
        assert!(t.matrix.max_abs() < 1e-15);
    }

    #[test]
    fn permutation_matches_kron_order() {
        let (x, z) = (paulis::x(), paulis::z());
        let space = SiteSpace::new([(1, 2), (2, 3), (3, 2)]).unwrap();
        let q = crate::tensor::random::random_hermitian(&mut rng(8), 3);
        let op = SupportedOperator::on(&space, vec![1, 2, 3], kron(&kron(&x, &q), &z)).unwrap();
        let p = op.permuted(&[3, 1, 2]).unwrap();
        assert_eq!(p.dims, vec![2, 2, 3]);
        assert!(p.matrix.max_abs_diff(&kron(&kron(&z, &x), &q)) < 1e-15);
        assert_eq!(p.canonical(), op);
        assert!(op.permuted(&[1, 2]).is_err());
    }
}
