//! One-sided (Hestenes) Jacobi SVD for small complex matrices.

use crate::tensor::matrix::{ComplexMatrix, C64, ZERO};

const MAX_SWEEPS: usize = 80;

/// `A = U diag(s) V†` with `s` descending; `U` is `m×k`, `V` is `n×k`, `k = min(m, n)`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: ComplexMatrix,
    pub s: Vec<f64>,
    pub v: ComplexMatrix,
}

pub fn svd(a: &ComplexMatrix) -> Svd {
    if a.rows() < a.cols() {
        let t = svd_tall(&a.adjoint());
        return Svd { u: t.v, s: t.s, v: t.u };
    }
    svd_tall(a)
}

fn svd_tall(a: &ComplexMatrix) -> Svd {
    let (m, n) = (a.rows(), a.cols());
    let mut cols: Vec<Vec<C64>> = (0..n).map(|j| (0..m).map(|i| a[(i, j)]).collect()).collect();
    let mut vcols: Vec<Vec<C64>> =
        (0..n).map(|j| (0..n).map(|i| if i == j { C64::new(1.0, 0.0) } else { ZERO }).collect()).collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = cols[p].iter().map(|x| x.norm_sqr()).sum();
                let beta: f64 = cols[q].iter().map(|x| x.norm_sqr()).sum();
                let gamma: C64 = cols[p].iter().zip(&cols[q]).map(|(x, y)| x.conj() * y).sum();
                let g = gamma.norm();
                if g == 0.0 || g <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let ph = (gamma / g).conj();
                rotate(&mut cols, p, q, c, s, ph);
                rotate(&mut vcols, p, q, c, s, ph);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sv: Vec<(f64, usize)> =
        cols.iter().enumerate().map(|(j, c)| (c.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt(), j)).collect();
    sv.sort_by(|a, b| b.0.total_cmp(&a.0));
    let k = n;
    let mut u = ComplexMatrix::zeros(m, k);
    let mut v = ComplexMatrix::zeros(n, k);
    let mut s = Vec::with_capacity(k);
    for (col, &(sigma, j)) in sv.iter().enumerate() {
        s.push(sigma);
        for i in 0..m {
            u[(i, col)] = if sigma > 0.0 { cols[j][i] / sigma } else { ZERO };
        }
        for i in 0..n {
            v[(i, col)] = vcols[j][i];
        }
    }
    Svd { u, s, v }
}

fn rotate(cols: &mut [Vec<C64>], p: usize, q: usize, c: f64, s: f64, ph: C64) {
    let (lo, hi) = cols.split_at_mut(q);
    let cp = &mut lo[p];
    let cq = &mut hi[0];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let ap = *x;
        let aq = *y * ph;
        *x = ap * c - aq * s;
        *y = ap * s + aq * c;
    }
}

/// Numerical rank with singular values above `rel_tol · s_max`.
pub fn rank(a: &ComplexMatrix, rel_tol: f64) -> usize {
    let s = svd(a).s;
    let smax = s.first().copied().unwrap_or(0.0);
    s.iter().filter(|&&x| x > rel_tol * smax && x > 0.0).count()
}
