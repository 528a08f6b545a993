//! Hermitian eigendecomposition and spectral calculus.
//!
//! Householder reduction to a complex Hermitian tridiagonal form, a diagonal
//! phase change that makes the tridiagonal real symmetric, then implicit QL
//! with Wilkinson-type shifts.

use crate::error::{QmnError, Result};
use crate::par;
use crate::tensor::matrix::{ComplexMatrix, C64, ONE, ZERO};

/// Relative tolerance on `max|M - M†| / max|M|` accepted as Hermitian input.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Eigenvalues `<= LOG_FLOOR · λ_max` are rejected by the matrix logarithm.
pub const LOG_FLOOR: f64 = 1e-12;

const MAX_QL_ITERATIONS: usize = 200;

/// `M = U diag(values) U†`, values ascending, eigenvectors in the columns of `vectors`.
#[derive(Debug, Clone)]
pub struct HermEig {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl HermEig {
    /// Rebuilds `U diag(f(λ)) U†`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.values.len();
        let fv: Vec<f64> = self.values.iter().map(|&x| f(x)).collect();
        let mut scaled = self.vectors.clone();
        for i in 0..n {
            for (x, &s) in scaled.row_mut(i).iter_mut().zip(&fv) {
                *x *= s;
            }
        }
        let mut out = scaled.matmul(&self.vectors.adjoint());
        // exact Hermitian symmetry of the result
        for i in 0..n {
            out[(i, i)].im = 0.0;
            for j in i + 1..n {
                let v = (out[(i, j)] + out[(j, i)].conj()) * 0.5;
                out[(i, j)] = v;
                out[(j, i)] = v.conj();
            }
        }
        out
    }
}

fn check_hermitian(m: &ComplexMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(QmnError::DimensionMismatch { expected: m.rows(), found: m.cols() });
    }
    let dev = m.hermiticity_deviation();
    if dev > HERMITIAN_TOL * m.max_abs().max(f64::MIN_POSITIVE) {
        return Err(QmnError::NotHermitian { deviation: dev });
    }
    Ok(())
}

struct Tridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
    /// Unit-modulus phases turning the complex tridiagonal into a real one.
    phases: Vec<C64>,
    /// Householder vectors; reflector `k` acts on rows `k+1..n`.
    reflectors: Vec<Option<Vec<C64>>>,
}

fn tridiagonalize(m: &ComplexMatrix, keep_reflectors: bool) -> Tridiagonal {
    let n = m.rows();
    let mut a = m.hermitian_part();
    let mut reflectors = Vec::with_capacity(n.saturating_sub(2));
    for k in 0..n.saturating_sub(2) {
        let len = n - k - 1;
        let x: Vec<C64> = (0..len).map(|r| a[(k + 1 + r, k)]).collect();
        let tail: f64 = x[1..].iter().map(|z| z.norm_sqr()).sum();
        if tail == 0.0 {
            reflectors.push(None);
            continue;
        }
        let xnorm = (x[0].norm_sqr() + tail).sqrt();
        let phase = if x[0] == ZERO { ONE } else { x[0] / x[0].norm() };
        let alpha = -phase * xnorm;
        let mut v = x;
        v[0] -= alpha;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in v.iter_mut() {
            *z /= vnorm;
        }
        // p = A22 v
        let off = k + 1;
        let p: Vec<C64> = (0..len)
            .map(|i| a.row(off + i)[off..].iter().zip(&v).map(|(&aij, &vj)| aij * vj).sum())
            .collect();
        let kk: C64 = v.iter().zip(&p).map(|(vi, pi)| vi.conj() * pi).sum();
        let q: Vec<C64> = p.iter().zip(&v).map(|(&pi, &vi)| (pi - vi * kk) * 2.0).collect();
        // A22 -= v q† + q v†
        let cols = n;
        let data = a.as_mut_slice();
        let block = &mut data[off * cols..];
        par::for_each_row(block, cols, |i, row| {
            let (vi, qi) = (v[i], q[i]);
            for (j, x) in row[off..].iter_mut().enumerate() {
                *x -= vi * q[j].conj() + qi * v[j].conj();
            }
        });
        a[(k + 1, k)] = alpha;
        a[(k, k + 1)] = alpha.conj();
        for r in 1..len {
            a[(k + 1 + r, k)] = ZERO;
            a[(k, k + 1 + r)] = ZERO;
        }
        reflectors.push(if keep_reflectors { Some(v) } else { None });
    }
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    let mut off = Vec::with_capacity(n.saturating_sub(1));
    let mut phases = Vec::with_capacity(n);
    if n > 0 {
        phases.push(ONE);
    }
    for k in 0..n.saturating_sub(1) {
        let e = a[(k + 1, k)];
        let r = e.norm();
        off.push(r);
        let next = if r > 0.0 { phases[k] * (e / r) } else { phases[k] };
        phases.push(next);
    }
    Tridiagonal { diag, off, phases, reflectors }
}

/// Implicit QL on a real symmetric tridiagonal. When `zt` is given, its rows
/// accumulate the eigenvectors (row `i` is the eigenvector of `d[i]`).
fn tql(d: &mut [f64], off: &[f64], mut zt: Option<&mut [f64]>) -> Result<()> {
    let n = d.len();
    if n <= 1 {
        return Ok(());
    }
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(off);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_QL_ITERATIONS {
                return Err(QmnError::NoConvergence);
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0f64, 1.0f64, 0.0f64);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = zt.as_deref_mut() {
                    let (lo, hi) = z.split_at_mut((i + 1) * n);
                    let zi = &mut lo[i * n..];
                    let zi1 = &mut hi[..n];
                    for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
                        let f = *b;
                        *b = s * *a + c * f;
                        *a = c * *a - s * f;
                    }
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Full Hermitian eigendecomposition.
pub fn herm_eig(m: &ComplexMatrix) -> Result<HermEig> {
    check_hermitian(m)?;
    if !m.is_finite() {
        return Err(QmnError::NotHermitian { deviation: f64::NAN });
    }
    let n = m.rows();
    let tri = tridiagonalize(m, true);
    let mut d = tri.diag.clone();
    let mut zt = vec![0.0; n * n];
    for i in 0..n {
        zt[i * n + i] = 1.0;
    }
    tql(&mut d, &tri.off, Some(&mut zt))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values: Vec<f64> = order.iter().map(|&i| d[i]).collect();

    // V = Q · D · Z, columns in ascending eigenvalue order
    let mut v = ComplexMatrix::zeros(n, n);
    for r in 0..n {
        let ph = tri.phases[r];
        let row = v.row_mut(r);
        for (col, &src) in order.iter().enumerate() {
            row[col] = ph * zt[src * n + r];
        }
    }
    for (k, refl) in tri.reflectors.iter().enumerate().rev() {
        let Some(h) = refl else { continue };
        let off = k + 1;
        let mut w = vec![ZERO; n];
        for (r, &hr) in h.iter().enumerate() {
            let hc = hr.conj();
            for (wj, &x) in w.iter_mut().zip(v.row(off + r)) {
                *wj += hc * x;
            }
        }
        let data = v.as_mut_slice();
        par::for_each_row(&mut data[off * n..], n, |r, row| {
            let hr = h[r] * 2.0;
            for (x, &wj) in row.iter_mut().zip(&w) {
                *x -= hr * wj;
            }
        });
    }
    Ok(HermEig { values, vectors: v })
}

/// Eigenvalues only, ascending.
pub fn eigvalsh(m: &ComplexMatrix) -> Result<Vec<f64>> {
    check_hermitian(m)?;
    let tri = tridiagonalize(m, false);
    let mut d = tri.diag;
    tql(&mut d, &tri.off, None)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// `f(M)` for Hermitian `M` via its spectral decomposition.
pub fn func_herm(m: &ComplexMatrix, f: impl Fn(f64) -> f64) -> Result<ComplexMatrix> {
    Ok(herm_eig(m)?.apply(f))
}

pub fn expm_herm(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    func_herm(m, f64::exp)
}

/// Matrix logarithm of a positive definite matrix. Fails with
/// `PositivityViolation` when `λ_min <= LOG_FLOOR · λ_max`.
pub fn logm_herm(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = herm_eig(m)?;
    let lmin = eig.values.first().copied().unwrap_or(1.0);
    let lmax = eig.values.last().copied().unwrap_or(1.0);
    if lmax <= 0.0 || lmin <= LOG_FLOOR * lmax {
        return Err(QmnError::PositivityViolation { min_eigenvalue: lmin });
    }
    Ok(eig.apply(f64::ln))
}

/// Orthonormal basis (as columns) of the eigenspace of a positive semidefinite
/// matrix with eigenvalues `<= rel_tol · λ_max`.
pub fn psd_null_space(g: &ComplexMatrix, rel_tol: f64) -> Result<ComplexMatrix> {
    let n = g.rows();
    let eig = herm_eig(g)?;
    let lmax = eig.values.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let cut = rel_tol * lmax.max(f64::MIN_POSITIVE);
    let keep: Vec<usize> = (0..n).filter(|&i| eig.values[i] <= cut).collect();
    Ok(ComplexMatrix::from_fn(n, keep.len(), |r, c| eig.vectors[(r, keep[c])]))
}
