//! Seeded random matrices for tests, benches and model generators.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::tensor::matrix::{ComplexMatrix, C64, ZERO};

pub type QmnRng = ChaCha8Rng;

pub fn rng(seed: u64) -> QmnRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn complex_normal<R: Rng + ?Sized>(r: &mut R) -> C64 {
    let re: f64 = r.sample(StandardNormal);
    let im: f64 = r.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Ginibre matrix with unit-variance complex normal entries.
pub fn random_complex<R: Rng + ?Sized>(r: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_normal(r))
}

pub fn random_hermitian<R: Rng + ?Sized>(r: &mut R, n: usize) -> ComplexMatrix {
    random_complex(r, n, n).hermitian_part()
}

/// Real diagonal matrix with standard normal entries.
pub fn random_real_diagonal<R: Rng + ?Sized>(r: &mut R, n: usize) -> ComplexMatrix {
    let d: Vec<f64> = (0..n).map(|_| r.sample(StandardNormal)).collect();
    ComplexMatrix::from_real_diagonal(&d)
}

/// Haar-distributed unitary (Gram–Schmidt on a Ginibre matrix).
pub fn random_unitary<R: Rng + ?Sized>(r: &mut R, n: usize) -> ComplexMatrix {
    let g = random_complex(r, n, n);
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(n);
    for j in 0..n {
        let mut v: Vec<C64> = (0..n).map(|i| g[(i, j)]).collect();
        for _ in 0..2 {
            for q in &cols {
                let proj: C64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (x, y) in v.iter_mut().zip(q) {
                    *x -= proj * y;
                }
            }
        }
        let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        cols.push(v);
    }
    ComplexMatrix::from_fn(n, n, |i, j| cols[j][i])
}

/// Full-rank density matrix `G G† / Tr(G G†)`.
pub fn random_density<R: Rng + ?Sized>(r: &mut R, n: usize) -> ComplexMatrix {
    let g = random_complex(r, n, n);
    let p = g.matmul(&g.adjoint());
    let tr = p.trace().re;
    p.scale_real(1.0 / tr).hermitian_part()
}

/// Diagonal density matrix with a random probability vector.
pub fn random_diagonal_density<R: Rng + ?Sized>(r: &mut R, n: usize) -> ComplexMatrix {
    let w: Vec<f64> = (0..n).map(|_| r.gen::<f64>() + 1e-3).collect();
    let s: f64 = w.iter().sum();
    ComplexMatrix::from_real_diagonal(&w.iter().map(|x| x / s).collect::<Vec<_>>())
}

/// Random unit vector.
pub fn random_state<R: Rng + ?Sized>(r: &mut R, n: usize) -> Vec<C64> {
    let mut v: Vec<C64> = (0..n).map(|_| complex_normal(r)).collect();
    let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    if norm == 0.0 {
        v = vec![ZERO; n];
    }
    v
}
