#![allow(dead_code)]

use ivkit::simulation::seeded_rng;
use ivkit::IvDataset;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

/// Random single-endogenous design: `m` exogenous columns (intercept first),
/// `k_excl` excluded instruments, first-stage coefficients of size `pi`,
/// error correlation `rho`.
pub fn random_design(seed: u64, n: usize, m: usize, k_excl: usize, pi: f64, rho: f64) -> IvDataset {
    let mut rng = seeded_rng(seed);
    let mut z = DMatrix::from_element(n, m + k_excl, 1.0);
    for i in 0..n {
        for j in 1..m + k_excl {
            z[(i, j)] = rng.sample(StandardNormal);
        }
    }
    let coef: Vec<f64> = (0..m + k_excl)
        .map(|j| {
            if j < m {
                rng.random_range(-1.0..1.0)
            } else {
                pi * rng.random_range(0.5..1.5)
            }
        })
        .collect();
    let beta: Vec<f64> = (0..=m).map(|_| rng.random_range(-2.0..2.0)).collect();
    let mut x = DMatrix::zeros(n, m + 1);
    let mut y = DVector::zeros(n);
    for i in 0..n {
        let u1: f64 = rng.sample(StandardNormal);
        let u2: f64 = rng.sample(StandardNormal);
        let eps = u1;
        let eta = rho * u1 + (1.0 - rho * rho).sqrt() * u2;
        let mut xi = eta;
        for j in 0..m + k_excl {
            xi += z[(i, j)] * coef[j];
        }
        for j in 0..m {
            x[(i, j)] = z[(i, j)];
        }
        x[(i, m)] = xi;
        let mut yi = eps;
        for j in 0..=m {
            yi += x[(i, j)] * beta[j];
        }
        y[i] = yi;
    }
    IvDataset::new(y, x, z, m).expect("random design is well posed")
}

/// `I - A (A'A)^{-1} A'` as a dense matrix.
pub fn dense_annihilator(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let gram_inv = (a.transpose() * a).try_inverse().expect("full rank");
    DMatrix::identity(n, n) - a * gram_inv * a.transpose()
}

pub fn dense_projection(a: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::identity(a.nrows(), a.nrows()) - dense_annihilator(a)
}
