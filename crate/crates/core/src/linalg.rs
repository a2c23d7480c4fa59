//! Orthogonal-factorization helpers shared by the estimators.
//!
//! Every least-squares solve and every projection goes through a
//! column-pivoted Householder QR. `P_Z v` is computed as `Q (Q' v)` so the
//! N x N projection matrix is never formed.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Relative tolerance on the R diagonal below which a column counts as dependent.
pub const RANK_TOL: f64 = 1e-10;

/// Column-pivoted QR factorization `A P = Q R` of a tall full-rank matrix.
#[derive(Debug, Clone)]
pub struct QrFactor {
    q: DMatrix<f64>,
    r: DMatrix<f64>,
    // perm[j] = original column index sitting at pivoted position j
    perm: Vec<usize>,
}

/// Rank reported by a failed factorization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankDeficiency {
    pub rank: usize,
    pub cols: usize,
}

impl QrFactor {
    /// Factorizes `a`, rejecting matrices whose numerical rank is below their
    /// column count. `a` must have at least as many rows as columns.
    pub fn new(a: &DMatrix<f64>) -> Result<Self, RankDeficiency> {
        let (n, k) = a.shape();
        if k == 0 || n < k {
            return Err(RankDeficiency {
                rank: k.min(n),
                cols: k,
            });
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(RankDeficiency { rank: 0, cols: k });
        }
        let qr = a.clone().col_piv_qr();
        let r = qr.r();
        let q = qr.q();

        let mut perm: Vec<usize> = (0..k).collect();
        let mut marker = DMatrix::<f64>::zeros(1, k);
        for (j, v) in marker.iter_mut().enumerate() {
            *v = j as f64;
        }
        qr.p().permute_columns(&mut marker);
        for (j, slot) in perm.iter_mut().enumerate() {
            *slot = marker[(0, j)] as usize;
        }

        let max_diag = (0..k).map(|i| r[(i, i)].abs()).fold(0.0_f64, f64::max);
        let rank = (0..k)
            .filter(|&i| max_diag > 0.0 && r[(i, i)].abs() > RANK_TOL * max_diag)
            .count();
        if rank < k {
            return Err(RankDeficiency { rank, cols: k });
        }
        Ok(Self { q, r, perm })
    }

    pub fn nrows(&self) -> usize {
        self.q.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.r.ncols()
    }

    /// Thin orthonormal basis of the column space (N x K).
    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    /// `P v = Q Q' v` for every column of `v`.
    pub fn project(&self, v: &DMatrix<f64>) -> DMatrix<f64> {
        &self.q * (self.q.transpose() * v)
    }

    pub fn project_vec(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.q * (self.q.tr_mul(v))
    }

    /// `M v = v - P v`.
    pub fn annihilate(&self, v: &DMatrix<f64>) -> DMatrix<f64> {
        v - self.project(v)
    }

    pub fn annihilate_vec(&self, v: &DVector<f64>) -> DVector<f64> {
        v - self.project_vec(v)
    }

    /// Diagonal of the projection matrix, `h_i = ||Q_i||^2`.
    pub fn leverages(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.q.nrows(),
            self.q.row_iter().map(|row| row.norm_squared()),
        )
    }

    /// Least-squares coefficients `argmin ||A c - b||`.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let qtb = self.q.tr_mul(b);
        let c_perm = self
            .r
            .solve_upper_triangular(&qtb)
            .expect("R has a nonzero diagonal after the rank check");
        let mut c = DVector::zeros(c_perm.len());
        for (j, &orig) in self.perm.iter().enumerate() {
            c[orig] = c_perm[j];
        }
        c
    }

    /// Least-squares coefficients for every column of `b`.
    pub fn solve_mat(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.ncols(), b.ncols());
        for (j, col) in b.column_iter().enumerate() {
            out.set_column(j, &self.solve(&col.into_owned()));
        }
        out
    }

    /// `(A'A)^{-1}` assembled from `R^{-1}`.
    pub fn inverse_gram(&self) -> DMatrix<f64> {
        let k = self.ncols();
        let r_inv = self
            .r
            .solve_upper_triangular(&DMatrix::identity(k, k))
            .expect("R has a nonzero diagonal after the rank check");
        let g = &r_inv * r_inv.transpose();
        let mut out = DMatrix::zeros(k, k);
        for a in 0..k {
            for b in 0..k {
                out[(self.perm[a], self.perm[b])] = g[(a, b)];
            }
        }
        out
    }
}

/// Solves the small square system `a x = b`, failing when `a` is numerically
/// singular (condition number above `1 / RANK_TOL`-ish via singular values).
pub fn solve_small(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    if !is_well_conditioned(a) {
        return None;
    }
    a.clone().lu().solve(b)
}

pub fn inverse_small(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    if !is_well_conditioned(a) {
        return None;
    }
    a.clone().try_inverse()
}

fn is_well_conditioned(a: &DMatrix<f64>) -> bool {
    if a.iter().any(|v| !v.is_finite()) {
        return false;
    }
    let sv = a.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    max > 0.0 && min > 1e-13 * max
}

/// Symmetric inverse square root `S^{-1/2}` of a positive-definite matrix.
/// Returns the smallest eigenvalue on failure.
pub fn inv_sqrt_spd(s: &DMatrix<f64>) -> Result<DMatrix<f64>, f64> {
    let sym = (s + s.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if !(max > 0.0) || min <= 1e-12 * max {
        return Err(min);
    }
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
    Ok(&eig.eigenvectors * d * eig.eigenvectors.transpose())
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue_sym(s: &DMatrix<f64>) -> f64 {
    let sym = (s + s.transpose()) * 0.5;
    SymmetricEigen::new(sym).eigenvalues.min()
}

/// Selects a subset of columns into a new matrix.
pub fn columns(a: &DMatrix<f64>, range: std::ops::Range<usize>) -> DMatrix<f64> {
    a.columns(range.start, range.len()).into_owned()
}

/// Drops row `i`.
pub fn without_row(a: &DMatrix<f64>, i: usize) -> DMatrix<f64> {
    a.clone().remove_row(i)
}
