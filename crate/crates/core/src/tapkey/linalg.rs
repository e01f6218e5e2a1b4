//! Householder QR with column pivoting, returning the full orthogonal factor.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct PivotedQr {
    /// Orthogonal, `m × m`.
    pub q: DMatrix<f64>,
    /// Upper trapezoidal, `m × n`, columns in pivot order.
    pub r: DMatrix<f64>,
    /// `perm[j]` is the original index of column `j` of `r`.
    pub perm: Vec<usize>,
    pub rank: usize,
}

/// Factorizes `a · P = q · r`. Columns whose remaining norm drops below
/// `tol` (relative to the largest column norm) count as dependent.
pub fn pivoted_qr(a: &DMatrix<f64>, tol: f64) -> PivotedQr {
    let (m, n) = a.shape();
    let mut r = a.clone();
    let mut q = DMatrix::<f64>::identity(m, m);
    let mut perm: Vec<usize> = (0..n).collect();
    let scale = (0..n).map(|c| r.column(c).norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut rank = 0;

    for j in 0..m.min(n) {
        let (p, best) = (j..n).map(|c| (c, r.view((j, c), (m - j, 1)).norm())).fold((j, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best <= tol * scale {
            break;
        }
        r.swap_columns(j, p);
        perm.swap(j, p);

        let x: DVector<f64> = r.view((j, j), (m - j, 1)).column(0).into_owned();
        let alpha = if x[0] >= 0.0 { -best } else { best };
        let mut v = x;
        v[0] -= alpha;
        let vn = v.norm();
        if vn > 0.0 {
            v /= vn;
            // r[j.., j..] -= 2 v (vᵀ r[j.., j..])
            let mut block = r.view_mut((j, j), (m - j, n - j));
            let proj = v.transpose() * &block;
            block -= 2.0 * &v * proj;
            // q[:, j..] -= 2 (q[:, j..] v) vᵀ
            let mut qb = q.view_mut((0, j), (m, m - j));
            let qv = &qb * &v;
            qb -= 2.0 * qv * v.transpose();
        }
        for i in j + 1..m {
            r[(i, j)] = 0.0;
        }
        rank += 1;
    }
    PivotedQr { q, r, perm, rank }
}

/// Orthonormal basis of the complement of `a`'s column space, as columns.
pub fn complement_basis(a: &DMatrix<f64>, tol: f64) -> (DMatrix<f64>, usize) {
    let qr = pivoted_qr(a, tol);
    let m = a.nrows();
    (qr.q.columns(qr.rank, m - qr.rank).into_owned(), qr.rank)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn check(a: &DMatrix<f64>) {
        let qr = pivoted_qr(a, 1e-12);
        let m = a.nrows();
        assert!((qr.q.transpose() * &qr.q - DMatrix::identity(m, m)).norm() < 1e-10);
        let mut ap = DMatrix::zeros(m, a.ncols());
        for (j, &c) in qr.perm.iter().enumerate() {
            ap.set_column(j, &a.column(c));
        }
        assert!((&qr.q * &qr.r - ap).norm() < 1e-10);
    }

    #[test]
    fn axis_aligned_complement() {
        let a = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        let (m, rank) = complement_basis(&a, 1e-12);
        assert_eq!(rank, 1);
        assert_eq!(m.ncols(), 2);
        assert!((m.transpose() * &a).norm() < 1e-12);
        assert!(m.row(0).norm() < 1e-12);
    }

    #[test]
    fn rank_deficient_input() {
        let a = DMatrix::from_column_slice(4, 3, &[1.0, 2.0, 0.0, 0.0, 2.0, 4.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let (m, rank) = complement_basis(&a, 1e-12);
        assert_eq!(rank, 2);
        assert_eq!(m.ncols(), 2);
        assert!((m.transpose() * &a).norm() < 1e-10);
        check(&a);
        check(&DMatrix::zeros(3, 2));
    }

    proptest! {
        #[test]
        fn factorization_holds(m in 1usize..9, n in 1usize..6, seed in proptest::collection::vec(-3.0f64..3.0, 60)) {
            let a = DMatrix::from_fn(m, n, |i, j| seed[(i * 7 + j * 3) % 60]);
            check(&a);
        }
    }
}
