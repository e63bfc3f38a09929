//! Small dense helpers shared across modules.
//!
//! [`jacobi_eigenvalues`] is deliberately separate from the nalgebra routines
//! used inside the interior-point solver: certificate verification must not
//! reuse the solver's numerical path.

use nalgebra::DMatrix;

/// `(A + Aᵀ) / 2`
pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// `He(A) = A + Aᵀ`
pub fn he(a: &DMatrix<f64>) -> DMatrix<f64> {
    a + a.transpose()
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
///
/// Only the lower triangle is trusted; the matrix is symmetrized first.
pub fn jacobi_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "jacobi_eigenvalues needs a square matrix");
    let mut m = symmetrize(a);
    let scale = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if n == 0 {
        return Vec::new();
    }
    if scale == 0.0 {
        return vec![0.0; n];
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum();
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
    eig.sort_by(|a, b| a.total_cmp(b));
    eig
}

pub fn min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    jacobi_eigenvalues(a).first().copied().unwrap_or(f64::INFINITY)
}

pub fn max_eigenvalue(a: &DMatrix<f64>) -> f64 {
    jacobi_eigenvalues(a).last().copied().unwrap_or(f64::NEG_INFINITY)
}

/// Row-major nested vectors, the JSON matrix layout used throughout.
pub fn to_rows(a: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..a.nrows()).map(|i| a.row(i).iter().copied().collect()).collect()
}

/// Inverse of [`to_rows`]; `None` when rows are ragged.
pub fn from_rows(rows: &[Vec<f64>]) -> Option<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return None;
    }
    Some(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

/// serde adapter storing a `DMatrix<f64>` as row-major nested arrays.
pub mod matrix_rows {
    use nalgebra::DMatrix;
    use serde::{de::Error as _, Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        super::to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        super::from_rows(&rows).ok_or_else(|| D::Error::custom("ragged matrix rows"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn jacobi_agrees_with_nalgebra() {
        let a = DMatrix::from_row_slice(
            4,
            4,
            &[4.0, 1.0, -2.0, 0.5, 1.0, 3.0, 0.0, 1.5, -2.0, 0.0, -1.0, 2.0, 0.5, 1.5, 2.0, 0.0],
        );
        let ours = jacobi_eigenvalues(&a);
        let mut theirs: Vec<f64> = a.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        theirs.sort_by(|a, b| a.total_cmp(b));
        for (x, y) in ours.iter().zip(&theirs) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn jacobi_diagonal_and_zero() {
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, -1.0, 2.0]));
        assert_eq!(jacobi_eigenvalues(&d), vec![-1.0, 2.0, 3.0]);
        assert_eq!(jacobi_eigenvalues(&DMatrix::zeros(2, 2)), vec![0.0, 0.0]);
    }

    #[test]
    fn rows_round_trip() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(from_rows(&to_rows(&a)).unwrap(), a);
        assert!(from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_none());
    }
}
