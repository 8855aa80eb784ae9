//! Small dense linear-algebra helpers shared across modules.

use nalgebra::{DMatrix, DVector};

use crate::error::{PhsError, Result};

/// Symmetric part `(m + mᵀ)/2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Smallest eigenvalue of the symmetric part of `m`.
pub fn min_symmetric_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let sym = symmetrize(m);
    let eig = sym.symmetric_eigen();
    eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Numerical rank from singular values, with the usual
/// `max(rows, cols) * eps * sigma_max` threshold.
pub fn rank(m: &DMatrix<f64>) -> usize {
    let svd = m.clone().svd(false, false);
    let smax = svd
        .singular_values
        .iter()
        .cloned()
        .fold(0.0_f64, f64::max);
    if smax == 0.0 {
        return 0;
    }
    let tol = smax * f64::EPSILON * m.nrows().max(m.ncols()) as f64;
    svd.singular_values.iter().filter(|s| **s > tol).count()
}

/// Frobenius norm (alias for nalgebra's matrix norm, named for clarity at
/// call sites that implement Frobenius-criterion formulas).
pub fn frobenius_norm(m: &DMatrix<f64>) -> f64 {
    m.norm()
}

/// Extends the orthonormal columns of `u1` (p×r) to a full orthonormal
/// basis of R^p and returns the complement block `u2` (p×(p−r)).
///
/// Uses modified Gram–Schmidt with one re-orthogonalization pass over the
/// standard basis vectors.
pub fn orthonormal_complement(u1: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = u1.nrows();
    let r = u1.ncols();
    if r > p {
        return Err(PhsError::Dimension(format!(
            "cannot complement {r} columns in dimension {p}"
        )));
    }
    let basis: Vec<DVector<f64>> = (0..r).map(|j| u1.column(j).into_owned()).collect();
    let mut complement: Vec<DVector<f64>> = Vec::with_capacity(p - r);
    for j in 0..p {
        if complement.len() == p - r {
            break;
        }
        let mut v = DVector::zeros(p);
        v[j] = 1.0;
        for _ in 0..2 {
            for b in basis.iter().chain(complement.iter()) {
                let proj = b.dot(&v);
                v -= b * proj;
            }
        }
        let norm = v.norm();
        if norm > 1e-8 {
            complement.push(v / norm);
        }
    }
    if complement.len() != p - r {
        return Err(PhsError::Numeric(
            "orthonormal completion failed: input columns not orthonormal".into(),
        ));
    }
    let mut u2 = DMatrix::zeros(p, p - r);
    for (j, v) in complement.iter().enumerate() {
        u2.set_column(j, v);
    }
    Ok(u2)
}

/// Block-diagonal matrix from a list of square blocks.
pub fn block_diag(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let dim: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(dim, dim);
    let mut offset = 0;
    for b in blocks {
        out.view_mut((offset, offset), (b.nrows(), b.ncols()))
            .copy_from(*b);
        offset += b.nrows();
    }
    out
}

/// Row-major nested-array (de)serialization for `DMatrix<f64>`, the wire
/// format used by every JSON artifact in this crate.
pub mod serde_matrix {
    use nalgebra::DMatrix;
    use serde::de::Error as DeError;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
            .collect();
        serde::Serialize::serialize(&rows, ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        de: D,
    ) -> std::result::Result<DMatrix<f64>, D::Error> {
        let rows: Vec<Vec<f64>> = Deserialize::deserialize(de)?;
        rows_to_matrix(&rows).map_err(D::Error::custom)
    }

    pub fn rows_to_matrix(rows: &[Vec<f64>]) -> std::result::Result<DMatrix<f64>, String> {
        if rows.is_empty() {
            return Ok(DMatrix::zeros(0, 0));
        }
        let ncols = rows[0].len();
        if rows.iter().any(|r| r.len() != ncols) {
            return Err("ragged matrix rows".into());
        }
        Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
    }

    pub fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
        (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
            .collect()
    }
}

/// Plain-array (de)serialization for `DVector<f64>`.
pub mod serde_vector {
    use nalgebra::DVector;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &DVector<f64>, ser: S) -> std::result::Result<S::Ok, S::Error> {
        serde::Serialize::serialize(&v.as_slice().to_vec(), ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        de: D,
    ) -> std::result::Result<DVector<f64>, D::Error> {
        let data: Vec<f64> = Deserialize::deserialize(de)?;
        Ok(DVector::from_vec(data))
    }
}
