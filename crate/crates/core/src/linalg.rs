//! Small dense complex linear-algebra toolkit on top of `nalgebra`.

use nalgebra::Cholesky;

use crate::{CMatrix, CVector, Error, Result, C64};

pub fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

pub fn one() -> C64 {
    C64::new(1.0, 0.0)
}

/// `exp(j·theta)`.
pub fn cis(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}

/// Column-major vectorization.
pub fn vec_col_major(m: &CMatrix) -> CVector {
    CVector::from_column_slice(m.as_slice())
}

/// Inverse of [`vec_col_major`].
pub fn unvec(v: &CVector, rows: usize, cols: usize) -> Result<CMatrix> {
    if v.len() != rows * cols {
        return Err(Error::Dimension(format!(
            "cannot reshape vector of length {} into {}x{}",
            v.len(),
            rows,
            cols
        )));
    }
    Ok(CMatrix::from_column_slice(rows, cols, v.as_slice()))
}

pub fn frobenius_sq(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

pub fn norm_sq(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Kronecker product of two row vectors given as slices: entry `i*b.len()+j = a[i]*b[j]`.
pub fn kron_row(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &ai in a {
        out.extend(b.iter().map(|&bj| ai * bj));
    }
    out
}

/// First `rows` rows of the unnormalized `size`-point DFT matrix,
/// entry `(r, c) = exp(-j 2π r c / size)`. All entries have unit modulus.
pub fn dft_rows(rows: usize, size: usize) -> CMatrix {
    CMatrix::from_fn(rows, size, |r, c| {
        let phase = -2.0 * std::f64::consts::PI * ((r * c) % size) as f64 / size as f64;
        cis(phase)
    })
}

/// Max absolute entry of `m - c·I` divided by `|c|`, where `c` is the mean diagonal.
/// Returns `(c, relative_deviation)`.
pub fn scaled_identity_deviation(m: &CMatrix) -> (f64, f64) {
    let n = m.nrows().min(m.ncols());
    let c = (0..n).map(|i| m[(i, i)].re).sum::<f64>() / n as f64;
    let mut worst = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let target = if i == j { C64::new(c, 0.0) } else { zero() };
            worst = worst.max((m[(i, j)] - target).norm());
        }
    }
    (c, worst / c.abs().max(f64::MIN_POSITIVE))
}

/// Singular value decomposition with singular values sorted in decreasing order.
pub struct SortedSvd {
    pub u: CMatrix,
    pub singular_values: Vec<f64>,
    /// Right singular vectors as columns (i.e. `V`, not `V^*`).
    pub v: CMatrix,
}

pub fn sorted_svd(m: &CMatrix) -> Result<SortedSvd> {
    let svd = m.clone().svd(true, true);
    let u = svd
        .u
        .ok_or_else(|| Error::Numerical("SVD did not return U".into()))?;
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Numerical("SVD did not return V^*".into()))?;
    let s = svd.singular_values;
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
    let u_sorted = CMatrix::from_fn(u.nrows(), order.len(), |r, c| u[(r, order[c])]);
    let v = v_t.adjoint();
    let v_sorted = CMatrix::from_fn(v.nrows(), order.len(), |r, c| v[(r, order[c])]);
    Ok(SortedSvd {
        u: u_sorted,
        singular_values: order.iter().map(|&i| s[i]).collect(),
        v: v_sorted,
    })
}

/// `log2 det(I + X)` for a Hermitian positive semidefinite `X`.
pub fn log2_det_identity_plus(x: &CMatrix) -> Result<f64> {
    if x.nrows() != x.ncols() {
        return Err(Error::Dimension("log-det needs a square matrix".into()));
    }
    let n = x.nrows();
    let mut m = CMatrix::identity(n, n);
    for j in 0..n {
        for i in 0..n {
            m[(i, j)] += 0.5 * (x[(i, j)] + x[(j, i)].conj());
        }
    }
    let chol = Cholesky::new(m)
        .ok_or_else(|| Error::Numerical("I + X is not positive definite".into()))?;
    let l = chol.l_dirty();
    Ok((0..n).map(|i| 2.0 * l[(i, i)].re.log2()).sum())
}

/// Solves `A X = B` for Hermitian positive definite `A`.
pub fn solve_hpd(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    let chol = Cholesky::new(a.clone())
        .ok_or_else(|| Error::RankDeficient(format!("{}x{} Gram matrix is singular", a.nrows(), a.ncols())))?;
    Ok(chol.solve(b))
}

/// Incrementally built thin QR factorization (modified Gram-Schmidt with one
/// re-orthogonalization pass). Used by the greedy pursuit algorithms.
#[derive(Clone, Debug, Default)]
pub struct IncrementalQr {
    q: Vec<CVector>,
    // r[j] holds column j of R (length j + 1).
    r: Vec<Vec<C64>>,
}

impl IncrementalQr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rank(&self) -> usize {
        self.q.len()
    }

    pub fn basis(&self) -> &[CVector] {
        &self.q
    }

    /// Norm of the component of `a` orthogonal to the current span.
    pub fn orthogonal_residual_norm(&self, a: &CVector) -> f64 {
        let (v, _) = self.orthogonalize(a);
        v.norm()
    }

    fn orthogonalize(&self, a: &CVector) -> (CVector, Vec<C64>) {
        let mut v = a.clone();
        let mut coeffs = vec![zero(); self.q.len()];
        for _pass in 0..2 {
            for (i, qi) in self.q.iter().enumerate() {
                let c = qi.dotc(&v);
                v.axpy(-c, qi, one());
                coeffs[i] += c;
            }
        }
        (v, coeffs)
    }

    /// Appends a column. Returns `false` (leaving the factorization unchanged)
    /// when the column is numerically dependent on the current span.
    pub fn push(&mut self, a: &CVector, rel_tol: f64) -> bool {
        let a_norm = a.norm();
        if a_norm == 0.0 {
            return false;
        }
        let (v, mut coeffs) = self.orthogonalize(a);
        let v_norm = v.norm();
        if v_norm <= rel_tol * a_norm {
            return false;
        }
        self.q.push(v.unscale(v_norm));
        coeffs.push(C64::new(v_norm, 0.0));
        self.r.push(coeffs);
        true
    }

    /// Least-squares coefficients of `y` on the pushed columns and the residual `y - A c`.
    pub fn solve(&self, y: &CVector) -> (Vec<C64>, CVector) {
        let (resid, proj) = self.orthogonalize(y);
        let k = self.q.len();
        let mut x = vec![zero(); k];
        for i in (0..k).rev() {
            let mut acc = proj[i];
            for j in (i + 1)..k {
                acc -= self.r[j][i] * x[j];
            }
            x[i] = acc / self.r[i][i];
        }
        (x, resid)
    }
}

/// Orthonormal basis of the column space of `w`; errors when `w` is rank deficient.
pub fn orthonormal_basis(w: &CMatrix) -> Result<CMatrix> {
    let mut qr = IncrementalQr::new();
    for j in 0..w.ncols() {
        let col = w.column(j).into_owned();
        if !qr.push(&col, 1e-10) {
            return Err(Error::RankDeficient(format!(
                "column {} of the {}x{} matrix is linearly dependent",
                j,
                w.nrows(),
                w.ncols()
            )));
        }
    }
    let cols: Vec<CVector> = qr.basis().to_vec();
    Ok(CMatrix::from_columns(&cols))
}

/// Least squares on the columns of `a`: returns the coefficient vector.
pub fn least_squares(a: &CMatrix, y: &CVector) -> Result<CVector> {
    let mut qr = IncrementalQr::new();
    for j in 0..a.ncols() {
        if !qr.push(&a.column(j).into_owned(), 1e-12) {
            return Err(Error::RankDeficient(format!("least-squares column {j} is dependent")));
        }
    }
    let (x, _) = qr.solve(y);
    Ok(CVector::from_vec(x))
}

/// Serializes a complex number as `[re, im]`.
pub mod serde_c64 {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::C64;

    pub fn serialize<S: Serializer>(z: &C64, s: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(C64::new(re, im))
    }
}

/// Serializes a complex matrix as a row-major nested array of `[re, im]` pairs.
pub mod serde_cmatrix {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::{CMatrix, C64};

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
            .collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMatrix, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(D::Error::custom("ragged matrix rows"));
        }
        Ok(CMatrix::from_fn(nrows, ncols, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
    }
}

/// Serializes a complex vector as an array of `[re, im]` pairs.
pub mod serde_cvector {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::{CVector, C64};

    pub fn serialize<S: Serializer>(v: &CVector, s: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = v.iter().map(|z| [z.re, z.im]).collect();
        pairs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CVector, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(CVector::from_iterator(pairs.len(), pairs.into_iter().map(|[re, im]| C64::new(re, im))))
    }
}

/// Serializes a list of complex matrices with [`serde_cmatrix`].
pub mod serde_cmatrix_vec {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::CMatrix;

    #[derive(Serialize, Deserialize)]
    struct Wrapped(#[serde(with = "super::serde_cmatrix")] CMatrix);

    pub fn serialize<S: Serializer>(v: &[CMatrix], s: S) -> Result<S::Ok, S::Error> {
        let w: Vec<Wrapped> = v.iter().cloned().map(Wrapped).collect();
        w.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<CMatrix>, D::Error> {
        Ok(Vec::<Wrapped>::deserialize(d)?.into_iter().map(|w| w.0).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_serde_round_trip() {
        #[derive(serde::Serialize, serde::Deserialize)]
        struct W(#[serde(with = "serde_cmatrix")] CMatrix);
        let m = CMatrix::from_fn(2, 3, |i, j| C64::new(i as f64, -(j as f64)));
        let s = serde_json::to_string(&W(m.clone())).unwrap();
        let back: W = serde_json::from_str(&s).unwrap();
        assert_eq!(back.0, m);
    }

    #[test]
    fn incremental_qr_matches_normal_equations() {
        let a = CMatrix::from_fn(6, 3, |i, j| C64::new((i * 3 + j) as f64 % 5.0 - 1.0, (i + 2 * j) as f64 % 3.0));
        let y = CVector::from_fn(6, |i, _| C64::new(i as f64, 1.0 - i as f64));
        let x = least_squares(&a, &y).unwrap();
        let gram = a.adjoint() * &a;
        let rhs = a.adjoint() * &y;
        let x_ne = solve_hpd(&gram, &CMatrix::from_column_slice(3, 1, rhs.as_slice())).unwrap();
        for i in 0..3 {
            assert!((x[i] - x_ne[(i, 0)]).norm() < 1e-10);
        }
    }

    #[test]
    fn dependent_column_is_rejected() {
        let mut qr = IncrementalQr::new();
        let a = CVector::from_vec(vec![one(), C64::new(0.0, 1.0), zero()]);
        assert!(qr.push(&a, 1e-10));
        assert!(!qr.push(&(a.clone() * C64::new(2.0, -1.0)), 1e-10));
        assert_eq!(qr.rank(), 1);
    }

    #[test]
    fn log_det_of_diagonal() {
        let x = CMatrix::from_diagonal(&CVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(3.0, 0.0)]));
        let v = log2_det_identity_plus(&x).unwrap();
        assert!((v - (2.0f64.log2() + 4.0f64.log2())).abs() < 1e-12);
    }

    #[test]
    fn sorted_svd_is_descending_and_reconstructs() {
        let m = CMatrix::from_fn(4, 3, |i, j| C64::new((i as f64 - j as f64).sin(), (i * j) as f64 * 0.3));
        let svd = sorted_svd(&m).unwrap();
        assert!(svd.singular_values.windows(2).all(|w| w[0] >= w[1]));
        let s = CMatrix::from_diagonal(&CVector::from_iterator(
            3,
            svd.singular_values.iter().map(|&x| C64::new(x, 0.0)),
        ));
        let rec = &svd.u.columns(0, 3) * s * svd.v.adjoint();
        assert!(frobenius_sq(&(rec - m)) < 1e-20);
    }

    #[test]
    fn unvec_inverts_vec() {
        let m = CMatrix::from_fn(3, 2, |i, j| C64::new(i as f64, j as f64));
        assert_eq!(unvec(&vec_col_major(&m), 3, 2).unwrap(), m);
        assert!(unvec(&vec_col_major(&m), 2, 2).is_err());
    }
}
