//! Small dense real-matrix kernel: singular values, operator norms,
//! compound (exterior-power) matrices, and the singular value function.
//!
//! Everything here is deterministic: the Jacobi SVD uses a fixed sweep
//! order and converges to bit-identical results across runs and worker
//! counts, which the rest of the crate relies on for reproducibility.

use crate::error::{Error, Result};

/// Relative threshold under which a singular value counts as zero when
/// computing numeric rank: `sigma_j < RANK_REL_TOL * sigma_1`.
pub const RANK_REL_TOL: f64 = 1e-12;

const JACOBI_EPS: f64 = 1e-15;
const JACOBI_MAX_SWEEPS: usize = 64;

/// Dense row-major matrix of finite `f64` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Build a matrix from row-major entries, validating shape and finiteness.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("matrix dimensions must be positive"));
        }
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "entry count {} does not match {}x{}",
                data.len(),
                rows,
                cols
            )));
        }
        if !data.iter().all(|x| x.is_finite()) {
            return Err(Error::invalid("matrix entries must be finite"));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Build from nested rows; all rows must have equal length.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::invalid("matrix needs at least one row"));
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::invalid("ragged rows"));
        }
        let data: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Matrix::new(rows.len(), cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Matrix::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    /// Matrix product `self * other`.
    pub fn mul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::invalid(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self.data[i * self.cols + k];
                if aik == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += aik * other.data[k * other.cols + j];
                }
            }
        }
        Ok(out)
    }

    /// Matrix-vector product.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::invalid("vector length does not match matrix columns"));
        }
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            out[i] = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
        Ok(out)
    }

    pub fn scale(&self, c: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * c).collect(),
        }
    }

    /// Kronecker product `self (x) other`.
    pub fn kron(&self, other: &Matrix) -> Matrix {
        let (p, q) = (self.rows, self.cols);
        let (r, s) = (other.rows, other.cols);
        let mut out = Matrix::zeros(p * r, q * s);
        for i in 0..p {
            for j in 0..q {
                let aij = self.data[i * q + j];
                for k in 0..r {
                    for l in 0..s {
                        out.data[(i * r + k) * (q * s) + (j * s + l)] = aij * other.data[k * s + l];
                    }
                }
            }
        }
        out
    }

    /// Euclidean operator norm, i.e. the top singular value.
    pub fn op_norm(&self) -> f64 {
        singular_values(self).map(|s| s.values[0]).unwrap_or(f64::NAN)
    }
}

/// Singular values sorted descending; length `min(rows, cols)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularSpectrum {
    values: Vec<f64>,
}

impl SingularSpectrum {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Numeric rank at the relative threshold [`RANK_REL_TOL`].
    pub fn rank(&self) -> usize {
        let top = self.values[0];
        if top == 0.0 {
            return 0;
        }
        self.values.iter().filter(|&&s| s >= RANK_REL_TOL * top).count()
    }

    /// Singular value function evaluated on this spectrum.
    ///
    /// For `s` in `[k, k+1]` this is `sigma_1 ... sigma_k * sigma_{k+1}^{s-k}`,
    /// continuous in `s` with `svf(0) = 1`. Returns 0 when `s` exceeds the
    /// numeric rank and the interpolating singular value vanishes.
    pub fn svf(&self, s: f64) -> Result<f64> {
        Ok(self.log_svf(s)?.exp())
    }

    /// Natural logarithm of the singular value function; `-inf` when the value is 0.
    pub fn log_svf(&self, s: f64) -> Result<f64> {
        let d = self.values.len() as f64;
        if !(0.0..=d).contains(&s) {
            return Err(Error::domain(format!(
                "s = {s} outside [0, {d}] for this spectrum"
            )));
        }
        Ok(log_svf_raw(&self.values, s))
    }
}

/// `log svf` on a raw descending spectrum, without domain checks.
pub(crate) fn log_svf_raw(sv: &[f64], s: f64) -> f64 {
    let k = s.floor() as usize;
    let frac = s - k as f64;
    let mut acc = 0.0;
    for &sigma in &sv[..k.min(sv.len())] {
        if sigma == 0.0 {
            return f64::NEG_INFINITY;
        }
        acc += sigma.ln();
    }
    if frac > 0.0 {
        let sigma = sv[k];
        if sigma == 0.0 {
            return f64::NEG_INFINITY;
        }
        acc += frac * sigma.ln();
    }
    acc
}

/// Singular values of a dense matrix via one-sided Jacobi orthogonalization.
///
/// Deterministic cyclic sweep order; high relative accuracy for the small
/// singular values, which the compound-matrix and rank checks depend on.
pub fn singular_values(m: &Matrix) -> Result<SingularSpectrum> {
    if !m.data.iter().all(|x| x.is_finite()) {
        return Err(Error::invalid("matrix entries must be finite"));
    }
    // one-sided Jacobi wants rows >= cols; singular values are transpose-invariant
    let work;
    let (a, rows, cols) = if m.rows >= m.cols {
        (&m.data, m.rows, m.cols)
    } else {
        work = m.transpose();
        (&work.data, m.cols, m.rows)
    };
    let mut buf = a.clone();
    let mut values = vec![0.0; cols];
    jacobi_singular_values(&mut buf, rows, cols, &mut values);
    Ok(SingularSpectrum { values })
}

/// Core one-sided Jacobi loop on a row-major `rows x cols` buffer, `rows >= cols`.
/// Overwrites `buf`; writes the descending spectrum into `sv`.
pub(crate) fn jacobi_singular_values(buf: &mut [f64], rows: usize, cols: usize, sv: &mut [f64]) {
    debug_assert!(rows >= cols);
    debug_assert_eq!(buf.len(), rows * cols);
    debug_assert_eq!(sv.len(), cols);

    let col_dot = |b: &[f64], p: usize, q: usize| -> f64 {
        let mut acc = 0.0;
        for i in 0..rows {
            acc += b[i * cols + p] * b[i * cols + q];
        }
        acc
    };

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols.saturating_sub(1) {
            for q in (p + 1)..cols {
                let app = col_dot(buf, p, p);
                let aqq = col_dot(buf, q, q);
                let apq = col_dot(buf, p, q);
                if apq == 0.0 || app == 0.0 || aqq == 0.0 {
                    continue;
                }
                if apq.abs() <= JACOBI_EPS * (app * aqq).sqrt() {
                    continue;
                }
                let tau = (aqq - app) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..rows {
                    let aip = buf[i * cols + p];
                    let aiq = buf[i * cols + q];
                    buf[i * cols + p] = c * aip - s * aiq;
                    buf[i * cols + q] = s * aip + c * aiq;
                }
                rotated = true;
            }
        }
        if !rotated {
            break;
        }
    }

    for j in 0..cols {
        sv[j] = col_dot(buf, j, j).sqrt();
    }
    sv.sort_unstable_by(|a, b| b.total_cmp(a));
}

/// `out = a * b` for square `n x n` row-major buffers; no allocation.
pub(crate) fn matmul_into(out: &mut [f64], a: &[f64], b: &[f64], n: usize) {
    out.fill(0.0);
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            let (row_out, row_b) = (&mut out[i * n..(i + 1) * n], &b[k * n..(k + 1) * n]);
            for j in 0..n {
                row_out[j] += aik * row_b[j];
            }
        }
    }
}

/// Determinant of a square `n x n` row-major buffer via in-place LU with
/// partial pivoting. Destroys the buffer.
pub(crate) fn det_in_place(buf: &mut [f64], n: usize) -> f64 {
    let mut sign = 1.0;
    for k in 0..n {
        // pivot
        let mut piv = k;
        let mut best = buf[k * n + k].abs();
        for i in (k + 1)..n {
            let v = buf[i * n + k].abs();
            if v > best {
                best = v;
                piv = i;
            }
        }
        if best == 0.0 {
            return 0.0;
        }
        if piv != k {
            for j in 0..n {
                buf.swap(k * n + j, piv * n + j);
            }
            sign = -sign;
        }
        let pivot = buf[k * n + k];
        for i in (k + 1)..n {
            let f = buf[i * n + k] / pivot;
            if f == 0.0 {
                continue;
            }
            for j in (k + 1)..n {
                buf[i * n + j] -= f * buf[k * n + j];
            }
            buf[i * n + k] = 0.0;
        }
    }
    let mut det = sign;
    for k in 0..n {
        det *= buf[k * n + k];
    }
    det
}

/// The singular value function `phi^s` of a matrix.
pub fn svf(m: &Matrix, s: f64) -> Result<f64> {
    let dmin = m.rows.min(m.cols) as f64;
    if !(0.0..=dmin).contains(&s) {
        return Err(Error::domain(format!(
            "s = {s} outside [0, {dmin}] for a {}x{} matrix",
            m.rows, m.cols
        )));
    }
    singular_values(m)?.svf(s)
}

/// Lexicographically ordered k-element subsets of `0..n`.
pub(crate) fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        // advance to the next combination in lexicographic order
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        cur[i] += 1;
        for j in (i + 1)..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// k-th compound matrix: entry (I, J) is the k x k minor of `m` on row-set I
/// and column-set J, subsets ordered lexicographically. Satisfies
/// `compound(A*B, k) = compound(A, k) * compound(B, k)` and
/// `sigma_1(compound(M, k)) = sigma_1(M) ... sigma_k(M)`.
pub fn compound(m: &Matrix, k: usize) -> Result<Matrix> {
    if m.rows != m.cols {
        return Err(Error::domain("compound matrix requires a square input"));
    }
    let d = m.rows;
    if k == 0 || k > d {
        return Err(Error::domain(format!("compound order k = {k} outside 1..={d}")));
    }
    let subsets = k_subsets(d, k);
    let size = subsets.len();
    let mut out = Matrix::zeros(size, size);
    let mut minor = vec![0.0; k * k];
    for (ii, rows) in subsets.iter().enumerate() {
        for (jj, cols) in subsets.iter().enumerate() {
            for (a, &r) in rows.iter().enumerate() {
                for (b, &c) in cols.iter().enumerate() {
                    minor[a * k + b] = m.get(r, c);
                }
            }
            out.set(ii, jj, det_in_place(&mut minor, k));
        }
    }
    Ok(out)
}

/// Householder QR of a square matrix: returns `(q, r)` with `m = q * r`,
/// `q` orthogonal and `r` upper-triangular.
pub fn qr(m: &Matrix) -> Result<(Matrix, Matrix)> {
    if m.rows != m.cols {
        return Err(Error::domain("qr expects a square matrix"));
    }
    let n = m.rows;
    let mut r = m.clone();
    let mut q = Matrix::identity(n);
    let mut v = vec![0.0; n];
    for k in 0..n.saturating_sub(1) {
        let mut norm2 = 0.0;
        for i in k..n {
            v[i] = r.get(i, k);
            norm2 += v[i] * v[i];
        }
        let norm = norm2.sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if v[k] >= 0.0 { -norm } else { norm };
        v[k] -= alpha;
        let vnorm2: f64 = (k..n).map(|i| v[i] * v[i]).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        // apply H = I - 2 v v^T / (v^T v) on the left of r and the right of q
        for j in 0..n {
            let dot: f64 = (k..n).map(|i| v[i] * r.get(i, j)).sum();
            let f = 2.0 * dot / vnorm2;
            for i in k..n {
                let val = r.get(i, j) - f * v[i];
                r.set(i, j, val);
            }
        }
        for i in 0..n {
            let dot: f64 = (k..n).map(|j| v[j] * q.get(i, j)).sum();
            let f = 2.0 * dot / vnorm2;
            for j in k..n {
                let val = q.get(i, j) - f * v[j];
                q.set(i, j, val);
            }
        }
        for i in (k + 1)..n {
            r.set(i, k, 0.0);
        }
    }
    Ok((q, r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
        let data: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Matrix::new(n, n, data).unwrap()
    }

    #[test]
    fn identity_spectrum() {
        let s = singular_values(&Matrix::identity(3)).unwrap();
        assert_eq!(s.values(), &[1.0, 1.0, 1.0]);
        assert_eq!(s.rank(), 3);
    }

    #[test]
    fn diagonal_spectrum() {
        let s = singular_values(&Matrix::diag(&[0.5, 1.0 / 3.0])).unwrap();
        assert!((s.values()[0] - 0.5).abs() < 1e-15);
        assert!((s.values()[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rectangular_spectrum_matches_transpose() {
        let m = Matrix::from_rows(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]]).unwrap();
        let a = singular_values(&m).unwrap();
        let b = singular_values(&m.transpose()).unwrap();
        assert_eq!(a.values().len(), 2);
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn determinant_equals_singular_value_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let m = random_matrix(&mut rng, 5);
            let sv = singular_values(&m).unwrap();
            let prod: f64 = sv.values().iter().product();
            let mut buf = m.entries().to_vec();
            let det = det_in_place(&mut buf, 5).abs();
            assert!(
                (prod - det).abs() <= 1e-9 * det.max(1e-30),
                "product {prod} vs |det| {det}"
            );
        }
    }

    #[test]
    fn svf_edge_cases() {
        let m = Matrix::diag(&[0.5, 1.0 / 3.0]);
        assert_eq!(svf(&m, 0.0).unwrap(), 1.0);
        let expected = 0.5 * (1.0f64 / 3.0).sqrt();
        assert!((svf(&m, 1.5).unwrap() - expected).abs() < 1e-15);
        // full s equals |det|
        assert!((svf(&m, 2.0).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert!(svf(&m, 2.5).is_err());
        assert!(svf(&m, -0.1).is_err());
    }

    #[test]
    fn svf_zero_past_rank() {
        let m = Matrix::diag(&[1.0, 0.0]);
        assert_eq!(svf(&m, 1.5).unwrap(), 0.0);
        assert_eq!(svf(&m, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn compound_identity_and_diagonal() {
        let c = compound(&Matrix::identity(4), 2).unwrap();
        assert_eq!(c, Matrix::identity(6));
        let c = compound(&Matrix::diag(&[2.0, 3.0, 5.0]), 2).unwrap();
        assert_eq!(c, Matrix::diag(&[6.0, 10.0, 15.0]));
    }

    #[test]
    fn compound_top_singular_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let m = random_matrix(&mut rng, 4);
            let sv = singular_values(&m).unwrap();
            let c = compound(&m, 2).unwrap();
            let top = singular_values(&c).unwrap().values()[0];
            let expected = sv.values()[0] * sv.values()[1];
            assert!((top - expected).abs() <= 1e-9 * expected.max(1e-30));
        }
    }

    #[test]
    fn compound_multiplicative() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = random_matrix(&mut rng, 4);
        let b = random_matrix(&mut rng, 4);
        let lhs = compound(&a.mul(&b).unwrap(), 2).unwrap();
        let rhs = compound(&a, 2).unwrap().mul(&compound(&b, 2).unwrap()).unwrap();
        for (x, y) in lhs.entries().iter().zip(rhs.entries()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn qr_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = random_matrix(&mut rng, 5);
        let (q, r) = qr(&m).unwrap();
        let qr_product = q.mul(&r).unwrap();
        for (x, y) in qr_product.entries().iter().zip(m.entries()) {
            assert!((x - y).abs() < 1e-12);
        }
        let qtq = q.transpose().mul(&q).unwrap();
        for (k, (x, y)) in qtq.entries().iter().zip(Matrix::identity(5).entries()).enumerate() {
            assert!((x - y).abs() < 1e-12, "entry {k}: {x} vs {y}");
        }
        // r upper-triangular
        for i in 0..5 {
            for j in 0..i {
                assert!(r.get(i, j).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn kron_small() {
        let a = Matrix::from_rows(&[&[1.0, 2.0], &[4.0, 5.0]]).unwrap();
        let b = Matrix::from_rows(&[&[1.0, 2.0]]).unwrap();
        let k = a.kron(&b);
        let expected =
            Matrix::from_rows(&[&[1.0, 2.0, 2.0, 4.0], &[4.0, 8.0, 5.0, 10.0]]).unwrap();
        assert_eq!(k, expected);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(Matrix::new(1, 1, vec![f64::NAN]).is_err());
        assert!(Matrix::new(2, 2, vec![1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn k_subsets_lexicographic() {
        let s = k_subsets(4, 2);
        assert_eq!(
            s,
            vec![
                vec![0, 1],
                vec![0, 2],
                vec![0, 3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3]
            ]
        );
        assert_eq!(k_subsets(3, 3), vec![vec![0, 1, 2]]);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn small_matrix(d: usize) -> impl Strategy<Value = Matrix> {
            prop::collection::vec(-2.0..2.0f64, d * d)
                .prop_map(move |v| Matrix::new(d, d, v).unwrap())
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(200))]

            #[test]
            fn submultiplicative(a in small_matrix(3), b in small_matrix(3), s in 0.0..3.0f64) {
                let lhs = svf(&a.mul(&b).unwrap(), s).unwrap();
                let rhs = svf(&a, s).unwrap() * svf(&b, s).unwrap();
                prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-300);
            }

            #[test]
            fn log_svf_piecewise_linear(m in small_matrix(4), k in 0usize..3, frac in 0.01..0.99f64) {
                // log svf is linear between consecutive integers
                let sv = singular_values(&m).unwrap();
                let s = k as f64 + frac;
                let at_s = sv.log_svf(s).unwrap();
                let lo = sv.log_svf(k as f64).unwrap();
                let hi = sv.log_svf(k as f64 + 1.0).unwrap();
                if lo.is_finite() && hi.is_finite() {
                    let interp = lo + frac * (hi - lo);
                    prop_assert!((at_s - interp).abs() < 1e-9 * (1.0 + interp.abs()));
                }
            }

            #[test]
            fn projection_majorizes(q in small_matrix(3), m in small_matrix(3)) {
                let qm = singular_values(&q.mul(&m).unwrap()).unwrap();
                let sq = singular_values(&q).unwrap();
                let sm = singular_values(&m).unwrap();
                for (j, &sigma) in qm.values().iter().enumerate() {
                    prop_assert!(sigma <= sq.values()[0] * sm.values()[j] * (1.0 + 1e-10) + 1e-300);
                }
            }
        }
    }
}
