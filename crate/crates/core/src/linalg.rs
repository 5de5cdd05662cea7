//! Small dense linear-algebra helpers built on nalgebra's SVD.

use nalgebra::{DMatrix, DVector, Matrix3, Matrix4, Vector3, Vector4};
use rand::Rng;
use rand_distr::StandardNormal;

/// Entries with magnitude below this (after unit normalization) are treated as zero
/// when fixing the sign of a homogeneous vector.
pub const NORM_FLOOR: f64 = 1e-12;

/// Right singular system of a matrix, singular values in decreasing order.
///
/// Wide matrices are padded with zero rows so that `v` is always square and
/// trailing columns span the numerical nullspace.
#[derive(Debug, Clone)]
pub struct RightSvd {
    pub sigma: Vec<f64>,
    pub v: DMatrix<f64>,
}

impl RightSvd {
    pub fn new(a: &DMatrix<f64>) -> Self {
        let (m, n) = a.shape();
        let padded = if m < n {
            let mut p = DMatrix::zeros(n, n);
            p.view_mut((0, 0), (m, n)).copy_from(a);
            p
        } else {
            a.clone()
        };
        let svd = padded.svd(false, true);
        let vt = svd.v_t.expect("v_t requested");
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
        let sigma = order.iter().map(|&i| svd.singular_values[i]).collect();
        let mut v = DMatrix::zeros(n, n);
        for (col, &i) in order.iter().enumerate() {
            v.set_column(col, &vt.row(i).transpose());
        }
        Self { sigma, v }
    }

    pub fn max(&self) -> f64 {
        self.sigma.first().copied().unwrap_or(0.0)
    }

    /// Ratio of the k-th singular value to the largest one.
    pub fn ratio(&self, k: usize) -> f64 {
        let m = self.max();
        if m == 0.0 {
            0.0
        } else {
            self.sigma[k] / m
        }
    }

    /// Number of singular values at or below `rel_tol * sigma_max`.
    pub fn nullity(&self, rel_tol: f64) -> usize {
        let m = self.max();
        self.sigma.iter().filter(|&&s| s <= rel_tol * m).count()
    }

    /// Columns spanning the numerical nullspace.
    pub fn null_basis(&self, rel_tol: f64) -> DMatrix<f64> {
        let k = self.nullity(rel_tol);
        let n = self.v.ncols();
        self.v.columns(n - k, k).into_owned()
    }

    /// Last `k` right singular vectors, regardless of tolerance.
    pub fn trailing(&self, k: usize) -> DMatrix<f64> {
        let n = self.v.ncols();
        self.v.columns(n - k, k).into_owned()
    }

    pub fn smallest(&self) -> DVector<f64> {
        self.v.column(self.v.ncols() - 1).into_owned()
    }
}

/// Scale to unit norm and make the first entry that is not negligible positive.
pub fn normalize_sign_slice(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n == 0.0 || !n.is_finite() {
        return;
    }
    // Leave already-normalized vectors untouched so round trips stay bit-exact.
    if (n - 1.0).abs() > 4.0 * f64::EPSILON {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
    if let Some(first) = v.iter().find(|x| x.abs() > NORM_FLOOR) {
        if *first < 0.0 {
            for x in v.iter_mut() {
                *x = -*x;
            }
        }
    }
}

pub fn normalized3(v: &Vector3<f64>) -> Vector3<f64> {
    let mut out = *v;
    normalize_sign_slice(out.as_mut_slice());
    out
}

pub fn normalized4(v: &Vector4<f64>) -> Vector4<f64> {
    let mut out = *v;
    normalize_sign_slice(out.as_mut_slice());
    out
}

/// Angular distance between two lines through the origin, in `[0, 1]` (sine of the angle).
pub fn projective_distance(a: &[f64], b: &[f64]) -> f64 {
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 1.0;
    }
    // norm of the rejection of a from b; accurate for nearly parallel inputs
    let dot: f64 = a.iter().zip(b).map(|(x, y)| (x / na) * (y / nb)).sum();
    let rej: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| {
            let r = x / na - dot * (y / nb);
            r * r
        })
        .sum();
    rej.sqrt().min(1.0)
}

/// Skew-symmetric cross-product matrix.
pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Orthonormal basis (as matrix rows) of the complement of `x` in R^4.
pub fn complement_rows4(x: &Vector4<f64>) -> nalgebra::Matrix3x4<f64> {
    let a = DMatrix::from_row_slice(1, 4, x.as_slice());
    let svd = RightSvd::new(&a);
    let mut m = nalgebra::Matrix3x4::zeros();
    for r in 0..3 {
        for c in 0..4 {
            m[(r, c)] = svd.v[(c, r + 1)];
        }
    }
    m
}

/// Orthonormal basis (as columns) of the subspace orthogonal to the given rows.
pub fn orthogonal_complement(rows: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    RightSvd::new(rows).null_basis(rel_tol)
}

pub fn random_vec4<R: Rng + ?Sized>(rng: &mut R) -> Vector4<f64> {
    Vector4::from_fn(|_, _| rng.sample(StandardNormal))
}

pub fn random_vec3<R: Rng + ?Sized>(rng: &mut R) -> Vector3<f64> {
    Vector3::from_fn(|_, _| rng.sample(StandardNormal))
}

pub fn random_matrix4<R: Rng + ?Sized>(rng: &mut R) -> Matrix4<f64> {
    Matrix4::from_fn(|_, _| rng.sample(StandardNormal))
}

/// Random orthogonal 4x4 matrix (QR of a Gaussian matrix).
pub fn random_orthogonal4<R: Rng + ?Sized>(rng: &mut R) -> Matrix4<f64> {
    random_matrix4(rng).qr().q()
}

/// Random orthogonal 3x3 matrix.
pub fn random_orthogonal3<R: Rng + ?Sized>(rng: &mut R) -> Matrix3<f64> {
    Matrix3::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal)).qr().q()
}

/// Random invertible 4x4 matrix with condition number at most 4.
pub fn random_wellconditioned4<R: Rng + ?Sized>(rng: &mut R) -> Matrix4<f64> {
    let u = random_orthogonal4(rng);
    let v = random_orthogonal4(rng);
    let d = Matrix4::from_diagonal(&Vector4::from_fn(|_, _| rng.random_range(0.5..2.0)));
    u * d * v
}

/// Upper-triangle coordinates `(s00, s01, s02, s03, s11, s12, s13, s22, s23, s33)` of a symmetric matrix.
pub fn sym_to_vec10(s: &Matrix4<f64>) -> [f64; 10] {
    let mut out = [0.0; 10];
    let mut k = 0;
    for i in 0..4 {
        for j in i..4 {
            out[k] = s[(i, j)];
            k += 1;
        }
    }
    out
}

pub fn vec10_to_sym(v: &[f64]) -> Matrix4<f64> {
    let mut s = Matrix4::zeros();
    let mut k = 0;
    for i in 0..4 {
        for j in i..4 {
            s[(i, j)] = v[k];
            s[(j, i)] = v[k];
            k += 1;
        }
    }
    s
}

/// Row of the Veronese design matrix: dotted with `sym_to_vec10(S)` it gives `xᵀ S x`.
pub fn veronese_row(x: &Vector4<f64>) -> [f64; 10] {
    let mut out = [0.0; 10];
    let mut k = 0;
    for i in 0..4 {
        for j in i..4 {
            out[k] = if i == j { x[i] * x[i] } else { 2.0 * x[i] * x[j] };
            k += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svd_orders_and_pads() {
        let a = DMatrix::from_row_slice(2, 4, &[1.0, 0.0, 0.0, 0.0, 0.0, 3.0, 0.0, 0.0]);
        let s = RightSvd::new(&a);
        assert_eq!(s.sigma.len(), 4);
        assert!((s.sigma[0] - 3.0).abs() < 1e-12);
        assert_eq!(s.nullity(1e-9), 2);
        let n = s.null_basis(1e-9);
        assert!((&a * &n).norm() < 1e-12);
    }

    #[test]
    fn sign_normalization_is_idempotent() {
        let mut v = [-3.0, 4.0, 0.0];
        normalize_sign_slice(&mut v);
        assert_eq!(v, [0.6, -0.8, 0.0]);
        let copy = v;
        normalize_sign_slice(&mut v);
        assert_eq!(v, copy);
    }

    #[test]
    fn veronese_matches_quadratic_form() {
        let s = Matrix4::new(
            1.0, 2.0, 3.0, 4.0, 2.0, 5.0, 6.0, 7.0, 3.0, 6.0, 8.0, 9.0, 4.0, 7.0, 9.0, 10.0,
        );
        let x = Vector4::new(0.3, -1.2, 0.7, 2.0);
        let row = veronese_row(&x);
        let coeffs = sym_to_vec10(&s);
        let lhs: f64 = row.iter().zip(coeffs.iter()).map(|(a, b)| a * b).sum();
        assert!((lhs - (x.transpose() * s * x)[0]).abs() < 1e-12);
        assert_eq!(vec10_to_sym(&coeffs), s);
    }
}
