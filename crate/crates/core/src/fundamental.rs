//! Fundamental forms, epipoles, compatibility of form triples and camera recovery.

use nalgebra::{DMatrix, Matrix3, Matrix3x4, Matrix4, Vector3};

use crate::error::{Error, Result};
use crate::linalg::{normalize_sign_slice, skew, RightSvd};
use crate::projective::{Camera, HomPoint2};
use crate::tolerance::ToleranceProfile;

/// Bilinear form `(x, y) ↦ xᵀ F y` on pairs of image points, `x` from the first view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BilinearForm {
    matrix: Matrix3<f64>,
}

impl BilinearForm {
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        if m.iter().any(|x| !x.is_finite()) || m.norm() == 0.0 {
            return Err(Error::DegenerateInput("zero or non-finite bilinear form".into()));
        }
        let mut rows: Vec<f64> = m.transpose().as_slice().to_vec();
        normalize_sign_slice(&mut rows);
        Ok(Self {
            matrix: Matrix3::from_row_slice(&rows),
        })
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.matrix
    }

    pub fn eval(&self, x: &Vector3<f64>, y: &Vector3<f64>) -> f64 {
        x.dot(&(self.matrix * y))
    }

    /// Form with the roles of the two views exchanged.
    pub fn transposed(&self) -> Self {
        Self::new(self.matrix.transpose()).expect("nonzero form")
    }

    /// Angular distance to another form, both seen as 9-vectors up to scale.
    pub fn distance(&self, other: &Self) -> f64 {
        crate::linalg::projective_distance(self.matrix.as_slice(), other.matrix.as_slice())
    }
}

/// Determinant expansion of `det [P1 x 0; P2 0 y]` along the two appended columns.
pub fn fundamental_form(p1: &Camera, p2: &Camera) -> Result<BilinearForm> {
    if p1.center().distance(p2.center()) <= 1e-10 {
        return Err(Error::CoincidentCenters);
    }
    let a = p1.matrix();
    let b = p2.matrix();
    let mut f = Matrix3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            let mut m = Matrix4::zeros();
            let mut r = 0;
            for k in (0..3).filter(|&k| k != i) {
                m.set_row(r, &a.row(k));
                r += 1;
            }
            for k in (0..3).filter(|&k| k != j) {
                m.set_row(r, &b.row(k));
                r += 1;
            }
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            f[(i, j)] = sign * m.determinant();
        }
    }
    BilinearForm::new(f)
}

/// Kernels of a rank-2 form: `leftᵀ F = 0` and `F right = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpipolePair {
    pub left: HomPoint2,
    pub right: HomPoint2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rank2Check {
    pub is_rank2: bool,
    pub sigma: [f64; 3],
}

pub fn rank2_check(f: &Matrix3<f64>, tol: f64) -> Rank2Check {
    let mut s: Vec<f64> = f.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    let sigma = [s[0], s[1], s[2]];
    Rank2Check {
        is_rank2: sigma[0] > 0.0 && sigma[2] <= tol * sigma[0] && tol * sigma[0] < sigma[1],
        sigma,
    }
}

pub fn epipoles(f: &BilinearForm) -> Result<EpipolePair> {
    epipoles_with_tol(f, ToleranceProfile::default().rank)
}

pub fn epipoles_with_tol(f: &BilinearForm, rank_tol: f64) -> Result<EpipolePair> {
    if !rank2_check(&f.matrix, rank_tol).is_rank2 {
        return Err(Error::NotRankTwo);
    }
    Ok(EpipolePair {
        left: HomPoint2::new(kernel3(&f.matrix.transpose()))?,
        right: HomPoint2::new(kernel3(&f.matrix))?,
    })
}

fn kernel3(m: &Matrix3<f64>) -> Vector3<f64> {
    let v = RightSvd::new(&DMatrix::from_row_slice(3, 3, m.transpose().as_slice())).smallest();
    Vector3::new(v[0], v[1], v[2])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompatibilityKind {
    NonCollinear,
    Collinear,
    Incompatible,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompatibilityVerdict {
    pub kind: CompatibilityKind,
    /// `F12(e1³, e2³)`, `F13(e1², e3²)`, `F23(e2¹, e3¹)` on unit epipoles.
    pub residuals: [f64; 3],
    /// Whether the two epipoles in image 1, 2 and 3 respectively are distinct.
    pub distinct: [bool; 3],
}

/// Epipoles of a form triple, indexed `e[i][j]` = epipole of view `j` in image `i`.
fn triple_epipoles(f12: &BilinearForm, f13: &BilinearForm, f23: &BilinearForm, rank_tol: f64) -> Result<[[Vector3<f64>; 3]; 3]> {
    let a = epipoles_with_tol(f12, rank_tol)?;
    let b = epipoles_with_tol(f13, rank_tol)?;
    let c = epipoles_with_tol(f23, rank_tol)?;
    let z = Vector3::zeros();
    let mut e = [[z; 3]; 3];
    e[0][1] = *a.left.coords();
    e[1][0] = *a.right.coords();
    e[0][2] = *b.left.coords();
    e[2][0] = *b.right.coords();
    e[1][2] = *c.left.coords();
    e[2][1] = *c.right.coords();
    Ok(e)
}

pub fn triple_compatible(
    f12: &BilinearForm,
    f13: &BilinearForm,
    f23: &BilinearForm,
    tol: &ToleranceProfile,
) -> Result<CompatibilityVerdict> {
    let e = triple_epipoles(f12, f13, f23, tol.rank)?;
    let residuals = [
        f12.eval(&e[0][2], &e[1][2]).abs(),
        f13.eval(&e[0][1], &e[2][1]).abs(),
        f23.eval(&e[1][0], &e[2][0]).abs(),
    ];
    let apart = |u: &Vector3<f64>, v: &Vector3<f64>| crate::linalg::projective_distance(u.as_slice(), v.as_slice()) > tol.coincidence;
    let distinct = [apart(&e[0][1], &e[0][2]), apart(&e[1][0], &e[1][2]), apart(&e[2][0], &e[2][1])];
    let kind = if distinct.iter().all(|&d| d) {
        if residuals.iter().all(|&r| r <= tol.compatibility) {
            CompatibilityKind::NonCollinear
        } else {
            CompatibilityKind::Incompatible
        }
    } else if distinct.iter().all(|&d| !d) {
        CompatibilityKind::Collinear
    } else {
        CompatibilityKind::Incompatible
    };
    Ok(CompatibilityVerdict {
        kind,
        residuals,
        distinct,
    })
}

/// `([I|0], [[e']ₓ Fᵀ | e'])` with `F e' = 0`.
pub fn camera_pair_from_form(f: &BilinearForm) -> Result<(Camera, Camera)> {
    let ep = epipoles(f)?;
    let e = ep.right.coords();
    let m = skew(e) * f.matrix.transpose();
    let mut q2 = Matrix3x4::zeros();
    q2.fixed_view_mut::<3, 3>(0, 0).copy_from(&m);
    q2.set_column(3, e);
    Ok((Camera::canonical(), Camera::new(q2, 1e-12)?))
}

/// Linear equations on the 12 entries (row-major) of `Q3` stating that `F` pulls back to the
/// zero quadric under `(Q, Q3)`, i.e. that `F` is their fundamental form.
fn pullback_rows(q: &Matrix3x4<f64>, f: &Matrix3<f64>) -> DMatrix<f64> {
    // S = sym(Qᵀ F Q3); S_ab = 1/2 (sum_ij Q_ia F_ij Q3_jb + Q_ib F_ij Q3_ja)
    let g = q.transpose() * f; // 4x3, g[a][j]
    let mut rows = DMatrix::zeros(10, 12);
    let mut r = 0;
    for a in 0..4 {
        for b in a..4 {
            for j in 0..3 {
                rows[(r, 4 * j + b)] += g[(a, j)];
                rows[(r, 4 * j + a)] += g[(b, j)];
            }
            r += 1;
        }
    }
    rows
}

/// Solves for the third camera given the first two, the two remaining forms, and optional
/// extra linear constraints on its 12 entries.
pub(crate) fn recover_third_camera(
    q1: &Camera,
    q2: &Camera,
    f13: &BilinearForm,
    f23: &BilinearForm,
    extra: Option<&DMatrix<f64>>,
    collinear: bool,
) -> Result<Camera> {
    let a = pullback_rows(q1.matrix(), f13.matrix());
    let b = pullback_rows(q2.matrix(), f23.matrix());
    let n_extra = extra.map_or(0, |e| e.nrows());
    let mut m = DMatrix::zeros(20 + n_extra, 12);
    m.view_mut((0, 0), (10, 12)).copy_from(&(&a / a.norm()));
    m.view_mut((10, 0), (10, 12)).copy_from(&(&b / b.norm()));
    if let Some(e) = extra {
        let n = e.norm().max(f64::MIN_POSITIVE);
        m.view_mut((20, 0), (n_extra, 12)).copy_from(&(e / n));
    }
    let svd = RightSvd::new(&m);
    let mut nullity = svd.nullity(1e-9);
    if nullity == 0 && svd.ratio(11) <= 1e-6 && svd.ratio(10) > 1e-4 {
        // forms derived from numerically computed lines are only accurate to ~1e-10
        nullity = 1;
    }
    let candidates: Vec<nalgebra::DVector<f64>> = match nullity {
        0 => return Err(Error::IllConditioned(format!("no exact solution for the third camera (sigma ratio {:.3e})", svd.ratio(11)))),
        1 => vec![svd.smallest()],
        k if collinear || extra.is_some() => {
            let basis = svd.trailing(k);
            // deterministic, generic weights; the first one that yields a valid camera wins
            (1..=8)
                .map(|s| {
                    let w = nalgebra::DVector::from_fn(k, |i, _| (((i + 1) * (2 * s + 1)) as f64 * 0.754_877_666).fract() + 0.1);
                    &basis * w
                })
                .collect()
        }
        k => return Err(Error::IllConditioned(format!("third camera has a {k}-dimensional solution space"))),
    };
    for v in candidates {
        let q3 = Matrix3x4::from_row_slice(v.as_slice());
        if let Ok(c) = Camera::new(q3, 1e-9) {
            let ok13 = fundamental_form(q1, &c).map(|f| f.distance(f13) <= 1e-6).unwrap_or(false);
            let ok23 = fundamental_form(q2, &c).map(|f| f.distance(f23) <= 1e-6).unwrap_or(false);
            if ok13 && ok23 {
                return Ok(c);
            }
        }
    }
    Err(Error::IllConditioned("recovered third camera does not reproduce the forms".into()))
}

pub fn camera_triple_from_compatible(
    f12: &BilinearForm,
    f13: &BilinearForm,
    f23: &BilinearForm,
    verdict: &CompatibilityVerdict,
) -> Result<(Camera, Camera, Camera)> {
    if verdict.kind == CompatibilityKind::Incompatible {
        return Err(Error::Incompatible);
    }
    let (q1, q2) = camera_pair_from_form(f12)?;
    let q3 = recover_third_camera(&q1, &q2, f13, f23, None, verdict.kind == CompatibilityKind::Collinear)?;
    Ok((q1, q2, q3))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_matrix4;
    use nalgebra::Vector4;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cam(rows: [f64; 12]) -> Camera {
        Camera::from_rows(&rows, 1e-12).unwrap()
    }

    fn translated(t: [f64; 3]) -> Camera {
        cam([1.0, 0.0, 0.0, -t[0], 0.0, 1.0, 0.0, -t[1], 0.0, 0.0, 1.0, -t[2]])
    }

    fn random_camera(rng: &mut ChaCha8Rng) -> Camera {
        Camera::new(random_matrix4(rng).fixed_view::<3, 4>(0, 0).into_owned(), 1e-9).unwrap()
    }

    fn skew_e1() -> Matrix3<f64> {
        Matrix3::new(0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0)
    }

    #[test]
    fn translation_along_x() {
        let f = fundamental_form(&Camera::canonical(), &translated([1.0, 0.0, 0.0])).unwrap();
        let expected = BilinearForm::new(skew_e1()).unwrap();
        assert!(f.distance(&expected) < 1e-14);
    }

    #[test]
    fn swapping_cameras_transposes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p1 = random_camera(&mut rng);
        let p2 = random_camera(&mut rng);
        let a = fundamental_form(&p1, &p2).unwrap();
        let b = fundamental_form(&p2, &p1).unwrap();
        assert!(a.distance(&b.transposed()) < 1e-12);
    }

    #[test]
    fn epipoles_of_translation_form() {
        let ep = epipoles(&BilinearForm::new(skew_e1()).unwrap()).unwrap();
        assert_eq!(ep.left.coords(), &Vector3::new(1.0, 0.0, 0.0));
        assert_eq!(ep.right.coords(), &Vector3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn rank_one_form_has_no_epipoles() {
        let u = Vector3::new(1.0, 2.0, 3.0);
        let v = Vector3::new(-1.0, 0.5, 2.0);
        let f = BilinearForm::new(u * v.transpose()).unwrap();
        assert_eq!(epipoles(&f), Err(Error::NotRankTwo));
    }

    #[test]
    fn rank_checks() {
        assert!(rank2_check(&skew_e1(), 1e-8).is_rank2);
        assert!(!rank2_check(&Matrix3::identity(), 1e-8).is_rank2);
        let u = Vector3::new(1.0, 2.0, 3.0);
        assert!(!rank2_check(&(u * u.transpose()), 1e-8).is_rank2);
    }

    #[test]
    fn coincident_centers_rejected() {
        let p = Camera::canonical();
        let q = cam([2.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 3.0, 0.0]);
        assert_eq!(fundamental_form(&p, &q), Err(Error::CoincidentCenters));
    }

    #[test]
    fn axis_translations_are_non_collinear() {
        let q1 = Camera::canonical();
        let q2 = translated([1.0, 0.0, 0.0]);
        let q3 = translated([0.0, 1.0, 0.0]);
        let f12 = fundamental_form(&q1, &q2).unwrap();
        let f13 = fundamental_form(&q1, &q3).unwrap();
        let f23 = fundamental_form(&q2, &q3).unwrap();
        let v = triple_compatible(&f12, &f13, &f23, &ToleranceProfile::default()).unwrap();
        assert_eq!(v.kind, CompatibilityKind::NonCollinear);
        assert!(v.residuals.iter().all(|&r| r <= 1e-12));
    }

    #[test]
    fn centers_on_x_axis_are_collinear() {
        let q1 = Camera::canonical();
        let q2 = translated([1.0, 0.0, 0.0]);
        let q3 = translated([2.0, 0.0, 0.0]);
        let f12 = fundamental_form(&q1, &q2).unwrap();
        let f13 = fundamental_form(&q1, &q3).unwrap();
        let f23 = fundamental_form(&q2, &q3).unwrap();
        let v = triple_compatible(&f12, &f13, &f23, &ToleranceProfile::default()).unwrap();
        assert_eq!(v.kind, CompatibilityKind::Collinear);
        let (a, b, c) = camera_triple_from_compatible(&f12, &f13, &f23, &v).unwrap();
        let stack = nalgebra::Matrix3x4::from_rows(&[
            a.center().coords().transpose(),
            b.center().coords().transpose(),
            c.center().coords().transpose(),
        ]);
        let s = stack.singular_values();
        assert!(s.min() < 1e-9 * s.max());
    }

    #[test]
    fn pair_round_trip() {
        let f = BilinearForm::new(skew_e1()).unwrap();
        let (a, b) = camera_pair_from_form(&f).unwrap();
        assert!(fundamental_form(&a, &b).unwrap().distance(&f) < 1e-12);
    }

    #[test]
    fn random_triple_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let p: Vec<Camera> = (0..3).map(|_| random_camera(&mut rng)).collect();
            let f12 = fundamental_form(&p[0], &p[1]).unwrap();
            let f13 = fundamental_form(&p[0], &p[2]).unwrap();
            let f23 = fundamental_form(&p[1], &p[2]).unwrap();
            let v = triple_compatible(&f12, &f13, &f23, &ToleranceProfile::default()).unwrap();
            assert_eq!(v.kind, CompatibilityKind::NonCollinear);
            let (a, b, c) = camera_triple_from_compatible(&f12, &f13, &f23, &v).unwrap();
            assert!(fundamental_form(&a, &b).unwrap().distance(&f12) < 1e-8);
            assert!(fundamental_form(&a, &c).unwrap().distance(&f13) < 1e-8);
            assert!(fundamental_form(&b, &c).unwrap().distance(&f23) < 1e-8);
        }
    }

    #[test]
    fn forms_vanish_on_projected_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let p1 = random_camera(&mut rng);
        let p2 = random_camera(&mut rng);
        let f = fundamental_form(&p1, &p2).unwrap();
        for _ in 0..50 {
            let x = crate::linalg::random_vec4(&mut rng);
            let x: Vector4<f64> = x / x.norm();
            assert!(f.eval(&(p1.matrix() * x), &(p2.matrix() * x)).abs() < 1e-12);
        }
    }
}
