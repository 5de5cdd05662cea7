//! Homogeneous points, cameras, homographies and scenes.

use nalgebra::{DMatrix, DVector, Matrix3x4, Matrix4, Vector3, Vector4};

use crate::error::{Error, Result};
use crate::linalg::{normalize_sign_slice, normalized3, normalized4, projective_distance, skew, RightSvd};

/// Relative residual below which a point is taken to be a camera center.
const CENTER_EPS: f64 = 1e-12;

/// Point of P³, stored with unit norm and a positive leading entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomPoint3(Vector4<f64>);

/// Point of P², same normalization as [`HomPoint3`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomPoint2(Vector3<f64>);

impl HomPoint3 {
    pub fn new(v: Vector4<f64>) -> Result<Self> {
        if v.iter().any(|x| !x.is_finite()) || v.norm() == 0.0 {
            return Err(Error::DegenerateInput("zero or non-finite point".into()));
        }
        Ok(Self(normalized4(&v)))
    }

    pub fn from_slice(c: &[f64]) -> Result<Self> {
        if c.len() != 4 {
            return Err(Error::DegenerateInput(format!("expected 4 coordinates, got {}", c.len())));
        }
        Self::new(Vector4::from_column_slice(c))
    }

    pub fn coords(&self) -> &Vector4<f64> {
        &self.0
    }

    /// Sine of the angle between the representatives.
    pub fn distance(&self, other: &Self) -> f64 {
        projective_distance(self.0.as_slice(), other.0.as_slice())
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.distance(other) <= tol
    }
}

impl HomPoint2 {
    pub fn new(v: Vector3<f64>) -> Result<Self> {
        if v.iter().any(|x| !x.is_finite()) || v.norm() == 0.0 {
            return Err(Error::DegenerateInput("zero or non-finite image point".into()));
        }
        Ok(Self(normalized3(&v)))
    }

    pub fn coords(&self) -> &Vector3<f64> {
        &self.0
    }

    pub fn distance(&self, other: &Self) -> f64 {
        projective_distance(self.0.as_slice(), other.0.as_slice())
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.distance(other) <= tol
    }
}

/// Kernel of a full-rank 3x4 matrix.
pub fn camera_center(p: &Matrix3x4<f64>, rank_tol: f64) -> Result<HomPoint3> {
    let svd = RightSvd::new(&DMatrix::from_row_slice(3, 4, p.transpose().as_slice()));
    let ratio = svd.ratio(2);
    if ratio <= rank_tol || !ratio.is_finite() {
        return Err(Error::RankDeficient(ratio));
    }
    let c = svd.smallest();
    HomPoint3::new(Vector4::new(c[0], c[1], c[2], c[3]))
}

/// Projective camera with its cached center.
#[derive(Debug, Clone, PartialEq)]
pub struct Camera {
    matrix: Matrix3x4<f64>,
    center: HomPoint3,
}

impl Camera {
    pub fn new(m: Matrix3x4<f64>, rank_tol: f64) -> Result<Self> {
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::DegenerateInput("non-finite camera entry".into()));
        }
        let mut matrix = m;
        // row-major sign convention, matching the file format
        let mut rows: Vec<f64> = matrix.transpose().as_slice().to_vec();
        normalize_sign_slice(&mut rows);
        matrix = Matrix3x4::from_row_slice(&rows);
        let center = camera_center(&matrix, rank_tol)?;
        Ok(Self { matrix, center })
    }

    pub fn from_rows(rows: &[f64], rank_tol: f64) -> Result<Self> {
        if rows.len() != 12 {
            return Err(Error::DegenerateInput(format!("expected 12 camera entries, got {}", rows.len())));
        }
        Self::new(Matrix3x4::from_row_slice(rows), rank_tol)
    }

    /// `[I | 0]`.
    pub fn canonical() -> Self {
        Self::new(Matrix3x4::identity(), 1e-12).expect("identity camera")
    }

    pub fn matrix(&self) -> &Matrix3x4<f64> {
        &self.matrix
    }

    pub fn center(&self) -> &HomPoint3 {
        &self.center
    }

    /// Row-major entries.
    pub fn rows(&self) -> Vec<f64> {
        self.matrix.transpose().as_slice().to_vec()
    }

    pub fn project(&self, x: &HomPoint3) -> Result<HomPoint2> {
        project(self, x)
    }
}

pub fn project(p: &Camera, x: &HomPoint3) -> Result<HomPoint2> {
    let y = p.matrix * x.coords();
    if y.norm() <= CENTER_EPS * p.matrix.norm() * x.coords().norm() {
        return Err(Error::AtCenter);
    }
    HomPoint2::new(y)
}

/// Invertible 4x4 matrix acting on P³.
#[derive(Debug, Clone, PartialEq)]
pub struct Homography {
    matrix: Matrix4<f64>,
}

impl Homography {
    pub fn new(m: Matrix4<f64>) -> Result<Self> {
        let n = m.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::Singular);
        }
        let m = m / n;
        let s = m.singular_values();
        if s.min() <= 1e-12 * s.max() {
            return Err(Error::Singular);
        }
        Ok(Self { matrix: m })
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.matrix
    }
}

/// Ordered cameras plus a finite point set.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub cameras: Vec<Camera>,
    pub points: Vec<HomPoint3>,
    pub labels: Option<Vec<String>>,
}

impl Scene {
    /// Validates that centers are pairwise distinct and that no point sits at a center.
    pub fn new(cameras: Vec<Camera>, points: Vec<HomPoint3>, labels: Option<Vec<String>>, coincidence: f64) -> Result<Self> {
        if cameras.len() < 2 || cameras.len() > 3 {
            return Err(Error::DegenerateInput(format!("expected 2 or 3 cameras, got {}", cameras.len())));
        }
        if let Some(l) = &labels {
            if l.len() != points.len() {
                return Err(Error::DegenerateInput("label count does not match point count".into()));
            }
        }
        for i in 0..cameras.len() {
            for j in (i + 1)..cameras.len() {
                if cameras[i].center.approx_eq(&cameras[j].center, coincidence) {
                    return Err(Error::CoincidentCenters);
                }
            }
        }
        for (k, x) in points.iter().enumerate() {
            if cameras.iter().any(|c| c.center.approx_eq(x, coincidence)) {
                return Err(Error::DegenerateInput(format!("point {k} coincides with a camera center")));
            }
        }
        Ok(Self { cameras, points, labels })
    }

    pub fn centers(&self) -> Vec<HomPoint3> {
        self.cameras.iter().map(|c| c.center).collect()
    }

    /// Image of every point in every camera, indexed `[point][camera]`.
    pub fn images(&self) -> Result<Vec<Vec<HomPoint2>>> {
        self.points
            .iter()
            .map(|x| self.cameras.iter().map(|c| project(c, x)).collect())
            .collect()
    }
}

/// Maps points by `A` and cameras by `P ↦ P A⁻¹`, leaving all images unchanged.
pub fn apply_homography(a: &Homography, s: &Scene) -> Result<Scene> {
    let inv = a.matrix.try_inverse().ok_or(Error::Singular)?;
    let cameras = s
        .cameras
        .iter()
        .map(|c| Camera::new(c.matrix * inv, 1e-12))
        .collect::<Result<Vec<_>>>()?;
    let points = s
        .points
        .iter()
        .map(|x| HomPoint3::new(a.matrix * x.coords()))
        .collect::<Result<Vec<_>>>()?;
    Ok(Scene {
        cameras,
        points,
        labels: s.labels.clone(),
    })
}

/// Largest angular image discrepancy of each point over all cameras.
pub fn image_residuals(s1: &Scene, s2: &Scene) -> Result<Vec<f64>> {
    if s1.cameras.len() != s2.cameras.len() || s1.points.len() != s2.points.len() {
        return Err(Error::DegenerateInput("scenes have different cardinalities".into()));
    }
    s1.points
        .iter()
        .zip(&s2.points)
        .map(|(x, y)| {
            let mut worst: f64 = 0.0;
            for (p, q) in s1.cameras.iter().zip(&s2.cameras) {
                let a = project(p, x)?;
                let b = project(q, y)?;
                worst = worst.max(a.distance(&b));
            }
            Ok(worst)
        })
        .collect()
}

/// Least-squares point whose images are the given ones (smallest singular vector of the
/// stacked cross-product constraints).
pub fn triangulate(cameras: &[Camera], images: &[HomPoint2]) -> Result<HomPoint3> {
    let mut rows = DMatrix::zeros(3 * cameras.len(), 4);
    for (k, (c, u)) in cameras.iter().zip(images).enumerate() {
        let block = skew(u.coords()) * c.matrix;
        rows.view_mut((3 * k, 0), (3, 4)).copy_from(&block);
    }
    let v = RightSvd::new(&rows).smallest();
    HomPoint3::new(Vector4::new(v[0], v[1], v[2], v[3]))
}

/// Whether some homography carries `s1` onto `s2` (points, centers and cameras).
///
/// The homography and the camera scales are the smallest singular vector of one linear
/// system; the answer is then checked against every correspondence with tolerance `tol`.
pub fn reconstructions_equivalent(s1: &Scene, s2: &Scene, tol: f64) -> Result<bool> {
    let nc = s1.cameras.len();
    if nc != s2.cameras.len() || s1.points.len() != s2.points.len() {
        return Err(Error::DegenerateInput("scenes have different cardinalities".into()));
    }
    let mut pairs: Vec<(Vector4<f64>, Vector4<f64>)> = s1
        .points
        .iter()
        .zip(&s2.points)
        .map(|(x, y)| (*x.coords(), *y.coords()))
        .collect();
    for (p, q) in s1.cameras.iter().zip(&s2.cameras) {
        pairs.push((*p.center.coords(), *q.center.coords()));
    }
    if pairs.len() < 5 {
        return Err(Error::InsufficientData);
    }
    let src = DMatrix::from_fn(pairs.len(), 4, |r, c| pairs[r].0[c]);
    if nc < 2 && RightSvd::new(&src).nullity(1e-9) > 0 {
        return Err(Error::InsufficientData);
    }

    // unknowns: A (row-major, 16) then one scale per camera
    let n_unknowns = 16 + nc;
    let n_rows = 4 * pairs.len() + 12 * nc;
    let mut m = DMatrix::zeros(n_rows, n_unknowns);
    let mut r = 0;
    for (x, y) in &pairs {
        let proj = Matrix4::identity() - y * y.transpose() / y.norm_squared();
        for i in 0..4 {
            for k in 0..4 {
                for j in 0..4 {
                    m[(r + i, 4 * k + j)] += proj[(i, k)] * x[j];
                }
            }
        }
        r += 4;
    }
    for (ci, (p, q)) in s1.cameras.iter().zip(&s2.cameras).enumerate() {
        // (Q A)_{ij} - lambda P_{ij} = 0
        for i in 0..3 {
            for j in 0..4 {
                for k in 0..4 {
                    m[(r, 4 * k + j)] += q.matrix[(i, k)];
                }
                m[(r, 16 + ci)] = -p.matrix[(i, j)];
                r += 1;
            }
        }
    }
    let svd = RightSvd::new(&m);
    let k = svd.nullity(1e-9).max(1);
    let null = svd.trailing(k);
    // with a flat configuration the solution space can be larger than one; a generic member
    // is invertible whenever any member is
    let candidates: Vec<DVector<f64>> = if k == 1 {
        vec![null.column(0).into_owned()]
    } else {
        (0..4)
            .map(|t| &null * DVector::from_fn(k, |i, _| (((i + 1) * (2 * t + 3)) as f64 * 0.618_033_988_7).fract() - 0.5))
            .collect()
    };
    for v in candidates {
        let a = Matrix4::from_row_slice(&v.as_slice()[..16]);
        if maps_scene(&a, &pairs, s1, s2, tol) {
            return Ok(true);
        }
    }
    Ok(false)
}

fn maps_scene(a: &Matrix4<f64>, pairs: &[(Vector4<f64>, Vector4<f64>)], s1: &Scene, s2: &Scene, tol: f64) -> bool {
    let s = a.singular_values();
    if s.min() <= 1e-9 * s.max() {
        return false;
    }
    for (x, y) in pairs {
        if projective_distance((a * x).as_slice(), y.as_slice()) > tol {
            return false;
        }
    }
    for (p, q) in s1.cameras.iter().zip(&s2.cameras) {
        let qa = q.matrix * a;
        let lhs: Vec<f64> = qa.transpose().as_slice().to_vec();
        let rhs: Vec<f64> = p.matrix.transpose().as_slice().to_vec();
        if projective_distance(&lhs, &rhs) > tol {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_matrix4, random_vec4};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_camera(rng: &mut ChaCha8Rng) -> Camera {
        let m = random_matrix4(rng);
        Camera::new(m.fixed_view::<3, 4>(0, 0).into_owned(), 1e-9).unwrap()
    }

    fn random_scene(rng: &mut ChaCha8Rng, n: usize) -> Scene {
        let cams = (0..3).map(|_| random_camera(rng)).collect();
        let pts = (0..n).map(|_| HomPoint3::new(random_vec4(rng)).unwrap()).collect();
        Scene::new(cams, pts, None, 1e-6).unwrap()
    }

    #[test]
    fn center_of_canonical_camera() {
        let c = camera_center(&Matrix3x4::identity(), 1e-9).unwrap();
        assert_eq!(c.coords(), &Vector4::new(0.0, 0.0, 0.0, 1.0));
    }

    #[test]
    fn center_of_translated_camera() {
        let mut m = Matrix3x4::identity();
        m[(0, 3)] = -1.0;
        m[(1, 3)] = -2.0;
        m[(2, 3)] = -3.0;
        let c = camera_center(&m, 1e-9).unwrap();
        let expected = HomPoint3::new(Vector4::new(1.0, 2.0, 3.0, 1.0)).unwrap();
        assert!(c.approx_eq(&expected, 1e-14));
    }

    #[test]
    fn center_of_random_camera_is_kernel() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let m = random_matrix4(&mut rng).fixed_view::<3, 4>(0, 0).into_owned();
            let c = camera_center(&m, 1e-9).unwrap();
            assert!((m * c.coords()).norm() / m.norm() <= 1e-12);
        }
    }

    #[test]
    fn rank_deficient_camera_rejected() {
        let m = Matrix3x4::new(1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0);
        assert!(matches!(camera_center(&m, 1e-9), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn projection_with_identity_block() {
        let p = Camera::canonical();
        let y = project(&p, &HomPoint3::new(Vector4::new(1.0, 2.0, 3.0, 1.0)).unwrap()).unwrap();
        assert!(y.approx_eq(&HomPoint2::new(Vector3::new(1.0, 2.0, 3.0)).unwrap(), 1e-15));
        let at = project(&p, &HomPoint3::new(Vector4::new(0.0, 0.0, 0.0, 1.0)).unwrap());
        assert_eq!(at, Err(Error::AtCenter));
    }

    #[test]
    fn homography_preserves_images() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = random_scene(&mut rng, 8);
        let a = Homography::new(random_matrix4(&mut rng)).unwrap();
        let t = apply_homography(&a, &s).unwrap();
        assert!(image_residuals(&s, &t).unwrap().iter().all(|&r| r <= 1e-10));
        assert!(reconstructions_equivalent(&s, &t, 1e-8).unwrap());
    }

    #[test]
    fn scalar_homography_is_trivial() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let s = random_scene(&mut rng, 5);
        let a = Homography::new(Matrix4::identity() * 2.0).unwrap();
        let t = apply_homography(&a, &s).unwrap();
        for (x, y) in s.points.iter().zip(&t.points) {
            assert!(x.approx_eq(y, 1e-14));
        }
    }

    #[test]
    fn perturbed_point_breaks_equivalence() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let s = random_scene(&mut rng, 8);
        let a = Homography::new(random_matrix4(&mut rng)).unwrap();
        let mut t = apply_homography(&a, &s).unwrap();
        let moved = t.points[0].coords() + Vector4::new(1e-2, 0.0, 0.0, 0.0);
        t.points[0] = HomPoint3::new(moved).unwrap();
        assert!(!reconstructions_equivalent(&s, &t, 1e-8).unwrap());
    }

    #[test]
    fn too_few_correspondences() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let cams: Vec<Camera> = (0..2).map(|_| random_camera(&mut rng)).collect();
        let pts = vec![HomPoint3::new(random_vec4(&mut rng)).unwrap(); 2];
        let s = Scene::new(cams, pts, None, 1e-6).unwrap();
        assert_eq!(reconstructions_equivalent(&s, &s, 1e-8), Err(Error::InsufficientData));
    }

    #[test]
    fn triangulation_inverts_projection() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let s = random_scene(&mut rng, 4);
        for x in &s.points {
            let imgs: Vec<HomPoint2> = s.cameras.iter().map(|c| project(c, x).unwrap()).collect();
            let y = triangulate(&s.cameras, &imgs).unwrap();
            assert!(y.approx_eq(x, 1e-10));
        }
    }
}
