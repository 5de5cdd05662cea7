use nalgebra::{DMatrix, Matrix3, Vector3, Vector4};

use crate::error::{Error, Result};
use crate::fundamental::{camera_pair_from_form, rank2_check, BilinearForm};
use crate::linalg::RightSvd;
use crate::projective::{image_residuals, triangulate, Camera, HomPoint3, Scene};
use crate::quadrics::{permissible_pairs, quadrics_through, PermissiblePair, PermissiblePairs, ProjectiveLine, Quadric};
use crate::tolerance::ToleranceProfile;

/// A point of `line` as far from `p` as the line allows.
pub(crate) fn point_off_center(line: &ProjectiveLine, p: &Vector4<f64>) -> Vector4<f64> {
    let p = p / p.norm();
    let (a, b) = line.span();
    let ra = a - p * p.dot(&a);
    let rb = b - p * p.dot(&b);
    if ra.norm() >= rb.norm() {
        ra
    } else {
        rb
    }
}

/// The form `F` with `sym(Piᵀ F Pj) ∝ S` whose epipoles are the images of the pair's lines.
pub fn form_from_pair(s: &Quadric, pi: &Camera, pj: &Camera, pair: &PermissiblePair) -> Result<BilinearForm> {
    let (a, b) = (pi.matrix(), pj.matrix());
    let ci = pi.center().coords();
    let cj = pj.center().coords();
    let ei: Vector3<f64> = a * point_off_center(&pair.line1, ci);
    let ej: Vector3<f64> = b * point_off_center(&pair.line2, cj);
    if ei.norm() == 0.0 || ej.norm() == 0.0 {
        return Err(Error::AtCenter);
    }
    let (ei, ej) = (ei / ei.norm(), ej / ej.norm());
    // unknowns: F row-major (9) then mu
    let mut m = DMatrix::zeros(16, 10);
    let sm = s.matrix();
    let mut r = 0;
    for p in 0..4 {
        for q in p..4 {
            for k in 0..3 {
                for l in 0..3 {
                    m[(r, 3 * k + l)] = 0.5 * (a[(k, p)] * b[(l, q)] + a[(k, q)] * b[(l, p)]);
                }
            }
            m[(r, 9)] = -sm[(p, q)];
            r += 1;
        }
    }
    let scale = m.rows(0, 10).norm().max(f64::MIN_POSITIVE);
    for l in 0..3 {
        for k in 0..3 {
            m[(10 + l, 3 * k + l)] = ei[k] * scale;
        }
    }
    for k in 0..3 {
        for l in 0..3 {
            m[(13 + k, 3 * k + l)] = ej[l] * scale;
        }
    }
    let svd = RightSvd::new(&m);
    let mut k = svd.nullity(1e-8);
    if k == 0 {
        if svd.ratio(9) > 1e-6 {
            return Err(Error::Incompatible);
        }
        k = 1;
    }
    let basis = svd.trailing(k);
    // member of the solution space with the largest quadric coefficient
    let w = basis.row(9).transpose();
    let v = if w.norm() > 0.0 { &basis * w } else { basis.column(0).into_owned() };
    if v[9].abs() <= 1e-6 * v.norm() {
        return Err(Error::Incompatible);
    }
    let f = Matrix3::from_row_slice(&v.as_slice()[..9]);
    let check = rank2_check(&f, 1e-6);
    if !check.is_rank2 {
        return Err(Error::NotRankTwo);
    }
    BilinearForm::new(f)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoViewVerdict {
    pub critical: bool,
    /// Dimension of the space of quadrics through the points and both centers.
    pub dimension: usize,
    pub quadric: Option<Quadric>,
    pub pairs: Option<PermissiblePairs>,
    /// A second reconstruction with the same images, when one could be built.
    pub conjugate: Option<Scene>,
    pub max_image_residual: Option<f64>,
}

/// Candidate members of a linear family of quadrics: basis elements then fixed generic combinations.
pub(crate) fn family_members(basis: &[Quadric]) -> Vec<Quadric> {
    let mut out: Vec<Quadric> = basis.to_vec();
    if basis.len() > 1 {
        for s in 1..=6 {
            let mut m = nalgebra::Matrix4::zeros();
            for (i, q) in basis.iter().enumerate() {
                let w = (((i + 1) * (2 * s + 1)) as f64 * 0.618_033_988_7).fract() - 0.5;
                m += q.matrix() * w;
            }
            if let Ok(q) = Quadric::new(m) {
                out.push(q);
            }
        }
    }
    out
}

fn two_view_conjugate(scene: &Scene, s: &Quadric, pair: &PermissiblePair, tol: &ToleranceProfile) -> Option<(Scene, f64)> {
    let f = form_from_pair(s, &scene.cameras[0], &scene.cameras[1], pair).ok()?;
    let (q1, q2) = camera_pair_from_form(&f).ok()?;
    let cams = vec![q1, q2];
    let images = scene.images().ok()?;
    let ys = images
        .iter()
        .map(|im| triangulate(&cams, im))
        .collect::<Result<Vec<HomPoint3>>>()
        .ok()?;
    let conj = Scene::new(cams, ys, scene.labels.clone(), tol.coincidence).ok()?;
    let worst = image_residuals(scene, &conj).ok()?.into_iter().fold(0.0, f64::max);
    (worst <= tol.image).then_some((conj, worst))
}

/// Two views are critical exactly when some real quadric through the points and both centers
/// carries a permissible pair.
pub fn two_view_critical(p1: &Camera, p2: &Camera, points: &[HomPoint3], tol: &ToleranceProfile) -> Result<TwoViewVerdict> {
    let scene = Scene::new(vec![p1.clone(), p2.clone()], points.to_vec(), None, tol.coincidence)?;
    let c1 = *p1.center().coords();
    let c2 = *p2.center().coords();
    let mut all: Vec<Vector4<f64>> = points.iter().map(|x| *x.coords()).collect();
    all.push(c1);
    all.push(c2);
    let basis = quadrics_through(&all, tol.rank);
    let mut verdict = TwoViewVerdict {
        critical: false,
        dimension: basis.len(),
        quadric: None,
        pairs: None,
        conjugate: None,
        max_image_residual: None,
    };
    for s in family_members(&basis) {
        let pairs = match permissible_pairs(&s, &c1, &c2, tol) {
            Ok(p) if !p.is_empty() => p,
            _ => continue,
        };
        verdict.critical = true;
        for pair in pairs.candidates(12) {
            if let Some((conj, r)) = two_view_conjugate(&scene, &s, &pair, tol) {
                verdict.conjugate = Some(conj);
                verdict.max_image_residual = Some(r);
                break;
            }
        }
        verdict.quadric = Some(s);
        verdict.pairs = Some(pairs);
        break;
    }
    Ok(verdict)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fundamental::fundamental_form;
    use crate::linalg::{random_matrix4, random_vec4};
    use crate::quadrics::pullback_quadric;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_camera(rng: &mut ChaCha8Rng) -> Camera {
        Camera::new(random_matrix4(rng).fixed_view::<3, 4>(0, 0).into_owned(), 1e-9).unwrap()
    }

    #[test]
    fn form_from_pair_reproduces_pullback() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let tol = ToleranceProfile::default();
        for _ in 0..10 {
            let p1 = random_camera(&mut rng);
            let p2 = random_camera(&mut rng);
            let q1 = random_camera(&mut rng);
            let q2 = random_camera(&mut rng);
            let f = fundamental_form(&q1, &q2).unwrap();
            let s = pullback_quadric(&f, &p1, &p2).unwrap();
            let pairs = permissible_pairs(&s, p1.center().coords(), p2.center().coords(), &tol).unwrap();
            let cands = pairs.candidates(4);
            assert!(!cands.is_empty());
            let found = cands.iter().any(|pair| {
                form_from_pair(&s, &p1, &p2, pair)
                    .map(|g| g.distance(&f) < 1e-7)
                    .unwrap_or(false)
            });
            assert!(found);
        }
    }

    #[test]
    fn random_points_are_not_critical() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let tol = ToleranceProfile::default();
        let p1 = random_camera(&mut rng);
        let p2 = random_camera(&mut rng);
        let pts: Vec<HomPoint3> = (0..8).map(|_| HomPoint3::new(random_vec4(&mut rng)).unwrap()).collect();
        let v = two_view_critical(&p1, &p2, &pts, &tol).unwrap();
        assert!(!v.critical);
        assert_eq!(v.dimension, 0);
    }

    #[test]
    fn points_on_a_pullback_quadric_are_critical() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let tol = ToleranceProfile::default();
        let p1 = random_camera(&mut rng);
        let p2 = random_camera(&mut rng);
        let f = fundamental_form(&random_camera(&mut rng), &random_camera(&mut rng)).unwrap();
        let s = pullback_quadric(&f, &p1, &p2).unwrap();
        // points on the quadric: intersect random lines through a center with S
        let c = *p1.center().coords();
        let mut pts = Vec::new();
        while pts.len() < 10 {
            let d = random_vec4(&mut rng);
            // S(c + t d) = 2t cᵀSd + t² dᵀSd
            let t = -2.0 * c.dot(&(s.matrix() * d)) / s.eval(&d);
            let x = c + d * t;
            if t.is_finite() && t.abs() > 1e-3 {
                pts.push(HomPoint3::new(x).unwrap());
            }
        }
        let v = two_view_critical(&p1, &p2, &pts, &tol).unwrap();
        assert!(v.critical);
        assert_eq!(v.dimension, 1);
        let r = v.max_image_residual.expect("conjugate built");
        assert!(r <= tol.image);
    }
}
