use nalgebra::{Matrix3x4, Matrix4, Vector3, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::curves::TwistedCubic;
use super::seven::gen_seven_point_set;
use super::RETRY_BUDGET;
use crate::criticality::QuadricTriple;
use crate::error::{Error, Result};
use crate::family::Family;
use crate::linalg::{projective_distance, random_vec3, random_vec4};
use crate::poly::{intersect_curves, polish_plane_point, real_point, Form3};
use crate::projective::{Camera, HomPoint3, Scene};
use crate::quadrics::{quadrics_through, Plane3, ProjectiveLine, Quadric};

/// Which family to draw, how many points, and the seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FamilySpec {
    pub family: Family,
    pub n_points: usize,
    pub seed: u64,
}

impl FamilySpec {
    pub fn new(family: Family, n_points: usize, seed: u64) -> Self {
        Self { family, n_points, seed }
    }
}

/// The objects a generator used to build its scene.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub family: Family,
    /// Quadrics that vanish on every point (a pencil, a net, or a plane pair).
    pub quadrics: Vec<Quadric>,
    pub lines: Vec<ProjectiveLine>,
    pub planes: Vec<Plane3>,
    /// Compatible triple, when the generator constructed one directly.
    pub triple: Option<QuadricTriple>,
    /// Base point left out of the scene because it has no conjugate.
    pub residual: Option<HomPoint3>,
    /// Second camera triple whose pulled-back forms built the triple.
    pub conjugate_cameras: Option<Vec<Camera>>,
}

impl GroundTruth {
    fn new(family: Family) -> Self {
        Self {
            family,
            quadrics: Vec::new(),
            lines: Vec::new(),
            planes: Vec::new(),
            triple: None,
            residual: None,
            conjugate_cameras: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedScene {
    pub scene: Scene,
    pub truth: GroundTruth,
}

/// A random camera whose center is `c`.
pub fn camera_with_center<R: Rng + ?Sized>(c: &Vector4<f64>, rng: &mut R) -> Result<Camera> {
    let c = c / c.norm();
    let m = Matrix3x4::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
    Camera::new(m * (Matrix4::identity() - c * c.transpose()), 1e-9)
}

fn cameras_at<R: Rng + ?Sized>(centers: &[Vector4<f64>], rng: &mut R) -> Result<Vec<Camera>> {
    centers.iter().map(|c| camera_with_center(c, rng)).collect()
}

fn to_points(xs: &[Vector4<f64>]) -> Result<Vec<HomPoint3>> {
    xs.iter().map(|x| HomPoint3::new(*x)).collect()
}

/// Draws a scene from one of the critical families.
pub fn gen_critical(spec: &FamilySpec) -> Result<GeneratedScene> {
    if spec.n_points == 0 {
        return Err(Error::DegenerateInput("at least one point is required".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    if spec.family == Family::SevenPoints {
        return seven_points(spec, &mut rng);
    }
    let mut last = Error::RetryExhausted(format!("{} generator", spec.family.slug()));
    for _ in 0..RETRY_BUDGET {
        let attempt = match spec.family {
            Family::EllipticQuartic => elliptic_quartic(spec.n_points, &mut rng),
            Family::ThreeOnCurve => twisted_cubic_family(spec.n_points, 3, false, &mut rng),
            Family::TwoOnCurve => twisted_cubic_family(spec.n_points, 2, false, &mut rng),
            Family::CollinearCamerasOffCurve => twisted_cubic_family(spec.n_points, 0, true, &mut rng),
            Family::PlaneConic => plane_conic(spec.n_points, true, &mut rng),
            Family::ConicCameras => plane_conic(spec.n_points, false, &mut rng),
            Family::TwoLines => two_lines(spec.n_points, &mut rng),
            Family::SevenPoints => unreachable!(),
        };
        match attempt {
            Ok(g) => return Ok(g),
            Err(e) => last = e,
        }
    }
    Err(Error::RetryExhausted(format!("{} generator: {last}", spec.family.slug())))
}

fn seven_points(spec: &FamilySpec, rng: &mut ChaCha8Rng) -> Result<GeneratedScene> {
    let set = gen_seven_point_set(rng.random())?;
    let mut truth = GroundTruth::new(Family::SevenPoints);
    truth.triple = Some(set.triple);
    truth.quadrics = set.triple.as_array().to_vec();
    truth.residual = Some(set.residual);
    truth.planes = set.planes.to_vec();
    truth.conjugate_cameras = Some(set.conjugate_cameras.clone());
    let mut scene = set.scene;
    if spec.n_points < scene.points.len() {
        scene.points.truncate(spec.n_points);
    }
    Ok(GeneratedScene { scene, truth })
}

/// Whether `x` is well away from every point in `others`.
fn isolated(x: &Vector4<f64>, others: &[Vector4<f64>], min_dist: f64) -> bool {
    others.iter().all(|y| projective_distance(x.as_slice(), y.as_slice()) > min_dist)
}

/// Minimum angular separation between generated points and from the centers.
const SEPARATION: f64 = 1e-3;

fn finish(cameras: Vec<Camera>, points: Vec<Vector4<f64>>, truth: GroundTruth) -> Result<GeneratedScene> {
    let scene = Scene::new(cameras, to_points(&points)?, None, SEPARATION)?;
    Ok(GeneratedScene { scene, truth })
}

/// Parameters in `[0, π)` away from the ones already used.
fn fresh_angles<R: Rng + ?Sized>(n: usize, taken: &[f64], rng: &mut R) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(n);
    let mut guard = 0;
    while out.len() < n && guard < 100 * (n + 1) {
        guard += 1;
        let t = rng.random_range(0.0..std::f64::consts::PI);
        if taken.iter().chain(out.iter()).all(|s| (t - s).abs() > 0.02 && (t - s).abs() < std::f64::consts::PI - 0.02) {
            out.push(t);
        }
    }
    out
}

fn twisted_cubic_family<R: Rng + ?Sized>(n: usize, on_curve: usize, collinear: bool, rng: &mut R) -> Result<GeneratedScene> {
    let curve = TwistedCubic::random(rng);
    let center_angles = fresh_angles(on_curve, &[], rng);
    let mut centers: Vec<Vector4<f64>> = center_angles.iter().map(|&t| curve.eval_angle(t)).collect();
    let family = match (on_curve, collinear) {
        (3, _) => Family::ThreeOnCurve,
        (2, _) => Family::TwoOnCurve,
        _ => Family::CollinearCamerasOffCurve,
    };
    let mut truth = GroundTruth::new(family);
    if collinear {
        let a = random_vec4(rng);
        let b = random_vec4(rng);
        let w: f64 = rng.random_range(0.3..2.0);
        centers = vec![a, b, a + b * w];
        truth.lines.push(ProjectiveLine::through(&a, &b)?);
    }
    while centers.len() < 3 {
        centers.push(random_vec4(rng));
    }
    for c in &centers[on_curve..] {
        if curve.contains(c, 1e-4) {
            return Err(Error::DegenerateInput("off-curve center landed on the curve".into()));
        }
    }
    let points: Vec<Vector4<f64>> = fresh_angles(n, &center_angles, rng)
        .into_iter()
        .map(|t| curve.eval_angle(t))
        .collect();
    if points.len() < n {
        return Err(Error::DegenerateInput("could not place the points".into()));
    }
    truth.quadrics = curve.containing_quadrics();
    let cameras = cameras_at(&centers, rng)?;
    finish(cameras, points, truth)
}

/// Conic `θ ↦ K (cos²θ, cosθ sinθ, sin²θ)` in the plane spanned by the columns of `K`.
fn conic_point(k: &nalgebra::Matrix4x3<f64>, t: f64) -> Vector4<f64> {
    k * Vector3::new(t.cos() * t.cos(), t.cos() * t.sin(), t.sin() * t.sin())
}

fn plane_of(k: &nalgebra::Matrix4x3<f64>) -> Result<Plane3> {
    Plane3::through(&k.column(0).into_owned(), &k.column(1).into_owned(), &k.column(2).into_owned(), 1e-9)
}

fn plane_conic<R: Rng + ?Sized>(n: usize, with_plane: bool, rng: &mut R) -> Result<GeneratedScene> {
    let k = nalgebra::Matrix4x3::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
    let center_angles = fresh_angles(3, &[], rng);
    let centers: Vec<Vector4<f64>> = center_angles.iter().map(|&t| conic_point(&k, t)).collect();
    let n_conic = if with_plane { (2 * n / 5).max(1).min(n) } else { n };
    let mut points: Vec<Vector4<f64>> = fresh_angles(n_conic, &center_angles, rng)
        .into_iter()
        .map(|t| conic_point(&k, t))
        .collect();
    let pc = plane_of(&k)?;
    let mut truth = GroundTruth::new(if with_plane { Family::PlaneConic } else { Family::ConicCameras });
    truth.planes.push(pc);
    if with_plane {
        let b = nalgebra::Matrix4x3::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
        let plane = plane_of(&b)?;
        for _ in n_conic..n {
            points.push(b * random_vec3(rng));
        }
        truth.planes.push(plane);
        let (u, v) = (pc.covector(), plane.covector());
        truth.quadrics.push(Quadric::new(u * v.transpose() + v * u.transpose())?);
    }
    for (i, x) in points.iter().enumerate() {
        if !isolated(x, &centers, SEPARATION) || !isolated(x, &points[..i], SEPARATION) {
            return Err(Error::DegenerateInput("points too close".into()));
        }
    }
    let cameras = cameras_at(&centers, rng)?;
    finish(cameras, points, truth)
}

fn two_lines<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<GeneratedScene> {
    let l1 = ProjectiveLine::through(&random_vec4(rng), &random_vec4(rng))?;
    let l2 = ProjectiveLine::through(&random_vec4(rng), &random_vec4(rng))?;
    let centers: Vec<Vector4<f64>> = (0..3).map(|_| random_vec4(rng)).collect();
    for c in &centers {
        if l1.distance_to(c) < 1e-2 || l2.distance_to(c) < 1e-2 {
            return Err(Error::DegenerateInput("center too close to a line".into()));
        }
    }
    let n1 = n.div_ceil(2);
    let mut points = Vec::with_capacity(n);
    for (line, count) in [(l1, n1), (l2, n - n1)] {
        for t in fresh_angles(count, &[], rng) {
            points.push(line.point_at(t));
        }
    }
    let mut truth = GroundTruth::new(Family::TwoLines);
    truth.lines = vec![l1, l2];
    let cameras = cameras_at(&centers, rng)?;
    finish(cameras, points, truth)
}

fn elliptic_quartic<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<GeneratedScene> {
    let centers: Vec<Vector4<f64>> = (0..3).map(|_| random_vec4(rng)).collect();
    let mut anchors = centers.clone();
    for _ in 0..5 {
        anchors.push(random_vec4(rng));
    }
    let pencil = quadrics_through(&anchors, 1e-9);
    if pencil.len() != 2 {
        return Err(Error::NotAPencil);
    }
    let mut avoid = centers.clone();
    let points = sample_curve(&pencil[0], &pencil[1], n, &anchors, &mut avoid, rng)?;
    let mut truth = GroundTruth::new(Family::EllipticQuartic);
    truth.quadrics = pencil;
    let cameras = cameras_at(&centers, rng)?;
    finish(cameras, points, truth)
}

/// Real points of the intersection of a plane with two quadrics.
fn slice_points(s1: &Quadric, s2: &Quadric, plane: &Plane3) -> Vec<Vector4<f64>> {
    let c = plane.covector();
    let basis = crate::linalg::RightSvd::new(&nalgebra::DMatrix::from_row_slice(1, 4, c.as_slice())).trailing(3);
    let b = nalgebra::Matrix4x3::from_fn(|r, k| basis[(r, k)]);
    let f = Form3::quadratic(&(b.transpose() * s1.matrix() * b));
    let g = Form3::quadratic(&(b.transpose() * s2.matrix() * b));
    let mut out = Vec::new();
    for p in intersect_curves(&f, &g) {
        if let Some(u) = real_point(&p, 1e-6) {
            if let Some(u) = polish_plane_point(&f, &g, &u) {
                let x = b * u;
                if s1.residual(&x) <= 1e-10 && s2.residual(&x) <= 1e-10 {
                    out.push(x / x.norm());
                }
            }
        }
    }
    out
}

fn sample_curve<R: Rng + ?Sized>(
    s1: &Quadric,
    s2: &Quadric,
    n: usize,
    anchors: &[Vector4<f64>],
    avoid: &mut Vec<Vector4<f64>>,
    rng: &mut R,
) -> Result<Vec<Vector4<f64>>> {
    if s1.distance(s2) <= 1e-9 {
        return Err(Error::NotAPencil);
    }
    let mut known: Vec<Vector4<f64>> = anchors.to_vec();
    let mut out = Vec::with_capacity(n);
    let budget = 64 * (n + 1);
    for _ in 0..budget {
        if out.len() >= n {
            break;
        }
        // planes through a known real point always meet the curve in at least one more real point
        let plane = if known.is_empty() {
            Plane3::new(random_vec4(rng))?
        } else {
            let x = known[rng.random_range(0..known.len())];
            Plane3::through(&x, &random_vec4(rng), &random_vec4(rng), 1e-9)?
        };
        for x in slice_points(s1, s2, &plane) {
            if out.len() < n && isolated(&x, avoid, SEPARATION) {
                out.push(x);
                avoid.push(x);
                known.push(x);
            }
        }
    }
    if out.len() < n {
        return Err(Error::EmptySlice);
    }
    Ok(out)
}

/// `n` real points on the intersection of two quadrics, found by slicing with random planes.
pub fn sample_quadric_intersection(s1: &Quadric, s2: &Quadric, n: usize, seed: u64) -> Result<Vec<HomPoint3>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut avoid = Vec::new();
    let pts = sample_curve(s1, s2, n, &[], &mut avoid, &mut rng)?;
    to_points(&pts)
}
