use nalgebra::{Matrix4, Vector3, Vector4};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::criticality::{QuadricTriple, PAIRS};
use crate::error::{Error, Result};
use crate::fundamental::fundamental_form;
use crate::linalg::{complement_rows4, projective_distance, random_matrix4};
use crate::poly::{intersect_curves, polish_plane_point, real_point, Form3};
use crate::projective::{Camera, HomPoint3, Scene};
use crate::quadrics::{intersect_three_planes, plane_span, pullback_quadric, Locus, Plane3, ProjectiveLine, Quadric};

/// Redraws allowed when looking for a triple with eight real base points; most random
/// triples have some complex ones.
const SEVEN_POINT_BUDGET: usize = 256;

/// Seven of the eight base points of a compatible triple, with the one left out.
#[derive(Debug, Clone, PartialEq)]
pub struct SevenPointSet {
    pub scene: Scene,
    pub residual: HomPoint3,
    pub triple: QuadricTriple,
    pub planes: [Plane3; 3],
    pub conjugate_cameras: Vec<Camera>,
    pub base: Vec<HomPoint3>,
}

fn polish_on_three(quadrics: &[&Quadric; 3], x0: &Vector4<f64>) -> Option<Vector4<f64>> {
    let mut x = x0 / x0.norm();
    let anchor = x;
    for _ in 0..50 {
        let r = Vector4::new(quadrics[0].eval(&x), quadrics[1].eval(&x), quadrics[2].eval(&x), anchor.dot(&x) - 1.0);
        let mut j = Matrix4::zeros();
        for (k, q) in quadrics.iter().enumerate() {
            j.set_row(k, &(q.matrix() * x * 2.0).transpose());
        }
        j.set_row(3, &anchor.transpose());
        let step = j.lu().solve(&r)?;
        x -= step;
        if step.norm() <= 1e-12 * x.norm() {
            break;
        }
    }
    let x = x / x.norm();
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Real common points of three quadrics whose first two pass through `p`, and the number
/// of common points over the complex numbers.
///
/// The curve `S12 ∩ S13` is projected from `p` to a plane cubic; each point of the cubic
/// lifts back to the curve, and `S23` pulled back along the lift is a quartic. Four of the
/// twelve cubic-quartic intersections come from the two lines of `S12` through `p` and are
/// dropped.
pub fn base_points(triple: &QuadricTriple, p: &Vector4<f64>) -> (usize, Vec<Vector4<f64>>) {
    let p = p / p.norm();
    let m = complement_rows4(&p);
    let (s12, s13, s23) = (triple.s12, triple.s13, triple.s23);
    let a2 = m * s12.matrix() * m.transpose();
    let a1: Vector3<f64> = m * s12.matrix() * p;
    let b2 = m * s13.matrix() * m.transpose();
    let b1: Vector3<f64> = m * s13.matrix() * p;
    let qa = Form3::quadratic(&a2);
    let la = Form3::linear(&a1);
    let cubic = qa.mul(&Form3::linear(&b1)).sub(&Form3::quadratic(&b2).mul(&la));
    // lift: x(u) = 2 (a1·u) Mᵀu - (uᵀ A2 u) p, one quadratic form per coordinate
    let lift: Vec<Form3> = (0..4)
        .map(|r| {
            let row = Vector3::new(m[(0, r)], m[(1, r)], m[(2, r)]);
            la.mul(&Form3::linear(&row)).scale(2.0).sub(&qa.scale(p[r]))
        })
        .collect();
    let mut quartic = Form3::zero(4);
    for r in 0..4 {
        for c in 0..4 {
            let w = s23.matrix()[(r, c)];
            if w != 0.0 {
                quartic = quartic.add(&lift[r].mul(&lift[c]).scale(w));
            }
        }
    }
    let eval_lift = |u: &Vector3<f64>| Vector4::new(lift[0].eval(u), lift[1].eval(u), lift[2].eval(u), lift[3].eval(u));
    let quadrics = [&s12, &s13, &s23];
    let mut complex = 0;
    let mut real: Vec<Vector4<f64>> = Vec::new();
    for z in intersect_curves(&cubic, &quartic) {
        let n = z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let zn = [z[0] / n, z[1] / n, z[2] / n];
        // complex lift magnitude tells the extraneous roots apart
        let lifted: f64 = lift.iter().map(|f| f.eval_complex(&zn).norm_sqr()).sum::<f64>().sqrt();
        if lifted < 1e-5 {
            continue;
        }
        complex += 1;
        let Some(u) = real_point(&z, 1e-6) else { continue };
        let u = polish_plane_point(&cubic, &quartic, &u).unwrap_or(u);
        let x0 = eval_lift(&u);
        if x0.norm() < 1e-5 {
            continue;
        }
        let Some(x) = polish_on_three(&quadrics, &x0) else { continue };
        if quadrics.iter().any(|q| q.residual(&x) > 1e-10) {
            continue;
        }
        if real.iter().all(|y| projective_distance(x.as_slice(), y.as_slice()) > 1e-6) {
            real.push(x);
        }
    }
    (complex, real)
}

/// Line through the center of `p` that `p` maps to the image point `e`.
fn preimage_line(p: &Camera, e: &Vector3<f64>) -> Result<ProjectiveLine> {
    let m = p.matrix();
    let pinv = m.transpose() * (m * m.transpose()).try_inverse().ok_or(Error::Singular)?;
    ProjectiveLine::through(p.center().coords(), &(pinv * e))
}

/// Draws camera triples `P`, `Q`, pulls the forms of `Q` back under `P`, and keeps the seven
/// base points of the resulting triple that are not the residual point.
pub fn gen_seven_point_set(seed: u64) -> Result<SevenPointSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let random_camera = |rng: &mut ChaCha8Rng| Camera::new(random_matrix4(rng).fixed_view::<3, 4>(0, 0).into_owned(), 1e-9);
    let mut best_real = 0;
    for _ in 0..SEVEN_POINT_BUDGET {
        let ps = (0..3).map(|_| random_camera(&mut rng)).collect::<Result<Vec<_>>>()?;
        let qs = (0..3).map(|_| random_camera(&mut rng)).collect::<Result<Vec<_>>>()?;
        let mut s = Vec::with_capacity(3);
        for &(i, j) in &PAIRS {
            s.push(pullback_quadric(&fundamental_form(&qs[i], &qs[j])?, &ps[i], &ps[j])?);
        }
        let triple = QuadricTriple::new(s[0], s[1], s[2]);
        let (_, base) = base_points(&triple, ps[0].center().coords());
        best_real = best_real.max(base.len());
        if base.len() != 8 {
            continue;
        }
        // the lines through p_i that P_i maps to the epipoles of the other two Q centers
        let mut planes = Vec::with_capacity(3);
        for i in 0..3 {
            let others: Vec<usize> = (0..3).filter(|&j| j != i).collect();
            let lines = others
                .iter()
                .map(|&j| preimage_line(&ps[i], &(qs[i].matrix() * qs[j].center().coords())))
                .collect::<Result<Vec<_>>>()?;
            planes.push(plane_span(&lines[0], &lines[1])?);
        }
        let Locus::Point(r) = intersect_three_planes(&planes[0], &planes[1], &planes[2], 1e-9) else {
            continue;
        };
        let hits: Vec<usize> = (0..8).filter(|&k| HomPoint3::new(base[k]).is_ok_and(|b| r.distance(&b) <= 1e-8)).collect();
        if hits.len() != 1 {
            continue;
        }
        let points = base
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != hits[0])
            .map(|(_, x)| HomPoint3::new(*x))
            .collect::<Result<Vec<_>>>()?;
        let Ok(scene) = Scene::new(ps.clone(), points, None, 1e-3) else { continue };
        return Ok(SevenPointSet {
            scene,
            residual: HomPoint3::new(base[hits[0]])?,
            triple,
            planes: [planes[0], planes[1], planes[2]],
            conjugate_cameras: qs,
            base: base.iter().map(|x| HomPoint3::new(*x)).collect::<Result<Vec<_>>>()?,
        });
    }
    Err(Error::ComplexBasePoints(best_real))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seven_point_set_is_on_the_triple() {
        let set = gen_seven_point_set(1).unwrap();
        assert_eq!(set.scene.points.len(), 7);
        assert_eq!(set.base.len(), 8);
        for x in set.scene.points.iter().chain(std::iter::once(&set.residual)) {
            for s in set.triple.as_array() {
                assert!(s.residual(x.coords()) <= 1e-9);
            }
        }
        assert!(set.scene.points.iter().all(|x| x.distance(&set.residual) > 1e-6));
    }
}
