use nalgebra::DMatrix;

use super::two_view::form_from_pair;
use super::{CompatWitness, QuadricTriple, PAIRS};
use crate::error::{Error, Result};
use crate::fundamental::{camera_pair_from_form, recover_third_camera, triple_compatible, BilinearForm, CompatibilityKind};
use crate::linalg::skew;
use crate::projective::{image_residuals, reconstructions_equivalent, triangulate, Camera, HomPoint3, Scene};
use crate::quadrics::Locus;
use crate::tolerance::ToleranceProfile;

/// A second reconstruction with the same images.
#[derive(Debug, Clone, PartialEq)]
pub struct Conjugate {
    pub scene: Scene,
    pub forms: [BilinearForm; 3],
    pub kind: CompatibilityKind,
    pub max_image_residual: f64,
}

/// Constraints `[P3 x]ₓ Q3 y = 0` where `y` is triangulated from the first two conjugate views.
fn point_rows(scene: &Scene, q1: &Camera, q2: &Camera) -> Result<DMatrix<f64>> {
    let images = scene.images()?;
    let mut rows: Vec<[f64; 12]> = Vec::new();
    for im in &images {
        let y = triangulate(&[q1.clone(), q2.clone()], &im[..2])?;
        // skip points whose two-view triangulation is unstable
        let fit = [q1, q2]
            .iter()
            .zip(&im[..2])
            .map(|(q, u)| q.project(&y).map(|v| v.distance(u)).unwrap_or(1.0))
            .fold(0.0, f64::max);
        if fit > 1e-6 {
            continue;
        }
        let y = y.coords();
        let u = skew(im[2].coords());
        for r in 0..3 {
            let mut row = [0.0; 12];
            for s in 0..3 {
                for c in 0..4 {
                    row[4 * s + c] = u[(r, s)] * y[c];
                }
            }
            rows.push(row);
        }
    }
    Ok(DMatrix::from_fn(rows.len(), 12, |r, c| rows[r][c]))
}

/// Builds the conjugate reconstruction from a compatible quadric triple and its witness, and
/// checks that it reproduces every image and is not projectively equivalent to the input.
pub fn conjugate_reconstruction(
    scene: &Scene,
    triple: &QuadricTriple,
    witness: &CompatWitness,
    tol: &ToleranceProfile,
) -> Result<Conjugate> {
    if scene.cameras.len() != 3 {
        return Err(Error::DegenerateInput("conjugate reconstruction needs three cameras".into()));
    }
    if let Some(locus) = super::residual_locus(witness, tol.compatibility) {
        for (k, x) in scene.points.iter().enumerate() {
            let on = match &locus {
                Locus::Point(r) => r.approx_eq(x, tol.coincidence),
                Locus::Line(l) => l.contains(x.coords(), tol.coincidence),
                Locus::Plane(_) => false,
            };
            if on {
                return Err(Error::ResidualPoint(k));
            }
        }
    }
    let cams = &scene.cameras;
    let forms = PAIRS
        .iter()
        .map(|&(i, j)| form_from_pair(triple.get(i, j), &cams[i], &cams[j], &witness.pair(i, j)))
        .collect::<Result<Vec<_>>>()?;
    let kind = triple_compatible(&forms[0], &forms[1], &forms[2], tol)
        .map(|v| v.kind)
        .unwrap_or(CompatibilityKind::Incompatible);
    let (q1, q2) = camera_pair_from_form(&forms[0])?;
    let collinear = witness.is_collinear() || kind == CompatibilityKind::Collinear;
    let direct = if collinear {
        Err(Error::Incompatible)
    } else {
        recover_third_camera(&q1, &q2, &forms[1], &forms[2], None, false)
    };
    let q3 = match direct {
        Ok(c) => c,
        Err(_) => {
            let extra = point_rows(scene, &q1, &q2)?;
            recover_third_camera(&q1, &q2, &forms[1], &forms[2], Some(&extra), collinear)?
        }
    };
    let qs = vec![q1, q2, q3];
    let images = scene.images()?;
    let ys = images.iter().map(|im| triangulate(&qs, im)).collect::<Result<Vec<HomPoint3>>>()?;
    let conj = Scene::new(qs, ys, scene.labels.clone(), tol.coincidence)?;
    let worst = image_residuals(scene, &conj)?.into_iter().fold(0.0, f64::max);
    if !(worst <= tol.image) {
        return Err(Error::ImageMismatch(worst));
    }
    if scenes_equivalent(scene, &conj, tol)? {
        return Err(Error::DegenerateInput("the second reconstruction is projectively equivalent".into()));
    }
    Ok(Conjugate {
        scene: conj,
        forms: [forms[0], forms[1], forms[2]],
        kind,
        max_image_residual: worst,
    })
}

/// Equivalence test that falls back to the reverse direction when the input is too flat.
pub fn scenes_equivalent(a: &Scene, b: &Scene, tol: &ToleranceProfile) -> Result<bool> {
    match reconstructions_equivalent(a, b, tol.coincidence) {
        Err(Error::InsufficientData) => match reconstructions_equivalent(b, a, tol.coincidence) {
            // flat on one side only: no invertible map can relate them
            Ok(_) => Ok(false),
            Err(e) => Err(e),
        },
        other => other,
    }
}
