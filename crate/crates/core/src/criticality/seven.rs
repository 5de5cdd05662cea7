use super::conjugate::conjugate_reconstruction;
use super::{center_coords, compatibility_witnesses, point_coords, residual_locus, CriticalityVerdict, QuadricTriple, Status, PAIRS};
use crate::error::{Error, Result};
use crate::family::Family;
use crate::projective::Scene;
use crate::quadrics::{quadrics_through, Locus, Quadric};
use crate::tolerance::ToleranceProfile;

/// Seven points and three views: the three quadrics through the points and each pair of
/// centers are unique; the configuration is critical when they are compatible and the
/// residual point of the witness is not one of the seven.
pub fn seven_point_critical(scene: &Scene, tol: &ToleranceProfile) -> Result<CriticalityVerdict> {
    if scene.points.len() != 7 || scene.cameras.len() != 3 {
        return Err(Error::DegenerateInput("expected seven points and three cameras".into()));
    }
    let pts = point_coords(scene);
    let centers = center_coords(scene);
    let mut quadrics: Vec<Quadric> = Vec::with_capacity(3);
    for &(i, j) in &PAIRS {
        let mut all = pts.clone();
        all.push(centers[i]);
        all.push(centers[j]);
        let family = quadrics_through(&all, tol.rank);
        if family.len() != 1 {
            return Err(Error::Underdetermined(family.len()));
        }
        quadrics.push(family[0]);
    }
    let triple = QuadricTriple::new(quadrics[0], quadrics[1], quadrics[2]);
    let witnesses = compatibility_witnesses(&triple, &centers, tol);
    if witnesses.is_empty() {
        let mut v = CriticalityVerdict::bare(Status::NotCritical, "the three quadrics are not compatible");
        v.triple = Some(triple);
        return Ok(v);
    }
    let mut reason = String::from("no witness produced a valid second reconstruction");
    for w in &witnesses {
        let residual = residual_locus(w, tol.compatibility);
        if let Some(Locus::Point(r)) = &residual {
            if let Some(k) = scene.points.iter().position(|x| x.approx_eq(r, tol.coincidence)) {
                reason = format!("the residual point of the quadric triple is point {k}");
                continue;
            }
        }
        match conjugate_reconstruction(scene, &triple, w, tol) {
            Ok(c) => {
                return Ok(CriticalityVerdict {
                    status: Status::Critical,
                    family: Some(Family::SevenPoints),
                    triple: Some(triple),
                    witness: Some(*w),
                    residual,
                    max_image_residual: Some(c.max_image_residual),
                    conjugate: Some(c.scene),
                    reason: "compatible quadric triple whose residual point is not in the set".into(),
                });
            }
            Err(Error::ResidualPoint(k)) => reason = format!("point {k} lies on the residual locus"),
            Err(e) => reason = format!("second reconstruction failed: {e}"),
        }
    }
    let mut v = CriticalityVerdict::bare(Status::NotCritical, reason);
    v.triple = Some(triple);
    Ok(v)
}
