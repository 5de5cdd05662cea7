use nalgebra::Vector4;

use super::{CompatWitness, QuadricTriple, SixLines, PAIRS};
use crate::error::Error;
use crate::linalg::RightSvd;
use crate::quadrics::{
    intersect_three_planes, is_permissible, permissible_pairs, plane_span, Locus, PermissiblePair, Plane3,
    ProjectiveLine, Quadric,
};
use crate::tolerance::ToleranceProfile;

/// Incidence tolerance for the line and plane conditions on unit-norm quadrics.
pub const GEOMETRIC_TOL: f64 = 1e-7;

/// Samples taken from each one-parameter family of permissible pairs.
const FAMILY_SAMPLES: usize = 12;

/// Upper bound on the number of witnesses collected.
const MAX_WITNESSES: usize = 64;

/// Whether the plane lies on the quadric.
fn plane_on_quadric(s: &Quadric, plane: &Plane3, tol: f64) -> bool {
    let c = plane.covector();
    let basis = RightSvd::new(&nalgebra::DMatrix::from_row_slice(1, 4, c.as_slice())).trailing(3);
    let b = nalgebra::Matrix4x3::from_fn(|r, k| basis[(r, k)]);
    (b.transpose() * s.matrix() * b).abs().max() <= tol
}

fn meet_on_quadric(a: &Plane3, b: &Plane3, s: &Quadric) -> bool {
    if a.approx_eq(b, 1e-9) {
        return plane_on_quadric(s, a, GEOMETRIC_TOL);
    }
    let m = nalgebra::DMatrix::from_row_slice(2, 4, &[
        a.covector()[0], a.covector()[1], a.covector()[2], a.covector()[3],
        b.covector()[0], b.covector()[1], b.covector()[2], b.covector()[3],
    ]);
    let null = RightSvd::new(&m).trailing(2);
    match ProjectiveLine::from_span(&null) {
        Ok(l) => s.contains_line(&l, GEOMETRIC_TOL),
        Err(_) => false,
    }
}

/// Permissible pairs offered for one quadric, oriented so `line1` passes through center `i`.
pub(crate) fn pair_candidates(s: &Quadric, pi: &Vector4<f64>, pj: &Vector4<f64>, tol: &ToleranceProfile) -> Vec<PermissiblePair> {
    permissible_pairs(s, pi, pj, tol).map(|p| p.candidates(FAMILY_SAMPLES)).unwrap_or_default()
}

fn others(i: usize) -> [usize; 2] {
    match i {
        0 => [1, 2],
        1 => [0, 2],
        _ => [0, 1],
    }
}

/// The second line of the plane section of `s` when it splits into `l` and another line.
fn residual_line(s: &Quadric, plane: &Plane3, l: &ProjectiveLine) -> Option<ProjectiveLine> {
    let basis = RightSvd::new(&nalgebra::DMatrix::from_row_slice(1, 4, plane.covector().as_slice())).trailing(3);
    let b = nalgebra::Matrix4x3::from_fn(|r, k| basis[(r, k)]);
    let c = b.transpose() * s.matrix() * b;
    let (la, lb) = l.span();
    let l1 = (b.transpose() * la).cross(&(b.transpose() * lb));
    // c = l1 l2ᵀ + l2 l1ᵀ, linear in l2
    let idx = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];
    let m = nalgebra::DMatrix::from_fn(6, 3, |r, k| {
        let (u, v) = idx[r];
        (if v == k { l1[u] } else { 0.0 }) + (if u == k { l1[v] } else { 0.0 })
    });
    let rhs = nalgebra::DVector::from_iterator(6, idx.iter().map(|&(u, v)| c[(u, v)]));
    if rhs.norm() <= GEOMETRIC_TOL {
        return None;
    }
    let l2 = m.clone().svd(true, true).solve(&rhs, 1e-12).ok()?;
    if (&m * &l2 - &rhs).norm() > 1e-6 * rhs.norm() {
        return None;
    }
    let pts = RightSvd::new(&nalgebra::DMatrix::from_row_slice(1, 3, l2.as_slice())).trailing(2);
    let p = |k: usize| b * nalgebra::Vector3::new(pts[(0, k)], pts[(1, k)], pts[(2, k)]);
    ProjectiveLine::through(&p(0), &p(1)).ok()
}

fn planes_meet_on_quadrics(triple: &QuadricTriple, planes: &[Plane3; 3]) -> bool {
    PAIRS.iter().all(|&(i, j)| meet_on_quadric(&planes[i], &planes[j], triple.get(i, j)))
}

/// Six lines satisfy the plane conditions: the lines through each center span a plane and
/// any two of these planes meet inside the quadric of the corresponding pair.
///
/// When the two lines at one center coincide, the plane there is any plane through that line;
/// the only candidates are spanned by it and a line of the section of a neighbouring plane.
pub(crate) fn check_six_lines(triple: &QuadricTriple, lines: &SixLines) -> Option<[Plane3; 3]> {
    let mut planes: [Option<Plane3>; 3] = [None; 3];
    let mut open = None;
    for i in 0..3 {
        let [a, b] = others(i);
        match plane_span(lines.line(i, a), lines.line(i, b)) {
            Ok(p) => planes[i] = Some(p),
            Err(Error::CoincidentLines) if open.is_none() => open = Some(i),
            Err(_) => return None,
        }
    }
    let Some(c) = open else {
        let full = planes.map(|p| p.expect("every plane spanned"));
        return planes_meet_on_quadrics(triple, &full).then_some(full);
    };
    let g = lines.line(c, others(c)[0]);
    for o in others(c) {
        let po = planes[o]?;
        let l = lines.line(o, c);
        for cand in [Some(*l), residual_line(triple.get(c, o), &po, l)].into_iter().flatten() {
            let Ok(pc) = plane_span(g, &cand) else { continue };
            let mut full = planes;
            full[c] = Some(pc);
            let full = full.map(|p| p.expect("every plane spanned"));
            if planes_meet_on_quadrics(triple, &full) {
                return Some(full);
            }
        }
    }
    None
}

/// Pairs from explicit candidate lists, checked for both witness shapes.
pub(crate) fn witnesses_from_candidates(
    triple: &QuadricTriple,
    centers: &[Vector4<f64>],
    cands: &[Vec<PermissiblePair>; 3],
    tol: &ToleranceProfile,
) -> Vec<CompatWitness> {
    let mut out = Vec::new();
    for a in &cands[0] {
        for b in &cands[1] {
            for c in &cands[2] {
                // a: (g_1^2, g_2^1), b: (g_1^3, g_3^1), c: (g_2^3, g_3^2)
                let table = |i: usize, j: usize| match (i, j) {
                    (0, 1) => a.line1,
                    (1, 0) => a.line2,
                    (0, 2) => b.line1,
                    (2, 0) => b.line2,
                    (1, 2) => c.line1,
                    (2, 1) => c.line2,
                    _ => unreachable!(),
                };
                let lines = SixLines::new(table);
                if let Some(planes) = check_six_lines(triple, &lines) {
                    out.push(CompatWitness::NonCollinear { lines, planes });
                    if out.len() >= MAX_WITNESSES {
                        return out;
                    }
                }
            }
        }
    }
    out.extend(collinear_witnesses(triple, centers, cands, tol));
    out.truncate(MAX_WITNESSES);
    out
}

/// Lines `l_i` through center `i` lying on both quadrics at that center, pairwise permissible.
fn collinear_witnesses(
    triple: &QuadricTriple,
    centers: &[Vector4<f64>],
    cands: &[Vec<PermissiblePair>; 3],
    tol: &ToleranceProfile,
) -> Vec<CompatWitness> {
    // lines through each center offered by each of its two quadrics
    let through = |i: usize, j: usize| -> Vec<ProjectiveLine> {
        let idx = PAIRS.iter().position(|&(a, b)| (a, b) == (i.min(j), i.max(j))).expect("pair index");
        cands[idx]
            .iter()
            .map(|p| if i < j { p.line1 } else { p.line2 })
            .collect()
    };
    let mut per_center: Vec<Vec<ProjectiveLine>> = Vec::new();
    for i in 0..3 {
        let others: Vec<usize> = (0..3).filter(|&j| j != i).collect();
        let first = through(i, others[0]);
        let second = through(i, others[1]);
        let mut shared: Vec<ProjectiveLine> = Vec::new();
        for l in &first {
            if second.iter().any(|m| m.approx_eq(l, 1e-6)) && !shared.iter().any(|m| m.approx_eq(l, 1e-6)) {
                shared.push(*l);
            }
        }
        // a line on both quadrics that was not sampled from the second family
        for l in &first {
            if triple.get(i, others[1]).contains_line(l, GEOMETRIC_TOL) && !shared.iter().any(|m| m.approx_eq(l, 1e-6)) {
                shared.push(*l);
            }
        }
        per_center.push(shared);
    }
    let mut out = Vec::new();
    for l0 in &per_center[0] {
        for l1 in &per_center[1] {
            for l2 in &per_center[2] {
                let lines = [*l0, *l1, *l2];
                let ok = PAIRS.iter().all(|&(i, j)| {
                    is_permissible(
                        triple.get(i, j),
                        &centers[i],
                        &centers[j],
                        &PermissiblePair { line1: lines[i], line2: lines[j] },
                        tol.rank.max(GEOMETRIC_TOL),
                    )
                });
                if ok {
                    out.push(CompatWitness::Collinear { lines });
                }
            }
        }
    }
    out
}

/// Every witness found among the permissible pairs of the three quadrics; families of pairs
/// are sampled on a fixed grid.
pub fn compatibility_witnesses(triple: &QuadricTriple, centers: &[Vector4<f64>], tol: &ToleranceProfile) -> Vec<CompatWitness> {
    if centers.len() != 3 {
        return vec![];
    }
    let cands: [Vec<PermissiblePair>; 3] =
        PAIRS.map(|(i, j)| pair_candidates(triple.get(i, j), &centers[i], &centers[j], tol));
    witnesses_from_candidates(triple, centers, &cands, tol)
}

/// First witness of compatibility, preferring the non-collinear kind.
pub fn geometric_compatibility(triple: &QuadricTriple, centers: &[Vector4<f64>], tol: &ToleranceProfile) -> Option<CompatWitness> {
    compatibility_witnesses(triple, centers, tol).into_iter().next()
}

/// Common locus of the three planes of a non-collinear witness.
pub fn residual_locus(witness: &CompatWitness, tol: f64) -> Option<Locus> {
    match witness {
        CompatWitness::NonCollinear { planes, .. } => Some(intersect_three_planes(&planes[0], &planes[1], &planes[2], tol)),
        CompatWitness::Collinear { .. } => None,
    }
}
