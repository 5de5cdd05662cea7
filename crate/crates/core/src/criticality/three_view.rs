use nalgebra::{DMatrix, Matrix3, Matrix4, Vector3, Vector4};

use super::conjugate::{conjugate_reconstruction, Conjugate};
use super::two_view::two_view_critical;
use super::{
    center_coords, compatibility_witnesses, point_coords, residual_locus, seven_point_critical, CompatWitness,
    CriticalityVerdict, QuadricTriple, SixLines, Status, PAIRS,
};
use crate::error::{Error, Result};
use crate::family::Family;
use crate::linalg::{complement_rows4, projective_distance, sym_to_vec10, RightSvd};
use crate::poly::Form3;
use crate::projective::Scene;
use crate::quadrics::{quadrics_through, Plane3, ProjectiveLine, Quadric};
use crate::synthesis::{all_triangles_on_cubic, PlaneCubic};
use crate::tolerance::ToleranceProfile;

/// Witnesses tried per quadric triple before moving on.
const WITNESS_TRIES: usize = 24;

/// Data points tried as projection centers.
const PROJECTION_TRIES: usize = 6;

/// Point pairs tried as the common line.
const LINE_TRIES: usize = 15;

/// Dispatches on the number of cameras.
pub fn check_scene(scene: &Scene, tol: &ToleranceProfile) -> Result<CriticalityVerdict> {
    match scene.cameras.len() {
        2 => check_two_views(scene, tol),
        3 => three_view_critical(scene, tol),
        n => Err(Error::DegenerateInput(format!("expected 2 or 3 cameras, got {n}"))),
    }
}

fn check_two_views(scene: &Scene, tol: &ToleranceProfile) -> Result<CriticalityVerdict> {
    let v = two_view_critical(&scene.cameras[0], &scene.cameras[1], &scene.points, tol)?;
    let mut out = match (&v.conjugate, v.critical) {
        (Some(conj), true) => {
            if super::conjugate::scenes_equivalent(scene, conj, tol).unwrap_or(false) {
                CriticalityVerdict::bare(Status::NotCritical, "the only second reconstruction found is equivalent")
            } else {
                let mut o = CriticalityVerdict::bare(Status::Critical, "a quadric through the points and centers carries a permissible pair");
                o.conjugate = Some(conj.clone());
                o.max_image_residual = v.max_image_residual;
                o
            }
        }
        (None, true) => CriticalityVerdict::bare(
            Status::NotCritical,
            "a permissible pair exists but no second reconstruction could be verified",
        ),
        _ => CriticalityVerdict::bare(Status::NotCritical, "no quadric through the points and centers carries a permissible pair"),
    };
    if v.quadric.is_some() {
        out.reason = format!("{} (quadric space dimension {})", out.reason, v.dimension);
    }
    Ok(out)
}

/// Decides criticality for three views.
pub fn three_view_critical(scene: &Scene, tol: &ToleranceProfile) -> Result<CriticalityVerdict> {
    if scene.cameras.len() != 3 {
        return Err(Error::DegenerateInput("expected three cameras".into()));
    }
    let n = scene.points.len();
    if n <= 6 {
        return Ok(CriticalityVerdict::bare(
            Status::AlwaysCritical,
            "six or fewer points are critical for three views",
        ));
    }
    if n == 7 {
        match seven_point_critical(scene, tol) {
            Err(Error::Underdetermined(k)) => {
                return Ok(general(scene, tol)?.unwrap_or_else(|| {
                    CriticalityVerdict::bare(
                        Status::NotCritical,
                        format!("seven points not in general position (quadric space dimension {k}) and no construction applied"),
                    )
                }));
            }
            other => return other,
        }
    }
    Ok(general(scene, tol)?.unwrap_or_else(|| CriticalityVerdict::bare(Status::NotCritical, "no compatible quadric triple found")))
}

struct Ctx<'a> {
    scene: &'a Scene,
    tol: &'a ToleranceProfile,
    centers: Vec<Vector4<f64>>,
    points: Vec<Vector4<f64>>,
    spaces: [Vec<Quadric>; 3],
}

fn general(scene: &Scene, tol: &ToleranceProfile) -> Result<Option<CriticalityVerdict>> {
    let centers = center_coords(scene);
    let points = point_coords(scene);
    let spaces = PAIRS.map(|(i, j)| {
        let mut all = points.clone();
        all.push(centers[i]);
        all.push(centers[j]);
        quadrics_through(&all, tol.rank)
    });
    if let Some(k) = spaces.iter().position(|s| s.is_empty()) {
        let (i, j) = PAIRS[k];
        return Ok(Some(CriticalityVerdict::bare(
            Status::NotCritical,
            format!("no quadric passes through the points and centers {} and {}", i + 1, j + 1),
        )));
    }
    let ctx = Ctx { scene, tol, centers, points, spaces };
    let dims = ctx.spaces.each_ref().map(|s| s.len());
    let strategies: [fn(&Ctx) -> Option<CriticalityVerdict>; 5] = [plane_conic, unique, elliptic, two_on_curve, shared_line];
    for s in strategies {
        if let Some(v) = s(&ctx) {
            return Ok(Some(v));
        }
    }
    Ok(Some(CriticalityVerdict::bare(
        Status::NotCritical,
        format!("quadric spaces of dimensions {dims:?} admit no verified compatible triple"),
    )))
}

fn verdict(ctx: &Ctx, triple: QuadricTriple, w: CompatWitness, c: Conjugate, family: Option<Family>, reason: &str) -> CriticalityVerdict {
    CriticalityVerdict {
        status: Status::Critical,
        family,
        triple: Some(triple),
        witness: Some(w),
        residual: residual_locus(&w, ctx.tol.compatibility),
        conjugate: Some(c.scene),
        max_image_residual: Some(c.max_image_residual),
        reason: reason.into(),
    }
}

/// Searches the witnesses of a triple for one whose second reconstruction verifies.
fn try_triple(ctx: &Ctx, triple: &QuadricTriple) -> Option<(CompatWitness, Conjugate)> {
    let ws = compatibility_witnesses(triple, &ctx.centers, ctx.tol);
    try_witnesses(ctx, triple, &ws)
}

fn try_witnesses(ctx: &Ctx, triple: &QuadricTriple, ws: &[CompatWitness]) -> Option<(CompatWitness, Conjugate)> {
    for w in ws.iter().take(WITNESS_TRIES) {
        if let Ok(c) = conjugate_reconstruction(ctx.scene, triple, w, ctx.tol) {
            return Some((*w, c));
        }
    }
    None
}

fn combine(basis: &[Quadric], w: &[f64]) -> Option<Quadric> {
    let m = basis.iter().zip(w).fold(Matrix4::zeros(), |acc, (q, &c)| acc + q.matrix() * c);
    Quadric::new(m).ok()
}

/// Fixed generic weights, different for each `salt`.
fn generic_weights(k: usize, salt: usize) -> Vec<f64> {
    (0..k)
        .map(|m| (((m + 1) * (2 * salt + 3)) as f64 * 0.618_033_988_7).fract() - 0.5)
        .collect()
}

/// Members of the span of `basis` that contain the line, as a new basis.
fn members_containing_line(basis: &[Quadric], line: &ProjectiveLine) -> Vec<Quadric> {
    let (a, b) = line.span();
    let k = basis.len();
    let mut m = DMatrix::zeros(3, k);
    for (c, q) in basis.iter().enumerate() {
        m[(0, c)] = q.eval(&a);
        m[(1, c)] = q.eval(&b);
        m[(2, c)] = a.dot(&(q.matrix() * b));
    }
    let svd = RightSvd::new(&m);
    let null = svd.sigma.iter().filter(|&&s| s <= 1e-8).count();
    let weights = svd.trailing(null);
    weights
        .column_iter()
        .filter_map(|w| combine(basis, w.as_slice()))
        .collect()
}

/// Distance of `q` from the linear span of `basis`, in coefficient space.
fn span_residual(basis: &[Quadric], q: &Quadric) -> f64 {
    let cols: Vec<nalgebra::DVector<f64>> = basis.iter().map(|b| nalgebra::DVector::from_row_slice(&sym_to_vec10(b.matrix()))).collect();
    let a = DMatrix::from_columns(&cols);
    let y = nalgebra::DVector::from_row_slice(&sym_to_vec10(q.matrix()));
    let svd = a.clone().svd(true, true);
    match svd.solve(&y, 1e-12) {
        Ok(x) => (&a * x - &y).norm() / y.norm(),
        Err(_) => 1.0,
    }
}

fn same_space(a: &[Quadric], b: &[Quadric]) -> bool {
    a.len() == b.len() && b.iter().all(|q| span_residual(a, q) <= 1e-7)
}

fn centers_plane(ctx: &Ctx) -> Option<Plane3> {
    Plane3::through(&ctx.centers[0], &ctx.centers[1], &ctx.centers[2], 1e-9).ok()
}

fn unique(ctx: &Ctx) -> Option<CriticalityVerdict> {
    if ctx.spaces.iter().any(|s| s.len() != 1) {
        return None;
    }
    let triple = QuadricTriple::new(ctx.spaces[0][0], ctx.spaces[1][0], ctx.spaces[2][0]);
    let (w, c) = try_triple(ctx, &triple)?;
    let collinear = centers_plane(ctx).is_none();
    let family = collinear.then_some(Family::CollinearCamerasOffCurve);
    Some(verdict(ctx, triple, w, c, family, "the unique quadrics through the points form a compatible triple"))
}

/// Points of the base curve of `family` that avoid the data points and the centers, found by
/// walking along the curve from each data point in turn.
fn projection_candidates(ctx: &Ctx, family: &[Quadric]) -> Vec<Vector4<f64>> {
    free_curve_points(ctx, family, true, PROJECTION_TRIES)
}

fn free_curve_points(ctx: &Ctx, family: &[Quadric], off_center_plane: bool, cap: usize) -> Vec<Vector4<f64>> {
    let plane = centers_plane(ctx).filter(|_| off_center_plane);
    let clear = |z: &Vector4<f64>| {
        plane.as_ref().is_none_or(|p| !p.contains(z, 1e-3))
            && ctx.points.iter().chain(&ctx.centers).all(|q| projective_distance(z.as_slice(), q.as_slice()) > 0.05)
    };
    let mut out = Vec::new();
    // alternate between the ends of the list so that starts spread over the components
    let n = ctx.points.len();
    let order = (0..n).map(|t| if t % 2 == 0 { t / 2 } else { n - 1 - t / 2 });
    for start in order.map(|t| &ctx.points[t]) {
        let mut z = start / start.norm();
        for step in 1..=24 {
            let Some(next) = curve_step(family, &z, 0.1) else { break };
            z = next;
            if step % 3 == 0 && clear(&z) {
                out.push(z);
                break;
            }
        }
        if out.len() >= cap {
            break;
        }
    }
    out
}

/// One step along the base curve of `family`: move along the tangent, then pull back onto the
/// curve with Gauss-Newton.
fn curve_step(family: &[Quadric], z: &Vector4<f64>, h: f64) -> Option<Vector4<f64>> {
    let jac = |z: &Vector4<f64>| DMatrix::from_fn(family.len(), 4, |r, c| 2.0 * (family[r].matrix() * z)[c]);
    let mut tangent_rows = jac(z).insert_row(family.len(), 0.0);
    for c in 0..4 {
        tangent_rows[(family.len(), c)] = z[c];
    }
    let t = RightSvd::new(&tangent_rows).smallest();
    let mut z = z + Vector4::new(t[0], t[1], t[2], t[3]) * h;
    z /= z.norm();
    for _ in 0..30 {
        let f = nalgebra::DVector::from_fn(family.len(), |r, _| family[r].eval(&z));
        if f.amax() <= 1e-15 {
            break;
        }
        // the net's third gradient nearly vanishes next to the curve; drop it so the
        // correction stays normal to the curve
        let svd = jac(&z).svd(true, true);
        let cut = 1e-2 * svd.singular_values.max();
        let step = svd.solve(&f, cut).ok()?;
        z -= Vector4::new(step[0], step[1], step[2], step[3]);
        z /= z.norm();
    }
    family.iter().all(|q| q.eval(&z).abs() <= 1e-12).then_some(z)
}

/// The pencil member through `z`.
fn pencil_member_through(a: &Quadric, b: &Quadric, z: &Vector4<f64>) -> Option<Quadric> {
    Quadric::new(b.matrix() * a.eval(z) - a.matrix() * b.eval(z)).ok()
}

fn lift(m: &nalgebra::Matrix3x4<f64>, y: &Vector3<f64>) -> Vector4<f64> {
    m.transpose() * y
}

/// All three pairs share one pencil: project its base curve from a curve point to a plane
/// cubic, find a triangle whose sides pass through the projected centers, and take for each
/// pair the pencil member containing the corresponding secant.
fn elliptic(ctx: &Ctx) -> Option<CriticalityVerdict> {
    if ctx.spaces.iter().any(|s| s.len() != 2) || !same_space(&ctx.spaces[0], &ctx.spaces[1]) || !same_space(&ctx.spaces[0], &ctx.spaces[2]) {
        return None;
    }
    let (a, b) = (ctx.spaces[0][0], ctx.spaces[0][1]);
    for x in projection_candidates(ctx, &ctx.spaces[0]) {
        let Some((m, cubic)) = projected_cubic(&a, &b, &x) else { continue };
        let proj: Vec<Vector3<f64>> = ctx.centers.iter().map(|c| (m * c).normalize()).collect();
        let Ok(tris) = all_triangles_on_cubic(&cubic, [&proj[0], &proj[1], &proj[2]]) else { continue };
        for ys in tris {
            // the secant over y_k lies on the quadric of the pair not containing k
            let pick = |k: usize| pencil_member_through(&a, &b, &lift(&m, &ys[k]));
            let (Some(s12), Some(s13), Some(s23)) = (pick(2), pick(1), pick(0)) else { continue };
            let triple = QuadricTriple::new(s12, s13, s23);
            if let Some((w, c)) = try_triple(ctx, &triple) {
                return Some(verdict(
                    ctx,
                    triple,
                    w,
                    c,
                    Some(Family::EllipticQuartic),
                    "pencil members through a triangle of secants form a compatible triple",
                ));
            }
        }
    }
    None
}

/// One pair has a net, the other two share a pencil: the points lie on a twisted cubic through
/// two centers. From a curve point the cubic projects to a conic through two projected centers;
/// a line through the third projected center cuts the conic in two triangle vertices, and the
/// remaining vertex closes the triangle.
fn two_on_curve(ctx: &Ctx) -> Option<CriticalityVerdict> {
    let dims = ctx.spaces.each_ref().map(|s| s.len());
    let net_pair = (0..3).find(|&p| dims[p] == 3 && (0..3).filter(|&q| q != p).all(|q| dims[q] == 2))?;
    let (i, j) = PAIRS[net_pair];
    let k = 3 - i - j;
    let slot = |u: usize, v: usize| PAIRS.iter().position(|&(a, b)| (a, b) == (u.min(v), u.max(v))).expect("pair");
    let net = &ctx.spaces[net_pair];
    for x in projection_candidates(ctx, net) {
        let m = complement_rows4(&x);
        // the member of the net singular at x is the cone over the projected curve
        let sys = DMatrix::from_fn(4, 3, |r, c| (net[c].matrix() * x)[r]);
        let w = RightSvd::new(&sys).smallest();
        let Some(cone) = combine(net, w.as_slice()) else { continue };
        let conic: Matrix3<f64> = m * cone.matrix() * m.transpose();
        let proj: Vec<Vector3<f64>> = ctx.centers.iter().map(|c| (m * c).normalize()).collect();
        let on = |u: &Vector3<f64>| (u.transpose() * conic * u)[0].abs() / conic.norm() <= 1e-8;
        if !(on(&proj[i]) && on(&proj[j])) || on(&proj[k]) {
            continue;
        }
        let (e1, e2) = complement3(&proj[k]);
        for t in 0..8 {
            let phi = std::f64::consts::PI * (t as f64 + 0.3) / 8.0;
            let Some((r1, r2)) = line_conic(&conic, &proj[k], &(e1 * phi.cos() + e2 * phi.sin())) else { continue };
            for (yi, yj) in [(r1, r2), (r2, r1)] {
                let yk = yj.cross(&proj[i]).cross(&yi.cross(&proj[j]));
                if yk.norm() <= 1e-12 {
                    continue;
                }
                let mut ys = [Vector3::zeros(); 3];
                ys[i] = yi;
                ys[j] = yj;
                ys[k] = yk.normalize();
                let mut chosen: [Option<Quadric>; 3] = [None; 3];
                for (sl, &(u, v)) in PAIRS.iter().enumerate() {
                    let Ok(line) = ProjectiveLine::through(&x, &lift(&m, &ys[3 - u - v])) else { break };
                    chosen[sl] = members_containing_line(&ctx.spaces[slot(u, v)], &line).first().copied();
                }
                let (Some(s12), Some(s13), Some(s23)) = (chosen[0], chosen[1], chosen[2]) else { continue };
                let triple = QuadricTriple::new(s12, s13, s23);
                if let Some((w, c)) = try_triple(ctx, &triple) {
                    return Some(verdict(
                        ctx,
                        triple,
                        w,
                        c,
                        Some(Family::TwoOnCurve),
                        "quadrics through the curve and a triangle of lines form a compatible triple",
                    ));
                }
            }
        }
    }
    None
}

/// Two unit vectors spanning the complement of `v`.
fn complement3(v: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let v = v.normalize();
    let seed = if v.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let a = (seed - v * v.dot(&seed)).normalize();
    (a, v.cross(&a))
}

/// Real intersections of the line `p + s d` with a conic.
fn line_conic(c: &Matrix3<f64>, p: &Vector3<f64>, d: &Vector3<f64>) -> Option<(Vector3<f64>, Vector3<f64>)> {
    let qa = (d.transpose() * c * d)[0];
    let qb = (p.transpose() * c * d)[0];
    let qc = (p.transpose() * c * p)[0];
    let disc = qb * qb - qa * qc;
    if qa.abs() <= 1e-12 || disc <= 1e-12 * (qb * qb + (qa * qc).abs()) {
        return None;
    }
    let r = disc.sqrt();
    Some(((p + d * ((-qb + r) / qa)).normalize(), (p + d * ((-qb - r) / qa)).normalize()))
}

/// Projection from `x` of the base locus of the pencil spanned by `a` and `b`: the rows of the
/// projection and the plane cubic.
fn projected_cubic(a: &Quadric, b: &Quadric, x: &Vector4<f64>) -> Option<(nalgebra::Matrix3x4<f64>, PlaneCubic)> {
    let m = complement_rows4(x);
    let qa = Form3::quadratic(&(m * a.matrix() * m.transpose()));
    let qb = Form3::quadratic(&(m * b.matrix() * m.transpose()));
    let la = Form3::linear(&(m * a.matrix() * x));
    let lb = Form3::linear(&(m * b.matrix() * x));
    let cubic = PlaneCubic::new(qa.mul(&lb).sub(&qb.mul(&la))).ok()?;
    Some((m, cubic))
}

/// A line through two free points of the base locus lying on one member of each space: by the common-line
/// criterion any such triple is compatible.
fn shared_line(ctx: &Ctx) -> Option<CriticalityVerdict> {
    let dims = ctx.spaces.each_ref().map(|s| s.len());
    if dims.iter().all(|&d| d == 1) {
        return None;
    }
    // the line must avoid the data points, which would otherwise lie on the residual locus
    let family: Vec<Quadric> = ctx.spaces.iter().flatten().copied().collect();
    let free = free_curve_points(ctx, &family, false, 2 * PROJECTION_TRIES);
    let mut tried = 0;
    for a in 0..free.len() {
        for b in (a + 1)..free.len() {
            if tried >= LINE_TRIES {
                return None;
            }
            let Ok(line) = ProjectiveLine::through(&free[a], &free[b]) else { continue };
            if ctx.centers.iter().chain(&ctx.points).any(|c| line.distance_to(c) <= 1e-6) {
                continue;
            }
            tried += 1;
            let subs = ctx.spaces.each_ref().map(|s| members_containing_line(s, &line));
            if subs.iter().any(|s| s.is_empty()) {
                continue;
            }
            let pick = |slot: usize| {
                let s = &subs[slot];
                if s.len() == 1 {
                    Some(s[0])
                } else {
                    combine(s, &generic_weights(s.len(), slot))
                }
            };
            let (Some(s12), Some(s13), Some(s23)) = (pick(0), pick(1), pick(2)) else { continue };
            let triple = QuadricTriple::new(s12, s13, s23);
            if let Some((w, c)) = try_triple(ctx, &triple) {
                let family = match dims {
                    [3, 3, 3] => Some(Family::ThreeOnCurve),
                    [2, 2, 2] => Some(Family::TwoLines),
                    _ => None,
                };
                return Some(verdict(ctx, triple, w, c, family, "quadrics sharing a line through two curve points form a compatible triple"));
            }
        }
    }
    None
}

/// Points split into a conic through the centers in their plane and a second plane: all
/// three quadrics are the same plane pair, and the six lines are built from a point of the conic.
fn plane_conic(ctx: &Ctx) -> Option<CriticalityVerdict> {
    let pc = centers_plane(ctx)?;
    let (on_c, off_c): (Vec<Vector4<f64>>, Vec<Vector4<f64>>) = ctx.points.iter().partition(|x| pc.contains(x, ctx.tol.coincidence));
    let other = second_plane(&off_c, &pc, &ctx.centers)?;
    let (u, v) = (pc.covector(), other.covector());
    let s = Quadric::new(u * v.transpose() + v * u.transpose()).ok()?;
    let triple = QuadricTriple::new(s, s, s);
    let basis = RightSvd::new(&DMatrix::from_row_slice(1, 4, u.as_slice())).trailing(3);
    let bc = nalgebra::Matrix4x3::from_fn(|r, c| basis[(r, c)]);
    let to2 = |x: &Vector4<f64>| -> Vector3<f64> { (bc.transpose() * x).normalize() };
    let mut conic_pts: Vec<Vector3<f64>> = ctx.centers.iter().map(to2).collect();
    conic_pts.extend(on_c.iter().map(to2));
    let family = if off_c.is_empty() { Family::ConicCameras } else { Family::PlaneConic };
    for conic in conics_through(&conic_pts) {
        for a1 in closing_vertices(&conic, ctx, &bc, &other) {
            let Some(lines) = plane_conic_lines(&conic, &a1, ctx, &bc, &other) else { continue };
            let w = CompatWitness::NonCollinear { lines, planes: [pc, pc, pc] };
            if let Some((w, c)) = try_witnesses(ctx, &triple, &[w]) {
                return Some(verdict(ctx, triple, w, c, Some(family), "the points lie on a plane and a conic through the centers"));
            }
        }
    }
    None
}

/// Plane containing the points off the centers' plane, completed generically when they do not
/// determine one.
fn second_plane(off: &[Vector4<f64>], pc: &Plane3, centers: &[Vector4<f64>]) -> Option<Plane3> {
    let good = |p: &Plane3| !p.approx_eq(pc, 1e-6) && centers.iter().all(|c| !p.contains(c, 1e-3));
    if off.len() >= 3 {
        let m = DMatrix::from_fn(off.len(), 4, |r, c| off[r][c] / off[r].norm());
        let svd = RightSvd::new(&m);
        if svd.ratio(3) > 1e-9 {
            return None;
        }
        let v = svd.smallest();
        let p = Plane3::new(Vector4::new(v[0], v[1], v[2], v[3])).ok()?;
        return good(&p).then_some(p);
    }
    let extras = [
        Vector4::new(1.0, 0.3, -0.7, 0.2),
        Vector4::new(-0.4, 1.0, 0.5, -0.9),
        Vector4::new(0.8, -0.6, 1.0, 0.35),
        Vector4::new(0.25, 0.9, -0.45, 1.0),
        Vector4::new(-1.0, -0.2, 0.6, 0.75),
    ];
    let need = 3 - off.len();
    let mut combos: Vec<Vec<Vector4<f64>>> = Vec::new();
    for a in 0..extras.len() {
        if need == 1 {
            combos.push(vec![extras[a]]);
            continue;
        }
        for b in (a + 1)..extras.len() {
            if need == 2 {
                combos.push(vec![extras[a], extras[b]]);
                continue;
            }
            for c in (b + 1)..extras.len() {
                combos.push(vec![extras[a], extras[b], extras[c]]);
            }
        }
    }
    combos.into_iter().find_map(|extra| {
        let pts: Vec<Vector4<f64>> = off.iter().copied().chain(extra).collect();
        let p = Plane3::through(&pts[0], &pts[1], &pts[2], 1e-9).ok()?;
        good(&p).then_some(p)
    })
}

fn conic_row(u: &Vector3<f64>) -> [f64; 6] {
    [u.x * u.x, u.y * u.y, u.z * u.z, 2.0 * u.x * u.y, 2.0 * u.x * u.z, 2.0 * u.y * u.z]
}

fn conic_matrix(c: &[f64]) -> Matrix3<f64> {
    Matrix3::new(c[0], c[3], c[4], c[3], c[1], c[5], c[4], c[5], c[2])
}

/// Non-degenerate conics through the given plane points: the unique one, or a few generic
/// members when the points leave freedom.
fn conics_through(pts: &[Vector3<f64>]) -> Vec<Matrix3<f64>> {
    let m = DMatrix::from_fn(pts.len(), 6, |r, c| conic_row(&pts[r])[c]);
    let svd = RightSvd::new(&m);
    let null = svd.nullity(1e-9);
    if null == 0 {
        return vec![];
    }
    let basis = svd.trailing(null);
    let weights: Vec<Vec<f64>> = if null == 1 { vec![vec![1.0]] } else { (0..4).map(|s| generic_weights(null, s)).collect() };
    weights
        .into_iter()
        .map(|w| conic_matrix((&basis * nalgebra::DVector::from_vec(w)).as_slice()))
        .filter(|c| {
            let s = c.singular_values();
            s.min() > 1e-6 * s.max()
        })
        .collect()
}

/// Second intersection of the line through `p` in direction `d` with a conic through `p`.
fn second_point(conic: &Matrix3<f64>, p: &Vector3<f64>, d: &Vector3<f64>) -> Option<Vector3<f64>> {
    let qa = (d.transpose() * conic * d)[0];
    let qb = (p.transpose() * conic * d)[0];
    if qa.abs() <= 1e-12 {
        return None;
    }
    Some((p - d * (2.0 * qb / qa)).normalize())
}

/// Conic points `a1` for which the triangle construction closes up.
///
/// Projecting the conic to the line `m` from each center gives projectivities; with
/// `α = π₂π₁⁻¹` and `β = π₃π₁⁻¹` the construction closes exactly when `αβ(t) = βα(t)`
/// for `t = π₁(a1)`, a quadratic condition on `t`.
fn closing_vertices(conic: &Matrix3<f64>, ctx: &Ctx, bc: &nalgebra::Matrix4x3<f64>, other: &Plane3) -> Vec<Vector4<f64>> {
    let pc = centers_plane(ctx).expect("non-collinear centers");
    let m = DMatrix::from_row_slice(2, 4, &[pc.covector().as_slice(), other.covector().as_slice()].concat());
    let mb = RightSvd::new(&m).trailing(2);
    let mb = nalgebra::Matrix4x2::from_fn(|r, c| mb[(r, c)]);
    let p1 = (bc.transpose() * ctx.centers[0]).normalize();
    let inv1 = |t: &nalgebra::Vector2<f64>| -> Option<Vector4<f64>> {
        let d = (bc.transpose() * (mb * t)).normalize();
        second_point(conic, &p1, &(d - p1 * p1.dot(&d))).map(|u| bc * u)
    };
    let proj = |i: usize, x: &Vector4<f64>| -> Option<nalgebra::Vector2<f64>> {
        let y = ProjectiveLine::through(&ctx.centers[i], x).ok()?.meet_plane(other, 1e-12)?;
        Some(mb.transpose() * y)
    };
    let samples = [nalgebra::Vector2::new(1.0, 0.0), nalgebra::Vector2::new(0.0, 1.0), nalgebra::Vector2::new(1.0, 1.0)];
    let fit = |i: usize| -> Option<nalgebra::Matrix2<f64>> {
        let v: Vec<nalgebra::Vector2<f64>> = samples.iter().map(|t| inv1(t).and_then(|x| proj(i, &x))).collect::<Option<_>>()?;
        projectivity(&samples, &[v[0], v[1], v[2]])
    };
    let (Some(alpha), Some(beta)) = (fit(1), fit(2)) else { return vec![] };
    let (ab, ba) = (alpha * beta, beta * alpha);
    let g = |t: nalgebra::Vector2<f64>| {
        let (x, y) = (ab * t, ba * t);
        x[0] * y[1] - x[1] * y[0]
    };
    let c2 = g(samples[0]);
    let c0 = g(samples[1]);
    let c1 = g(samples[2]) - c2 - c0;
    let scale = c0.abs().max(c1.abs()).max(c2.abs());
    let mut ts: Vec<nalgebra::Vector2<f64>> = Vec::new();
    if scale <= 1e-12 * (ab.norm() * ba.norm()) {
        // the maps commute: every vertex closes
        ts.extend((0..4).map(|k| {
            let phi = 0.4 + 0.7 * k as f64;
            nalgebra::Vector2::new(phi.cos(), phi.sin())
        }));
    } else {
        if c2.abs() <= 1e-12 * scale {
            ts.push(samples[0]);
        }
        for s in crate::poly::real_roots(&[c0, c1, c2], 1e-9) {
            ts.push(nalgebra::Vector2::new(s, 1.0));
        }
    }
    let usable = |x: &Vector4<f64>| {
        !other.contains(x, 1e-4) && ctx.centers.iter().all(|c| projective_distance(x.as_slice(), c.as_slice()) > 1e-4)
    };
    ts.iter().filter_map(inv1).filter(usable).collect()
}

/// The projectivity of the projective line taking `u[k]` to `v[k]`.
fn projectivity(u: &[nalgebra::Vector2<f64>; 3], v: &[nalgebra::Vector2<f64>; 3]) -> Option<nalgebra::Matrix2<f64>> {
    let mu = nalgebra::Matrix2::from_columns(&[u[0], u[1]]);
    let mv = nalgebra::Matrix2::from_columns(&[v[0], v[1]]);
    let c = mu.try_inverse()? * u[2];
    let d = mv.try_inverse()? * v[2];
    if c.amin() <= 1e-12 * c.amax() || d.amin() <= 1e-12 * d.amax() {
        return None;
    }
    Some(mv * nalgebra::Matrix2::from_diagonal(&nalgebra::Vector2::new(d[0] / c[0], d[1] / c[1])) * mu.try_inverse()?)
}

/// The six lines of the plane-pair construction starting from the conic point `a1`.
fn plane_conic_lines(
    conic: &Matrix3<f64>,
    a1: &Vector4<f64>,
    ctx: &Ctx,
    bc: &nalgebra::Matrix4x3<f64>,
    other: &Plane3,
) -> Option<SixLines> {
    let p = &ctx.centers;
    let tol = 1e-12;
    let meet = |x: &Vector4<f64>, y: &Vector4<f64>| -> Option<Vector4<f64>> { ProjectiveLine::through(x, y).ok()?.meet_plane(other, tol) };
    let mu12 = meet(&p[1], a1)?;
    let mu13 = meet(&p[2], a1)?;
    let p1 = (bc.transpose() * p[0]).normalize();
    let d = (bc.transpose() * mu12).normalize() - p1 * p1.dot(&(bc.transpose() * mu12).normalize());
    let a2 = bc * second_point(conic, &p1, &d)?;
    let mu23 = meet(&p[2], &a2)?;
    let mu = |i: usize, j: usize| match (i.min(j), i.max(j)) {
        (0, 1) => mu12,
        (0, 2) => mu13,
        _ => mu23,
    };
    let mut ok = true;
    let lines = SixLines::new(|i, j| match ProjectiveLine::through(&p[i], &mu(i, j)) {
        Ok(l) => l,
        Err(_) => {
            ok = false;
            ProjectiveLine::through(&Vector4::x(), &Vector4::y()).expect("independent")
        }
    });
    ok.then_some(lines)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthesis::{gen_critical, gen_seven_point_set, FamilySpec};

    fn check(family: Family, seed: u64) -> CriticalityVerdict {
        let g = gen_critical(&FamilySpec::new(family, 12, seed)).unwrap();
        three_view_critical(&g.scene, &ToleranceProfile::default()).unwrap()
    }

    #[test]
    fn families_are_critical() {
        for family in Family::ALL {
            if family == Family::SevenPoints {
                continue;
            }
            for seed in 0..3 {
                let v = check(family, seed);
                assert_eq!(v.status, Status::Critical, "{family} seed {seed}: {}", v.reason);
                assert!(v.max_image_residual.unwrap() <= 1e-8);
            }
        }
    }

    #[test]
    fn seven_points_and_small_sets() {
        let tol = ToleranceProfile::default();
        let set = gen_seven_point_set(3).unwrap();
        let v = three_view_critical(&set.scene, &tol).unwrap();
        assert_eq!(v.status, Status::Critical, "{}", v.reason);
        let mut small = set.scene.clone();
        small.points.truncate(6);
        assert_eq!(three_view_critical(&small, &tol).unwrap().status, Status::AlwaysCritical);
    }
}
