//! Quadric surfaces, lines and planes in P³, and permissible line pairs.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix4, Vector4};

use crate::error::{Error, Result};
use crate::fundamental::BilinearForm;
use crate::linalg::{normalize_sign_slice, normalized4, projective_distance, sym_to_vec10, vec10_to_sym, veronese_row, RightSvd};
use crate::projective::{Camera, HomPoint3};
use crate::tolerance::ToleranceProfile;

/// Symmetric 4x4 matrix up to scale, stored with unit Frobenius norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadric {
    matrix: Matrix4<f64>,
}

impl Quadric {
    /// Symmetrizes and normalizes.
    pub fn new(m: Matrix4<f64>) -> Result<Self> {
        let s = (m + m.transpose()) * 0.5;
        if s.iter().any(|x| !x.is_finite()) || s.norm() == 0.0 {
            return Err(Error::DegenerateInput("zero or non-finite quadric".into()));
        }
        let mut v = sym_to_vec10(&s);
        let scale = s.norm();
        if (scale - 1.0).abs() > 4.0 * f64::EPSILON {
            for x in v.iter_mut() {
                *x /= scale;
            }
        }
        // sign fixed on the coefficient vector so the file format round-trips
        normalize_sign_slice_keep_norm(&mut v);
        Ok(Self { matrix: vec10_to_sym(&v) })
    }

    pub fn from_coeffs(c: &[f64]) -> Result<Self> {
        if c.len() != 10 {
            return Err(Error::DegenerateInput(format!("expected 10 quadric coefficients, got {}", c.len())));
        }
        Self::new(vec10_to_sym(c))
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.matrix
    }

    /// Upper-triangle coefficients `(s00, s01, s02, s03, s11, s12, s13, s22, s23, s33)`.
    pub fn coeffs(&self) -> [f64; 10] {
        sym_to_vec10(&self.matrix)
    }

    pub fn eval(&self, x: &Vector4<f64>) -> f64 {
        x.dot(&(self.matrix * x))
    }

    /// `|S(x)|` for unit `x`.
    pub fn residual(&self, x: &Vector4<f64>) -> f64 {
        self.eval(x).abs() / x.norm_squared()
    }

    pub fn contains(&self, x: &Vector4<f64>, tol: f64) -> bool {
        self.residual(x) <= tol
    }

    pub fn is_singular_at(&self, x: &Vector4<f64>, tol: f64) -> bool {
        (self.matrix * x).norm() / x.norm() <= tol
    }

    pub fn contains_line(&self, l: &ProjectiveLine, tol: f64) -> bool {
        self.contains(&l.a, tol) && self.contains(&l.b, tol) && l.a.dot(&(self.matrix * l.b)).abs() <= tol
    }

    pub fn distance(&self, other: &Self) -> f64 {
        projective_distance(&self.coeffs(), &other.coeffs())
    }

    /// Singular values in decreasing order.
    pub fn sigma(&self) -> [f64; 4] {
        let mut s: Vec<f64> = self.matrix.symmetric_eigenvalues().iter().map(|x| x.abs()).collect();
        s.sort_by(|a, b| b.total_cmp(a));
        [s[0], s[1], s[2], s[3]]
    }

    pub fn rank(&self, tol: f64) -> usize {
        let s = self.sigma();
        s.iter().filter(|&&x| x > tol * s[0]).count()
    }

    /// Orthonormal basis of the kernel (columns).
    pub fn singular_locus(&self, tol: f64) -> DMatrix<f64> {
        RightSvd::new(&DMatrix::from_row_slice(4, 4, self.matrix.as_slice())).null_basis(tol)
    }
}

fn normalize_sign_slice_keep_norm(v: &mut [f64]) {
    if let Some(first) = v.iter().find(|x| x.abs() > crate::linalg::NORM_FLOOR) {
        if *first < 0.0 {
            for x in v.iter_mut() {
                *x = -*x;
            }
        }
    }
}

/// `sym(P1ᵀ F P2)`: the quadric of space points whose images satisfy `F`.
pub fn pullback_quadric(f: &BilinearForm, p1: &Camera, p2: &Camera) -> Result<Quadric> {
    Quadric::new(p1.matrix().transpose() * f.matrix() * p2.matrix())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadricKind {
    Smooth,
    Cone,
    TwoPlanes,
    DoublePlane,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CenterFlags {
    pub on_surface: bool,
    pub singular: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadricClass {
    pub rank: usize,
    pub kind: QuadricKind,
    pub camera_flags: Vec<CenterFlags>,
    /// The line through the first two centers lies on the surface.
    pub cameras_on_common_ruling: bool,
    /// Some singular value lies within a factor 10 of the rank cutoff.
    pub near_degenerate: bool,
    pub singular_locus: Vec<Vector4<f64>>,
}

pub fn classify_quadric(s: &Quadric, centers: &[HomPoint3], tol: &ToleranceProfile) -> QuadricClass {
    let sigma = s.sigma();
    let rank = sigma.iter().filter(|&&x| x > tol.rank * sigma[0]).count().max(1);
    let near_degenerate = sigma.iter().any(|&x| x > tol.rank * sigma[0] && x <= 10.0 * tol.rank * sigma[0]);
    let kind = match rank {
        4 => QuadricKind::Smooth,
        3 => QuadricKind::Cone,
        2 => QuadricKind::TwoPlanes,
        _ => QuadricKind::DoublePlane,
    };
    let camera_flags = centers
        .iter()
        .map(|c| CenterFlags {
            on_surface: s.contains(c.coords(), tol.rank),
            singular: s.is_singular_at(c.coords(), tol.rank),
        })
        .collect();
    let cameras_on_common_ruling = centers.len() >= 2
        && ProjectiveLine::through(centers[0].coords(), centers[1].coords())
            .map(|l| s.contains_line(&l, tol.rank))
            .unwrap_or(false);
    let k = s.singular_locus(tol.rank);
    QuadricClass {
        rank,
        kind,
        camera_flags,
        cameras_on_common_ruling,
        near_degenerate,
        singular_locus: k.column_iter().map(|c| Vector4::new(c[0], c[1], c[2], c[3])).collect(),
    }
}

/// Quadrics through all given points: orthonormal basis of the Veronese nullspace.
pub fn quadrics_through(points: &[Vector4<f64>], rel_tol: f64) -> Vec<Quadric> {
    if points.is_empty() {
        return (0..10)
            .map(|k| {
                let mut c = [0.0; 10];
                c[k] = 1.0;
                Quadric::from_coeffs(&c).expect("unit coefficient")
            })
            .collect();
    }
    let mut a = DMatrix::zeros(points.len(), 10);
    for (r, x) in points.iter().enumerate() {
        let row = veronese_row(&(x / x.norm()));
        for (c, v) in row.iter().enumerate() {
            a[(r, c)] = *v;
        }
    }
    let basis = RightSvd::new(&a).null_basis(rel_tol);
    basis
        .column_iter()
        .filter_map(|c| Quadric::from_coeffs(c.as_slice()).ok())
        .collect()
}

/// The unique quadric through at least nine points.
pub fn fit_quadric(points: &[Vector4<f64>], rel_tol: f64) -> Result<Quadric> {
    if points.len() < 9 {
        return Err(Error::Underdetermined(10 - points.len()));
    }
    let mut family = quadrics_through(points, rel_tol);
    match family.len() {
        0 => Err(Error::NoFit),
        1 => Ok(family.remove(0)),
        k => Err(Error::Underdetermined(k)),
    }
}

/// Line of P³ as the span of two orthonormal 4-vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectiveLine {
    a: Vector4<f64>,
    b: Vector4<f64>,
}

impl ProjectiveLine {
    /// Span of two points; fails if they are dependent.
    pub fn through(p: &Vector4<f64>, q: &Vector4<f64>) -> Result<Self> {
        let a = p / p.norm();
        let r = q - a * a.dot(q);
        if !a.iter().all(|x| x.is_finite()) || r.norm() <= 1e-12 * q.norm() {
            return Err(Error::DegenerateInput("line through coincident points".into()));
        }
        Ok(Self { a, b: r / r.norm() })
    }

    pub fn from_span(m: &DMatrix<f64>) -> Result<Self> {
        let a = Vector4::new(m[(0, 0)], m[(1, 0)], m[(2, 0)], m[(3, 0)]);
        let b = Vector4::new(m[(0, 1)], m[(1, 1)], m[(2, 1)], m[(3, 1)]);
        Self::through(&a, &b)
    }

    pub fn span(&self) -> (Vector4<f64>, Vector4<f64>) {
        (self.a, self.b)
    }

    fn basis(&self) -> DMatrix<f64> {
        DMatrix::from_columns(&[
            nalgebra::DVector::from_column_slice(self.a.as_slice()),
            nalgebra::DVector::from_column_slice(self.b.as_slice()),
        ])
    }

    /// Plücker coordinates `(p01, p02, p03, p12, p13, p23)`, unit norm with sign fixed.
    pub fn plucker(&self) -> [f64; 6] {
        let (a, b) = (self.a, self.b);
        let pair = |i: usize, j: usize| a[i] * b[j] - a[j] * b[i];
        let mut p = [pair(0, 1), pair(0, 2), pair(0, 3), pair(1, 2), pair(1, 3), pair(2, 3)];
        normalize_sign_slice(&mut p);
        p
    }

    /// Point `cos θ a + sin θ b`.
    pub fn point_at(&self, theta: f64) -> Vector4<f64> {
        self.a * theta.cos() + self.b * theta.sin()
    }

    /// Distance of a point from the line (sine of the angle to the span).
    pub fn distance_to(&self, x: &Vector4<f64>) -> f64 {
        let u = x / x.norm();
        (u - self.a * self.a.dot(&u) - self.b * self.b.dot(&u)).norm()
    }

    pub fn contains(&self, x: &Vector4<f64>, tol: f64) -> bool {
        self.distance_to(x) <= tol
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.contains(&other.a, tol) && self.contains(&other.b, tol)
    }

    /// Intersection with a plane, `None` when the line lies in it.
    pub fn meet_plane(&self, plane: &Plane3, tol: f64) -> Option<Vector4<f64>> {
        let fa = plane.covector.dot(&self.a);
        let fb = plane.covector.dot(&self.b);
        if fa.hypot(fb) <= tol {
            return None;
        }
        let x = self.a * fb - self.b * fa;
        Some(x / x.norm())
    }

    /// Common points with another line: the whole line, a point, or nothing.
    pub fn meet(&self, other: &Self, tol: f64) -> LineMeet {
        let m = DMatrix::from_row_slice(4, 4, &[
            self.a[0], self.a[1], self.a[2], self.a[3],
            self.b[0], self.b[1], self.b[2], self.b[3],
            other.a[0], other.a[1], other.a[2], other.a[3],
            other.b[0], other.b[1], other.b[2], other.b[3],
        ]);
        let svd = RightSvd::new(&m);
        match svd.nullity(tol) {
            0 => LineMeet::Skew,
            1 => {
                // common point: solve alpha a + beta b = gamma c + delta d
                let x = subspace_intersection(&self.basis(), &other.basis(), tol);
                let v = x.column(0);
                LineMeet::Point(Vector4::new(v[0], v[1], v[2], v[3]))
            }
            _ => LineMeet::Same,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LineMeet {
    Skew,
    Point(Vector4<f64>),
    Same,
}

/// Orthonormal basis of the intersection of two column spans.
fn subspace_intersection(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let (ka, kb) = (a.ncols(), b.ncols());
    if ka == 0 || kb == 0 {
        return DMatrix::zeros(4, 0);
    }
    let mut m = DMatrix::zeros(4, ka + kb);
    m.view_mut((0, 0), (4, ka)).copy_from(a);
    m.view_mut((0, ka), (4, kb)).copy_from(&(-b));
    let null = RightSvd::new(&m).null_basis(tol);
    let vecs = a * null.rows(0, ka);
    if vecs.ncols() == 0 {
        return vecs;
    }
    // orthonormalize
    let svd = vecs.clone().svd(true, false);
    let u = svd.u.expect("u requested");
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > 1e-9 * svd.singular_values.max())
        .collect();
    DMatrix::from_fn(4, keep.len(), |r, c| u[(r, keep[c])])
}

/// Plane of P³ given by a unit covector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane3 {
    covector: Vector4<f64>,
}

impl Plane3 {
    pub fn new(v: Vector4<f64>) -> Result<Self> {
        if v.iter().any(|x| !x.is_finite()) || v.norm() == 0.0 {
            return Err(Error::DegenerateInput("zero or non-finite plane".into()));
        }
        Ok(Self { covector: normalized4(&v) })
    }

    pub fn covector(&self) -> &Vector4<f64> {
        &self.covector
    }

    pub fn contains(&self, x: &Vector4<f64>, tol: f64) -> bool {
        self.covector.dot(x).abs() / x.norm() <= tol
    }

    pub fn contains_line(&self, l: &ProjectiveLine, tol: f64) -> bool {
        self.contains(&l.a, tol) && self.contains(&l.b, tol)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        projective_distance(self.covector.as_slice(), other.covector.as_slice()) <= tol
    }

    /// Plane through three points.
    pub fn through(p: &Vector4<f64>, q: &Vector4<f64>, r: &Vector4<f64>, tol: f64) -> Result<Self> {
        let m = DMatrix::from_columns(&[
            nalgebra::DVector::from_column_slice((p / p.norm()).as_slice()),
            nalgebra::DVector::from_column_slice((q / q.norm()).as_slice()),
            nalgebra::DVector::from_column_slice((r / r.norm()).as_slice()),
        ])
        .transpose();
        let svd = RightSvd::new(&m);
        if svd.nullity(tol) != 1 {
            return Err(Error::DegenerateInput("points do not span a plane".into()));
        }
        let v = svd.smallest();
        Self::new(Vector4::new(v[0], v[1], v[2], v[3]))
    }
}

/// The plane containing two distinct intersecting lines.
pub fn plane_span(l1: &ProjectiveLine, l2: &ProjectiveLine) -> Result<Plane3> {
    match l1.meet(l2, 1e-9) {
        LineMeet::Skew => Err(Error::SkewLines),
        LineMeet::Same => Err(Error::CoincidentLines),
        LineMeet::Point(_) => {
            let m = DMatrix::from_row_slice(4, 4, &[
                l1.a[0], l1.a[1], l1.a[2], l1.a[3],
                l1.b[0], l1.b[1], l1.b[2], l1.b[3],
                l2.a[0], l2.a[1], l2.a[2], l2.a[3],
                l2.b[0], l2.b[1], l2.b[2], l2.b[3],
            ]);
            let v = RightSvd::new(&m).smallest();
            Plane3::new(Vector4::new(v[0], v[1], v[2], v[3]))
        }
    }
}

/// Common locus of three planes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Locus {
    Point(HomPoint3),
    Line(ProjectiveLine),
    Plane(Plane3),
}

pub fn intersect_three_planes(p1: &Plane3, p2: &Plane3, p3: &Plane3, tol: f64) -> Locus {
    let rows = [p1.covector, p2.covector, p3.covector];
    let m = DMatrix::from_fn(3, 4, |r, c| rows[r][c]);
    let svd = RightSvd::new(&m);
    let null = svd.null_basis(tol);
    match null.ncols() {
        0 | 1 => {
            let v = svd.smallest();
            Locus::Point(HomPoint3::new(Vector4::new(v[0], v[1], v[2], v[3])).expect("unit vector"))
        }
        2 => Locus::Line(ProjectiveLine::from_span(&null).expect("orthonormal span")),
        _ => Locus::Plane(*p1),
    }
}

/// One-parameter family of lines, sampled by an angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LineFamily {
    /// All lines through `point` inside `plane`; `u`, `v` span the directions.
    Pencil {
        point: Vector4<f64>,
        plane: Plane3,
        u: Vector4<f64>,
        v: Vector4<f64>,
    },
    /// All rulings of a cone through its vertex; the base conic is
    /// `θ ↦ x0 + cos θ xc + sin θ xs`.
    ConeRulings {
        vertex: Vector4<f64>,
        x0: Vector4<f64>,
        xc: Vector4<f64>,
        xs: Vector4<f64>,
    },
}

impl LineFamily {
    pub fn pencil(point: &Vector4<f64>, plane: &Plane3) -> Self {
        let p = point / point.norm();
        let rows = DMatrix::from_row_slice(2, 4, &[
            p[0], p[1], p[2], p[3],
            plane.covector[0], plane.covector[1], plane.covector[2], plane.covector[3],
        ]);
        let svd = RightSvd::new(&rows);
        let b = svd.trailing(2);
        Self::Pencil {
            point: p,
            plane: *plane,
            u: Vector4::new(b[(0, 0)], b[(1, 0)], b[(2, 0)], b[(3, 0)]),
            v: Vector4::new(b[(0, 1)], b[(1, 1)], b[(2, 1)], b[(3, 1)]),
        }
    }

    /// Angle range covering every member once.
    pub fn period(&self) -> f64 {
        match self {
            Self::Pencil { .. } => PI,
            Self::ConeRulings { .. } => 2.0 * PI,
        }
    }

    /// The point every member passes through.
    pub fn base_point(&self) -> Vector4<f64> {
        match self {
            Self::Pencil { point, .. } => *point,
            Self::ConeRulings { vertex, .. } => *vertex,
        }
    }

    pub fn sample(&self, theta: f64) -> ProjectiveLine {
        match self {
            Self::Pencil { point, u, v, .. } => {
                ProjectiveLine::through(point, &(u * theta.cos() + v * theta.sin())).expect("independent directions")
            }
            Self::ConeRulings { vertex, x0, xc, xs } => {
                ProjectiveLine::through(vertex, &(x0 + xc * theta.cos() + xs * theta.sin())).expect("conic point off the vertex")
            }
        }
    }

    /// `n` members at evenly spaced parameters.
    pub fn sample_grid(&self, n: usize) -> Vec<ProjectiveLine> {
        (0..n).map(|k| self.sample(self.period() * (k as f64 + 0.5) / n as f64)).collect()
    }
}

/// Real lines on a quadric through one of its points.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinesThroughPoint {
    pub lines: Vec<ProjectiveLine>,
    pub families: Vec<LineFamily>,
}

/// Splits a rank-2 quadric into its two planes, `None` when they are complex.
pub fn plane_pair(s: &Quadric) -> Option<(Plane3, Plane3)> {
    let eig = s.matrix.symmetric_eigen();
    let mut idx: Vec<usize> = (0..4).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[j].abs().total_cmp(&eig.eigenvalues[i].abs()));
    let (l1, l2) = (eig.eigenvalues[idx[0]], eig.eigenvalues[idx[1]]);
    if l1 * l2 >= 0.0 {
        return None;
    }
    let v1: Vector4<f64> = eig.eigenvectors.column(idx[0]).into_owned();
    let v2: Vector4<f64> = eig.eigenvectors.column(idx[1]).into_owned();
    let (pos, neg, lp, ln) = if l1 > 0.0 { (v1, v2, l1, -l2) } else { (v2, v1, l2, -l1) };
    let a = pos * lp.sqrt() + neg * ln.sqrt();
    let b = pos * lp.sqrt() - neg * ln.sqrt();
    Some((Plane3::new(a).ok()?, Plane3::new(b).ok()?))
}

/// Rulings of a rank-3 cone through its vertex, `None` if the base conic has no real points.
fn cone_rulings(s: &Quadric, vertex: &Vector4<f64>) -> Option<LineFamily> {
    let m = crate::linalg::complement_rows4(vertex);
    let c = m * s.matrix * m.transpose();
    let eig = c.symmetric_eigen();
    let ev = eig.eigenvalues;
    let pos = ev.iter().filter(|&&x| x > 0.0).count();
    let odd_sign = match pos {
        1 => 1.0,
        2 => -1.0,
        _ => return None,
    };
    let k = (0..3).find(|&i| ev[i].signum() == odd_sign)?;
    let others: Vec<usize> = (0..3).filter(|&i| i != k).collect();
    let col = |i: usize| -> Vector4<f64> { m.transpose() * eig.eigenvectors.column(i) };
    Some(LineFamily::ConeRulings {
        vertex: vertex / vertex.norm(),
        x0: col(k) / ev[k].abs().sqrt(),
        xc: col(others[0]) / ev[others[0]].abs().sqrt(),
        xs: col(others[1]) / ev[others[1]].abs().sqrt(),
    })
}

pub fn lines_through_point_on_quadric(s: &Quadric, p: &Vector4<f64>, tol: &ToleranceProfile) -> Result<LinesThroughPoint> {
    let p = p / p.norm();
    if !s.contains(&p, tol.rank) {
        return Err(Error::NotOnQuadric(s.residual(&p)));
    }
    let sp = s.matrix * p;
    let mut out = LinesThroughPoint::default();
    if sp.norm() > tol.rank {
        // smooth point: lines lie in the tangent plane
        let tangent = Plane3::new(sp)?;
        let (u, v) = match LineFamily::pencil(&p, &tangent) {
            LineFamily::Pencil { u, v, .. } => (u, v),
            LineFamily::ConeRulings { .. } => unreachable!(),
        };
        let n00 = s.eval(&u);
        let n11 = s.eval(&v);
        let n01 = u.dot(&(s.matrix * v));
        let scale = n00.abs().max(n11.abs()).max(n01.abs());
        if scale <= tol.rank {
            out.families.push(LineFamily::pencil(&p, &tangent));
            return Ok(out);
        }
        let det = (n00 * n11 - n01 * n01) / (scale * scale);
        let (a, b, c) = (n00 / scale, n01 / scale, n11 / scale);
        let dirs: Vec<(f64, f64)> = if det > tol.rank {
            vec![]
        } else if det >= -tol.rank {
            // double root of a x^2 + 2 b x y + c y^2
            if a.abs() >= c.abs() {
                vec![(-b, a)]
            } else {
                vec![(c, -b)]
            }
        } else {
            // stable pair of roots: x/y = q/a and c/q
            let r = (-det).sqrt();
            let q = -(b + if b >= 0.0 { r } else { -r });
            vec![(q, a), (c, q)]
        };
        for (x, y) in dirs {
            out.lines.push(ProjectiveLine::through(&p, &(u * x + v * y))?);
        }
        return Ok(out);
    }
    // p is a singular point
    match s.rank(tol.rank) {
        3 => {
            if let Some(f) = cone_rulings(s, &p) {
                out.families.push(f);
            }
        }
        2 => {
            let k = s.singular_locus(tol.rank);
            let sing = ProjectiveLine::from_span(&k)?;
            match plane_pair(s) {
                Some((a, b)) => {
                    out.families.push(LineFamily::pencil(&p, &a));
                    out.families.push(LineFamily::pencil(&p, &b));
                }
                None => out.lines.push(sing),
            }
        }
        1 => {
            let eig = s.matrix.symmetric_eigen();
            let i = eig.eigenvalues.iamax();
            let plane = Plane3::new(eig.eigenvectors.column(i).into_owned())?;
            out.families.push(LineFamily::pencil(&p, &plane));
        }
        _ => {}
    }
    Ok(out)
}

/// Lines `g1` through the first center and `g2` through the second.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PermissiblePair {
    pub line1: ProjectiveLine,
    pub line2: ProjectiveLine,
}

/// Infinite families of permissible pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PairFamily {
    /// One center at the vertex of a cone: the other center's line is the ruling through it,
    /// the vertex line runs over all other rulings.
    ConeVertex {
        vertex_center: usize,
        fixed: ProjectiveLine,
        rulings: LineFamily,
    },
    /// Both centers in one plane of a plane pair: the lines meet on the singular line.
    SharedPlane {
        plane: Plane3,
        singular_line: ProjectiveLine,
        p1: Vector4<f64>,
        p2: Vector4<f64>,
    },
    /// One center on the singular line of a plane pair: the other center's line is the join
    /// of the centers, the singular center's line runs over a pencil.
    SingularLineCenter {
        singular_center: usize,
        fixed: ProjectiveLine,
        pencil: LineFamily,
    },
    /// Both centers singular (on the singular line of a plane pair, or anywhere on a double
    /// plane): the only permissible pair is the join taken twice, and the correspondence with
    /// conjugates is no longer one to one.
    SingularCenters { join: ProjectiveLine, double_plane: bool },
}

impl PairFamily {
    pub fn period(&self) -> f64 {
        match self {
            Self::ConeVertex { rulings, .. } => rulings.period(),
            Self::SharedPlane { .. } => PI,
            Self::SingularLineCenter { pencil, .. } => pencil.period(),
            Self::SingularCenters { .. } => PI,
        }
    }

    /// Member at parameter `theta`; `None` at the excluded parameters where the
    /// two lines coincide.
    pub fn sample(&self, theta: f64) -> Option<PermissiblePair> {
        let (l1, l2) = match self {
            Self::ConeVertex { vertex_center, fixed, rulings } => {
                let moving = rulings.sample(theta);
                if moving.approx_eq(fixed, 1e-9) {
                    return None;
                }
                if *vertex_center == 0 {
                    (moving, *fixed)
                } else {
                    (*fixed, moving)
                }
            }
            Self::SharedPlane { singular_line, p1, p2, .. } => {
                let m = singular_line.point_at(theta);
                let l1 = ProjectiveLine::through(p1, &m).ok()?;
                let l2 = ProjectiveLine::through(p2, &m).ok()?;
                if l1.approx_eq(&l2, 1e-9) {
                    return None;
                }
                (l1, l2)
            }
            Self::SingularLineCenter { singular_center, fixed, pencil } => {
                let moving = pencil.sample(theta);
                if moving.approx_eq(fixed, 1e-9) {
                    return None;
                }
                if *singular_center == 0 {
                    (moving, *fixed)
                } else {
                    (*fixed, moving)
                }
            }
            Self::SingularCenters { join, .. } => (*join, *join),
        };
        Some(PermissiblePair { line1: l1, line2: l2 })
    }

    pub fn sample_grid(&self, n: usize) -> Vec<PermissiblePair> {
        if let Self::SingularCenters { join, .. } = self {
            return vec![PermissiblePair { line1: *join, line2: *join }];
        }
        (0..n)
            .filter_map(|k| self.sample(self.period() * (k as f64 + 0.37) / n as f64))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PermissiblePairs {
    Finite(Vec<PermissiblePair>),
    Family(PairFamily),
}

impl PermissiblePairs {
    /// Finite list, or `n` samples of the family.
    pub fn candidates(&self, n: usize) -> Vec<PermissiblePair> {
        match self {
            Self::Finite(v) => v.clone(),
            Self::Family(f) => f.sample_grid(n),
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Self::Finite(v) if v.is_empty())
    }
}

/// Direct check of the four defining conditions of a permissible pair.
pub fn is_permissible(s: &Quadric, p1: &Vector4<f64>, p2: &Vector4<f64>, pair: &PermissiblePair, tol: f64) -> bool {
    let (g1, g2) = (&pair.line1, &pair.line2);
    // 1. each line lies on S and passes through its center
    if !(s.contains_line(g1, tol) && s.contains_line(g2, tol) && g1.contains(p1, tol.sqrt()) && g2.contains(p2, tol.sqrt())) {
        return false;
    }
    // 2. common points are singular
    let ok2 = match g1.meet(g2, 1e-9) {
        LineMeet::Skew => true,
        LineMeet::Point(x) => s.is_singular_at(&x, tol),
        LineMeet::Same => s.is_singular_at(&g1.a, tol) && s.is_singular_at(&g1.b, tol),
    };
    if !ok2 {
        return false;
    }
    // 3. singular points on one line lie on the other
    let k = s.singular_locus(tol);
    for (a, b) in [(g1, g2), (g2, g1)] {
        let common = subspace_intersection(&a.basis(), &k, 1e-9);
        for c in common.column_iter() {
            let x = Vector4::new(c[0], c[1], c[2], c[3]);
            if !b.contains(&x, tol.sqrt()) {
                return false;
            }
        }
    }
    // 4. for a plane pair, both lines in one plane
    if s.rank(tol) == 2 {
        if let Some((pa, pb)) = plane_pair(s) {
            let both_in = |pl: &Plane3| pl.contains_line(g1, tol.sqrt()) && pl.contains_line(g2, tol.sqrt());
            if !(both_in(&pa) || both_in(&pb)) {
                return false;
            }
        }
    }
    true
}

/// Permissible pairs on `S` for centers `p1`, `p2`.
pub fn permissible_pairs(s: &Quadric, p1: &Vector4<f64>, p2: &Vector4<f64>, tol: &ToleranceProfile) -> Result<PermissiblePairs> {
    let (p1, p2) = (p1 / p1.norm(), p2 / p2.norm());
    for p in [&p1, &p2] {
        if !s.contains(p, tol.rank) {
            return Err(Error::NotOnQuadric(s.residual(p)));
        }
    }
    let sing1 = s.is_singular_at(&p1, tol.rank);
    let sing2 = s.is_singular_at(&p2, tol.rank);
    if sing1 && sing2 {
        return Ok(PermissiblePairs::Family(PairFamily::SingularCenters {
            join: ProjectiveLine::through(&p1, &p2)?,
            double_plane: s.rank(tol.rank) == 1,
        }));
    }
    let l1 = lines_through_point_on_quadric(s, &p1, tol)?;
    let l2 = lines_through_point_on_quadric(s, &p2, tol)?;
    if l1.families.is_empty() && l2.families.is_empty() {
        let mut out = Vec::new();
        for a in &l1.lines {
            for b in &l2.lines {
                let pair = PermissiblePair { line1: *a, line2: *b };
                if is_permissible(s, &p1, &p2, &pair, tol.rank) {
                    out.push(pair);
                }
            }
        }
        return Ok(PermissiblePairs::Finite(out));
    }
    let rank = s.rank(tol.rank);
    let (sing_idx, sing_p, other_p, other_lines) = if sing1 { (0, p1, p2, &l2) } else { (1, p2, p1, &l1) };
    match rank {
        3 if sing1 || sing2 => {
            let Some(rulings) = cone_rulings(s, &sing_p) else {
                return Ok(PermissiblePairs::Finite(vec![]));
            };
            let Some(fixed) = other_lines.lines.first().copied() else {
                return Ok(PermissiblePairs::Finite(vec![]));
            };
            Ok(PermissiblePairs::Family(PairFamily::ConeVertex {
                vertex_center: sing_idx,
                fixed,
                rulings,
            }))
        }
        2 => {
            let Some((pa, pb)) = plane_pair(s) else {
                return Ok(PermissiblePairs::Finite(vec![]));
            };
            let singular_line = ProjectiveLine::from_span(&s.singular_locus(tol.rank))?;
            if sing1 || sing2 {
                let plane = if pa.contains(&other_p, tol.rank) { pa } else { pb };
                let fixed = ProjectiveLine::through(&sing_p, &other_p)?;
                Ok(PermissiblePairs::Family(PairFamily::SingularLineCenter {
                    singular_center: sing_idx,
                    fixed,
                    pencil: LineFamily::pencil(&sing_p, &plane),
                }))
            } else {
                let shared = [pa, pb].into_iter().find(|pl| pl.contains(&p1, tol.rank) && pl.contains(&p2, tol.rank));
                match shared {
                    Some(plane) => Ok(PermissiblePairs::Family(PairFamily::SharedPlane {
                        plane,
                        singular_line,
                        p1,
                        p2,
                    })),
                    None => Ok(PermissiblePairs::Finite(vec![])),
                }
            }
        }
        _ => {
            // remaining cases: filter sampled family members through the checker
            let mut out = Vec::new();
            let c1: Vec<ProjectiveLine> = l1.lines.iter().copied().chain(l1.families.iter().flat_map(|f| f.sample_grid(8))).collect();
            let c2: Vec<ProjectiveLine> = l2.lines.iter().copied().chain(l2.families.iter().flat_map(|f| f.sample_grid(8))).collect();
            for a in &c1 {
                for b in &c2 {
                    let pair = PermissiblePair { line1: *a, line2: *b };
                    if is_permissible(s, &p1, &p2, &pair, tol.rank) {
                        out.push(pair);
                    }
                }
            }
            Ok(PermissiblePairs::Finite(out))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(a: f64, b: f64, c: f64, d: f64) -> Vector4<f64> {
        Vector4::new(a, b, c, d)
    }

    fn diag(a: f64, b: f64, c: f64, d: f64) -> Quadric {
        Quadric::new(Matrix4::from_diagonal(&v(a, b, c, d))).unwrap()
    }

    /// xw - yz
    fn segre() -> Quadric {
        let mut m = Matrix4::zeros();
        m[(0, 3)] = 0.5;
        m[(3, 0)] = 0.5;
        m[(1, 2)] = -0.5;
        m[(2, 1)] = -0.5;
        Quadric::new(m).unwrap()
    }

    fn line_of(a: Vector4<f64>, b: Vector4<f64>) -> ProjectiveLine {
        ProjectiveLine::through(&a, &b).unwrap()
    }

    #[test]
    fn classification_by_rank() {
        let tol = ToleranceProfile::default();
        assert_eq!(classify_quadric(&diag(1.0, 1.0, 1.0, -1.0), &[], &tol).kind, QuadricKind::Smooth);
        let cone = classify_quadric(&diag(1.0, 1.0, -1.0, 0.0), &[], &tol);
        assert_eq!(cone.kind, QuadricKind::Cone);
        assert!(projective_distance(cone.singular_locus[0].as_slice(), &[0.0, 0.0, 0.0, 1.0]) < 1e-12);
        let planes = classify_quadric(&diag(1.0, -1.0, 0.0, 0.0), &[], &tol);
        assert_eq!(planes.kind, QuadricKind::TwoPlanes);
        assert_eq!(planes.singular_locus.len(), 2);
    }

    #[test]
    fn lines_through_point_of_segre() {
        let lines = lines_through_point_on_quadric(&segre(), &v(1.0, 0.0, 0.0, 0.0), &ToleranceProfile::default()).unwrap();
        assert_eq!(lines.lines.len(), 2);
        let yw = line_of(v(1.0, 0.0, 0.0, 0.0), v(0.0, 0.0, 1.0, 0.0));
        let zw = line_of(v(1.0, 0.0, 0.0, 0.0), v(0.0, 1.0, 0.0, 0.0));
        assert!(lines.lines.iter().any(|l| l.approx_eq(&yw, 1e-12)));
        assert!(lines.lines.iter().any(|l| l.approx_eq(&zw, 1e-12)));
    }

    #[test]
    fn cone_vertex_gives_family() {
        let lines = lines_through_point_on_quadric(&diag(1.0, 1.0, -1.0, 0.0), &v(0.0, 0.0, 0.0, 1.0), &ToleranceProfile::default()).unwrap();
        assert!(lines.lines.is_empty());
        assert_eq!(lines.families.len(), 1);
        let s = diag(1.0, 1.0, -1.0, 0.0);
        for l in lines.families[0].sample_grid(7) {
            assert!(s.contains_line(&l, 1e-12));
        }
    }

    #[test]
    fn off_surface_point_rejected() {
        let r = lines_through_point_on_quadric(&diag(1.0, 1.0, 1.0, -1.0), &v(1.0, 0.0, 0.0, 0.0), &ToleranceProfile::default());
        assert!(matches!(r, Err(Error::NotOnQuadric(_))));
    }

    #[test]
    fn segre_pairs() {
        let s = segre();
        let p1 = v(1.0, 0.0, 0.0, 0.0);
        let p2 = v(0.0, 0.0, 0.0, 1.0);
        let PermissiblePairs::Finite(pairs) = permissible_pairs(&s, &p1, &p2, &ToleranceProfile::default()).unwrap() else {
            panic!("expected a finite list");
        };
        assert_eq!(pairs.len(), 2);
        let yw = line_of(v(1.0, 0.0, 0.0, 0.0), v(0.0, 0.0, 1.0, 0.0));
        let xz = line_of(v(0.0, 1.0, 0.0, 0.0), v(0.0, 0.0, 0.0, 1.0));
        let zw = line_of(v(1.0, 0.0, 0.0, 0.0), v(0.0, 1.0, 0.0, 0.0));
        let xy = line_of(v(0.0, 0.0, 1.0, 0.0), v(0.0, 0.0, 0.0, 1.0));
        let has = |a: &ProjectiveLine, b: &ProjectiveLine| pairs.iter().any(|p| p.line1.approx_eq(a, 1e-12) && p.line2.approx_eq(b, 1e-12));
        assert!(has(&yw, &xz));
        assert!(has(&zw, &xy));
    }

    #[test]
    fn centers_on_a_ruling_give_one_pair() {
        // (1,0,0,0) and (0,1,0,0) span the ruling z = w = 0
        let s = segre();
        let r = permissible_pairs(&s, &v(1.0, 0.0, 0.0, 0.0), &v(0.0, 1.0, 0.0, 0.0), &ToleranceProfile::default()).unwrap();
        assert!(matches!(r, PermissiblePairs::Finite(ref p) if p.len() == 1));
    }

    #[test]
    fn infinite_rows_have_descriptors() {
        let tol = ToleranceProfile::default();
        let fam = |s: &Quadric, a: Vector4<f64>, b: Vector4<f64>| match permissible_pairs(s, &a, &b, &tol).unwrap() {
            PermissiblePairs::Family(f) => f,
            other => panic!("expected a family, got {other:?}"),
        };
        let cone = diag(1.0, 1.0, -1.0, 0.0);
        assert!(matches!(fam(&cone, v(0.0, 0.0, 0.0, 1.0), v(1.0, 0.0, 1.0, 0.0)), PairFamily::ConeVertex { vertex_center: 0, .. }));
        // (x - y)(x + y)
        let planes = diag(1.0, -1.0, 0.0, 0.0);
        assert!(matches!(fam(&planes, v(1.0, 1.0, 0.0, 0.0), v(1.0, 1.0, 1.0, 0.0)), PairFamily::SharedPlane { .. }));
        assert!(matches!(
            fam(&planes, v(0.0, 0.0, 1.0, 0.0), v(1.0, 1.0, 0.0, 1.0)),
            PairFamily::SingularLineCenter { singular_center: 0, .. }
        ));
        assert!(matches!(
            fam(&planes, v(0.0, 0.0, 1.0, 0.0), v(0.0, 0.0, 1.0, 1.0)),
            PairFamily::SingularCenters { double_plane: false, .. }
        ));
        let double = diag(1.0, 0.0, 0.0, 0.0);
        let f = fam(&double, v(0.0, 1.0, 0.0, 0.0), v(0.0, 0.0, 1.0, 1.0));
        assert!(matches!(f, PairFamily::SingularCenters { double_plane: true, .. }));
        let pairs = f.sample_grid(5);
        assert_eq!(pairs.len(), 1);
        assert!(is_permissible(&double, &v(0.0, 1.0, 0.0, 0.0), &v(0.0, 0.0, 1.0, 1.0), &pairs[0], 1e-9));
    }

    #[test]
    fn plane_span_and_errors() {
        let yw = line_of(v(1.0, 0.0, 0.0, 0.0), v(0.0, 0.0, 1.0, 0.0));
        let zw = line_of(v(1.0, 0.0, 0.0, 0.0), v(0.0, 1.0, 0.0, 0.0));
        let p = plane_span(&yw, &zw).unwrap();
        assert!(p.approx_eq(&Plane3::new(v(0.0, 0.0, 0.0, 1.0)).unwrap(), 1e-12));
        let xz = line_of(v(0.0, 1.0, 0.0, 0.0), v(0.0, 0.0, 0.0, 1.0));
        assert_eq!(plane_span(&yw, &xz), Err(Error::SkewLines));
        assert_eq!(plane_span(&yw, &yw), Err(Error::CoincidentLines));
    }

    #[test]
    fn three_plane_loci() {
        let pl = |a, b, c, d| Plane3::new(v(a, b, c, d)).unwrap();
        match intersect_three_planes(&pl(1.0, 0.0, 0.0, 0.0), &pl(0.0, 1.0, 0.0, 0.0), &pl(0.0, 0.0, 1.0, 0.0), 1e-9) {
            Locus::Point(x) => assert_eq!(x.coords(), &v(0.0, 0.0, 0.0, 1.0)),
            other => panic!("{other:?}"),
        }
        match intersect_three_planes(&pl(1.0, 0.0, 0.0, 0.0), &pl(0.0, 1.0, 0.0, 0.0), &pl(1.0, 1.0, 0.0, 0.0), 1e-9) {
            Locus::Line(l) => assert!(l.approx_eq(&line_of(v(0.0, 0.0, 1.0, 0.0), v(0.0, 0.0, 0.0, 1.0)), 1e-12)),
            other => panic!("{other:?}"),
        }
        match intersect_three_planes(&pl(1.0, 0.0, 0.0, 0.0), &pl(2.0, 0.0, 0.0, 0.0), &pl(3.0, 0.0, 0.0, 0.0), 1e-9) {
            Locus::Plane(p) => assert!(p.approx_eq(&pl(1.0, 0.0, 0.0, 0.0), 1e-12)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn fit_sphere_from_samples() {
        let pts: Vec<Vector4<f64>> = (0..9)
            .map(|k| {
                let t = k as f64 * 0.7 + 0.1;
                let u = k as f64 * 1.3 + 0.4;
                v(t.cos() * u.sin(), t.sin() * u.sin(), u.cos(), 1.0)
            })
            .collect();
        let s = fit_quadric(&pts, 1e-9).unwrap();
        assert!(s.distance(&diag(1.0, 1.0, 1.0, -1.0)) < 1e-9);
        assert_eq!(fit_quadric(&pts[..8], 1e-9), Err(Error::Underdetermined(2)));
    }

    #[test]
    fn plucker_relation_holds() {
        let l = line_of(v(0.3, -1.0, 2.0, 0.5), v(1.0, 0.2, -0.7, 1.1));
        let p = l.plucker();
        assert!((p[0] * p[5] - p[1] * p[4] + p[2] * p[3]).abs() < 1e-12);
    }
}
