//! Plane cubics with the chord-tangent construction, and twisted cubics in P³.

use nalgebra::{DMatrix, Matrix3, Matrix4, Vector3, Vector4};
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{projective_distance, random_wellconditioned4, RightSvd};
use crate::poly::{intersect_curves, polish_plane_point, real_point, Form3};
use crate::quadrics::{plane_span, Plane3, ProjectiveLine, Quadric};

/// Residual below which a unit point counts as lying on a unit-norm curve.
pub const ON_CURVE_TOL: f64 = 1e-8;

/// Ternary cubic form with unit coefficient norm.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneCubic {
    form: Form3,
}

impl PlaneCubic {
    pub fn new(form: Form3) -> Result<Self> {
        if form.degree() != 3 {
            return Err(Error::DegenerateInput(format!("expected a cubic, got degree {}", form.degree())));
        }
        let n = form.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::DegenerateInput("zero cubic".into()));
        }
        Ok(Self { form: form.scale(1.0 / n) })
    }

    pub fn form(&self) -> &Form3 {
        &self.form
    }

    pub fn eval(&self, u: &Vector3<f64>) -> f64 {
        self.form.eval(u)
    }

    /// `|f(u)|` for unit `u`.
    pub fn residual(&self, u: &Vector3<f64>) -> f64 {
        self.form.eval(&u.normalize()).abs()
    }

    pub fn contains(&self, u: &Vector3<f64>, tol: f64) -> bool {
        self.residual(u) <= tol
    }

    /// Polar conic of `q`: the points whose tangent passes through `q`.
    pub fn polar_conic(&self, q: &Vector3<f64>) -> Form3 {
        (0..3).fold(Form3::zero(2), |acc, i| acc.add(&self.form.derivative(i).scale(q[i])))
    }

    /// No common zero of the three partial derivatives, checked over the complex numbers.
    pub fn is_smooth(&self, tol: f64) -> bool {
        let fx = self.form.derivative(0);
        let fy = self.form.derivative(1);
        let fz = self.form.derivative(2);
        intersect_curves(&fx, &fy).iter().all(|p| {
            let n = p.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let u = [p[0] / n, p[1] / n, p[2] / n];
            fz.eval_complex(&u).norm() > tol
        })
    }

    /// A real point on the curve along the line through `a` and `b`.
    pub fn point_on_line(&self, a: &Vector3<f64>, b: &Vector3<f64>) -> Option<Vector3<f64>> {
        let g = binary_restriction(&self.form, a, b);
        // g(s, 1) = g3 s³ + g2 s² + g1 s + g0
        let ts = crate::poly::real_roots(&[g[3], g[2], g[1], g[0]], 1e-9);
        ts.first().map(|s| (a * *s + b).normalize())
    }
}

/// Coefficients `(c_s3, c_s2t, c_st2, c_t3)` of `f(s a + t b)`.
fn binary_restriction(f: &Form3, a: &Vector3<f64>, b: &Vector3<f64>) -> [f64; 4] {
    let m = Matrix3::from_columns(&[*a, *b, Vector3::zeros()]);
    let g = f.compose(&m);
    [g.coeff(3, 0, 0), g.coeff(2, 1, 0), g.coeff(1, 2, 0), g.coeff(0, 3, 0)]
}

/// Third intersection of the chord through `a` and `b` with the cubic; the tangent at `a`
/// when the two points coincide.
pub fn cubic_chord_third_point(c: &PlaneCubic, a: &Vector3<f64>, b: &Vector3<f64>) -> Result<Vector3<f64>> {
    for p in [a, b] {
        if !c.contains(p, ON_CURVE_TOL) {
            return Err(Error::NotOnCurve(c.residual(p)));
        }
    }
    let a = a.normalize();
    let b = b.normalize();
    let same = projective_distance(a.as_slice(), b.as_slice()) <= 1e-9;
    let out = if same {
        let grad = c.form.gradient(&a);
        let d = grad.cross(&a);
        if d.norm() <= 1e-12 {
            return Err(Error::DegenerateInput("singular point of the cubic".into()));
        }
        let d = d.normalize();
        // f(s a + t d) = t² (c1 s + c0 t)
        let g = binary_restriction(&c.form, &a, &d);
        a * g[3] - d * g[2]
    } else {
        // f(s a + t b) = s t (c2 s + c1 t)
        let g = binary_restriction(&c.form, &a, &b);
        a * g[2] - b * g[1]
    };
    if out.norm() <= 1e-12 {
        return Err(Error::DegenerateInput("the line is a component of the cubic".into()));
    }
    Ok(out.normalize())
}

/// Real points whose tangent passes through `q`, other than `q` itself, plus the number of
/// such points over the complex numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentFiber {
    pub complex_count: usize,
    pub real: Vec<Vector3<f64>>,
}

pub fn tangent_fiber(c: &PlaneCubic, q: &Vector3<f64>) -> TangentFiber {
    let q = q.normalize();
    let polar = c.polar_conic(&q);
    let mut complex_count = 0;
    let mut real: Vec<Vector3<f64>> = Vec::new();
    for p in intersect_curves(&c.form, &polar) {
        let n = p.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let near_q = {
            // |<p, q>| / |p| close to 1 means p is q up to scale
            let dot = p[0] * q[0] + p[1] * q[1] + p[2] * q[2];
            1.0 - dot.norm() / n < 1e-8
        };
        if near_q {
            continue;
        }
        complex_count += 1;
        if let Some(u) = real_point(&p, 1e-6) {
            if let Some(u) = polish_plane_point(&c.form, &polar, &u) {
                let far_from_q = projective_distance(u.as_slice(), q.as_slice()) > 1e-6;
                let fresh = real.iter().all(|v| projective_distance(u.as_slice(), v.as_slice()) > 1e-8);
                if far_from_q && fresh {
                    real.push(u);
                }
            }
        }
    }
    TangentFiber { complex_count, real }
}

fn collinearity(a: &Vector3<f64>, b: &Vector3<f64>, c: &Vector3<f64>) -> f64 {
    Matrix3::from_columns(&[a.normalize(), b.normalize(), c.normalize()]).determinant().abs()
}

/// Points `y1, y2, y3` on the cubic with `x_i` on the line through the other two `y`.
///
/// Every `p` whose tangent passes through `q = third(third(x1, x2), x3)` gives a solution
/// `(b, a, p)` with `a = third(x1, p)` and `b = third(x2, p)`.
pub fn triangle_on_cubic(c: &PlaneCubic, x: [&Vector3<f64>; 3]) -> Result<[Vector3<f64>; 3]> {
    all_triangles_on_cubic(c, x)?.into_iter().next().ok_or(Error::NoRealSolution)
}

/// Every real solution found in the fiber (at most four).
pub fn all_triangles_on_cubic(c: &PlaneCubic, x: [&Vector3<f64>; 3]) -> Result<Vec<[Vector3<f64>; 3]>> {
    for p in x {
        if !c.contains(p, ON_CURVE_TOL) {
            return Err(Error::NotOnCurve(c.residual(p)));
        }
    }
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        if projective_distance(x[i].as_slice(), x[j].as_slice()) <= 1e-9 {
            return Err(Error::DegenerateInput("the three points must be distinct".into()));
        }
    }
    if collinearity(x[0], x[1], x[2]) <= 1e-9 {
        return Err(Error::DegenerateInput("the three points are collinear".into()));
    }
    let q = cubic_chord_third_point(c, &cubic_chord_third_point(c, x[0], x[1])?, x[2])?;
    let mut out = Vec::new();
    for p in tangent_fiber(c, &q).real {
        let Ok(a) = cubic_chord_third_point(c, x[0], &p) else { continue };
        let Ok(b) = cubic_chord_third_point(c, x[1], &p) else { continue };
        let Ok(cc) = cubic_chord_third_point(c, &a, &b) else { continue };
        if projective_distance(cc.as_slice(), x[2].as_slice()) > 1e-7 {
            continue;
        }
        let ys = [b, a, p];
        let distinct = ys
            .iter()
            .all(|y| x.iter().all(|xi| projective_distance(y.as_slice(), xi.as_slice()) > 1e-7));
        if distinct {
            out.push(ys);
        }
    }
    Ok(out)
}

/// Curve `t ↦ A (1, t, t², t³)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwistedCubic {
    pub a: Matrix4<f64>,
}

impl TwistedCubic {
    pub fn new(a: Matrix4<f64>) -> Result<Self> {
        let s = a.singular_values();
        if s.min() <= 1e-10 * s.max() {
            return Err(Error::Singular);
        }
        Ok(Self { a })
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self { a: random_wellconditioned4(rng) }
    }

    pub fn eval(&self, t: f64) -> Vector4<f64> {
        self.a * Vector4::new(1.0, t, t * t, t * t * t)
    }

    /// Point at homogeneous parameter `(s : t)`.
    pub fn eval_hom(&self, s: f64, t: f64) -> Vector4<f64> {
        self.a * Vector4::new(s * s * s, s * s * t, s * t * t, t * t * t)
    }

    /// Point at angle `θ`, i.e. parameter `(cos θ : sin θ)`; covers the whole curve for θ in [0, π).
    pub fn eval_angle(&self, theta: f64) -> Vector4<f64> {
        self.eval_hom(theta.cos(), theta.sin())
    }

    /// Basis of the three-dimensional space of quadrics through the curve.
    pub fn containing_quadrics(&self) -> Vec<Quadric> {
        // coefficient of t^k in ν(t)ᵀ (Aᵀ S A) ν(t), as a linear form in the 10 entries of S
        let mut m = DMatrix::zeros(7, 10);
        let mut col = 0;
        for p in 0..4 {
            for q in p..4 {
                for i in 0..4 {
                    for j in 0..4 {
                        let mut w = self.a[(p, i)] * self.a[(q, j)];
                        if p != q {
                            w += self.a[(q, i)] * self.a[(p, j)];
                        }
                        m[(i + j, col)] += w;
                    }
                }
                col += 1;
            }
        }
        for mut r in m.row_iter_mut() {
            let n = r.norm();
            if n > 0.0 {
                r /= n;
            }
        }
        let basis = RightSvd::new(&m).null_basis(1e-9);
        basis
            .column_iter()
            .filter_map(|c| Quadric::from_coeffs(c.as_slice()).ok())
            .collect()
    }

    pub fn contains(&self, x: &Vector4<f64>, tol: f64) -> bool {
        self.containing_quadrics().iter().all(|s| s.contains(x, tol))
    }

    /// Coordinates of `x` in the frame where the curve is `(1, t, t², t³)`.
    fn canonical(&self, x: &Vector4<f64>) -> Result<Vector4<f64>> {
        self.a.try_inverse().map(|inv| inv * x).ok_or(Error::Singular)
    }
}

/// The point `x` on the curve such that, for every `q` on `l`, the quadric through the curve,
/// `p` and `q` contains the line through `x` and `q`.
///
/// It is the third point where the plane spanned by `l` and the secant through `p` meets the curve.
pub fn secant_apex_point(c: &TwistedCubic, l: &ProjectiveLine, p: &Vector4<f64>) -> Result<Vector4<f64>> {
    if !l.contains(p, 1e-9) {
        return Err(Error::DegenerateInput("the point is not on the line".into()));
    }
    if c.contains(p, 1e-10) {
        return Err(Error::PointOnCurve);
    }
    let w = c.canonical(p)?;
    // the secant through w meets the curve at the roots of c0 + c1 t + c2 t², where the
    // coefficient vector spans the kernel of the Hankel matrix of w
    let h = DMatrix::from_row_slice(2, 3, &[w[0], w[1], w[2], w[1], w[2], w[3]]);
    let k = RightSvd::new(&h).smallest();
    let (c0, c1, c2) = (k[0], k[1], k[2]);
    let scale = c0.abs().max(c1.abs()).max(c2.abs());
    if c2.abs() <= 1e-9 * scale {
        return Err(Error::NoRealSecant);
    }
    let disc = c1 * c1 - 4.0 * c0 * c2;
    let (u, v) = if disc > 0.0 {
        let r = disc.sqrt();
        let q = -0.5 * (c1 + c1.signum() * r);
        let (t1, t2) = if q != 0.0 { (q / c2, c0 / q) } else { (0.0, -c1 / c2) };
        (c.eval(t1), c.eval(t2))
    } else {
        // complex pair t = α ± iβ: real and imaginary parts of ν(t) span the same real line
        let alpha = -c1 / (2.0 * c2);
        let beta = (-disc).sqrt() / (2.0 * c2.abs());
        let re = Vector4::new(1.0, alpha, alpha * alpha - beta * beta, alpha.powi(3) - 3.0 * alpha * beta * beta);
        let im = Vector4::new(0.0, beta, 2.0 * alpha * beta, 3.0 * alpha * alpha * beta - beta.powi(3));
        (c.a * re, c.a * im)
    };
    let secant = ProjectiveLine::through(&u, &v)?;
    if secant.approx_eq(l, 1e-9) {
        return Err(Error::SecantLine);
    }
    let plane = plane_span(&secant, l).map_err(|_| Error::SecantLine)?;
    third_plane_point(c, &plane, -c1 / c2)
}

/// Point of the curve in `plane` other than the two with parameter sum `pair_sum`.
fn third_plane_point(c: &TwistedCubic, plane: &Plane3, pair_sum: f64) -> Result<Vector4<f64>> {
    // π·A ν(t) = k0 + k1 t + k2 t² + k3 t³
    let k = c.a.transpose() * plane.covector();
    let scale = k.amax();
    if k[3].abs() <= 1e-12 * scale {
        // the third root is the point at infinity of the parametrization
        return Ok(c.eval_hom(0.0, 1.0));
    }
    let t3 = -k[2] / k[3] - pair_sum;
    Ok(c.eval(t3))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrics::quadrics_through;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// y²z - x³ + x z²
    fn nodal_free_cubic() -> PlaneCubic {
        let mut f = Form3::zero(3);
        let idx = |a, b, c| crate::poly::monomials(3).iter().position(|&m| m == (a, b, c)).unwrap();
        let mut c = f.coeffs().to_vec();
        c[idx(0, 2, 1)] = 1.0;
        c[idx(3, 0, 0)] = -1.0;
        c[idx(1, 0, 2)] = 1.0;
        f = Form3::from_coeffs(3, c);
        PlaneCubic::new(f).unwrap()
    }

    #[test]
    fn chord_through_two_flex_line_points() {
        let c = nodal_free_cubic();
        let r = cubic_chord_third_point(&c, &Vector3::new(0.0, 0.0, 1.0), &Vector3::new(1.0, 0.0, 1.0)).unwrap();
        assert!(projective_distance(r.as_slice(), &[-1.0, 0.0, 1.0]) < 1e-12);
    }

    #[test]
    fn tangent_case_gives_residual_point() {
        let c = nodal_free_cubic();
        // tangent at (0,0,1) is x = 0, which meets the curve again only at (0,1,0)
        let a = Vector3::new(0.0, 0.0, 1.0);
        let r = cubic_chord_third_point(&c, &a, &a).unwrap();
        assert!(projective_distance(r.as_slice(), &[0.0, 1.0, 0.0]) < 1e-12);
    }

    #[test]
    fn off_curve_point_is_rejected() {
        let c = nodal_free_cubic();
        let e = cubic_chord_third_point(&c, &Vector3::new(1.0, 1.0, 1.0), &Vector3::new(0.0, 0.0, 1.0));
        assert!(matches!(e, Err(Error::NotOnCurve(_))));
    }

    #[test]
    fn smoothness_test() {
        assert!(nodal_free_cubic().is_smooth(1e-8));
        // nodal cubic y²z - x³ - x²z
        let idx = |a, b, c| crate::poly::monomials(3).iter().position(|&m| m == (a, b, c)).unwrap();
        let mut c = vec![0.0; 10];
        c[idx(0, 2, 1)] = 1.0;
        c[idx(3, 0, 0)] = -1.0;
        c[idx(2, 0, 1)] = -1.0;
        assert!(!PlaneCubic::new(Form3::from_coeffs(3, c)).unwrap().is_smooth(1e-8));
    }

    #[test]
    fn triangle_incidences() {
        let c = nodal_free_cubic();
        let x1 = Vector3::new(0.0, 0.0, 1.0);
        let x2 = Vector3::new(2.0, 6f64.sqrt(), 1.0);
        let x3 = Vector3::new(-0.5, (0.375f64).sqrt(), 1.0);
        let tris = all_triangles_on_cubic(&c, [&x1, &x2, &x3]).unwrap();
        assert!(!tris.is_empty() && tris.len() <= 4);
        for y in tris {
            for v in &y {
                assert!(c.residual(v) < 1e-10);
            }
            assert!(collinearity(&x1, &y[1], &y[2]) < 1e-10);
            assert!(collinearity(&x2, &y[0], &y[2]) < 1e-10);
            assert!(collinearity(&x3, &y[0], &y[1]) < 1e-10);
        }
    }

    #[test]
    fn twisted_cubic_evaluation_and_quadrics() {
        let c = TwistedCubic::new(Matrix4::identity()).unwrap();
        assert_eq!(c.eval(2.0), Vector4::new(1.0, 2.0, 4.0, 8.0));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let c = TwistedCubic::random(&mut rng);
        let qs = c.containing_quadrics();
        assert_eq!(qs.len(), 3);
        for k in 0..20 {
            let x = c.eval_angle(k as f64 * 0.157);
            for s in &qs {
                assert!(s.residual(&(x / x.norm())) < 1e-12);
            }
        }
    }

    #[test]
    fn apex_point_makes_quadrics_contain_lines() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let c = TwistedCubic::random(&mut rng);
        let p = crate::linalg::random_vec4(&mut rng);
        let l = ProjectiveLine::through(&p, &crate::linalg::random_vec4(&mut rng)).unwrap();
        let x = secant_apex_point(&c, &l, &p).unwrap();
        assert!(c.contains(&(x / x.norm()), 1e-10));
        let samples: Vec<Vector4<f64>> = (0..8).map(|k| c.eval_angle(0.3 + 0.35 * k as f64)).collect();
        for k in 0..5 {
            let q = l.point_at(0.4 + 0.5 * k as f64);
            let mut pts = samples.clone();
            pts.push(p);
            pts.push(q);
            let s = quadrics_through(&pts, 1e-9);
            assert_eq!(s.len(), 1);
            let xq = ProjectiveLine::through(&x, &q).unwrap();
            assert!(s[0].contains_line(&xq, 1e-9));
        }
    }

    #[test]
    fn apex_point_errors() {
        let c = TwistedCubic::new(Matrix4::identity()).unwrap();
        let on = c.eval(0.5);
        let l = ProjectiveLine::through(&on, &Vector4::new(0.0, 1.0, 0.0, 0.0)).unwrap();
        assert!(matches!(secant_apex_point(&c, &l, &on), Err(Error::PointOnCurve)));
        let secant = ProjectiveLine::through(&c.eval(0.0), &c.eval(1.0)).unwrap();
        let mid = c.eval(0.0) + c.eval(1.0);
        assert!(matches!(secant_apex_point(&c, &secant, &mid), Err(Error::SecantLine)));
    }
}
