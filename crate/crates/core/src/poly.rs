//! Polynomial utilities: univariate root finding, ternary forms, and
//! intersection of plane curves by resultants.

use nalgebra::{DMatrix, Matrix3, Vector3};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::random_orthogonal3;

const ABERTH_MAX_ITER: usize = 500;

/// All complex roots of `sum coeffs[k] x^k`. Leading coefficients that are negligible
/// relative to the largest one are dropped (those roots are at infinity).
pub fn roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Vec::new();
    }
    let mut c: Vec<Complex64> = coeffs.iter().map(|x| x / scale).collect();
    while c.len() > 1 && c.last().unwrap().norm() < 1e-13 {
        c.pop();
    }
    let mut zeros = 0;
    while c.len() > 1 && c[0].norm() == 0.0 {
        c.remove(0);
        zeros += 1;
    }
    let n = c.len() - 1;
    let mut out = vec![Complex64::new(0.0, 0.0); zeros];
    if n == 0 {
        return out;
    }
    let lead = c[n];
    let c: Vec<Complex64> = c.iter().map(|x| x / lead).collect();
    if n == 1 {
        out.push(-c[0]);
        return out;
    }
    // Cauchy-type bound for initial radius.
    let radius = 1.0 + c[..n].iter().map(|x| x.norm()).fold(0.0, f64::max);
    let r0 = radius.min(
        c[..n]
            .iter()
            .enumerate()
            .map(|(k, x)| 2.0 * x.norm().powf(1.0 / (n - k) as f64))
            .fold(0.0, f64::max)
            .max(1e-3),
    );
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(r0, 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / n as f64 + 0.4))
        .collect();
    for _ in 0..ABERTH_MAX_ITER {
        let mut max_step: f64 = 0.0;
        for k in 0..n {
            let (p, dp) = horner_with_derivative(&c, z[k]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let mut sum = Complex64::new(0.0, 0.0);
            for j in 0..n {
                if j != k {
                    let d = z[k] - z[j];
                    if d.norm() > 0.0 {
                        sum += 1.0 / d;
                    }
                }
            }
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * sum);
            if step.is_finite() {
                z[k] -= step;
                max_step = max_step.max(step.norm() / (1.0 + z[k].norm()));
            }
        }
        if max_step < 1e-16 {
            break;
        }
    }
    for zk in z.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = horner_with_derivative(&c, *zk);
            if dp.norm() == 0.0 {
                break;
            }
            let step = p / dp;
            if !step.is_finite() || step.norm() > 1e-6 * (1.0 + zk.norm()) {
                break;
            }
            *zk -= step;
        }
    }
    out.extend(z);
    out
}

/// Real roots of a real polynomial (ascending coefficients), imaginary parts below `imag_tol`
/// relative to `1 + |z|` are accepted.
pub fn real_roots(coeffs: &[f64], imag_tol: f64) -> Vec<f64> {
    let c: Vec<Complex64> = coeffs.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let mut out: Vec<f64> = roots(&c)
        .into_iter()
        .filter(|z| z.im.abs() <= imag_tol * (1.0 + z.norm()))
        .map(|z| polish_real_root(coeffs, z.re))
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

fn polish_real_root(coeffs: &[f64], mut x: f64) -> f64 {
    for _ in 0..4 {
        let mut p = 0.0;
        let mut dp = 0.0;
        for &a in coeffs.iter().rev() {
            dp = dp * x + p;
            p = p * x + a;
        }
        if dp == 0.0 {
            break;
        }
        let step = p / dp;
        if !step.is_finite() || step.abs() > 1e-6 * (1.0 + x.abs()) {
            break;
        }
        x -= step;
    }
    x
}

fn horner_with_derivative(c: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &a in c.iter().rev() {
        dp = dp * z + p;
        p = p * z + a;
    }
    (p, dp)
}

pub fn eval_poly(c: &[Complex64], z: Complex64) -> Complex64 {
    c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &a| acc * z + a)
}

/// Homogeneous polynomial in three variables.
///
/// Coefficients are stored per monomial `x^a y^b z^c` (with `a + b + c = degree`) ordered by
/// decreasing `a`, then decreasing `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Form3 {
    degree: usize,
    coeffs: Vec<f64>,
}

pub fn monomial_count(d: usize) -> usize {
    (d + 1) * (d + 2) / 2
}

fn monomial_index(d: usize, a: usize, b: usize) -> usize {
    (d - a) * (d - a + 1) / 2 + (d - a - b)
}

/// Exponent triples of all monomials of degree `d`, in storage order.
pub fn monomials(d: usize) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::with_capacity(monomial_count(d));
    for a in (0..=d).rev() {
        for b in (0..=(d - a)).rev() {
            out.push((a, b, d - a - b));
        }
    }
    out
}

impl Form3 {
    pub fn zero(degree: usize) -> Self {
        Self {
            degree,
            coeffs: vec![0.0; monomial_count(degree)],
        }
    }

    pub fn from_coeffs(degree: usize, coeffs: Vec<f64>) -> Self {
        assert_eq!(coeffs.len(), monomial_count(degree));
        Self { degree, coeffs }
    }

    pub fn constant(c: f64) -> Self {
        Self::from_coeffs(0, vec![c])
    }

    pub fn linear(v: &Vector3<f64>) -> Self {
        // order: x, y, z
        Self::from_coeffs(1, vec![v.x, v.y, v.z])
    }

    /// `uᵀ A u` for a 3x3 matrix (only the symmetric part matters).
    pub fn quadratic(a: &Matrix3<f64>) -> Self {
        let mut f = Self::zero(2);
        for i in 0..3 {
            for j in 0..3 {
                let mut e = [0usize; 3];
                e[i] += 1;
                e[j] += 1;
                f.coeffs[monomial_index(2, e[0], e[1])] += a[(i, j)];
            }
        }
        f
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, a: usize, b: usize, c: usize) -> f64 {
        debug_assert_eq!(a + b + c, self.degree);
        self.coeffs[monomial_index(self.degree, a, b)]
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.degree, other.degree, "adding forms of different degree");
        Self {
            degree: self.degree,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let d = self.degree + other.degree;
        let mut out = Self::zero(d);
        let ma = monomials(self.degree);
        let mb = monomials(other.degree);
        for (i, &(a1, b1, _)) in ma.iter().enumerate() {
            let ca = self.coeffs[i];
            if ca == 0.0 {
                continue;
            }
            for (j, &(a2, b2, _)) in mb.iter().enumerate() {
                out.coeffs[monomial_index(d, a1 + a2, b1 + b2)] += ca * other.coeffs[j];
            }
        }
        out
    }

    pub fn eval(&self, u: &Vector3<f64>) -> f64 {
        monomials(self.degree)
            .iter()
            .zip(&self.coeffs)
            .map(|(&(a, b, c), &k)| k * u.x.powi(a as i32) * u.y.powi(b as i32) * u.z.powi(c as i32))
            .sum()
    }

    pub fn eval_complex(&self, u: &[Complex64; 3]) -> Complex64 {
        monomials(self.degree)
            .iter()
            .zip(&self.coeffs)
            .map(|(&(a, b, c), &k)| u[0].powu(a as u32) * u[1].powu(b as u32) * u[2].powu(c as u32) * k)
            .sum()
    }

    /// Partial derivative with respect to variable `var` (0, 1 or 2).
    pub fn derivative(&self, var: usize) -> Self {
        if self.degree == 0 {
            return Self::zero(0);
        }
        let d = self.degree - 1;
        let mut out = Self::zero(d);
        for (i, &(a, b, c)) in monomials(self.degree).iter().enumerate() {
            let e = [a, b, c];
            if e[var] == 0 {
                continue;
            }
            let mut f = e;
            f[var] -= 1;
            out.coeffs[monomial_index(d, f[0], f[1])] += self.coeffs[i] * e[var] as f64;
        }
        out
    }

    pub fn gradient(&self, u: &Vector3<f64>) -> Vector3<f64> {
        Vector3::new(
            self.derivative(0).eval(u),
            self.derivative(1).eval(u),
            self.derivative(2).eval(u),
        )
    }

    /// The form `u ↦ f(M u)`.
    pub fn compose(&self, m: &Matrix3<f64>) -> Self {
        let rows: Vec<Self> = (0..3)
            .map(|r| Self::linear(&Vector3::new(m[(r, 0)], m[(r, 1)], m[(r, 2)])))
            .collect();
        let powers: Vec<Vec<Self>> = rows
            .iter()
            .map(|l| {
                let mut p = vec![Self::constant(1.0)];
                for k in 1..=self.degree {
                    let next = p[k - 1].mul(l);
                    p.push(next);
                }
                p
            })
            .collect();
        let mut out = Self::zero(self.degree);
        for (i, &(a, b, c)) in monomials(self.degree).iter().enumerate() {
            if self.coeffs[i] == 0.0 {
                continue;
            }
            let term = powers[0][a].mul(&powers[1][b]).mul(&powers[2][c]);
            out = out.add(&term.scale(self.coeffs[i]));
        }
        out
    }

    /// Coefficients of `f(x, y, 1)` grouped by powers of `y`: entry `j` holds the
    /// ascending coefficients in `x` of the `y^j` term.
    fn by_powers_of_y(&self) -> Vec<Vec<f64>> {
        let d = self.degree;
        let mut out = vec![vec![0.0; d + 1]; d + 1];
        for (i, &(a, b, _)) in monomials(d).iter().enumerate() {
            out[b][a] += self.coeffs[i];
        }
        out
    }
}

/// Fixed rotation used to put curves in general position before eliminating `y`.
fn generic_rotation(salt: u64) -> Matrix3<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x9e37_79b9_7f4a_7c15 ^ salt);
    random_orthogonal3(&mut rng)
}

/// Intersection points of two plane curves, over the complex numbers.
///
/// The resultant in `y` is sampled on the unit circle and interpolated, its roots give the
/// `x` coordinates; the matching `y` is the root of `f(x, ·)` where `g` is smallest.
/// Generically returns `deg f · deg g` points (homogeneous, in the original coordinates).
pub fn intersect_curves(f: &Form3, g: &Form3) -> Vec<[Complex64; 3]> {
    for salt in 0..4u64 {
        let rot = generic_rotation(salt);
        let fr = f.compose(&rot);
        let gr = g.compose(&rot);
        let fy = fr.by_powers_of_y();
        let gy = gr.by_powers_of_y();
        let m = f.degree;
        let n = g.degree;
        // leading y coefficients are constants; bail to another rotation if degenerate
        let lead_f = fy[m][0].abs() / fr.norm().max(f64::MIN_POSITIVE);
        let lead_g = gy[n][0].abs() / gr.norm().max(f64::MIN_POSITIVE);
        if lead_f < 1e-6 || lead_g < 1e-6 {
            continue;
        }
        let deg = m * n;
        let samples = (2 * (deg + 1)).next_power_of_two().max(8);
        let values: Vec<Complex64> = (0..samples)
            .map(|k| {
                let x = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / samples as f64);
                sylvester_det(&fy, &gy, x)
            })
            .collect();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); samples];
        for (j, c) in coeffs.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, v) in values.iter().enumerate() {
                let ang = -2.0 * std::f64::consts::PI * (j * k) as f64 / samples as f64;
                acc += v * Complex64::from_polar(1.0, ang);
            }
            *c = acc / samples as f64;
        }
        coeffs.truncate(deg + 1);
        let xs = roots(&coeffs);
        let mut out = Vec::with_capacity(xs.len());
        for x in xs {
            let fx: Vec<Complex64> = fy.iter().map(|c| eval_poly(&to_complex(c), x)).collect();
            let ys = roots(&fx);
            let best = ys.into_iter().min_by(|a, b| {
                let ga = eval_y(&gy, x, *a).norm() / (1.0 + a.norm()).powi(n as i32);
                let gb = eval_y(&gy, x, *b).norm() / (1.0 + b.norm()).powi(n as i32);
                ga.total_cmp(&gb)
            });
            if let Some(y) = best {
                let u = [x, y, Complex64::new(1.0, 0.0)];
                let mut p = [Complex64::new(0.0, 0.0); 3];
                for (r, pr) in p.iter_mut().enumerate() {
                    *pr = u[0] * rot[(r, 0)] + u[1] * rot[(r, 1)] + u[2] * rot[(r, 2)];
                }
                out.push(p);
            }
        }
        return out;
    }
    Vec::new()
}

fn to_complex(c: &[f64]) -> Vec<Complex64> {
    c.iter().map(|&x| Complex64::new(x, 0.0)).collect()
}

fn eval_y(gy: &[Vec<f64>], x: Complex64, y: Complex64) -> Complex64 {
    gy.iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, c| acc * y + eval_poly(&to_complex(c), x))
}

fn sylvester_det(fy: &[Vec<f64>], gy: &[Vec<f64>], x: Complex64) -> Complex64 {
    let m = fy.len() - 1;
    let n = gy.len() - 1;
    let size = m + n;
    let a: Vec<Complex64> = fy.iter().map(|c| eval_poly(&to_complex(c), x)).collect();
    let b: Vec<Complex64> = gy.iter().map(|c| eval_poly(&to_complex(c), x)).collect();
    let mut s = DMatrix::<Complex64>::zeros(size, size);
    for r in 0..n {
        for j in 0..=m {
            s[(r, r + j)] = a[m - j];
        }
    }
    for r in 0..m {
        for j in 0..=n {
            s[(n + r, r + j)] = b[n - j];
        }
    }
    s.determinant()
}

/// Whether a complex homogeneous point is real up to scale, and its real representative.
pub fn real_point(p: &[Complex64; 3], tol: f64) -> Option<Vector3<f64>> {
    // Rotate the phase so the largest entry is real.
    let k = (0..3).max_by(|&i, &j| p[i].norm().total_cmp(&p[j].norm()))?;
    if p[k].norm() == 0.0 {
        return None;
    }
    let phase = p[k].conj() / p[k].norm();
    let q: Vec<Complex64> = p.iter().map(|z| z * phase).collect();
    let norm = q.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let imag = q.iter().map(|z| z.im * z.im).sum::<f64>().sqrt() / norm;
    if imag <= tol {
        Some(Vector3::new(q[0].re, q[1].re, q[2].re) / norm)
    } else {
        None
    }
}

/// Newton refinement of a common real zero of two plane curves.
pub fn polish_plane_point(f: &Form3, g: &Form3, u0: &Vector3<f64>) -> Option<Vector3<f64>> {
    let mut u = u0.normalize();
    let anchor = u;
    let (dfx, dfy, dfz) = (f.derivative(0), f.derivative(1), f.derivative(2));
    let (dgx, dgy, dgz) = (g.derivative(0), g.derivative(1), g.derivative(2));
    for _ in 0..50 {
        let r = Vector3::new(f.eval(&u), g.eval(&u), anchor.dot(&u) - 1.0);
        let jac = Matrix3::new(
            dfx.eval(&u),
            dfy.eval(&u),
            dfz.eval(&u),
            dgx.eval(&u),
            dgy.eval(&u),
            dgz.eval(&u),
            anchor.x,
            anchor.y,
            anchor.z,
        );
        let step = jac.lu().solve(&r)?;
        u -= step;
        if step.norm() <= 1e-15 * u.norm() {
            break;
        }
    }
    let u = u.normalize();
    u.iter().all(|x| x.is_finite()).then_some(u)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn roots_of_cubic() {
        // (x-1)(x+2)(x-3) = x^3 - 2x^2 - 5x + 6
        let mut r = real_roots(&[6.0, -5.0, -2.0, 1.0], 1e-9);
        r.sort_by(f64::total_cmp);
        assert!((r[0] + 2.0).abs() < 1e-12);
        assert!((r[1] - 1.0).abs() < 1e-12);
        assert!((r[2] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn complex_roots_come_in_pairs() {
        // x^2 + 1
        let r = roots(&[c(1.0), c(0.0), c(1.0)]);
        assert_eq!(r.len(), 2);
        for z in r {
            assert!((z.im.abs() - 1.0).abs() < 1e-12 && z.re.abs() < 1e-12);
        }
    }

    #[test]
    fn form_compose_matches_evaluation() {
        let f = Form3::from_coeffs(3, (0..10).map(|k| (k as f64 * 0.37).sin()).collect());
        let m = Matrix3::new(1.0, 2.0, 0.5, -0.3, 1.1, 0.2, 0.7, -0.4, 2.0);
        let u = Vector3::new(0.3, -0.8, 1.7);
        assert!((f.compose(&m).eval(&u) - f.eval(&(m * u))).abs() < 1e-12);
    }

    #[test]
    fn derivative_is_euler_consistent() {
        let f = Form3::from_coeffs(3, (0..10).map(|k| (k as f64 * 1.3).cos()).collect());
        let u = Vector3::new(0.4, 1.2, -0.6);
        assert!((f.gradient(&u).dot(&u) - 3.0 * f.eval(&u)).abs() < 1e-12);
    }

    #[test]
    fn circle_meets_line_pair() {
        // x^2 + y^2 - z^2 and xy: intersections (±1,0,1), (0,±1,1)
        let circle = Form3::quadratic(&Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0)));
        let mut xy = Form3::zero(2);
        xy = xy.add(&Form3::linear(&Vector3::x()).mul(&Form3::linear(&Vector3::y())));
        let pts = intersect_curves(&circle, &xy);
        assert_eq!(pts.len(), 4);
        let real: Vec<_> = pts.iter().filter_map(|p| real_point(p, 1e-8)).collect();
        assert_eq!(real.len(), 4);
        for p in real {
            assert!(circle.eval(&p).abs() < 1e-10 && xy.eval(&p).abs() < 1e-10);
        }
    }
}
