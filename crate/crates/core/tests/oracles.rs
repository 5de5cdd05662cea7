//! Closed-form oracles on constructed quadrics, curve types and synthesized triples.

use mvcrit_core::synthesis::gen_seven_point_set;
use mvcrit_core::{
    curve_type_conjugate, geometric_compatibility, intersect_three_planes, permissible_pairs, CompatWitness, Error, HomPoint3,
    Locus, PairFamily, PermissiblePairs, ProjectiveLine, Quadric, QuadricTriple, ToleranceProfile,
};
use nalgebra::{Matrix4, Vector4};

fn v(a: f64, b: f64, c: f64, d: f64) -> Vector4<f64> {
    Vector4::new(a, b, c, d)
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

fn cone() -> Quadric {
    Quadric::new(Matrix4::from_diagonal(&v(1.0, 1.0, -1.0, 0.0))).unwrap()
}

fn tripled(s: Quadric) -> QuadricTriple {
    QuadricTriple::new(s, s, s)
}

#[test]
fn smooth_quadric_generic_centers_two_pairs() {
    let r = permissible_pairs(&segre(), &v(1.0, 0.0, 0.0, 0.0), &v(0.0, 0.0, 0.0, 1.0), &ToleranceProfile::default()).unwrap();
    let PermissiblePairs::Finite(pairs) = r else { panic!("finite list expected") };
    assert_eq!(pairs.len(), 2);
    let l = |a, b| ProjectiveLine::through(&a, &b).unwrap();
    let e = [v(1.0, 0.0, 0.0, 0.0), v(0.0, 1.0, 0.0, 0.0), v(0.0, 0.0, 1.0, 0.0), v(0.0, 0.0, 0.0, 1.0)];
    // ({y = w = 0}, {x = z = 0}) and ({z = w = 0}, {x = y = 0})
    let expected = [(l(e[0], e[2]), l(e[1], e[3])), (l(e[0], e[1]), l(e[2], e[3]))];
    for (a, b) in expected {
        assert!(pairs.iter().any(|p| p.line1.approx_eq(&a, 1e-12) && p.line2.approx_eq(&b, 1e-12)));
    }
}

#[test]
fn smooth_quadric_centers_on_ruling_one_pair() {
    let r = permissible_pairs(&segre(), &v(1.0, 0.0, 0.0, 0.0), &v(1.0, 1.0, 0.0, 0.0), &ToleranceProfile::default()).unwrap();
    assert!(matches!(r, PermissiblePairs::Finite(ref p) if p.len() == 1));
}

#[test]
fn curve_type_table() {
    for ((a, b, c1, c2), out) in [((1, 3, 1, 1), (1, 2, 0, 0)), ((1, 2, 1, 1), (1, 1, 0, 0)), ((1, 1, 1, 1), (1, 0, 0, 0))] {
        let t = curve_type_conjugate(a, b, c1, c2).unwrap();
        assert_eq!((t.a, t.b, t.c1, t.c2), out);
    }
    assert!(matches!(curve_type_conjugate(-1, 0, 0, 0), Err(Error::InvalidType(_))));
}

#[test]
fn excluded_placement_on_smooth_quadric() {
    let tol = ToleranceProfile::default();
    // the two rulings through p1 pass through p2 and p3 respectively
    let p1 = v(1.0, 0.0, 0.0, 0.0);
    let bad = [p1, v(1.0, 1.0, 0.0, 0.0), v(1.0, 0.0, 1.0, 0.0)];
    assert!(geometric_compatibility(&tripled(segre()), &bad, &tol).is_none());
    let good = [p1, v(1.0, 1.0, 0.0, 0.0), v(1.0, 0.3, 0.5, 0.15)];
    assert!(matches!(geometric_compatibility(&tripled(segre()), &good, &tol), Some(CompatWitness::Collinear { .. })));
}

#[test]
fn excluded_placement_on_cone() {
    let tol = ToleranceProfile::default();
    // p1 and p2 on one ruling, neither at the vertex
    let bad = [v(1.0, 0.0, 1.0, 0.0), v(1.0, 0.0, 1.0, 1.0), v(0.0, 1.0, 1.0, 0.5)];
    assert!(geometric_compatibility(&tripled(cone()), &bad, &tol).is_none());
    let good = [v(1.0, 0.0, 1.0, 0.0), v(0.6, 0.8, 1.0, 0.3), v(0.0, 1.0, 1.0, 0.5)];
    assert!(matches!(geometric_compatibility(&tripled(cone()), &good, &tol), Some(CompatWitness::Collinear { .. })));
}

#[test]
fn infinite_rows() {
    let tol = ToleranceProfile::default();
    let family = |s: &Quadric, a, b| match permissible_pairs(s, &a, &b, &tol).unwrap() {
        PermissiblePairs::Family(f) => f,
        other => panic!("{other:?}"),
    };
    assert!(matches!(family(&cone(), v(0.0, 0.0, 0.0, 1.0), v(1.0, 0.0, 1.0, 0.0)), PairFamily::ConeVertex { .. }));
    let planes = Quadric::new(Matrix4::from_diagonal(&v(1.0, -1.0, 0.0, 0.0))).unwrap();
    assert!(matches!(family(&planes, v(1.0, 1.0, 0.0, 0.0), v(1.0, 1.0, 1.0, 0.0)), PairFamily::SharedPlane { .. }));
    assert!(matches!(family(&planes, v(0.0, 0.0, 1.0, 0.0), v(1.0, 1.0, 0.0, 1.0)), PairFamily::SingularLineCenter { .. }));
    assert!(matches!(
        family(&planes, v(0.0, 0.0, 1.0, 0.0), v(0.0, 0.0, 1.0, 1.0)),
        PairFamily::SingularCenters { double_plane: false, .. }
    ));
    let double = Quadric::new(Matrix4::from_diagonal(&v(1.0, 0.0, 0.0, 0.0))).unwrap();
    assert!(matches!(
        family(&double, v(0.0, 1.0, 0.0, 0.0), v(0.0, 0.0, 1.0, 1.0)),
        PairFamily::SingularCenters { double_plane: true, .. }
    ));
}

#[test]
fn seven_point_residual_is_the_plane_intersection() {
    for seed in 0..5 {
        let set = gen_seven_point_set(seed).unwrap();
        let [a, b, c] = &set.planes;
        let Locus::Point(r) = intersect_three_planes(a, b, c, 1e-9) else { panic!("point expected") };
        assert!(r.distance(&set.residual) <= 1e-8);
        let hits = set.base.iter().filter(|x: &&HomPoint3| x.distance(&r) <= 1e-8).count();
        assert_eq!(set.base.len(), 8);
        assert_eq!(hits, 1);
        for x in &set.scene.points {
            assert!(x.distance(&r) > 1e-6);
        }
    }
}
