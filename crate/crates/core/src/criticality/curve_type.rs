use crate::error::{Error, Result};

/// Type `(a, b, c1, c2)` of a curve on a quadric: bidegree `(a, b)` in the two ruling
/// classes, passing `c1` times through the first center and `c2` times through the second.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CurveType {
    pub a: i64,
    pub b: i64,
    pub c1: i64,
    pub c2: i64,
}

impl CurveType {
    pub fn new(a: i64, b: i64, c1: i64, c2: i64) -> Self {
        Self { a, b, c1, c2 }
    }

    pub fn degree(&self) -> i64 {
        self.a + self.b
    }
}

/// Type of the image of a curve under the conjugate map: `(a, a+b-c1-c2, a-c2, a-c1)`.
pub fn curve_type_conjugate(a: i64, b: i64, c1: i64, c2: i64) -> Result<CurveType> {
    if [a, b, c1, c2].iter().any(|&v| v < 0) {
        return Err(Error::InvalidType(format!("negative entry in ({a}, {b}, {c1}, {c2})")));
    }
    let out = CurveType::new(a, a + b - c1 - c2, a - c2, a - c1);
    if [out.b, out.c1, out.c2].iter().any(|&v| v < 0) {
        return Err(Error::InvalidType(format!(
            "({a}, {b}, {c1}, {c2}) maps to ({}, {}, {}, {})",
            out.a, out.b, out.c1, out.c2
        )));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twisted_cubic_through_both_centers_maps_to_conic() {
        assert_eq!(curve_type_conjugate(1, 2, 1, 1).unwrap(), CurveType::new(1, 1, 0, 0));
    }

    #[test]
    fn elliptic_quartic_is_self_conjugate() {
        assert_eq!(curve_type_conjugate(2, 2, 1, 1).unwrap(), CurveType::new(2, 2, 1, 1));
    }

    #[test]
    fn map_is_an_involution_where_defined() {
        for a in 0..4 {
            for b in 0..4 {
                for c1 in 0..3 {
                    for c2 in 0..3 {
                        if let Ok(t) = curve_type_conjugate(a, b, c1, c2) {
                            let back = curve_type_conjugate(t.a, t.b, t.c1, t.c2).unwrap();
                            assert_eq!(back, CurveType::new(a, b, c1, c2));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_negative_results() {
        assert!(matches!(curve_type_conjugate(0, 1, 1, 0), Err(Error::InvalidType(_))));
        assert!(matches!(curve_type_conjugate(-1, 1, 0, 0), Err(Error::InvalidType(_))));
    }
}
