//! Names of the critical families the generators and the classifier know about.

use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    /// Points and all three centers on an elliptic quartic.
    EllipticQuartic,
    /// Points and all three centers on a twisted cubic.
    ThreeOnCurve,
    /// Points and two of the centers on a twisted cubic.
    TwoOnCurve,
    /// Points on a twisted cubic, centers collinear and off the curve.
    CollinearCamerasOffCurve,
    /// Points on a plane plus a conic through the centers.
    PlaneConic,
    /// Points and centers on one conic.
    ConicCameras,
    /// Points on two skew lines missing the centers.
    TwoLines,
    /// Seven points cut out by a compatible quadric triple.
    SevenPoints,
}

impl Family {
    pub const ALL: [Family; 8] = [
        Family::EllipticQuartic,
        Family::ThreeOnCurve,
        Family::TwoOnCurve,
        Family::CollinearCamerasOffCurve,
        Family::PlaneConic,
        Family::ConicCameras,
        Family::TwoLines,
        Family::SevenPoints,
    ];

    /// Command-line spelling.
    pub fn slug(self) -> &'static str {
        match self {
            Family::EllipticQuartic => "elliptic-quartic",
            Family::ThreeOnCurve => "twisted-cubic-3on",
            Family::TwoOnCurve => "twisted-cubic-2on",
            Family::CollinearCamerasOffCurve => "collinear-off-cubic",
            Family::PlaneConic => "plane-conic",
            Family::ConicCameras => "conic-cameras",
            Family::TwoLines => "two-lines",
            Family::SevenPoints => "seven-points",
        }
    }

    /// Human-readable name used in reports.
    pub fn name(self) -> &'static str {
        match self {
            Family::EllipticQuartic => "elliptic quartic",
            Family::ThreeOnCurve => "twisted cubic through three centers",
            Family::TwoOnCurve => "twisted cubic through two centers",
            Family::CollinearCamerasOffCurve => "twisted cubic with collinear centers",
            Family::PlaneConic => "plane and conic",
            Family::ConicCameras => "conic through the centers",
            Family::TwoLines => "two skew lines",
            Family::SevenPoints => "seven points",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL
            .into_iter()
            .find(|f| f.slug() == s || f.name() == s)
            .ok_or_else(|| format!("unknown family `{s}`"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slugs_round_trip() {
        for f in Family::ALL {
            assert_eq!(f.slug().parse::<Family>().unwrap(), f);
            assert_eq!(f.name().parse::<Family>().unwrap(), f);
        }
        assert!("bogus".parse::<Family>().is_err());
    }
}
