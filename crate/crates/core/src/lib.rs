//! Critical configurations of three projective views.
//!
//! Decides whether cameras and points admit a second, inequivalent reconstruction with
//! identical images, builds that reconstruction when it exists, and generates instances
//! of the known critical families.

pub mod criticality;
pub mod error;
pub mod family;
pub mod fundamental;
pub mod linalg;
pub mod poly;
pub mod projective;
pub mod quadrics;
pub mod synthesis;
pub mod tolerance;

pub use criticality::{
    check_scene, compatibility_witnesses, conjugate_reconstruction, curve_type_conjugate, form_from_pair,
    geometric_compatibility, residual_locus, scenes_equivalent, seven_point_critical, three_view_critical, two_view_critical, CompatWitness,
    Conjugate, CriticalityVerdict, CurveType, QuadricTriple, SixLines, Status, TwoViewVerdict,
};
pub use error::{Error, Result};
pub use family::Family;
pub use fundamental::{
    camera_pair_from_form, camera_triple_from_compatible, epipoles, fundamental_form, rank2_check, triple_compatible,
    BilinearForm, CompatibilityKind, CompatibilityVerdict, EpipolePair, Rank2Check,
};
pub use projective::{
    apply_homography, camera_center, image_residuals, project, reconstructions_equivalent, triangulate, Camera, HomPoint2,
    HomPoint3, Homography, Scene,
};
pub use tolerance::ToleranceProfile;
pub use quadrics::{
    classify_quadric, fit_quadric, intersect_three_planes, is_permissible, lines_through_point_on_quadric, permissible_pairs,
    plane_span, pullback_quadric, LineFamily, LinesThroughPoint, Locus, PairFamily, PermissiblePair, PermissiblePairs, Plane3,
    ProjectiveLine, Quadric, QuadricClass, QuadricKind,
};
