//! Seeded generators for the known critical families, and the curve constructions they use.

mod curves;
mod families;
mod seven;

pub use curves::{
    all_triangles_on_cubic, cubic_chord_third_point, secant_apex_point, tangent_fiber, triangle_on_cubic, PlaneCubic,
    TangentFiber, TwistedCubic, ON_CURVE_TOL,
};
pub use families::{camera_with_center, gen_critical, sample_quadric_intersection, FamilySpec, GeneratedScene, GroundTruth};
pub use seven::{base_points, gen_seven_point_set, SevenPointSet};

/// Redraws allowed per generator before giving up.
pub const RETRY_BUDGET: usize = 32;
