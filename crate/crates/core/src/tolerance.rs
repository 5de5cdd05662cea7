/// Numeric thresholds threaded through every verdict.
///
/// All comparisons are relative: singular-value ratios, angular distances
/// between unit vectors, or residuals of unit-normalized quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceProfile {
    /// Singular-value ratio below which a direction counts as null.
    pub rank: f64,
    /// Bound on the epipolar compatibility residuals.
    pub compatibility: f64,
    /// Angular distance below which two points (or lines) coincide.
    pub coincidence: f64,
    /// Per-point, per-camera angular bound for image equality.
    pub image: f64,
}

impl Default for ToleranceProfile {
    fn default() -> Self {
        Self {
            rank: 1e-8,
            compatibility: 1e-9,
            coincidence: 1e-6,
            image: 1e-8,
        }
    }
}

impl ToleranceProfile {
    /// Same profile with the image-match bound replaced.
    #[must_use]
    pub fn with_image(self, image: f64) -> Self {
        Self { image, ..self }
    }
}
