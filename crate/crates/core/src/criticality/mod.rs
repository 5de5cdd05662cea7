//! Deciding criticality of two- and three-view configurations and building the conjugate
//! reconstruction.

mod compat;
mod conjugate;
mod curve_type;
mod seven;
mod three_view;
mod two_view;

pub use compat::{compatibility_witnesses, geometric_compatibility, residual_locus, GEOMETRIC_TOL};
pub use conjugate::{conjugate_reconstruction, scenes_equivalent, Conjugate};
pub use curve_type::{curve_type_conjugate, CurveType};
pub use seven::seven_point_critical;
pub use three_view::{check_scene, three_view_critical};
pub use two_view::{form_from_pair, two_view_critical, TwoViewVerdict};

use nalgebra::Vector4;

use crate::family::Family;
use crate::projective::Scene;
use crate::quadrics::{Locus, PermissiblePair, Plane3, ProjectiveLine, Quadric};

/// Unordered camera pairs in the order `12, 13, 23` (zero-based).
pub const PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

/// One quadric per camera pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadricTriple {
    pub s12: Quadric,
    pub s13: Quadric,
    pub s23: Quadric,
}

impl QuadricTriple {
    pub fn new(s12: Quadric, s13: Quadric, s23: Quadric) -> Self {
        Self { s12, s13, s23 }
    }

    /// Quadric of the pair `{i, j}` (zero-based, either order).
    pub fn get(&self, i: usize, j: usize) -> &Quadric {
        match (i.min(j), i.max(j)) {
            (0, 1) => &self.s12,
            (0, 2) => &self.s13,
            (1, 2) => &self.s23,
            _ => panic!("no quadric for pair ({i}, {j})"),
        }
    }

    pub fn as_array(&self) -> [Quadric; 3] {
        [self.s12, self.s13, self.s23]
    }
}

/// Lines `g_i^j` through center `i` on the quadric of pair `{i, j}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SixLines {
    lines: [[Option<ProjectiveLine>; 3]; 3],
}

impl SixLines {
    /// `lines[i][j]` for every ordered pair `i != j`.
    pub fn new(mut f: impl FnMut(usize, usize) -> ProjectiveLine) -> Self {
        let mut lines = [[None; 3]; 3];
        for (i, row) in lines.iter_mut().enumerate() {
            for (j, slot) in row.iter_mut().enumerate() {
                if i != j {
                    *slot = Some(f(i, j));
                }
            }
        }
        Self { lines }
    }

    pub fn line(&self, i: usize, j: usize) -> &ProjectiveLine {
        self.lines[i][j].as_ref().expect("off-diagonal entry")
    }
}

/// Evidence that a quadric triple carries a compatible triple of forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CompatWitness {
    /// Six lines; the two through each center span the plane `planes[i]`.
    NonCollinear { lines: SixLines, planes: [Plane3; 3] },
    /// One line through each center, shared by both quadrics at that center.
    Collinear { lines: [ProjectiveLine; 3] },
}

impl CompatWitness {
    /// Permissible pair on the quadric of `{i, j}`: first line through center `i`.
    pub fn pair(&self, i: usize, j: usize) -> PermissiblePair {
        match self {
            Self::NonCollinear { lines, .. } => PermissiblePair {
                line1: *lines.line(i, j),
                line2: *lines.line(j, i),
            },
            Self::Collinear { lines } => PermissiblePair {
                line1: lines[i],
                line2: lines[j],
            },
        }
    }

    pub fn is_collinear(&self) -> bool {
        matches!(self, Self::Collinear { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Critical,
    NotCritical,
    /// Every configuration of this size is critical.
    AlwaysCritical,
    DegenerateInput,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Critical => "critical",
            Status::NotCritical => "not-critical",
            Status::AlwaysCritical => "always-critical",
            Status::DegenerateInput => "degenerate-input",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalityVerdict {
    pub status: Status,
    /// Best guess at the family; advisory only.
    pub family: Option<Family>,
    pub triple: Option<QuadricTriple>,
    pub witness: Option<CompatWitness>,
    pub residual: Option<Locus>,
    pub conjugate: Option<Scene>,
    pub max_image_residual: Option<f64>,
    pub reason: String,
}

impl CriticalityVerdict {
    pub(crate) fn bare(status: Status, reason: impl Into<String>) -> Self {
        Self {
            status,
            family: None,
            triple: None,
            witness: None,
            residual: None,
            conjugate: None,
            max_image_residual: None,
            reason: reason.into(),
        }
    }

    pub fn is_critical(&self) -> bool {
        matches!(self.status, Status::Critical | Status::AlwaysCritical)
    }
}

pub(crate) fn center_coords(scene: &Scene) -> Vec<Vector4<f64>> {
    scene.cameras.iter().map(|c| *c.center().coords()).collect()
}

pub(crate) fn point_coords(scene: &Scene) -> Vec<Vector4<f64>> {
    scene.points.iter().map(|x| *x.coords()).collect()
}
