//! Machine-readable reports and their plain-text rendering.

use std::fmt::Write as _;

use mvcrit_core::synthesis::GroundTruth;
use mvcrit_core::{
    CompatWitness, CriticalityVerdict, HomPoint3, Locus, ProjectiveLine, Quadric, Result, Scene, Status, ToleranceProfile,
};
use serde::Serialize;

use crate::scene_file::{nums, Num, FORMAT_VERSION};

const PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

/// Exit code for a verdict: 0 critical, 1 not critical, 2 degenerate.
pub fn exit_code(status: Status) -> u8 {
    match status {
        Status::Critical | Status::AlwaysCritical => 0,
        Status::NotCritical => 1,
        Status::DegenerateInput => 2,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Tolerances {
    pub rank: Num,
    pub compatibility: Num,
    pub coincidence: Num,
    pub image: Num,
}

impl From<&ToleranceProfile> for Tolerances {
    fn from(t: &ToleranceProfile) -> Self {
        Self {
            rank: Num(t.rank),
            compatibility: Num(t.compatibility),
            coincidence: Num(t.coincidence),
            image: Num(t.image),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct QuadricEntry {
    /// Camera indices, zero-based.
    pub cameras: [usize; 2],
    /// Upper triangle of the symmetric matrix, row by row.
    pub coefficients: Vec<Num>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LineEntry {
    /// Center the line passes through.
    pub center: usize,
    /// Quadric (by camera pair) the line lies on.
    pub cameras: [usize; 2],
    /// Two points spanning the line.
    pub span: [Vec<Num>; 2],
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ResidualEntry {
    Point { coords: Vec<Num> },
    Line { span: [Vec<Num>; 2] },
    Plane { covector: Vec<Num> },
}

impl From<&Locus> for ResidualEntry {
    fn from(l: &Locus) -> Self {
        match l {
            Locus::Point(p) => Self::Point { coords: point(p) },
            Locus::Line(l) => Self::Line { span: span(l) },
            Locus::Plane(p) => Self::Plane {
                covector: nums(p.covector().as_slice()),
            },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SceneEntry {
    pub cameras: Vec<Vec<Num>>,
    pub points: Vec<Vec<Num>>,
}

impl From<&Scene> for SceneEntry {
    fn from(s: &Scene) -> Self {
        Self {
            cameras: s.cameras.iter().map(|c| nums(&c.rows())).collect(),
            points: s.points.iter().map(point).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessBlock {
    /// `non-collinear`, `collinear`, or absent when only a conjugate is known.
    pub kind: Option<&'static str>,
    pub quadrics: Vec<QuadricEntry>,
    pub lines: Vec<LineEntry>,
    pub planes: Vec<Vec<Num>>,
    pub residual: Option<ResidualEntry>,
    pub conjugate: Option<SceneEntry>,
}

impl WitnessBlock {
    fn from_verdict(v: &CriticalityVerdict) -> Option<Self> {
        if v.triple.is_none() && v.witness.is_none() && v.conjugate.is_none() {
            return None;
        }
        let quadrics = v
            .triple
            .as_ref()
            .map(|t| {
                PAIRS
                    .iter()
                    .map(|&(i, j)| QuadricEntry {
                        cameras: [i, j],
                        coefficients: nums(&t.get(i, j).coeffs()),
                    })
                    .collect()
            })
            .unwrap_or_default();
        let (kind, lines, planes) = match &v.witness {
            None => (None, Vec::new(), Vec::new()),
            Some(w) => {
                let mut lines = Vec::new();
                for &(i, j) in &PAIRS {
                    let pair = w.pair(i, j);
                    lines.push(LineEntry {
                        center: i,
                        cameras: [i, j],
                        span: span(&pair.line1),
                    });
                    lines.push(LineEntry {
                        center: j,
                        cameras: [i, j],
                        span: span(&pair.line2),
                    });
                }
                match w {
                    CompatWitness::NonCollinear { planes, .. } => (
                        Some("non-collinear"),
                        lines,
                        planes.iter().map(|p| nums(p.covector().as_slice())).collect(),
                    ),
                    CompatWitness::Collinear { .. } => (Some("collinear"), lines, Vec::new()),
                }
            }
        };
        Some(Self {
            kind,
            quadrics,
            lines,
            planes,
            residual: v.residual.as_ref().map(ResidualEntry::from),
            conjugate: v.conjugate.as_ref().map(SceneEntry::from),
        })
    }
}

/// Result of `check`.
#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub version: u32,
    pub input: String,
    pub status: &'static str,
    pub family: Option<&'static str>,
    pub reason: String,
    pub tolerances: Tolerances,
    pub witness: Option<WitnessBlock>,
    /// `[point][camera]` angular distance between original and conjugate images.
    pub image_residuals: Option<Vec<Vec<Num>>>,
    pub max_image_residual: Option<Num>,
    pub timing_ms: f64,
    #[serde(skip)]
    pub code: u8,
}

impl CheckReport {
    pub fn new(input: &str, scene: &Scene, v: &CriticalityVerdict, tol: &ToleranceProfile, timing_ms: f64) -> Result<Self> {
        let table = match &v.conjugate {
            Some(c) => Some(residual_table(scene, c)?),
            None => None,
        };
        let max = table.as_ref().map(|t| Num(table_max(t)));
        Ok(Self {
            version: FORMAT_VERSION,
            input: input.to_string(),
            status: v.status.as_str(),
            family: v.family.map(|f| f.name()),
            reason: v.reason.clone(),
            tolerances: tol.into(),
            witness: WitnessBlock::from_verdict(v),
            image_residuals: table.map(|t| t.iter().map(|r| nums(r)).collect()),
            max_image_residual: max,
            timing_ms,
            code: exit_code(v.status),
        })
    }

    /// Report for an input that could not be processed.
    pub fn failed(input: &str, message: String) -> Self {
        Self {
            version: FORMAT_VERSION,
            input: input.to_string(),
            status: "error",
            family: None,
            reason: message,
            tolerances: (&ToleranceProfile::default()).into(),
            witness: None,
            image_residuals: None,
            max_image_residual: None,
            timing_ms: 0.0,
            code: 2,
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "input: {}", self.input);
        let _ = writeln!(out, "status: {}", self.status);
        if let Some(f) = self.family {
            let _ = writeln!(out, "family: {f}");
        }
        let _ = writeln!(out, "reason: {}", self.reason);
        let t = &self.tolerances;
        let _ = writeln!(
            out,
            "tolerances: rank {:.1e}, compatibility {:.1e}, coincidence {:.1e}, image {:.1e}",
            t.rank.0, t.compatibility.0, t.coincidence.0, t.image.0
        );
        if let Some(w) = &self.witness {
            if let Some(k) = w.kind {
                let _ = writeln!(out, "witness: {k}, {} quadrics, {} lines", w.quadrics.len(), w.lines.len());
            }
            match &w.residual {
                Some(ResidualEntry::Point { coords }) => {
                    let _ = writeln!(out, "residual point: {}", fmt_vec(coords));
                }
                Some(ResidualEntry::Line { span }) => {
                    let _ = writeln!(out, "residual line: {} {}", fmt_vec(&span[0]), fmt_vec(&span[1]));
                }
                Some(ResidualEntry::Plane { covector }) => {
                    let _ = writeln!(out, "residual plane: {}", fmt_vec(covector));
                }
                None => {}
            }
            if let Some(c) = &w.conjugate {
                let _ = writeln!(out, "conjugate: {} cameras, {} points", c.cameras.len(), c.points.len());
            }
        }
        if let Some(m) = self.max_image_residual {
            let _ = writeln!(out, "max image residual: {:.3e}", m.0);
        }
        let _ = writeln!(out, "time: {:.1} ms", self.timing_ms);
        out
    }
}

/// Result of `verify`.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub version: u32,
    pub scene: String,
    pub conjugate: String,
    pub status: &'static str,
    pub images_match: bool,
    /// `None` when equivalence could not be decided.
    pub equivalent: Option<bool>,
    pub tolerances: Tolerances,
    pub image_residuals: Vec<Vec<Num>>,
    pub max_image_residual: Num,
    pub failures: Vec<String>,
    pub timing_ms: f64,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.status == "pass"
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}: {} vs {}", self.status.to_uppercase(), self.scene, self.conjugate);
        let _ = writeln!(out, "max image residual: {:.3e} (tolerance {:.1e})", self.max_image_residual.0, self.tolerances.image.0);
        let eq = match self.equivalent {
            Some(true) => "yes",
            Some(false) => "no",
            None => "undecided",
        };
        let _ = writeln!(out, "equivalent: {eq}");
        for f in &self.failures {
            let _ = writeln!(out, "  {f}");
        }
        out
    }
}

/// Sidecar written next to a generated scene.
#[derive(Debug, Clone, Serialize)]
pub struct WitnessFile {
    pub version: u32,
    pub family: &'static str,
    pub seed: u64,
    pub n_points: usize,
    pub quadrics: Vec<Vec<Num>>,
    pub lines: Vec<[Vec<Num>; 2]>,
    pub planes: Vec<Vec<Num>>,
    /// Quadrics of the camera pairs (0,1), (0,2), (1,2).
    pub triple: Option<[Vec<Num>; 3]>,
    pub residual: Option<Vec<Num>>,
    pub conjugate_cameras: Option<Vec<Vec<Num>>>,
}

impl WitnessFile {
    pub fn new(truth: &GroundTruth, seed: u64, n_points: usize) -> Self {
        let q = |s: &Quadric| nums(&s.coeffs());
        Self {
            version: FORMAT_VERSION,
            family: truth.family.slug(),
            seed,
            n_points,
            quadrics: truth.quadrics.iter().map(q).collect(),
            lines: truth.lines.iter().map(span).collect(),
            planes: truth.planes.iter().map(|p| nums(p.covector().as_slice())).collect(),
            triple: truth.triple.as_ref().map(|t| t.as_array().each_ref().map(q)),
            residual: truth.residual.as_ref().map(point),
            conjugate_cameras: truth.conjugate_cameras.as_ref().map(|cs| cs.iter().map(|c| nums(&c.rows())).collect()),
        }
    }
}

/// Angular image distance for every point and camera.
pub fn residual_table(a: &Scene, b: &Scene) -> Result<Vec<Vec<f64>>> {
    if a.cameras.len() != b.cameras.len() || a.points.len() != b.points.len() {
        return Err(mvcrit_core::Error::DegenerateInput("scenes have different cardinalities".into()));
    }
    a.points
        .iter()
        .zip(&b.points)
        .map(|(x, y)| {
            a.cameras
                .iter()
                .zip(&b.cameras)
                .map(|(p, q)| Ok(p.project(x)?.distance(&q.project(y)?)))
                .collect()
        })
        .collect()
}

pub fn table_max(t: &[Vec<f64>]) -> f64 {
    t.iter().flatten().copied().fold(0.0, f64::max)
}

fn point(p: &HomPoint3) -> Vec<Num> {
    nums(p.coords().as_slice())
}

fn span(l: &ProjectiveLine) -> [Vec<Num>; 2] {
    let (a, b) = l.span();
    [nums(a.as_slice()), nums(b.as_slice())]
}

fn fmt_vec(v: &[Num]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{:.6}", x.0)).collect();
    format!("({})", parts.join(", "))
}
