//! Versioned JSON scene files.
//!
//! Numbers are written with 17 significant digits so that parsing an emitted file gives
//! back the same `f64` values bit for bit.

use std::fmt::Write as _;

use mvcrit_core::{Camera, HomPoint3, Scene, ToleranceProfile};
use serde::{Deserialize, Serialize, Serializer};
use serde_json::value::RawValue;

use crate::error::CliError;

pub const FORMAT_VERSION: u32 = 1;

/// A float that serializes with 17 significant digits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let raw = RawValue::from_string(format_num(self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

pub fn format_num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn nums(xs: &[f64]) -> Vec<Num> {
    xs.iter().copied().map(Num).collect()
}

/// Optional per-file replacements for the default thresholds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    pub rank: Option<f64>,
    pub compatibility: Option<f64>,
    pub coincidence: Option<f64>,
    pub image: Option<f64>,
}

impl ToleranceOverrides {
    pub fn apply(&self, base: ToleranceProfile) -> ToleranceProfile {
        ToleranceProfile {
            rank: self.rank.unwrap_or(base.rank),
            compatibility: self.compatibility.unwrap_or(base.compatibility),
            coincidence: self.coincidence.unwrap_or(base.coincidence),
            image: self.image.unwrap_or(base.image),
        }
    }

    fn is_empty(&self) -> bool {
        *self == Self::default()
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSceneFile {
    version: u32,
    cameras: Vec<[f64; 12]>,
    points: Vec<[f64; 4]>,
    #[serde(default)]
    labels: Option<Vec<String>>,
    #[serde(default)]
    tolerances: Option<ToleranceOverrides>,
}

/// Parsed contents of a scene file.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneFile {
    pub scene: Scene,
    pub tolerances: ToleranceOverrides,
}

impl SceneFile {
    pub fn new(scene: Scene) -> Self {
        Self {
            scene,
            tolerances: ToleranceOverrides::default(),
        }
    }

    /// Parses and validates; `origin` names the input in error messages.
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        let raw: RawSceneFile = serde_json::from_str(text).map_err(|e| CliError::Syntax {
            origin: origin.to_string(),
            line: e.line(),
            column: e.column(),
            message: strip_position(&e.to_string()),
        })?;
        let field = |field: String, message: String| CliError::Field {
            origin: origin.to_string(),
            field,
            message,
        };
        if raw.version != FORMAT_VERSION {
            return Err(field("version".into(), format!("unsupported version {}", raw.version)));
        }
        let tolerances = raw.tolerances.unwrap_or_default();
        for (name, v) in [
            ("rank", tolerances.rank),
            ("compatibility", tolerances.compatibility),
            ("coincidence", tolerances.coincidence),
            ("image", tolerances.image),
        ] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(field(format!("tolerances.{name}"), "must be positive and finite".into()));
                }
            }
        }
        let rank_tol = tolerances.apply(ToleranceProfile::default());
        let cameras = raw
            .cameras
            .iter()
            .enumerate()
            .map(|(k, rows)| Camera::from_rows(rows, rank_tol.rank).map_err(|e| field(format!("cameras[{k}]"), e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        let points = raw
            .points
            .iter()
            .enumerate()
            .map(|(k, c)| HomPoint3::from_slice(c).map_err(|e| field(format!("points[{k}]"), e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        let scene = Scene::new(cameras, points, raw.labels, rank_tol.coincidence).map_err(|e| field("scene".into(), e.to_string()))?;
        Ok(Self { scene, tolerances })
    }

    /// Canonical text: one camera or point per line.
    pub fn emit(&self) -> String {
        let mut out = String::new();
        out.push_str("{\n");
        let _ = writeln!(out, "  \"version\": {FORMAT_VERSION},");
        out.push_str("  \"cameras\": [\n");
        push_rows(&mut out, self.scene.cameras.iter().map(|c| c.rows()));
        out.push_str("  ],\n");
        out.push_str("  \"points\": [\n");
        push_rows(&mut out, self.scene.points.iter().map(|x| x.coords().as_slice().to_vec()));
        out.push_str("  ]");
        if let Some(labels) = &self.scene.labels {
            let _ = write!(out, ",\n  \"labels\": {}", serde_json::to_string(labels).expect("strings serialize"));
        }
        if !self.tolerances.is_empty() {
            let t = &self.tolerances;
            let mut parts = Vec::new();
            for (name, v) in [
                ("rank", t.rank),
                ("compatibility", t.compatibility),
                ("coincidence", t.coincidence),
                ("image", t.image),
            ] {
                if let Some(v) = v {
                    parts.push(format!("\"{name}\": {}", format_num(v)));
                }
            }
            let _ = write!(out, ",\n  \"tolerances\": {{{}}}", parts.join(", "));
        }
        out.push_str("\n}\n");
        out
    }
}

fn push_rows(out: &mut String, rows: impl Iterator<Item = Vec<f64>>) {
    let rows: Vec<String> = rows
        .map(|r| format!("    [{}]", r.iter().map(|&x| format_num(x)).collect::<Vec<_>>().join(", ")))
        .collect();
    out.push_str(&rows.join(",\n"));
    if !rows.is_empty() {
        out.push('\n');
    }
}

// serde_json appends " at line L column C"; the position is reported separately
fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}
