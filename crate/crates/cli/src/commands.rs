//! The `check`, `gen`, `conjugate` and `verify` commands.
//!
//! Each command returns its standard output and exit code instead of printing, so the
//! binary and the tests drive exactly the same code.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use mvcrit_core::synthesis::{gen_critical, FamilySpec};
use mvcrit_core::{check_scene, scenes_equivalent, Error, Family, Status, ToleranceProfile};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::CliError;
use crate::report::{exit_code, residual_table, table_max, CheckReport, VerifyReport, WitnessFile};
use crate::scene_file::{nums, Num, SceneFile, FORMAT_VERSION};

const WITNESS_SUFFIX: &str = ".witness.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Text,
}

/// Options shared by every command.
#[derive(Debug, Clone, Copy, Default)]
pub struct Settings {
    /// Image-match tolerance; replaces both the default and any per-file value.
    pub tol: Option<f64>,
    pub format: Format,
}

impl Settings {
    fn profile(&self, file: &SceneFile) -> ToleranceProfile {
        let p = file.tolerances.apply(ToleranceProfile::default());
        match self.tol {
            Some(t) => p.with_image(t),
            None => p,
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        match self.tol {
            Some(t) if !(t > 0.0 && t.is_finite()) => Err(CliError::Usage(format!("--tol must be positive, got {t}"))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: u8,
    pub stdout: String,
    /// Diagnostics that must not mix with machine-readable output.
    pub stderr: String,
}

impl Outcome {
    fn new(code: u8, stdout: String) -> Self {
        Self {
            code,
            stdout,
            stderr: String::new(),
        }
    }
}

pub fn read_scene(path: &Path) -> Result<SceneFile, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    SceneFile::parse(&text, &path.display().to_string())
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn render<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn check_report(path: &Path, settings: &Settings) -> Result<CheckReport, CliError> {
    let file = read_scene(path)?;
    let tol = settings.profile(&file);
    let start = Instant::now();
    let verdict = match check_scene(&file.scene, &tol) {
        Ok(v) => v,
        Err(Error::DegenerateInput(msg)) => mvcrit_core::CriticalityVerdict {
            status: Status::DegenerateInput,
            family: None,
            triple: None,
            witness: None,
            residual: None,
            conjugate: None,
            max_image_residual: None,
            reason: msg,
        },
        Err(e) => return Err(e.into()),
    };
    let ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(CheckReport::new(&path.display().to_string(), &file.scene, &verdict, &tol, ms)?)
}

/// Classifies one scene file.
pub fn cmd_check(path: &Path, settings: &Settings) -> Result<Outcome, CliError> {
    settings.validate()?;
    let report = check_report(path, settings)?;
    let stdout = match settings.format {
        Format::Json => render(&report),
        Format::Text => report.to_text(),
    };
    Ok(Outcome::new(report.code, stdout))
}

/// Classifies every `*.json` file in `dir` except witness sidecars; reports come out in
/// file-name order and the exit code is the largest one seen.
pub fn cmd_check_batch(dir: &Path, settings: &Settings) -> Result<Outcome, CliError> {
    settings.validate()?;
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .filter(|p| !p.to_string_lossy().ends_with(WITNESS_SUFFIX))
        .collect();
    files.sort();
    let reports: Vec<CheckReport> = files
        .par_iter()
        .map(|p| check_report(p, settings).unwrap_or_else(|e| CheckReport::failed(&p.display().to_string(), e.to_string())))
        .collect();
    let code = reports.iter().map(|r| r.code).max().unwrap_or(0);
    let stdout = match settings.format {
        Format::Json => render(&reports),
        Format::Text => reports.iter().map(|r| r.to_text()).collect::<Vec<_>>().join("\n"),
    };
    Ok(Outcome::new(code, stdout))
}

/// Path of the witness file written next to a generated scene.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}{WITNESS_SUFFIX}"))
}

/// Writes a generated scene to `out` and its ground truth to the sidecar.
pub fn cmd_gen(family: Family, n_points: usize, seed: u64, out: &Path, settings: &Settings) -> Result<Outcome, CliError> {
    let g = gen_critical(&FamilySpec::new(family, n_points, seed))?;
    let scene_text = SceneFile::new(g.scene.clone()).emit();
    let witness = WitnessFile::new(&g.truth, seed, g.scene.points.len());
    let side = sidecar_path(out);
    write_file(out, &scene_text)?;
    write_file(&side, &render(&witness))?;
    let stdout = match settings.format {
        Format::Json => render(&serde_json::json!({
            "scene": out.display().to_string(),
            "witness": side.display().to_string(),
            "family": family.slug(),
            "points": g.scene.points.len(),
        })),
        Format::Text => format!(
            "wrote {} ({} points, {}) and {}\n",
            out.display(),
            g.scene.points.len(),
            family.name(),
            side.display()
        ),
    };
    Ok(Outcome::new(0, stdout))
}

#[derive(Serialize)]
struct ConjugateSummary {
    version: u32,
    input: String,
    output: Option<String>,
    max_image_residual: Num,
    equivalent: bool,
}

/// Builds the conjugate of a critical scene; writes it to `out` or, without `out`, prints it.
pub fn cmd_conjugate(path: &Path, out: Option<&Path>, settings: &Settings) -> Result<Outcome, CliError> {
    settings.validate()?;
    let file = read_scene(path)?;
    let tol = settings.profile(&file);
    let verdict = check_scene(&file.scene, &tol)?;
    let code = exit_code(verdict.status);
    if code != 0 {
        let stdout = format!("{}: {} ({})\n", path.display(), verdict.status.as_str(), verdict.reason);
        return Ok(Outcome::new(code, stdout));
    }
    let Some(conj) = verdict.conjugate else {
        return Err(CliError::Usage(format!(
            "{}: {}; no explicit conjugate is constructed for this case",
            path.display(),
            verdict.reason
        )));
    };
    let max = table_max(&residual_table(&file.scene, &conj)?);
    let equivalent = scenes_equivalent(&file.scene, &conj, &tol)?;
    let mut conj_file = SceneFile::new(conj);
    conj_file.tolerances = file.tolerances;
    let text = conj_file.emit();
    if let Some(out) = out {
        write_file(out, &text)?;
    }
    let stdout = match (out, settings.format) {
        (None, _) => text,
        (Some(o), Format::Json) => render(&ConjugateSummary {
            version: FORMAT_VERSION,
            input: path.display().to_string(),
            output: Some(o.display().to_string()),
            max_image_residual: Num(max),
            equivalent,
        }),
        (Some(o), Format::Text) => {
            format!("wrote {}\nmax image residual: {max:.3e}\nequivalent: {equivalent}\n", o.display())
        }
    };
    let code = if equivalent || max > tol.image { 2 } else { 0 };
    let mut outcome = Outcome::new(code, stdout);
    if out.is_none() {
        outcome.stderr = format!("max image residual: {max:.3e}\nequivalent: {equivalent}\n");
    }
    Ok(outcome)
}

/// Checks that `conj_path` has the same images as `scene_path` and is not equivalent to it.
pub fn verify_report(scene_path: &Path, conj_path: &Path, settings: &Settings) -> Result<VerifyReport, CliError> {
    settings.validate()?;
    let a = read_scene(scene_path)?;
    let b = read_scene(conj_path)?;
    let (sa, sb) = (&a.scene, &b.scene);
    if sa.cameras.len() != sb.cameras.len() || sa.points.len() != sb.points.len() {
        return Err(CliError::Usage(format!(
            "cardinality mismatch: {} cameras and {} points vs {} cameras and {} points",
            sa.cameras.len(),
            sa.points.len(),
            sb.cameras.len(),
            sb.points.len()
        )));
    }
    let tol = settings.profile(&a);
    let start = Instant::now();
    let table = residual_table(sa, sb)?;
    let mut failures = Vec::new();
    for (k, row) in table.iter().enumerate() {
        for (c, &r) in row.iter().enumerate() {
            if r > tol.image {
                failures.push(format!("point {k} camera {c}: image residual {r:.3e}"));
            }
        }
    }
    let images_match = failures.is_empty();
    let equivalent = match scenes_equivalent(sa, sb, &tol) {
        Ok(e) => Some(e),
        Err(Error::InsufficientData) => None,
        Err(e) => return Err(e.into()),
    };
    match equivalent {
        Some(true) => failures.push("the scenes are projectively equivalent".into()),
        None => failures.push("equivalence could not be decided".into()),
        Some(false) => {}
    }
    let pass = images_match && equivalent == Some(false);
    Ok(VerifyReport {
        version: FORMAT_VERSION,
        scene: scene_path.display().to_string(),
        conjugate: conj_path.display().to_string(),
        status: if pass { "pass" } else { "fail" },
        images_match,
        equivalent,
        tolerances: (&tol).into(),
        max_image_residual: Num(table_max(&table)),
        image_residuals: table.iter().map(|r| nums(r)).collect(),
        failures,
        timing_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

pub fn cmd_verify(scene_path: &Path, conj_path: &Path, settings: &Settings) -> Result<Outcome, CliError> {
    let report = verify_report(scene_path, conj_path, settings)?;
    let stdout = match settings.format {
        Format::Json => render(&report),
        Format::Text => report.to_text(),
    };
    Ok(Outcome::new(if report.passed() { 0 } else { 1 }, stdout))
}
