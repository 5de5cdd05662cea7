//! Scene files, reports and commands behind the `mvcrit` binary.

pub mod commands;
pub mod error;
pub mod report;
pub mod scene_file;

pub use commands::{
    cmd_check, cmd_check_batch, cmd_conjugate, cmd_gen, cmd_verify, read_scene, sidecar_path, verify_report, Format, Outcome,
    Settings,
};
pub use error::CliError;
pub use report::{exit_code, CheckReport, VerifyReport, WitnessFile};
pub use scene_file::{SceneFile, ToleranceOverrides};
