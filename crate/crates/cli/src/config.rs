//! Config files, eye-pose files and run manifests.
//!
//! A config file is a JSON object holding one subcommand's settings, either
//! at the top level or under a key named after the subcommand. A manifest
//! written by a previous run is also a valid config file.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use vac_core::pose::EyePose;

use crate::error::{as_field, json_error, CliError, CliResult};

pub const TOOL: &str = "vac";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn read_json(path: &Path) -> CliResult<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| json_error(path, e))
}

/// Reads a JSON data file; any syntax or schema problem is a data error
/// located by line.
pub fn read_data_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Data(format!("{}:{}: {e}", path.display(), e.line())))
}

/// Loads the `subcommand` section of the config at `path`, or defaults when
/// no path is given.
pub fn load_section<T: DeserializeOwned + Default>(
    path: Option<&Path>,
    subcommand: &str,
) -> CliResult<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let mut value = read_json(path)?;
    if let Some(obj) = value.as_object_mut() {
        if let (Some(Value::String(sub)), Some(_)) = (obj.get("subcommand"), obj.get("config")) {
            if sub != subcommand {
                return Err(CliError::field(
                    "config",
                    format!(
                        "{} is a manifest for `{sub}`, not `{subcommand}`",
                        path.display()
                    ),
                ));
            }
            value = obj.remove("config").expect("checked above");
        } else if let Some(section) = obj.remove(subcommand) {
            value = section;
        }
    }
    serde_json::from_value(value)
        .map_err(|e| CliError::Validation(format!("{}: invalid config: {e}", path.display())))
}

/// Eye position relative to home, in millimetres, plus the optional view
/// rotation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EyePoseFile {
    pub eye_offset_mm: [f64; 3],
    #[serde(default = "identity")]
    pub view_rotation: [[f64; 3]; 3],
}

fn identity() -> [[f64; 3]; 3] {
    [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
}

impl Default for EyePoseFile {
    fn default() -> Self {
        Self::from_pose(&EyePose::default())
    }
}

impl EyePoseFile {
    pub fn from_pose(pose: &EyePose) -> Self {
        Self {
            eye_offset_mm: pose.eye_offset.map(|v| v * 1e3),
            view_rotation: pose.view_rotation,
        }
    }

    pub fn pose(&self) -> CliResult<EyePose> {
        if !self.eye_offset_mm.iter().all(|v| v.is_finite()) {
            return Err(CliError::field("eye_offset_mm", "must be finite"));
        }
        let pose = EyePose {
            eye_offset: self.eye_offset_mm.map(|v| v * 1e-3),
            view_rotation: self.view_rotation,
        };
        pose.validate().map_err(as_field("view_rotation"))?;
        Ok(pose)
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let value = read_json(path)?;
        serde_json::from_value(value)
            .map_err(|e| CliError::Validation(format!("{}: invalid eye pose: {e}", path.display())))
    }
}

#[derive(Serialize)]
struct Manifest<'a, C: Serialize> {
    tool: &'static str,
    version: &'static str,
    subcommand: &'a str,
    config: &'a C,
}

/// Writes `manifest.json` into `out_dir`.
pub fn write_manifest<C: Serialize>(out_dir: &Path, subcommand: &str, config: &C) -> CliResult<()> {
    let manifest = Manifest {
        tool: TOOL,
        version: VERSION,
        subcommand,
        config,
    };
    write_json(&out_dir.join("manifest.json"), &manifest)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn create_out_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Opens `path` for writing a CSV or similar text output.
pub fn create_file(path: &Path) -> CliResult<std::io::BufWriter<std::fs::File>> {
    std::fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

pub fn open_file(path: &Path) -> CliResult<std::io::BufReader<std::fs::File>> {
    std::fs::File::open(path)
        .map(std::io::BufReader::new)
        .map_err(|e| CliError::io(path, e))
}
