use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use vac_core::correction::{
    read_points_csv, write_points_csv, AngleConvention, DepthRemap, MeshModel, MeshReport,
};
use vac_core::geometry::EyeGeometry;
use vac_core::perception::PerturbationParams;
use vac_core::pose::RigidTransform;

use crate::config::{
    create_file, create_out_dir, load_section, open_file, read_data_json, write_json,
    write_manifest,
};
use crate::error::{as_field, CliError, CliResult};

#[derive(Debug, Args)]
pub struct TransformArgs {
    /// Transform config (JSON).
    #[arg(long, env = "VAC_CONFIG")]
    pub config: Option<PathBuf>,
    /// Output directory; the transformed scene keeps the input file name.
    #[arg(long)]
    pub out: PathBuf,
    /// Scene to transform: `.obj` mesh or `.csv` point list (x,y,z in m).
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// Vergence offset to cancel (degrees).
    #[arg(long)]
    pub beta_deg: Option<f64>,
    #[arg(long)]
    pub ipd_mm: Option<f64>,
    /// Subtract the offset from the half angle instead of the full angle.
    #[arg(long)]
    pub literal_half_angle: bool,
    /// World-to-view rigid transform JSON (`rotation`, `translation` in m).
    #[arg(long)]
    pub view: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransformConfig {
    pub input: Option<PathBuf>,
    pub beta_deg: f64,
    pub ipd_mm: f64,
    pub convention: AngleConvention,
    pub view: RigidTransform,
}

impl Default for TransformConfig {
    fn default() -> Self {
        Self {
            input: None,
            beta_deg: 0.22,
            ipd_mm: 63.0,
            convention: AngleConvention::Reconciled,
            view: RigidTransform::identity(),
        }
    }
}

pub fn resolve(args: &TransformArgs) -> CliResult<TransformConfig> {
    let mut cfg: TransformConfig = load_section(args.config.as_deref(), "transform")?;
    if let Some(p) = &args.input {
        cfg.input = Some(p.clone());
    }
    if let Some(b) = args.beta_deg {
        cfg.beta_deg = b;
    }
    if let Some(i) = args.ipd_mm {
        cfg.ipd_mm = i;
    }
    if args.literal_half_angle {
        cfg.convention = AngleConvention::LiteralHalfAngle;
    }
    if let Some(p) = &args.view {
        cfg.view = read_data_json(p)?;
    }
    Ok(cfg)
}

#[derive(Debug, Serialize)]
struct TransformReport {
    input: String,
    output: String,
    #[serde(flatten)]
    mesh: MeshReport,
}

enum Format {
    Obj,
    Csv,
}

pub fn run(cfg: &TransformConfig, out: &Path) -> CliResult<()> {
    let input = cfg
        .input
        .as_deref()
        .ok_or_else(|| CliError::field("input", "a scene file is required"))?;
    let format = match input
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
    {
        Some(e) if e == "obj" => Format::Obj,
        Some(e) if e == "csv" => Format::Csv,
        _ => {
            return Err(CliError::field(
                "input",
                format!("{} is neither .obj nor .csv", input.display()),
            ))
        }
    };
    let params = PerturbationParams::from_degrees(cfg.beta_deg).map_err(as_field("beta_deg"))?;
    let eyes = EyeGeometry::from_mm(cfg.ipd_mm).map_err(as_field("ipd_mm"))?;
    cfg.view.validate().map_err(as_field("view"))?;
    let remap = DepthRemap::new(eyes, params).with_convention(cfg.convention);

    let name = input.display().to_string();
    let original = match format {
        Format::Obj => {
            let text = std::fs::read_to_string(input).map_err(|e| CliError::io(input, e))?;
            MeshModel::parse_obj(&text, &name)?
        }
        Format::Csv => MeshModel::new(read_points_csv(open_file(input)?, &name)?, Vec::new())?,
    };
    let moved = remap.transform_mesh(&original, &cfg.view)?;

    create_out_dir(out)?;
    let file_name = input.file_name().expect("input has an extension");
    let target = out.join(file_name);
    if target.canonicalize().ok() == input.canonicalize().ok() && target.exists() {
        return Err(CliError::field("out", "would overwrite the input scene"));
    }
    match format {
        Format::Obj => moved.write_obj(&target)?,
        Format::Csv => write_points_csv(moved.vertices(), create_file(&target)?)?,
    }
    let report = TransformReport {
        input: name,
        output: target.display().to_string(),
        mesh: moved.report_against(&original),
    };
    write_json(&out.join("transform_report.json"), &report)?;
    write_manifest(out, "transform", cfg)
}
