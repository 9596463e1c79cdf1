use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use linecloud::config::PipelineConfig;
use linecloud::eval::{evaluate, EvalParams};
use linecloud::io::{load_cloud, load_result, load_truth, save_result, write_labels, CloudFormat, ResultFormat};
use linecloud::pipeline::{run_pipeline_detailed, PipelineRun};
use linecloud::scene::{facade_spacing_for, generate_scene, SceneKind};
use linecloud::{Error, Result};

#[derive(Parser)]
#[command(name = "linecloud", version, about = "Detect 3D line segments in point clouds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect line segments in a point-cloud file.
    Detect(DetectArgs),
    /// Run on a synthetic scene and score against its ground truth.
    Bench(BenchArgs),
    /// Score a saved result against ground-truth edges.
    Eval(EvalArgs),
}

macro_rules! overrides {
    ($($field:ident: $ty:ty),* $(,)?) => {
        /// Per-field overrides of the configuration.
        #[derive(Args, Default)]
        struct Overrides {
            $(
                #[arg(long, value_name = "VALUE")]
                $field: Option<$ty>,
            )*
        }

        impl Overrides {
            fn apply(&self, cfg: &mut PipelineConfig) -> Result<()> {
                $(
                    if let Some(v) = &self.$field {
                        cfg.set(stringify!($field), &v.to_string())?;
                    }
                )*
                Ok(())
            }
        }
    };
}

overrides! {
    k: usize,
    theta_deg: f64,
    th_o_mult: f64,
    th_p_mult: f64,
    min_plane_points: usize,
    plane_scale_mult: f64,
    raster_cap: usize,
    min_contour_px: usize,
    split_tol_px: f64,
    min_run_px: usize,
    cluster_join_deg: f64,
    cluster_new_deg: f64,
    plane_reject_ratio: f64,
    latitude_bin_deg: f64,
    merge_dist_ratio: f64,
    merge_perp_mult: f64,
    merge_gap_mult: f64,
}

#[derive(Args)]
struct ConfigArgs {
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads, 0 for all cores.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    no_postprocess: bool,
    #[command(flatten)]
    overrides: Overrides,
}

impl ConfigArgs {
    fn build(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::from_file(path)?,
            None => PipelineConfig::default(),
        };
        self.overrides.apply(&mut cfg)?;
        if let Some(t) = self.threads {
            cfg.threads = t;
        }
        if self.no_postprocess {
            cfg.postprocess_enabled = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct DetectArgs {
    #[arg(long)]
    input: PathBuf,
    /// auto, xyz, pts or ply.
    #[arg(long, default_value = "auto")]
    format: String,
    #[arg(long)]
    output: PathBuf,
    /// json, obj or csv.
    #[arg(long, default_value = "json")]
    output_format: String,
    /// Write per-plane rasters (PBM) and 2D segments next to the output.
    #[arg(long)]
    emit_planes: bool,
    /// Write `x y z label` rows next to the output.
    #[arg(long)]
    emit_labels: bool,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct BenchArgs {
    /// cube, room, facade or two-planes.
    #[arg(long, default_value = "cube")]
    scene: String,
    #[arg(long, conflicts_with = "points")]
    spacing: Option<f64>,
    /// Approximate point count; picks the spacing (facade only).
    #[arg(long)]
    points: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Evaluation tolerance; defaults to 5x the spacing.
    #[arg(long)]
    tol: Option<f64>,
    /// Save the detection result (JSON).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Save the ground-truth edges (JSON).
    #[arg(long)]
    truth_output: Option<PathBuf>,
    /// Save the generated cloud (XYZ).
    #[arg(long)]
    cloud_output: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    result: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    tol: f64,
}

fn sibling(output: &Path, suffix: &str) -> PathBuf {
    let stem = output.file_stem().and_then(|s| s.to_str()).unwrap_or("result");
    output.with_file_name(format!("{stem}{suffix}"))
}

fn emit_planes(run: &PipelineRun, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.into(), source: e })?;
    for lines in run.plane_lines.iter().flatten() {
        let pbm = dir.join(format!("plane_{:04}.pbm", lines.plane_id));
        let txt = dir.join(format!("plane_{:04}_segments.txt", lines.plane_id));
        let write = || -> std::io::Result<()> {
            lines.raster.image.write_pbm(std::io::BufWriter::new(fs::File::create(&pbm)?))?;
            let mut out = std::io::BufWriter::new(fs::File::create(&txt)?);
            writeln!(out, "# contour u0 v0 u1 v1 (pixels)")?;
            for s in &lines.segments_2d {
                writeln!(out, "{} {} {} {} {}", s.contour_id, s.start[0], s.start[1], s.end[0], s.end[1])?;
            }
            out.flush()
        };
        write().map_err(|e| Error::Io { path: pbm.clone(), source: e })?;
    }
    Ok(())
}

fn detect(args: &DetectArgs) -> Result<()> {
    let cfg = args.config.build()?;
    let format: CloudFormat = args.format.parse()?;
    let out_format: ResultFormat = args.output_format.parse()?;
    let cloud = load_cloud(&args.input, format)?;
    let run = run_pipeline_detailed(&cloud, &cfg)?;
    save_result(&run.result, &args.output, out_format)?;
    if args.emit_labels {
        write_labels(&cloud, &run.labels, &sibling(&args.output, "_labels.xyz"))?;
    }
    if args.emit_planes {
        emit_planes(&run, &sibling(&args.output, "_planes"))?;
    }
    eprintln!(
        "{} points, {} planes, {} segments in {:.3}s",
        cloud.len(),
        run.result.planes.len(),
        run.result.segments.len(),
        run.result.timing.total_s
    );
    Ok(())
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").map_err(|e| Error::Io { path: path.into(), source: e })
}

fn bench(args: &BenchArgs) -> Result<()> {
    let cfg = args.config.build()?;
    let kind: SceneKind = args.scene.parse()?;
    let spacing = match (args.spacing, args.points) {
        (Some(s), _) => s,
        (None, Some(n)) if kind == SceneKind::Facade => facade_spacing_for(n),
        (None, Some(_)) => {
            return Err(Error::InvalidParameter("--points is only supported for the facade scene".into()))
        }
        (None, None) => 0.01,
    };
    let scene = generate_scene(kind, spacing, args.noise, args.seed)?;
    let run = run_pipeline_detailed(&scene.cloud, &cfg)?;
    let tol = args.tol.unwrap_or(5.0 * spacing);
    let report = evaluate(&run.result.line_segments(), &scene.truth.edges, &EvalParams::with_tol(tol));
    if let Some(path) = &args.output {
        save_result(&run.result, path, ResultFormat::Json)?;
    }
    if let Some(path) = &args.truth_output {
        write_json(path, &scene.truth)?;
    }
    if let Some(path) = &args.cloud_output {
        linecloud::io::write_xyz(&scene.cloud, path)?;
    }
    let summary = json!({
        "scene": kind.to_string(),
        "spacing": spacing,
        "noise": args.noise,
        "seed": args.seed,
        "tol": tol,
        "point_count": scene.cloud.len(),
        "plane_count": run.result.planes.len(),
        "segment_count": run.result.segments.len(),
        "timing": run.result.timing,
        "edges_total": report.edges_total,
        "edges_recovered": report.edges_recovered,
        "recall": report.recall,
        "mean_endpoint_error": report.mean_endpoint_error,
        "spurious_ratio": report.spurious_ratio,
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn eval(args: &EvalArgs) -> Result<()> {
    let result = load_result(&args.result)?;
    let truth = load_truth(&args.truth)?;
    let report = evaluate(&result.line_segments(), &truth.edges, &EvalParams::with_tol(args.tol));
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match &cli.command {
        Command::Detect(a) => detect(a),
        Command::Bench(a) => bench(a),
        Command::Eval(a) => eval(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 1 } else { 2 })
        }
    }
}
