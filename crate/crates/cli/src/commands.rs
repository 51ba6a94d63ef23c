//! Subcommand arguments and implementations.
//!
//! Every plane file passed on the command line describes the reference
//! plane in the frame of the accompanying depth or gamma map (the target
//! camera). Commands that need the plane in the source camera, for the
//! homography, derive it from the motion.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use parallax_core::io::png16::DEPTH_SCALE;
use parallax_core::io::pose::format_pose_line;
use parallax_core::io::{
    read_flo, read_intrinsics, read_plane, read_scene_file, write_flo, write_intrinsics,
    write_plane, write_poses_kitti, write_raster, RasterPrecision,
};
use parallax_core::synthetic::Hit;
use parallax_core::tolerance;
use parallax_core::{
    backproject_depth, depth_metrics, epipole, estimate_normals, gamma_map_from_flow,
    gamma_to_depth, geometric_residual_flow, ground_plane, height_mask, homography_from_motion,
    icp_point_to_plane_with, mean_plane, perturb_flow, planar_warp_field, ppe_map,
    ransac_plane_fit, render, residual_flow_closed_form, residual_flow_from_frame, source_pose,
    total_loss, Error, PlaneModel, Result, RigidMotion, ScalarGrid, ToolConfig,
};

use crate::inputs::{read_cloud, read_grid, read_motion, write_grid};
use crate::report::Report;

/// Settings shared by all commands.
pub struct Context {
    pub config: ToolConfig,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Precision {
    #[default]
    F32,
    F64,
}

impl From<Precision> for RasterPrecision {
    fn from(p: Precision) -> Self {
        match p {
            Precision::F32 => RasterPrecision::F32,
            Precision::F64 => RasterPrecision::F64,
        }
    }
}

/// Which pose of a pose file to use as the source-to-target motion.
#[derive(Debug, Clone, Args)]
pub struct PoseSelect {
    /// Zero-based line of the pose file holding the motion.
    #[arg(long, default_value_t = 0, conflicts_with = "pair")]
    pub pose_line: usize,
    /// Use the relative motion between two camera-to-world poses of a
    /// sequence file instead (source index, target index).
    #[arg(long, num_args = 2, value_names = ["SRC", "TGT"])]
    pub pair: Option<Vec<usize>>,
}

impl PoseSelect {
    fn read(&self, path: &Path) -> Result<RigidMotion> {
        read_motion(path, self.pose_line, self.pair.as_deref())
    }
}

fn source_plane(plane: &PlaneModel, motion: &RigidMotion) -> Result<PlaneModel> {
    plane.transformed(&motion.inverse())
}

fn branch(motion: &RigidMotion) -> &'static str {
    if motion.translation().z.abs() <= tolerance::LATERAL_TZ {
        "lateral"
    } else {
        "forward"
    }
}

fn report_motion(report: &mut Report, key: &str, motion: &RigidMotion) {
    report.text(key, format_pose_line(motion));
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// Scene description (TOML, schema "parallax-scene/1").
    #[arg(long)]
    pub scene: PathBuf,
    /// Output directory; created if missing.
    #[arg(long)]
    pub out: PathBuf,
    /// Standard deviation of Gaussian noise added to the flow (pixels).
    #[arg(long, default_value_t = 0.0)]
    pub noise_sigma: f64,
}

/// Renders the target view and writes the oracle rasters:
/// `depth.ras`, `depth.png`, `height.ras`, `gamma.ras`, `ppe.ras`,
/// `labels.ras`, `flow.flo`, `motion.txt`, `intrinsics.toml` and
/// `plane.toml`. Rasters are written at 64-bit precision.
pub fn synth(args: &SynthArgs, ctx: &Context) -> Result<Report> {
    let file = read_scene_file(&args.scene)?;
    let intrinsics = file.intrinsics()?;
    let scene = file.scene()?;
    let pose = file.target_pose();
    let motion = file.motion()?;
    let (width, height) = (file.camera.width, file.camera.height);

    let frame = render(&scene, &intrinsics, &pose, width, height)?;
    let plane = ground_plane(&pose)?;
    let plane_source = ground_plane(&source_pose(&pose, &motion))?;
    let clean = residual_flow_from_frame(&frame, &intrinsics, &motion, &plane_source)?;

    let mut deviation = 0.0f64;
    let mut poles = 0usize;
    for (p, u_res) in clean.iter_valid() {
        let gamma = frame
            .gamma
            .get(p.u as usize, p.v as usize)
            .expect("flow implies depth");
        match residual_flow_closed_form(
            gamma,
            p,
            &intrinsics,
            motion.translation(),
            plane_source.camera_height(),
        ) {
            Ok(expected) => deviation = deviation.max((u_res - expected).norm()),
            Err(_) => poles += 1,
        }
    }
    let seed = ctx.seed.unwrap_or(0);
    let flow = perturb_flow(&clean, args.noise_sigma, seed)?;

    std::fs::create_dir_all(&args.out).map_err(|source| Error::Io {
        path: args.out.clone(),
        source,
    })?;
    let out = |name: &str| args.out.join(name);
    let exact = RasterPrecision::F64;
    write_raster(out("depth.ras"), &frame.depth, exact)?;
    write_raster(out("height.ras"), &frame.height, exact)?;
    write_raster(out("gamma.ras"), &frame.gamma, exact)?;
    write_raster(
        out("ppe.ras"),
        &ppe_map(&intrinsics, &plane, width, height)?,
        exact,
    )?;
    let labels = ScalarGrid::from_fn(width, height, |u, v| match frame.hit(u, v) {
        Hit::Sky => None,
        Hit::Ground => Some(0.0),
        Hit::Object(i) => Some(i as f64 + 1.0),
    });
    write_raster(out("labels.ras"), &labels, RasterPrecision::F32)?;
    write_flo(out("flow.flo"), &flow)?;
    write_poses_kitti(out("motion.txt"), &[motion])?;
    write_intrinsics(out("intrinsics.toml"), &intrinsics)?;
    write_plane(out("plane.toml"), &plane)?;

    // Depths beyond the 16-bit range are dropped from the PNG only.
    let max_png = u16::MAX as f64 / DEPTH_SCALE;
    let png_depth = ScalarGrid::from_fn(width, height, |u, v| {
        frame
            .depth
            .get(u, v)
            .filter(|&z| z * DEPTH_SCALE >= 0.5 && z <= max_png)
    });
    parallax_core::io::write_depth_png16(out("depth.png"), &png_depth)?;

    let count = |want: fn(Hit) -> bool| frame.hits.iter().filter(|&&h| want(h)).count();
    let mut report = Report::new("synth");
    report.count("width", width);
    report.count("height", height);
    report.text("branch", branch(&motion));
    report.float("t_z", motion.translation().z);
    report.float("camera_height", plane.camera_height());
    report.float("source_camera_height", plane_source.camera_height());
    report.count("ground_pixels", count(|h| h == Hit::Ground));
    report.count("object_pixels", count(|h| matches!(h, Hit::Object(_))));
    report.count("sky_pixels", count(|h| h == Hit::Sky));
    report.count("flow_valid", flow.valid_count());
    report.count("flow_poles", poles);
    report.float("closed_form_max_deviation", deviation);
    report.float("noise_sigma", args.noise_sigma);
    report.count("seed", seed as usize);
    report.count(
        "depth_png_dropped",
        frame.depth.valid_count() - png_depth.valid_count(),
    );
    report.text("out", args.out.display().to_string());
    Ok(report)
}

#[derive(Debug, Clone, Args)]
pub struct WarpArgs {
    /// Target-frame depth (16-bit PNG or raster).
    #[arg(long)]
    pub image_depth: PathBuf,
    /// Pose file holding the source-to-target motion.
    #[arg(long)]
    pub pose: PathBuf,
    #[command(flatten)]
    pub select: PoseSelect,
    /// Reference plane in the target frame.
    #[arg(long)]
    pub plane: PathBuf,
    #[arg(long)]
    pub intrinsics: PathBuf,
    /// Write the geometric residual flow here (.flo).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the planar warp field `warp(H, p) - p` here (.flo).
    #[arg(long)]
    pub warp_field: Option<PathBuf>,
    /// Points within this distance of the plane count as ground (meters).
    #[arg(long, default_value_t = 1e-6)]
    pub ground_tol: f64,
}

/// Warps with the plane homography and reports how well the plane aligns
/// and how the off-plane residual compares with the closed form.
pub fn warp(args: &WarpArgs, _ctx: &Context) -> Result<Report> {
    let depth = read_grid(&args.image_depth)?;
    let motion = args.select.read(&args.pose)?;
    let plane = read_plane(&args.plane)?;
    let intrinsics = read_intrinsics(&args.intrinsics)?;
    if !(args.ground_tol >= 0.0) {
        return Err(Error::InvalidParameter(
            "--ground-tol must be non-negative".into(),
        ));
    }
    let plane_source = source_plane(&plane, &motion)?;
    let flow = geometric_residual_flow(&depth, &intrinsics, &motion, &plane_source)?;

    let mut ground = (0usize, 0.0f64, 0.0f64);
    let (mut objects, mut below, mut poles) = (0usize, 0usize, 0usize);
    let (mut object_sum, mut object_min, mut object_dev) = (0.0f64, f64::INFINITY, 0.0f64);
    for (p, u_res) in flow.iter_valid() {
        let z = depth
            .get(p.u as usize, p.v as usize)
            .expect("flow implies depth");
        let h = plane.height_of(&(intrinsics.unproject(p) * z));
        if h.abs() <= args.ground_tol {
            ground.0 += 1;
            ground.1 += u_res.norm_squared();
            ground.2 = ground.2.max(u_res.norm());
            continue;
        }
        if h < 0.0 {
            below += 1;
            continue;
        }
        objects += 1;
        object_sum += u_res.norm();
        object_min = object_min.min(u_res.norm());
        match residual_flow_closed_form(
            h / z,
            p,
            &intrinsics,
            motion.translation(),
            plane_source.camera_height(),
        ) {
            Ok(expected) => object_dev = object_dev.max((u_res - expected).norm()),
            Err(_) => poles += 1,
        }
    }
    if let Some(path) = &args.out {
        write_flo(path, &flow)?;
    }
    if let Some(path) = &args.warp_field {
        let h = homography_from_motion(&intrinsics, &motion, &plane_source)?;
        write_flo(path, &planar_warp_field(&h, depth.width(), depth.height()))?;
    }

    let mut report = Report::new("warp");
    report.text("branch", branch(&motion));
    report.float("t_z", motion.translation().z);
    report.count("flow_valid", flow.valid_count());
    report.count("ground_pixels", ground.0);
    report.float("ground_rms", rms(ground.1, ground.0));
    report.float("ground_max", ground.2);
    report.count("object_pixels", objects);
    report.float("object_mean_residual", mean(object_sum, objects));
    report.float(
        "object_min_residual",
        if objects == 0 { 0.0 } else { object_min },
    );
    report.float("object_closed_form_max_deviation", object_dev);
    report.count("object_poles", poles);
    report.count("below_plane_pixels", below);
    Ok(report)
}

fn rms(sum_sq: f64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        (sum_sq / n as f64).sqrt()
    }
}

fn mean(sum: f64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

#[derive(Debug, Clone, Args)]
pub struct FitPlaneArgs {
    #[arg(long)]
    pub depth: PathBuf,
    #[arg(long)]
    pub intrinsics: PathBuf,
    /// Write the fitted plane here (TOML).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn fit_plane(args: &FitPlaneArgs, ctx: &Context) -> Result<Report> {
    let depth = read_grid(&args.depth)?;
    let intrinsics = read_intrinsics(&args.intrinsics)?;
    let cloud = backproject_depth(&depth, &intrinsics)?;
    let mut cfg = ctx.config.ransac;
    if let Some(seed) = ctx.seed {
        cfg.rng_seed = seed;
    }
    let fit = ransac_plane_fit(&cloud, &cfg)?;
    if let Some(path) = &args.out {
        write_plane(path, &fit.plane)?;
    }
    let mut report = Report::new("fit-plane");
    report.floats("normal", fit.plane.normal().as_slice());
    report.float("camera_height", fit.plane.camera_height());
    report.count("points", cloud.len());
    report.count("inliers", fit.inlier_count());
    report.float("inlier_fraction", fit.inlier_fraction());
    report.count("hypothesis_index", fit.hypothesis_index);
    report.count("seed", cfg.rng_seed as usize);
    Ok(report)
}

#[derive(Debug, Clone, Args)]
pub struct MeanPlaneArgs {
    /// Glob pattern matching plane files, e.g. "planes/*.toml".
    #[arg(long)]
    pub planes: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn mean_plane_cmd(args: &MeanPlaneArgs, _ctx: &Context) -> Result<Report> {
    let paths = glob::glob(&args.planes)
        .map_err(|e| Error::InvalidParameter(format!("bad glob '{}': {e}", args.planes)))?;
    let mut planes = Vec::new();
    for entry in paths {
        let path = entry.map_err(|e| Error::Io {
            path: e.path().to_path_buf(),
            source: e.into(),
        })?;
        planes.push(read_plane(&path)?);
    }
    if planes.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "no plane files match '{}'",
            args.planes
        )));
    }
    let mean = mean_plane(&planes)?;
    if let Some(path) = &args.out {
        write_plane(path, &mean)?;
    }
    let spread = planes
        .iter()
        .map(|p| p.normal().angle(&mean.normal()).to_degrees())
        .fold(0.0f64, f64::max);
    let mut report = Report::new("mean-plane");
    report.count("planes", planes.len());
    report.floats("normal", mean.normal().as_slice());
    report.float("camera_height", mean.camera_height());
    report.float("max_normal_deviation_deg", spread);
    Ok(report)
}

#[derive(Debug, Clone, Args)]
pub struct IcpArgs {
    /// Source cloud: depth map (.png or raster) or text (.xyz/.txt).
    #[arg(long)]
    pub src: PathBuf,
    /// Target cloud; text clouds may carry normals as columns 4-6.
    #[arg(long)]
    pub tgt: PathBuf,
    /// Pose file with the initial source-to-target motion.
    #[arg(long)]
    pub init: PathBuf,
    #[command(flatten)]
    pub select: PoseSelect,
    /// Needed when either cloud is a depth map.
    #[arg(long)]
    pub intrinsics: Option<PathBuf>,
    /// Neighbourhood radius for target normal estimation (meters).
    #[arg(long, default_value_t = 0.5)]
    pub normal_radius: f64,
    /// Write the refined motion here (pose text).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn icp_refine(args: &IcpArgs, ctx: &Context) -> Result<Report> {
    let intrinsics = args
        .intrinsics
        .as_deref()
        .map(read_intrinsics)
        .transpose()?;
    let source = read_cloud(&args.src, intrinsics.as_ref())?;
    let mut target = read_cloud(&args.tgt, intrinsics.as_ref())?;
    if target.normals().is_none() {
        target = estimate_normals(&target, args.normal_radius)?;
    }
    let init = args.select.read(&args.init)?;
    let result = icp_point_to_plane_with(&source, &target, &init, &ctx.config.icp)?;
    if let Some(path) = &args.out {
        write_poses_kitti(path, &[result.motion])?;
    }
    let change = init.inverse().then(&result.motion);
    let mut report = Report::new("icp-refine");
    report_motion(&mut report, "motion", &result.motion);
    report.count("source_points", source.len());
    report.count("target_points", target.len());
    report.count("iterations", result.iterations);
    report.flag("converged", result.converged);
    report.float("initial_residual", result.residual_trace[0]);
    report.float("final_residual", result.final_residual());
    report.floats("residual_trace", &result.residual_trace);
    report.float("rotation_change_deg", change.angle().to_degrees());
    report.float("translation_change", change.translation().norm());
    Ok(report)
}

#[derive(Debug, Clone, Args)]
pub struct FlowToGammaArgs {
    /// Residual flow (.flo).
    #[arg(long)]
    pub flow: PathBuf,
    /// Pose file holding the source-to-target motion.
    #[arg(long)]
    pub motion: PathBuf,
    #[command(flatten)]
    pub select: PoseSelect,
    /// Reference plane in the target frame.
    #[arg(long)]
    pub plane: PathBuf,
    #[arg(long)]
    pub intrinsics: PathBuf,
    /// Output gamma raster.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Precision::F32)]
    pub precision: Precision,
}

/// Dense gamma recovery. Purely lateral motion has no epipole and no
/// inversion; the command then fails with category `lateral-motion` and
/// writes nothing.
pub fn flow_to_gamma(args: &FlowToGammaArgs, ctx: &Context) -> Result<Report> {
    let flow = read_flo(&args.flow)?;
    let motion = args.select.read(&args.motion)?;
    let plane = read_plane(&args.plane)?;
    let intrinsics = read_intrinsics(&args.intrinsics)?;
    let plane_source = source_plane(&plane, &motion)?;
    let t_z = motion.translation().z;
    let e_t = epipole(&intrinsics, motion.translation())?;
    let policy = &ctx.config.epipole_policy;
    let recovery = gamma_map_from_flow(&flow, e_t, t_z, plane_source.camera_height(), policy)?;
    write_raster(&args.out, &recovery.gamma, args.precision.into())?;

    let mut report = Report::new("flow2gamma");
    report.text("branch", "forward");
    report.float("t_z", t_z);
    report.floats("epipole", &[e_t.u, e_t.v]);
    report.float("source_camera_height", plane_source.camera_height());
    report.count("considered", recovery.considered);
    report.count("recovered", recovery.gamma.valid_count());
    report.count("near_epipole", recovery.near_epipole);
    report.count("extreme_factor", recovery.extreme_factor);
    report.count("degenerate", recovery.degenerate);
    report.float("masked_fraction", recovery.masked_fraction());
    Ok(report)
}

#[derive(Debug, Clone, Args)]
pub struct GammaToDepthArgs {
    #[arg(long)]
    pub gamma: PathBuf,
    /// Reference plane in the gamma map's frame.
    #[arg(long)]
    pub plane: PathBuf,
    #[arg(long)]
    pub intrinsics: PathBuf,
    /// Output depth: 16-bit PNG if the name ends in .png, raster otherwise.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Precision::F32)]
    pub precision: Precision,
}

pub fn gamma_to_depth_cmd(args: &GammaToDepthArgs, _ctx: &Context) -> Result<Report> {
    let gamma = read_grid(&args.gamma)?;
    let plane = read_plane(&args.plane)?;
    let intrinsics = read_intrinsics(&args.intrinsics)?;
    let ppe = ppe_map(&intrinsics, &plane, gamma.width(), gamma.height())?;
    let mut horizon = 0usize;
    let depth = ScalarGrid::from_fn(gamma.width(), gamma.height(), |u, v| {
        let g = gamma.get(u, v)?;
        let e = ppe.get(u, v).expect("embedding is dense");
        match gamma_to_depth(g, e, plane.camera_height()) {
            Ok(z) => Some(z),
            Err(_) => {
                horizon += 1;
                None
            }
        }
    });
    write_grid(&args.out, &depth, args.precision.into())?;
    let (lo, hi) = depth
        .iter_valid()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), (_, _, z)| {
            (lo.min(z), hi.max(z))
        });
    let mut report = Report::new("gamma2depth");
    report.count("gamma_valid", gamma.valid_count());
    report.count("depth_valid", depth.valid_count());
    report.count("horizon_pixels", horizon);
    report.float("min_depth", if depth.valid_count() == 0 { 0.0 } else { lo });
    report.float("max_depth", hi);
    Ok(report)
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Predicted depth (16-bit PNG or raster).
    #[arg(long)]
    pub pred: PathBuf,
    /// Ground-truth depth (16-bit PNG or raster).
    #[arg(long)]
    pub gt: PathBuf,
    /// Height raster; restricts evaluation to low points.
    #[arg(long)]
    pub height_mask: Option<PathBuf>,
    /// Height threshold for --height-mask (meters).
    #[arg(long, default_value_t = 1.0, requires = "height_mask")]
    pub max_height: f64,
}

pub fn eval(args: &EvalArgs, ctx: &Context) -> Result<Report> {
    let pred = read_grid(&args.pred)?;
    let gt = read_grid(&args.gt)?;
    let (pred, mut mask) = ctx.config.eval.prepare(&pred, &gt)?;
    if let Some(path) = &args.height_mask {
        mask = mask.and(&height_mask(&read_grid(path)?, args.max_height))?;
    }
    let missing = (0..pred.len())
        .filter(|&i| mask.bits()[i] && !pred.valid()[i])
        .count();
    let metrics = depth_metrics(&pred, &gt, &mask)?;
    let mut report = Report::new("eval");
    for (key, value) in metrics.fields() {
        report.float(key, value);
    }
    report.count("pixel_count", metrics.pixel_count);
    report.count("pred_missing", missing);
    report.float("min_depth", ctx.config.eval.min_depth);
    report.float("max_depth", ctx.config.eval.max_depth);
    report.flag("garg_crop", ctx.config.eval.garg_crop);
    Ok(report)
}

#[derive(Debug, Clone, Args)]
pub struct LossArgs {
    #[arg(long)]
    pub pred_gamma: PathBuf,
    #[arg(long)]
    pub gt_gamma: PathBuf,
    /// Reference plane in the gamma maps' frame.
    #[arg(long)]
    pub plane: PathBuf,
    #[arg(long)]
    pub intrinsics: PathBuf,
}

pub fn loss(args: &LossArgs, ctx: &Context) -> Result<Report> {
    let pred = read_grid(&args.pred_gamma)?;
    let gt = read_grid(&args.gt_gamma)?;
    let plane = read_plane(&args.plane)?;
    let intrinsics = read_intrinsics(&args.intrinsics)?;
    let ppe = ppe_map(&intrinsics, &plane, pred.width(), pred.height())?;
    let weights = &ctx.config.loss_weights;
    let losses = total_loss(&pred, &gt, &ppe, plane.camera_height(), weights)?;
    let mut report = Report::new("loss");
    report.float("gamma_loss", losses.gamma);
    match losses.depth {
        Some(d) => report.float("depth_loss", d),
        None => report.text("depth_loss", "skipped"),
    }
    report.float("total", losses.total);
    report.count("depth_pixels", losses.depth_pixels);
    report.float("w_gamma", weights.w_gamma());
    report.float("w_depth", weights.w_depth());
    report.float("lambda", weights.lambda());
    report.float("alpha", weights.alpha());
    Ok(report)
}
