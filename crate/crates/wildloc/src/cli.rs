//! The `wildloc` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{MatcherKind, Settings};
use crate::error::{Error, Result};
use crate::evalkit::{compute_errors, emit_report, summarize};
use crate::features::{MatchImage, Matcher};
use crate::geo::{GeoPoint, GeoRect, ImageDims};
use crate::homography::ransac_homography;
use crate::localizer::{read_metadata, Localizer, PhotoMeta};
use crate::mapstore::{load_catalog, slice_mosaic};
use crate::raster::{load_gray, load_image, rotate_expand};
use crate::synth::{emit_dataset, generate_world, random_view_specs, SynthWorld, ViewSampling};

#[derive(Debug, Parser)]
#[command(
    name = "wildloc",
    version,
    about = "Locate drone photos on a georeferenced map"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Slice a georeferenced mosaic into a tile catalog.
    BuildMap(BuildMapArgs),
    /// Localize one photo and print a single result line.
    Localize(LocalizeArgs),
    /// Localize a batch of photos and write a report against ground truth.
    Evaluate(EvaluateArgs),
    /// Generate a synthetic world, views with ground truth, and a catalog.
    Synth(SynthArgs),
    /// Match two images and print match count, inliers and homography.
    Match(MatchArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MatcherArg {
    Builtin,
    External,
}

/// Options shared by every subcommand that runs the pipeline.
#[derive(Debug, Args)]
struct PipelineArgs {
    /// Config file of `key = value` lines (default: $WILDLOC_CONFIG).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Degrees added to the recorded yaw before rotating photos.
    #[arg(long, allow_hyphen_values = true)]
    yaw_correction: Option<f64>,
    #[arg(long)]
    min_inliers: Option<usize>,
    /// RANSAC inlier threshold in pixels.
    #[arg(long)]
    ransac_threshold: Option<f64>,
    #[arg(long, value_enum)]
    matcher: Option<MatcherArg>,
    /// External matcher command line, whitespace separated.
    #[arg(long, allow_hyphen_values = true)]
    matcher_cmd: Option<String>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    jobs: Option<usize>,
    /// RANSAC seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl PipelineArgs {
    fn settings(&self) -> Result<Settings> {
        let mut s = Settings::load(self.config.as_deref())?;
        if let Some(v) = self.yaw_correction {
            s.yaw_correction = v;
        }
        if let Some(v) = self.min_inliers {
            s.min_inliers = v;
        }
        if let Some(v) = self.ransac_threshold {
            s.ransac_threshold = v;
        }
        if let Some(v) = self.matcher {
            s.matcher = match v {
                MatcherArg::Builtin => MatcherKind::Builtin,
                MatcherArg::External => MatcherKind::External,
            };
        }
        if let Some(v) = &self.matcher_cmd {
            s.matcher_cmd = v.clone();
        }
        if let Some(v) = self.jobs {
            s.jobs = v;
        }
        if let Some(v) = self.seed {
            s.seed = v;
        }
        Ok(s)
    }
}

#[derive(Debug, Args)]
struct BuildMapArgs {
    /// Mosaic image (PNG or JPEG).
    #[arg(long)]
    mosaic: PathBuf,
    /// Mosaic corners as `top_lat,top_lon,bottom_lat,bottom_lon`.
    #[arg(long, allow_hyphen_values = true)]
    rect: String,
    /// Tile size as `N` or `WxH` pixels.
    #[arg(long, default_value = "1024")]
    tile_size: String,
    /// Fraction of a tile shared with its neighbor.
    #[arg(long, default_value_t = 0.25)]
    overlap: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct LocalizeArgs {
    #[arg(long)]
    photo: PathBuf,
    /// Tile catalog CSV.
    #[arg(long)]
    map: PathBuf,
    /// Metadata CSV holding a row for the photo's file name.
    #[arg(long, conflicts_with_all = ["gimbal_yaw", "drone_yaw"])]
    meta: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    gimbal_yaw: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    drone_yaw: f64,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Directory holding the photos named in the metadata CSV.
    #[arg(long)]
    photos: PathBuf,
    #[arg(long)]
    meta: PathBuf,
    #[arg(long)]
    map: PathBuf,
    /// Report directory.
    #[arg(long)]
    out: PathBuf,
    /// Success threshold in meters.
    #[arg(long)]
    threshold_m: Option<f64>,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 50)]
    views: usize,
    /// World edge length in pixels.
    #[arg(long, default_value_t = crate::synth::DEFAULT_WORLD_SIZE)]
    world_size: u32,
    #[arg(long, default_value_t = 1024)]
    tile_size: u32,
    #[arg(long, default_value_t = 0.25)]
    overlap: f64,
    /// Largest absolute view yaw in degrees.
    #[arg(long, default_value_t = 30.0)]
    max_yaw: f64,
    /// Gaussian pixel noise sigma in gray levels.
    #[arg(long, default_value_t = 4.0)]
    noise: f64,
}

#[derive(Debug, Args)]
struct MatchArgs {
    #[arg(long)]
    photo: PathBuf,
    #[arg(long)]
    tile: PathBuf,
    /// Clockwise rotation applied to the photo before matching.
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    yaw: f64,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

fn parse_rect(s: &str) -> Result<GeoRect> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Config(format!("--rect expects four numbers, got {s:?}")))?;
    let [tl_lat, tl_lon, br_lat, br_lon] = v[..] else {
        return Err(Error::Config(format!("--rect expects four numbers, got {s:?}")));
    };
    GeoRect::new(
        GeoPoint {
            lat: tl_lat,
            lon: tl_lon,
        },
        GeoPoint {
            lat: br_lat,
            lon: br_lon,
        },
    )
}

fn parse_tile_size(s: &str) -> Result<ImageDims> {
    let bad = || Error::Config(format!("--tile-size expects N or WxH, got {s:?}"));
    let (w, h) = match s.split_once(['x', 'X']) {
        Some((w, h)) => (
            w.trim().parse().map_err(|_| bad())?,
            h.trim().parse().map_err(|_| bad())?,
        ),
        None => {
            let n = s.trim().parse().map_err(|_| bad())?;
            (n, n)
        }
    };
    ImageDims::new(w, h).map_err(|_| bad())
}

fn build_map(args: &BuildMapArgs, out: &mut dyn Write) -> Result<()> {
    let rect = parse_rect(&args.rect)?;
    let tile = parse_tile_size(&args.tile_size)?;
    let mosaic = load_image(&args.mosaic)?;
    let catalog = slice_mosaic(&mosaic, &rect, tile, args.overlap, &args.out)?;
    writeln!(out, "{} tiles written to {}", catalog.len(), args.out.display()).ok();
    Ok(())
}

fn localize(args: &LocalizeArgs, out: &mut dyn Write) -> Result<()> {
    // the photo is checked before anything else is touched
    let photo = load_gray(&args.photo)?;
    let settings = args.pipeline.settings()?;
    let cfg = settings.localizer_config()?;
    let name = args
        .photo
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let meta = match &args.meta {
        Some(csv) => read_metadata(csv)?
            .into_iter()
            .find(|m| m.filename == name)
            .ok_or_else(|| Error::Format(format!("{}: no row for {name}", csv.display())))?,
        None => PhotoMeta {
            gimbal_yaw_deg: args.gimbal_yaw,
            drone_yaw_deg: args.drone_yaw,
            ..PhotoMeta::new(name)
        },
    };
    let catalog = load_catalog(&args.map)?;
    let r = Localizer::new(catalog, cfg)?.localize(&photo, &meta)?;
    let dash = |v: Option<String>| v.unwrap_or_else(|| "-".into());
    let (lat, lon) = match r.position {
        Some(p) => (Some(format!("{:.9}", p.lat)), Some(format!("{:.9}", p.lon))),
        None => (None, None),
    };
    writeln!(
        out,
        "{} {} {} {} {} {}",
        r.status,
        dash(lat),
        dash(lon),
        dash(r.best_tile_id.map(|t| t.to_string())),
        r.raw_match_count,
        if r.is_localized() || r.inlier_count > 0 {
            r.inlier_count.to_string()
        } else {
            "-".into()
        },
    )
    .ok();
    Ok(())
}

fn evaluate(args: &EvaluateArgs, out: &mut dyn Write) -> Result<()> {
    let settings = args.pipeline.settings()?;
    let cfg = settings.localizer_config()?;
    let threshold = args.threshold_m.unwrap_or(settings.threshold_m);
    if threshold.is_nan() || threshold <= 0.0 {
        return Err(Error::Config(format!(
            "threshold must be positive, got {threshold}"
        )));
    }
    let rows = read_metadata(&args.meta)?;
    let catalog = load_catalog(&args.map)?;
    let results = if rows.is_empty() {
        Vec::new()
    } else {
        Localizer::new(catalog, cfg)?.localize_rows(&args.photos, &rows)
    };
    let summary = summarize(&compute_errors(&results, &rows)?, threshold);
    emit_report(&results, &rows, &summary, &args.out)?;
    let mae = summary.mae_m.map_or("-".into(), |m| format!("{m:.3}"));
    writeln!(
        out,
        "{}/{} localized, {} within {} m, mae {mae} m",
        summary.n_localized, summary.n_total, summary.n_success, threshold
    )
    .ok();
    Ok(())
}

fn synth(args: &SynthArgs, out: &mut dyn Write) -> Result<()> {
    let dims = ImageDims::new(args.world_size, args.world_size)?;
    let rect = SynthWorld::default_rect(dims, crate::synth::DEFAULT_GSD_M)?;
    let world = generate_world(args.seed, dims, &rect, crate::synth::DEFAULT_GSD_M)?;
    let sampling = ViewSampling {
        count: args.views,
        max_abs_yaw_deg: args.max_yaw,
        noise_sigma: args.noise,
        ..ViewSampling::default()
    };
    let specs = random_view_specs(&world, &sampling, args.seed.wrapping_add(1))?;
    let tile = ImageDims::new(args.tile_size, args.tile_size)?;
    let data = emit_dataset(&world, &specs, &args.out, tile, args.overlap)?;
    writeln!(
        out,
        "{} views and {} tiles written to {}",
        data.photos.len(),
        data.catalog.len(),
        args.out.display()
    )
    .ok();
    Ok(())
}

fn match_pair(args: &MatchArgs, out: &mut dyn Write) -> Result<()> {
    let photo = load_gray(&args.photo)?;
    let tile = load_gray(&args.tile)?;
    let settings = args.pipeline.settings()?;
    let matcher = Matcher::new(&settings.matcher_config()?)?;
    let (rotated, mask) = rotate_expand(&photo, args.yaw);
    let a = if args.yaw == 0.0 {
        MatchImage::new(&rotated).with_mask(&mask).with_path(&args.photo)
    } else {
        MatchImage::new(&rotated).with_mask(&mask)
    };
    let b = MatchImage::new(&tile).with_path(&args.tile);
    let pairs = matcher.match_images(&a, &b)?;
    writeln!(out, "matches {}", pairs.len()).ok();
    match ransac_homography(&pairs, &settings.ransac_config()) {
        Ok((h, report)) => {
            writeln!(out, "inliers {}", report.inlier_indices.len()).ok();
            writeln!(out, "rms {:.4}", report.reprojection_rms).ok();
            let m = h.matrix();
            for r in 0..3 {
                writeln!(out, "h {:.9} {:.9} {:.9}", m[(r, 0)], m[(r, 1)], m[(r, 2)]).ok();
            }
        }
        Err(e) => {
            writeln!(out, "inliers 0").ok();
            writeln!(out, "no homography: {}", e.detail()).ok();
        }
    }
    Ok(())
}

fn run(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::BuildMap(a) => build_map(a, out),
        Command::Localize(a) => localize(a, out),
        Command::Evaluate(a) => evaluate(a, out),
        Command::Synth(a) => synth(a, out),
        Command::Match(a) => match_pair(a, out),
    }
}

/// Parses `argv` (program name first), runs one subcommand and returns the
/// process exit status: 0 on success, 1 on errors, 2 on usage errors.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match run(&cli, &mut lock) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", error_line(&e));
            1
        }
    }
}

/// The single diagnostic line for a failed command.
pub fn error_line(e: &Error) -> String {
    format!("error: {}: {}", e.kind(), e.detail())
}
