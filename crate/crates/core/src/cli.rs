//! The `msbench` command line.
//!
//! Exit codes: 0 on success, 1 for usage errors (bad flags, bad config
//! values, missing inputs), 2 for data errors (malformed or inconsistent
//! files).

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{resolve, ConfigFile};
use crate::dataset::{
    self, filter_subset, flip_augment, height_histogram, parse_canonical, parse_visible_pairs,
    scale_manifest, seg_to_boxes, skip_sample, write_canonical, DatasetManifest, ImageRecord,
    SegmentationMask, Spectra, SubsetSpec, DEFAULT_RATIO_HIGH, DEFAULT_RATIO_LOW,
};
use crate::eval::{
    self, parse_detections, sample_miss_rates, sweep_curve, write_detections, DetectionSet,
    FppiSampling, GeneralizationMatrix, MatrixCell, DEFAULT_MATCH_IOU,
};
use crate::geometry::{self, DEFAULT_NMS_IOU};
use crate::imageproc::{
    self, average_reference, compute_histogram, histogram_match, parse_histogram, read_pnm,
    replicate_plane, upscale2x, write_histogram, write_pgm, write_ppm, GrayImage, IntensityHistogram, Pnm,
};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) => m,
        }
    }
}

fn usage(message: impl Into<String>) -> CliError {
    CliError::Usage(message.into())
}

macro_rules! data_error_from {
    ($($ty:ty),*) => {$(
        impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::Data(e.to_string())
            }
        }
    )*};
}

data_error_from!(
    crate::textfmt::FormatError,
    dataset::DatasetError,
    eval::EvalError,
    imageproc::ImageError,
    geometry::GeometryError,
    serde_json::Error
);

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "msbench", version, about = "Multispectral person detection benchmark toolkit")]
pub struct Cli {
    /// key=value configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for all written artifacts
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Worker threads; results do not depend on this
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Convert annotations to the canonical ground-truth format
    Convert(ConvertArgs),
    /// Evaluate a detection file against ground truth
    Evaluate(EvaluateArgs),
    /// Build a train x test generalization matrix from a grid config
    Matrix,
    /// Match IR images to an averaged reference histogram
    Histmatch(HistmatchArgs),
    /// Person height histogram for All and Reasonable subsets
    Stats(StatsArgs),
    /// Non-maximum suppression over a detection file
    Nms(NmsArgs),
    /// Apply skip sampling, scaling, subset rules and flipping to ground truth
    Filter(FilterArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SourceKind {
    Canonical,
    SegMasks,
    VisibleBoxPairs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SubsetKind {
    Reasonable,
    All,
    Custom,
}

impl FromStr for SubsetKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        <SubsetKind as ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Args)]
struct ConvertArgs {
    #[arg(long, value_enum)]
    kind: SourceKind,
    /// Annotation file, or a directory of masks for `seg-masks`
    #[arg(long)]
    input: PathBuf,
    /// Output stem; defaults to the input's name
    #[arg(long)]
    name: Option<String>,
    /// Mask value that marks person pixels
    #[arg(long)]
    person_label: Option<u8>,
    #[arg(long, default_value_t = DEFAULT_RATIO_LOW)]
    ratio_low: f64,
    #[arg(long, default_value_t = DEFAULT_RATIO_HIGH)]
    ratio_high: f64,
    /// Spectra recorded for mask-derived images (V, I or VI)
    #[arg(long, default_value = "VI")]
    spectra: String,
}

#[derive(Debug, Args, Default)]
struct SubsetArgs {
    #[arg(long, value_enum)]
    subset: Option<SubsetKind>,
    #[arg(long)]
    min_height: Option<f64>,
    #[arg(long)]
    max_occlusion: Option<f64>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Canonical ground-truth file
    #[arg(long)]
    gt: Option<PathBuf>,
    /// Detection file
    #[arg(long)]
    det: Option<PathBuf>,
    #[command(flatten)]
    subset: SubsetArgs,
    /// IoU needed for a match
    #[arg(long)]
    iou: Option<f64>,
    /// FPPI averaging range as lo:hi
    #[arg(long)]
    fppi_range: Option<String>,
    #[arg(long)]
    fppi_samples: Option<usize>,
}

#[derive(Debug, Args)]
struct HistmatchArgs {
    /// Directory of sample images, or a saved histogram file
    #[arg(long)]
    reference: PathBuf,
    /// Directory of images to match
    #[arg(long)]
    input: PathBuf,
    /// Write three-plane PPM output
    #[arg(long)]
    replicate: bool,
    /// Upscale inputs 2x before matching
    #[arg(long)]
    scale2x: bool,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[arg(long)]
    gt: PathBuf,
    #[arg(long, default_value_t = 10)]
    bin_width: u32,
}

#[derive(Debug, Args)]
struct NmsArgs {
    #[arg(long)]
    det: PathBuf,
    #[arg(long, default_value_t = DEFAULT_NMS_IOU)]
    iou: f64,
}

#[derive(Debug, Args)]
struct FilterArgs {
    #[arg(long)]
    gt: PathBuf,
    #[command(flatten)]
    subset: SubsetArgs,
    /// Keep frames whose index is a multiple of this stride
    #[arg(long)]
    skip: Option<u64>,
    /// Rescale images and boxes
    #[arg(long)]
    scale: Option<f64>,
    /// Append mirrored copies of every image
    #[arg(long)]
    flip: bool,
    /// Output stem
    #[arg(long)]
    name: Option<String>,
}

/// Flags merged with the optional config file.
struct Context {
    config: ConfigFile,
    output: PathBuf,
}

impl Context {
    fn setting<T: FromStr>(&self, flag: Option<T>, key: &str) -> CliResult<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.config.get(key) {
            None => Ok(None),
            Some(entry) => entry.value.parse().map(Some).map_err(|e| {
                usage(format!(
                    "{}:{}: invalid value `{}` for `{key}`: {e}",
                    entry.origin, entry.line, entry.value
                ))
            }),
        }
    }

    fn path_setting(&self, flag: Option<PathBuf>, key: &str) -> Option<PathBuf> {
        flag.or_else(|| self.config.path(key))
    }

    fn output_file(&self, name: &str) -> PathBuf {
        self.output.join(name)
    }
}

/// Validated inputs of an evaluation run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub ground_truth: PathBuf,
    pub detections: PathBuf,
    pub subset_name: String,
    pub subset: SubsetSpec,
    pub iou_threshold: f64,
    pub sampling: FppiSampling,
    pub output: PathBuf,
}

fn existing(path: Option<PathBuf>, what: &str) -> CliResult<PathBuf> {
    let path = path.ok_or_else(|| usage(format!("missing {what}")))?;
    if !path.exists() {
        return Err(usage(format!("{what} `{}` does not exist", path.display())));
    }
    Ok(path)
}

/// Command-line flags override the config file as a group: a preset given
/// as a flag ignores bounds that only the file sets.
fn resolve_subset(ctx: &Context, args: SubsetArgs) -> CliResult<(String, SubsetSpec)> {
    let flag_bounds = args.min_height.is_some() || args.max_occlusion.is_some();
    let min_height: Option<f64> = ctx.setting(args.min_height, "min_height")?;
    let max_occlusion: Option<f64> = ctx.setting(args.max_occlusion, "max_occlusion")?;
    let (kind, bounds_in_layer) = match args.subset {
        Some(kind) => (kind, flag_bounds),
        None if flag_bounds => (SubsetKind::Custom, true),
        None => {
            let file_bounds = min_height.is_some() || max_occlusion.is_some();
            let default = if file_bounds { SubsetKind::Custom } else { SubsetKind::Reasonable };
            (ctx.setting(None, "subset")?.unwrap_or(default), file_bounds)
        }
    };
    let spec = match kind {
        SubsetKind::Custom => {
            let base = SubsetSpec::REASONABLE;
            SubsetSpec::new(
                min_height.unwrap_or(base.min_height),
                max_occlusion.unwrap_or(base.max_occlusion),
            )
            .map_err(|e| usage(e.to_string()))?
        }
        preset if bounds_in_layer => {
            return Err(usage(format!(
                "min-height/max-occlusion need subset custom, not {preset:?}"
            )))
        }
        SubsetKind::Reasonable => SubsetSpec::REASONABLE,
        SubsetKind::All => SubsetSpec::ALL,
    };
    let name = format!("{kind:?}").to_lowercase();
    Ok((name, spec))
}

fn parse_range(raw: &str) -> CliResult<(f64, f64)> {
    let (lo, hi) = raw
        .split_once(':')
        .ok_or_else(|| usage(format!("FPPI range must look like lo:hi, got `{raw}`")))?;
    let lo = lo.trim().parse().map_err(|_| usage(format!("bad range bound `{lo}`")))?;
    let hi = hi.trim().parse().map_err(|_| usage(format!("bad range bound `{hi}`")))?;
    Ok((lo, hi))
}

impl RunConfig {
    fn resolve(ctx: &Context, args: EvaluateArgs) -> CliResult<Self> {
        let ground_truth = existing(ctx.path_setting(args.gt, "gt"), "ground truth (--gt)")?;
        let detections = existing(ctx.path_setting(args.det, "det"), "detections (--det)")?;
        let (subset_name, subset) = resolve_subset(ctx, args.subset)?;
        let iou_threshold = ctx.setting(args.iou, "iou")?.unwrap_or(DEFAULT_MATCH_IOU);
        if !(iou_threshold > 0.0 && iou_threshold <= 1.0) {
            return Err(usage(format!("--iou must lie in (0, 1], got {iou_threshold}")));
        }
        let defaults = FppiSampling::default();
        let (lo, hi) = match ctx.setting::<String>(args.fppi_range, "fppi_range")? {
            Some(raw) => parse_range(&raw)?,
            None => (defaults.lo, defaults.hi),
        };
        let samples = ctx
            .setting(args.fppi_samples, "fppi_samples")?
            .unwrap_or(defaults.samples);
        let sampling = FppiSampling::new(lo, hi, samples).map_err(|e| usage(e.to_string()))?;
        Ok(Self {
            ground_truth,
            detections,
            subset_name,
            subset,
            iou_threshold,
            sampling,
            output: ctx.output.clone(),
        })
    }
}

#[derive(Serialize)]
struct SubsetSummary<'a> {
    name: &'a str,
    min_height: f64,
    max_occlusion: f64,
}

#[derive(Serialize)]
struct Sample {
    fppi: f64,
    miss_rate: f64,
}

#[derive(Serialize)]
struct Summary<'a> {
    log_avg_mr: f64,
    samples: Vec<Sample>,
    subset: SubsetSummary<'a>,
    iou: f64,
    fppi_range: [f64; 2],
    images: usize,
    ground_truth: usize,
    ignore_regions: usize,
    detections: usize,
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    crate::textfmt::write_file(path, text)?;
    Ok(())
}

fn cmd_evaluate(ctx: &Context, args: EvaluateArgs) -> CliResult<()> {
    let run = RunConfig::resolve(ctx, args)?;
    let manifest = filter_subset(&parse_canonical(&run.ground_truth)?, run.subset);
    let dets = parse_detections(&run.detections)?;
    let curve = sweep_curve(&dets, &manifest, run.iou_threshold, &run.sampling)?;

    let summary = Summary {
        log_avg_mr: curve.log_avg_mr,
        samples: sample_miss_rates(&curve.points, &run.sampling)
            .into_iter()
            .map(|(fppi, miss_rate)| Sample { fppi, miss_rate })
            .collect(),
        subset: SubsetSummary {
            name: &run.subset_name,
            min_height: run.subset.min_height,
            max_occlusion: run.subset.max_occlusion,
        },
        iou: run.iou_threshold,
        fppi_range: [run.sampling.lo, run.sampling.hi],
        images: curve.images,
        ground_truth: curve.ground_truth,
        ignore_regions: manifest.ignore_count(),
        detections: dets.len(),
    };
    let mut json = serde_json::to_string_pretty(&summary)?;
    json.push('\n');
    write_text(&run.output.join("curve.csv"), &curve.to_csv())?;
    write_text(&run.output.join("summary.json"), &json)?;
    println!(
        "log-average miss rate: {:.2} % ({} images, {} persons, subset {})",
        100.0 * curve.log_avg_mr,
        curve.images,
        curve.ground_truth,
        run.subset_name
    );
    Ok(())
}

fn read_summary_mr(path: &Path) -> CliResult<f64> {
    let text = crate::textfmt::read_file(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    value
        .get("log_avg_mr")
        .and_then(serde_json::Value::as_f64)
        .ok_or_else(|| CliError::Data(format!("{}: no numeric `log_avg_mr`", path.display())))
}

fn split_axis(raw: &str) -> Vec<String> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

fn cmd_matrix(ctx: &Context) -> CliResult<()> {
    let cfg = &ctx.config;
    let mut cells = Vec::new();
    for entry in cfg.all("cell") {
        let parts: Vec<&str> = entry.value.split_whitespace().collect();
        let [train, test, mr] = parts[..] else {
            return Err(usage(format!("{}:{}: expected `cell = <train> <test> <mr%>`", entry.origin, entry.line)));
        };
        let mr: f64 = mr
            .parse()
            .map_err(|_| usage(format!("{}:{}: bad miss rate `{mr}`", entry.origin, entry.line)))?;
        cells.push(MatrixCell::new(train, test, mr));
    }
    for entry in cfg.all("run") {
        let parts: Vec<&str> = entry.value.split_whitespace().collect();
        let [train, test, summary] = parts[..] else {
            return Err(usage(format!(
                "{}:{}: expected `run = <train> <test> <summary.json>`",
                entry.origin, entry.line
            )));
        };
        let mr = read_summary_mr(&resolve(&entry.origin, summary))?;
        cells.push(MatrixCell::new(train, test, 100.0 * mr));
    }
    if cells.is_empty() {
        return Err(usage("matrix needs a --config with `cell` or `run` entries"));
    }
    let axes = match (cfg.value("train_models"), cfg.value("test_sets")) {
        (Some(t), Some(s)) => Some((split_axis(t), split_axis(s))),
        (None, None) => None,
        _ => return Err(usage("give both `train_models` and `test_sets`, or neither")),
    };
    let matrix = GeneralizationMatrix::from_cells(&cells, axes)?;
    let csv = matrix.to_csv();
    write_text(&ctx.output_file("matrix.csv"), &csv)?;
    print!("{csv}");
    Ok(())
}

fn image_files(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| usage(format!("cannot read `{}`: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "pgm" | "ppm" | "pnm"))
        })
        .collect();
    files.sort();
    Ok(files)
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn gray_of(pnm: Pnm, path: &Path) -> CliResult<(GrayImage, bool)> {
    match pnm {
        Pnm::Gray(g) => Ok((g, false)),
        Pnm::Rgb(rgb) => rgb
            .as_replicated()
            .cloned()
            .map(|g| (g, true))
            .ok_or_else(|| CliError::Data(format!("{}: planes differ; expected a single IR plane", path.display()))),
    }
}

fn load_reference(path: &Path) -> CliResult<IntensityHistogram> {
    if path.is_dir() {
        let files = image_files(path)?;
        if files.is_empty() {
            return Err(CliError::Data(format!(
                "reference sample set `{}` is empty",
                path.display()
            )));
        }
        let hists = files
            .par_iter()
            .map(|f| Ok(compute_histogram(&gray_of(read_pnm(f)?, f)?.0)))
            .collect::<CliResult<Vec<_>>>()?;
        Ok(average_reference(&hists)?)
    } else {
        Ok(parse_histogram(path)?)
    }
}

fn cmd_histmatch(ctx: &Context, args: HistmatchArgs) -> CliResult<()> {
    if !args.reference.exists() {
        return Err(usage(format!("reference `{}` does not exist", args.reference.display())));
    }
    let reference = load_reference(&args.reference)?;
    let inputs = image_files(&args.input)?;
    fs::create_dir_all(&ctx.output).map_err(|e| CliError::Data(format!("{}: {e}", ctx.output.display())))?;
    let hist_path = ctx.output_file("reference.hist");
    write_histogram(&reference, &hist_path)?;

    inputs
        .par_iter()
        .map(|path| {
            let (mut img, was_rgb) = gray_of(read_pnm(path)?, path)?;
            if args.scale2x {
                img = upscale2x(&img);
            }
            let matched = histogram_match(&img, &reference)?;
            let stem = file_stem(path);
            if args.replicate || was_rgb {
                write_ppm(&replicate_plane(&matched), &ctx.output_file(&format!("{stem}.ppm")))?;
            } else {
                write_pgm(&matched, &ctx.output_file(&format!("{stem}.pgm")))?;
            }
            Ok(())
        })
        .collect::<CliResult<Vec<()>>>()?;
    println!(
        "matched {} images; reference histogram written to {}",
        inputs.len(),
        hist_path.display()
    );
    Ok(())
}

fn report_regions(path: &Path, m: &DatasetManifest) {
    println!(
        "wrote {}: {} regions ({} evaluable, {} ignore) in {} images",
        path.display(),
        m.region_count(),
        m.evaluable_count(),
        m.ignore_count(),
        m.image_count()
    );
}

fn masks_to_manifest(args: &ConvertArgs) -> CliResult<DatasetManifest> {
    let label = args
        .person_label
        .ok_or_else(|| usage("seg-masks needs --person-label <int>"))?;
    let spectra: Spectra = args.spectra.parse().map_err(usage)?;
    if !args.input.is_dir() {
        return Err(usage(format!("`{}` is not a directory of masks", args.input.display())));
    }
    let sequence = file_stem(&args.input);
    let files = image_files(&args.input)?;
    let records = files
        .par_iter()
        .enumerate()
        .map(|(frame, path)| {
            let (img, _) = gray_of(read_pnm(path)?, path)?;
            let mask = SegmentationMask::from_labels(img.width(), img.height(), img.data(), label)?;
            Ok(ImageRecord {
                image_id: file_stem(path),
                sequence_id: sequence.clone(),
                frame_index: frame as u64,
                spectra,
                width: img.width(),
                height: img.height(),
                annotations: seg_to_boxes(&mask, args.ratio_low, args.ratio_high)?,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(DatasetManifest::new(sequence, records))
}

fn cmd_convert(ctx: &Context, args: ConvertArgs) -> CliResult<()> {
    if !args.input.exists() {
        return Err(usage(format!("input `{}` does not exist", args.input.display())));
    }
    if !(args.ratio_low >= 0.0 && args.ratio_low < args.ratio_high) {
        return Err(usage("need 0 <= --ratio-low < --ratio-high"));
    }
    let manifest = match args.kind {
        SourceKind::Canonical => parse_canonical(&args.input)?,
        SourceKind::VisibleBoxPairs => parse_visible_pairs(&args.input)?,
        SourceKind::SegMasks => masks_to_manifest(&args)?,
    };
    let name = args.name.clone().unwrap_or_else(|| file_stem(&args.input));
    let out = ctx.output_file(&format!("{name}.gt"));
    write_canonical(&manifest, &out)?;
    report_regions(&out, &manifest);
    Ok(())
}

fn cmd_stats(ctx: &Context, args: StatsArgs) -> CliResult<()> {
    if !args.gt.exists() {
        return Err(usage(format!("ground truth `{}` does not exist", args.gt.display())));
    }
    if args.bin_width == 0 {
        return Err(usage("--bin-width must be at least 1"));
    }
    let manifest = parse_canonical(&args.gt)?;
    let all = height_histogram(&filter_subset(&manifest, SubsetSpec::ALL), args.bin_width)?;
    let reasonable = height_histogram(&filter_subset(&manifest, SubsetSpec::REASONABLE), args.bin_width)?;
    let mut csv = String::from("bin,count_all,count_reasonable\n");
    let bins: std::collections::BTreeSet<u64> = all.keys().chain(reasonable.keys()).copied().collect();
    for bin in bins {
        csv.push_str(&format!(
            "{bin},{},{}\n",
            all.get(&bin).copied().unwrap_or(0),
            reasonable.get(&bin).copied().unwrap_or(0)
        ));
    }
    write_text(&ctx.output_file("heights.csv"), &csv)?;
    print!("{csv}");
    Ok(())
}

fn cmd_nms(ctx: &Context, args: NmsArgs) -> CliResult<()> {
    if !args.det.exists() {
        return Err(usage(format!("detections `{}` do not exist", args.det.display())));
    }
    if !(args.iou > 0.0 && args.iou <= 1.0) {
        return Err(usage(format!("--iou must lie in (0, 1], got {}", args.iou)));
    }
    let dets = parse_detections(&args.det)?;
    let images: Vec<(&str, &[geometry::ScoredBox])> = dets.iter().collect();
    let kept = images
        .par_iter()
        .map(|(id, boxes)| Ok((id.to_string(), geometry::nms(boxes, args.iou)?)))
        .collect::<CliResult<Vec<_>>>()?;
    let mut out = DetectionSet::new(dets.dataset_name.clone());
    for (id, boxes) in kept {
        out.set(id, boxes);
    }
    let path = ctx.output_file(&format!("{}-nms.det", file_stem(&args.det)));
    write_detections(&out, &path)?;
    println!("wrote {}: kept {} of {} detections", path.display(), out.len(), dets.len());
    Ok(())
}

fn cmd_filter(ctx: &Context, args: FilterArgs) -> CliResult<()> {
    if !args.gt.exists() {
        return Err(usage(format!("ground truth `{}` does not exist", args.gt.display())));
    }
    let (subset_name, spec) = resolve_subset(ctx, args.subset)?;
    let mut manifest = parse_canonical(&args.gt)?;
    if let Some(skip) = args.skip {
        if skip == 0 {
            return Err(usage("--skip must be at least 1"));
        }
        manifest = skip_sample(&manifest, skip)?;
    }
    if let Some(factor) = args.scale {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(usage(format!("--scale must be positive, got {factor}")));
        }
        manifest = scale_manifest(&manifest, factor)?;
    }
    manifest = filter_subset(&manifest, spec);
    if args.flip {
        manifest = flip_augment(&manifest)?;
    }
    let name = args
        .name
        .unwrap_or_else(|| format!("{}-{subset_name}", file_stem(&args.gt)));
    let out = ctx.output_file(&format!("{name}.gt"));
    write_canonical(&manifest, &out)?;
    report_regions(&out, &manifest);
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    let config = match &cli.config {
        Some(path) => {
            if !path.exists() {
                return Err(usage(format!("config `{}` does not exist", path.display())));
            }
            ConfigFile::load(path).map_err(|e| usage(e.to_string()))?
        }
        None => ConfigFile::default(),
    };
    let output = cli
        .output
        .clone()
        .or_else(|| config.path("output"))
        .unwrap_or_else(|| PathBuf::from("."));
    let ctx = Context { config, output };
    let jobs: Option<usize> = ctx.setting(cli.jobs, "jobs")?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        if n == 0 {
            return Err(usage("--jobs must be at least 1"));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Data(format!("cannot start worker pool: {e}")))?;

    pool.install(|| match cli.command {
        Command::Convert(a) => cmd_convert(&ctx, a),
        Command::Evaluate(a) => cmd_evaluate(&ctx, a),
        Command::Matrix => cmd_matrix(&ctx),
        Command::Histmatch(a) => cmd_histmatch(&ctx, a),
        Command::Stats(a) => cmd_stats(&ctx, a),
        Command::Nms(a) => cmd_nms(&ctx, a),
        Command::Filter(a) => cmd_filter(&ctx, a),
    })
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("msbench: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
