//! Batch commands behind the CLI. Every command reads its inputs from files
//! and writes its outputs to files; corpus directories are processed entry by
//! entry in parallel and their manifest is written once at the end.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use image::{Rgb, RgbImage};
use imageproc::drawing::{draw_filled_circle_mut, draw_line_segment_mut};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_tps, warp_maps, FitConfig, ALPHA_BETA_SWEEP};
use crate::io::{self, Manifest, ManifestEntry};
use crate::layout::{
    export_obj, extract_corners, maps_to_layout, reference_layout, render_maps, CornerAnnotation, RenderStyle,
    RoomLayout, DEFAULT_CAMERA_HEIGHT,
};
use crate::metrics::{ClassRaster, MetricsReport, Scored};
use crate::postproc::{split_corners_with_report, SplitParams};
use crate::raster::LayoutMaps;
use crate::synth::{generate, CorpusSpec, RoomKind};
use crate::tps::ControlGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Cuboid,
    Noncuboid,
}

impl Mode {
    pub fn default_n_side(self) -> usize {
        match self {
            Mode::Cuboid => 4,
            Mode::Noncuboid => 8,
        }
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cuboid" => Ok(Mode::Cuboid),
            "noncuboid" | "non-cuboid" => Ok(Mode::Noncuboid),
            _ => Err(Error::Config(format!("unknown mode {s:?}, expected cuboid or noncuboid"))),
        }
    }
}

/// Image size written as `WxH`; both dimensions even.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Resolution {
    pub width: usize,
    pub height: usize,
}

impl Default for Resolution {
    fn default() -> Self {
        Resolution {
            width: 1024,
            height: 512,
        }
    }
}

impl FromStr for Resolution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("resolution {s:?} must look like 1024x512"));
        let (w, h) = s.split_once(['x', 'X']).ok_or_else(bad)?;
        let width: usize = w.trim().parse().map_err(|_| bad())?;
        let height: usize = h.trim().parse().map_err(|_| bad())?;
        if width < 16 || height < 8 || width % 2 != 0 || height % 2 != 0 {
            return Err(Error::Config(format!(
                "resolution {width}x{height} must be even in both dimensions and at least 16x8"
            )));
        }
        Ok(Resolution { width, height })
    }
}

impl TryFrom<String> for Resolution {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Resolution> for String {
    fn from(r: Resolution) -> String {
        format!("{}x{}", r.width, r.height)
    }
}

/// Optional settings shared by the config file and the command line. Keys
/// are the long flag names; an optional `[fit]` table holds any
/// [`FitConfig`] field by its own name.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Settings {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    /// Ground truth for `evaluate` and `floorplan`.
    pub gt: Option<PathBuf>,
    /// Reference maps to warp instead of the canonical room.
    pub reference: Option<PathBuf>,
    pub mode: Option<Mode>,
    pub grid_side: Option<usize>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub delta: Option<f64>,
    pub steps: Option<usize>,
    pub seed: Option<u64>,
    pub unit_width: Option<f64>,
    pub separator: Option<usize>,
    pub threshold: Option<f64>,
    pub resolution: Option<Resolution>,
    pub count: Option<usize>,
    pub min_corners: Option<usize>,
    pub max_corners: Option<usize>,
    pub camera_height: Option<f64>,
    pub fit: Option<toml::Table>,
}

impl Settings {
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Field-wise `over` if set, else `self`. `[fit]` tables merge key by key.
    pub fn overridden_by(self, over: Settings) -> Settings {
        let fit = match (self.fit, over.fit) {
            (Some(mut base), Some(top)) => {
                base.extend(top);
                Some(base)
            }
            (a, b) => b.or(a),
        };
        Settings {
            input: over.input.or(self.input),
            output: over.output.or(self.output),
            gt: over.gt.or(self.gt),
            reference: over.reference.or(self.reference),
            mode: over.mode.or(self.mode),
            grid_side: over.grid_side.or(self.grid_side),
            alpha: over.alpha.or(self.alpha),
            beta: over.beta.or(self.beta),
            delta: over.delta.or(self.delta),
            steps: over.steps.or(self.steps),
            seed: over.seed.or(self.seed),
            unit_width: over.unit_width.or(self.unit_width),
            separator: over.separator.or(self.separator),
            threshold: over.threshold.or(self.threshold),
            resolution: over.resolution.or(self.resolution),
            count: over.count.or(self.count),
            min_corners: over.min_corners.or(self.min_corners),
            max_corners: over.max_corners.or(self.max_corners),
            camera_height: over.camera_height.or(self.camera_height),
            fit,
        }
    }
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub gt: Option<PathBuf>,
    pub reference: Option<PathBuf>,
    pub mode: Mode,
    pub resolution: Resolution,
    pub seed: u64,
    pub count: usize,
    pub min_corners: usize,
    pub max_corners: usize,
    pub camera_height: f64,
    pub fit: FitConfig,
    /// Split widths in pixels at 1024 px; `None` scales the default to the
    /// map width.
    pub unit_width: Option<f64>,
    pub separator: Option<usize>,
    pub threshold: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::from_settings(Settings::default()).expect("defaults are valid")
    }
}

impl RunConfig {
    /// Defaults, then the `[fit]` table, then the flat keys, with `flags`
    /// taking precedence over the file.
    pub fn resolve(config_file: Option<&Path>, flags: Settings) -> Result<Self> {
        let file = match config_file {
            Some(p) => Settings::from_toml_file(p)?,
            None => Settings::default(),
        };
        Self::from_settings(file.overridden_by(flags))
    }

    pub fn from_settings(s: Settings) -> Result<Self> {
        let mode = s.mode.unwrap_or_default();
        let fit_table = s.fit.unwrap_or_default();
        let n_side_in_table = fit_table.contains_key("n_side");
        let mut fit = FitConfig::deserialize(toml::Value::Table(fit_table))
            .map_err(|e| Error::Config(format!("[fit]: {e}")))?;
        if !n_side_in_table {
            fit.n_side = mode.default_n_side();
        }
        if let Some(v) = s.grid_side {
            fit.n_side = v;
        }
        if let Some(v) = s.alpha {
            fit.alpha = v;
        }
        if let Some(v) = s.beta {
            fit.beta = v;
        }
        if let Some(v) = s.delta {
            fit.delta = v;
        }
        if let Some(v) = s.steps {
            fit.steps = v;
        }
        fit.validate()?;
        let cfg = RunConfig {
            input: s.input,
            output: s.output,
            gt: s.gt,
            reference: s.reference,
            mode,
            resolution: s.resolution.unwrap_or_default(),
            seed: s.seed.unwrap_or(0),
            count: s.count.unwrap_or(10),
            min_corners: s.min_corners.unwrap_or(4),
            max_corners: s.max_corners.unwrap_or(10),
            camera_height: s.camera_height.unwrap_or(DEFAULT_CAMERA_HEIGHT),
            fit,
            unit_width: s.unit_width,
            separator: s.separator,
            threshold: s.threshold.unwrap_or(0.5),
        };
        if let Some(u) = cfg.unit_width {
            if !(u > 0.0 && u.is_finite()) {
                return Err(Error::Config(format!("unit-width must be positive, got {u}")));
            }
        }
        if !(cfg.threshold > 0.0 && cfg.threshold <= 1.0) {
            return Err(Error::Config(format!("threshold must lie in (0, 1], got {}", cfg.threshold)));
        }
        if !(cfg.camera_height > 0.0 && cfg.camera_height.is_finite()) {
            return Err(Error::Config("camera-height must be positive".into()));
        }
        Ok(cfg)
    }

    pub fn split_params(&self, width: usize) -> SplitParams {
        let scale = width as f64 / 1024.0;
        let d = SplitParams::default();
        SplitParams {
            unit_width: self.unit_width.unwrap_or(d.unit_width * scale),
            separator: self
                .separator
                .unwrap_or(((d.separator as f64 * scale).round() as usize).max(1)),
            tolerance: d.tolerance * scale,
            threshold: self.threshold,
            horizon_row: None,
        }
    }

    pub fn corpus_spec(&self) -> CorpusSpec {
        let kind = match self.mode {
            Mode::Cuboid => RoomKind::Cuboid,
            Mode::Noncuboid => RoomKind::Manhattan {
                min_corners: self.min_corners,
                max_corners: self.max_corners,
            },
        };
        CorpusSpec {
            count: self.count,
            seed: self.seed,
            kind,
            camera_height: self.camera_height,
            resolution: [self.resolution.width, self.resolution.height],
            ..CorpusSpec::default()
        }
    }

    fn input(&self) -> Result<&Path> {
        self.input
            .as_deref()
            .ok_or_else(|| Error::Config("--input is required".into()))
    }

    fn output(&self) -> Result<&Path> {
        self.output
            .as_deref()
            .ok_or_else(|| Error::Config("--output is required".into()))
    }

    fn gt(&self) -> Result<&Path> {
        self.gt.as_deref().ok_or_else(|| Error::Config("--gt is required".into()))
    }

    /// Reference maps at `width × height`: the file given by `reference`, or
    /// the canonical room.
    pub fn reference_maps(&self, width: usize, height: usize) -> Result<LayoutMaps> {
        match &self.reference {
            None => Ok(reference_layout(width, height)),
            Some(p) => {
                let maps = io::read_maps(p)?;
                if maps.width() != width || maps.height() != height {
                    return Err(Error::shape(
                        format!("{width}x{height}"),
                        format!("{}x{}", maps.width(), maps.height()),
                    )
                    .at(p));
                }
                Ok(maps)
            }
        }
    }
}

/// Existence check run before any work, so bad paths fail fast.
fn require_input(path: &Path) -> Result<()> {
    if path.is_dir() {
        if io::is_corpus(path) {
            return Ok(());
        }
        return Err(Error::parse(path, format!("directory has no {}", io::MANIFEST)));
    }
    let prefix = io::map_prefix(path);
    let candidates = [
        path.to_path_buf(),
        io::with_suffix(&prefix, io::EDGE_SUFFIX),
        io::with_suffix(&prefix, io::LAYOUT_SUFFIX),
    ];
    if candidates.iter().any(|p| p.is_file()) {
        Ok(())
    } else {
        Err(Error::io(path, std::io::Error::from(std::io::ErrorKind::NotFound)))
    }
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "json")
}

/// Layout JSON paths are kept; map paths are reduced to their prefix.
fn normalize(path: &Path) -> PathBuf {
    if is_json(path) {
        path.to_path_buf()
    } else {
        io::map_prefix(path)
    }
}

/// Writes the canonical reference maps and layout at `output` (a prefix).
pub fn cmd_gen_reference(cfg: &RunConfig) -> Result<()> {
    let out = cfg.output()?;
    let Resolution { width, height } = cfg.resolution;
    io::write_maps(out, &reference_layout(width, height))?;
    io::write_json(&io::with_suffix(out, io::LAYOUT_SUFFIX), &RoomLayout::canonical())
}

/// Generates a seeded corpus directory at `output`.
pub fn cmd_synth(cfg: &RunConfig) -> Result<Manifest> {
    let out = cfg.output()?;
    let spec = cfg.corpus_spec();
    spec.validate()?;
    let samples = generate(&spec)?;
    io::write_corpus(out, &spec, &samples)
}

/// Warps the reference by the control grid in `input` and writes the maps
/// at prefix `output`.
pub fn cmd_warp(cfg: &RunConfig) -> Result<()> {
    let input = cfg.input()?;
    let out = cfg.output()?;
    require_input(input)?;
    let grid: ControlGrid = io::read_json(input)?;
    let Resolution { width, height } = cfg.resolution;
    let reference = cfg.reference_maps(width, height)?;
    let warped = warp_maps(&reference, &grid, cfg.fit.smoothing).map_err(|e| e.at(input))?;
    io::write_maps(out, &warped)
}

/// Outcome of fitting one target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOutcome {
    pub id: String,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub iterations: usize,
}

fn fit_one(cfg: &RunConfig, target_prefix: &Path, out_prefix: &Path, id: &str) -> Result<FitOutcome> {
    let target = io::read_maps(target_prefix)?;
    let reference = cfg.reference_maps(target.width(), target.height())?;
    let trace = fit_tps(&reference, &target, &cfg.fit).map_err(|e| e.at(target_prefix))?;
    io::write_maps(out_prefix, &trace.warped)?;
    io::write_json(&io::with_suffix(out_prefix, ".grid.json"), &trace.grid)?;
    io::write_loss_csv(&io::with_suffix(out_prefix, ".loss.csv"), &trace.losses)?;
    Ok(FitOutcome {
        id: id.to_string(),
        initial_loss: trace.initial_loss,
        final_loss: trace.final_loss,
        iterations: trace.losses.len(),
    })
}

/// Runs `f(input_prefix, output_prefix, id)` on a single map pair or on every
/// entry of a corpus; for a corpus, `output` becomes a directory with its own
/// manifest.
fn for_each_entry<T, F>(cfg: &RunConfig, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&Path, &Path, &str) -> Result<T> + Sync,
{
    let input = cfg.input()?;
    let out = cfg.output()?;
    require_input(input)?;
    if !io::is_corpus(input) {
        let id = io::map_prefix(input)
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        return Ok(vec![f(&io::map_prefix(input), out, &id)?]);
    }
    let manifest = Manifest::read(input)?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let results = manifest
        .entries
        .par_iter()
        .map(|e| f(&input.join(&e.id), &out.join(&e.id), &e.id))
        .collect::<Result<Vec<_>>>()?;
    let entries = manifest.entries.iter().map(|e| ManifestEntry::maps_only(&e.id)).collect();
    Manifest { spec: None, entries }.write(out)?;
    Ok(results)
}

/// Fits the reference to the maps at `input` (prefix or corpus) and writes
/// warped maps, `.grid.json` and `.loss.csv` per entry.
pub fn cmd_fit(cfg: &RunConfig) -> Result<Vec<FitOutcome>> {
    for_each_entry(cfg, |i, o, id| fit_one(cfg, i, o, id))
}

/// Splits fused upper corners in non-cuboid mode; copies maps unchanged in
/// cuboid mode. Returns the number of blobs split per entry.
pub fn cmd_postprocess(cfg: &RunConfig) -> Result<Vec<usize>> {
    for_each_entry(cfg, |i, o, _| {
        let maps = io::read_maps(i)?;
        let (maps, splits) = match cfg.mode {
            Mode::Cuboid => (maps, Vec::new()),
            Mode::Noncuboid => split_corners_with_report(&maps, &cfg.split_params(maps.width())),
        };
        io::write_maps(o, &maps)?;
        Ok(splits.len())
    })
}

/// One side of an evaluation, derived from maps or from a layout file.
struct Side {
    layout: RoomLayout,
    corners: CornerAnnotation,
    classes: ClassRaster,
}

impl Side {
    fn scored(&self) -> Scored<'_> {
        Scored {
            layout: &self.layout,
            corners: &self.corners,
            classes: &self.classes,
        }
    }
}

fn side_from_maps(maps: &LayoutMaps, camera_height: f64) -> Result<Side> {
    let tol = 10.0 * maps.width() as f64 / 1024.0;
    Ok(Side {
        layout: maps_to_layout(maps, camera_height)?,
        corners: extract_corners(&maps.corner, 0.5, tol)?,
        classes: ClassRaster::from_edge_map(&maps.edge)?,
    })
}

fn load_side(path: &Path, width: usize, height: usize, camera_height: f64) -> Result<Side> {
    if is_json(path) {
        let layout: RoomLayout = io::read_json(path)?;
        let maps = render_maps(&layout, width, height, RenderStyle::for_width(width)).map_err(|e| e.at(path))?;
        Ok(Side {
            corners: CornerAnnotation::from_layout(&layout, width, height).map_err(|e| e.at(path))?,
            classes: ClassRaster::from_edge_map(&maps.edge)?,
            layout,
        })
    } else {
        side_from_maps(&io::read_maps(path)?, camera_height).map_err(|e| e.at(path))
    }
}

fn evaluate_pair(cfg: &RunConfig, pred: &Path, gt: &Path) -> Result<MetricsReport> {
    let pred_maps = io::read_maps(pred)?;
    let (w, h) = (pred_maps.width(), pred_maps.height());
    let gt_side = load_side(gt, w, h, cfg.camera_height)?;
    let pred_side = side_from_maps(&pred_maps, cfg.camera_height).map_err(|e| e.at(pred))?;
    MetricsReport::compute(pred_side.scored(), gt_side.scored()).map_err(|e| e.at(pred))
}

/// Per-entry corpus score. Entries whose prediction cannot be reconstructed
/// score zero IoU and carry the error message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryScore {
    pub id: String,
    pub iou3d: f64,
    pub iou2d: f64,
    pub ce_pct: Option<f64>,
    pub pe_pct: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSummary {
    pub count: usize,
    pub failures: usize,
    pub mean_iou3d: f64,
    pub median_iou3d: f64,
    pub mean_iou2d: f64,
    /// Over entries with matching corner counts.
    pub mean_ce_pct: Option<f64>,
    pub mean_pe_pct: Option<f64>,
    pub entries: Vec<EntryScore>,
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

pub fn median(v: &[f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    Some(if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    })
}

impl EvaluationSummary {
    pub fn from_entries(entries: Vec<EntryScore>) -> Self {
        let iou3d: Vec<f64> = entries.iter().map(|e| e.iou3d).collect();
        let iou2d: Vec<f64> = entries.iter().map(|e| e.iou2d).collect();
        let ce: Vec<f64> = entries.iter().filter_map(|e| e.ce_pct).collect();
        let pe: Vec<f64> = entries.iter().filter_map(|e| e.pe_pct).collect();
        EvaluationSummary {
            count: entries.len(),
            failures: entries.iter().filter(|e| e.error.is_some()).count(),
            mean_iou3d: mean(&iou3d).unwrap_or(0.0),
            median_iou3d: median(&iou3d).unwrap_or(0.0),
            mean_iou2d: mean(&iou2d).unwrap_or(0.0),
            mean_ce_pct: mean(&ce),
            mean_pe_pct: mean(&pe),
            entries,
        }
    }
}

fn score_entry(cfg: &RunConfig, pred: &Path, gt: &Path, id: &str) -> Result<EntryScore> {
    let pred_maps = io::read_maps(pred)?;
    let (w, h) = (pred_maps.width(), pred_maps.height());
    // Ground truth must always be readable; only the prediction may fail.
    let gt_side = load_side(gt, w, h, cfg.camera_height)?;
    let pe = ClassRaster::from_edge_map(&pred_maps.edge)
        .and_then(|c| crate::metrics::pixel_error(&c, &gt_side.classes))
        .ok();
    Ok(match side_from_maps(&pred_maps, cfg.camera_height) {
        Ok(p) => {
            let r = MetricsReport::compute(p.scored(), gt_side.scored()).map_err(|e| e.at(pred))?;
            EntryScore {
                id: id.to_string(),
                iou3d: r.iou3d,
                iou2d: r.iou2d,
                ce_pct: r.ce_pct,
                pe_pct: Some(r.pe_pct),
                error: None,
            }
        }
        Err(e) => EntryScore {
            id: id.to_string(),
            iou3d: 0.0,
            iou2d: 0.0,
            ce_pct: None,
            pe_pct: pe,
            error: Some(e.to_string()),
        },
    })
}

/// Result of [`cmd_evaluate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Evaluation {
    Single(MetricsReport),
    Corpus(EvaluationSummary),
}

/// Scores the prediction at `input` against `gt` and writes the JSON report
/// to `output`. For a pair of corpora, entries are matched by id.
pub fn cmd_evaluate(cfg: &RunConfig) -> Result<Evaluation> {
    let input = cfg.input()?;
    let gt = cfg.gt()?;
    let out = cfg.output()?;
    require_input(input)?;
    require_input(gt)?;
    match (io::is_corpus(input), io::is_corpus(gt)) {
        (false, false) => {
            let report = evaluate_pair(cfg, &io::map_prefix(input), &normalize(gt))?;
            io::write_json(out, &report)?;
            Ok(Evaluation::Single(report))
        }
        (true, true) => {
            let pred = Manifest::read(input)?;
            let truth = Manifest::read(gt)?;
            let entries = pred
                .entries
                .par_iter()
                .map(|e| {
                    if !truth.entries.iter().any(|t| t.id == e.id) {
                        return Err(Error::parse(gt, format!("no ground-truth entry {}", e.id)));
                    }
                    score_entry(cfg, &input.join(&e.id), &gt.join(&e.id), &e.id)
                })
                .collect::<Result<Vec<_>>>()?;
            let summary = EvaluationSummary::from_entries(entries);
            io::write_json(out, &summary)?;
            Ok(Evaluation::Corpus(summary))
        }
        _ => Err(Error::Config(
            "--input and --gt must both be corpus directories or both single files".into(),
        )),
    }
}

fn load_layout(path: &Path, camera_height: f64) -> Result<RoomLayout> {
    if is_json(path) {
        io::read_json(path)
    } else {
        maps_to_layout(&io::read_maps(path)?, camera_height).map_err(|e| e.at(path))
    }
}

/// Writes the room at `input` (maps prefix or layout JSON) as an OBJ mesh.
pub fn cmd_reconstruct(cfg: &RunConfig) -> Result<RoomLayout> {
    let input = cfg.input()?;
    let out = cfg.output()?;
    require_input(input)?;
    let layout = load_layout(&normalize(input), cfg.camera_height)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    export_obj(&layout, out)?;
    Ok(layout)
}

pub const FLOORPLAN_GT: Rgb<u8> = Rgb([0, 0, 255]);
pub const FLOORPLAN_PRED: Rgb<u8> = Rgb([0, 160, 0]);
pub const FLOORPLAN_CAMERA: Rgb<u8> = Rgb([255, 0, 0]);

/// Top view, `x` to the right and `z` up, scaled to fit both outlines and the
/// camera with a margin.
pub fn render_floorplan(gt: Option<&RoomLayout>, pred: Option<&RoomLayout>, size: u32) -> RgbImage {
    let mut img = RgbImage::from_pixel(size, size, Rgb([255, 255, 255]));
    let mut extent = 1.0f64;
    for l in [gt, pred].into_iter().flatten() {
        for p in l.floor_polygon() {
            extent = extent.max(p.x.abs()).max(p.y.abs());
        }
    }
    let half = size as f64 / 2.0;
    let scale = 0.9 * half / extent;
    let to_px = |x: f64, z: f64| ((half + x * scale) as f32, (half - z * scale) as f32);
    for (layout, color) in [(gt, FLOORPLAN_GT), (pred, FLOORPLAN_PRED)] {
        let Some(l) = layout else { continue };
        let poly = l.floor_polygon();
        for i in 0..poly.len() {
            let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
            let (pa, pb) = (to_px(a.x, a.y), to_px(b.x, b.y));
            for (dx, dy) in [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)] {
                draw_line_segment_mut(&mut img, (pa.0 + dx, pa.1 + dy), (pb.0 + dx, pb.1 + dy), color);
            }
        }
    }
    let r = (size / 80).max(2) as i32;
    draw_filled_circle_mut(&mut img, (half as i32, half as i32), r, FLOORPLAN_CAMERA);
    img
}

/// Bird's-eye PNG of the prediction at `input` (green) and, when given, the
/// ground truth at `gt` (blue), with the camera as a red dot.
pub fn cmd_floorplan(cfg: &RunConfig) -> Result<()> {
    let input = cfg.input()?;
    let out = cfg.output()?;
    require_input(input)?;
    let pred = load_layout(&normalize(input), cfg.camera_height)?;
    let gt = match &cfg.gt {
        Some(g) => {
            require_input(g)?;
            Some(load_layout(&normalize(g), cfg.camera_height)?)
        }
        None => None,
    };
    let img = render_floorplan(gt.as_ref(), Some(&pred), 512);
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    img.save_with_format(out, image::ImageFormat::Png)
        .map_err(|e| Error::parse(out, e))
}

/// One row of the α/β comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub beta: f64,
    pub mean_final_loss: f64,
    pub mean_iou3d: f64,
    pub failures: usize,
    /// 1 = highest mean 3DIoU.
    pub rank: usize,
}

/// Fits every target at each (α, β) pair of [`ALPHA_BETA_SWEEP`] and ranks
/// the pairs by mean 3DIoU of the reconstructed layouts.
pub fn sweep_alpha_beta(targets: &[(LayoutMaps, RoomLayout)], cfg: &RunConfig) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &(alpha, beta) in &ALPHA_BETA_SWEEP {
        let fit_cfg = FitConfig {
            alpha,
            beta,
            ..cfg.fit.clone()
        };
        let results = targets
            .par_iter()
            .map(|(maps, truth)| {
                let reference = cfg.reference_maps(maps.width(), maps.height())?;
                let trace = fit_tps(&reference, maps, &fit_cfg)?;
                let warped = match cfg.mode {
                    Mode::Cuboid => trace.warped,
                    Mode::Noncuboid => split_corners_with_report(&trace.warped, &cfg.split_params(maps.width())).0,
                };
                let iou = maps_to_layout(&warped, cfg.camera_height)
                    .ok()
                    .map(|l| crate::metrics::iou_3d(&l, truth))
                    .transpose()?;
                Ok((trace.final_loss, iou))
            })
            .collect::<Result<Vec<_>>>()?;
        let losses: Vec<f64> = results.iter().map(|r| r.0).collect();
        let ious: Vec<f64> = results.iter().map(|r| r.1.unwrap_or(0.0)).collect();
        rows.push(SweepRow {
            alpha,
            beta,
            mean_final_loss: mean(&losses).unwrap_or(f64::NAN),
            mean_iou3d: mean(&ious).unwrap_or(0.0),
            failures: results.iter().filter(|r| r.1.is_none()).count(),
            rank: 0,
        });
    }
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&a, &b| rows[b].mean_iou3d.total_cmp(&rows[a].mean_iou3d));
    for (rank, &i) in order.iter().enumerate() {
        rows[i].rank = rank + 1;
    }
    Ok(rows)
}

/// Runs [`sweep_alpha_beta`] on the corpus at `input` (ground truth taken
/// from each entry's layout JSON) and writes the rows to `output`.
pub fn cmd_sweep(cfg: &RunConfig) -> Result<Vec<SweepRow>> {
    let input = cfg.input()?;
    let out = cfg.output()?;
    if !io::is_corpus(input) {
        return Err(Error::parse(input, "sweep needs a corpus directory"));
    }
    let manifest = Manifest::read(input)?;
    let targets = manifest
        .entries
        .iter()
        .map(|e| {
            let prefix = input.join(&e.id);
            let layout_path = io::with_suffix(&prefix, io::LAYOUT_SUFFIX);
            Ok((io::read_maps(&prefix)?, io::read_json(&layout_path)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = sweep_alpha_beta(&targets, cfg)?;
    io::write_json(out, &rows)?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::RenderStyle;

    fn flags(pairs: &[(&str, &str)]) -> Settings {
        let text: String = pairs.iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
        toml::from_str(&text).unwrap()
    }

    #[test]
    fn resolution_parsing() {
        assert_eq!(
            "640x320".parse::<Resolution>().unwrap(),
            Resolution {
                width: 640,
                height: 320
            }
        );
        for bad in ["640", "641x320", "640x321", "ax320", "8x4"] {
            assert!(matches!(bad.parse::<Resolution>(), Err(Error::Config(_))), "{bad}");
        }
    }

    #[test]
    fn mode_selects_grid_side() {
        assert_eq!(RunConfig::default().fit.n_side, 4);
        let c = RunConfig::from_settings(flags(&[("mode", "\"noncuboid\"")])).unwrap();
        assert_eq!(c.fit.n_side, 8);
        let c = RunConfig::from_settings(flags(&[("mode", "\"noncuboid\""), ("grid-side", "5")])).unwrap();
        assert_eq!(c.fit.n_side, 5);
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        fs::write(
            &path,
            "alpha = 0.5\nsteps = 10\nresolution = \"512x256\"\n[fit]\nstep_size = 0.02\nn_side = 6\nsteps = 99\n",
        )
        .unwrap();
        let c = RunConfig::resolve(Some(&path), flags(&[("steps", "20")])).unwrap();
        assert_eq!(c.fit.alpha, 0.5);
        assert_eq!(c.fit.steps, 20);
        assert_eq!(c.fit.step_size, 0.02);
        assert_eq!(c.fit.n_side, 6);
        assert_eq!(c.resolution.width, 512);

        fs::write(&path, "alhpa = 0.5\n").unwrap();
        assert!(matches!(RunConfig::resolve(Some(&path), Settings::default()), Err(Error::Config(_))));
        fs::write(&path, "[fit]\nbogus = 1\n").unwrap();
        assert!(matches!(RunConfig::resolve(Some(&path), Settings::default()), Err(Error::Config(_))));
        assert!(matches!(
            RunConfig::resolve(Some(&dir.path().join("none.toml")), Settings::default()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn split_params_scale_with_width() {
        let c = RunConfig::default();
        assert_eq!(c.split_params(1024).unit_width, 75.0);
        assert_eq!(c.split_params(1024).separator, 5);
        assert_eq!(c.split_params(512).unit_width, 37.5);
        let c = RunConfig::from_settings(flags(&[("unit-width", "50.0"), ("separator", "3")])).unwrap();
        assert_eq!(c.split_params(512).unit_width, 50.0);
        assert_eq!(c.split_params(512).separator, 3);
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn floorplan_colors() {
        let gt = RoomLayout::cuboid(4.0, 4.0, 3.0, 1.6, [0.0, 0.0]).unwrap();
        let pred = RoomLayout::cuboid(3.0, 3.0, 3.0, 1.6, [0.0, 0.0]).unwrap();
        let img = render_floorplan(Some(&gt), Some(&pred), 256);
        let count = |c: Rgb<u8>| img.pixels().filter(|&&p| p == c).count();
        assert!(count(FLOORPLAN_GT) > 100);
        assert!(count(FLOORPLAN_PRED) > 100);
        assert!(count(FLOORPLAN_CAMERA) > 4);
        assert_eq!(*img.get_pixel(128, 128), FLOORPLAN_CAMERA);
        // The larger outline reaches the 90 % margin on the left.
        assert_eq!(*img.get_pixel(13, 128), FLOORPLAN_GT);
    }

    #[test]
    fn evaluate_layout_json_against_its_maps() {
        let dir = tempfile::tempdir().unwrap();
        let room = RoomLayout::cuboid(4.0, 5.0, 2.8, 1.6, [0.3, -0.2]).unwrap();
        let maps = render_maps(&room, 512, 256, RenderStyle::for_width(512)).unwrap();
        let pred = dir.path().join("p");
        io::write_maps(&pred, &maps).unwrap();
        let gt = dir.path().join("gt.layout.json");
        io::write_json(&gt, &room).unwrap();
        let cfg = RunConfig {
            input: Some(pred),
            gt: Some(gt),
            output: Some(dir.path().join("r.json")),
            ..RunConfig::default()
        };
        let Evaluation::Single(r) = cmd_evaluate(&cfg).unwrap() else { panic!() };
        assert!(r.iou3d > 0.98, "{r:?}");
        assert!(r.pe_pct < 1.0);
    }
}
