//! Batch commands behind the `echoiq` binary.
//!
//! Every command reads its inputs, runs on its own rayon pool and writes CSV
//! or JSON whose bytes do not depend on the number of threads.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use log::{debug, info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coherence::{coherence_factor, gamma_normalize, load_channel_frame, save_channel_frame};
use crate::error::{Error, Result};
use crate::evalstats::{apply_calibration, load_annotations_csv, MAX_SCORE, MIN_SCORE};
use crate::evalstats::{
    fit_linear, inter_observer, method_vs_observers, round_half_up, wilcoxon_signed_rank,
    AgreementStats, LinearCalibration, QualityRecord, Source, Tuple, WilcoxonResult,
};
use crate::imaging::{
    histogram_match, load_gray, load_label_mask, read_file, save_gray, save_label_mask, write_file,
    Domain, GrayImage, Label, LabelMask, Spacing, MATCH_MEAN, MATCH_STD,
};
use crate::imgcmp::{compare_frame, ComparisonReport};
use crate::phantom::{
    fill_intensity, gen_chamber_phantom, gen_channel_phantom, ChamberParams, ClassIntensity,
    CoherenceProfile,
};
use crate::qmetrics::{
    compute_metric_vector, load_metrics_csv, write_metrics_csv, MetricName, MetricVector,
};
use crate::regions::{divide_regions, RegionId, RegionSet, View, ANNULUS_RADIUS_MM};
use crate::rng::{CounterRng, RngCursor};

/// Parses `"depth,width"` or a single isotropic value, in mm per pixel.
pub fn parse_spacing(s: &str) -> Result<Spacing> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |t: &str| {
        t.parse::<f64>()
            .map_err(|_| Error::InvalidInput(format!("invalid spacing {s:?}")))
    };
    match parts.as_slice() {
        [v] => Spacing::new(num(v)?, num(v)?),
        [d, w] => Spacing::new(num(d)?, num(w)?),
        _ => Err(Error::InvalidInput(format!(
            "spacing must be \"depth,width\" in mm, got {s:?}"
        ))),
    }
}

/// Runs `f` on a dedicated pool; `None` uses rayon's default size.
pub fn with_threads<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> Result<T> + Send,
) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::InvalidInput("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Invariant(format!("cannot start thread pool: {e}")))?;
    pool.install(f)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    write_file(path, text.as_bytes())
}

fn to_json_line<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

// ------------------------------------------------------------------ regions

/// Divides the myocardium and checks the partition before returning.
pub fn regions_for(mask: &LabelMask, view: View, annulus_radius_mm: f64) -> Result<RegionSet> {
    let set = divide_regions(mask, view, annulus_radius_mm)?;
    set.check_partition(mask)?;
    Ok(set)
}

#[derive(Clone, Debug)]
pub struct RegionsJob {
    pub labels: PathBuf,
    pub sector: Option<PathBuf>,
    pub spacing: Spacing,
    pub view: View,
    pub annulus_radius_mm: f64,
}

pub fn cmd_regions(job: &RegionsJob, out: &Path) -> Result<RegionSet> {
    let mask = load_label_mask(&job.labels, job.sector.as_deref(), job.spacing)?;
    let set = regions_for(&mask, job.view, job.annulus_radius_mm)?;
    set.save(out)?;
    let excluded = set.iter().filter(|(_, r)| r.excluded).count();
    info!(
        "{}: 8 regions written to {} ({excluded} excluded)",
        job.labels.display(),
        out.display()
    );
    Ok(set)
}

// ------------------------------------------------------------------- corpus

/// Schema tag of corpus manifests.
pub const CORPUS_FORMAT: &str = "echoiq-corpus/1";

/// One frame of a corpus manifest. Relative paths are resolved against the
/// manifest's directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameSpec {
    pub id: String,
    /// Needed unless `regions` is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub view: Option<View>,
    pub spacing: Spacing,
    pub bmode: PathBuf,
    pub labels: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sector: Option<PathBuf>,
    /// Precomputed region file; divided on the fly when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regions: Option<PathBuf>,
    /// Gamma-normalized coherence image (CIMG1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coherence: Option<PathBuf>,
    /// Channel data the coherence image was derived from (CHDF1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channels: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub format: String,
    pub frames: Vec<FrameSpec>,
}

impl Corpus {
    pub fn new(frames: Vec<FrameSpec>) -> Corpus {
        Corpus {
            format: CORPUS_FORMAT.into(),
            frames,
        }
    }

    /// Reads a manifest and resolves its paths.
    pub fn load(path: impl AsRef<Path>) -> Result<Corpus> {
        let path = path.as_ref();
        let data = read_file(path)?;
        let mut corpus: Corpus = serde_json::from_slice(&data)
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        if corpus.format != CORPUS_FORMAT {
            return Err(Error::Format(format!(
                "{}: unsupported corpus format {:?}",
                path.display(),
                corpus.format
            )));
        }
        let base = path.parent().unwrap_or(Path::new(""));
        let join = |p: &mut PathBuf| *p = base.join(&*p);
        for f in &mut corpus.frames {
            join(&mut f.bmode);
            join(&mut f.labels);
            for p in [
                &mut f.sector,
                &mut f.regions,
                &mut f.coherence,
                &mut f.channels,
            ]
            .into_iter()
            .flatten()
            {
                join(p);
            }
        }
        Ok(corpus)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_text(path.as_ref(), &to_json_line(self))
    }
}

// ------------------------------------------------------------------ metrics

fn load_coherence(path: &Path, dims: (usize, usize)) -> Result<GrayImage> {
    let coh = load_gray(path, Spacing::default())?;
    if coh.domain() != Domain::Coherence {
        return Err(Error::Format(format!(
            "{}: expected a CIMG1 coherence image",
            path.display()
        )));
    }
    if coh.dims() != dims {
        return Err(Error::DimensionMismatch {
            expected: dims,
            actual: coh.dims(),
        });
    }
    Ok(coh)
}

/// Metric rows of one frame: histogram matching over the sector, then the
/// regional metrics against the LV lumen.
pub fn frame_metrics(frame: &FrameSpec) -> Result<Vec<MetricVector>> {
    let spacing = Spacing::new(frame.spacing.depth, frame.spacing.width)?;
    let bmode = load_gray(&frame.bmode, spacing)?;
    if bmode.domain() != Domain::Intensity {
        return Err(Error::Format(format!(
            "{}: B-mode image must be a PGM",
            frame.bmode.display()
        )));
    }
    let mask = load_label_mask(&frame.labels, frame.sector.as_deref(), spacing)?;
    if mask.dims() != bmode.dims() {
        return Err(Error::DimensionMismatch {
            expected: bmode.dims(),
            actual: mask.dims(),
        });
    }
    let regions = match (&frame.regions, frame.view) {
        (Some(path), view) => {
            let set = RegionSet::load(path)?;
            if view.is_some_and(|v| v != set.view) {
                return Err(Error::Validation(format!(
                    "frame {}: view {} does not match region file view {}",
                    frame.id,
                    view.unwrap(),
                    set.view
                )));
            }
            set
        }
        (None, Some(view)) => regions_for(&mask, view, ANNULUS_RADIUS_MM)?,
        (None, None) => {
            return Err(Error::InvalidInput(format!(
                "frame {}: either a view or a region file is required",
                frame.id
            )))
        }
    };
    let coh = frame
        .coherence
        .as_deref()
        .map(|p| load_coherence(p, bmode.dims()))
        .transpose()?;
    let matched = histogram_match(&bmode, mask.sector(), MATCH_MEAN, MATCH_STD)?;
    let rows = compute_metric_vector(&frame.id, &matched, coh.as_ref(), &mask, &regions)?;
    if let Some(bad) = rows.iter().find(|r| !(0.0..=1.0).contains(&r.gcnr)) {
        return Err(Error::Invariant(format!(
            "frame {} region {}: gCNR {} outside [0, 1]",
            frame.id, bad.region_id, bad.gcnr
        )));
    }
    debug!("frame {}: {} regions", frame.id, rows.len());
    Ok(rows)
}

/// Metric CSV for a set of frames, sorted by (frame_id, region_id).
pub fn cmd_metrics(frames: &[FrameSpec], out: &Path) -> Result<Vec<MetricVector>> {
    let mut seen = BTreeSet::new();
    if let Some(dup) = frames.iter().find(|f| !seen.insert(f.id.as_str())) {
        return Err(Error::Validation(format!(
            "frame id {} listed twice",
            dup.id
        )));
    }
    let per_frame: Vec<Vec<MetricVector>> = frames
        .par_iter()
        .map(|f| frame_metrics(f).inspect_err(|e| log::error!("frame {}: {e}", f.id)))
        .collect::<Result<_>>()?;
    let mut rows: Vec<MetricVector> = per_frame.into_iter().flatten().collect();
    rows.sort_by(|a, b| (&a.frame_id, a.region_id).cmp(&(&b.frame_id, b.region_id)));
    if rows.is_empty() {
        warn!("every region is excluded or empty; the metrics file has a header only");
    }
    let mut buf = Vec::new();
    write_metrics_csv(&mut buf, &rows)?;
    write_file(out, &buf)?;
    info!("{} metric rows from {} frames", rows.len(), frames.len());
    Ok(rows)
}

// ---------------------------------------------------------------- coherence

/// Coherence factor of a channel file followed by gamma normalization.
pub fn cmd_coherence(
    channels: &Path,
    spacing: Spacing,
    gamma: f64,
    out: &Path,
) -> Result<GrayImage> {
    let frame = load_channel_frame(channels)?;
    let cf = coherence_factor(&frame, spacing)?;
    let img = gamma_normalize(&cf, gamma)?;
    save_gray(&img, out)?;
    info!(
        "{}: {}x{} coherence image, {} elements",
        channels.display(),
        frame.width(),
        frame.height(),
        frame.elements()
    );
    Ok(img)
}

// ------------------------------------------------------------------ compare

/// A frame to compare: identifier, target image, predicted image.
#[derive(Clone, Debug)]
pub struct ComparePair {
    pub frame_id: String,
    pub target: PathBuf,
    pub pred: PathBuf,
}

pub fn cmd_compare(pairs: &[ComparePair], out: &Path) -> Result<ComparisonReport> {
    if pairs.is_empty() {
        return Err(Error::InvalidInput("nothing to compare".into()));
    }
    let frames = pairs
        .par_iter()
        .map(|p| {
            let t = load_gray(&p.target, Spacing::default())?;
            let q = load_gray(&p.pred, Spacing::default())?;
            compare_frame(&p.frame_id, &t, &q)
        })
        .collect::<Result<Vec<_>>>()?;
    let report = ComparisonReport::new(frames);
    write_text(out, &format!("{}\n", report.to_json()))?;
    Ok(report)
}

// ----------------------------------------------------------------- evaluate

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

/// Assignment of frames to training, validation and test sets.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

impl SplitManifest {
    pub fn load(path: impl AsRef<Path>) -> Result<SplitManifest> {
        let path = path.as_ref();
        serde_json::from_slice(&read_file(path)?)
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))
    }

    /// Frame to split. A frame listed in two splits (or twice in one) is a
    /// validation error.
    pub fn assignment(&self) -> Result<BTreeMap<String, Split>> {
        let mut out = BTreeMap::new();
        for (split, ids) in [
            (Split::Train, &self.train),
            (Split::Val, &self.val),
            (Split::Test, &self.test),
        ] {
            for id in ids {
                if let Some(prev) = out.insert(id.clone(), split) {
                    return Err(Error::Validation(format!(
                        "split leakage: frame {id} is in both {prev:?} and {split:?}"
                    )));
                }
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct EvaluateOptions {
    pub wilcoxon: bool,
    /// Embeds the generation time; off by default so reruns are
    /// byte-identical.
    pub timestamp: bool,
}

/// Schema tag of evaluation reports.
pub const EVALUATION_FORMAT: &str = "echoiq-evaluation/1";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SplitCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnnotatorAgreement {
    pub annotator: u32,
    #[serde(flatten)]
    pub stats: AgreementStats,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricEvaluation {
    pub metric: MetricName,
    pub calibration: LinearCalibration,
    /// (region, annotator) samples the calibration was fitted on.
    pub fit_samples: usize,
    /// Calibrated metric against all annotators, pooled.
    pub test: AgreementStats,
    pub per_annotator: Vec<AnnotatorAgreement>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WilcoxonComparison {
    pub a: MetricName,
    pub b: MetricName,
    /// Paired absolute errors of the two methods on shared samples.
    pub samples: usize,
    pub result: Option<WilcoxonResult>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub format: String,
    pub frames: SplitCounts,
    pub annotators: Vec<u32>,
    pub metrics: Vec<MetricEvaluation>,
    /// Test-set agreement between annotators, when at least two label
    /// the same regions.
    pub inter_observer: Option<AgreementStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wilcoxon: Option<Vec<WilcoxonComparison>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_at_unix: Option<u64>,
}

impl EvaluationReport {
    pub fn to_json(&self) -> String {
        to_json_line(self)
    }
}

/// Test-set predictions of one metric, calibrated on train + validation.
struct MethodOutcome {
    eval: MetricEvaluation,
    /// Absolute error per (tuple, annotator) test sample.
    errors: BTreeMap<(Tuple, u32), f64>,
}

fn evaluate_metric(
    name: MetricName,
    values: &BTreeMap<Tuple, f64>,
    labels: &[QualityRecord],
    split_of: &BTreeMap<String, Split>,
) -> Result<Option<MethodOutcome>> {
    let is = |t: &Tuple, pred: fn(Split) -> bool| split_of.get(&t.0).is_some_and(|s| pred(*s));
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for r in labels {
        let t = (r.frame_id.clone(), r.region_id);
        if let (true, Some(&v)) = (is(&t, |s| s != Split::Test), values.get(&t)) {
            x.push(v);
            y.push(r.score);
        }
    }
    if x.is_empty() {
        warn!("{}: no labelled training samples; skipped", name.as_str());
        return Ok(None);
    }
    let calibration = match fit_linear(&x, &y) {
        Ok(c) => c,
        Err(e) => {
            warn!("{}: cannot calibrate ({e}); skipped", name.as_str());
            return Ok(None);
        }
    };

    let test_labels: Vec<QualityRecord> = labels
        .iter()
        .filter(|r| {
            let t = (r.frame_id.clone(), r.region_id);
            is(&t, |s| s == Split::Test) && values.contains_key(&t)
        })
        .cloned()
        .collect();
    let uncovered = labels
        .iter()
        .filter(|r| {
            let t = (r.frame_id.clone(), r.region_id);
            is(&t, |s| s == Split::Test) && !values.contains_key(&t)
        })
        .count();
    if uncovered > 0 {
        warn!(
            "{}: {uncovered} test labels have no metric value and are ignored",
            name.as_str()
        );
    }
    if test_labels.is_empty() {
        warn!("{}: no labelled test samples; skipped", name.as_str());
        return Ok(None);
    }
    let tuples: BTreeSet<Tuple> = test_labels
        .iter()
        .map(|r| (r.frame_id.clone(), r.region_id))
        .collect();
    let method: Vec<QualityRecord> = tuples
        .iter()
        .map(|t| QualityRecord {
            frame_id: t.0.clone(),
            region_id: t.1,
            source: Source::Method(name.as_str().into()),
            score: apply_calibration(&calibration, values[t]),
        })
        .collect();
    let test = method_vs_observers(&method, &test_labels)?.stats()?;

    let mut per_annotator = Vec::new();
    let mut errors = BTreeMap::new();
    let annotators: BTreeSet<u32> = test_labels.iter().filter_map(annotator_of).collect();
    for k in annotators {
        let own: Vec<QualityRecord> = test_labels
            .iter()
            .filter(|r| annotator_of(r) == Some(k))
            .cloned()
            .collect();
        per_annotator.push(AnnotatorAgreement {
            annotator: k,
            stats: method_vs_observers(&method, &own)?.stats()?,
        });
    }
    for r in &test_labels {
        let t = (r.frame_id.clone(), r.region_id);
        let pred = apply_calibration(&calibration, values[&t]);
        errors.insert((t, annotator_of(r).unwrap_or(0)), (pred - r.score).abs());
    }
    Ok(Some(MethodOutcome {
        eval: MetricEvaluation {
            metric: name,
            calibration,
            fit_samples: x.len(),
            test,
            per_annotator,
        },
        errors,
    }))
}

fn annotator_of(r: &QualityRecord) -> Option<u32> {
    match r.source {
        Source::Annotator(k) => Some(k),
        Source::Method(_) => None,
    }
}

/// Calibrates every metric on train + validation frames and reports its
/// agreement with the annotators on the test frames.
pub fn evaluate(
    rows: &[MetricVector],
    labels: &[QualityRecord],
    splits: &SplitManifest,
    options: EvaluateOptions,
) -> Result<EvaluationReport> {
    let split_of = splits.assignment()?;
    if splits.test.is_empty() {
        return Err(Error::Validation(
            "the split manifest has no test frames".into(),
        ));
    }
    let mut values: BTreeMap<MetricName, BTreeMap<Tuple, f64>> = BTreeMap::new();
    let mut seen = BTreeSet::new();
    let mut unsplit = BTreeSet::new();
    for row in rows {
        let t = (row.frame_id.clone(), row.region_id);
        if !seen.insert(t.clone()) {
            return Err(Error::Validation(format!(
                "metrics for {} {} listed twice",
                t.0, t.1
            )));
        }
        if !split_of.contains_key(&t.0) {
            unsplit.insert(t.0.clone());
            continue;
        }
        for name in MetricName::ALL {
            if let Some(v) = row.metric(name) {
                values.entry(name).or_default().insert(t.clone(), v);
            }
        }
    }
    if !unsplit.is_empty() {
        warn!(
            "{} frames with metrics are in no split and are ignored",
            unsplit.len()
        );
    }
    let labels: Vec<QualityRecord> = labels
        .iter()
        .filter(|r| split_of.contains_key(&r.frame_id))
        .cloned()
        .collect();
    let annotators: Vec<u32> = labels
        .iter()
        .filter_map(annotator_of)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if annotators.is_empty() {
        return Err(Error::InvalidInput(
            "no annotations for frames in the split manifest".into(),
        ));
    }

    let outcomes: Vec<MethodOutcome> = values
        .iter()
        .map(|(&name, v)| evaluate_metric(name, v, &labels, &split_of))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();

    let test_labels: Vec<QualityRecord> = labels
        .iter()
        .filter(|r| split_of.get(&r.frame_id) == Some(&Split::Test))
        .cloned()
        .collect();
    let inter = if annotators.len() >= 2 {
        match inter_observer(&test_labels) {
            Ok(p) => Some(p.stats()?),
            Err(e) => {
                warn!("inter-observer section skipped: {e}");
                None
            }
        }
    } else {
        None
    };

    let wilcoxon = options.wilcoxon.then(|| {
        let mut out = Vec::new();
        for (i, a) in outcomes.iter().enumerate() {
            for b in &outcomes[i + 1..] {
                let (ea, eb): (Vec<f64>, Vec<f64>) = a
                    .errors
                    .iter()
                    .filter_map(|(k, &x)| b.errors.get(k).map(|&y| (x, y)))
                    .unzip();
                let result = wilcoxon_signed_rank(&ea, &eb)
                    .inspect_err(|e| {
                        warn!(
                            "Wilcoxon {} vs {}: {e}",
                            a.eval.metric.as_str(),
                            b.eval.metric.as_str()
                        )
                    })
                    .ok();
                out.push(WilcoxonComparison {
                    a: a.eval.metric,
                    b: b.eval.metric,
                    samples: ea.len(),
                    result,
                });
            }
        }
        out
    });

    let count = |s: Split| split_of.values().filter(|&&v| v == s).count();
    Ok(EvaluationReport {
        format: EVALUATION_FORMAT.into(),
        frames: SplitCounts {
            train: count(Split::Train),
            val: count(Split::Val),
            test: count(Split::Test),
        },
        annotators,
        metrics: outcomes.into_iter().map(|o| o.eval).collect(),
        inter_observer: inter,
        wilcoxon,
        generated_at_unix: options.timestamp.then(|| {
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        }),
    })
}

/// File-level wrapper of [`evaluate`]: metric CSVs are concatenated.
pub fn cmd_evaluate(
    metrics: &[PathBuf],
    annotations: &Path,
    splits: &Path,
    options: EvaluateOptions,
    out: &Path,
) -> Result<EvaluationReport> {
    if metrics.is_empty() {
        return Err(Error::InvalidInput(
            "at least one metrics CSV is required".into(),
        ));
    }
    let splits = SplitManifest::load(splits)?;
    let rows: Vec<MetricVector> = metrics
        .iter()
        .map(load_metrics_csv)
        .collect::<Result<Vec<_>>>()?
        .concat();
    let labels = load_annotations_csv(annotations)?;
    let report = evaluate(&rows, &labels, &splits, options)?;
    write_text(out, &report.to_json())?;
    info!(
        "evaluated {} metrics on {} test frames",
        report.metrics.len(),
        report.frames.test
    );
    Ok(report)
}

// ------------------------------------------------------------------ phantom

#[derive(Clone, Debug)]
pub struct CorpusJob {
    pub out_dir: PathBuf,
    pub frames: usize,
    pub width: usize,
    pub height: usize,
    /// Channel count of the synthetic channel data; 0 writes none.
    pub elements: usize,
    pub annotators: u32,
    pub seed: u64,
}

impl CorpusJob {
    pub fn new(out_dir: impl Into<PathBuf>, frames: usize, seed: u64) -> CorpusJob {
        CorpusJob {
            out_dir: out_dir.into(),
            frames,
            width: 96,
            height: 96,
            elements: 0,
            annotators: 3,
            seed,
        }
    }
}

/// Files written by [`cmd_phantom`].
#[derive(Clone, Debug)]
pub struct CorpusFiles {
    pub manifest: PathBuf,
    pub splits: PathBuf,
    pub annotations: PathBuf,
    /// True per-region quality the annotations scatter around.
    pub truth: PathBuf,
    pub corpus: Corpus,
}

/// Standard deviation of annotator noise around the true quality.
pub const ANNOTATOR_NOISE: f64 = 0.45;

/// MYO speckle mean for a quality level; LV lumen speckle has mean 30.
pub fn myo_intensity(quality: u8) -> ClassIntensity {
    ClassIntensity {
        mean: 25.0 + 18.0 * quality as f64,
        std: 14.0,
    }
}

/// Prescribed coherence factor for MYO of a quality level.
pub fn myo_coherence(quality: u8) -> f64 {
    0.15 + 0.15 * quality as f64
}

struct PhantomFrame {
    spec: FrameSpec,
    truth: Vec<(RegionId, Option<u8>)>,
    labels: Vec<(RegionId, u32, Option<u8>)>,
}

fn split_for(index: usize) -> Split {
    match index % 5 {
        3 => Split::Val,
        4 => Split::Test,
        _ => Split::Train,
    }
}

fn phantom_frame(job: &CorpusJob, index: usize) -> Result<PhantomFrame> {
    let rng = CounterRng::new(job.seed).with_stream(0xF000 + index as u64);
    let mut c = RngCursor::new(rng);
    let view = [View::A2c, View::A4c, View::Alax][index % 3];
    let spacing = Spacing::new(c.range(0.25, 0.5), c.range(0.25, 0.5))?;
    let sub_seed = rng.u64_at(1 << 32);
    let params = ChamberParams::random(
        view,
        job.width,
        job.height,
        spacing,
        index % 2 == 1,
        sub_seed,
    );
    let mask = gen_chamber_phantom(&params)?;
    let regions = regions_for(&mask, view, ANNULUS_RADIUS_MM)?;

    let base = 1 + c.below(5) as i64;
    let mut quality: BTreeMap<RegionId, u8> = BTreeMap::new();
    for id in RegionId::SEGMENTS {
        let q = (base + c.below(3) as i64 - 1).clamp(1, 5) as u8;
        quality.insert(id, q);
    }
    quality.insert(RegionId::AnnulusLeft, quality[&RegionId::BasalLeft]);
    quality.insert(RegionId::AnnulusRight, quality[&RegionId::BasalRight]);

    let (w, h) = mask.dims();
    let mut segment_quality = vec![3u8; w * h];
    for id in RegionId::SEGMENTS {
        for i in regions.regions[&id].mask.indices() {
            segment_quality[i] = quality[&id];
        }
    }
    let bmode = fill_intensity(
        &mask,
        &|r, col| myo_intensity(segment_quality[r * w + col]),
        rng.u64_at((1 << 32) + 1),
    )?;

    let id = format!("frame{index:04}");
    let dir = job.out_dir.join("frames");
    let file = |suffix: &str| PathBuf::from(format!("frames/{id}_{suffix}"));
    save_gray(&bmode, dir.join(format!("{id}_bmode.pgm")))?;
    save_label_mask(
        &mask,
        &dir.join(format!("{id}_labels.pgm")),
        &dir.join(format!("{id}_sector.pgm")),
    )?;

    let (mut coherence, mut channels) = (None, None);
    if job.elements > 0 {
        let map: Vec<f64> = (0..w * h)
            .map(|i| {
                let (r, col) = (i / w, i % w);
                if !mask.sector().get(r, col) {
                    return 0.05;
                }
                match mask.label(r, col) {
                    Label::Myo => myo_coherence(segment_quality[i]),
                    Label::Lv => 0.1,
                    Label::La | Label::Ao => 0.12,
                    Label::Background => 0.35,
                }
            })
            .collect();
        let frame = gen_channel_phantom(
            w,
            h,
            job.elements,
            &CoherenceProfile::Map(map),
            rng.u64_at((1 << 32) + 2),
        )?;
        save_channel_frame(&frame, dir.join(format!("{id}_channels.chdf")))?;
        let coh = gamma_normalize(&coherence_factor(&frame, spacing)?, 0.5)?;
        save_gray(&coh, dir.join(format!("{id}_coherence.cimg")))?;
        channels = Some(file("channels.chdf"));
        coherence = Some(file("coherence.cimg"));
    }

    let mut truth = Vec::new();
    let mut labels = Vec::new();
    for (rid, region) in regions.iter() {
        let q = (!region.excluded && !region.mask.is_empty()).then(|| quality[&rid]);
        truth.push((rid, q));
        for k in 1..=job.annotators {
            let label = q.map(|q| {
                let noisy = q as f64 + ANNOTATOR_NOISE * c.normal();
                round_half_up(noisy.clamp(MIN_SCORE, MAX_SCORE)) as u8
            });
            labels.push((rid, k, label));
        }
    }

    let (bmode, labels_path, sector) = (file("bmode.pgm"), file("labels.pgm"), file("sector.pgm"));
    Ok(PhantomFrame {
        spec: FrameSpec {
            id,
            view: Some(view),
            spacing,
            bmode,
            labels: labels_path,
            sector: Some(sector),
            regions: None,
            coherence,
            channels,
        },
        truth,
        labels,
    })
}

/// Writes a synthetic corpus: chamber phantoms whose MYO contrast (and
/// coherence, with channel data) follows a per-segment quality level, noisy
/// annotations of those levels, a split manifest and the corpus manifest.
pub fn cmd_phantom(job: &CorpusJob) -> Result<CorpusFiles> {
    if job.frames == 0 {
        return Err(Error::InvalidInput(
            "a corpus needs at least one frame".into(),
        ));
    }
    let frames: Vec<PhantomFrame> = (0..job.frames)
        .into_par_iter()
        .map(|i| phantom_frame(job, i))
        .collect::<Result<_>>()?;

    let csv_err = |e: csv::Error| Error::Format(format!("CSV: {e}"));
    let mut ann = csv::Writer::from_writer(Vec::new());
    ann.write_record(["frame_id", "region_id", "annotator", "label"])
        .map_err(csv_err)?;
    let mut truth = csv::Writer::from_writer(Vec::new());
    truth
        .write_record(["frame_id", "region_id", "quality"])
        .map_err(csv_err)?;
    let mut splits = SplitManifest::default();
    for (i, f) in frames.iter().enumerate() {
        for (rid, k, label) in &f.labels {
            let label = label.map_or("oos".to_string(), |l| l.to_string());
            ann.write_record([f.spec.id.as_str(), rid.as_str(), &k.to_string(), &label])
                .map_err(csv_err)?;
        }
        for (rid, q) in &f.truth {
            let q = q.map_or("oos".to_string(), |q| q.to_string());
            truth
                .write_record([f.spec.id.as_str(), rid.as_str(), &q])
                .map_err(csv_err)?;
        }
        match split_for(i) {
            Split::Train => splits.train.push(f.spec.id.clone()),
            Split::Val => splits.val.push(f.spec.id.clone()),
            Split::Test => splits.test.push(f.spec.id.clone()),
        }
    }
    let into_bytes = |w: csv::Writer<Vec<u8>>| {
        w.into_inner()
            .map_err(|e| Error::Format(format!("CSV: {e}")))
    };

    let files = CorpusFiles {
        manifest: job.out_dir.join("manifest.json"),
        splits: job.out_dir.join("splits.json"),
        annotations: job.out_dir.join("annotations.csv"),
        truth: job.out_dir.join("truth.csv"),
        corpus: Corpus::new(frames.into_iter().map(|f| f.spec).collect()),
    };
    write_file(&files.annotations, &into_bytes(ann)?)?;
    write_file(&files.truth, &into_bytes(truth)?)?;
    write_text(&files.splits, &to_json_line(&splits))?;
    files.corpus.save(&files.manifest)?;
    info!(
        "{} phantom frames written to {}",
        job.frames,
        job.out_dir.display()
    );
    Ok(files)
}
