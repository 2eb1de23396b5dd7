//! Calibration of metrics to 1-5 quality labels and the evaluation
//! statistics built on it: Spearman correlation, MAE, accuracy,
//! inter-observer agreement, Wilcoxon signed-rank test and agreement by
//! quality category.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::regions::RegionId;

pub const MIN_SCORE: f64 = 1.0;
pub const MAX_SCORE: f64 = 5.0;

/// Who produced a score.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Annotator(u32),
    Method(String),
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Annotator(k) => write!(f, "annotator {k}"),
            Source::Method(name) => write!(f, "method {name}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityRecord {
    pub frame_id: String,
    pub region_id: RegionId,
    pub source: Source,
    pub score: f64,
}

/// Key of a labelled region of a frame.
pub type Tuple = (String, RegionId);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearCalibration {
    pub slope: f64,
    pub intercept: f64,
}

fn check_pairs(a: &[f64], b: &[f64], min: usize, what: &str) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput(format!(
            "{what}: length mismatch ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    if a.len() < min {
        return Err(Error::InvalidInput(format!(
            "{what}: need at least {min} pairs, got {}",
            a.len()
        )));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("{what}: non-finite value")));
    }
    Ok(())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Ordinary least squares fit of `labels ≈ slope · metric + intercept`.
pub fn fit_linear(metric: &[f64], labels: &[f64]) -> Result<LinearCalibration> {
    check_pairs(metric, labels, 2, "linear fit")?;
    let mx = mean(metric);
    let my = mean(labels);
    let sxx: f64 = metric.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput(
            "linear fit: metric values are all identical".into(),
        ));
    }
    let sxy: f64 = metric
        .iter()
        .zip(labels)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum();
    let slope = sxy / sxx;
    Ok(LinearCalibration {
        slope,
        intercept: my - slope * mx,
    })
}

/// Calibrated score, clamped to the label range.
pub fn apply_calibration(cal: &LinearCalibration, metric: f64) -> f64 {
    (cal.slope * metric + cal.intercept).clamp(MIN_SCORE, MAX_SCORE)
}

/// Nearest quality category with halves rounding up.
pub fn round_half_up(x: f64) -> f64 {
    (x + 0.5).floor()
}

/// 1-based ranks; tied values share the average of their ranks.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let mx = mean(x);
    let my = mean(y);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pairs(x, y, 2, "spearman")?;
    pearson(&average_ranks(x), &average_ranks(y))
        .ok_or_else(|| Error::InvalidInput("spearman: constant input".into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaeAccuracy {
    pub mae: f64,
    /// Population std of the absolute errors.
    pub mae_std: f64,
    pub accuracy: f64,
    pub n: usize,
}

/// Mean absolute error and the fraction of predictions whose rounded,
/// clamped value equals the reference label.
pub fn mae_accuracy(pred: &[f64], reference: &[f64]) -> Result<MaeAccuracy> {
    check_pairs(pred, reference, 1, "MAE")?;
    let errs: Vec<f64> = pred
        .iter()
        .zip(reference)
        .map(|(p, r)| (p - r).abs())
        .collect();
    let mae = mean(&errs);
    let var = errs.iter().map(|e| (e - mae) * (e - mae)).sum::<f64>() / errs.len() as f64;
    let hits = pred
        .iter()
        .zip(reference)
        .filter(|(p, r)| round_half_up(p.clamp(MIN_SCORE, MAX_SCORE)) == **r)
        .count();
    Ok(MaeAccuracy {
        mae,
        mae_std: var.sqrt(),
        accuracy: hits as f64 / pred.len() as f64,
        n: pred.len(),
    })
}

/// Paired scores behind an agreement analysis. `pred[i]` is compared with
/// `reference[i]`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PairedScores {
    pub pred: Vec<f64>,
    pub reference: Vec<f64>,
    /// Both orientations of every pair enter the rank correlation, so the
    /// result does not depend on which rater is listed first.
    pub symmetric: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgreementStats {
    pub n: usize,
    /// `None` when either side is constant.
    pub spearman: Option<f64>,
    pub mae: f64,
    pub mae_std: f64,
    pub accuracy: f64,
}

impl PairedScores {
    /// The error multiset `|pred − reference|`.
    pub fn abs_errors(&self) -> Vec<f64> {
        self.pred
            .iter()
            .zip(&self.reference)
            .map(|(p, r)| (p - r).abs())
            .collect()
    }

    pub fn signed_errors(&self) -> Vec<f64> {
        self.pred
            .iter()
            .zip(&self.reference)
            .map(|(p, r)| p - r)
            .collect()
    }

    pub fn len(&self) -> usize {
        self.pred.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pred.is_empty()
    }

    /// Union of two multisets; associative, and commutative up to order.
    pub fn merge(mut self, other: &PairedScores) -> PairedScores {
        self.pred.extend(&other.pred);
        self.reference.extend(&other.reference);
        self.symmetric &= other.symmetric;
        self
    }

    pub fn stats(&self) -> Result<AgreementStats> {
        let ma = mae_accuracy(&self.pred, &self.reference)?;
        let rho = if self.symmetric {
            let x: Vec<f64> = self.pred.iter().chain(&self.reference).copied().collect();
            let y: Vec<f64> = self.reference.iter().chain(&self.pred).copied().collect();
            spearman(&x, &y).ok()
        } else {
            spearman(&self.pred, &self.reference).ok()
        };
        Ok(AgreementStats {
            n: ma.n,
            spearman: rho,
            mae: ma.mae,
            mae_std: ma.mae_std,
            accuracy: ma.accuracy,
        })
    }
}

/// Annotator labels indexed by annotator, then by tuple.
fn by_annotator(records: &[QualityRecord]) -> Result<BTreeMap<u32, BTreeMap<Tuple, f64>>> {
    let mut out: BTreeMap<u32, BTreeMap<Tuple, f64>> = BTreeMap::new();
    for r in records {
        let Source::Annotator(k) = r.source else {
            return Err(Error::InvalidInput(format!(
                "expected annotator records, got {}",
                r.source
            )));
        };
        let key = (r.frame_id.clone(), r.region_id);
        if out.entry(k).or_default().insert(key, r.score).is_some() {
            return Err(Error::InvalidInput(format!(
                "annotator {k} labels {} {} twice",
                r.frame_id, r.region_id
            )));
        }
    }
    Ok(out)
}

/// Pairwise differences between annotators on the tuples labelled by all
/// of them: `e_12 ∪ e_13 ∪ e_23` for three annotators.
pub fn inter_observer(records: &[QualityRecord]) -> Result<PairedScores> {
    let labels = by_annotator(records)?;
    if labels.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "inter-observer analysis needs at least two annotators, got {}",
            labels.len()
        )));
    }
    let raters: Vec<&BTreeMap<Tuple, f64>> = labels.values().collect();
    let complete: Vec<&Tuple> = raters[0]
        .keys()
        .filter(|t| raters[1..].iter().all(|m| m.contains_key(*t)))
        .collect();
    if complete.is_empty() {
        return Err(Error::InvalidInput(
            "no region is labelled by every annotator".into(),
        ));
    }
    let mut out = PairedScores {
        symmetric: true,
        ..Default::default()
    };
    for i in 0..raters.len() {
        for j in i + 1..raters.len() {
            for t in &complete {
                out.pred.push(raters[i][*t]);
                out.reference.push(raters[j][*t]);
            }
        }
    }
    Ok(out)
}

/// Method scores against every annotator: `e_1M ∪ e_2M ∪ e_3M`.
pub fn method_vs_observers(
    method: &[QualityRecord],
    annotators: &[QualityRecord],
) -> Result<PairedScores> {
    let mut scores: BTreeMap<Tuple, f64> = BTreeMap::new();
    for r in method {
        if scores
            .insert((r.frame_id.clone(), r.region_id), r.score)
            .is_some()
        {
            return Err(Error::InvalidInput(format!(
                "method scores {} {} twice",
                r.frame_id, r.region_id
            )));
        }
    }
    let labels = by_annotator(annotators)?;
    let mut out = PairedScores::default();
    for tuples in labels.values() {
        for (t, &label) in tuples {
            let m = scores.get(t).ok_or_else(|| {
                Error::InvalidInput(format!("method has no score for {} {}", t.0, t.1))
            })?;
            out.pred.push(*m);
            out.reference.push(label);
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidInput(
            "method and annotators share no regions".into(),
        ));
    }
    Ok(out)
}

// ---------------------------------------------------------------- Wilcoxon

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// `min(W⁺, W⁻)`.
    pub statistic: f64,
    pub p_two_sided: f64,
    /// Number of non-zero differences.
    pub n: usize,
    pub exact: bool,
}

pub const WILCOXON_EXACT_MAX_N: usize = 20;

/// Two-sided Wilcoxon signed-rank test on paired samples.
///
/// Zero differences are dropped and tied magnitudes share average ranks.
/// Up to 20 pairs the p-value is exact (distribution of `W⁺` under random
/// signs, with the observed tied ranks); beyond that a normal approximation
/// with tie and continuity corrections is used.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    check_pairs(a, b, 1, "wilcoxon")?;
    let d: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x - y)
        .filter(|d| *d != 0.0)
        .collect();
    if d.is_empty() {
        return Err(Error::InvalidInput("no nonzero differences".into()));
    }
    let n = d.len();
    let ranks = average_ranks(&d.iter().map(|v| v.abs()).collect::<Vec<_>>());
    let w_plus: f64 = d
        .iter()
        .zip(&ranks)
        .filter(|(v, _)| **v > 0.0)
        .map(|(_, r)| r)
        .sum();
    let total = (n * (n + 1)) as f64 / 2.0;
    let w = w_plus.min(total - w_plus);

    if n <= WILCOXON_EXACT_MAX_N {
        // Doubled ranks are integers even with ties.
        let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
        let max: usize = doubled.iter().sum();
        let mut counts = vec![0u64; max + 1];
        counts[0] = 1;
        let mut reach = 0;
        for &r in &doubled {
            for s in (0..=reach).rev() {
                if counts[s] != 0 {
                    counts[s + r] += counts[s];
                }
            }
            reach += r;
        }
        let limit = (2.0 * w).round() as usize;
        let below: u64 = counts[..=limit].iter().sum();
        let p = 2.0 * below as f64 / (1u64 << n) as f64;
        return Ok(WilcoxonResult {
            statistic: w,
            p_two_sided: p.min(1.0),
            n,
            exact: true,
        });
    }

    let nf = n as f64;
    let mu = nf * (nf + 1.0) / 4.0;
    let mut tie_term = 0.0;
    let mut sorted = ranks.clone();
    sorted.sort_by(f64::total_cmp);
    let mut i = 0;
    while i < sorted.len() {
        let j = sorted[i..].iter().take_while(|r| **r == sorted[i]).count();
        let t = j as f64;
        tie_term += t * t * t - t;
        i += j;
    }
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    let z = ((w - mu + 0.5) / var.sqrt()).min(0.0);
    let p = 2.0 * Normal::standard().cdf(z);
    Ok(WilcoxonResult {
        statistic: w,
        p_two_sided: p.min(1.0),
        n,
        exact: false,
    })
}

// --------------------------------------------------- agreement by quality

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoryAgreement {
    pub category: u8,
    pub n: usize,
    /// Mean difference (bias); `None` for an empty category.
    pub mean: Option<f64>,
    /// Population std of the differences; `None` for an empty category.
    pub std: Option<f64>,
}

/// Groups measurement differences by rounded predicted quality (1-5).
pub fn agreement_by_quality(diffs: &[f64], quality: &[f64]) -> Result<[CategoryAgreement; 5]> {
    check_pairs(diffs, quality, 0, "agreement by quality")?;
    let mut groups: [Vec<f64>; 5] = Default::default();
    for (d, q) in diffs.iter().zip(quality) {
        let cat = round_half_up(q.clamp(MIN_SCORE, MAX_SCORE)) as usize;
        groups[cat - 1].push(*d);
    }
    Ok(std::array::from_fn(|k| {
        let g = &groups[k];
        let (m, s) = if g.is_empty() {
            (None, None)
        } else {
            let m = mean(g);
            let var = g.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / g.len() as f64;
            (Some(m), Some(var.sqrt()))
        };
        CategoryAgreement {
            category: k as u8 + 1,
            n: g.len(),
            mean: m,
            std: s,
        }
    }))
}

// ------------------------------------------------------------ annotations

/// Parses `frame_id,region_id,annotator,label`; rows labelled `oos` are
/// dropped.
pub fn read_annotations_csv(data: &[u8]) -> Result<Vec<QualityRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(data);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Format(format!("annotation CSV: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    if header != ["frame_id", "region_id", "annotator", "label"] {
        return Err(Error::Format(
            "annotation CSV header must be frame_id,region_id,annotator,label".into(),
        ));
    }
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::Format(format!("annotation CSV: {e}")))?;
        let annotator: u32 = rec[2].parse().map_err(|_| {
            Error::Format(format!(
                "annotation CSV line {line}: bad annotator {:?}",
                &rec[2]
            ))
        })?;
        let region_id: RegionId = rec[1].parse().map_err(|_| {
            Error::Format(format!(
                "annotation CSV line {line}: bad region {:?}",
                &rec[1]
            ))
        })?;
        if !seen.insert((rec[0].to_string(), region_id, annotator)) {
            return Err(Error::Format(format!(
                "annotation CSV line {line}: duplicate label for {} {region_id} by annotator {annotator}",
                &rec[0]
            )));
        }
        let label = &rec[3];
        if label.eq_ignore_ascii_case("oos") {
            continue;
        }
        let score = match label.parse::<u8>() {
            Ok(v @ 1..=5) => v as f64,
            _ => {
                return Err(Error::Format(format!(
                    "annotation CSV line {line}: label must be 1-5 or oos, got {label:?}"
                )))
            }
        };
        out.push(QualityRecord {
            frame_id: rec[0].to_string(),
            region_id,
            source: Source::Annotator(annotator),
            score,
        });
    }
    Ok(out)
}

pub fn load_annotations_csv(path: impl AsRef<Path>) -> Result<Vec<QualityRecord>> {
    let path = path.as_ref();
    let data = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    read_annotations_csv(&data)
}
