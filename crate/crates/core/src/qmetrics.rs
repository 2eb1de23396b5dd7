//! Regional quality metrics: pixel intensity, contrast ratio (CR),
//! contrast-to-noise ratio (CNR), generalized CNR (gCNR) and local coherence.
//!
//! Every myocardial or annulus region is compared against the whole
//! sector-clipped LV lumen.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{histogram, Domain, GrayImage, Histogram, Label, LabelMask, Mask};
use crate::regions::{RegionId, RegionSet};

/// Population mean and standard deviation of a pixel set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegionStats {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

impl RegionStats {
    /// Stats of an arbitrary sample (two-pass).
    pub fn from_values(values: &[f64]) -> Result<RegionStats> {
        if values.is_empty() {
            return Err(Error::EmptyRegion("no pixels in region".into()));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Ok(RegionStats {
            mean,
            std: var.sqrt(),
            count: values.len(),
        })
    }
}

fn masked_values(img: &GrayImage, mask: &Mask) -> Result<Vec<f64>> {
    mask.check_dims(img.dims())?;
    Ok(mask.indices().map(|i| img.pixels()[i]).collect())
}

pub fn region_stats(img: &GrayImage, mask: &Mask) -> Result<RegionStats> {
    RegionStats::from_values(&masked_values(img, mask)?)
}

/// `μ_roi / μ_bg`.
pub fn contrast_ratio(roi: &RegionStats, bg: &RegionStats) -> Result<f64> {
    if bg.mean == 0.0 {
        return Err(Error::InvalidInput(
            "contrast ratio undefined for zero background mean".into(),
        ));
    }
    Ok(roi.mean / bg.mean)
}

/// `(μ_roi − μ_bg) / sqrt(σ_roi² + σ_bg²)`.
pub fn cnr(roi: &RegionStats, bg: &RegionStats) -> Result<f64> {
    let var = roi.std * roi.std + bg.std * bg.std;
    if var <= 0.0 {
        return Err(Error::InvalidInput(
            "CNR undefined when both regions have zero variance".into(),
        ));
    }
    Ok((roi.mean - bg.mean) / var.sqrt())
}

/// Generalized CNR: one minus the overlap of the two normalized intensity
/// distributions, `1 − Σᵢ min(p_roi(i), p_bg(i))`.
///
/// 0 for identical distributions, 1 for disjoint ones. Equivalently this is
/// half the L1 distance between the two densities, i.e. the best accuracy
/// above chance of a threshold classifier on intensity.
pub fn gcnr(roi: &Histogram, bg: &Histogram) -> f64 {
    // Σ min(a/A, b/B) = Σ min(a·B, b·A) / (A·B), summed exactly so that
    // identical histograms give 0 and disjoint ones 1 without rounding.
    let (ta, tb) = (roi.total() as u128, bg.total() as u128);
    let shared: u128 = roi
        .bins()
        .iter()
        .zip(bg.bins())
        .map(|(&a, &b)| (a as u128 * tb).min(b as u128 * ta))
        .sum();
    1.0 - shared as f64 / (ta * tb) as f64
}

/// Mean coherence over the masked pixels of a (gamma-normalized) coherence
/// image.
pub fn local_coherence(coh: &GrayImage, mask: &Mask) -> Result<f64> {
    if coh.domain() != Domain::Coherence {
        return Err(Error::InvalidInput(
            "local coherence requires a coherence-domain image".into(),
        ));
    }
    Ok(region_stats(coh, mask)?.mean)
}

/// Metrics of one region of one frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricVector {
    pub frame_id: String,
    pub region_id: RegionId,
    pub intensity: f64,
    pub cr: f64,
    pub cnr: f64,
    pub gcnr: f64,
    pub coherence: Option<f64>,
}

impl MetricVector {
    /// Value of a named metric column.
    pub fn metric(&self, name: MetricName) -> Option<f64> {
        match name {
            MetricName::Intensity => Some(self.intensity),
            MetricName::Cr => Some(self.cr),
            MetricName::Cnr => Some(self.cnr),
            MetricName::Gcnr => Some(self.gcnr),
            MetricName::Coherence => self.coherence,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricName {
    Intensity,
    Cr,
    Cnr,
    Gcnr,
    Coherence,
}

impl MetricName {
    pub const ALL: [MetricName; 5] = [
        MetricName::Intensity,
        MetricName::Cr,
        MetricName::Cnr,
        MetricName::Gcnr,
        MetricName::Coherence,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricName::Intensity => "intensity",
            MetricName::Cr => "cr",
            MetricName::Cnr => "cnr",
            MetricName::Gcnr => "gcnr",
            MetricName::Coherence => "coherence",
        }
    }
}

/// Metrics for every non-excluded, non-empty region of a frame.
///
/// `bmode` is expected to be histogram-matched already. The background is
/// the sector-clipped LV lumen of `mask`. Output is in region order.
pub fn compute_metric_vector(
    frame_id: &str,
    bmode: &GrayImage,
    coh: Option<&GrayImage>,
    mask: &LabelMask,
    regions: &RegionSet,
) -> Result<Vec<MetricVector>> {
    let dims = bmode.dims();
    if mask.dims() != dims {
        return Err(Error::DimensionMismatch {
            expected: dims,
            actual: mask.dims(),
        });
    }
    if let Some(c) = coh {
        if c.dims() != dims {
            return Err(Error::DimensionMismatch {
                expected: dims,
                actual: c.dims(),
            });
        }
    }
    if (regions.width, regions.height) != dims {
        return Err(Error::DimensionMismatch {
            expected: dims,
            actual: (regions.width, regions.height),
        });
    }
    let lumen = mask.clipped_class_mask(Label::Lv);
    if lumen.is_empty() {
        return Err(Error::EmptyRegion(
            "LV lumen is empty inside the sector".into(),
        ));
    }
    let bg_stats = region_stats(bmode, &lumen)?;
    let bg_hist = histogram(bmode, &lumen)?;

    let active: Vec<_> = regions
        .iter()
        .filter(|(_, r)| !r.excluded && !r.mask.is_empty())
        .collect();
    active
        .par_iter()
        .map(|(id, region)| {
            let stats = region_stats(bmode, &region.mask)?;
            let hist = histogram(bmode, &region.mask)?;
            Ok(MetricVector {
                frame_id: frame_id.to_string(),
                region_id: *id,
                intensity: stats.mean,
                cr: contrast_ratio(&stats, &bg_stats)?,
                cnr: cnr(&stats, &bg_stats)?,
                gcnr: gcnr(&hist, &bg_hist),
                coherence: coh.map(|c| local_coherence(c, &region.mask)).transpose()?,
            })
        })
        .collect()
}

// ---------------------------------------------------------------------- CSV

pub const METRICS_HEADER: [&str; 7] = [
    "frame_id",
    "region_id",
    "intensity",
    "cr",
    "cnr",
    "gcnr",
    "coherence",
];

/// Writes metric rows as CSV in the given order. The coherence column is
/// empty when absent.
pub fn write_metrics_csv<W: Write>(out: W, rows: &[MetricVector]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Format(format!("metrics CSV: {e}"));
    w.write_record(METRICS_HEADER).map_err(csv_err)?;
    for row in rows {
        w.write_record([
            row.frame_id.clone(),
            row.region_id.to_string(),
            row.intensity.to_string(),
            row.cr.to_string(),
            row.cnr.to_string(),
            row.gcnr.to_string(),
            row.coherence.map(|c| c.to_string()).unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()
        .map_err(|e| Error::Format(format!("metrics CSV: {e}")))
}

pub fn metrics_csv_string(rows: &[MetricVector]) -> Result<String> {
    let mut buf = Vec::new();
    write_metrics_csv(&mut buf, rows)?;
    Ok(String::from_utf8(buf).expect("CSV output is UTF-8"))
}

pub fn read_metrics_csv(data: &[u8]) -> Result<Vec<MetricVector>> {
    let mut rdr = csv::Reader::from_reader(data);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Format(format!("metrics CSV: {e}")))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != METRICS_HEADER {
        return Err(Error::Format(format!(
            "metrics CSV header must be {}",
            METRICS_HEADER.join(",")
        )));
    }
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Format(format!("metrics CSV: {e}")))?;
        let num = |i: usize| -> Result<f64> {
            rec[i].parse::<f64>().map_err(|_| {
                Error::Format(format!(
                    "metrics CSV row {}: invalid {} value {:?}",
                    line + 2,
                    METRICS_HEADER[i],
                    &rec[i]
                ))
            })
        };
        out.push(MetricVector {
            frame_id: rec[0].to_string(),
            region_id: rec[1].parse()?,
            intensity: num(2)?,
            cr: num(3)?,
            cnr: num(4)?,
            gcnr: num(5)?,
            coherence: if rec[6].is_empty() {
                None
            } else {
                Some(num(6)?)
            },
        });
    }
    Ok(out)
}

pub fn load_metrics_csv(path: impl AsRef<Path>) -> Result<Vec<MetricVector>> {
    let path = path.as_ref();
    let data = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    read_metrics_csv(&data).map_err(|e| match e {
        Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
        other => other,
    })
}
