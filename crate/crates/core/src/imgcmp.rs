//! Image-to-image comparison: relative pixel error (RPE), PSNR and SSIM.
//!
//! Used to score predicted coherence images against targets. SSIM uses the
//! usual 11×11 Gaussian window (σ = 1.5) with `C1 = (0.01 L)²`,
//! `C2 = (0.03 L)²`, `L = 1`, and symmetric (half-sample) boundary
//! reflection, averaged over every pixel.

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::imaging::{Domain, GrayImage};

pub const RPE_EPSILON: f64 = 1e-4;
pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

fn same_dims(a: &GrayImage, b: &GrayImage) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch {
            expected: a.dims(),
            actual: b.dims(),
        });
    }
    Ok(())
}

/// Mean of `|t − p| / max(t, ε)` over all pixels. Not symmetric in its
/// arguments: the target sets the scale.
pub fn rpe(target: &GrayImage, pred: &GrayImage, epsilon: f64) -> Result<f64> {
    same_dims(target, pred)?;
    if target.domain() != Domain::Coherence || pred.domain() != Domain::Coherence {
        return Err(Error::InvalidInput(
            "RPE compares coherence-domain images".into(),
        ));
    }
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "RPE epsilon must be positive, got {epsilon}"
        )));
    }
    let sum: f64 = target
        .pixels()
        .iter()
        .zip(pred.pixels())
        .map(|(&t, &p)| (t - p).abs() / t.max(epsilon))
        .sum();
    Ok(sum / target.pixels().len() as f64)
}

/// `10 log10(max² / MSE)` in dB; `f64::INFINITY` for identical images.
pub fn psnr(target: &GrayImage, pred: &GrayImage, max_value: f64) -> Result<f64> {
    same_dims(target, pred)?;
    if max_value.is_nan() || max_value <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "PSNR peak must be positive, got {max_value}"
        )));
    }
    let sse: f64 = target
        .pixels()
        .iter()
        .zip(pred.pixels())
        .map(|(&t, &p)| (t - p) * (t - p))
        .sum();
    if sse == 0.0 {
        return Ok(f64::INFINITY);
    }
    let mse = sse / target.pixels().len() as f64;
    Ok(10.0 * (max_value * max_value / mse).log10())
}

/// Normalized 1-D Gaussian taps of the SSIM window.
pub fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let half = (SSIM_WINDOW / 2) as f64;
    let mut w = [0.0; SSIM_WINDOW];
    for (i, v) in w.iter_mut().enumerate() {
        let x = i as f64 - half;
        *v = (-x * x / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let sum: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= sum);
    w
}

/// Half-sample symmetric reflection: `… b a | a b c … y z | z y …`.
pub(crate) fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let m = i.rem_euclid(period);
    (if m < n { m } else { period - 1 - m }) as usize
}

/// Separable Gaussian filtering of `data` (row-major `w × h`).
fn blur(data: &[f64], w: usize, h: usize, taps: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let half = (SSIM_WINDOW / 2) as isize;
    let mut tmp = vec![0.0; w * h];
    tmp.par_chunks_mut(w).enumerate().for_each(|(r, row)| {
        let src = &data[r * w..(r + 1) * w];
        for (c, out) in row.iter_mut().enumerate() {
            *out = taps
                .iter()
                .enumerate()
                .map(|(k, t)| t * src[reflect(c as isize + k as isize - half, w)])
                .sum();
        }
    });
    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(r, row)| {
        for (c, o) in row.iter_mut().enumerate() {
            *o = taps
                .iter()
                .enumerate()
                .map(|(k, t)| t * tmp[reflect(r as isize + k as isize - half, h) * w + c])
                .sum();
        }
    });
    out
}

/// Mean structural similarity over all pixels, in `[-1, 1]`.
pub fn ssim(target: &GrayImage, pred: &GrayImage) -> Result<f64> {
    same_dims(target, pred)?;
    let (w, h) = target.dims();
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::InvalidInput(format!(
            "SSIM needs images of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {w}x{h}"
        )));
    }
    let taps = gaussian_window();
    let x = target.pixels();
    let y = pred.pixels();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(y).map(|(a, b)| a * b).collect();
    let mx = blur(x, w, h, &taps);
    let my = blur(y, w, h, &taps);
    let sxx = blur(&xx, w, h, &taps);
    let syy = blur(&yy, w, h, &taps);
    let sxy = blur(&xy, w, h, &taps);
    let c1 = SSIM_K1 * SSIM_K1;
    let c2 = SSIM_K2 * SSIM_K2;
    let total: f64 = (0..w * h)
        .map(|i| {
            let (ux, uy) = (mx[i], my[i]);
            let vx = sxx[i] - ux * ux;
            let vy = syy[i] - uy * uy;
            let cov = sxy[i] - ux * uy;
            ((2.0 * ux * uy + c1) * (2.0 * cov + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2))
        })
        .sum();
    Ok((total / (w * h) as f64).clamp(-1.0, 1.0))
}

// ------------------------------------------------------------------ reports

/// Serializes finite values as numbers, infinities as `"inf"` / `"-inf"`
/// and NaN as `null`.
fn ser_real<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if v.is_nan() {
        s.serialize_none()
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrameComparison {
    pub frame_id: String,
    pub ssim: f64,
    #[serde(serialize_with = "ser_real")]
    pub psnr_db: f64,
    pub rpe: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeanStd {
    #[serde(serialize_with = "ser_real")]
    pub mean: f64,
    #[serde(serialize_with = "ser_real")]
    pub std: f64,
}

impl MeanStd {
    /// Mean and population standard deviation. With any infinite value the
    /// mean is that infinity and the spread is undefined (NaN).
    pub fn of(values: &[f64]) -> MeanStd {
        if values.is_empty() {
            return MeanStd {
                mean: f64::NAN,
                std: f64::NAN,
            };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        if !mean.is_finite() {
            let all_same = values.iter().all(|v| *v == values[0]);
            return MeanStd {
                mean,
                std: if all_same { 0.0 } else { f64::NAN },
            };
        }
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        MeanStd {
            mean,
            std: var.sqrt(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonAggregate {
    pub frames: usize,
    pub ssim: MeanStd,
    pub psnr_db: MeanStd,
    pub rpe: MeanStd,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub frames: Vec<FrameComparison>,
    pub aggregate: ComparisonAggregate,
}

pub fn compare_frame(
    frame_id: &str,
    target: &GrayImage,
    pred: &GrayImage,
) -> Result<FrameComparison> {
    Ok(FrameComparison {
        frame_id: frame_id.to_string(),
        ssim: ssim(target, pred)?,
        psnr_db: psnr(target, pred, 1.0)?,
        rpe: rpe(target, pred, RPE_EPSILON)?,
    })
}

impl ComparisonReport {
    pub fn new(frames: Vec<FrameComparison>) -> ComparisonReport {
        let col = |f: fn(&FrameComparison) -> f64| frames.iter().map(f).collect::<Vec<_>>();
        let aggregate = ComparisonAggregate {
            frames: frames.len(),
            ssim: MeanStd::of(&col(|f| f.ssim)),
            psnr_db: MeanStd::of(&col(|f| f.psnr_db)),
            rpe: MeanStd::of(&col(|f| f.rpe)),
        };
        ComparisonReport { frames, aggregate }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
