//! Synthetic fixtures with known ground truth: a two-class contrast phantom,
//! a parametric heart-chamber label map and channel data with prescribed
//! coherence.
//!
//! All randomness comes from [`CounterRng`], so every generator is a pure
//! function of its parameters and seed.

use std::f64::consts::PI;

use num_complex::Complex32;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::coherence::ChannelFrame;
use crate::error::{Error, Result};
use crate::imaging::{Domain, GrayImage, Label, LabelMask, Mask, Spacing};
use crate::regions::View;
use crate::rng::{CounterRng, RngCursor};

// ----------------------------------------------------------------- contrast

/// Two Gaussian intensity classes: an LV disk (background) inside a MYO
/// ring (ROI), each with roughly `pixels_per_region` pixels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContrastParams {
    pub roi_mean: f64,
    pub roi_std: f64,
    pub bg_mean: f64,
    pub bg_std: f64,
    pub pixels_per_region: usize,
}

impl ContrastParams {
    pub fn validate(&self) -> Result<()> {
        for (name, m) in [
            ("roi mean", self.roi_mean),
            ("background mean", self.bg_mean),
        ] {
            if !(0.0..=255.0).contains(&m) {
                return Err(Error::InvalidInput(format!("{name} {m} outside [0, 255]")));
            }
        }
        for (name, s) in [("roi std", self.roi_std), ("background std", self.bg_std)] {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be >= 0, got {s}")));
            }
        }
        if self.pixels_per_region < 16 {
            return Err(Error::InvalidInput(
                "contrast phantom needs at least 16 pixels per region".into(),
            ));
        }
        Ok(())
    }

    pub fn expected_cr(&self) -> f64 {
        self.roi_mean / self.bg_mean
    }

    pub fn expected_cnr(&self) -> f64 {
        (self.roi_mean - self.bg_mean) / (self.roi_std.powi(2) + self.bg_std.powi(2)).sqrt()
    }

    /// gCNR of the two continuous (unclamped) Gaussians.
    pub fn expected_gcnr(&self) -> f64 {
        let p = level_probabilities(self.roi_mean, self.roi_std);
        let q = level_probabilities(self.bg_mean, self.bg_std);
        let overlap: f64 = p.iter().zip(&q).map(|(a, b)| a.min(*b)).sum();
        1.0 - overlap
    }
}

/// Probability of each 8-bit level for `round(clamp(N(mean, std)))`.
pub fn level_probabilities(mean: f64, std: f64) -> [f64; 256] {
    let mut p = [0.0; 256];
    if std == 0.0 {
        p[mean.clamp(0.0, 255.0).round() as usize] = 1.0;
        return p;
    }
    let n = Normal::new(mean, std).expect("validated parameters");
    for (k, v) in p.iter_mut().enumerate() {
        let hi = if k == 255 { 1.0 } else { n.cdf(k as f64 + 0.5) };
        let lo = if k == 0 { 0.0 } else { n.cdf(k as f64 - 0.5) };
        *v = hi - lo;
    }
    p
}

fn draw_level(rng: &CounterRng, index: u64, mean: f64, std: f64) -> f64 {
    (mean + std * rng.normal_at(index))
        .clamp(0.0, 255.0)
        .round()
}

/// Contrast phantom: image plus label map (LV disk, MYO ring, background
/// outside) with a full sector.
pub fn gen_contrast_phantom(params: &ContrastParams, seed: u64) -> Result<(GrayImage, LabelMask)> {
    params.validate()?;
    let n = params.pixels_per_region as f64;
    let r_in = (n / PI).sqrt();
    let r_out = (2.0 * n / PI).sqrt();
    let side = 2 * r_out.ceil() as usize + 3;
    let c = (side - 1) as f64 / 2.0;
    let (w, h) = (side, side);
    let labels: Vec<Label> = (0..w * h)
        .map(|i| {
            let (r, col) = ((i / w) as f64 - c, (i % w) as f64 - c);
            let d2 = r * r + col * col;
            if d2 <= r_in * r_in {
                Label::Lv
            } else if d2 <= r_out * r_out {
                Label::Myo
            } else {
                Label::Background
            }
        })
        .collect();
    let rng = CounterRng::new(seed);
    let pixels: Vec<f64> = labels
        .par_iter()
        .enumerate()
        .map(|(i, l)| match l {
            Label::Myo => draw_level(&rng, i as u64, params.roi_mean, params.roi_std),
            Label::Lv => draw_level(&rng, i as u64, params.bg_mean, params.bg_std),
            _ => 0.0,
        })
        .collect();
    let spacing = Spacing::default();
    let mask = LabelMask::from_labels(labels, w, Mask::filled(w, h, true), spacing);
    let img = GrayImage::new(w, h, pixels, spacing, Domain::Intensity)?;
    Ok((img, mask))
}

// ------------------------------------------------------------------ chamber

/// Geometry of a parametric apical-view chamber, in millimetres and
/// radians. `x` runs along the image width, `y` along depth.
///
/// The LV is an ellipse (half-width `lv_half_width`, half-length
/// `lv_half_length`) centred at `center`, its long axis tilted by `tilt`
/// from vertical, cut off at the base `base_fraction · lv_half_length`
/// below the centre. The MYO is the band up to an outer ellipse that is
/// `wall_left`/`wall_right` wider on each side and `wall_apex` longer. A
/// strip of LA (for ALAX: LA on the left half, AO on the right) spanning
/// the outer width lies below the base. The sector is a circular wedge
/// from the probe at the top of the image.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChamberParams {
    pub view: View,
    pub width: usize,
    pub height: usize,
    pub spacing: Spacing,
    pub center: (f64, f64),
    pub lv_half_width: f64,
    pub lv_half_length: f64,
    pub tilt: f64,
    pub wall_left: f64,
    pub wall_right: f64,
    pub wall_apex: f64,
    pub base_fraction: f64,
    pub atrium_length: f64,
    /// Probe position along x (mm); the probe sits at depth 0.
    pub probe_x: f64,
    pub sector_left: f64,
    pub sector_right: f64,
    pub sector_depth: f64,
}

pub const MIN_CHAMBER_SIDE: usize = 64;

impl ChamberParams {
    /// Default symmetric geometry scaled to the image extent. The centre is
    /// offset by a fifth of a pixel so that no two pixels are exact mirror
    /// images about the chamber axis.
    pub fn symmetric(view: View, width: usize, height: usize, spacing: Spacing) -> ChamberParams {
        let wmm = width as f64 * spacing.width;
        let hmm = height as f64 * spacing.depth;
        let axis = (width - 1) as f64 * spacing.width / 2.0;
        let wall = 4.5 * spacing.depth.max(spacing.width);
        ChamberParams {
            view,
            width,
            height,
            spacing,
            center: (axis + 0.2 * spacing.width, 0.45 * hmm),
            lv_half_width: 0.17 * wmm,
            lv_half_length: 0.32 * hmm,
            tilt: 0.0,
            wall_left: wall,
            wall_right: wall,
            wall_apex: wall,
            base_fraction: 0.5,
            atrium_length: 0.15 * hmm,
            probe_x: axis,
            sector_left: 40f64.to_radians(),
            sector_right: 40f64.to_radians(),
            sector_depth: 0.97 * hmm,
        }
    }

    /// Randomized geometry. `skewed` varies the centre, tilt, wall
    /// thicknesses and sector half-angles independently per side;
    /// otherwise only the overall size varies.
    pub fn random(
        view: View,
        width: usize,
        height: usize,
        spacing: Spacing,
        skewed: bool,
        seed: u64,
    ) -> ChamberParams {
        let mut c = RngCursor::new(CounterRng::new(seed).with_stream(0xC4A3));
        let mut p = ChamberParams::symmetric(view, width, height, spacing);
        let wmm = width as f64 * spacing.width;
        let hmm = height as f64 * spacing.depth;
        let px = spacing.depth.max(spacing.width);
        p.lv_half_width = c.range(0.14, 0.2) * wmm;
        p.lv_half_length = c.range(0.28, 0.35) * hmm;
        p.center.1 = c.range(0.43, 0.48) * hmm;
        p.base_fraction = c.range(0.45, 0.6);
        let wall = c.range(3.5, 6.0) * px;
        p.wall_left = wall;
        p.wall_right = wall;
        p.wall_apex = c.range(3.5, 6.0) * px;
        let angle = c.range(35.0, 45.0).to_radians();
        p.sector_left = angle;
        p.sector_right = angle;
        if skewed {
            p.center.0 += c.range(-0.06, 0.06) * wmm;
            p.tilt = c.range(-0.15, 0.15);
            p.wall_left = c.range(3.5, 6.0) * px;
            p.wall_right = c.range(3.5, 6.0) * px;
            p.sector_left = c.range(32.0, 45.0).to_radians();
            p.sector_right = c.range(32.0, 45.0).to_radians();
        }
        p
    }

    pub fn validate(&self) -> Result<()> {
        if self.width < MIN_CHAMBER_SIDE || self.height < MIN_CHAMBER_SIDE {
            return Err(Error::InvalidInput(format!(
                "chamber phantom needs at least {MIN_CHAMBER_SIDE}x{MIN_CHAMBER_SIDE} pixels, got {}x{}",
                self.width, self.height
            )));
        }
        let positive = [
            ("LV half-width", self.lv_half_width),
            ("LV half-length", self.lv_half_length),
            ("left wall", self.wall_left),
            ("right wall", self.wall_right),
            ("apical wall", self.wall_apex),
            ("atrium length", self.atrium_length),
            ("sector depth", self.sector_depth),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(0.0..1.0).contains(&self.base_fraction) {
            return Err(Error::InvalidInput(format!(
                "base fraction must be in [0, 1), got {}",
                self.base_fraction
            )));
        }
        for a in [self.sector_left, self.sector_right] {
            if !(0.0..PI / 2.0).contains(&a) {
                return Err(Error::InvalidInput(format!(
                    "sector half-angle {a} out of range"
                )));
            }
        }
        Ok(())
    }

    /// Long-axis coordinates `(u, v)` of a point: `u` across the chamber
    /// (positive to the right), `v` towards the apex.
    fn local(&self, x: f64, y: f64) -> (f64, f64) {
        let (dx, dy) = (x - self.center.0, y - self.center.1);
        let (s, c) = self.tilt.sin_cos();
        (dx * c + dy * s, dx * s - dy * c)
    }

    fn outer_axes(&self, u: f64) -> (f64, f64) {
        let wall = if u < 0.0 {
            self.wall_left
        } else {
            self.wall_right
        };
        (
            self.lv_half_width + wall,
            self.lv_half_length + self.wall_apex,
        )
    }

    fn base_v(&self) -> f64 {
        -self.base_fraction * self.lv_half_length
    }

    /// Inner and outer half-widths of the wall at the base, per side.
    pub fn base_half_widths(&self) -> [(f64, f64); 2] {
        let vb = self.base_v();
        let inner = self.lv_half_width * (1.0 - (vb / self.lv_half_length).powi(2)).sqrt();
        [-1.0, 1.0].map(|side| {
            let (ao, bo) = self.outer_axes(side);
            (inner, ao * (1.0 - (vb / bo).powi(2)).sqrt())
        })
    }

    fn label_at(&self, x: f64, y: f64) -> Label {
        let (u, v) = self.local(x, y);
        let vb = self.base_v();
        if v >= vb {
            let a = self.lv_half_width;
            let b = self.lv_half_length;
            if (u / a).powi(2) + (v / b).powi(2) <= 1.0 {
                return Label::Lv;
            }
            let (ao, bo) = self.outer_axes(u);
            if (u / ao).powi(2) + (v / bo).powi(2) <= 1.0 {
                return Label::Myo;
            }
            return Label::Background;
        }
        if v >= vb - self.atrium_length {
            let [(_, left), (_, right)] = self.base_half_widths();
            if u >= -left && u <= right {
                return match self.view {
                    View::Alax if u >= 0.0 => Label::Ao,
                    _ => Label::La,
                };
            }
        }
        Label::Background
    }

    fn in_sector(&self, x: f64, y: f64) -> bool {
        let dx = x - self.probe_x;
        if y < 0.0 || dx.hypot(y) > self.sector_depth {
            return false;
        }
        let angle = dx.atan2(y);
        angle >= -self.sector_left && angle <= self.sector_right
    }

    /// Analytic annulus points `(row, col)` in fractional pixels: the
    /// middle of each arm tip, half a pixel above where it meets the atrium
    /// (the contact pixels are the last row of wall).
    pub fn expected_base_points(&self) -> [(f64, f64); 2] {
        let vb = self.base_v() + 0.5 * self.spacing.depth;
        let [(il, ol), (ir, or)] = self.base_half_widths();
        let (s, c) = self.tilt.sin_cos();
        [(-(il + ol) / 2.0), (ir + or) / 2.0].map(|u| {
            // Inverse of `local`.
            let x = self.center.0 + u * c + vb * s;
            let y = self.center.1 + u * s - vb * c;
            (y / self.spacing.depth, x / self.spacing.width)
        })
    }
}

/// Rasterizes a chamber phantom at pixel centres.
pub fn gen_chamber_phantom(params: &ChamberParams) -> Result<LabelMask> {
    params.validate()?;
    let (w, h, s) = (params.width, params.height, params.spacing);
    let labels: Vec<Label> = (0..w * h)
        .into_par_iter()
        .map(|i| params.label_at((i % w) as f64 * s.width, (i / w) as f64 * s.depth))
        .collect();
    let sector = Mask::from_fn(w, h, |r, c| {
        params.in_sector(c as f64 * s.width, r as f64 * s.depth)
    });
    Ok(LabelMask::from_labels(labels, w, sector, s))
}

/// Default-geometry chamber for a view and image size.
pub fn gen_default_chamber(
    view: View,
    width: usize,
    height: usize,
    spacing: Spacing,
) -> Result<LabelMask> {
    gen_chamber_phantom(&ChamberParams::symmetric(view, width, height, spacing))
}

/// Per-class intensity model used to turn a label map into a B-mode-like
/// image.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassIntensity {
    pub mean: f64,
    pub std: f64,
}

/// Fills a label map with clamped Gaussian speckle. `myo` gives the MYO
/// intensity per pixel, so regional contrast can vary; pixels outside the
/// sector are 0.
pub fn fill_intensity(
    mask: &LabelMask,
    myo: &(dyn Fn(usize, usize) -> ClassIntensity + Sync),
    seed: u64,
) -> Result<GrayImage> {
    let (w, h) = mask.dims();
    let rng = CounterRng::new(seed).with_stream(0xB0DE);
    let pixels: Vec<f64> = (0..w * h)
        .into_par_iter()
        .map(|i| {
            let (r, c) = (i / w, i % w);
            if !mask.sector().get(r, c) {
                return 0.0;
            }
            let ci = match mask.label(r, c) {
                Label::Myo => myo(r, c),
                Label::Lv => ClassIntensity {
                    mean: 30.0,
                    std: 12.0,
                },
                Label::La | Label::Ao => ClassIntensity {
                    mean: 35.0,
                    std: 12.0,
                },
                Label::Background => ClassIntensity {
                    mean: 70.0,
                    std: 25.0,
                },
            };
            draw_level(&rng, i as u64, ci.mean, ci.std)
        })
        .collect();
    GrayImage::new(w, h, pixels, mask.spacing(), Domain::Intensity)
}

// ------------------------------------------------------------------ channel

/// How the true coherence factor varies over the image.
#[derive(Clone, Debug, PartialEq)]
pub enum CoherenceProfile {
    /// All elements in phase: CF = 1.
    Coherent,
    /// The same prescribed CF everywhere.
    Constant(f64),
    /// CF varying linearly from the first to the last column.
    Ramp { from: f64, to: f64 },
    /// Prescribed CF per pixel (row-major).
    Map(Vec<f64>),
    /// Independent uniform phases: expected CF ≈ √π / (2√N) for large N.
    RandomPhase,
}

impl CoherenceProfile {
    /// Parses `coherent`, `random`, `constant:C` or `ramp:A:B`.
    pub fn parse(s: &str) -> Result<CoherenceProfile> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |t: &str| {
            t.parse::<f64>()
                .map_err(|_| Error::InvalidInput(format!("invalid coherence value {t:?}")))
        };
        match parts[..] {
            ["coherent"] => Ok(CoherenceProfile::Coherent),
            ["random"] => Ok(CoherenceProfile::RandomPhase),
            ["constant", c] => Ok(CoherenceProfile::Constant(num(c)?)),
            ["ramp", a, b] => Ok(CoherenceProfile::Ramp {
                from: num(a)?,
                to: num(b)?,
            }),
            _ => Err(Error::InvalidInput(format!(
                "unknown coherence profile {s:?} (coherent, random, constant:C, ramp:A:B)"
            ))),
        }
    }

    /// Prescribed CF of a pixel; `None` for random phases.
    pub fn target(&self, row: usize, col: usize, width: usize) -> Option<f64> {
        match self {
            CoherenceProfile::Coherent => Some(1.0),
            CoherenceProfile::Constant(c) => Some(*c),
            CoherenceProfile::Ramp { from, to } => {
                let t = if width > 1 {
                    col as f64 / (width - 1) as f64
                } else {
                    0.0
                };
                Some(from + (to - from) * t)
            }
            CoherenceProfile::Map(m) => Some(m[row * width + col]),
            CoherenceProfile::RandomPhase => None,
        }
    }
}

/// Expected CF of `n` unit phasors with independent uniform phases, using
/// the Rayleigh approximation of the coherent sum.
pub fn random_phase_expected_cf(n: usize) -> f64 {
    PI.sqrt() / (2.0 * (n as f64).sqrt())
}

/// Element phases whose unit phasors have coherence factor exactly `cf`:
/// pairs at `±ψ` with `cos ψ = cf` (plus one element at phase 0 when `n` is
/// odd, with `ψ` adjusted accordingly).
pub fn prescribed_phases(cf: f64, n: usize) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&cf) {
        return Err(Error::InvalidInput(format!(
            "prescribed CF {cf} outside [0, 1]"
        )));
    }
    if n == 1 {
        if cf != 1.0 {
            return Err(Error::InvalidInput(
                "a single element always has CF 1".into(),
            ));
        }
        return Ok(vec![0.0]);
    }
    let odd = n % 2 == 1;
    let cos_psi = if odd {
        (cf * n as f64 - 1.0) / (n - 1) as f64
    } else {
        cf
    };
    let psi = cos_psi.clamp(-1.0, 1.0).acos();
    let mut phases = Vec::with_capacity(n);
    if odd {
        phases.push(0.0);
    }
    for _ in 0..n / 2 {
        phases.push(psi);
        phases.push(-psi);
    }
    Ok(phases)
}

/// Channel frame whose per-pixel coherence follows `profile`. Each pixel
/// gets a random common gain and phase, which leave the CF unchanged.
pub fn gen_channel_phantom(
    width: usize,
    height: usize,
    elements: usize,
    profile: &CoherenceProfile,
    seed: u64,
) -> Result<ChannelFrame> {
    if elements == 0 {
        return Err(Error::InvalidInput("channel phantom needs N >= 1".into()));
    }
    if let CoherenceProfile::Map(m) = profile {
        if m.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "coherence map has {} values for {width}x{height}",
                m.len()
            )));
        }
    }
    let rng = CounterRng::new(seed).with_stream(0xC4A7);
    let per_pixel = elements as u64 + 2;
    let signals: Vec<Vec<Complex32>> = (0..width * height)
        .into_par_iter()
        .map(|i| {
            let base = i as u64 * per_pixel;
            let gain = 0.5 + rng.uniform_at(base);
            let common = rng.phase_at(base + 1);
            let phases = match profile.target(i / width, i % width, width) {
                Some(cf) => prescribed_phases(cf, elements)?,
                None => (0..elements as u64)
                    .map(|k| rng.phase_at(base + 2 + k))
                    .collect(),
            };
            Ok(phases
                .into_iter()
                .map(|p| {
                    let (s, c) = (p + common).sin_cos();
                    Complex32::new((gain * c) as f32, (gain * s) as f32)
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    ChannelFrame::new(width, height, elements, signals.concat())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coherence::coherence_factor;
    use crate::qmetrics::{cnr, region_stats};

    #[test]
    fn contrast_phantom_is_deterministic() {
        let p = ContrastParams {
            roi_mean: 120.0,
            roi_std: 15.0,
            bg_mean: 40.0,
            bg_std: 15.0,
            pixels_per_region: 2000,
        };
        let (a, ma) = gen_contrast_phantom(&p, 9).unwrap();
        let (b, mb) = gen_contrast_phantom(&p, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(ma, mb);
        let (c, _) = gen_contrast_phantom(&p, 10).unwrap();
        assert_ne!(a, c);
        let lv = ma.class_mask(Label::Lv).count() as f64;
        let myo = ma.class_mask(Label::Myo).count() as f64;
        assert!((lv / 2000.0 - 1.0).abs() < 0.05 && (myo / 2000.0 - 1.0).abs() < 0.05);
    }

    #[test]
    fn contrast_phantom_sample_cnr() {
        let p = ContrastParams {
            roi_mean: 120.0,
            roi_std: 15.0,
            bg_mean: 40.0,
            bg_std: 15.0,
            pixels_per_region: 20_000,
        };
        let (img, mask) = gen_contrast_phantom(&p, 1).unwrap();
        let roi = region_stats(&img, &mask.class_mask(Label::Myo)).unwrap();
        let bg = region_stats(&img, &mask.class_mask(Label::Lv)).unwrap();
        assert!((cnr(&roi, &bg).unwrap() - 80.0 / 450f64.sqrt()).abs() < 0.15);
    }

    #[test]
    fn expected_gcnr_of_separated_gaussians() {
        let p = ContrastParams {
            roi_mean: 120.0,
            roi_std: 15.0,
            bg_mean: 40.0,
            bg_std: 15.0,
            pixels_per_region: 100,
        };
        // 2Φ(Δ/2σ) - 1 for equal variances.
        let want = 2.0 * Normal::standard().cdf(80.0 / 30.0) - 1.0;
        assert!((p.expected_gcnr() - want).abs() < 1e-3);
        let same = ContrastParams {
            roi_mean: 40.0,
            ..p
        };
        assert!(same.expected_gcnr().abs() < 1e-12);
    }

    #[test]
    fn contrast_phantom_rejects_bad_parameters() {
        let p = ContrastParams {
            roi_mean: 300.0,
            roi_std: 15.0,
            bg_mean: 40.0,
            bg_std: 15.0,
            pixels_per_region: 100,
        };
        assert!(gen_contrast_phantom(&p, 0).is_err());
        let p = ContrastParams {
            roi_mean: 100.0,
            bg_std: -1.0,
            ..p
        };
        assert!(gen_contrast_phantom(&p, 0).is_err());
    }

    #[test]
    fn chamber_has_expected_classes() {
        let s = Spacing::new(0.5, 0.4).unwrap();
        let m = gen_default_chamber(View::A4c, 96, 96, s).unwrap();
        assert!(m.contains(Label::Lv) && m.contains(Label::Myo) && m.contains(Label::La));
        assert!(!m.contains(Label::Ao));
        let alax = gen_default_chamber(View::Alax, 96, 96, s).unwrap();
        assert!(alax.contains(Label::Ao) && alax.contains(Label::La));
        assert!(gen_default_chamber(View::A4c, 63, 96, s).is_err());
    }

    #[test]
    fn channel_phantom_hits_prescribed_cf() {
        for n in [2, 3, 8, 9] {
            let f = gen_channel_phantom(5, 4, n, &CoherenceProfile::Ramp { from: 0.1, to: 0.9 }, 3)
                .unwrap();
            let cf = coherence_factor(&f, Spacing::default()).unwrap();
            for c in 0..5 {
                let want = 0.1 + 0.8 * c as f64 / 4.0;
                assert!((cf.get(2, c) - want).abs() < 1e-6, "n={n} col={c}");
            }
        }
        let f = gen_channel_phantom(3, 3, 6, &CoherenceProfile::Coherent, 1).unwrap();
        let cf = coherence_factor(&f, Spacing::default()).unwrap();
        assert!(cf.pixels().iter().all(|v| (v - 1.0).abs() < 1e-6));
    }

    #[test]
    fn two_orthogonal_elements() {
        let ph = prescribed_phases(std::f64::consts::FRAC_1_SQRT_2, 2).unwrap();
        assert!(((ph[0] - ph[1]).abs() - PI / 2.0).abs() < 1e-12);
        assert!(prescribed_phases(0.5, 1).is_err());
        assert!(prescribed_phases(1.5, 4).is_err());
    }

    #[test]
    fn profile_parsing() {
        assert_eq!(
            CoherenceProfile::parse("coherent").unwrap(),
            CoherenceProfile::Coherent
        );
        assert_eq!(
            CoherenceProfile::parse("ramp:0.2:0.8").unwrap(),
            CoherenceProfile::Ramp { from: 0.2, to: 0.8 }
        );
        assert!(CoherenceProfile::parse("ramp:0.2").is_err());
    }
}
