//! Image and mask containers, file formats and intensity preprocessing.
//!
//! Two on-disk formats are supported:
//!
//! * binary PGM (`P5`, maxval 255) for B-mode frames, label maps and sector
//!   masks;
//! * `CIMG1` for real-valued images: the magic line `CIMG1\n`, an ASCII line
//!   `width height spacing_depth spacing_width\n`, then `width * height`
//!   little-endian `f32` values in row-major order.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Largest accepted pixel count for a single image.
pub const MAX_PIXELS: usize = 1 << 28;

pub const CIMG_MAGIC: &[u8] = b"CIMG1\n";

/// Physical pixel size in millimetres, along rows (depth) and columns (width).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spacing {
    pub depth: f64,
    pub width: f64,
}

impl Spacing {
    pub fn new(depth: f64, width: f64) -> Result<Self> {
        if !(depth.is_finite() && width.is_finite() && depth > 0.0 && width > 0.0) {
            return Err(Error::InvalidInput(format!(
                "pixel spacing must be strictly positive, got ({depth}, {width})"
            )));
        }
        Ok(Spacing { depth, width })
    }

    pub fn isotropic(mm: f64) -> Self {
        Spacing {
            depth: mm,
            width: mm,
        }
    }

    /// Squared physical distance between two pixel positions given as
    /// fractional (row, col) coordinates.
    #[inline]
    pub fn dist2(&self, a: (f64, f64), b: (f64, f64)) -> f64 {
        let dr = (a.0 - b.0) * self.depth;
        let dc = (a.1 - b.1) * self.width;
        dr * dr + dc * dc
    }
}

impl Default for Spacing {
    fn default() -> Self {
        Spacing::isotropic(1.0)
    }
}

/// Value domain of a [`GrayImage`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    /// Integer levels in `[0, 255]` (B-mode).
    Intensity,
    /// Real values in `[0, 1]` (coherence).
    Coherence,
}

impl Domain {
    fn check(self, v: f64) -> bool {
        match self {
            Domain::Intensity => v.is_finite() && (0.0..=255.0).contains(&v) && v.fract() == 0.0,
            Domain::Coherence => v.is_finite() && (0.0..=1.0).contains(&v),
        }
    }
}

/// A 2-D scalar raster stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
    spacing: Spacing,
    domain: Domain,
}

fn check_dims(width: usize, height: usize) -> Result<usize> {
    let n = width
        .checked_mul(height)
        .filter(|&n| n <= MAX_PIXELS)
        .ok_or_else(|| Error::Format(format!("image dimensions {width}x{height} too large")))?;
    if n == 0 {
        return Err(Error::Format(format!(
            "image dimensions {width}x{height} are empty"
        )));
    }
    Ok(n)
}

impl GrayImage {
    pub fn new(
        width: usize,
        height: usize,
        pixels: Vec<f64>,
        spacing: Spacing,
        domain: Domain,
    ) -> Result<Self> {
        let n = check_dims(width, height)?;
        if pixels.len() != n {
            return Err(Error::InvalidInput(format!(
                "pixel buffer has {} values, expected {n}",
                pixels.len()
            )));
        }
        Spacing::new(spacing.depth, spacing.width)?;
        if let Some((i, v)) = pixels.iter().enumerate().find(|(_, &v)| !domain.check(v)) {
            return Err(Error::Format(format!(
                "pixel {i} has value {v} outside the {domain:?} domain"
            )));
        }
        Ok(GrayImage {
            width,
            height,
            pixels,
            spacing,
            domain,
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        spacing: Spacing,
        domain: Domain,
        f: impl Fn(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                pixels.push(f(r, c));
            }
        }
        GrayImage::new(width, height, pixels, spacing, domain)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    pub fn with_spacing(mut self, spacing: Spacing) -> Self {
        self.spacing = spacing;
        self
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }

    fn require_intensity(&self, what: &str) -> Result<()> {
        if self.domain != Domain::Intensity {
            return Err(Error::InvalidInput(format!(
                "{what} requires an intensity-domain image"
            )));
        }
        Ok(())
    }
}

/// Boolean raster of the same shape as the image it selects from.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        let n = check_dims(width, height)?;
        if bits.len() != n {
            return Err(Error::InvalidInput(format!(
                "mask has {} values, expected {n}",
                bits.len()
            )));
        }
        Ok(Mask {
            width,
            height,
            bits,
        })
    }

    pub fn filled(width: usize, height: usize, value: bool) -> Self {
        Mask {
            width,
            height,
            bits: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                bits.push(f(r, c));
            }
        }
        Mask {
            width,
            height,
            bits,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.bits[row * self.width + col] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Row-major indices of set pixels.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
    }

    pub fn and(&self, other: &Mask) -> Mask {
        self.zip(other, |a, b| a && b)
    }

    pub fn or(&self, other: &Mask) -> Mask {
        self.zip(other, |a, b| a || b)
    }

    pub fn and_not(&self, other: &Mask) -> Mask {
        self.zip(other, |a, b| a && !b)
    }

    fn zip(&self, other: &Mask, f: impl Fn(bool, bool) -> bool) -> Mask {
        assert_eq!(self.dims(), other.dims(), "mask dimensions differ");
        Mask {
            width: self.width,
            height: self.height,
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// Horizontal mirror (column `c` becomes `width - 1 - c`).
    pub fn mirrored(&self) -> Mask {
        Mask::from_fn(self.width, self.height, |r, c| {
            self.get(r, self.width - 1 - c)
        })
    }

    pub fn check_dims(&self, expected: (usize, usize)) -> Result<()> {
        if self.dims() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: self.dims(),
            });
        }
        Ok(())
    }
}

/// Anatomical class codes used in label maps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum Label {
    Background = 0,
    Lv = 1,
    Myo = 2,
    La = 3,
    Ao = 4,
}

impl Label {
    pub fn from_code(code: u8) -> Option<Label> {
        match code {
            0 => Some(Label::Background),
            1 => Some(Label::Lv),
            2 => Some(Label::Myo),
            3 => Some(Label::La),
            4 => Some(Label::Ao),
            _ => None,
        }
    }
}

/// Segmentation labels plus the scan-sector validity raster.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelMask {
    width: usize,
    height: usize,
    labels: Vec<Label>,
    sector: Mask,
    spacing: Spacing,
}

impl LabelMask {
    pub fn new(
        width: usize,
        height: usize,
        codes: &[u8],
        sector: Mask,
        spacing: Spacing,
    ) -> Result<Self> {
        let n = check_dims(width, height)?;
        if codes.len() != n {
            return Err(Error::InvalidInput(format!(
                "label buffer has {} values, expected {n}",
                codes.len()
            )));
        }
        sector.check_dims((width, height))?;
        Spacing::new(spacing.depth, spacing.width)?;
        let labels = codes
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                Label::from_code(c)
                    .ok_or_else(|| Error::Format(format!("pixel {i} has unknown label code {c}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(LabelMask {
            width,
            height,
            labels,
            sector,
            spacing,
        })
    }

    pub fn from_labels(labels: Vec<Label>, width: usize, sector: Mask, spacing: Spacing) -> Self {
        let height = labels.len() / width;
        assert_eq!(width * height, labels.len());
        assert_eq!(sector.dims(), (width, height));
        LabelMask {
            width,
            height,
            labels,
            sector,
            spacing,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn sector(&self) -> &Mask {
        &self.sector
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    #[inline]
    pub fn label(&self, row: usize, col: usize) -> Label {
        self.labels[row * self.width + col]
    }

    pub fn contains(&self, label: Label) -> bool {
        self.labels.contains(&label)
    }

    /// Pixels carrying `label`, regardless of the sector.
    pub fn class_mask(&self, label: Label) -> Mask {
        Mask {
            width: self.width,
            height: self.height,
            bits: self.labels.iter().map(|&l| l == label).collect(),
        }
    }

    /// Pixels carrying `label` that lie inside the sector.
    pub fn clipped_class_mask(&self, label: Label) -> Mask {
        self.class_mask(label).and(&self.sector)
    }

    pub fn codes(&self) -> Vec<u8> {
        self.labels.iter().map(|&l| l as u8).collect()
    }

    pub fn with_sector(mut self, sector: Mask) -> Result<Self> {
        sector.check_dims(self.dims())?;
        self.sector = sector;
        Ok(self)
    }

    pub fn with_spacing(mut self, spacing: Spacing) -> Self {
        self.spacing = spacing;
        self
    }

    /// Horizontal mirror of labels and sector; spacing is unchanged.
    pub fn mirrored(&self) -> LabelMask {
        let w = self.width;
        let labels = (0..self.height)
            .flat_map(|r| (0..w).map(move |c| (r, c)))
            .map(|(r, c)| self.label(r, w - 1 - c))
            .collect();
        LabelMask {
            width: w,
            height: self.height,
            labels,
            sector: self.sector.mirrored(),
            spacing: self.spacing,
        }
    }
}

/// 256-bin intensity histogram.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Histogram {
    bins: [u64; 256],
    total: u64,
}

impl Histogram {
    pub fn from_bins(bins: [u64; 256]) -> Result<Self> {
        let total = bins.iter().sum();
        if total == 0 {
            return Err(Error::EmptyRegion("histogram has no samples".into()));
        }
        Ok(Histogram { bins, total })
    }

    pub fn bins(&self) -> &[u64; 256] {
        &self.bins
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Normalized probability mass per bin.
    pub fn densities(&self) -> [f64; 256] {
        let t = self.total as f64;
        let mut d = [0.0; 256];
        for (o, &b) in d.iter_mut().zip(&self.bins) {
            *o = b as f64 / t;
        }
        d
    }
}

/// Histogram of the masked pixels of an intensity image.
pub fn histogram(img: &GrayImage, mask: &Mask) -> Result<Histogram> {
    img.require_intensity("histogram")?;
    mask.check_dims(img.dims())?;
    let mut bins = [0u64; 256];
    for i in mask.indices() {
        bins[img.pixels[i] as usize] += 1;
    }
    Histogram::from_bins(bins).map_err(|_| Error::EmptyRegion("histogram mask is empty".into()))
}

/// Matches the intensity distribution of the sector pixels to a Gaussian
/// with the given mean and standard deviation.
///
/// Each level `v` maps to `round(clamp(G⁻¹(F(v)), 0, 255))` where `F` is the
/// midpoint empirical CDF over sector pixels,
/// `F(v) = (count(< v) + 0.5 * count(= v)) / total`, and `G⁻¹` the Gaussian
/// quantile. Pixels outside the sector go through the same lookup table.
pub fn histogram_match(
    img: &GrayImage,
    sector: &Mask,
    target_mean: f64,
    target_std: f64,
) -> Result<GrayImage> {
    img.require_intensity("histogram matching")?;
    sector.check_dims(img.dims())?;
    let target = Normal::new(target_mean, target_std)
        .map_err(|e| Error::InvalidInput(format!("target distribution: {e}")))?;
    let mut counts = [0u64; 256];
    for i in sector.indices() {
        counts[img.pixels[i] as usize] += 1;
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::EmptyRegion(
            "histogram matching: sector contains no pixels".into(),
        ));
    }

    let mut lut = [0.0f64; 256];
    let mut below = 0u64;
    for (v, &n) in counts.iter().enumerate() {
        let f = (below as f64 + 0.5 * n as f64) / total as f64;
        lut[v] = if f <= 0.0 {
            0.0
        } else if f >= 1.0 {
            255.0
        } else {
            target.inverse_cdf(f).clamp(0.0, 255.0).round()
        };
        below += n;
    }

    let pixels = img.pixels.iter().map(|&p| lut[p as usize]).collect();
    Ok(GrayImage {
        pixels,
        ..img.clone()
    })
}

/// Default target of histogram matching.
pub const MATCH_MEAN: f64 = 127.0;
pub const MATCH_STD: f64 = 32.0;

// ---------------------------------------------------------------- file I/O

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_ws_and_comments(&mut self) {
        loop {
            while self.pos < self.data.len() && self.data[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.pos < self.data.len() && self.data[self.pos] == b'#' {
                while self.pos < self.data.len() && self.data[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                return;
            }
        }
    }

    fn token(&mut self) -> Result<&'a str> {
        self.skip_ws_and_comments();
        let start = self.pos;
        while self.pos < self.data.len() && !self.data[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::UnexpectedEof);
        }
        std::str::from_utf8(&self.data[start..self.pos])
            .map_err(|_| Error::Format("non-ASCII header token".into()))
    }

    fn number<T: std::str::FromStr>(&mut self, what: &str) -> Result<T> {
        let tok = self.token()?;
        tok.parse()
            .map_err(|_| Error::Format(format!("invalid {what} {tok:?} in header")))
    }

    /// Consumes exactly one whitespace byte terminating the header.
    fn single_ws(&mut self) -> Result<()> {
        match self.data.get(self.pos) {
            Some(b) if b.is_ascii_whitespace() => {
                self.pos += 1;
                Ok(())
            }
            Some(_) => Err(Error::Format("header not terminated by whitespace".into())),
            None => Err(Error::UnexpectedEof),
        }
    }

    fn rest(&self) -> &'a [u8] {
        &self.data[self.pos..]
    }
}

/// Decodes a binary PGM into `(width, height, bytes)`.
pub fn decode_pgm(data: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    if data.len() < 2 {
        return Err(Error::UnexpectedEof);
    }
    if &data[..2] != b"P5" {
        return Err(Error::Format("missing P5 magic".into()));
    }
    let mut cur = Cursor { data, pos: 2 };
    let width: usize = cur.number("width")?;
    let height: usize = cur.number("height")?;
    let maxval: u32 = cur.number("maxval")?;
    if maxval != 255 {
        return Err(Error::Format(format!("maxval must be 255, got {maxval}")));
    }
    cur.single_ws()?;
    let n = check_dims(width, height)?;
    let body = cur.rest();
    if body.len() < n {
        return Err(Error::UnexpectedEof);
    }
    if body.len() > n {
        return Err(Error::Format(format!(
            "{} trailing bytes after pixel data",
            body.len() - n
        )));
    }
    Ok((width, height, body.to_vec()))
}

pub fn encode_pgm(width: usize, height: usize, bytes: &[u8]) -> Vec<u8> {
    assert_eq!(width * height, bytes.len());
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(bytes);
    out
}

/// Decodes a `CIMG1` coherence image.
pub fn decode_cimg(data: &[u8]) -> Result<GrayImage> {
    if data.len() < CIMG_MAGIC.len() {
        return Err(Error::UnexpectedEof);
    }
    if &data[..CIMG_MAGIC.len()] != CIMG_MAGIC {
        return Err(Error::Format("missing CIMG1 magic".into()));
    }
    let rest = &data[CIMG_MAGIC.len()..];
    let nl = rest
        .iter()
        .position(|&b| b == b'\n')
        .ok_or(Error::UnexpectedEof)?;
    let header = std::str::from_utf8(&rest[..nl])
        .map_err(|_| Error::Format("non-ASCII CIMG1 header".into()))?;
    let fields: Vec<&str> = header.split_ascii_whitespace().collect();
    if fields.len() != 4 {
        return Err(Error::Format(format!(
            "CIMG1 header needs 4 fields, got {:?}",
            header
        )));
    }
    let parse_usize = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::Format(format!("invalid dimension {s:?}")))
    };
    let parse_f64 = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| Error::Format(format!("invalid spacing {s:?}")))
    };
    let width = parse_usize(fields[0])?;
    let height = parse_usize(fields[1])?;
    let spacing = Spacing::new(parse_f64(fields[2])?, parse_f64(fields[3])?)
        .map_err(|e| Error::Format(e.to_string()))?;
    let n = check_dims(width, height)?;
    let body = &rest[nl + 1..];
    if body.len() < 4 * n {
        return Err(Error::UnexpectedEof);
    }
    if body.len() > 4 * n {
        return Err(Error::Format("trailing bytes after CIMG1 data".into()));
    }
    let pixels = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    GrayImage::new(width, height, pixels, spacing, Domain::Coherence)
}

/// Encodes a coherence image as `CIMG1`. Pixels are stored as `f32`.
pub fn encode_cimg(img: &GrayImage) -> Vec<u8> {
    let mut out = CIMG_MAGIC.to_vec();
    out.extend_from_slice(
        format!(
            "{} {} {} {}\n",
            img.width, img.height, img.spacing.depth, img.spacing.width
        )
        .as_bytes(),
    );
    for &p in &img.pixels {
        out.extend_from_slice(&(p as f32).to_le_bytes());
    }
    out
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_file(path: &Path, data: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, data).map_err(|e| Error::io(path, e))
}

/// Decodes either a PGM (intensity domain, spacing from the argument) or a
/// CIMG1 file (coherence domain, spacing from its header).
pub fn decode_gray(data: &[u8], spacing: Spacing) -> Result<GrayImage> {
    if data.starts_with(b"P5") {
        let (w, h, bytes) = decode_pgm(data)?;
        GrayImage::new(
            w,
            h,
            bytes.into_iter().map(f64::from).collect(),
            spacing,
            Domain::Intensity,
        )
    } else if data.starts_with(b"CIMG") || data.len() < CIMG_MAGIC.len() {
        decode_cimg(data)
    } else {
        Err(Error::Format("unrecognized image format".into()))
    }
}

pub fn load_gray(path: impl AsRef<Path>, spacing: Spacing) -> Result<GrayImage> {
    let path = path.as_ref();
    decode_gray(&read_file(path)?, spacing).map_err(|e| with_path(e, path))
}

pub fn encode_gray(img: &GrayImage) -> Vec<u8> {
    match img.domain {
        Domain::Intensity => {
            let bytes: Vec<u8> = img.pixels.iter().map(|&p| p as u8).collect();
            encode_pgm(img.width, img.height, &bytes)
        }
        Domain::Coherence => encode_cimg(img),
    }
}

/// Writes intensity images as PGM and coherence images as CIMG1.
pub fn save_gray(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &encode_gray(img))
}

fn with_path(e: Error, path: &Path) -> Error {
    match e {
        Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
        Error::UnexpectedEof => {
            Error::Format(format!("{}: unexpected end of data", path.display()))
        }
        other => other,
    }
}

/// Decodes a sector PGM: 0 outside, 255 inside.
pub fn decode_sector(data: &[u8]) -> Result<Mask> {
    let (w, h, bytes) = decode_pgm(data)?;
    let bits = bytes
        .iter()
        .map(|&b| match b {
            0 => Ok(false),
            255 => Ok(true),
            other => Err(Error::Format(format!(
                "sector mask values must be 0 or 255, got {other}"
            ))),
        })
        .collect::<Result<Vec<_>>>()?;
    Mask::new(w, h, bits)
}

pub fn encode_sector(mask: &Mask) -> Vec<u8> {
    let bytes: Vec<u8> = mask.bits.iter().map(|&b| if b { 255 } else { 0 }).collect();
    encode_pgm(mask.width, mask.height, &bytes)
}

/// Loads a label map and an optional sector mask. Without a sector file
/// every pixel counts as inside the sector.
pub fn load_label_mask(
    labels: impl AsRef<Path>,
    sector: Option<&Path>,
    spacing: Spacing,
) -> Result<LabelMask> {
    let labels = labels.as_ref();
    let (w, h, codes) = decode_pgm(&read_file(labels)?).map_err(|e| with_path(e, labels))?;
    let sector = match sector {
        Some(p) => decode_sector(&read_file(p)?).map_err(|e| with_path(e, p))?,
        None => Mask::filled(w, h, true),
    };
    LabelMask::new(w, h, &codes, sector, spacing).map_err(|e| with_path(e, labels))
}

/// Writes the label map and the sector mask as two PGM files.
pub fn save_label_mask(mask: &LabelMask, labels: &Path, sector: &Path) -> Result<()> {
    write_file(labels, &encode_pgm(mask.width, mask.height, &mask.codes()))?;
    write_file(sector, &encode_sector(&mask.sector))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;

    fn intensity(width: usize, height: usize, px: Vec<f64>) -> GrayImage {
        GrayImage::new(width, height, px, Spacing::default(), Domain::Intensity).unwrap()
    }

    #[test]
    fn reads_a_tiny_pgm() {
        let data = encode_pgm(2, 2, &[0, 255, 17, 34]);
        assert_eq!(&data[..11], b"P5\n2 2\n255\n");
        let img = decode_gray(&data, Spacing::default()).unwrap();
        assert_eq!(img.pixels(), &[0.0, 255.0, 17.0, 34.0]);
        assert_eq!(encode_gray(&img), data);
    }

    #[test]
    fn pgm_header_comments_are_skipped() {
        let mut data = b"P5\n# made by hand\n2 1\n255\n".to_vec();
        data.extend_from_slice(&[3, 4]);
        let (w, h, px) = decode_pgm(&data).unwrap();
        assert_eq!((w, h, px), (2, 1, vec![3, 4]));
    }

    #[test]
    fn truncated_pgm_is_an_error() {
        let data = encode_pgm(4, 4, &[9; 16]);
        let err = decode_pgm(&data[..data.len() - 3]).unwrap_err();
        assert_eq!(err.to_string(), "unexpected end of data");
        assert!(matches!(decode_pgm(b"P5\n4"), Err(Error::UnexpectedEof)));
    }

    #[test]
    fn malformed_headers_are_rejected() {
        assert!(matches!(
            decode_pgm(b"P2\n1 1\n255\n\0"),
            Err(Error::Format(_))
        ));
        assert!(matches!(
            decode_pgm(b"P5\n1 1\n65535\n\0\0"),
            Err(Error::Format(_))
        ));
        assert!(matches!(
            decode_pgm(b"P5\n99999999999 99999999999\n255\n"),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn cimg_rejects_out_of_domain_values() {
        let img = GrayImage::new(
            1,
            1,
            vec![0.5],
            Spacing::new(0.3, 0.2).unwrap(),
            Domain::Coherence,
        )
        .unwrap();
        let mut data = encode_cimg(&img);
        let n = data.len();
        data[n - 4..].copy_from_slice(&1.5f32.to_le_bytes());
        assert!(matches!(decode_cimg(&data), Err(Error::Format(_))));
        data[n - 4..].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(decode_cimg(&data), Err(Error::Format(_))));
    }

    #[test]
    fn cimg_header_carries_spacing() {
        let img = GrayImage::new(
            2,
            1,
            vec![0.25, 1.0],
            Spacing::new(0.5, 0.25).unwrap(),
            Domain::Coherence,
        )
        .unwrap();
        let data = encode_cimg(&img);
        assert!(data.starts_with(b"CIMG1\n2 1 0.5 0.25\n"));
        let back = decode_gray(&data, Spacing::default()).unwrap();
        assert_eq!(back, img);
        assert!(matches!(
            decode_cimg(&data[..data.len() - 1]),
            Err(Error::UnexpectedEof)
        ));
    }

    #[test]
    fn sector_values_must_be_binary() {
        let ok = decode_sector(&encode_pgm(2, 1, &[0, 255])).unwrap();
        assert_eq!(ok.bits(), &[false, true]);
        assert!(decode_sector(&encode_pgm(2, 1, &[0, 7])).is_err());
    }

    #[test]
    fn label_codes_are_validated() {
        let sector = Mask::filled(2, 1, true);
        assert!(LabelMask::new(2, 1, &[1, 5], sector.clone(), Spacing::default()).is_err());
        let m = LabelMask::new(2, 1, &[1, 4], sector, Spacing::default()).unwrap();
        assert_eq!(m.label(0, 1), Label::Ao);
    }

    #[test]
    fn histogram_counts_masked_pixels() {
        let img = intensity(3, 2, vec![7.0, 7.0, 1.0, 7.0, 7.0, 2.0]);
        let mask = Mask::new(3, 2, vec![true, true, false, true, true, false]).unwrap();
        let h = histogram(&img, &mask).unwrap();
        assert_eq!(h.bins()[7], 4);
        assert_eq!(h.total(), 4);
        assert_eq!(h.bins().iter().sum::<u64>(), 4);

        let full = histogram(&img, &Mask::filled(3, 2, true)).unwrap();
        assert_eq!(full.total(), 6);
        let d = full.densities();
        assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn histogram_of_empty_mask_fails() {
        let img = intensity(2, 1, vec![1.0, 2.0]);
        let err = histogram(&img, &Mask::filled(2, 1, false)).unwrap_err();
        assert!(matches!(err, Error::EmptyRegion(_)));
    }

    #[test]
    fn histogram_matches_brute_force_count() {
        let rng = CounterRng::new(11);
        let (w, h) = (37, 23);
        let px: Vec<f64> = (0..w * h)
            .map(|i| (rng.u64_at(i as u64) % 256) as f64)
            .collect();
        let bits: Vec<bool> = (0..w * h)
            .map(|i| !rng.with_stream(1).u64_at(i as u64).is_multiple_of(3))
            .collect();
        let img = intensity(w, h, px.clone());
        let mask = Mask::new(w, h, bits.clone()).unwrap();
        let hist = histogram(&img, &mask).unwrap();
        for level in 0..256usize {
            let mut brute = 0u64;
            for i in 0..w * h {
                if bits[i] && px[i] as usize == level {
                    brute += 1;
                }
            }
            assert_eq!(hist.bins()[level], brute, "level {level}");
        }
    }

    #[test]
    fn constant_image_maps_to_target_mean() {
        let img = intensity(4, 4, vec![40.0; 16]);
        let out = histogram_match(&img, &Mask::filled(4, 4, true), 127.0, 32.0).unwrap();
        assert!(out.pixels().iter().all(|&p| p == 127.0));
    }

    #[test]
    fn two_level_image_maps_to_quartiles() {
        // Midpoint CDF: 0.25 and 0.75; quantiles 127 ∓ 0.67449*32.
        let lo: f64 = 127.0 - 0.674_489_750_196_081_7 * 32.0;
        let hi: f64 = 127.0 + 0.674_489_750_196_081_7 * 32.0;
        assert_eq!(lo.round(), 105.0);
        assert_eq!(hi.round(), 149.0);

        let px: Vec<f64> = (0..100)
            .map(|i| if i % 2 == 0 { 0.0 } else { 255.0 })
            .collect();
        let img = intensity(10, 10, px);
        let out = histogram_match(&img, &Mask::filled(10, 10, true), 127.0, 32.0).unwrap();
        for (a, b) in img.pixels().iter().zip(out.pixels()) {
            assert_eq!(*b, if *a == 0.0 { 105.0 } else { 149.0 });
        }
    }

    #[test]
    fn out_of_sector_pixels_use_the_same_table() {
        // Sector holds 0 and 255 in equal parts; the outside pixels are 0.
        let px = vec![0.0, 255.0, 0.0, 0.0];
        let img = intensity(4, 1, px);
        let sector = Mask::new(4, 1, vec![true, true, false, false]).unwrap();
        let out = histogram_match(&img, &sector, 127.0, 32.0).unwrap();
        assert_eq!(out.pixels(), &[105.0, 149.0, 105.0, 105.0]);
        // A level never seen inside the sector below every sample maps to 0.
        let img = intensity(3, 1, vec![5.0, 9.0, 1.0]);
        let sector = Mask::new(3, 1, vec![true, true, false]).unwrap();
        let out = histogram_match(&img, &sector, 127.0, 32.0).unwrap();
        assert_eq!(out.pixels()[2], 0.0);
    }

    #[test]
    fn histogram_match_requires_sector_pixels() {
        let img = intensity(2, 1, vec![1.0, 2.0]);
        let err = histogram_match(&img, &Mask::filled(2, 1, false), 127.0, 32.0).unwrap_err();
        assert!(matches!(err, Error::EmptyRegion(_)));
    }

    #[test]
    fn mirror_is_an_involution() {
        let m = Mask::from_fn(5, 3, |r, c| (r + 2 * c) % 3 == 0);
        assert_eq!(m.mirrored().mirrored(), m);
        assert_eq!(m.mirrored().get(0, 4), m.get(0, 0));
    }
}
