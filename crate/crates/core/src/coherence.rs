//! Coherence factor from delayed per-element channel signals.
//!
//! `CF = |Σ Sᵢ| / Σ |Sᵢ|` per pixel; 1 means the element signals are in
//! phase, values near 0 mean they cancel. The coherence image is
//! gamma-normalized once after creation (`t ↦ t^γ`, γ = 0.5 by default).
//!
//! Channel frames are stored as `CHDF1`: the line `CHDF1\n`, an ASCII line
//! `width height N\n`, then for each pixel (row-major) and each element the
//! pair `(re, im)` as little-endian `f32`.

use std::path::Path;

use num_complex::{Complex32, Complex64};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imaging::{read_file, write_file, Domain, GrayImage, Spacing, MAX_PIXELS};

pub const CHDF_MAGIC: &[u8] = b"CHDF1\n";

pub const DEFAULT_GAMMA: f64 = 0.5;

/// Delayed element signals for every pixel, `height × width × elements`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelFrame {
    width: usize,
    height: usize,
    elements: usize,
    signals: Vec<Complex32>,
}

impl ChannelFrame {
    pub fn new(
        width: usize,
        height: usize,
        elements: usize,
        signals: Vec<Complex32>,
    ) -> Result<Self> {
        if elements == 0 {
            return Err(Error::InvalidInput(
                "channel frame needs at least one element".into(),
            ));
        }
        let n = width
            .checked_mul(height)
            .filter(|&n| n > 0 && n <= MAX_PIXELS)
            .and_then(|n| n.checked_mul(elements))
            .ok_or_else(|| {
                Error::Format(format!("channel frame {width}x{height}x{elements} invalid"))
            })?;
        if signals.len() != n {
            return Err(Error::InvalidInput(format!(
                "channel shape mismatch: {} samples for {width}x{height}x{elements}",
                signals.len()
            )));
        }
        if signals
            .iter()
            .any(|s| !(s.re.is_finite() && s.im.is_finite()))
        {
            return Err(Error::Format(
                "channel frame contains non-finite samples".into(),
            ));
        }
        Ok(ChannelFrame {
            width,
            height,
            elements,
            signals,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn elements(&self) -> usize {
        self.elements
    }

    pub fn signals(&self) -> &[Complex32] {
        &self.signals
    }

    /// Element signals of one pixel.
    pub fn pixel(&self, row: usize, col: usize) -> &[Complex32] {
        let start = (row * self.width + col) * self.elements;
        &self.signals[start..start + self.elements]
    }
}

/// Coherence factor of a single pixel; 0 when every element is silent.
/// Elements are summed in index order.
pub fn coherence_factor_pixel(signals: &[Complex64]) -> f64 {
    let mut coherent = Complex64::new(0.0, 0.0);
    let mut incoherent = 0.0;
    for s in signals {
        coherent += s;
        incoherent += s.norm();
    }
    if incoherent == 0.0 {
        return 0.0;
    }
    // Rounding can push the ratio a hair above 1 for perfectly aligned input.
    (coherent.norm() / incoherent).min(1.0)
}

/// Coherence image (before gamma normalization) of a channel frame.
pub fn coherence_factor(frame: &ChannelFrame, spacing: Spacing) -> Result<GrayImage> {
    let n = frame.elements;
    let pixels: Vec<f64> = frame
        .signals
        .par_chunks(n)
        .map_init(
            || Vec::with_capacity(n),
            |buf, chunk| {
                buf.clear();
                buf.extend(
                    chunk
                        .iter()
                        .map(|s| Complex64::new(s.re as f64, s.im as f64)),
                );
                coherence_factor_pixel(buf)
            },
        )
        .collect();
    GrayImage::new(
        frame.width,
        frame.height,
        pixels,
        spacing,
        Domain::Coherence,
    )
}

/// Applies `t ↦ t^γ` to every pixel of a coherence image.
pub fn gamma_normalize(coh: &GrayImage, gamma: f64) -> Result<GrayImage> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidInput(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    if let Some(v) = coh.pixels().iter().find(|&&v| v < 0.0) {
        return Err(Error::InvalidInput(format!(
            "gamma normalization of negative pixel {v}"
        )));
    }
    let pixels = coh.pixels().iter().map(|&t| t.powf(gamma)).collect();
    GrayImage::new(
        coh.width(),
        coh.height(),
        pixels,
        coh.spacing(),
        Domain::Coherence,
    )
}

pub fn decode_chdf(data: &[u8]) -> Result<ChannelFrame> {
    if data.len() < CHDF_MAGIC.len() {
        return Err(Error::UnexpectedEof);
    }
    if &data[..CHDF_MAGIC.len()] != CHDF_MAGIC {
        return Err(Error::Format("missing CHDF1 magic".into()));
    }
    let rest = &data[CHDF_MAGIC.len()..];
    let nl = rest
        .iter()
        .position(|&b| b == b'\n')
        .ok_or(Error::UnexpectedEof)?;
    let header = std::str::from_utf8(&rest[..nl])
        .map_err(|_| Error::Format("non-ASCII CHDF1 header".into()))?;
    let dims = header
        .split_ascii_whitespace()
        .map(|s| {
            s.parse::<usize>()
                .map_err(|_| Error::Format(format!("invalid CHDF1 header field {s:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let [width, height, elements] = dims[..] else {
        return Err(Error::Format(format!(
            "CHDF1 header needs 3 fields, got {header:?}"
        )));
    };
    let count = width
        .checked_mul(height)
        .filter(|&n| n <= MAX_PIXELS)
        .and_then(|n| n.checked_mul(elements))
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| Error::Format("CHDF1 dimensions overflow".into()))?;
    let body = &rest[nl + 1..];
    if body.len() < count {
        return Err(Error::UnexpectedEof);
    }
    if body.len() > count {
        return Err(Error::Format("trailing bytes after CHDF1 data".into()));
    }
    let signals = body
        .chunks_exact(8)
        .map(|c| {
            Complex32::new(
                f32::from_le_bytes([c[0], c[1], c[2], c[3]]),
                f32::from_le_bytes([c[4], c[5], c[6], c[7]]),
            )
        })
        .collect();
    ChannelFrame::new(width, height, elements, signals)
}

pub fn encode_chdf(frame: &ChannelFrame) -> Vec<u8> {
    let mut out = CHDF_MAGIC.to_vec();
    out.extend_from_slice(
        format!("{} {} {}\n", frame.width, frame.height, frame.elements).as_bytes(),
    );
    out.reserve(frame.signals.len() * 8);
    for s in &frame.signals {
        out.extend_from_slice(&s.re.to_le_bytes());
        out.extend_from_slice(&s.im.to_le_bytes());
    }
    out
}

pub fn load_channel_frame(path: impl AsRef<Path>) -> Result<ChannelFrame> {
    let path = path.as_ref();
    decode_chdf(&read_file(path)?)
}

pub fn save_channel_frame(frame: &ChannelFrame, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &encode_chdf(frame))
}
