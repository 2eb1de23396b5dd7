//! Regional image-quality estimation for cardiac ultrasound.
//!
//! The crate takes B-mode frames, label masks (LV, MYO, LA, AO) and
//! optionally channel data or coherence images, and produces per-region
//! quality metrics together with the statistics used to compare those
//! metrics against expert quality labels.
//!
//! - [`imaging`]: image and mask containers, PGM / CIMG1 I/O, histograms and
//!   histogram matching to a Gaussian target.
//! - [`regions`]: division of the myocardium into six segments plus two
//!   annulus disks, with out-of-sector exclusion.
//! - [`qmetrics`]: pixel intensity, CR, CNR, gCNR and regional coherence.
//! - [`coherence`]: coherence factor from channel data and gamma
//!   normalization.
//! - [`imgcmp`]: SSIM, PSNR and relative pixel error between coherence images.
//! - [`evalstats`]: linear calibration, Spearman, MAE/accuracy,
//!   inter-observer aggregation, Wilcoxon signed-rank and agreement by
//!   quality category.
//! - [`phantom`]: seed-deterministic synthetic fixtures.
//! - [`pipeline`]: batch commands used by the `echoiq` binary.

pub mod coherence;
pub mod error;
pub mod evalstats;
pub mod imaging;
pub mod imgcmp;
pub mod phantom;
pub mod pipeline;
pub mod qmetrics;
pub mod regions;
pub mod rng;

pub use error::{Error, Result};
