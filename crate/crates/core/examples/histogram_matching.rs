//! Maps a skewed B-mode frame onto the N(127, 32) target used before any
//! pixel-based metric, and prints the moments before and after.

use echoiq::imaging::{histogram_match, Domain, GrayImage, Mask, Spacing, MATCH_MEAN, MATCH_STD};
use echoiq::rng::CounterRng;

fn moments(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (
        m,
        (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n).sqrt(),
    )
}

fn main() -> echoiq::Result<()> {
    let (w, h) = (256, 256);
    let rng = CounterRng::new(7);
    // Exponential-looking speckle: dark with a long bright tail.
    let px: Vec<f64> = (0..w * h)
        .map(|i| {
            (-40.0 * (1.0 - rng.uniform_at(i as u64)).ln())
                .min(255.0)
                .round()
        })
        .collect();
    let img = GrayImage::new(w, h, px, Spacing::isotropic(0.3), Domain::Intensity)?;
    let sector = Mask::filled(w, h, true);
    let matched = histogram_match(&img, &sector, MATCH_MEAN, MATCH_STD)?;

    let (m0, s0) = moments(img.pixels());
    let (m1, s1) = moments(matched.pixels());
    println!("before: mean {m0:7.2}  std {s0:6.2}");
    println!("after:  mean {m1:7.2}  std {s1:6.2}  (target {MATCH_MEAN} / {MATCH_STD})");
    Ok(())
}
