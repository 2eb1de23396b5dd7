//! SSIM, PSNR and relative pixel error between a target coherence image and
//! progressively noisier predictions.

use echoiq::imaging::{Domain, GrayImage, Spacing};
use echoiq::imgcmp::{compare_frame, ComparisonReport};
use echoiq::rng::CounterRng;

fn main() -> echoiq::Result<()> {
    let (w, h) = (64, 64);
    let target: Vec<f64> = (0..w * h)
        .map(|i| {
            let (r, c) = ((i / w) as f64, (i % w) as f64);
            0.5 + 0.4 * (r / 9.0).sin() * (c / 13.0).cos()
        })
        .collect();
    let t = GrayImage::new(w, h, target.clone(), Spacing::default(), Domain::Coherence)?;
    let rng = CounterRng::new(3);
    let mut frames = Vec::new();
    for (k, amp) in [0.0, 0.01, 0.05, 0.1].into_iter().enumerate() {
        let noisy: Vec<f64> = target
            .iter()
            .enumerate()
            .map(|(i, v)| (v + amp * rng.normal_at((k * w * h + i) as u64)).clamp(0.0, 1.0))
            .collect();
        let p = GrayImage::new(w, h, noisy, Spacing::default(), Domain::Coherence)?;
        frames.push(compare_frame(&format!("noise{amp}"), &t, &p)?);
    }
    println!("{}", ComparisonReport::new(frames).to_json());
    Ok(())
}
