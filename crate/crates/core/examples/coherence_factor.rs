//! Coherence factor of synthetic channel data with a prescribed CF ramp,
//! and the mean CF of fully random phases against its Rayleigh expectation.

use echoiq::coherence::{coherence_factor, gamma_normalize, DEFAULT_GAMMA};
use echoiq::imaging::Spacing;
use echoiq::phantom::{gen_channel_phantom, random_phase_expected_cf, CoherenceProfile};

fn main() -> echoiq::Result<()> {
    let (w, h, n) = (9, 4, 16);
    let ramp = CoherenceProfile::Ramp { from: 0.1, to: 0.9 };
    let frame = gen_channel_phantom(w, h, n, &ramp, 1)?;
    let cf = coherence_factor(&frame, Spacing::default())?;
    let norm = gamma_normalize(&cf, DEFAULT_GAMMA)?;
    println!("col  prescribed  computed  gamma-normalized");
    for c in 0..w {
        println!(
            "{c:>3}  {:>10.4}  {:>8.4}  {:>16.4}",
            ramp.target(0, c, w).unwrap(),
            cf.get(0, c),
            norm.get(0, c)
        );
    }

    for n in [16, 64] {
        let frame = gen_channel_phantom(128, 128, n, &CoherenceProfile::RandomPhase, 5)?;
        let cf = coherence_factor(&frame, Spacing::default())?;
        let mean = cf.pixels().iter().sum::<f64>() / cf.pixels().len() as f64;
        println!(
            "random phases, N = {n}: mean CF {mean:.4}, expected {:.4}",
            random_phase_expected_cf(n)
        );
    }
    Ok(())
}
