//! Cross-module properties checked on generated inputs.

use num_complex::{Complex32, Complex64};
use proptest::prelude::*;

use echoiq::coherence::{
    coherence_factor, coherence_factor_pixel, decode_chdf, encode_chdf, gamma_normalize,
    ChannelFrame,
};
use echoiq::evalstats::{inter_observer, method_vs_observers, QualityRecord, Source};
use echoiq::imaging::{
    decode_gray, encode_gray, histogram, histogram_match, Domain, GrayImage, Label, Mask, Spacing,
};
use echoiq::imgcmp::ssim;
use echoiq::phantom::{gen_chamber_phantom, gen_contrast_phantom, ChamberParams, ContrastParams};
use echoiq::pipeline::with_threads;
use echoiq::qmetrics::{cnr, gcnr, region_stats};
use echoiq::regions::{divide_regions, RegionId, View, ANNULUS_RADIUS_MM};

fn intensity_image() -> impl Strategy<Value = GrayImage> {
    (1usize..24, 1usize..24).prop_flat_map(|(w, h)| {
        prop::collection::vec(0u8..=255, w * h).prop_map(move |px| {
            GrayImage::new(
                w,
                h,
                px.into_iter().map(f64::from).collect(),
                Spacing::isotropic(0.3),
                Domain::Intensity,
            )
            .unwrap()
        })
    })
}

fn coherence_image(w: usize, h: usize) -> impl Strategy<Value = GrayImage> {
    prop::collection::vec(0.0f64..=1.0, w * h).prop_map(move |px| {
        GrayImage::new(w, h, px, Spacing::new(0.2, 0.3).unwrap(), Domain::Coherence).unwrap()
    })
}

fn view() -> impl Strategy<Value = View> {
    prop_oneof![Just(View::A2c), Just(View::A4c), Just(View::Alax)]
}

fn chamber(view: View, skewed: bool, seed: u64) -> ChamberParams {
    let sd = 0.25 + 0.3 * (seed % 97) as f64 / 97.0;
    let sw = 0.25 + 0.3 * (seed % 89) as f64 / 89.0;
    ChamberParams::random(view, 80, 80, Spacing::new(sd, sw).unwrap(), skewed, seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn histogram_match_is_monotone_and_stable(img in intensity_image()) {
        let all = Mask::filled(img.width(), img.height(), true);
        let once = histogram_match(&img, &all, 127.0, 32.0).unwrap();
        let twice = histogram_match(&once, &all, 127.0, 32.0).unwrap();
        for (a, b) in once.pixels().iter().zip(twice.pixels()) {
            prop_assert!((a - b).abs() <= 1.0);
        }
        let pairs: Vec<(f64, f64)> = img.pixels().iter().copied().zip(once.pixels().iter().copied()).collect();
        for &(v1, m1) in &pairs {
            for &(v2, m2) in &pairs {
                if v1 <= v2 {
                    prop_assert!(m1 <= m2);
                }
            }
        }
    }

    #[test]
    fn image_files_round_trip_byte_for_byte(img in intensity_image(), coh in coherence_image(7, 5)) {
        // CIMG1 stores 32-bit floats, so only PGM keeps f64 pixels exactly;
        // both formats reproduce their file bytes.
        let back = decode_gray(&encode_gray(&img), img.spacing()).unwrap();
        prop_assert_eq!(&back, &img);
        for im in [&img, &coh] {
            let bytes = encode_gray(im);
            let back = decode_gray(&bytes, im.spacing()).unwrap();
            prop_assert_eq!(encode_gray(&back), bytes);
        }
    }

    #[test]
    fn histogram_total_is_mask_size(img in intensity_image(), seed in any::<u64>()) {
        let mask = Mask::from_fn(img.width(), img.height(), |r, c| !(r * 31 + c * 17 + seed as usize).is_multiple_of(3));
        prop_assume!(!mask.is_empty());
        let h = histogram(&img, &mask).unwrap();
        prop_assert_eq!(h.total(), mask.count() as u64);
        prop_assert!((h.densities().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coherence_factor_ignores_common_gain_and_phase(
        parts in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..24),
        gain in 0.01f64..100.0,
        phase in -3.2f64..3.2,
    ) {
        let s: Vec<Complex64> = parts.iter().map(|&(re, im)| Complex64::new(re, im)).collect();
        let k = Complex64::from_polar(gain, phase);
        let scaled: Vec<Complex64> = s.iter().map(|v| v * k).collect();
        let (a, b) = (coherence_factor_pixel(&s), coherence_factor_pixel(&scaled));
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn shared_phase_is_fully_coherent(
        amps in prop::collection::vec(0.0f64..3.0, 1..32),
        phase in -3.2f64..3.2,
    ) {
        prop_assume!(amps.iter().any(|&a| a > 0.0));
        let s: Vec<Complex64> = amps.iter().map(|&a| Complex64::from_polar(a, phase)).collect();
        prop_assert!((coherence_factor_pixel(&s) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn channel_files_round_trip(
        (w, h, n) in (1usize..5, 1usize..5, 1usize..5),
        seed in any::<u32>(),
    ) {
        let signals: Vec<Complex32> = (0..w * h * n)
            .map(|i| {
                let x = (i as u32).wrapping_mul(2_654_435_761).wrapping_add(seed);
                Complex32::new((x % 1000) as f32 / 100.0 - 5.0, (x / 1000 % 1000) as f32 / 100.0 - 5.0)
            })
            .collect();
        let frame = ChannelFrame::new(w, h, n, signals).unwrap();
        let bytes = encode_chdf(&frame);
        let back = decode_chdf(&bytes).unwrap();
        prop_assert_eq!(&back, &frame);
        prop_assert_eq!(encode_chdf(&back), bytes);
        let cf = coherence_factor(&frame, Spacing::default()).unwrap();
        prop_assert!(cf.pixels().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn gamma_one_is_identity_and_gamma_is_monotone(coh in coherence_image(6, 6), g in 0.1f64..3.0) {
        let same = gamma_normalize(&coh, 1.0).unwrap();
        prop_assert_eq!(same.pixels(), coh.pixels());
        let out = gamma_normalize(&coh, g).unwrap();
        for (i, a) in coh.pixels().iter().enumerate() {
            for (j, b) in coh.pixels().iter().enumerate() {
                if a <= b {
                    prop_assert!(out.pixels()[i] <= out.pixels()[j]);
                }
            }
        }
    }

    #[test]
    fn ssim_of_an_image_with_itself_is_one(coh in coherence_image(13, 12)) {
        prop_assert_eq!(ssim(&coh, &coh).unwrap(), 1.0);
    }

    #[test]
    fn method_copying_an_annotator_has_two_thirds_of_its_pairwise_mae(
        labels in prop::collection::vec((1u8..=5, 1u8..=5, 1u8..=5), 1..30),
    ) {
        let mut records = Vec::new();
        for (i, &(a, b, c)) in labels.iter().enumerate() {
            for (k, s) in [(1, a), (2, b), (3, c)] {
                records.push(QualityRecord {
                    frame_id: format!("f{i}"),
                    region_id: RegionId::MidLeft,
                    source: Source::Annotator(k),
                    score: s as f64,
                });
            }
        }
        let method: Vec<QualityRecord> = records
            .iter()
            .filter(|r| r.source == Source::Annotator(1))
            .map(|r| QualityRecord { source: Source::Method("copy".into()), ..r.clone() })
            .collect();
        let em = method_vs_observers(&method, &records).unwrap().stats().unwrap();
        // Pairs of annotator 1 with the other two.
        let pair_12: Vec<QualityRecord> = records
            .iter()
            .filter(|r| r.source != Source::Annotator(3))
            .cloned()
            .collect();
        let pair_13: Vec<QualityRecord> = records
            .iter()
            .filter(|r| r.source != Source::Annotator(2))
            .cloned()
            .collect();
        let e12 = inter_observer(&pair_12).unwrap();
        let e13 = inter_observer(&pair_13).unwrap();
        let restricted = e12.merge(&e13).stats().unwrap();
        prop_assert!((em.mae - 2.0 / 3.0 * restricted.mae).abs() < 1e-12);
        let zeros = method_vs_observers(&method, &records).unwrap().abs_errors().iter().filter(|e| **e == 0.0).count();
        prop_assert!(zeros >= labels.len());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_chambers_partition_and_mirror(view in view(), skewed in any::<bool>(), seed in 0u64..10_000) {
        let params = chamber(view, skewed, seed);
        let mask = gen_chamber_phantom(&params).unwrap();
        let set = divide_regions(&mask, view, ANNULUS_RADIUS_MM).unwrap();
        set.check_partition(&mask).unwrap();
        let mirrored = divide_regions(&mask.mirrored(), view, ANNULUS_RADIUS_MM).unwrap();
        prop_assert_eq!(mirrored, set.mirrored());
    }

    #[test]
    fn uniform_spacing_scale_keeps_segments(view in view(), seed in 0u64..10_000, k in 0.5f64..3.0) {
        let params = chamber(view, true, seed);
        let mask = gen_chamber_phantom(&params).unwrap();
        let s = mask.spacing();
        let scaled = mask.clone().with_spacing(Spacing::new(k * s.depth, k * s.width).unwrap());
        let a = divide_regions(&mask, view, ANNULUS_RADIUS_MM).unwrap();
        let b = divide_regions(&scaled, view, ANNULUS_RADIUS_MM).unwrap();
        prop_assert_eq!(a.landmarks, b.landmarks);
        for id in RegionId::SEGMENTS {
            prop_assert_eq!(&a.regions[&id], &b.regions[&id]);
        }
    }

    #[test]
    fn region_division_does_not_depend_on_threads(view in view(), seed in 0u64..10_000) {
        let mask = gen_chamber_phantom(&chamber(view, true, seed)).unwrap();
        let one = with_threads(Some(1), || divide_regions(&mask, view, ANNULUS_RADIUS_MM)).unwrap();
        let many = with_threads(Some(4), || divide_regions(&mask, view, ANNULUS_RADIUS_MM)).unwrap();
        prop_assert_eq!(one, many);
    }

    #[test]
    fn contrast_phantoms_are_seed_deterministic(seed in any::<u64>()) {
        let p = ContrastParams { roi_mean: 90.0, roi_std: 20.0, bg_mean: 50.0, bg_std: 10.0, pixels_per_region: 500 };
        let a = gen_contrast_phantom(&p, seed).unwrap();
        let b = with_threads(Some(3), || gen_contrast_phantom(&p, seed)).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn widening_separation_never_lowers_contrast() {
    let mut last = (0.0f64, 0.0f64);
    for step in 0..12 {
        let p = ContrastParams {
            roi_mean: 40.0 + 8.0 * step as f64,
            roi_std: 15.0,
            bg_mean: 40.0,
            bg_std: 15.0,
            pixels_per_region: 20_000,
        };
        // Same seed: the noise field is shared, only the ROI mean moves.
        let (img, mask) = gen_contrast_phantom(&p, 77).unwrap();
        let roi = mask.clipped_class_mask(Label::Myo);
        let bg = mask.clipped_class_mask(Label::Lv);
        let g = gcnr(
            &histogram(&img, &roi).unwrap(),
            &histogram(&img, &bg).unwrap(),
        );
        let c = cnr(
            &region_stats(&img, &roi).unwrap(),
            &region_stats(&img, &bg).unwrap(),
        )
        .unwrap()
        .abs();
        assert!(
            g >= last.0,
            "gCNR fell from {} to {g} at step {step}",
            last.0
        );
        assert!(
            c >= last.1,
            "|CNR| fell from {} to {c} at step {step}",
            last.1
        );
        last = (g, c);
    }
}

#[test]
fn chamber_phantoms_meet_the_division_preconditions() {
    for seed in 0..60u64 {
        for view in [View::A2c, View::A4c, View::Alax] {
            let mask = gen_chamber_phantom(&chamber(view, seed % 2 == 0, seed)).unwrap();
            assert_eq!(mask.contains(Label::Ao), view == View::Alax);
            divide_regions(&mask, view, ANNULUS_RADIUS_MM)
                .unwrap_or_else(|e| panic!("seed {seed} {view}: {e}"));
        }
    }
}
