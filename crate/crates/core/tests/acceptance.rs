//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! fails the process if any criterion fails.

use std::time::{Duration, Instant};

use num_complex::Complex64;
use statrs::distribution::{ContinuousCDF, Normal};

use echoiq::coherence::{coherence_factor, coherence_factor_pixel};
use echoiq::evalstats::{agreement_by_quality, fit_linear, spearman, wilcoxon_signed_rank};
use echoiq::imaging::{
    histogram, histogram_match, Domain, GrayImage, Histogram, Label, Mask, Spacing,
};
use echoiq::imgcmp::{psnr, rpe, ssim, RPE_EPSILON};
use echoiq::phantom::{
    gen_chamber_phantom, gen_channel_phantom, gen_contrast_phantom, ChamberParams,
    CoherenceProfile, ContrastParams,
};
use echoiq::pipeline::{
    cmd_evaluate, cmd_metrics, cmd_phantom, with_threads, Corpus, CorpusJob, EvaluateOptions,
};
use echoiq::qmetrics::{cnr, contrast_ratio, gcnr, region_stats};
use echoiq::regions::{divide_regions, RegionId, View, ANNULUS_RADIUS_MM};
use echoiq::rng::{CounterRng, RngCursor};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn cursor(seed: u64) -> RngCursor {
    RngCursor::new(CounterRng::new(seed).with_stream(0xACCE))
}

fn within(limit: Duration, start: Instant) -> Result<Duration, String> {
    let t = start.elapsed();
    ensure!(t < limit, "took {t:.2?}, limit {limit:?}");
    Ok(t)
}

// ------------------------------------------------------------------ 1

fn random_histogram(c: &mut RngCursor) -> Histogram {
    let sparse = c.uniform() < 0.5;
    let bins = std::array::from_fn(|_| {
        if sparse && c.uniform() < 0.8 {
            0
        } else {
            c.below(1000)
        }
    });
    Histogram::from_bins(bins).unwrap_or_else(|_| {
        let mut b = [0u64; 256];
        b[c.below(256) as usize] = 1;
        Histogram::from_bins(b).unwrap()
    })
}

/// Per-bin minimum of the two normalized histograms, summed directly.
fn gcnr_oracle(a: &Histogram, b: &Histogram) -> f64 {
    let (ta, tb) = (a.total() as f64, b.total() as f64);
    let mut overlap = 0.0;
    for i in 0..256 {
        overlap += (a.bins()[i] as f64 / ta).min(b.bins()[i] as f64 / tb);
    }
    1.0 - overlap
}

fn gcnr_oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut c = cursor(1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (a, b) = (random_histogram(&mut c), random_histogram(&mut c));
        worst = worst.max((gcnr(&a, &b) - gcnr_oracle(&a, &b)).abs());
    }
    ensure!(worst <= 1e-12, "max deviation {worst:e}");
    for _ in 0..100 {
        let a = random_histogram(&mut c);
        ensure!(
            gcnr(&a, &a) == 0.0,
            "identical histograms give {}",
            gcnr(&a, &a)
        );
        let split = 1 + c.below(254) as usize;
        let mut lo = *a.bins();
        let mut hi = *a.bins();
        lo[split..].fill(0);
        hi[..split].fill(0);
        lo[0] += 1;
        hi[255] += 1;
        let (lo, hi) = (
            Histogram::from_bins(lo).unwrap(),
            Histogram::from_bins(hi).unwrap(),
        );
        ensure!(
            gcnr(&lo, &hi) == 1.0,
            "disjoint histograms give {}",
            gcnr(&lo, &hi)
        );
    }
    let t = within(Duration::from_secs(5), start)?;
    Ok(format!("max |Δ| {worst:.1e} over 1000 pairs in {t:.2?}"))
}

// ------------------------------------------------------------------ 2

fn contrast_phantom_analytic() -> Outcome {
    let p = ContrastParams {
        roi_mean: 120.0,
        roi_std: 15.0,
        bg_mean: 40.0,
        bg_std: 15.0,
        pixels_per_region: 100_000,
    };
    let (img, mask) = gen_contrast_phantom(&p, 2024).map_err(|e| e.to_string())?;
    let roi = mask.clipped_class_mask(Label::Myo);
    let bg = mask.clipped_class_mask(Label::Lv);
    let (rs, bs) = (
        region_stats(&img, &roi).unwrap(),
        region_stats(&img, &bg).unwrap(),
    );
    ensure!(
        rs.count.abs_diff(100_000) < 500 && bs.count.abs_diff(100_000) < 500,
        "regions hold {} and {} pixels",
        rs.count,
        bs.count
    );
    let cnr_v = cnr(&rs, &bs).unwrap();
    let cr_v = contrast_ratio(&rs, &bs).unwrap();
    let g = gcnr(
        &histogram(&img, &roi).unwrap(),
        &histogram(&img, &bg).unwrap(),
    );
    // Overlap of two equal-variance Gaussians: 2Φ(Δμ / 2σ) − 1.
    let analytic = 2.0 * Normal::standard().cdf(80.0 / 30.0) - 1.0;
    let expected_cnr = 80.0 / 450f64.sqrt();
    ensure!(
        (cnr_v - expected_cnr).abs() <= 0.1,
        "CNR {cnr_v} vs {expected_cnr}"
    );
    ensure!((cr_v - 3.0).abs() <= 0.05, "CR {cr_v}");
    ensure!((g - analytic).abs() <= 0.02, "gCNR {g} vs {analytic}");
    Ok(format!(
        "CNR {cnr_v:.4} CR {cr_v:.4} gCNR {g:.4} (analytic {analytic:.4})"
    ))
}

// ------------------------------------------------------------------ 3

fn coherence_factor_exactness() -> Outcome {
    let mut c = cursor(3);
    let (w, h) = (24, 20);
    let mut worst = 0.0f64;
    for n in [2, 3, 8, 16, 33] {
        let map: Vec<f64> = (0..w * h).map(|_| c.uniform()).collect();
        let frame = gen_channel_phantom(w, h, n, &CoherenceProfile::Map(map.clone()), n as u64)
            .map_err(|e| e.to_string())?;
        let cf = coherence_factor(&frame, Spacing::default()).unwrap();
        for (got, want) in cf.pixels().iter().zip(&map) {
            worst = worst.max((got - want).abs());
        }
    }
    ensure!(worst <= 1e-6, "prescribed CF off by {worst:e}");

    let mut drift = 0.0f64;
    for _ in 0..10_000 {
        let n = 1 + c.below(64) as usize;
        let s: Vec<Complex64> = (0..n)
            .map(|_| Complex64::from_polar(c.range(0.01, 3.0), c.range(-3.2, 3.2)))
            .collect();
        let k = Complex64::from_polar(c.range(1e-3, 1e3), c.range(-3.2, 3.2));
        let scaled: Vec<Complex64> = s.iter().map(|v| v * k).collect();
        drift = drift.max((coherence_factor_pixel(&s) - coherence_factor_pixel(&scaled)).abs());
    }
    ensure!(drift <= 1e-12, "gain/phase changed CF by {drift:e}");

    let mut notes = Vec::new();
    for n in [16usize, 64] {
        let frame = gen_channel_phantom(64, 64, n, &CoherenceProfile::RandomPhase, 7)
            .map_err(|e| e.to_string())?;
        let cf = coherence_factor(&frame, Spacing::default()).unwrap();
        let mean = cf.pixels().iter().sum::<f64>() / cf.pixels().len() as f64;
        let expected = std::f64::consts::PI.sqrt() / 2.0 / (n as f64).sqrt();
        let rel = (mean - expected).abs() / expected;
        ensure!(rel <= 0.05, "N={n}: mean CF {mean} vs {expected}");
        notes.push(format!("N={n} {:.1}%", 100.0 * rel));
    }
    Ok(format!(
        "map |Δ| {worst:.1e}, invariance |Δ| {drift:.1e}, random phase {}",
        notes.join(", ")
    ))
}

// ------------------------------------------------------------------ 4

fn region_partition() -> Outcome {
    let start = Instant::now();
    for k in 0..50u64 {
        let view = [View::A2c, View::A4c, View::Alax][(k % 3) as usize];
        let s = Spacing::new(0.25 + 0.01 * (k % 20) as f64, 0.3 + 0.005 * (k % 13) as f64).unwrap();
        let (w, h) = (64 + 4 * (k % 9) as usize, 64 + 4 * (k % 7) as usize);
        let params = if k < 10 {
            ChamberParams::symmetric(view, w, h, s)
        } else {
            ChamberParams::random(view, w, h, s, k % 2 == 0, 1000 + k)
        };
        let mask = gen_chamber_phantom(&params).map_err(|e| e.to_string())?;
        let set = divide_regions(&mask, view, ANNULUS_RADIUS_MM)
            .map_err(|e| format!("phantom {k}: {e}"))?;
        // Set equality against sector-clipped MYO, checked independently of
        // `check_partition`.
        let myo = mask.clipped_class_mask(Label::Myo);
        let mut hits = vec![0u8; w * h];
        for id in RegionId::SEGMENTS {
            for i in set.regions[&id].mask.indices() {
                hits[i] += 1;
            }
        }
        for (i, &n) in hits.iter().enumerate() {
            let expected = u8::from(myo.bits()[i]);
            ensure!(
                n == expected,
                "phantom {k}: pixel {i} covered {n} times, MYO {expected}"
            );
        }
        set.check_partition(&mask)
            .map_err(|e| format!("phantom {k}: {e}"))?;
        let mirrored = divide_regions(&mask.mirrored(), view, ANNULUS_RADIUS_MM)
            .map_err(|e| format!("mirrored phantom {k}: {e}"))?;
        ensure!(
            mirrored == set.mirrored(),
            "phantom {k} ({view}): mirror equivariance broken"
        );
    }

    // Clip the bottom-left corner of the wedge until about 60% of the basal
    // left segment lies outside.
    let p = ChamberParams::symmetric(View::A4c, 96, 96, Spacing::isotropic(0.3));
    let full = gen_chamber_phantom(&p).unwrap();
    let clipped = |cut: usize| {
        let sector = Mask::from_fn(96, 96, |r, c| {
            full.sector().get(r, c) && !(r >= cut && c < 48)
        });
        let mask = full.clone().with_sector(sector).unwrap();
        divide_regions(&mask, View::A4c, ANNULUS_RADIUS_MM).unwrap()
    };
    let (cut, set) = (0..96)
        .map(|cut| (cut, clipped(cut)))
        .min_by(|a, b| {
            let f = |s: &echoiq::regions::RegionSet| {
                (s.regions[&RegionId::BasalLeft].outside_fraction() - 0.6).abs()
            };
            f(&a.1).total_cmp(&f(&b.1))
        })
        .unwrap();
    let basal = &set.regions[&RegionId::BasalLeft];
    let frac = basal.outside_fraction();
    ensure!(
        (frac - 0.6).abs() < 0.05,
        "closest fixture is {frac} outside"
    );
    ensure!(
        basal.excluded,
        "basal left {frac:.2} outside but not excluded"
    );
    for id in RegionId::SEGMENTS
        .into_iter()
        .filter(|&id| id != RegionId::BasalLeft)
    {
        ensure!(
            !set.regions[&id].excluded,
            "{id} excluded by the row-{cut} cut"
        );
    }
    let t = within(Duration::from_secs(30), start)?;
    Ok(format!(
        "50 phantoms in {t:.2?}; fixture basal_left {:.0}% outside",
        100.0 * frac
    ))
}

// ------------------------------------------------------------------ 5

fn ranks_brute(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|v| {
            let below = x.iter().filter(|u| *u < v).count() as f64;
            let equal = x.iter().filter(|u| *u == v).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    sxy / (sxx * syy).sqrt()
}

/// Two-sided p by listing every sign pattern of the ranked magnitudes.
fn wilcoxon_enumerated(d: &[f64]) -> f64 {
    let ranks = ranks_brute(&d.iter().map(|v| v.abs()).collect::<Vec<_>>());
    let total: f64 = ranks.iter().sum();
    let observed: f64 = d
        .iter()
        .zip(&ranks)
        .filter(|(v, _)| **v > 0.0)
        .map(|(_, r)| r)
        .sum();
    let dev = (observed - total / 2.0).abs();
    let n = d.len();
    let extreme = (0u32..1 << n)
        .filter(|signs| {
            let w: f64 = (0..n)
                .filter(|i| signs >> i & 1 == 1)
                .map(|i| ranks[i])
                .sum();
            (w - total / 2.0).abs() >= dev - 1e-9
        })
        .count();
    extreme as f64 / (1u64 << n) as f64
}

fn statistics_oracles() -> Outcome {
    let mut c = cursor(5);
    let mut rho_dev = 0.0f64;
    let mut done = 0;
    while done < 1000 {
        let n = 3 + c.below(60) as usize;
        let levels = 2 + c.below(10);
        let x: Vec<f64> = (0..n).map(|_| c.below(levels) as f64).collect();
        let y: Vec<f64> = (0..n).map(|_| c.below(levels) as f64 * 0.5).collect();
        let (Ok(rho), false) = (
            spearman(&x, &y),
            x.iter().all(|v| *v == x[0]) || y.iter().all(|v| *v == y[0]),
        ) else {
            continue;
        };
        rho_dev = rho_dev.max((rho - pearson(&ranks_brute(&x), &ranks_brute(&y))).abs());
        done += 1;
    }
    ensure!(rho_dev <= 1e-12, "Spearman off by {rho_dev:e}");

    let mut p_dev = 0.0f64;
    for n in 1..=12usize {
        for _ in 0..20 {
            // Small integer differences produce tied magnitudes.
            let d: Vec<f64> = (0..n)
                .map(|_| {
                    let m = 1 + c.below(6) as i64;
                    (if c.uniform() < 0.5 { -m } else { m }) as f64
                })
                .collect();
            let zero = vec![0.0; n];
            let r = wilcoxon_signed_rank(&d, &zero).map_err(|e| e.to_string())?;
            ensure!(r.exact && r.n == n, "n={n}: expected an exact test");
            p_dev = p_dev.max((r.p_two_sided - wilcoxon_enumerated(&d)).abs());
        }
    }
    ensure!(p_dev <= 1e-12, "Wilcoxon p off by {p_dev:e}");

    let mut ols_dev = 0.0f64;
    for _ in 0..200 {
        let n = 2 + c.below(100) as usize;
        let x: Vec<f64> = (0..n).map(|_| c.range(-5.0, 5.0)).collect();
        let y: Vec<f64> = x.iter().map(|v| 1.5 * v - 0.7 + c.normal()).collect();
        let fit = fit_linear(&x, &y).map_err(|e| e.to_string())?;
        // Normal equations [n Σx; Σx Σx²][b; m] = [Σy; Σxy] by Cramer's rule.
        let (sx, sxx) = (x.iter().sum::<f64>(), x.iter().map(|v| v * v).sum::<f64>());
        let (sy, sxy) = (
            y.iter().sum::<f64>(),
            x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>(),
        );
        let det = n as f64 * sxx - sx * sx;
        let slope = (n as f64 * sxy - sx * sy) / det;
        let intercept = (sxx * sy - sx * sxy) / det;
        ols_dev = ols_dev
            .max((fit.slope - slope).abs())
            .max((fit.intercept - intercept).abs());
    }
    ensure!(ols_dev <= 1e-9, "OLS off by {ols_dev:e}");
    Ok(format!(
        "Spearman {rho_dev:.1e}, Wilcoxon {p_dev:.1e}, OLS {ols_dev:.1e}"
    ))
}

// ------------------------------------------------------------------ 6

fn histogram_matching() -> Outcome {
    let mut c = cursor(6);
    let side = 1000;
    let px: Vec<f64> = (0..side * side).map(|_| c.below(256) as f64).collect();
    let img = GrayImage::new(side, side, px, Spacing::default(), Domain::Intensity).unwrap();
    let all = Mask::filled(side, side, true);
    let out = histogram_match(&img, &all, 127.0, 32.0).map_err(|e| e.to_string())?;
    let n = out.pixels().len() as f64;
    let mean = out.pixels().iter().sum::<f64>() / n;
    let std = (out.pixels().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    ensure!((mean - 127.0).abs() <= 2.0, "mean {mean}");
    ensure!((std - 32.0).abs() <= 3.0, "std {std}");

    let mut drift = 0.0f64;
    for k in 0..100 {
        let (w, h) = (8 + c.below(40) as usize, 8 + c.below(40) as usize);
        let lo = c.below(200);
        let span = 1 + c.below(256 - lo);
        let px: Vec<f64> = (0..w * h).map(|_| (lo + c.below(span)) as f64).collect();
        let img = GrayImage::new(w, h, px, Spacing::default(), Domain::Intensity).unwrap();
        let all = Mask::filled(w, h, true);
        let once = histogram_match(&img, &all, 127.0, 32.0).unwrap();
        let twice = histogram_match(&once, &all, 127.0, 32.0).unwrap();
        for i in 0..w * h {
            for j in 0..w * h {
                if img.pixels()[i] < img.pixels()[j] {
                    ensure!(
                        once.pixels()[i] <= once.pixels()[j],
                        "image {k}: order reversed"
                    );
                }
            }
            drift = drift.max((once.pixels()[i] - twice.pixels()[i]).abs());
        }
    }
    ensure!(drift <= 1.0, "double application drifted {drift} levels");
    Ok(format!("mean {mean:.2} std {std:.2}; max drift {drift}"))
}

// ------------------------------------------------------------------ 7

fn image_comparison() -> Outcome {
    let mut c = cursor(7);
    let coh = |w: usize, h: usize, px: Vec<f64>| {
        GrayImage::new(w, h, px, Spacing::default(), Domain::Coherence).unwrap()
    };
    let (w, h) = (40, 32);
    let x = coh(w, h, (0..w * h).map(|_| c.range(0.0, 0.9)).collect());
    let s = ssim(&x, &x).map_err(|e| e.to_string())?;
    ensure!(s == 1.0, "SSIM(x, x) = {s}");
    let shifted = coh(w, h, x.pixels().iter().map(|v| v + 0.1).collect());
    let p = psnr(&x, &shifted, 1.0).map_err(|e| e.to_string())?;
    ensure!((p - 20.0).abs() <= 1e-6, "PSNR {p}");
    let r = rpe(&coh(1, 1, vec![0.0]), &coh(1, 1, vec![0.01]), RPE_EPSILON)
        .map_err(|e| e.to_string())?;
    ensure!(r == 100.0, "RPE {r}");
    Ok(format!("SSIM {s}, PSNR {p:.9} dB, RPE {r}"))
}

// ------------------------------------------------------------------ 8

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut job = CorpusJob::new(dir.path().join("corpus"), 15, 8);
    job.elements = 8;
    let files = cmd_phantom(&job).map_err(|e| e.to_string())?;
    let corpus = Corpus::load(&files.manifest).map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for threads in [1usize, 8] {
        let m = dir.path().join(format!("metrics{threads}.csv"));
        let e = dir.path().join(format!("eval{threads}.json"));
        with_threads(Some(threads), || {
            cmd_metrics(&corpus.frames, &m)?;
            let options = EvaluateOptions {
                wilcoxon: true,
                timestamp: false,
            };
            cmd_evaluate(
                std::slice::from_ref(&m),
                &files.annotations,
                &files.splits,
                options,
                &e,
            )
        })
        .map_err(|e| format!("{threads} threads: {e}"))?;
        outputs.push((std::fs::read(&m).unwrap(), std::fs::read(&e).unwrap()));
    }
    ensure!(
        outputs[0].0 == outputs[1].0,
        "metrics CSV differs between 1 and 8 threads"
    );
    ensure!(
        outputs[0].1 == outputs[1].1,
        "evaluation JSON differs between 1 and 8 threads"
    );
    let rows = outputs[0].0.iter().filter(|b| **b == b'\n').count() - 1;
    ensure!(rows > 0, "no metric rows");
    Ok(format!(
        "{rows} metric rows, {} report bytes identical",
        outputs[0].1.len()
    ))
}

// ------------------------------------------------------------------ 9

fn agreement_by_quality_direction() -> Outcome {
    let mut c = cursor(9);
    let (mut diffs, mut quality) = (Vec::new(), Vec::new());
    // Category 2 stays empty on purpose.
    for cat in [1u32, 3, 4, 5] {
        let sd = 4.0 / cat as f64;
        for _ in 0..2000 {
            quality.push(cat as f64 + c.range(-0.49, 0.49));
            diffs.push(sd * c.normal() + 0.3);
        }
    }
    let groups = agreement_by_quality(&diffs, &quality).map_err(|e| e.to_string())?;
    ensure!(
        groups[1].n == 0 && groups[1].std.is_none(),
        "category 2 should be empty"
    );
    let stds: Vec<f64> = groups.iter().filter_map(|g| g.std).collect();
    ensure!(stds.len() == 4, "{} populated categories", stds.len());
    ensure!(
        stds.windows(2).all(|p| p[0] > p[1]),
        "stds not decreasing: {stds:?}"
    );
    let shown: Vec<String> = stds.iter().map(|s| format!("{s:.3}")).collect();
    Ok(format!("stds {}", shown.join(" > ")))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 gCNR oracle equivalence", gcnr_oracle_equivalence),
        ("2 CNR/CR/gCNR analytic check", contrast_phantom_analytic),
        ("3 coherence-factor exactness", coherence_factor_exactness),
        ("4 region partition", region_partition),
        ("5 statistics oracles", statistics_oracles),
        ("6 histogram matching", histogram_matching),
        ("7 image-comparison metrics", image_comparison),
        ("8 end-to-end determinism", determinism),
        ("9 agreement by quality", agreement_by_quality_direction),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".to_string()));
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
