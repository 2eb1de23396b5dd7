//! Calibration, agreement statistics, inter-observer variability, a
//! Wilcoxon test and agreement by quality category on synthetic labels.

use echoiq::evalstats::{
    agreement_by_quality, apply_calibration, fit_linear, inter_observer, mae_accuracy,
    method_vs_observers, round_half_up, spearman, wilcoxon_signed_rank, QualityRecord, Source,
};
use echoiq::regions::RegionId;
use echoiq::rng::{CounterRng, RngCursor};

fn main() -> echoiq::Result<()> {
    let mut c = RngCursor::new(CounterRng::new(11));
    let mut truth = Vec::new();
    let mut metric = Vec::new();
    let mut labels = Vec::new();
    for f in 0..40 {
        for id in RegionId::SEGMENTS {
            let q = 1.0 + c.below(5) as f64;
            let frame = format!("f{f:02}");
            truth.push((frame.clone(), id, q));
            metric.push(0.2 * q + 0.08 * c.normal());
            for k in 1..=3 {
                let l = round_half_up((q + 0.5 * c.normal()).clamp(1.0, 5.0));
                labels.push(QualityRecord {
                    frame_id: frame.clone(),
                    region_id: id,
                    source: Source::Annotator(k),
                    score: l,
                });
            }
        }
    }
    let y: Vec<f64> = truth.iter().map(|t| t.2).collect();
    let cal = fit_linear(&metric, &y)?;
    let pred: Vec<f64> = metric.iter().map(|&m| apply_calibration(&cal, m)).collect();
    let ma = mae_accuracy(&pred, &y)?;
    println!(
        "calibration: {:.3} * metric + {:.3}",
        cal.slope, cal.intercept
    );
    println!(
        "vs truth: Spearman {:.3}  MAE {:.3} ± {:.3}  accuracy {:.1}%",
        spearman(&pred, &y)?,
        ma.mae,
        ma.mae_std,
        100.0 * ma.accuracy
    );

    let method: Vec<QualityRecord> = truth
        .iter()
        .zip(&pred)
        .map(|((f, id, _), &p)| QualityRecord {
            frame_id: f.clone(),
            region_id: *id,
            source: Source::Method("metric".into()),
            score: p,
        })
        .collect();
    let inter = inter_observer(&labels)?;
    let vs = method_vs_observers(&method, &labels)?;
    for (name, s) in [("inter-observer", inter.stats()?), ("method", vs.stats()?)] {
        println!(
            "{name:<15} n {:>4}  Spearman {:.3}  MAE {:.3}  accuracy {:.1}%",
            s.n,
            s.spearman.unwrap_or(f64::NAN),
            s.mae,
            100.0 * s.accuracy
        );
    }
    // A noisier second method, scored on the same samples.
    let noisier: Vec<QualityRecord> = method
        .iter()
        .map(|r| QualityRecord {
            score: (r.score + 0.4 * c.normal()).clamp(1.0, 5.0),
            source: Source::Method("noisier".into()),
            ..r.clone()
        })
        .collect();
    let vs2 = method_vs_observers(&noisier, &labels)?;
    let w = wilcoxon_signed_rank(&vs.abs_errors(), &vs2.abs_errors())?;
    println!(
        "Wilcoxon: W = {}  p = {:.4}  (n = {}, exact {})",
        w.statistic, w.p_two_sided, w.n, w.exact
    );

    // Measurement differences whose spread shrinks with quality.
    let diffs: Vec<f64> = y.iter().map(|q| c.normal() * (6.0 - q)).collect();
    for cat in agreement_by_quality(&diffs, &pred)? {
        if let (Some(m), Some(s)) = (cat.mean, cat.std) {
            println!(
                "quality {}: n {:>3}  bias {m:+.2}  std {s:.2}",
                cat.category, cat.n
            );
        }
    }
    Ok(())
}
