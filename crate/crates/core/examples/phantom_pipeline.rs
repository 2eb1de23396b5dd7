//! End to end on a synthetic corpus: phantom frames with channel data,
//! regional metrics, then calibration and evaluation against annotations.

use echoiq::pipeline::{
    cmd_evaluate, cmd_metrics, cmd_phantom, Corpus, CorpusJob, EvaluateOptions,
};

fn main() -> echoiq::Result<()> {
    let dir = std::env::temp_dir().join("echoiq-phantom-pipeline");
    let mut job = CorpusJob::new(&dir, 20, 42);
    job.elements = 8;
    let files = cmd_phantom(&job)?;
    let corpus = Corpus::load(&files.manifest)?;
    let metrics = dir.join("metrics.csv");
    let rows = cmd_metrics(&corpus.frames, &metrics)?;
    println!(
        "{} frames, {} metric rows -> {}",
        corpus.frames.len(),
        rows.len(),
        metrics.display()
    );

    let report = cmd_evaluate(
        &[metrics],
        &files.annotations,
        &files.splits,
        EvaluateOptions {
            wilcoxon: true,
            timestamp: false,
        },
        &dir.join("evaluation.json"),
    )?;
    println!("metric      Spearman   MAE    accuracy");
    for m in &report.metrics {
        println!(
            "{:<10} {:>8.3} {:>6.3} {:>9.1}%",
            m.metric.as_str(),
            m.test.spearman.unwrap_or(f64::NAN),
            m.test.mae,
            100.0 * m.test.accuracy
        );
    }
    if let Some(s) = report.inter_observer {
        println!(
            "{:<10} {:>8.3} {:>6.3} {:>9.1}%",
            "observers",
            s.spearman.unwrap_or(f64::NAN),
            s.mae,
            100.0 * s.accuracy
        );
    }
    Ok(())
}
