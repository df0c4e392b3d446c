//! Plug scores produced elsewhere into a sweep as the `external` scorer.
//!
//! The file holds `id,true_label,p_1..p_K` and optionally a `confidence`
//! column, which is then used verbatim as the ranking.
//!
//! cargo run --example external_scores -- [out_dir]

use noveltask::accommodation::train_base_model;
use noveltask::classifier::predict_known_scores;
use noveltask::detection::{load_external_scores, score_compmean, write_score_matrix, Method};
use noveltask::runner::{cmd_generate, cmd_sweep, read_results, RunOptions};
use noveltask::{ConfigFile, LabelId};

fn main() -> noveltask::Result<()> {
    let out = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("noveltask-external"), Into::into);
    let cf = ConfigFile::default();
    let e = &cf.experiment;
    cmd_generate(&cf, &out)?;

    // stand-in for an outside model: scores from our own classifier, with the
    // complement-mean confidence written into the file
    let bundle = noveltask::synth::generate(e, &cf.generator)?;
    let model = train_base_model(&bundle.d_train, e)?;
    let scores = predict_known_scores(&model, &bundle.eval_det, e.k_known)?;
    let confidence = score_compmean(&scores)?.confidence;
    let labels: Vec<LabelId> = bundle.eval_det.iter().map(|i| i.true_label).collect();
    let path = out.join("outside_scores.csv");
    write_score_matrix(&path, &scores, &labels, Some(&confidence))?;
    let loaded = load_external_scores(&path)?;
    println!("{} validated rows, confidence column: {}", loaded.matrix.len(), loaded.ranking.is_some());

    let opts = RunOptions {
        scorers: vec![Method::MaxProb],
        external_scores: Some(path),
        ..RunOptions::default()
    };
    cmd_sweep(&cf, &out, &opts)?;
    for row in read_results(&out.join("results.csv"))?
        .iter()
        .filter(|r| r.strategy == "detection" && r.scores.segment.name() == "novel" && r.scores.averaging.name() == "micro")
    {
        println!("{:<8} budget {:>3}  novel F1 {:.3}", row.method, row.budget, row.scores.f1);
    }
    Ok(())
}
