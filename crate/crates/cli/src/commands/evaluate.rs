use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use semtrans_core::backends::{Backends, PerceptualDistance};
use semtrans_core::metrics::{
    build_report, eval_perceptual, restricted_argmax, write_feature_dump, Classifier, FeatureExtractor, FeatureSet,
    LinearProbeClassifier, MetricReport, OracleClassifier, ProjectionExtractor, QueryOutcome,
};
use semtrans_core::{Error, HyperParams, Image, TransformQuery};

use super::{collect_ordered, load_input, output_image_rel};
use crate::config::ClassifierKind;
use crate::error::Result;
use crate::manifest::RunDir;
use crate::session::Session;

/// Fixed evaluation stack: feature extractor, classifier restricted to the
/// registry labels, evaluation perceptual distance and reference features.
pub struct Evaluator<'a> {
    session: &'a Session,
    extractor: ProjectionExtractor,
    classifier: Box<dyn Classifier>,
    vocab_index: HashMap<String, usize>,
    subset: BTreeSet<usize>,
    perceptual: Arc<dyn PerceptualDistance>,
    resolution: usize,
    reference: FeatureSet,
}

impl<'a> Evaluator<'a> {
    /// Reference features are extracted from the training images of every
    /// target label among `queries`.
    pub fn new(session: &'a Session, backends: &Backends, hp: &HyperParams, queries: &[TransformQuery]) -> Result<Self> {
        let ev = &session.config.evaluation;
        let index = session.index()?;
        let resolution = hp.metric_resolution;
        let extractor = ProjectionExtractor::new(ev.feature_seed, ev.feature_dim, resolution, ev.feature_grid)?;
        let vocab: Vec<String> = session.registry.labels().map(String::from).collect();
        let classifier: Box<dyn Classifier> = match ev.classifier {
            ClassifierKind::Probe => Box::new(LinearProbeClassifier::new(
                vocab.clone(),
                ev.classifier_seed,
                resolution,
                ev.classifier_grid,
            )?),
            ClassifierKind::Oracle => {
                let mut oracle = OracleClassifier::new(vocab.clone());
                for label in &vocab {
                    for id in index.validation_images(label).iter().chain(index.training_images(label)) {
                        oracle.insert(&index.load_image(id)?, label)?;
                    }
                }
                Box::new(oracle)
            }
        };
        let vocab_index: HashMap<String, usize> = vocab.iter().cloned().enumerate().map(|(i, l)| (l, i)).collect();
        let subset = (0..vocab.len()).collect();

        let labels: BTreeSet<&str> = queries.iter().map(|q| q.target_label.as_str()).collect();
        let items: Vec<(&str, &String)> = labels
            .iter()
            .flat_map(|l| index.training_images(l).iter().map(move |id| (*l, id)))
            .collect();
        let rows = collect_ordered(session.map_parallel(&items, |(_, id)| -> Result<Vec<f64>> {
            Ok(extractor.extract(&index.load_image(id)?)?)
        }))?;
        let tags = items.iter().map(|(l, _)| l.to_string()).collect();
        let reference = if rows.is_empty() {
            return Err(Error::MissingData("no training images for the evaluated target labels".into()).into());
        } else {
            FeatureSet::from_rows(&rows, Some(tags))?
        };
        Ok(Evaluator {
            session,
            extractor,
            classifier,
            vocab_index,
            subset,
            perceptual: backends.perceptual_eval.clone(),
            resolution,
            reference,
        })
    }

    pub fn reference(&self) -> &FeatureSet {
        &self.reference
    }

    pub fn outcome(&self, query: &TransformQuery, input: &Image, output: &Image) -> Result<QueryOutcome> {
        let target = *self.vocab_index.get(&query.target_label).ok_or_else(|| {
            Error::Schema(format!("query `{}`: unknown target label `{}`", query.id, query.target_label))
        })?;
        let logits = self.classifier.logits(output)?;
        Ok(QueryOutcome {
            query_id: query.id.clone(),
            target_label: query.target_label.clone(),
            features: self.extractor.extract(output)?,
            correct: restricted_argmax(&logits, &self.subset) == Some(target),
            lpips_x100: eval_perceptual(input, output, self.perceptual.as_ref(), self.resolution)?,
        })
    }

    /// Score `outputs[i]` as the result of `queries[i]`.
    pub fn outcomes(&self, queries: &[TransformQuery], outputs: &[Image]) -> Result<Vec<QueryOutcome>> {
        let pairs: Vec<(&TransformQuery, &Image)> = queries.iter().zip(outputs).collect();
        collect_ordered(self.session.map_parallel(&pairs, |(q, out)| {
            let input = load_input(self.session, q)?;
            self.outcome(q, &input, out)
        }))
    }

    pub fn report(&self, method: &str, outcomes: &[QueryOutcome]) -> Result<MetricReport> {
        let alpha = self.session.config.evaluation.alpha;
        Ok(build_report(method, outcomes, &self.reference, &self.session.registry.group_map(), alpha)?)
    }
}

/// Text form of a report: the summary row followed by the group table.
pub fn report_text(report: &MetricReport) -> String {
    format!("{}\n{}", MetricReport::table(std::slice::from_ref(report)), report.group_table())
}

/// Evaluate the outputs of `method` for the selected queries and write the
/// report, its text table and the feature dumps under `reports/<method>/`.
pub fn evaluate(session: &Session, method: &str) -> Result<MetricReport> {
    let queries = session.selected_queries(None)?;
    let root = session.output_dir();
    let missing: Vec<&str> = queries
        .iter()
        .filter(|q| !root.join(output_image_rel(method, &q.id)).exists())
        .map(|q| q.id.as_str())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingData(format!(
            "{} of {} outputs of `{method}` are missing: {}",
            missing.len(),
            queries.len(),
            missing.join(", ")
        ))
        .into());
    }
    let outputs = collect_ordered(session.map_parallel(&queries, |q| -> Result<Image> {
        Ok(Image::load_png(root.join(output_image_rel(method, &q.id)))?)
    }))?;
    let hp = &session.config.hyperparams;
    let backends = session.backends(&session.config, hp)?;
    let evaluator = Evaluator::new(session, &backends, hp, &queries)?;
    let outcomes = evaluator.outcomes(&queries, &outputs)?;
    let report = evaluator.report(method, &outcomes)?;

    let mut run = RunDir::open(root, &session.config_hash(), &format!("evaluate {method}"))?;
    let dir = format!("reports/{method}");
    let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
    json.push('\n');
    run.write(&format!("{dir}/report.json"), json.as_bytes())?;
    run.write(&format!("{dir}/report.txt"), report_text(&report).as_bytes())?;
    let rows: Vec<Vec<f64>> = outcomes.iter().map(|o| o.features.clone()).collect();
    let tags = outcomes.iter().map(|o| o.target_label.clone()).collect();
    for (name, fs) in [("features", FeatureSet::from_rows(&rows, Some(tags))?), ("reference", evaluator.reference().clone())] {
        let rel = format!("{dir}/{name}.f32");
        write_feature_dump(root.join(&rel), &fs)?;
        run.record(&rel)?;
        run.record(&format!("{rel}.json"))?;
    }
    run.finish()?;
    Ok(report)
}
