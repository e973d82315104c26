use std::time::Instant;

use clm_core::descriptors::{extract, DescriptorSet, ImageGray};
use clm_core::lrsvm::{train, TrainParams, TrainingSet};
use clm_core::pbr::{apply_pbr, PbrOutcome};
use clm_core::spm::{spm_feature, SpmFeature};
use log::info;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::dataset::{load_image, split, DatasetManifest, ImageEntry, Split};
use crate::error::{CoreContext, PipelineError, Result};
use crate::formats::TrainedModel;
use crate::metrics::EvalReport;

/// Optional background removal followed by descriptor extraction.
pub fn image_descriptors(img: &ImageGray, cfg: &RunConfig) -> Result<(DescriptorSet<f64>, (usize, usize), Option<PbrOutcome>)> {
    let (img, pbr) = match cfg.pbr_params() {
        Some(p) => {
            let out = apply_pbr(img, &p).context(|| "background removal".into())?;
            (out.image.clone(), Some(out))
        }
        None => (img.clone(), None),
    };
    let ds = extract(&img, &cfg.extract_params()?).context(|| "descriptor extraction".into())?;
    Ok((ds, (img.width(), img.height()), pbr))
}

/// Pyramid feature of an already extracted descriptor set.
pub fn spm_from_descriptors(ds: &DescriptorSet<f64>, dims: (usize, usize), cfg: &RunConfig) -> Result<SpmFeature<f64>> {
    spm_feature(ds, dims, &cfg.pyramid_spec()?, &cfg.embedding()?, cfg.epsilon).context(|| "pyramid embedding".into())
}

/// Image → pyramid feature.
pub fn model_image(img: &ImageGray, cfg: &RunConfig) -> Result<SpmFeature<f64>> {
    let (ds, dims, _) = image_descriptors(img, cfg)?;
    spm_from_descriptors(&ds, dims, cfg)
}

/// Features of the listed files, computed in parallel, in input order.
pub fn featurize(entries: &[&ImageEntry], cfg: &RunConfig) -> Result<Vec<SpmFeature<f64>>> {
    entries
        .par_iter()
        .map(|e| {
            let img = load_image(&e.path)?;
            model_image(&img, cfg).map_err(|err| match err {
                PipelineError::Core { context, source } => PipelineError::Core {
                    context: format!("{}: {context}", e.path.display()),
                    source,
                },
                other => other,
            })
        })
        .collect()
}

/// Applies the configured split unless the manifest already carries one.
pub fn resolve_split(manifest: &DatasetManifest, cfg: &RunConfig) -> Result<DatasetManifest> {
    match cfg.train_per_class {
        Some(n) if !manifest.is_split() => split(manifest, n, cfg.seed),
        _ => Ok(manifest.clone()),
    }
}

/// Trains on precomputed features with labels in `0..classes.len()`.
pub fn train_features(
    features: &[SpmFeature<f64>],
    labels: &[usize],
    classes: &[String],
    cfg: &RunConfig,
) -> Result<TrainedModel> {
    let ts = TrainingSet::from_spm(features, labels.to_vec()).context(|| "training set".into())?;
    if ts.class_count() != classes.len() {
        return Err(PipelineError::Config(format!(
            "training data covers {} of {} classes",
            ts.class_count(),
            classes.len()
        )));
    }
    let rank = cfg.rank_for(ts.block_dim(), ts.len());
    info!(
        "training on {} images: B={} d={} r={} M={}",
        ts.len(),
        ts.block_count(),
        ts.block_dim(),
        rank,
        ts.class_count()
    );
    let params = TrainParams {
        max_iters: cfg.max_iters,
        tol: cfg.tol,
        ..TrainParams::new(rank, cfg.c)
    };
    let model = train(&ts, &params).context(|| "low-rank SVM training".into())?;
    Ok(TrainedModel {
        classes: classes.to_vec(),
        config: cfg.clone(),
        model,
    })
}

/// Scores every feature and summarizes against `labels`.
pub fn evaluate_features(model: &TrainedModel, features: &[SpmFeature<f64>], labels: &[usize]) -> Result<EvalReport> {
    let mut predicted = Vec::with_capacity(features.len());
    let mut scores = Vec::with_capacity(features.len());
    for f in features {
        let (c, s) = model.model.predict_spm(f).context(|| "prediction".into())?;
        predicted.push(c);
        scores.push(s);
    }
    Ok(EvalReport::new(model.classes.clone(), labels, &predicted, &scores))
}

/// Featurizes the training split, trains, and reports training accuracy.
pub fn run_train(manifest: &DatasetManifest, cfg: &RunConfig) -> Result<(TrainedModel, EvalReport)> {
    cfg.validate()?;
    let start = Instant::now();
    let manifest = resolve_split(manifest, cfg)?;
    let entries = manifest.entries_in(Split::Train);
    let labels: Vec<usize> = entries.iter().map(|e| e.class).collect();

    let t = Instant::now();
    let features = featurize(&entries, cfg)?;
    let t_features = t.elapsed();

    let t = Instant::now();
    let model = train_features(&features, &labels, &manifest.classes, cfg)?;
    let t_train = t.elapsed();

    let t = Instant::now();
    let mut report = evaluate_features(&model, &features, &labels)?;
    let t_eval = t.elapsed();

    report.objective_trajectory = model.model.trajectory.iter().map(|r| r.dual_objective).collect();
    report.timings.push("features", t_features);
    report.timings.push("train", t_train);
    report.timings.push("evaluate", t_eval);
    report.timings.total = start.elapsed();
    Ok((model, report))
}

/// Evaluates on the test split (every image when the dataset is unsplit).
/// Dataset classes are matched to model classes by name.
pub fn run_eval(model: &TrainedModel, manifest: &DatasetManifest) -> Result<EvalReport> {
    let start = Instant::now();
    let cfg = &model.config;
    let manifest = resolve_split(manifest, cfg)?;
    let entries = manifest.entries_in(Split::Test);
    let labels = entries
        .iter()
        .map(|e| {
            let name = &manifest.classes[e.class];
            model
                .classes
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| PipelineError::Config(format!("class {name:?} is not known to the model")))
        })
        .collect::<Result<Vec<_>>>()?;

    let t = Instant::now();
    let features = featurize(&entries, cfg)?;
    let t_features = t.elapsed();

    let t = Instant::now();
    let mut report = evaluate_features(model, &features, &labels)?;
    let t_eval = t.elapsed();

    report.timings.push("features", t_features);
    report.timings.push("evaluate", t_eval);
    report.timings.total = start.elapsed();
    Ok(report)
}

/// One line of `clm predict` output.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Prediction {
    pub image: String,
    pub class: String,
    pub class_index: usize,
    pub scores: Vec<f64>,
}

pub fn predict_image(model: &TrainedModel, img: &ImageGray, name: &str) -> Result<Prediction> {
    let f = model_image(img, &model.config)?;
    let (c, scores) = model.model.predict_spm(&f).context(|| format!("{name}: prediction"))?;
    Ok(Prediction {
        image: name.to_string(),
        class: model.classes[c].clone(),
        class_index: c,
        scores,
    })
}
