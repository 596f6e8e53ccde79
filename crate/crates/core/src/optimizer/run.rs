use std::collections::BTreeSet;

use super::fgm::fgm_step;
use super::loss::{total_loss, total_loss_and_grad, LossBreakdown, LossContext};
use super::target::compute_target;
use crate::backends::{Backends, EnsembleEmbedder};
use crate::embedding::TargetPoint;
use crate::error::{Error, Result};
use crate::image::{resize, Image};
use crate::latent::LatentCode;
use crate::params::HyperParams;
use crate::query::TransformQuery;

/// Per-step losses of one run, optional intermediate images and the final
/// latent code.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// `steps + 1` entries: the initial state, then the state after each
    /// update.
    pub losses: Vec<LossBreakdown>,
    /// `(step, decoded image after that many updates)`, ascending by step.
    pub snapshots: Vec<(usize, Image)>,
    pub final_latent: LatentCode,
}

impl Trajectory {
    /// One JSON object per line, one line per loss entry.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for bd in &self.losses {
            out.push_str(&serde_json::to_string(bd).expect("loss breakdown serializes"));
            out.push('\n');
        }
        out
    }

    pub fn losses_from_jsonl(text: &str) -> Result<Vec<LossBreakdown>> {
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(Error::from))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct OptimizeOutput {
    pub image: Image,
    pub trajectory: Trajectory,
}

/// The fixed inputs of one run, computed before the first step.
#[derive(Debug, Clone)]
pub struct Prepared {
    /// Input image at the autoencoder's native resolution.
    pub reference: Image,
    pub initial: LatentCode,
    pub target: TargetPoint,
    /// Backend ensemble with the run's augmentation count and seed.
    pub ensemble: EnsembleEmbedder,
}

impl Prepared {
    pub fn context<'a>(&'a self, backends: &'a Backends, hp: &'a HyperParams) -> LossContext<'a> {
        LossContext {
            target: &self.target,
            reference: &self.reference,
            initial: &self.initial,
            backends,
            ensemble: &self.ensemble,
            hp,
        }
    }
}

/// Validate inputs, encode the image and compute the target point.
pub fn prepare(query: &TransformQuery, image: &Image, backends: &Backends, hp: &HyperParams) -> Result<Prepared> {
    hp.validate()?;
    query.validate()?;
    image.ensure_pipeline_size()?;
    let r = backends.autoencoder.native_resolution();
    if r != hp.encode_resolution {
        return Err(Error::invalid(format!(
            "autoencoder resolution {r} differs from encode_resolution {}",
            hp.encode_resolution
        )));
    }
    let ensemble = backends
        .ensemble
        .clone()
        .with_augmentations(hp.augmentations)
        .with_spec(backends.ensemble.spec().with_seed(hp.rng_seed));
    let reference = resize(image, r, r)?;
    let initial = backends.autoencoder.encode(&reference)?;
    initial.ensure_shape(backends.autoencoder.latent_shape())?;
    let target = compute_target(
        &reference,
        &query.source_text,
        &query.target_text,
        &ensemble,
        hp.lambda_image,
        hp.lambda_source,
    )?;
    Ok(Prepared {
        reference,
        initial,
        target,
        ensemble,
    })
}

/// Run the editing loop for `hp.steps` normalized-gradient steps on the
/// latent code and decode the result.
///
/// `snapshot_steps` selects the update counts at which the decoded image is
/// kept; each must be at most `hp.steps`.
pub fn optimize(
    query: &TransformQuery,
    image: &Image,
    backends: &Backends,
    hp: &HyperParams,
    snapshot_steps: &[usize],
) -> Result<OptimizeOutput> {
    let snapshots_wanted: BTreeSet<usize> = snapshot_steps.iter().copied().collect();
    if let Some(&s) = snapshots_wanted.iter().find(|&&s| s > hp.steps) {
        return Err(Error::invalid(format!("snapshot step {s} exceeds step count {}", hp.steps)));
    }
    let prepared = prepare(query, image, backends, hp)?;
    let ctx = prepared.context(backends, hp);
    let decoder = backends.autoencoder.as_ref();

    let mut z = prepared.initial.clone();
    let mut losses = Vec::with_capacity(hp.steps + 1);
    let mut snapshots = Vec::new();
    for step in 0..hp.steps {
        if snapshots_wanted.contains(&step) {
            snapshots.push((step, decoder.decode(&z)?));
        }
        let (breakdown, grad) = total_loss_and_grad(&z, &ctx, step)?;
        if !breakdown.total.is_finite() {
            return Err(Error::NumericalFailure {
                step,
                detail: format!("non-finite loss {breakdown:?}"),
            });
        }
        losses.push(breakdown);
        z = fgm_step(&z, grad.values(), hp.step_size).map_err(|e| match e {
            Error::NumericalFailure { detail, .. } => Error::NumericalFailure { step, detail },
            other => other,
        })?;
    }
    losses.push(total_loss(&z, &ctx, hp.steps)?);
    let output = decoder.decode(&z)?;
    if snapshots_wanted.contains(&hp.steps) {
        snapshots.push((hp.steps, output.clone()));
    }
    Ok(OptimizeOutput {
        image: output,
        trajectory: Trajectory {
            losses,
            snapshots,
            final_latent: z,
        },
    })
}
