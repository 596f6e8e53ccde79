use std::path::{Path, PathBuf};

use semtrans_core::backends::Backends;
use semtrans_core::optimizer::{optimize, OptimizeOutput};
use semtrans_core::{HyperParams, Image, TransformQuery};

use super::{collect_ordered, load_input, method_dir};
use crate::config::RunConfig;
use crate::error::Result;
use crate::manifest::RunDir;
use crate::session::Session;

/// Default method name for batch edits.
pub const EDIT_METHOD: &str = "edit";

/// Optimize every query on the worker pool. Results follow `queries`' order;
/// the first failing query (in that order) aborts the batch.
pub fn run_edits(
    session: &Session,
    config: &RunConfig,
    backends: &Backends,
    hp: &HyperParams,
    queries: &[TransformQuery],
) -> Result<Vec<OptimizeOutput>> {
    let results = session.map_parallel(queries, |q| -> Result<OptimizeOutput> {
        let input = load_input(session, q)?;
        let out = optimize(q, &input, backends, hp, &config.snapshot_steps)?;
        log::debug!("{}: final loss {:?}", q.id, out.trajectory.losses.last());
        Ok(out)
    });
    collect_ordered(results)
}

/// Write the image, loss trajectory and snapshots of one edit under `dir`.
fn write_edit(run: &mut RunDir, dir: &str, id: &str, out: &OptimizeOutput) -> Result<Vec<PathBuf>> {
    let mut paths = vec![
        run.write(&format!("{dir}/{id}.png"), &out.image.encode_png()?)?,
        run.write(&format!("{dir}/{id}.trajectory.jsonl"), out.trajectory.to_jsonl().as_bytes())?,
    ];
    for (step, image) in &out.trajectory.snapshots {
        paths.push(run.write(&format!("{dir}/{id}_step{step}.png"), &image.encode_png()?)?);
    }
    Ok(paths)
}

/// Edit a single image file. Outputs go to `edits/` under the run directory,
/// named after `name`.
pub fn edit_image(session: &Session, image_path: &Path, source: &str, target: &str, name: &str) -> Result<Vec<PathBuf>> {
    let image = Image::load_png(image_path)?;
    let query = TransformQuery::adhoc(name, image_path.display().to_string(), source, target);
    let hp = &session.config.hyperparams;
    let backends = session.backends(&session.config, hp)?;
    let out = optimize(&query, &image, &backends, hp, &session.config.snapshot_steps)?;
    let mut run = RunDir::open(session.output_dir(), &session.config_hash(), "edit")?;
    let paths = write_edit(&mut run, "edits", name, &out)?;
    run.finish()?;
    Ok(paths)
}

/// Edit every selected query; outputs go to `outputs/<method>/`. Returns the
/// number of queries.
pub fn edit_queries(session: &Session, method: &str) -> Result<usize> {
    let queries = session.selected_queries(None)?;
    let hp = &session.config.hyperparams;
    let backends = session.backends(&session.config, hp)?;
    let outputs = run_edits(session, &session.config, &backends, hp, &queries)?;
    let mut run = RunDir::open(session.output_dir(), &session.config_hash(), &format!("edit {method}"))?;
    let dir = method_dir(method);
    for (q, out) in queries.iter().zip(&outputs) {
        write_edit(&mut run, &dir, &q.id, out)?;
    }
    run.finish()?;
    Ok(queries.len())
}
