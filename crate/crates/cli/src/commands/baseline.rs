use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use semtrans_core::dataset::{baseline_copy, baseline_encode, baseline_retrieve};
use semtrans_core::Image;

use super::{collect_ordered, load_input, method_dir, output_image_rel};
use crate::error::{CliError, Result};
use crate::manifest::RunDir;
use crate::session::Session;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Baseline {
    Copy,
    Encode,
    Retrieve,
}

impl Baseline {
    pub fn name(self) -> &'static str {
        match self {
            Baseline::Copy => "copy",
            Baseline::Encode => "encode",
            Baseline::Retrieve => "retrieve",
        }
    }
}

impl fmt::Display for Baseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Baseline {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "copy" => Ok(Baseline::Copy),
            "encode" => Ok(Baseline::Encode),
            "retrieve" => Ok(Baseline::Retrieve),
            other => Err(CliError::config(format!("unknown baseline `{other}` (copy, encode, retrieve)"))),
        }
    }
}

#[derive(Serialize)]
struct Retrieved<'a> {
    query_id: &'a str,
    image_id: String,
}

/// Run a baseline over the selected queries, writing one image per query in
/// the same layout as batch edits. Returns the number of queries.
pub fn run_baseline(session: &Session, which: Baseline) -> Result<usize> {
    let queries = session.selected_queries(None)?;
    let hp = &session.config.hyperparams;
    let backends = match which {
        Baseline::Encode => Some(session.backends(&session.config, hp)?),
        _ => None,
    };
    let index = session.index()?;
    let seed = session.config.seeds.retrieve;
    let results = session.map_parallel(&queries, |q| -> Result<(Image, Option<String>)> {
        match which {
            Baseline::Copy => Ok((baseline_copy(q, &load_input(session, q)?), None)),
            Baseline::Encode => {
                let ae = backends.as_ref().expect("encode backends").autoencoder.as_ref();
                Ok((baseline_encode(q, &load_input(session, q)?, ae)?, None))
            }
            Baseline::Retrieve => {
                let id = baseline_retrieve(q, index, seed)?;
                Ok((index.load_image(&id)?, Some(id)))
            }
        }
    });
    let outputs = collect_ordered(results)?;

    let mut run = RunDir::open(session.output_dir(), &session.config_hash(), &format!("baseline {which}"))?;
    let mut retrieved = String::new();
    for (q, (image, source)) in queries.iter().zip(&outputs) {
        run.write(&output_image_rel(which.name(), &q.id), &image.encode_png()?)?;
        if let Some(image_id) = source {
            let line = Retrieved { query_id: &q.id, image_id: image_id.clone() };
            retrieved.push_str(&serde_json::to_string(&line).expect("serializes"));
            retrieved.push('\n');
        }
    }
    if which == Baseline::Retrieve {
        run.write(&format!("{}/retrieved.jsonl", method_dir(which.name())), retrieved.as_bytes())?;
    }
    run.finish()?;
    Ok(queries.len())
}
