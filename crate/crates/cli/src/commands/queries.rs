use std::path::PathBuf;

use semtrans_core::dataset::{QuerySet, Split};

use crate::error::Result;
use crate::manifest::RunDir;
use crate::session::Session;

/// Build (or load) the query set and write it as JSONL, optionally keeping
/// only one split. Returns the written path and the number of lines.
pub fn build_queries(session: &Session, only: Option<Split>) -> Result<(PathBuf, usize)> {
    let mut qs = session.query_set()?;
    if let Some(split) = only {
        qs.records.retain(|r| r.split == Some(split));
    }
    let rel = match only {
        None => "queries.jsonl".to_string(),
        Some(Split::Dev) => "queries.dev.jsonl".to_string(),
        Some(Split::Test) => "queries.test.jsonl".to_string(),
    };
    let mut run = RunDir::open(session.output_dir(), &session.config_hash(), "build-queries")?;
    let path = run.write(&rel, QuerySet::to_jsonl(&qs).as_bytes())?;
    run.finish()?;
    Ok((path, qs.len()))
}
