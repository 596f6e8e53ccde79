//! Loaded inputs shared by the commands.

use std::path::Path;

use rayon::prelude::*;
use rayon::ThreadPool;

use semtrans_core::backends::{BackendRegistry, Backends};
use semtrans_core::dataset::{
    build_queries, split_dev_test, ClusterRegistry, ImageIndex, QuerySet, Split,
};
use semtrans_core::{HyperParams, TransformQuery};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

pub struct Session {
    pub config: RunConfig,
    pub registry: ClusterRegistry,
    index: Option<ImageIndex>,
    backends: BackendRegistry,
    pool: ThreadPool,
}

impl Session {
    /// Validate `config` and load the registry and image index it names.
    pub fn new(config: RunConfig) -> Result<Self> {
        Self::with_backends(config, BackendRegistry::with_builtins())
    }

    /// As [`Session::new`], resolving backend ids against `backends`.
    pub fn with_backends(config: RunConfig, backends: BackendRegistry) -> Result<Self> {
        config.validate()?;
        let registry = match &config.paths.registry {
            Some(path) => semtrans_core::dataset::load_clusters(path)?,
            None => ClusterRegistry::shipped()?,
        };
        let index = config.paths.index.as_ref().map(ImageIndex::load).transpose()?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| CliError::config(format!("worker pool: {e}")))?;
        Ok(Session {
            config,
            registry,
            index,
            backends,
            pool,
        })
    }

    pub fn output_dir(&self) -> &Path {
        &self.config.paths.output_dir
    }

    pub fn config_hash(&self) -> String {
        self.config.hash()
    }

    pub fn index(&self) -> Result<&ImageIndex> {
        self.index
            .as_ref()
            .ok_or_else(|| CliError::config("this command needs `paths.index`"))
    }

    /// Backends for `hp`, truncated to the configured ensemble size.
    pub fn backends(&self, config: &RunConfig, hp: &HyperParams) -> Result<Backends> {
        let mut b = self.backends.build(&config.backend, &config.backend_config, hp)?;
        if let Some(n) = config.ensemble_members {
            b.ensemble = b.ensemble.truncated(n)?;
        }
        Ok(b)
    }

    /// The full tagged query set: read from `paths.queries` or built and
    /// split from the registry and index.
    pub fn query_set(&self) -> Result<QuerySet> {
        match &self.config.paths.queries {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                let qs = QuerySet::from_jsonl(&text)?;
                qs.validate(&self.registry)?;
                Ok(qs)
            }
            None => {
                let seeds = &self.config.seeds;
                let qs = build_queries(&self.registry, self.index()?, seeds.queries)?;
                Ok(split_dev_test(&qs, seeds.split)?)
            }
        }
    }

    /// Queries selected by the configured filter, sorted by id. `default_split`
    /// applies when the filter names no split.
    pub fn selected_queries(&self, default_split: Option<Split>) -> Result<Vec<TransformQuery>> {
        let filter = &self.config.filter;
        let split = filter.split.or(default_split);
        let qs = self.query_set()?;
        let mut out: Vec<TransformQuery> = qs
            .records
            .into_iter()
            .filter(|r| split.is_none() || r.split == split)
            .map(|r| r.query)
            .filter(|q| filter.cluster.as_ref().is_none_or(|c| &q.cluster_id == c))
            .filter(|q| {
                filter
                    .group
                    .as_ref()
                    .is_none_or(|g| self.registry.group_of(&q.target_label) == Some(g.as_str()))
            })
            .collect();
        out.sort_by(|a, b| a.id.cmp(&b.id));
        if let Some(n) = filter.limit {
            out.truncate(n);
        }
        if out.is_empty() {
            return Err(semtrans_core::Error::MissingData("the query filter selects no query".into()).into());
        }
        Ok(out)
    }

    /// Apply `f` to every item on the worker pool; results keep input order.
    pub fn map_parallel<T, U, F>(&self, items: &[T], f: F) -> Vec<U>
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> U + Sync + Send,
    {
        self.pool.install(|| items.par_iter().map(f).collect())
    }
}
