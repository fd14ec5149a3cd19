use std::collections::BTreeMap;
use std::path::Path;

use aqs::backends::remote::{RemoteClient, RemoteConfig};
use aqs::beam::BeamConfig;
use aqs::clustering::ClusterConfig;
use aqs::{fixtures, AqsError, BackendSuite, PipelineConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendMode {
    #[default]
    Mock,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedParaphrase {
    pub text: String,
    pub weight: f64,
}

/// Effective settings. A `--config` file supplies a JSON object with these
/// field names; explicit flags override it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliConfig {
    pub backend_mode: BackendMode,
    pub endpoint: Option<String>,
    pub timeout_ms: u64,
    pub retries: u32,
    pub beam_size: usize,
    pub max_length: usize,
    pub patience: f64,
    pub concurrency: usize,
    pub no_paraphrase: bool,
    pub no_cluster: bool,
    pub fallback_generic: bool,
    pub include_original: bool,
    pub seed: u64,
    /// Extra paraphrase tables for the mock scorer, keyed by query.
    pub paraphrases: BTreeMap<String, Vec<WeightedParaphrase>>,
}

impl Default for CliConfig {
    fn default() -> Self {
        let remote = RemoteConfig::default();
        CliConfig {
            backend_mode: BackendMode::Mock,
            endpoint: None,
            timeout_ms: remote.timeout_ms,
            retries: remote.retries,
            beam_size: 8,
            max_length: 64,
            patience: 0.5,
            concurrency: 4,
            no_paraphrase: false,
            no_cluster: false,
            fallback_generic: false,
            include_original: true,
            seed: 0,
            paraphrases: BTreeMap::new(),
        }
    }
}

impl CliConfig {
    pub fn load(path: &Path) -> aqs::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| {
            AqsError::InvalidConfig(format!("{}: {e}", path.display()))
        })
    }

    pub fn pipeline_config(&self) -> aqs::Result<PipelineConfig> {
        let config = PipelineConfig {
            beam: BeamConfig::new(self.beam_size, self.max_length),
            cluster: ClusterConfig::new(self.patience)?,
            include_original: self.include_original,
            enable_paraphrasing: !self.no_paraphrase,
            enable_clustering: !self.no_cluster,
            fallback_generic: self.fallback_generic,
            qa_concurrency: self.concurrency,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn backends(&self) -> aqs::Result<BackendSuite> {
        match self.backend_mode {
            BackendMode::Mock => {
                let mut scorer = fixtures::estate_scorer()?;
                for (query, table) in &self.paraphrases {
                    let rows: Vec<(&str, f64)> =
                        table.iter().map(|p| (p.text.as_str(), p.weight)).collect();
                    scorer.add_paraphrases(query, &rows)?;
                }
                Ok(BackendSuite::mock(scorer))
            }
            BackendMode::Remote => {
                let endpoint = self.endpoint.clone().filter(|e| !e.is_empty()).ok_or_else(|| {
                    AqsError::InvalidConfig("remote backend requires --endpoint or AQS_ENDPOINT".into())
                })?;
                let client = RemoteClient::new(RemoteConfig {
                    timeout_ms: self.timeout_ms,
                    retries: self.retries,
                    ..RemoteConfig::new(endpoint)
                })?;
                Ok(BackendSuite::remote(client))
            }
        }
    }
}

