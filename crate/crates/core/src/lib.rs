//! Topic-focused summarization without topic-focused training data.
//!
//! A topic query is paraphrased by beam search, every paraphrase is answered
//! against the context by an extractive QA model, the answers are merged by
//! greedy agglomerative clustering until one group holds more than a
//! patience fraction of them, and that group is summarized by a generic
//! abstractive summarizer.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix it to `f64`, with `*32` variants for `f32`.

pub mod backends;
pub mod beam;
pub mod clustering;
pub mod data_io;
pub mod error;
pub mod fixtures;
pub mod metrics;
pub mod pipeline;
pub mod scalar;
pub mod text;

pub use backends::{Answer, Token, TokenId, Vocabulary};
pub use error::{AqsError, Result};
pub use scalar::Scalar;

pub type Embedding = backends::Embedding<f64>;
pub type Embedding32 = backends::Embedding<f32>;
pub type TokenDistribution = backends::TokenDistribution<f64>;
pub type TokenDistribution32 = backends::TokenDistribution<f32>;
pub type BackendSuite = backends::BackendSuite<f64>;
pub type BackendSuite32 = backends::BackendSuite<f32>;
pub type Hypothesis = beam::Hypothesis<f64>;
pub type Hypothesis32 = beam::Hypothesis<f32>;
pub type BeamFrontier = beam::BeamFrontier<f64>;
pub type BeamFrontier32 = beam::BeamFrontier<f32>;
pub type ClusterConfig = clustering::ClusterConfig<f64>;
pub type ClusterConfig32 = clustering::ClusterConfig<f32>;
pub type PipelineConfig = pipeline::PipelineConfig<f64>;
pub type PipelineConfig32 = pipeline::PipelineConfig<f32>;
pub type Pipeline = pipeline::Pipeline<f64>;
pub type Pipeline32 = pipeline::Pipeline<f32>;
pub type RougeScores = metrics::RougeScores<f64>;
pub type EvalRecord = metrics::EvalRecord<f64>;
