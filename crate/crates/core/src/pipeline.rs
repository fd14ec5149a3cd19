//! End-to-end summarization: paraphrase, answer, cluster, summarize.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::backends::{Answer, BackendSuite, QuestionAnswerer};
use crate::beam::{generate_paraphrases, BeamConfig};
use crate::clustering::{cluster_with_trace, AnswerGroup, ClusterConfig};
use crate::error::{AqsError, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct PipelineConfig<T = f64> {
    pub beam: BeamConfig,
    pub cluster: ClusterConfig<T>,
    /// Ask the original query alongside its paraphrases.
    pub include_original: bool,
    pub enable_paraphrasing: bool,
    pub enable_clustering: bool,
    /// Summarize the whole context when every answer is empty.
    pub fallback_generic: bool,
    pub qa_concurrency: usize,
}

impl<T: Scalar> Default for PipelineConfig<T> {
    fn default() -> Self {
        PipelineConfig {
            beam: BeamConfig::default(),
            cluster: ClusterConfig::default(),
            include_original: true,
            enable_paraphrasing: true,
            enable_clustering: true,
            fallback_generic: false,
            qa_concurrency: 4,
        }
    }
}

impl<T: Scalar> PipelineConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.enable_paraphrasing {
            self.beam.validate()?;
        }
        self.cluster.validate()?;
        if self.qa_concurrency == 0 {
            return Err(AqsError::InvalidConfig("qa_concurrency must be at least 1".into()));
        }
        Ok(())
    }
}

pub mod stage {
    pub const PARAPHRASE: &str = "paraphrase";
    pub const ANSWER: &str = "answer";
    pub const CLUSTER: &str = "cluster";
    pub const SUMMARIZE: &str = "summarize";
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceError {
    pub kind: String,
    pub message: String,
}

impl From<&AqsError> for TraceError {
    fn from(e: &AqsError) -> Self {
        TraceError {
            kind: e.kind().to_owned(),
            message: e.to_string(),
        }
    }
}

/// Everything one summarization run produced. Serialized as one JSON line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineTrace {
    pub query: String,
    /// Generated paraphrases, best first; empty strings removed.
    pub paraphrases: Vec<String>,
    /// Queries actually sent to QA; `answers[i].source_query_index` points here.
    pub queries: Vec<String>,
    /// Non-empty answers in query order.
    pub answers: Vec<Answer>,
    /// Positions in `answers` of the kept group, in merge order.
    pub kept_indices: Vec<usize>,
    /// Summarizer input.
    pub kept_text: String,
    pub summary: String,
    pub fallback: bool,
    /// Stage name to wall time in microseconds.
    pub timings_us: BTreeMap<String, u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<TraceError>,
}

impl PipelineTrace {
    fn empty(query: &str) -> Self {
        PipelineTrace {
            query: query.to_owned(),
            paraphrases: Vec::new(),
            queries: Vec::new(),
            answers: Vec::new(),
            kept_indices: Vec::new(),
            kept_text: String::new(),
            summary: String::new(),
            fallback: false,
            timings_us: BTreeMap::new(),
            error: None,
        }
    }

    pub fn failed(query: &str, error: &AqsError) -> Self {
        PipelineTrace {
            error: Some(error.into()),
            ..Self::empty(query)
        }
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }

    /// The kept group rebuilt from `answers` and `kept_indices`.
    pub fn kept_group(&self) -> Option<AnswerGroup> {
        let mut it = self.kept_indices.iter();
        let first = *it.next()?;
        let mut group = AnswerGroup::singleton(first, self.answers.get(first)?.clone());
        for &i in it {
            group = AnswerGroup::merged(&group, &AnswerGroup::singleton(i, self.answers.get(i)?.clone()));
        }
        Some(group)
    }

    /// Answers not in the kept group.
    pub fn discarded(&self) -> impl Iterator<Item = &Answer> {
        self.answers
            .iter()
            .enumerate()
            .filter(|(i, _)| !self.kept_indices.contains(i))
            .map(|(_, a)| a)
    }

    /// Copy with every timing set to zero; stage keys are kept.
    pub fn without_timings(&self) -> Self {
        let mut t = self.clone();
        t.timings_us.values_mut().for_each(|v| *v = 0);
        t
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("trace serializes")
    }
}

/// Answers every query against `context`, at most `concurrency` at a time.
/// The result is in query order whatever the completion order.
pub fn answer_all(
    qa: &dyn QuestionAnswerer,
    queries: &[String],
    context: &str,
    concurrency: usize,
) -> Result<Vec<Answer>> {
    let workers = concurrency.clamp(1, queries.len().max(1));
    if workers == 1 {
        return queries
            .iter()
            .enumerate()
            .map(|(i, q)| Ok(qa.answer_question(q, context)?.from_query(i)))
            .collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<Answer>>>> =
        Mutex::new((0..queries.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= queries.len() {
                    break;
                }
                let r = qa.answer_question(&queries[i], context).map(|a| a.from_query(i));
                slots.lock().unwrap_or_else(|e| e.into_inner())[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .unwrap_or_else(|e| e.into_inner())
        .into_iter()
        .map(|r| r.expect("every query answered"))
        .collect()
}

/// An immutable, shareable summarizer.
pub struct Pipeline<T: Scalar = f64> {
    config: PipelineConfig<T>,
    backends: BackendSuite<T>,
}

impl<T: Scalar> Pipeline<T> {
    pub fn new(config: PipelineConfig<T>, backends: BackendSuite<T>) -> Result<Self> {
        config.validate()?;
        Ok(Pipeline { config, backends })
    }

    pub fn config(&self) -> &PipelineConfig<T> {
        &self.config
    }

    pub fn backends(&self) -> &BackendSuite<T> {
        &self.backends
    }

    pub fn summarize(&self, query: &str, context: &str) -> Result<PipelineTrace> {
        self.run(query, context, self.config.qa_concurrency)
    }

    fn run(&self, query: &str, context: &str, qa_concurrency: usize) -> Result<PipelineTrace> {
        if query.trim().is_empty() || context.trim().is_empty() {
            return Err(AqsError::EmptyInput);
        }
        let cfg = &self.config;
        let mut trace = PipelineTrace::empty(query);
        let start = Instant::now();
        if cfg.enable_paraphrasing {
            let generated =
                generate_paraphrases(query, &cfg.beam, self.backends.scorer.as_ref())?;
            trace.paraphrases = generated
                .into_iter()
                .map(|p| p.text)
                .filter(|t| !t.trim().is_empty())
                .collect();
            trace.timings_us.insert(stage::PARAPHRASE.into(), micros(start));
            if cfg.include_original || trace.paraphrases.is_empty() {
                trace.queries.push(query.to_owned());
            }
            trace.queries.extend(trace.paraphrases.iter().cloned());
        } else {
            trace.queries.push(query.to_owned());
        }

        let start = Instant::now();
        let answers = answer_all(self.backends.qa.as_ref(), &trace.queries, context, qa_concurrency)?;
        trace.answers = answers.into_iter().filter(|a| !a.is_abstention()).collect();
        trace.timings_us.insert(stage::ANSWER.into(), micros(start));

        if trace.answers.is_empty() {
            if !cfg.fallback_generic {
                return Err(AqsError::NoAnswers);
            }
            let start = Instant::now();
            trace.kept_text = context.to_owned();
            trace.summary = self.backends.summarizer.summarize_text(context)?;
            trace.timings_us.insert(stage::SUMMARIZE.into(), micros(start));
            trace.fallback = true;
            return Ok(trace);
        }

        let kept = if cfg.enable_clustering {
            let start = Instant::now();
            let run = cluster_with_trace(&trace.answers, &cfg.cluster, self.backends.embedder.as_ref())?;
            trace.timings_us.insert(stage::CLUSTER.into(), micros(start));
            run.kept
        } else {
            AnswerGroup::all(&trace.answers).ok_or(AqsError::NoAnswers)?
        };
        trace.kept_indices = kept.indices().to_vec();
        trace.kept_text = kept.concat_text().to_owned();

        let start = Instant::now();
        trace.summary = self.backends.summarizer.summarize_text(&trace.kept_text)?;
        trace.timings_us.insert(stage::SUMMARIZE.into(), micros(start));
        Ok(trace)
    }

    /// Like [`summarize`](Self::summarize) but failures become error traces.
    pub fn summarize_traced(&self, query: &str, context: &str) -> PipelineTrace {
        self.summarize(query, context)
            .unwrap_or_else(|e| PipelineTrace::failed(query, &e))
    }

    /// Runs every item; output order matches input order and a failing item
    /// yields an error trace without affecting the others. At most
    /// `qa_concurrency` items are in flight, each answering its queries
    /// sequentially.
    pub fn batch_summarize(&self, items: &[(String, String)]) -> Vec<PipelineTrace> {
        let workers = self.config.qa_concurrency.clamp(1, items.len().max(1));
        let run_one = |(q, c): &(String, String)| {
            self.run(q, c, 1).unwrap_or_else(|e| PipelineTrace::failed(q, &e))
        };
        if workers == 1 {
            return items.iter().map(run_one).collect();
        }
        let next = AtomicUsize::new(0);
        let slots: Mutex<Vec<Option<PipelineTrace>>> = Mutex::new(vec![None; items.len()]);
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= items.len() {
                        break;
                    }
                    let t = run_one(&items[i]);
                    slots.lock().unwrap_or_else(|e| e.into_inner())[i] = Some(t);
                });
            }
        });
        slots
            .into_inner()
            .unwrap_or_else(|e| e.into_inner())
            .into_iter()
            .map(|t| t.expect("every item processed"))
            .collect()
    }
}

fn micros(start: Instant) -> u64 {
    u64::try_from(start.elapsed().as_micros()).unwrap_or(u64::MAX)
}
