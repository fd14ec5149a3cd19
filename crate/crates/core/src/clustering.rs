//! Greedy agglomerative merging of QA answers.
//!
//! Every answer starts as its own group. The two closest groups are merged
//! into one longer answer (their texts concatenated) and the merged text is
//! re-embedded, so distances after a merge come from the embedder rather than
//! from a linkage formula. Merging stops once the largest group holds
//! strictly more than `patience * total` answers.

use serde::{Deserialize, Serialize};

use crate::backends::{Answer, Embedder, Embedding};
use crate::error::{AqsError, Result};
use crate::scalar::Scalar;
use crate::text::ends_with_terminal_punctuation;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct ClusterConfig<T = f64> {
    /// Fraction of all answers the largest group must strictly exceed.
    pub patience: T,
}

impl<T: Scalar> Default for ClusterConfig<T> {
    fn default() -> Self {
        ClusterConfig {
            patience: T::from_f64_lossy(0.5),
        }
    }
}

impl<T: Scalar> ClusterConfig<T> {
    pub fn new(patience: T) -> Result<Self> {
        let c = ClusterConfig { patience };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.patience >= T::zero() && self.patience < T::one() {
            Ok(())
        } else {
            Err(AqsError::InvalidConfig(format!(
                "patience must lie in [0, 1), got {}",
                self.patience
            )))
        }
    }
}

/// Joins answer texts with `". "`, or a single space after a text that
/// already ends in `.`, `!` or `?`.
pub fn join_answer_texts<'a>(texts: impl IntoIterator<Item = &'a str>) -> String {
    let mut out = String::new();
    for t in texts {
        let t = t.trim();
        if !out.is_empty() {
            out.push_str(if ends_with_terminal_punctuation(&out) { " " } else { ". " });
        }
        out.push_str(t);
    }
    out
}

/// A cluster of answers. Members keep merge order; `indices` are positions in
/// the list the clustering started from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerGroup {
    members: Vec<Answer>,
    indices: Vec<usize>,
    concat_text: String,
}

impl AnswerGroup {
    pub fn singleton(index: usize, answer: Answer) -> Self {
        AnswerGroup {
            concat_text: join_answer_texts([answer.text.as_str()]),
            members: vec![answer],
            indices: vec![index],
        }
    }

    /// One group holding all answers in order.
    pub fn all(answers: &[Answer]) -> Option<Self> {
        if answers.is_empty() {
            return None;
        }
        Some(AnswerGroup {
            members: answers.to_vec(),
            indices: (0..answers.len()).collect(),
            concat_text: join_answer_texts(answers.iter().map(|a| a.text.as_str())),
        })
    }

    /// `u · v`: `u`'s members followed by `v`'s.
    pub fn merged(u: &AnswerGroup, v: &AnswerGroup) -> Self {
        let members: Vec<Answer> = u.members.iter().chain(&v.members).cloned().collect();
        let indices = u.indices.iter().chain(&v.indices).copied().collect();
        AnswerGroup {
            concat_text: join_answer_texts(members.iter().map(|a| a.text.as_str())),
            members,
            indices,
        }
    }

    /// Number of original answers in the group.
    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn members(&self) -> &[Answer] {
        &self.members
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn concat_text(&self) -> &str {
        &self.concat_text
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupSet {
    groups: Vec<AnswerGroup>,
}

impl GroupSet {
    pub fn singletons(answers: &[Answer]) -> Self {
        GroupSet {
            groups: answers
                .iter()
                .cloned()
                .enumerate()
                .map(|(i, a)| AnswerGroup::singleton(i, a))
                .collect(),
        }
    }

    pub fn from_groups(groups: Vec<AnswerGroup>) -> Self {
        GroupSet { groups }
    }

    pub fn groups(&self) -> &[AnswerGroup] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn total(&self) -> usize {
        self.groups.iter().map(AnswerGroup::size).sum()
    }

    pub fn max_size(&self) -> usize {
        self.groups.iter().map(AnswerGroup::size).max().unwrap_or(0)
    }

    /// Position of the largest group, earliest on ties.
    pub fn largest_index(&self) -> Option<usize> {
        let max = self.max_size();
        self.groups.iter().position(|g| g.size() == max)
    }

    pub fn largest(&self) -> Option<&AnswerGroup> {
        self.largest_index().map(|i| &self.groups[i])
    }

    /// `max |u| > q * sum |u|`.
    pub fn satisfies_patience<T: Scalar>(&self, config: &ClusterConfig<T>) -> bool {
        T::from_usize_lossy(self.max_size()) > config.patience * T::from_usize_lossy(self.total())
    }

    /// Replaces groups `i < j` by their concatenation at position `i`.
    fn merge_pair(&mut self, i: usize, j: usize) {
        debug_assert!(i < j);
        let v = self.groups.remove(j);
        self.groups[i] = AnswerGroup::merged(&self.groups[i], &v);
    }
}

fn embed_group<T, E>(group: &AnswerGroup, embedder: &E) -> Result<Embedding<T>>
where
    T: Scalar,
    E: Embedder<T> + ?Sized,
{
    let e = embedder.embed_text(group.concat_text())?;
    if e.norm().is_nan() || e.norm() <= T::zero() {
        return Err(AqsError::DegenerateEmbedding(group.concat_text().to_owned()));
    }
    Ok(e)
}

fn cosine_distance<T: Scalar>(a: &Embedding<T>, b: &Embedding<T>) -> T {
    let c = a.cosine(b).unwrap_or_else(T::zero);
    (T::one() - c).max(T::zero()).min(T::one() + T::one())
}

/// `1 - cosine` of the two groups' concatenated-text embeddings, in `[0, 2]`.
pub fn pairwise_distance<T, E>(a: &AnswerGroup, b: &AnswerGroup, embedder: &E) -> Result<T>
where
    T: Scalar,
    E: Embedder<T> + ?Sized,
{
    Ok(cosine_distance(&embed_group(a, embedder)?, &embed_group(b, embedder)?))
}

/// Upper-triangular distance matrix over the current groups.
struct DistanceMatrix<T> {
    rows: Vec<Vec<T>>,
}

impl<T: Scalar> DistanceMatrix<T> {
    fn build(embeddings: &[Embedding<T>]) -> Self {
        let rows = (0..embeddings.len())
            .map(|i| {
                (0..embeddings.len())
                    .map(|j| {
                        if j > i {
                            cosine_distance(&embeddings[i], &embeddings[j])
                        } else {
                            T::zero()
                        }
                    })
                    .collect()
            })
            .collect();
        DistanceMatrix { rows }
    }

    /// Closest pair, lexicographically smallest `(i, j)` on ties.
    fn argmin(&self) -> Option<(usize, usize)> {
        let n = self.rows.len();
        let mut best: Option<(usize, usize, T)> = None;
        for i in 0..n {
            for j in i + 1..n {
                let d = self.rows[i][j];
                if best.is_none_or(|(_, _, b)| d < b) {
                    best = Some((i, j, d));
                }
            }
        }
        best.map(|(i, j, _)| (i, j))
    }

    /// Drops row/column `j` and refreshes row/column `i` from `embeddings`
    /// (already updated for the merge).
    fn merge(&mut self, i: usize, j: usize, embeddings: &[Embedding<T>]) {
        self.rows.remove(j);
        for row in &mut self.rows {
            row.remove(j);
        }
        for k in 0..self.rows.len() {
            if k == i {
                continue;
            }
            let d = cosine_distance(&embeddings[i], &embeddings[k]);
            if k < i {
                self.rows[k][i] = d;
            } else {
                self.rows[i][k] = d;
            }
        }
    }
}

/// One greedy merge: the closest pair `(u, v)`, `u` before `v`, is replaced
/// by `u · v` at `u`'s position.
pub fn merge_step<T, E>(groups: &GroupSet, embedder: &E) -> Result<GroupSet>
where
    T: Scalar,
    E: Embedder<T> + ?Sized,
{
    if groups.len() < 2 {
        return Err(AqsError::InvalidConfig(
            "merge_step needs at least two groups".into(),
        ));
    }
    let embeddings = groups
        .groups
        .iter()
        .map(|g| embed_group(g, embedder))
        .collect::<Result<Vec<_>>>()?;
    let (i, j) = DistanceMatrix::build(&embeddings)
        .argmin()
        .expect("two or more groups");
    let mut next = groups.clone();
    next.merge_pair(i, j);
    Ok(next)
}

/// Outcome of a clustering run.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterRun {
    pub kept: AnswerGroup,
    pub merges: usize,
    pub total: usize,
    /// Largest group size just before the last merge, if any merge happened.
    pub max_size_before_last_merge: Option<usize>,
    /// Groups left when merging stopped.
    pub final_groups: GroupSet,
}

/// Merges until the largest group strictly exceeds `patience * total` and
/// returns that group (earliest on ties).
pub fn cluster_until_patience<T, E>(
    answers: &[Answer],
    config: &ClusterConfig<T>,
    embedder: &E,
) -> Result<AnswerGroup>
where
    T: Scalar,
    E: Embedder<T> + ?Sized,
{
    Ok(cluster_with_trace(answers, config, embedder)?.kept)
}

pub fn cluster_with_trace<T, E>(
    answers: &[Answer],
    config: &ClusterConfig<T>,
    embedder: &E,
) -> Result<ClusterRun>
where
    T: Scalar,
    E: Embedder<T> + ?Sized,
{
    config.validate()?;
    if answers.is_empty() {
        return Err(AqsError::NoAnswers);
    }
    let mut groups = GroupSet::singletons(answers);
    let total = groups.total();
    let mut merges = 0;
    let mut max_before = None;

    if !groups.satisfies_patience(config) {
        let mut embeddings = groups
            .groups
            .iter()
            .map(|g| embed_group(g, embedder))
            .collect::<Result<Vec<_>>>()?;
        let mut matrix = DistanceMatrix::build(&embeddings);
        while !groups.satisfies_patience(config) {
            let (i, j) = matrix.argmin().ok_or(AqsError::NoAnswers)?;
            max_before = Some(groups.max_size());
            groups.merge_pair(i, j);
            embeddings.remove(j);
            embeddings[i] = embed_group(&groups.groups[i], embedder)?;
            matrix.merge(i, j, &embeddings);
            merges += 1;
        }
    }

    let kept = groups.largest().cloned().ok_or(AqsError::NoAnswers)?;
    Ok(ClusterRun {
        kept,
        merges,
        total,
        max_size_before_last_merge: max_before,
        final_groups: groups,
    })
}
