//! Deterministic fixtures built only from mock backends.
//!
//! [`estate_complaint`] is a small complaint with two issues and a scripted
//! paraphraser; the golden-trace tests and the CLI examples use it.
//! [`ablation_corpus`] is a set of items where the original query lands on a
//! distractor sentence sharing no words with the reference, while every
//! paraphrase lands on the relevant sentence.

use crate::backends::mock::MockScorer;
use crate::data_io::Triplet;
use crate::error::Result;

pub const ESTATE_QUERY: &str = "What is complained?";

pub const ESTATE_CONTEXT: &str = "Dear Sir. There are leaking pipes in the ceiling of the master bedroom. \
The repair workmanship is unsatisfactory and poorly done. Thank you for your help.";

/// Paraphrases of [`ESTATE_QUERY`] with their relative weights.
pub const ESTATE_PARAPHRASES: [(&str, f64); 3] = [
    ("what is the complaint about leaking pipes in the ceiling", 4.0),
    ("which repair workmanship is complained", 3.0),
    ("what problem is there with the bedroom pipes", 2.0),
];

pub fn estate_scorer() -> Result<MockScorer> {
    MockScorer::from_paraphrases(ESTATE_QUERY, &ESTATE_PARAPHRASES)
}

/// `(query, context, scorer)` for the estate complaint.
pub fn estate_complaint() -> Result<(String, String, MockScorer)> {
    Ok((ESTATE_QUERY.to_owned(), ESTATE_CONTEXT.to_owned(), estate_scorer()?))
}

pub const ABLATION_QUERY: &str = "What is complained?";

pub const ABLATION_PARAPHRASES: [(&str, f64); 3] = [
    ("what problem affects the unit", 5.0),
    ("which problem affects residents", 3.0),
    ("what is the problem that affects us", 2.0),
];

const ISSUES: [(&str, &str); 20] = [
    ("leaking pipe", "bedroom"),
    ("broken lift", "lobby"),
    ("cracked window", "kitchen"),
    ("noisy fan", "corridor"),
    ("blocked drain", "bathroom"),
    ("faulty light", "stairwell"),
    ("loose tile", "balcony"),
    ("rusty gate", "carpark"),
    ("damp wall", "basement"),
    ("jammed door", "entrance"),
    ("peeling paint", "ceiling"),
    ("flickering lamp", "playground"),
    ("overflowing bin", "walkway"),
    ("stuck shutter", "shopfront"),
    ("smelly sewer", "courtyard"),
    ("dripping tap", "laundry"),
    ("uneven floor", "hallway"),
    ("mouldy vent", "attic"),
    ("shaking railing", "rooftop"),
    ("dead plant", "garden"),
];

/// Items for the clustering ablation; `scorer` serves the shared query.
pub fn ablation_corpus() -> Result<(Vec<Triplet>, MockScorer)> {
    let items = ISSUES
        .iter()
        .enumerate()
        .map(|(i, (issue, place))| {
            let distractor = if i % 2 == 0 {
                "This email is complained about by the sender"
            } else {
                "Nothing else is complained about by this sender"
            };
            Triplet {
                id: format!("ablation-{i:02}"),
                query: ABLATION_QUERY.to_owned(),
                context: format!(
                    "{distractor}. The {issue} problem affects the {place}. Regards from management."
                ),
                reference: format!("{issue} in {place}"),
            }
        })
        .collect();
    Ok((items, MockScorer::from_paraphrases(ABLATION_QUERY, &ABLATION_PARAPHRASES)?))
}
