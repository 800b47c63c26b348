//! Review-set assembly: deterministic fake selection and slot shuffling,
//! plus the packet/key split that keeps truth labels away from reviewers.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{QuizMode, QuizSet, QuizSlot, SlotContent};

/// Fakes from multiple models, keyed `model -> doc_id -> fakes`, as fed to
/// the builder. `BTreeMap` keeps model iteration order stable.
pub type FakeInput = BTreeMap<String, BTreeMap<String, Vec<FakeText>>>;

/// One fake document text plus its id, as read from a generation run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FakeText {
    pub fake_id: String,
    pub text: String,
}

/// Fakes per set in the detection design (plus one original = 4 slots).
const DETECTION_FAKES: usize = 3;
/// Models required by the rating design (one fake each).
const RATING_MODELS: usize = 4;

/// Builds review sets for all originals.
///
/// Detection mode creates one set per (document, model): the original and
/// three sampled fakes of that model, shuffled over four slots. Rating mode
/// requires exactly four models and creates one set per document: the
/// original pinned to slot 0, then one fake per model shuffled over slots
/// 1-4. Selection and shuffling draw from a single stream seeded with
/// `seed`, so identical inputs give identical sets.
pub fn build_quiz_sets(
    originals: &[(String, String)],
    fakes: &FakeInput,
    mode: QuizMode,
    seed: u64,
) -> Result<Vec<QuizSet>> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    match mode {
        QuizMode::Detection => build_detection(originals, fakes, &mut rng),
        QuizMode::Rating => build_rating(originals, fakes, &mut rng),
    }
}

fn pick<'a>(
    pool: &'a [FakeText],
    n: usize,
    rng: &mut ChaCha12Rng,
    doc_id: &str,
    model: &str,
) -> Result<Vec<&'a FakeText>> {
    if pool.len() < n {
        return Err(Error::InsufficientFakes {
            doc_id: doc_id.to_owned(),
            model: model.to_owned(),
            needed: n,
            have: pool.len(),
        });
    }
    let mut idx: Vec<usize> = (0..pool.len()).collect();
    idx.shuffle(rng);
    idx.truncate(n);
    Ok(idx.into_iter().map(|i| &pool[i]).collect())
}

fn build_detection(
    originals: &[(String, String)],
    fakes: &FakeInput,
    rng: &mut ChaCha12Rng,
) -> Result<Vec<QuizSet>> {
    let mut sets = Vec::new();
    for (doc_id, text) in originals {
        for (model, per_doc) in fakes {
            let pool = per_doc.get(doc_id).map(Vec::as_slice).unwrap_or(&[]);
            let chosen = pick(pool, DETECTION_FAKES, rng, doc_id, model)?;
            let mut contents: Vec<(String, SlotContent)> = vec![(
                text.clone(),
                SlotContent::Original,
            )];
            for f in chosen {
                contents.push((
                    f.text.clone(),
                    SlotContent::Fake {
                        model: model.clone(),
                        fake_id: f.fake_id.clone(),
                    },
                ));
            }
            contents.shuffle(rng);
            sets.push(QuizSet {
                set_id: format!("det-{doc_id}-{model}"),
                mode: QuizMode::Detection,
                doc_id: doc_id.clone(),
                slots: to_slots(contents, 0),
            });
        }
    }
    Ok(sets)
}

fn build_rating(
    originals: &[(String, String)],
    fakes: &FakeInput,
    rng: &mut ChaCha12Rng,
) -> Result<Vec<QuizSet>> {
    if fakes.len() != RATING_MODELS {
        return Err(Error::QuizModels {
            expected: RATING_MODELS,
            got: fakes.len(),
        });
    }
    let mut sets = Vec::new();
    for (doc_id, text) in originals {
        let mut contents = Vec::with_capacity(RATING_MODELS);
        for (model, per_doc) in fakes {
            let pool = per_doc.get(doc_id).map(Vec::as_slice).unwrap_or(&[]);
            let chosen = pick(pool, 1, rng, doc_id, model)?;
            contents.push((
                chosen[0].text.clone(),
                SlotContent::Fake {
                    model: model.clone(),
                    fake_id: chosen[0].fake_id.clone(),
                },
            ));
        }
        contents.shuffle(rng);
        // The original is revealed, pinned to slot 0; fakes follow.
        let mut slots = vec![QuizSlot {
            slot: 0,
            text: text.clone(),
            content: SlotContent::Original,
        }];
        slots.extend(to_slots(contents, 1));
        sets.push(QuizSet {
            set_id: format!("rate-{doc_id}"),
            mode: QuizMode::Rating,
            doc_id: doc_id.clone(),
            slots,
        });
    }
    Ok(sets)
}

fn to_slots(contents: Vec<(String, SlotContent)>, first: usize) -> Vec<QuizSlot> {
    contents
        .into_iter()
        .enumerate()
        .map(|(i, (text, content))| QuizSlot {
            slot: first + i,
            text,
            content,
        })
        .collect()
}

/// What reviewers see: set id, mode, and slot texts — no truth labels.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PacketRecord {
    pub set_id: String,
    pub mode: QuizMode,
    /// Revealed original text (rating mode only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub original: Option<String>,
    pub documents: Vec<PacketSlot>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PacketSlot {
    pub slot: usize,
    pub text: String,
}

/// The grading side: which slot is real and which model made each fake.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KeyRecord {
    pub set_id: String,
    pub mode: QuizMode,
    pub doc_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth_slot: Option<usize>,
    pub slots: Vec<KeySlot>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KeySlot {
    pub slot: usize,
    pub model: String,
    pub fake_id: String,
}

/// Projects sets onto what reviewers receive.
pub fn packet_records(sets: &[QuizSet]) -> Vec<PacketRecord> {
    sets.iter()
        .map(|set| {
            let original = match set.mode {
                QuizMode::Rating => set
                    .slots
                    .iter()
                    .find(|s| s.content == SlotContent::Original)
                    .map(|s| s.text.clone()),
                QuizMode::Detection => None,
            };
            let documents = set
                .slots
                .iter()
                .filter(|s| set.mode == QuizMode::Detection || s.content != SlotContent::Original)
                .map(|s| PacketSlot {
                    slot: s.slot,
                    text: s.text.clone(),
                })
                .collect();
            PacketRecord {
                set_id: set.set_id.clone(),
                mode: set.mode,
                original,
                documents,
            }
        })
        .collect()
}

/// Projects sets onto the answer key used for grading.
pub fn key_records(sets: &[QuizSet]) -> Vec<KeyRecord> {
    sets.iter()
        .map(|set| KeyRecord {
            set_id: set.set_id.clone(),
            mode: set.mode,
            doc_id: set.doc_id.clone(),
            truth_slot: set.truth_slot(),
            slots: set
                .slots
                .iter()
                .filter_map(|s| match &s.content {
                    SlotContent::Fake { model, fake_id } => Some(KeySlot {
                        slot: s.slot,
                        model: model.clone(),
                        fake_id: fake_id.clone(),
                    }),
                    SlotContent::Original => None,
                })
                .collect(),
        })
        .collect()
}
