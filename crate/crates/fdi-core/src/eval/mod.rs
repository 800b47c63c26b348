//! Human-review harness: packaging originals and fakes into review sets,
//! and aggregating the returned review sheets into metrics.
//!
//! Two review designs are supported. In the *detection* design a reviewer
//! sees four unlabeled documents (one real, three fakes from one model) and
//! picks the two most likely originals. In the *rating* design the original
//! is revealed and four fakes from four different models are scored on
//! 4-point scales and ranked by preference.

mod metrics;
mod quiz;

pub use metrics::{
    quiz1_metrics, quiz2_metrics, read_quiz1_reviews, read_quiz2_rows, spearman, FakenessBucket,
    LikertMeans, PreferenceByFakeness, Quiz1Report, Quiz1Review, Quiz1Stats, Quiz2Report,
    Quiz2Row, SpearmanMatrix, METRIC_LABELS,
};
pub use quiz::{build_quiz_sets, key_records, packet_records, FakeInput, FakeText, KeyRecord, KeySlot, PacketRecord, PacketSlot};

use serde::{Deserialize, Serialize};

/// Which review design a set belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuizMode {
    /// Spot the original among fakes.
    Detection,
    /// Rate revealed fakes against the revealed original.
    Rating,
}

/// What occupies one slot of a review set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SlotContent {
    Original,
    Fake { model: String, fake_id: String },
}

/// One document slot shown to a reviewer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuizSlot {
    pub slot: usize,
    pub text: String,
    pub content: SlotContent,
}

/// A fully assembled review set (truth included; split into packet and key
/// records before anything reaches reviewers).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuizSet {
    pub set_id: String,
    pub mode: QuizMode,
    pub doc_id: String,
    pub slots: Vec<QuizSlot>,
}

impl QuizSet {
    /// Slot index holding the original document.
    pub fn truth_slot(&self) -> Option<usize> {
        self.slots
            .iter()
            .find(|s| s.content == SlotContent::Original)
            .map(|s| s.slot)
    }

    /// Model attributed to a slot, if it holds a fake.
    pub fn model_of(&self, slot: usize) -> Option<&str> {
        self.slots.iter().find(|s| s.slot == slot).and_then(|s| match &s.content {
            SlotContent::Fake { model, .. } => Some(model.as_str()),
            SlotContent::Original => None,
        })
    }
}
