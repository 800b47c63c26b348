//! Aggregation of returned review sheets into the final report numbers.

use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::quiz::KeyRecord;
use super::QuizMode;

/// Metric order used by the correlation matrix.
pub const METRIC_LABELS: [&str; 5] = ["fluency", "coherency", "expertise", "fakeness", "preference"];

/// One detection-design review row: the reviewer's first and second guess
/// at the original, plus how long the set took.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Quiz1Review {
    pub set_id: String,
    pub reviewer_id: String,
    pub top1_slot: usize,
    pub top2_slot: usize,
    pub time_minutes: f64,
}

/// One rating-design review row: scores for a single slot of a set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Quiz2Row {
    pub set_id: String,
    pub reviewer_id: String,
    pub slot: usize,
    pub fluency: u8,
    pub coherency: u8,
    pub expertise: u8,
    pub fakeness: u8,
    pub preference_rank: u8,
}

pub fn read_quiz1_reviews<R: Read>(reader: R) -> Result<Vec<Quiz1Review>> {
    let mut out = Vec::new();
    for row in csv::Reader::from_reader(reader).deserialize() {
        out.push(row?);
    }
    Ok(out)
}

pub fn read_quiz2_rows<R: Read>(reader: R) -> Result<Vec<Quiz2Row>> {
    let mut out = Vec::new();
    for row in csv::Reader::from_reader(reader).deserialize() {
        out.push(row?);
    }
    Ok(out)
}

/// Detection accuracy and timing for one slice of reviews.
///
/// The second pick on each sheet is validated at ingestion (it must be a
/// distinct in-range slot) and kept with the raw review, but it is not
/// aggregated here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quiz1Stats {
    pub reviews: usize,
    /// Fraction whose first pick was the original.
    pub top1_accuracy: f64,
    pub time_mean: f64,
    /// Sample standard deviation (n-1); absent with fewer than two reviews.
    pub time_sd: Option<f64>,
}

impl Quiz1Stats {
    fn from_outcomes(outcomes: &[(bool, f64)]) -> Quiz1Stats {
        let n = outcomes.len();
        if n == 0 {
            return Quiz1Stats {
                reviews: 0,
                top1_accuracy: 0.0,
                time_mean: 0.0,
                time_sd: None,
            };
        }
        let nf = n as f64;
        let top1 = outcomes.iter().filter(|o| o.0).count() as f64 / nf;
        let mean = outcomes.iter().map(|o| o.1).sum::<f64>() / nf;
        let sd = if n >= 2 {
            let ss = outcomes.iter().map(|o| (o.1 - mean).powi(2)).sum::<f64>();
            Some((ss / (nf - 1.0)).sqrt())
        } else {
            None
        };
        Quiz1Stats {
            reviews: n,
            top1_accuracy: top1,
            time_mean: mean,
            time_sd: sd,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Quiz1Report {
    /// Keyed by model; only models with at least one review appear.
    pub per_model: BTreeMap<String, Quiz1Stats>,
    pub overall: Quiz1Stats,
}

/// Scores detection reviews against the answer key.
///
/// Every review must reference a known detection set and pick two distinct
/// slots of its four; violations are hard errors since they mean the sheet
/// does not match the packet that was sent out.
pub fn quiz1_metrics(
    reviews: &[Quiz1Review],
    key: &BTreeMap<String, KeyRecord>,
) -> Result<Quiz1Report> {
    let mut by_model: BTreeMap<String, Vec<(bool, f64)>> = BTreeMap::new();
    let mut all = Vec::with_capacity(reviews.len());
    for r in reviews {
        let k = key
            .get(&r.set_id)
            .ok_or_else(|| Error::UnknownSetId(r.set_id.clone()))?;
        if k.mode != QuizMode::Detection {
            return Err(Error::InvalidParams(format!(
                "set `{}` is not a detection set",
                r.set_id
            )));
        }
        let truth = k.truth_slot.ok_or_else(|| {
            Error::InvalidParams(format!("set `{}` has no truth slot", r.set_id))
        })?;
        let slots = 1 + k.slots.len();
        if r.top1_slot >= slots || r.top2_slot >= slots || r.top1_slot == r.top2_slot {
            return Err(Error::InvalidParams(format!(
                "reviewer `{}` set `{}`: invalid picks {}/{}",
                r.reviewer_id, r.set_id, r.top1_slot, r.top2_slot
            )));
        }
        if !(r.time_minutes.is_finite() && r.time_minutes >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "reviewer `{}` set `{}`: bad time {}",
                r.reviewer_id, r.set_id, r.time_minutes
            )));
        }
        // A detection set holds fakes from exactly one model.
        let model = k
            .slots
            .first()
            .map(|s| s.model.clone())
            .ok_or_else(|| Error::InvalidParams(format!("set `{}` has no fakes", r.set_id)))?;
        let outcome = (r.top1_slot == truth, r.time_minutes);
        by_model.entry(model).or_default().push(outcome);
        all.push(outcome);
    }
    Ok(Quiz1Report {
        per_model: by_model
            .into_iter()
            .map(|(m, o)| (m, Quiz1Stats::from_outcomes(&o)))
            .collect(),
        overall: Quiz1Stats::from_outcomes(&all),
    })
}

/// Mean 4-point scores for one model in the rating design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LikertMeans {
    pub ratings: usize,
    pub fluency: f64,
    pub coherency: f64,
    pub expertise: f64,
    /// Mean preference score, where rank r maps to score 5 - r.
    pub preference: f64,
}

/// Fakeness level counts for one model, over ratings 1..4.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FakenessBucket {
    pub counts: [usize; 4],
    pub percent: [f64; 4],
}

impl FakenessBucket {
    fn from_counts(counts: [usize; 4]) -> FakenessBucket {
        let total: usize = counts.iter().sum();
        let percent = if total == 0 {
            [0.0; 4]
        } else {
            counts.map(|c| c as f64 * 100.0 / total as f64)
        };
        FakenessBucket { counts, percent }
    }
}

/// Mean preference among ratings that assigned a given fakeness level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceByFakeness {
    pub fakeness: u8,
    pub ratings: usize,
    pub mean_preference: Option<f64>,
}

/// Rank correlations between all metric pairs, in [`METRIC_LABELS`] order.
/// `None` marks pairs undefined because one side has zero rank variance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpearmanMatrix {
    pub labels: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Quiz2Report {
    pub per_model: BTreeMap<String, LikertMeans>,
    pub fakeness: BTreeMap<String, FakenessBucket>,
    pub preference_by_fakeness: Vec<PreferenceByFakeness>,
    pub spearman: SpearmanMatrix,
    /// Human-readable reasons for each rejected (set, reviewer) sheet.
    pub rejected: Vec<String>,
}

/// Aggregates rating reviews against the answer key.
///
/// Rows are grouped per (set, reviewer); a group must cover each fake slot
/// exactly once, use 1..4 scores throughout, and rank the four fakes as a
/// permutation of 1..4. Groups violating this are skipped and reported in
/// `rejected` rather than poisoning the aggregates. Unknown set ids are
/// hard errors.
pub fn quiz2_metrics(
    rows: &[Quiz2Row],
    key: &BTreeMap<String, KeyRecord>,
) -> Result<Quiz2Report> {
    let mut groups: BTreeMap<(String, String), Vec<&Quiz2Row>> = BTreeMap::new();
    for r in rows {
        let k = key
            .get(&r.set_id)
            .ok_or_else(|| Error::UnknownSetId(r.set_id.clone()))?;
        if k.mode != QuizMode::Rating {
            return Err(Error::InvalidParams(format!(
                "set `{}` is not a rating set",
                r.set_id
            )));
        }
        groups
            .entry((r.set_id.clone(), r.reviewer_id.clone()))
            .or_default()
            .push(r);
    }

    let mut rejected = Vec::new();
    let mut per_model: BTreeMap<String, Vec<(f64, f64, f64, f64)>> = BTreeMap::new();
    let mut fakeness_counts: BTreeMap<String, [usize; 4]> = BTreeMap::new();
    let mut pref_by_fake: [Vec<f64>; 4] = Default::default();
    let mut columns: [Vec<f64>; 5] = Default::default();

    'group: for ((set_id, reviewer), group) in &groups {
        let k = &key[set_id];
        let reject = |reason: String, rejected: &mut Vec<String>| {
            rejected.push(format!("set `{set_id}` reviewer `{reviewer}`: {reason}"));
        };
        if group.len() != k.slots.len() {
            reject(
                format!("expected {} rows, got {}", k.slots.len(), group.len()),
                &mut rejected,
            );
            continue;
        }
        let mut seen_slots: Vec<usize> = Vec::with_capacity(group.len());
        let mut ranks: Vec<u8> = Vec::with_capacity(group.len());
        for r in group {
            if k.slots.iter().all(|s| s.slot != r.slot) {
                reject(format!("slot {} is not a fake slot", r.slot), &mut rejected);
                continue 'group;
            }
            if seen_slots.contains(&r.slot) {
                reject(format!("slot {} rated twice", r.slot), &mut rejected);
                continue 'group;
            }
            seen_slots.push(r.slot);
            for (name, v) in [
                ("fluency", r.fluency),
                ("coherency", r.coherency),
                ("expertise", r.expertise),
                ("fakeness", r.fakeness),
            ] {
                if !(1..=4).contains(&v) {
                    reject(format!("{name} {v} outside 1..4"), &mut rejected);
                    continue 'group;
                }
            }
            ranks.push(r.preference_rank);
        }
        let mut sorted_ranks = ranks.clone();
        sorted_ranks.sort_unstable();
        if sorted_ranks != [1, 2, 3, 4] {
            reject(format!("ranks {ranks:?} are not a permutation of 1..4"), &mut rejected);
            continue;
        }

        for r in group {
            let model = k
                .slots
                .iter()
                .find(|s| s.slot == r.slot)
                .expect("slot validated above")
                .model
                .clone();
            let pref = 5.0 - f64::from(r.preference_rank);
            per_model.entry(model.clone()).or_default().push((
                f64::from(r.fluency),
                f64::from(r.coherency),
                f64::from(r.expertise),
                pref,
            ));
            fakeness_counts.entry(model).or_default()[(r.fakeness - 1) as usize] += 1;
            pref_by_fake[(r.fakeness - 1) as usize].push(pref);
            for (col, v) in columns.iter_mut().zip([
                f64::from(r.fluency),
                f64::from(r.coherency),
                f64::from(r.expertise),
                f64::from(r.fakeness),
                pref,
            ]) {
                col.push(v);
            }
        }
    }

    let per_model = per_model
        .into_iter()
        .map(|(m, rows)| {
            let n = rows.len() as f64;
            (
                m,
                LikertMeans {
                    ratings: rows.len(),
                    fluency: rows.iter().map(|r| r.0).sum::<f64>() / n,
                    coherency: rows.iter().map(|r| r.1).sum::<f64>() / n,
                    expertise: rows.iter().map(|r| r.2).sum::<f64>() / n,
                    preference: rows.iter().map(|r| r.3).sum::<f64>() / n,
                },
            )
        })
        .collect();

    let fakeness = fakeness_counts
        .into_iter()
        .map(|(m, c)| (m, FakenessBucket::from_counts(c)))
        .collect();

    let preference_by_fakeness = (0..4)
        .map(|i| {
            let prefs = &pref_by_fake[i];
            PreferenceByFakeness {
                fakeness: i as u8 + 1,
                ratings: prefs.len(),
                mean_preference: if prefs.is_empty() {
                    None
                } else {
                    Some(prefs.iter().sum::<f64>() / prefs.len() as f64)
                },
            }
        })
        .collect();

    let values = (0..5)
        .map(|i| {
            (0..5)
                .map(|j| spearman(&columns[i], &columns[j]))
                .collect()
        })
        .collect();

    Ok(Quiz2Report {
        per_model,
        fakeness,
        preference_by_fakeness,
        spearman: SpearmanMatrix {
            labels: METRIC_LABELS.iter().map(|s| (*s).to_string()).collect(),
            values,
        },
        rejected,
    })
}

/// Average ranks (1-based), ties sharing the mean of their positions.
fn fractional_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // Positions i..=j (0-based) share the average of ranks i+1..=j+1.
        let shared = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = shared;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with fractional ranks for ties: Pearson
/// correlation of the rank vectors. `None` when either side has zero rank
/// variance (the correlation is undefined) or the vectors are unusable.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let rx = fractional_ranks(xs);
    let ry = fractional_ranks(ys);
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        cov += (a - mx) * (b - my);
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return None;
    }
    Some(cov / (vx * vy).sqrt())
}
