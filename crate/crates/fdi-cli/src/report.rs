//! Plain-text tables for review metrics, written alongside the JSON report
//! for people who just want to read numbers in a terminal.

use std::fmt::Write as _;

use fdi_core::eval::{Quiz1Report, Quiz2Report};

const FAKENESS_LABELS: [&str; 4] = ["inadequate", "marginal", "moderate", "excessive"];

fn hr(widths: &[usize]) -> String {
    let mut s = String::from("+");
    for w in widths {
        s.push_str(&"-".repeat(w + 2));
        s.push('+');
    }
    s.push('\n');
    s
}

fn row(widths: &[usize], cells: &[String]) -> String {
    let mut s = String::from("|");
    for (w, c) in widths.iter().zip(cells) {
        let _ = write!(s, " {c:>w$} |", w = *w);
    }
    s.push('\n');
    s
}

/// Renders a table with right-aligned columns sized to their content.
fn table(header: &[&str], body: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in body {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = hr(&widths);
    out += &row(&widths, &header.iter().map(|h| (*h).to_string()).collect::<Vec<_>>());
    out += &hr(&widths);
    for r in body {
        out += &row(&widths, r);
    }
    out + &hr(&widths)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_owned(), |x| format!("{x:.2}"))
}

/// Detection results: accuracy and time per model plus a pooled row.
pub fn quiz1_table(report: &Quiz1Report) -> String {
    let mut body: Vec<Vec<String>> = report
        .per_model
        .iter()
        .map(|(model, s)| {
            vec![
                model.clone(),
                s.reviews.to_string(),
                format!("{:.3}", s.top1_accuracy),
                format!("{:.2}", s.time_mean),
                fmt_opt(s.time_sd),
            ]
        })
        .collect();
    let o = &report.overall;
    body.push(vec![
        "avg.".to_owned(),
        o.reviews.to_string(),
        format!("{:.3}", o.top1_accuracy),
        format!("{:.2}", o.time_mean),
        fmt_opt(o.time_sd),
    ]);
    let mut out = String::from("Detection accuracy and time\n");
    out += &table(
        &["model", "reviews", "accuracy", "time mean", "time sd"],
        &body,
    );
    out
}

/// Rating results: Likert means, fakeness distribution, preference by
/// fakeness, and the metric correlation matrix.
pub fn quiz2_tables(report: &Quiz2Report) -> String {
    let mut out = String::from("Mean ratings per model\n");
    let body: Vec<Vec<String>> = report
        .per_model
        .iter()
        .map(|(model, m)| {
            vec![
                model.clone(),
                m.ratings.to_string(),
                format!("{:.2}", m.fluency),
                format!("{:.2}", m.coherency),
                format!("{:.2}", m.expertise),
                format!("{:.2}", m.preference),
            ]
        })
        .collect();
    out += &table(
        &["model", "ratings", "fluency", "coherency", "expertise", "preference"],
        &body,
    );

    out += "\nFakeness distribution (% of ratings)\n";
    let body: Vec<Vec<String>> = report
        .fakeness
        .iter()
        .map(|(model, b)| {
            let mut cells = vec![model.clone()];
            cells.extend(b.percent.iter().map(|p| format!("{p:.1}")));
            cells.push(b.counts.iter().sum::<usize>().to_string());
            cells
        })
        .collect();
    let header: Vec<&str> = std::iter::once("model")
        .chain(FAKENESS_LABELS)
        .chain(std::iter::once("ratings"))
        .collect();
    out += &table(&header, &body);

    out += "\nPreference by assigned fakeness\n";
    let body: Vec<Vec<String>> = report
        .preference_by_fakeness
        .iter()
        .map(|p| {
            vec![
                FAKENESS_LABELS[(p.fakeness - 1) as usize].to_owned(),
                p.ratings.to_string(),
                fmt_opt(p.mean_preference),
            ]
        })
        .collect();
    out += &table(&["fakeness", "ratings", "mean preference"], &body);

    out += "\nRank correlation between metrics\n";
    let body: Vec<Vec<String>> = report
        .spearman
        .labels
        .iter()
        .zip(&report.spearman.values)
        .map(|(label, vals)| {
            let mut cells = vec![label.clone()];
            cells.extend(vals.iter().map(|v| fmt_opt(*v)));
            cells
        })
        .collect();
    let header: Vec<&str> = std::iter::once("")
        .chain(report.spearman.labels.iter().map(String::as_str))
        .collect();
    out += &table(&header, &body);

    if !report.rejected.is_empty() {
        let _ = write!(out, "\nRejected sheets: {}\n", report.rejected.len());
        for r in &report.rejected {
            let _ = writeln!(out, "  - {r}");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use fdi_core::eval::{
        quiz1_metrics, quiz2_metrics, KeyRecord, KeySlot, Quiz1Review, Quiz2Row, QuizMode,
    };
    use std::collections::BTreeMap;

    fn rating_key(set_id: &str) -> KeyRecord {
        KeyRecord {
            set_id: set_id.to_owned(),
            mode: QuizMode::Rating,
            doc_id: "d".to_owned(),
            truth_slot: Some(0),
            slots: (1..=4)
                .map(|slot| KeySlot {
                    slot,
                    model: format!("m{slot}"),
                    fake_id: format!("f{slot}"),
                })
                .collect(),
        }
    }

    fn rating_rows(set_id: &str, reviewer: &str) -> Vec<Quiz2Row> {
        (1..=4)
            .map(|slot| Quiz2Row {
                set_id: set_id.to_owned(),
                reviewer_id: reviewer.to_owned(),
                slot,
                fluency: 3,
                coherency: 2,
                expertise: 4,
                fakeness: slot as u8,
                preference_rank: slot as u8,
            })
            .collect()
    }

    #[test]
    fn quiz1_table_includes_pooled_row() {
        let key: BTreeMap<String, KeyRecord> = [(
            "s1".to_owned(),
            KeyRecord {
                set_id: "s1".to_owned(),
                mode: QuizMode::Detection,
                doc_id: "d".to_owned(),
                truth_slot: Some(1),
                slots: vec![
                    KeySlot { slot: 0, model: "m1".into(), fake_id: "f0".into() },
                    KeySlot { slot: 2, model: "m1".into(), fake_id: "f2".into() },
                    KeySlot { slot: 3, model: "m1".into(), fake_id: "f3".into() },
                ],
            },
        )]
        .into();
        let reviews = vec![Quiz1Review {
            set_id: "s1".into(),
            reviewer_id: "r".into(),
            top1_slot: 1,
            top2_slot: 0,
            time_minutes: 2.5,
        }];
        let text = quiz1_table(&quiz1_metrics(&reviews, &key).unwrap());
        assert!(text.contains("avg."));
        assert!(text.contains("m1"));
        assert!(text.contains("1.000"));
    }

    #[test]
    fn quiz2_tables_cover_all_sections() {
        let key: BTreeMap<String, KeyRecord> = [("s".to_owned(), rating_key("s"))].into();
        let rows = rating_rows("s", "r1");
        let text = quiz2_tables(&quiz2_metrics(&rows, &key).unwrap());
        for needle in ["Mean ratings", "Fakeness distribution", "Preference by", "correlation"] {
            assert!(text.contains(needle), "missing section {needle}:\n{text}");
        }
        // One rating per model per fakeness level: each model row shows
        // 100% in exactly one bucket.
        assert!(text.contains("100.0"));
    }
}
