//! `fdi metrics` — score review sheets against the answer key and emit the
//! aggregate report (JSON, optional text tables, optional SVG charts).

use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use fdi_core::eval::{
    quiz1_metrics, quiz2_metrics, read_quiz1_reviews, read_quiz2_rows, KeyRecord, Quiz1Report,
    Quiz2Report,
};

use crate::report::{quiz1_table, quiz2_tables};
use crate::svg::{fakeness_histogram, spearman_heatmap};

#[derive(clap::Args, Debug)]
pub struct MetricsArgs {
    /// Answer key (key.jsonl) written by `fdi quiz`.
    #[arg(long)]
    pub key: PathBuf,
    /// Detection review sheets (CSV: set_id, reviewer_id, top1_slot,
    /// top2_slot, time_minutes).
    #[arg(long)]
    pub quiz1: Option<PathBuf>,
    /// Rating review sheets (CSV: set_id, reviewer_id, slot, fluency,
    /// coherency, expertise, fakeness, preference_rank).
    #[arg(long)]
    pub quiz2: Option<PathBuf>,
    /// JSON report destination; stdout if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write plain-text tables here.
    #[arg(long)]
    pub tables: Option<PathBuf>,
    /// Also write fakeness.svg and spearman.svg into this directory.
    #[arg(long = "svg-dir")]
    pub svg_dir: Option<PathBuf>,
}

#[derive(Serialize)]
struct FullReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    quiz1: Option<Quiz1Report>,
    #[serde(skip_serializing_if = "Option::is_none")]
    quiz2: Option<Quiz2Report>,
}

fn read_key(path: &PathBuf) -> Result<BTreeMap<String, KeyRecord>> {
    let file = std::fs::File::open(path)
        .with_context(|| format!("opening key {}", path.display()))?;
    let mut key = BTreeMap::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: KeyRecord = serde_json::from_str(&line)
            .with_context(|| format!("{}:{}", path.display(), i + 1))?;
        if key.insert(record.set_id.clone(), record).is_some() {
            bail!("{}:{}: duplicate set id", path.display(), i + 1);
        }
    }
    Ok(key)
}

pub fn run(args: &MetricsArgs) -> Result<u8> {
    if args.quiz1.is_none() && args.quiz2.is_none() {
        bail!("nothing to aggregate: pass --quiz1 and/or --quiz2");
    }
    let key = read_key(&args.key)?;

    let quiz1 = match &args.quiz1 {
        Some(path) => {
            let file = std::fs::File::open(path)
                .with_context(|| format!("opening {}", path.display()))?;
            let reviews = read_quiz1_reviews(file)
                .with_context(|| format!("reading {}", path.display()))?;
            Some(quiz1_metrics(&reviews, &key)?)
        }
        None => None,
    };
    let quiz2 = match &args.quiz2 {
        Some(path) => {
            let file = std::fs::File::open(path)
                .with_context(|| format!("opening {}", path.display()))?;
            let rows = read_quiz2_rows(file)
                .with_context(|| format!("reading {}", path.display()))?;
            Some(quiz2_metrics(&rows, &key)?)
        }
        None => None,
    };

    if let Some(q2) = &quiz2 {
        for rejected in &q2.rejected {
            eprintln!("warning: rejected sheet: {rejected}");
        }
    }

    let report = FullReport { quiz1, quiz2 };
    let json = serde_json::to_string_pretty(&report)? + "\n";
    match &args.out {
        Some(path) => std::fs::write(path, &json)
            .with_context(|| format!("writing {}", path.display()))?,
        None => print!("{json}"),
    }

    if let Some(path) = &args.tables {
        let mut text = String::new();
        if let Some(q1) = &report.quiz1 {
            text += &quiz1_table(q1);
            text.push('\n');
        }
        if let Some(q2) = &report.quiz2 {
            text += &quiz2_tables(q2);
        }
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }

    if let Some(dir) = &args.svg_dir {
        let Some(q2) = &report.quiz2 else {
            bail!("--svg-dir needs rating data; pass --quiz2");
        };
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        std::fs::write(dir.join("fakeness.svg"), fakeness_histogram(&q2.fakeness))?;
        std::fs::write(dir.join("spearman.svg"), spearman_heatmap(&q2.spearman))?;
    }
    Ok(0)
}
