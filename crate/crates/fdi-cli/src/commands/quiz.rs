//! `fdi quiz` — bundle originals and generated fakes into review sets,
//! writing the reviewer-facing packet and the separate answer key.

use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use fdi_core::eval::{
    build_quiz_sets, key_records, packet_records, FakeInput, FakeText, QuizMode,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ModeArg {
    /// Hide one original among three fakes of a single model.
    Detection,
    /// Show the original openly next to four fakes from four models.
    Rating,
}

impl From<ModeArg> for QuizMode {
    fn from(m: ModeArg) -> QuizMode {
        match m {
            ModeArg::Detection => QuizMode::Detection,
            ModeArg::Rating => QuizMode::Rating,
        }
    }
}

#[derive(clap::Args, Debug)]
pub struct QuizArgs {
    /// Corpus holding the original documents.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Fakes for one model, as MODEL=PATH pointing at a fakes.jsonl;
    /// repeat per model.
    #[arg(long = "fakes", value_name = "MODEL=PATH", required = true)]
    pub fakes: Vec<String>,
    #[arg(long, value_enum)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory receiving packet.jsonl and key.jsonl.
    #[arg(long = "out-dir")]
    pub out_dir: PathBuf,
}

#[derive(Deserialize)]
struct FakeLine {
    doc_id: String,
    fake_id: String,
    text: String,
}

fn read_fakes(path: &Path) -> Result<BTreeMap<String, Vec<FakeText>>> {
    let file = std::fs::File::open(path)
        .with_context(|| format!("opening fakes file {}", path.display()))?;
    let mut by_doc: BTreeMap<String, Vec<FakeText>> = BTreeMap::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: FakeLine = serde_json::from_str(&line)
            .with_context(|| format!("{}:{}", path.display(), i + 1))?;
        by_doc.entry(parsed.doc_id).or_default().push(FakeText {
            fake_id: parsed.fake_id,
            text: parsed.text,
        });
    }
    Ok(by_doc)
}

pub fn run(args: &QuizArgs) -> Result<u8> {
    let mut fakes: FakeInput = BTreeMap::new();
    for spec in &args.fakes {
        let Some((model, path)) = spec.split_once('=') else {
            bail!("--fakes takes MODEL=PATH, got `{spec}`");
        };
        if model.is_empty() {
            bail!("--fakes model name is empty in `{spec}`");
        }
        if fakes
            .insert(model.to_owned(), read_fakes(Path::new(path))?)
            .is_some()
        {
            bail!("model `{model}` given twice");
        }
    }

    let docs = fdi_core::corpus::read_corpus_path(&args.corpus)
        .with_context(|| format!("reading corpus {}", args.corpus.display()))?;
    let mut originals: Vec<(String, String)> = docs
        .iter()
        .map(|d| (d.id().to_owned(), d.text().to_owned()))
        .collect();
    originals.sort();

    let sets = build_quiz_sets(&originals, &fakes, args.mode.into(), args.seed)?;

    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;
    let packet = crate::commands::jsonl(packet_records(&sets))?;
    let key = crate::commands::jsonl(key_records(&sets))?;
    std::fs::write(args.out_dir.join("packet.jsonl"), packet)?;
    std::fs::write(args.out_dir.join("key.jsonl"), key)?;

    eprintln!(
        "built {} {} sets in {}",
        sets.len(),
        match args.mode {
            ModeArg::Detection => "detection",
            ModeArg::Rating => "rating",
        },
        args.out_dir.display()
    );
    Ok(0)
}
