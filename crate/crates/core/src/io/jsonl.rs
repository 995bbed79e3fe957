//! JSON-lines corpus format, one sentence object per line:
//! `{"tokens": [...], "labels": [...], "source": [article_id, sentence_index]}`.

use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::tagger::TaggedSentence;

#[derive(Debug, Error)]
pub enum JsonlError {
    #[error("line {line}: {source}")]
    Parse { line: usize, source: serde_json::Error },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn emit_jsonl<'a, W, I>(corpus: I, sink: &mut W) -> io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a TaggedSentence>,
{
    for sentence in corpus {
        serde_json::to_writer(&mut *sink, sentence)?;
        sink.write_all(b"\n")?;
    }
    Ok(())
}

pub fn load_jsonl<R: BufRead>(source: R) -> Result<Vec<TaggedSentence>, JsonlError> {
    let mut corpus = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        corpus.push(serde_json::from_str(&line).map_err(|source| JsonlError::Parse { line: i + 1, source })?);
    }
    Ok(corpus)
}
