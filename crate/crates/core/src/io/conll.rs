//! Two-column CoNLL: `token<SPACE>label` per line, a blank line after each
//! sentence. The reader also accepts tab- or space-separated files with
//! more columns and takes the label from the last one.

use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::bio::{parse_and_repair, BioError};
use crate::tagger::{SentenceKey, TaggedSentence};

#[derive(Debug, Error)]
pub enum ConllError {
    #[error("line {line}: expected {expected} columns, found {found}")]
    Columns { line: usize, expected: usize, found: usize },
    #[error("line {line}: {source}")]
    Label { line: usize, source: BioError },
    #[error("sentence {index}: token `{token}` cannot be written as a CoNLL column")]
    Token { index: usize, token: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Writes one sentence block.
pub fn write_sentence<W: Write>(sink: &mut W, sentence: &TaggedSentence) -> io::Result<()> {
    for (token, label) in sentence.tokens().iter().zip(sentence.labels()) {
        writeln!(sink, "{token} {label}")?;
    }
    sink.write_all(b"\n")
}

pub fn emit_conll<'a, W, I>(corpus: I, sink: &mut W) -> Result<(), ConllError>
where
    W: Write,
    I: IntoIterator<Item = &'a TaggedSentence>,
{
    for (index, sentence) in corpus.into_iter().enumerate() {
        // Tokens are whitespace-free by construction; guard the format anyway.
        if let Some(token) = sentence.tokens().iter().find(|t| t.is_empty() || t.contains(char::is_whitespace)) {
            return Err(ConllError::Token { index, token: token.clone() });
        }
        write_sentence(sink, sentence)?;
    }
    Ok(())
}

pub fn to_conll_string(corpus: &[TaggedSentence]) -> String {
    let mut buf = Vec::new();
    emit_conll(corpus, &mut buf).expect("in-memory write");
    String::from_utf8(buf).expect("utf-8 tokens")
}

/// Streaming reader. Sentences get keys `(0, n)` in file order.
pub struct ConllReader<R> {
    lines: io::Lines<R>,
    line_no: usize,
    columns: Option<usize>,
    sentences: u32,
    repairs: u64,
    done: bool,
}

impl<R: BufRead> ConllReader<R> {
    pub fn new(source: R) -> Self {
        Self { lines: source.lines(), line_no: 0, columns: None, sentences: 0, repairs: 0, done: false }
    }

    /// Number of labels changed by BIO repair so far.
    pub fn repairs(&self) -> u64 {
        self.repairs
    }

    fn read_sentence(&mut self) -> Result<Option<TaggedSentence>, ConllError> {
        let mut tokens = Vec::new();
        let mut labels = Vec::new();
        let mut first_line = 0;
        for line in self.lines.by_ref() {
            self.line_no += 1;
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                if tokens.is_empty() {
                    continue;
                }
                break;
            }
            let fields: Vec<&str> = line.split([' ', '\t']).filter(|f| !f.is_empty()).collect();
            if fields.first() == Some(&"-DOCSTART-") {
                continue;
            }
            let expected = *self.columns.get_or_insert(fields.len().max(2));
            if fields.len() < 2 || fields.len() != expected {
                return Err(ConllError::Columns { line: self.line_no, expected, found: fields.len() });
            }
            if tokens.is_empty() {
                first_line = self.line_no;
            }
            tokens.push(fields[0].to_string());
            labels.push(fields[fields.len() - 1].to_string());
        }
        if tokens.is_empty() {
            return Ok(None);
        }
        let (labels, repaired) = parse_and_repair(&labels).map_err(|source| ConllError::Label { line: first_line, source })?;
        self.repairs += repaired as u64;
        let key = SentenceKey::new(0, self.sentences);
        self.sentences += 1;
        let sentence = TaggedSentence::new(tokens, labels, key).expect("repaired, whitespace-free, equal length");
        Ok(Some(sentence))
    }
}

impl<R: BufRead> Iterator for ConllReader<R> {
    type Item = Result<TaggedSentence, ConllError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let item = self.read_sentence().transpose();
        if !matches!(item, Some(Ok(_))) {
            self.done = true;
        }
        item
    }
}

/// Reads a whole file, returning sentences and the repair tally.
pub fn load_conll<R: BufRead>(source: R) -> Result<(Vec<TaggedSentence>, u64), ConllError> {
    let mut reader = ConllReader::new(source);
    let sentences = reader.by_ref().collect::<Result<Vec<_>, _>>()?;
    Ok((sentences, reader.repairs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bio::{Label, Span};

    fn sentence(tokens: &[&str], spans: &[Span]) -> TaggedSentence {
        TaggedSentence::from_spans(tokens.iter().map(|t| t.to_string()).collect(), spans, SentenceKey::default())
            .unwrap()
    }

    #[test]
    fn emit_format() {
        let s = sentence(&["Paris", "is"], &[Span::new(0, 1, "city")]);
        assert_eq!(to_conll_string(&[s]), "Paris B-city\nis O\n\n");
        assert_eq!(to_conll_string(&[]), "");
    }

    #[test]
    fn round_trip() {
        let corpus = vec![
            sentence(&["Paris", "is"], &[Span::new(0, 1, "city")]),
            sentence(&["the", "Foo", "Bar"], &[Span::new(1, 3, "ENTITY")]),
        ];
        let text = to_conll_string(&corpus);
        let (loaded, repairs) = load_conll(text.as_bytes()).unwrap();
        assert_eq!(repairs, 0);
        assert_eq!(loaded.len(), 2);
        assert_eq!(to_conll_string(&loaded), text);
        assert_eq!(loaded[1].source(), SentenceKey::new(0, 1));
    }

    #[test]
    fn last_column_is_label() {
        let (s, _) = load_conll("-DOCSTART- -X- O\n\nParis\tNNP\tB-LOC\nrocks VBZ O\n".as_bytes()).unwrap();
        assert_eq!(s[0].tokens(), ["Paris", "rocks"]);
        assert_eq!(s[0].labels(), [Label::B("LOC".into()), Label::O]);
    }

    #[test]
    fn repairs_invalid_bio() {
        let (s, repairs) = load_conll("a O\nb I-LOC\n\n".as_bytes()).unwrap();
        assert_eq!(repairs, 1);
        assert_eq!(s[0].labels()[1], Label::B("LOC".into()));
    }

    #[test]
    fn wrong_column_count_names_line() {
        let err = load_conll("a O\n\nb\n".as_bytes()).unwrap_err();
        assert!(matches!(err, ConllError::Columns { line: 3, .. }), "{err}");
        let err = load_conll("a x O\nb O\n".as_bytes()).unwrap_err();
        assert!(matches!(err, ConllError::Columns { line: 2, expected: 3, found: 2 }));
    }

    #[test]
    fn unknown_label() {
        let err = load_conll("a\tQ-LOC\n".as_bytes()).unwrap_err();
        assert!(matches!(err, ConllError::Label { line: 1, .. }));
    }
}
