//! Rule-based sentence splitting and tokenization.
//!
//! A sentence ends at `.`, `!` or `?` followed by whitespace and then an
//! uppercase letter or digit, unless the terminator sits inside an anchor or
//! ends a known abbreviation. Paragraph breaks (`"\n\n"`) always end a
//! sentence.

use std::collections::HashSet;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::dump::Article;
use crate::wikitext::AnchorSpan;

pub const DEFAULT_ABBREVIATIONS: &[&str] = &[
    "Mr.", "Mrs.", "Dr.", "St.", "U.S.", "e.g.", "i.e.", "etc.", "vs.", "Jr.", "Sr.", "Prof.",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

/// A sentence with tokens and token-aligned anchors, offsets relative to
/// the sentence text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawSentence {
    pub article_id: u64,
    pub sentence_index: u32,
    pub text: String,
    pub tokens: Vec<Token>,
    pub anchors: Vec<AnchorSpan>,
}

impl RawSentence {
    /// Token range `[first, last)` covered by each anchor.
    pub fn anchor_token_ranges(&self) -> Vec<(usize, usize)> {
        self.anchors
            .iter()
            .map(|a| {
                let first = self.tokens.partition_point(|t| t.end <= a.start);
                let last = self.tokens.partition_point(|t| t.start < a.end);
                (first, last)
            })
            .collect()
    }
}

/// Tokenizer and sentence splitter sharing one abbreviation list.
#[derive(Debug, Clone)]
pub struct Segmenter {
    abbreviations: HashSet<String>,
}

impl Default for Segmenter {
    fn default() -> Self {
        Self::new(DEFAULT_ABBREVIATIONS.iter().map(|s| s.to_string()))
    }
}

impl Segmenter {
    pub fn new(abbreviations: impl IntoIterator<Item = String>) -> Self {
        Self { abbreviations: abbreviations.into_iter().collect() }
    }

    /// One abbreviation per line; blank lines and `#` comments ignored.
    pub fn from_reader<R: BufRead>(reader: R) -> std::io::Result<Self> {
        let mut abbreviations = Vec::new();
        for line in reader.lines() {
            let line = line?;
            let line = line.trim();
            if !line.is_empty() && !line.starts_with('#') {
                abbreviations.push(line.to_string());
            }
        }
        Ok(Self::new(abbreviations))
    }

    fn is_abbreviation(&self, word: &str) -> bool {
        self.abbreviations.contains(word)
    }

    /// Splits on whitespace, then peels leading and trailing punctuation
    /// into single-character tokens. A trailing period stays attached when
    /// the word already contains a period (`U.S.`) or is an abbreviation.
    pub fn tokenize(&self, text: &str) -> Vec<Token> {
        let mut tokens = Vec::new();
        for (word_start, word) in words(text) {
            let mut lo = 0;
            let mut hi = word.len();
            let mut trailing = Vec::new();
            while lo < hi {
                let c = word[lo..hi].chars().next().unwrap();
                if !is_punct(c) {
                    break;
                }
                tokens.push(token(text, word_start + lo, word_start + lo + c.len_utf8()));
                lo += c.len_utf8();
            }
            while lo < hi {
                let c = word[lo..hi].chars().next_back().unwrap();
                if !is_punct(c) {
                    break;
                }
                let core = &word[lo..hi - c.len_utf8()];
                if c == '.' && (core.contains('.') || self.is_abbreviation(&word[lo..hi])) {
                    break;
                }
                hi -= c.len_utf8();
                trailing.push(token(text, word_start + hi, word_start + hi + c.len_utf8()));
            }
            if lo < hi {
                tokens.push(token(text, word_start + lo, word_start + hi));
            }
            tokens.extend(trailing.into_iter().rev());
        }
        tokens
    }

    /// Byte ranges of the sentences in `text`, trimmed of whitespace.
    pub fn sentence_bounds(&self, text: &str, anchors: &[AnchorSpan]) -> Vec<(usize, usize)> {
        let bytes = text.as_bytes();
        let inside_anchor = |pos: usize| {
            let k = anchors.partition_point(|a| a.end <= pos);
            anchors.get(k).is_some_and(|a| a.start <= pos)
        };
        let mut bounds = Vec::new();
        let mut start = 0;
        let mut i = 0;
        while i < bytes.len() {
            let b = bytes[i];
            let cut = match b {
                b'\n' if bytes.get(i + 1) == Some(&b'\n') && !inside_anchor(i) => Some(i),
                b'.' | b'!' | b'?' => {
                    let after = i + 1;
                    let ws = text[after..].chars().take_while(|c| c.is_whitespace()).map(char::len_utf8).sum::<usize>();
                    let next = text[after + ws..].chars().next();
                    let boundary = ws > 0
                        && next.is_some_and(|c| c.is_uppercase() || c.is_ascii_digit())
                        && !inside_anchor(i)
                        && !(b == b'.' && self.is_abbreviation(word_before(text, after)));
                    boundary.then_some(after)
                }
                _ => None,
            };
            if let Some(end) = cut {
                push_trimmed(text, start, end, &mut bounds);
                start = end;
            }
            i += 1;
        }
        push_trimmed(text, start, text.len(), &mut bounds);
        bounds
    }

    /// Splits an article into tokenized sentences with token-aligned anchors.
    pub fn split_sentences(&self, article: &Article) -> Vec<RawSentence> {
        let text = &article.plain_text;
        let mut sentences = Vec::new();
        let mut anchor_idx = 0;
        for (start, end) in self.sentence_bounds(text, &article.anchors) {
            let sentence_text = &text[start..end];
            let tokens = self.tokenize(sentence_text);
            let mut anchors = Vec::new();
            while anchor_idx < article.anchors.len() && article.anchors[anchor_idx].start < end {
                let a = &article.anchors[anchor_idx];
                anchor_idx += 1;
                if a.end <= start {
                    continue;
                }
                let rel_start = a.start.saturating_sub(start);
                let rel_end = (a.end - start).min(sentence_text.len());
                if let Some(aligned) = align(&tokens, sentence_text, rel_start, rel_end, &a.target) {
                    // Expansion can make neighbours share a token; the
                    // earlier anchor keeps it.
                    if anchors.last().is_none_or(|p: &AnchorSpan| p.end <= aligned.start) {
                        anchors.push(aligned);
                    }
                }
            }
            if tokens.is_empty() {
                continue;
            }
            sentences.push(RawSentence {
                article_id: article.article_id,
                sentence_index: sentences.len() as u32,
                text: sentence_text.to_string(),
                tokens,
                anchors,
            });
        }
        sentences
    }
}

/// Tokenizes with the default abbreviation list.
pub fn tokenize(text: &str) -> Vec<Token> {
    Segmenter::default().tokenize(text)
}

/// Splits with the default abbreviation list.
pub fn split_sentences(article: &Article) -> Vec<RawSentence> {
    Segmenter::default().split_sentences(article)
}

fn align(tokens: &[Token], text: &str, start: usize, end: usize, target: &str) -> Option<AnchorSpan> {
    let first = tokens.partition_point(|t| t.end <= start);
    let last = tokens.partition_point(|t| t.start < end);
    if first >= last {
        return None;
    }
    let (s, e) = (tokens[first].start, tokens[last - 1].end);
    Some(AnchorSpan { start: s, end: e, surface: text[s..e].to_string(), target: target.to_string() })
}

fn push_trimmed(text: &str, start: usize, end: usize, out: &mut Vec<(usize, usize)>) {
    let slice = &text[start..end];
    let lead = slice.len() - slice.trim_start().len();
    let trimmed = slice.trim();
    if !trimmed.is_empty() {
        out.push((start + lead, start + lead + trimmed.len()));
    }
}

/// The whitespace-delimited word ending at `end`, minus leading punctuation.
fn word_before(text: &str, end: usize) -> &str {
    let head = &text[..end];
    let start = head.rfind(char::is_whitespace).map_or(0, |p| p + head[p..].chars().next().unwrap().len_utf8());
    head[start..].trim_start_matches(|c: char| is_punct(c) && c != '.')
}

fn words(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.split(char::is_whitespace)
        .scan(0usize, move |pos, w| {
            let start = *pos;
            *pos += w.len() + text[start + w.len()..].chars().next().map_or(0, char::len_utf8);
            Some((start, w))
        })
        .filter(|(_, w)| !w.is_empty())
}

fn token(text: &str, start: usize, end: usize) -> Token {
    Token { text: text[start..end].to_string(), start, end }
}

fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '“' | '”' | '‘' | '’' | '«' | '»' | '„' | '…' | '–' | '—' | '·' | '¡' | '¿' | '‹' | '›' | '†' | '‡'
                | '§' | '¶' | '″' | '′' | '。' | '、' | '（' | '）'
        )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wikitext::extract_anchors;
    use proptest::prelude::*;

    fn texts(tokens: &[Token]) -> Vec<&str> {
        tokens.iter().map(|t| t.text.as_str()).collect()
    }

    fn article(wikitext: &str) -> Article {
        let s = extract_anchors(wikitext);
        Article { title: "T".into(), article_id: 7, plain_text: s.plain_text, anchors: s.anchors }
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(texts(&tokenize("Hello, world!")), ["Hello", ",", "world", "!"]);
        assert_eq!(texts(&tokenize("U.S. economy")), ["U.S.", "economy"]);
        assert_eq!(texts(&tokenize("(1987–88 season)")), ["(", "1987–88", "season", ")"]);
        assert_eq!(texts(&tokenize("Dr. Who's \"end\".")), ["Dr.", "Who's", "\"", "end", "\"", "."]);
        assert_eq!(texts(&tokenize("...")), [".", ".", "."]);
        assert!(tokenize("  \n ").is_empty());
    }

    #[test]
    fn token_offsets_round_trip() {
        let text = "Café «Zoë», née (X).";
        for t in tokenize(text) {
            assert_eq!(&text[t.start..t.end], t.text);
        }
    }

    #[test]
    fn two_plain_sentences() {
        let s = split_sentences(&article("A b. C d."));
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].text, "A b.");
        assert_eq!(s[1].text, "C d.");
        assert_eq!((s[0].sentence_index, s[1].sentence_index), (0, 1));
    }

    #[test]
    fn abbreviation_inside_anchor_does_not_split() {
        let s = split_sentences(&article("He visited [[St. Petersburg]] today."));
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].anchors.len(), 1);
        assert_eq!(s[0].anchors[0].surface, "St. Petersburg");
    }

    #[test]
    fn abbreviation_suppresses_boundary() {
        let text = "Dr. Smith went home. He slept well. The night was long. Then it ended.";
        assert_eq!(text.matches('.').count(), 5);
        let s = split_sentences(&article(text));
        let got: Vec<_> = s.iter().map(|s| s.text.as_str()).collect();
        assert_eq!(got, ["Dr. Smith went home.", "He slept well.", "The night was long.", "Then it ended."]);
    }

    #[test]
    fn lowercase_continuation_and_paragraphs() {
        let s = split_sentences(&article("It cost 5 p. per day. Really?\n\nnext para no period\n\nLast one"));
        let got: Vec<_> = s.iter().map(|s| s.text.as_str()).collect();
        assert_eq!(got, ["It cost 5 p. per day.", "Really?", "next para no period", "Last one"]);
    }

    #[test]
    fn anchors_relocated_and_expanded() {
        let s = split_sentences(&article("First one. The [[bus]]es and [[Paris]], [[A]][[B]]x go."));
        assert_eq!(s.len(), 2);
        let a = &s[1].anchors;
        assert_eq!(a.len(), 3);
        assert_eq!((a[0].surface.as_str(), a[0].target.as_str()), ("buses", "bus"));
        assert_eq!(a[1].surface, "Paris");
        assert_eq!((a[2].surface.as_str(), a[2].target.as_str()), ("ABx", "A"));
        assert_eq!(s[1].anchor_token_ranges(), vec![(1, 2), (3, 4), (5, 6)]);
        for anchor in a {
            assert_eq!(&s[1].text[anchor.start..anchor.end], anchor.surface);
        }
    }

    #[test]
    fn empty_article() {
        assert!(split_sentences(&article("")).is_empty());
    }

    proptest! {
        #[test]
        fn tokenize_idempotent(text in "[a-zA-Z0-9 .,;()\"'!?–-]{0,40}") {
            let once: Vec<String> = tokenize(&text).into_iter().map(|t| t.text).collect();
            let joined = once.join(" ");
            let twice: Vec<String> = tokenize(&joined).into_iter().map(|t| t.text).collect();
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn sentences_never_cut_anchors(
            words in proptest::collection::vec(("[A-Za-z]{1,6}", proptest::bool::ANY, "[.?! ]{0,2}"), 1..30)
        ) {
            let mut wikitext = String::new();
            let mut n_anchors = 0;
            for (w, linked, punct) in &words {
                if *linked {
                    wikitext.push_str(&format!("[[{w}{punct} X]] "));
                    n_anchors += 1;
                } else {
                    wikitext.push_str(&format!("{w}{punct} "));
                }
            }
            let art = article(&wikitext);
            prop_assert_eq!(art.anchors.len(), n_anchors);
            let sentences = split_sentences(&art);
            let total: usize = sentences.iter().map(|s| s.anchors.len()).sum();
            prop_assert_eq!(total, n_anchors);
            for s in &sentences {
                for a in &s.anchors {
                    prop_assert_eq!(&s.text[a.start..a.end], a.surface.as_str());
                    prop_assert!(s.tokens.iter().any(|t| t.start == a.start));
                    prop_assert!(s.tokens.iter().any(|t| t.end == a.end));
                }
            }
        }
    }
}
