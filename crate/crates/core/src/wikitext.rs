//! Wikitext markup stripping and anchor extraction.
//!
//! The scanner makes a single pass over the page markup and writes visible
//! text into an output buffer, recording every internal link as an
//! [`AnchorSpan`] over that buffer. Offsets are byte offsets into the
//! returned plain text.
//!
//! Paragraph structure survives as `"\n\n"` between blocks; all other
//! whitespace runs collapse to a single space.

use serde::{Deserialize, Serialize};

use crate::ontology::normalize_title;

/// A hyperlinked span of plain text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnchorSpan {
    pub start: usize,
    pub end: usize,
    pub surface: String,
    pub target: String,
}

/// Result of [`extract_anchors`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stripped {
    pub plain_text: String,
    pub anchors: Vec<AnchorSpan>,
    /// Unbalanced brackets or unterminated constructs that were cut off.
    pub malformed: u64,
}

#[derive(Debug, Clone)]
pub struct StripOptions {
    /// Lowercased section titles whose content is dropped.
    pub skip_sections: Vec<String>,
}

impl Default for StripOptions {
    fn default() -> Self {
        Self {
            skip_sections: vec!["references".into(), "external links".into(), "see also".into()],
        }
    }
}

/// Strips `wikitext` with the default options.
pub fn extract_anchors(wikitext: &str) -> Stripped {
    extract_anchors_with(wikitext, &StripOptions::default())
}

pub fn extract_anchors_with(wikitext: &str, options: &StripOptions) -> Stripped {
    let mut scanner = Scanner {
        src: wikitext,
        bytes: wikitext.as_bytes(),
        options,
        inline: false,
        out: Emitter::default(),
        malformed: 0,
        skip_level: None,
    };
    scanner.run();
    Stripped {
        plain_text: scanner.out.text,
        anchors: scanner.out.anchors,
        malformed: scanner.malformed,
    }
}

/// Tags whose content is never visible text.
const DROP_CONTENT_TAGS: &[&str] = &[
    "ref", "references", "math", "gallery", "timeline", "syntaxhighlight", "source", "score",
    "imagemap", "templatedata", "chem", "ce", "hiero", "graph", "mapframe", "maplink", "poem",
];

const NAMESPACES: &[&str] = &[
    "file", "image", "media", "category", "template", "wikipedia", "wp", "help", "portal",
    "special", "user", "user talk", "talk", "module", "draft", "mediawiki", "book", "timedtext",
    "wiktionary", "wikt", "commons", "wikisource", "s", "w", "q", "n", "v", "d", "meta", "m",
];

const URL_PREFIXES: &[&str] = &["http://", "https://", "ftp://", "//", "mailto:", "irc://", "news:"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
enum Gap {
    #[default]
    None,
    Space,
    Break,
}

#[derive(Debug, Default)]
struct Emitter {
    text: String,
    anchors: Vec<AnchorSpan>,
    gap: Gap,
}

impl Emitter {
    fn space(&mut self) {
        if self.gap == Gap::None {
            self.gap = Gap::Space;
        }
    }

    fn paragraph(&mut self) {
        self.gap = Gap::Break;
    }

    fn flush_gap(&mut self) {
        if !self.text.is_empty() {
            match self.gap {
                Gap::None => {}
                Gap::Space => self.text.push(' '),
                Gap::Break => self.text.push_str("\n\n"),
            }
        }
        self.gap = Gap::None;
    }

    fn push_char(&mut self, c: char) {
        if c.is_whitespace() {
            self.space();
        } else {
            self.flush_gap();
            self.text.push(c);
        }
    }

    fn push_str(&mut self, s: &str) {
        for c in s.chars() {
            self.push_char(c);
        }
    }

    /// `surface` must already be whitespace-normalized and trimmed.
    fn push_anchor(&mut self, surface: &str, target: &str) {
        if surface.is_empty() {
            return;
        }
        self.flush_gap();
        let start = self.text.len();
        self.text.push_str(surface);
        self.anchors.push(AnchorSpan {
            start,
            end: self.text.len(),
            surface: surface.to_string(),
            target: target.to_string(),
        });
    }
}

struct Scanner<'a> {
    src: &'a str,
    bytes: &'a [u8],
    options: &'a StripOptions,
    /// Inline mode renders link surfaces: no line structure, no anchors.
    inline: bool,
    out: Emitter,
    malformed: u64,
    skip_level: Option<usize>,
}

impl<'a> Scanner<'a> {
    fn run(&mut self) {
        let mut i = 0;
        let mut line_start = true;
        while i < self.bytes.len() {
            if line_start && !self.inline {
                line_start = false;
                if let Some(next) = self.line_start(i) {
                    i = next;
                    line_start = next > 0 && self.bytes[next - 1] == b'\n';
                    continue;
                }
            }
            let b = self.bytes[i];
            i = match b {
                b'\n' => {
                    line_start = true;
                    self.newline(i)
                }
                b'<' => self.tag(i),
                b'{' if self.at(i, "{{") => self.template(i),
                b'}' if self.at(i, "}}") => {
                    self.malformed += 1;
                    i + 2
                }
                b'[' if self.at(i, "[[") => self.link(i),
                b']' if self.at(i, "]]") => {
                    self.malformed += 1;
                    i + 2
                }
                b'[' => self.external_link(i),
                b'\'' if self.at(i, "''") => i + self.run_len(i, b'\''),
                b'_' if self.at(i, "__") => self.magic_word(i),
                b'&' => self.entity(i),
                _ => {
                    let c = self.src[i..].chars().next().expect("char boundary");
                    self.out.push_char(c);
                    i + c.len_utf8()
                }
            };
        }
    }

    fn at(&self, i: usize, pat: &str) -> bool {
        self.bytes[i..].starts_with(pat.as_bytes())
    }

    fn at_ci(&self, i: usize, pat: &str) -> bool {
        self.bytes.len() >= i + pat.len() && self.bytes[i..i + pat.len()].eq_ignore_ascii_case(pat.as_bytes())
    }

    fn run_len(&self, i: usize, b: u8) -> usize {
        self.bytes[i..].iter().take_while(|&&x| x == b).count()
    }

    fn line_end(&self, i: usize) -> usize {
        memchr(b'\n', &self.bytes[i..]).map_or(self.bytes.len(), |p| i + p)
    }

    fn find(&self, from: usize, pat: &str) -> Option<usize> {
        self.src[from..].find(pat).map(|p| from + p)
    }

    fn newline(&mut self, i: usize) -> usize {
        let rest = &self.bytes[i + 1..];
        let blank = rest.iter().take_while(|&&b| b != b'\n').all(|b| b.is_ascii_whitespace());
        if blank && !rest.is_empty() {
            self.out.paragraph();
        } else {
            self.out.space();
        }
        i + 1
    }

    /// Handles line-initial constructs. Returns the next position if the
    /// line start was consumed by one of them.
    fn line_start(&mut self, i: usize) -> Option<usize> {
        let end = self.line_end(i);
        let line = self.src[i..end].trim();
        let heading = heading_level(line);
        if let Some(level) = heading {
            let title = line[level..line.len() - level].trim();
            let title = render_inline(title, self.options).to_lowercase();
            if self.skip_level.is_some_and(|l| level <= l) {
                self.skip_level = None;
            }
            if self.skip_level.is_none() && self.options.skip_sections.contains(&title) {
                self.skip_level = Some(level);
            }
            self.out.paragraph();
            return Some(end);
        }
        if self.skip_level.is_some() {
            return Some((end + 1).min(self.bytes.len()));
        }
        if line.starts_with("{|") {
            return Some(self.table(i));
        }
        if line.starts_with("----") {
            self.out.paragraph();
            return Some(end);
        }
        let markers = self.bytes[i..end]
            .iter()
            .take_while(|b| matches!(b, b'*' | b'#' | b':' | b';'))
            .count();
        if markers > 0 {
            self.out.paragraph();
            return Some(i + markers);
        }
        None
    }

    fn table(&mut self, i: usize) -> usize {
        let mut depth = 0usize;
        let mut pos = i;
        while pos < self.bytes.len() {
            let end = self.line_end(pos);
            let line = self.src[pos..end].trim_start();
            if line.starts_with("{|") {
                depth += 1;
            } else if line.starts_with("|}") {
                depth -= 1;
                if depth == 0 {
                    self.out.paragraph();
                    return end;
                }
            }
            pos = end + 1;
        }
        self.malformed += 1;
        self.bytes.len()
    }

    fn tag(&mut self, i: usize) -> usize {
        if self.at(i, "<!--") {
            return match self.find(i + 4, "-->") {
                Some(p) => p + 3,
                None => {
                    self.malformed += 1;
                    self.bytes.len()
                }
            };
        }
        let closing = self.bytes.get(i + 1) == Some(&b'/');
        let name_start = i + 1 + closing as usize;
        let name_len = self.bytes[name_start..]
            .iter()
            .take_while(|b| b.is_ascii_alphanumeric())
            .count();
        let Some(gt) = (name_len > 0 && self.bytes[name_start].is_ascii_alphabetic())
            .then(|| memchr(b'>', &self.bytes[name_start..]))
            .flatten()
        else {
            self.out.push_char('<');
            return i + 1;
        };
        let gt = name_start + gt;
        let name = self.src[name_start..name_start + name_len].to_ascii_lowercase();
        let self_closing = self.bytes[gt - 1] == b'/';
        if name == "br" {
            self.out.space();
            return gt + 1;
        }
        if !closing && !self_closing && DROP_CONTENT_TAGS.contains(&name.as_str()) {
            let close = format!("</{name}");
            let mut pos = gt + 1;
            while pos < self.bytes.len() {
                match memchr(b'<', &self.bytes[pos..]) {
                    Some(p) if self.at_ci(pos + p, &close) => {
                        let tail = pos + p + close.len();
                        return memchr(b'>', &self.bytes[tail..]).map_or(self.bytes.len(), |q| tail + q + 1);
                    }
                    Some(p) => pos += p + 1,
                    None => break,
                }
            }
            self.malformed += 1;
            return self.line_end(gt + 1);
        }
        gt + 1
    }

    fn template(&mut self, i: usize) -> usize {
        match matching_close(self.bytes, i, b'{', b'}', false) {
            Some(end) => end,
            None => {
                self.malformed += 1;
                self.line_end(i)
            }
        }
    }

    fn link(&mut self, i: usize) -> usize {
        let Some(end) = matching_close(self.bytes, i, b'[', b']', true) else {
            self.malformed += 1;
            return self.line_end(i);
        };
        let inner = &self.src[i + 2..end - 2];
        // Link trail: `[[bus]]es` displays as "buses".
        let trail_len: usize = self.src[end..]
            .chars()
            .take_while(|c| c.is_alphabetic())
            .map(char::len_utf8)
            .sum();
        let trail = &self.src[end..end + trail_len];

        let (target_raw, surface_raw) = split_link(inner);
        let target_raw = target_raw.trim();
        if is_namespaced(target_raw) {
            return end;
        }
        let target = target_raw.split('#').next().unwrap_or("").trim();
        let mut surface = match surface_raw {
            Some(s) if !s.trim().is_empty() => render_inline(s, self.options),
            Some(_) => render_inline(strip_parenthetical(target), self.options),
            None => render_inline(target_raw, self.options),
        };
        if !trail.is_empty() && !surface.is_empty() {
            surface.push_str(trail);
        }
        if self.inline || target.is_empty() || normalize_title(target).is_err() {
            self.out.push_str(&surface);
        } else {
            self.out.push_anchor(&surface, target);
        }
        end + if surface.is_empty() { 0 } else { trail_len }
    }

    fn external_link(&mut self, i: usize) -> usize {
        let rest = &self.src[i + 1..];
        if !URL_PREFIXES.iter().any(|p| rest.len() >= p.len() && rest[..p.len()].eq_ignore_ascii_case(p)) {
            self.out.push_char('[');
            return i + 1;
        }
        let end = self.line_end(i);
        let Some(close) = memchr(b']', &self.bytes[i..end]) else {
            self.out.push_char('[');
            return i + 1;
        };
        let inner = &self.src[i + 1..i + close];
        if let Some((_, label)) = inner.split_once(char::is_whitespace) {
            let label = render_inline(label, self.options);
            self.out.push_str(&label);
        }
        i + close + 1
    }

    fn magic_word(&mut self, i: usize) -> usize {
        let word = self.bytes[i + 2..].iter().take_while(|b| b.is_ascii_uppercase()).count();
        if word > 0 && self.at(i + 2 + word, "__") {
            i + 4 + word
        } else {
            self.out.push_char('_');
            i + 1
        }
    }

    fn entity(&mut self, i: usize) -> usize {
        let window = &self.src[i + 1..(i + 12).min(self.src.len())];
        if let Some(semi) = window.find(';') {
            if let Some(c) = decode_entity(&window[..semi]) {
                self.out.push_char(c);
                return i + semi + 2;
            }
        }
        self.out.push_char('&');
        i + 1
    }
}

fn render_inline(markup: &str, options: &StripOptions) -> String {
    let mut scanner = Scanner {
        src: markup,
        bytes: markup.as_bytes(),
        options,
        inline: true,
        out: Emitter::default(),
        malformed: 0,
        skip_level: None,
    };
    scanner.run();
    scanner.out.text.replace("\n\n", " ")
}

fn heading_level(line: &str) -> Option<usize> {
    let lead = line.bytes().take_while(|&b| b == b'=').count();
    let trail = line.bytes().rev().take_while(|&b| b == b'=').count();
    let level = lead.min(trail).min(6);
    (level > 0 && line.len() > 2 * level).then_some(level)
}

/// Position just past the bracket pair matching the one opening at `i`.
/// With `stop_at_blank_line`, a paragraph break ends the search.
fn matching_close(bytes: &[u8], i: usize, open: u8, close: u8, stop_at_blank_line: bool) -> Option<usize> {
    let mut depth = 0usize;
    let mut pos = i;
    while pos + 1 < bytes.len() {
        let (a, b) = (bytes[pos], bytes[pos + 1]);
        if a == open && b == open {
            depth += 1;
            pos += 2;
        } else if a == close && b == close {
            depth -= 1;
            pos += 2;
            if depth == 0 {
                return Some(pos);
            }
        } else if stop_at_blank_line && a == b'\n' && b == b'\n' {
            return None;
        } else {
            pos += 1;
        }
    }
    None
}

/// Splits link content at the first `|` outside nested brackets.
fn split_link(inner: &str) -> (&str, Option<&str>) {
    let bytes = inner.as_bytes();
    let mut depth = 0i32;
    for (i, &b) in bytes.iter().enumerate() {
        match b {
            b'[' | b'{' => depth += 1,
            b']' | b'}' => depth -= 1,
            b'|' if depth <= 0 => return (&inner[..i], Some(&inner[i + 1..])),
            _ => {}
        }
    }
    (inner, None)
}

fn is_namespaced(target: &str) -> bool {
    let target = target.strip_prefix(':').unwrap_or(target);
    let Some((prefix, _)) = target.split_once(':') else {
        return false;
    };
    let prefix = prefix.trim();
    let lower = prefix.to_lowercase();
    if NAMESPACES.contains(&lower.as_str()) {
        return true;
    }
    // Interlanguage links: `fr:`, `zh-yue:`.
    let mut parts = prefix.split('-');
    let head = parts.next().unwrap_or("");
    (2..=3).contains(&head.len())
        && head.bytes().all(|b| b.is_ascii_lowercase())
        && parts.all(|p| !p.is_empty() && p.bytes().all(|b| b.is_ascii_lowercase()))
}

fn strip_parenthetical(target: &str) -> &str {
    match target.rfind(" (") {
        Some(p) if target.ends_with(')') => &target[..p],
        _ => target,
    }
}

fn decode_entity(name: &str) -> Option<char> {
    if let Some(num) = name.strip_prefix('#') {
        let code = match num.strip_prefix(['x', 'X']) {
            Some(hex) => u32::from_str_radix(hex, 16).ok()?,
            None => num.parse().ok()?,
        };
        return char::from_u32(code);
    }
    Some(match name {
        "nbsp" | "ensp" | "emsp" | "thinsp" => ' ',
        "amp" => '&',
        "lt" => '<',
        "gt" => '>',
        "quot" => '"',
        "apos" => '\'',
        "ndash" => '–',
        "mdash" => '—',
        "minus" => '−',
        "hellip" => '…',
        "times" => '×',
        "deg" => '°',
        "middot" => '·',
        "lsquo" => '‘',
        "rsquo" => '’',
        "ldquo" => '“',
        "rdquo" => '”',
        _ => return None,
    })
}

fn memchr(needle: u8, haystack: &[u8]) -> Option<usize> {
    haystack.iter().position(|&b| b == needle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn anchor(start: usize, end: usize, surface: &str, target: &str) -> AnchorSpan {
        AnchorSpan { start, end, surface: surface.into(), target: target.into() }
    }

    #[test]
    fn simple_link() {
        let s = extract_anchors("[[Paris]] is nice");
        assert_eq!(s.plain_text, "Paris is nice");
        assert_eq!(s.anchors, vec![anchor(0, 5, "Paris", "Paris")]);
    }

    #[test]
    fn piped_link() {
        let s = extract_anchors("see [[Paris|the city]]");
        assert_eq!(s.plain_text, "see the city");
        assert_eq!(s.anchors, vec![anchor(4, 12, "the city", "Paris")]);
    }

    #[test]
    fn template_then_links() {
        let s = extract_anchors("{{Infobox X}}[[A]] b [[C|c]]");
        assert_eq!(s.plain_text, "A b c");
        let targets: Vec<_> = s.anchors.iter().map(|a| a.target.as_str()).collect();
        assert_eq!(targets, ["A", "C"]);
        assert_eq!(s.malformed, 0);
    }

    #[test]
    fn strips_refs_files_categories_and_quotes() {
        let text = "'''Paris''' is the capital<ref name=\"a\">{{cite web|url=x}}</ref> of [[France]].<ref name=b/>\n\
                    [[File:Eiffel.jpg|thumb|The [[Eiffel Tower]]]]\n[[Category:Cities]] [[fr:Paris]]";
        let s = extract_anchors(text);
        assert_eq!(s.plain_text, "Paris is the capital of France.");
        assert_eq!(s.anchors, vec![anchor(24, 30, "France", "France")]);
    }

    #[test]
    fn skips_tables_comments_and_sections() {
        let text = "Intro [[A]].\n<!-- hidden [[B]] -->\n{|\n| [[C]]\n|}\n\n== History ==\nOld [[D]].\n\
                    == See also ==\n* [[E]]\n=== Sub ===\n* [[F]]\n== Notes ==\nTail.";
        let s = extract_anchors(text);
        assert_eq!(s.plain_text, "Intro A.\n\nOld D.\n\nTail.");
        let targets: Vec<_> = s.anchors.iter().map(|a| a.target.as_str()).collect();
        assert_eq!(targets, ["A", "D"]);
    }

    #[test]
    fn blank_lines_inside_skipped_section() {
        let s = extract_anchors("Body.\n== See also ==\n* [[E]]\n\n\n[[Category:X]]\n");
        assert_eq!(s.plain_text, "Body.");
        assert!(s.anchors.is_empty());
    }

    #[test]
    fn nested_link_flattened_and_trail() {
        let s = extract_anchors("[[Foo|a [[Bar]] b]] and [[bus]]es");
        assert_eq!(s.plain_text, "a Bar b and buses");
        assert_eq!(s.anchors, vec![anchor(0, 7, "a Bar b", "Foo"), anchor(12, 17, "buses", "bus")]);
    }

    #[test]
    fn adjacent_anchors_stay_distinct() {
        let s = extract_anchors("[[A]][[B]]");
        assert_eq!(s.plain_text, "AB");
        assert_eq!(s.anchors.len(), 2);
    }

    #[test]
    fn fragment_and_section_links() {
        let s = extract_anchors("[[Paris#History|old Paris]] and [[#Top|up]]");
        assert_eq!(s.plain_text, "old Paris and up");
        assert_eq!(s.anchors, vec![anchor(0, 9, "old Paris", "Paris")]);
    }

    #[test]
    fn unbalanced_brackets_strip_to_line_end() {
        let s = extract_anchors("Start [[Broken link here\nNext {{tmpl line\nEnd.");
        assert_eq!(s.plain_text, "Start Next End.");
        assert_eq!(s.malformed, 2);
    }

    #[test]
    fn external_links_and_entities() {
        let s = extract_anchors("See [https://x.org the site] and [http://y.org] A&nbsp;&amp;&#x41; B");
        assert_eq!(s.plain_text, "See the site and A &A B");
    }

    #[test]
    fn pipe_trick() {
        let s = extract_anchors("[[Mercury (planet)|]]");
        assert_eq!(s.plain_text, "Mercury");
        assert_eq!(s.anchors[0].target, "Mercury (planet)");
    }

    proptest! {
        #[test]
        fn anchors_are_consistent(src in "([a-c \\n.|'=*]|\\[\\[|\\]\\]|\\{\\{|\\}\\}|<ref>|</ref>|\\[\\[File:|<!--|-->){0,40}") {
            let s = extract_anchors(&src);
            let mut prev_end = 0;
            for a in &s.anchors {
                prop_assert!(a.start < a.end && a.end <= s.plain_text.len());
                prop_assert!(a.start >= prev_end);
                prop_assert_eq!(&s.plain_text[a.start..a.end], a.surface.as_str());
                prop_assert!(normalize_title(&a.target).is_ok());
                prev_end = a.end;
            }
        }
    }
}
