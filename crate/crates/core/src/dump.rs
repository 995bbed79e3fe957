//! Streaming reader for MediaWiki XML exports (`pages-articles`).
//!
//! [`ArticleStream`] pulls one `<page>` at a time from any [`BufRead`], so
//! memory is bounded by the largest page rather than the dump.

use std::io::BufRead;

use quick_xml::events::Event;
use quick_xml::Reader;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::wikitext::{extract_anchors_with, AnchorSpan, StripOptions};

#[derive(Debug, Error)]
pub enum DumpError {
    #[error("malformed XML at byte {offset}: {message}")]
    Xml { offset: u64, message: String },
}

/// One content page after markup stripping.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Article {
    pub title: String,
    pub article_id: u64,
    pub plain_text: String,
    pub anchors: Vec<AnchorSpan>,
}

/// Counters for pages that did not become articles.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DumpTally {
    pub pages: u64,
    pub articles: u64,
    pub redirects: u64,
    pub other_namespace: u64,
    /// Pages with no visible text left after stripping.
    pub empty_after_strip: u64,
    pub malformed_markup: u64,
}

#[derive(Debug, Default)]
struct PageState {
    title: String,
    id: Option<u64>,
    ns: Option<i64>,
    redirect: bool,
    text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    None,
    Title,
    Ns,
    Id,
    Text,
}

/// Lazy iterator of [`Article`]s.
pub struct ArticleStream<R: BufRead> {
    reader: Reader<R>,
    buf: Vec<u8>,
    options: StripOptions,
    tally: DumpTally,
    done: bool,
}

/// Streams the namespace-0, non-redirect pages of a dump.
pub fn stream_articles<R: BufRead>(source: R) -> ArticleStream<R> {
    ArticleStream::new(source, StripOptions::default())
}

impl<R: BufRead> ArticleStream<R> {
    pub fn new(source: R, options: StripOptions) -> Self {
        let mut reader = Reader::from_reader(source);
        reader.config_mut().trim_text(false);
        Self { reader, buf: Vec::with_capacity(64 * 1024), options, tally: DumpTally::default(), done: false }
    }

    pub fn tally(&self) -> DumpTally {
        self.tally
    }

    fn xml_error(&self, message: impl ToString) -> DumpError {
        DumpError::Xml { offset: self.reader.buffer_position(), message: message.to_string() }
    }

    /// Reads events up to and including the next `</page>`.
    fn next_page(&mut self) -> Result<Option<PageState>, DumpError> {
        let mut page: Option<PageState> = None;
        let mut field = Field::None;
        let mut depth_in_page = 0usize;
        let mut in_revision = false;
        loop {
            self.buf.clear();
            let event = match self.reader.read_event_into(&mut self.buf) {
                Ok(e) => e,
                Err(e) => return Err(self.xml_error(e)),
            };
            match event {
                Event::Start(e) => {
                    let name = e.local_name();
                    let name = name.as_ref();
                    if name == b"page" {
                        page = Some(PageState::default());
                        depth_in_page = 0;
                        in_revision = false;
                        continue;
                    }
                    let Some(_) = page.as_mut() else { continue };
                    depth_in_page += 1;
                    field = match name {
                        b"title" if depth_in_page == 1 => Field::Title,
                        b"ns" if depth_in_page == 1 => Field::Ns,
                        b"id" if depth_in_page == 1 => Field::Id,
                        b"text" if in_revision => Field::Text,
                        b"revision" => {
                            in_revision = true;
                            Field::None
                        }
                        _ => Field::None,
                    };
                }
                Event::Empty(e) => {
                    if let Some(p) = page.as_mut() {
                        if e.local_name().as_ref() == b"redirect" {
                            p.redirect = true;
                        }
                    }
                }
                Event::Text(t) => {
                    let Some(p) = page.as_mut() else { continue };
                    if field == Field::None {
                        continue;
                    }
                    let text = t
                        .unescape()
                        .map_err(|e| DumpError::Xml { offset: self.reader.buffer_position(), message: e.to_string() })?;
                    match field {
                        Field::Title => p.title.push_str(&text),
                        Field::Text => p.text.push_str(&text),
                        Field::Ns => p.ns = text.trim().parse().ok(),
                        Field::Id => p.id = text.trim().parse().ok(),
                        Field::None => {}
                    }
                }
                Event::CData(t) => {
                    if let (Some(p), Field::Text) = (page.as_mut(), field) {
                        p.text.push_str(&String::from_utf8_lossy(&t));
                    }
                }
                Event::End(e) => {
                    let name = e.local_name();
                    if name.as_ref() == b"page" {
                        return Ok(page);
                    }
                    if let Some(p) = page.as_mut() {
                        if name.as_ref() == b"redirect" {
                            p.redirect = true;
                        }
                        if name.as_ref() == b"revision" {
                            in_revision = false;
                        }
                        depth_in_page = depth_in_page.saturating_sub(1);
                        field = Field::None;
                    }
                }
                Event::Eof => {
                    if page.is_some() {
                        return Err(self.xml_error("unexpected end of input inside <page>"));
                    }
                    return Ok(None);
                }
                _ => {}
            }
        }
    }

    fn finish_page(&mut self, page: PageState) -> Option<Article> {
        self.tally.pages += 1;
        let ns = page.ns.unwrap_or_else(|| if page.title.contains(':') { -1 } else { 0 });
        if ns != 0 {
            self.tally.other_namespace += 1;
            return None;
        }
        if page.redirect || is_redirect_text(&page.text) {
            self.tally.redirects += 1;
            return None;
        }
        let stripped = extract_anchors_with(&page.text, &self.options);
        self.tally.malformed_markup += stripped.malformed;
        if stripped.plain_text.is_empty() {
            self.tally.empty_after_strip += 1;
            return None;
        }
        self.tally.articles += 1;
        Some(Article {
            title: page.title.trim().to_string(),
            article_id: page.id.unwrap_or(0),
            plain_text: stripped.plain_text,
            anchors: stripped.anchors,
        })
    }
}

fn is_redirect_text(text: &str) -> bool {
    let head = text.trim_start();
    head.len() >= 9 && head[..9].eq_ignore_ascii_case("#redirect")
}

impl<R: BufRead> Iterator for ArticleStream<R> {
    type Item = Result<Article, DumpError>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            match self.next_page() {
                Ok(Some(page)) => {
                    if let Some(article) = self.finish_page(page) {
                        return Some(Ok(article));
                    }
                }
                Ok(None) => self.done = true,
                Err(e) => {
                    self.done = true;
                    return Some(Err(e));
                }
            }
        }
        None
    }
}
