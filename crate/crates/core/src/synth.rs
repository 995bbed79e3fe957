//! Deterministic synthetic dump and ontology, for tests and benchmarks.
//!
//! Pages mix prose with typed links, untyped links, templates, references,
//! bold markup, headings and "See also" lists. Every 20th page is a
//! redirect and every 30th lives outside the article namespace. Category
//! frequencies follow a Zipf-like curve so that some are scarce.

use std::fmt::Write as _;

use quick_xml::escape::escape;
use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::rng::{keyed_rng, Purpose};
use crate::vocab::{CategoryVocabulary, ENTITY};

const WORDS: &[&str] = &[
    "the", "of", "and", "river", "city", "founded", "team", "season", "played", "near", "north", "south", "old",
    "new", "large", "small", "known", "for", "its", "early", "later", "became", "part", "with", "many", "first",
    "second", "league", "album", "released", "bridge", "station", "church", "school", "war", "treaty", "island",
    "valley", "company", "record", "local", "people", "were", "was", "under", "after", "before", "during",
];
const SYLLABLES: &[&str] = &["ka", "lo", "mer", "vi", "dan", "to", "ra", "sel", "bo", "quin", "ar", "es", "hul", "mi", "zen"];

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    /// MediaWiki XML export.
    pub dump: String,
    /// `entity<TAB>category` lines.
    pub ontology: String,
    pub pages: usize,
}

fn name(rng: &mut ChaCha8Rng, parts: usize) -> String {
    let mut words = Vec::with_capacity(parts);
    for _ in 0..parts {
        let mut w = String::new();
        for _ in 0..rng.random_range(2..4) {
            w.push_str(SYLLABLES.choose(rng).unwrap());
        }
        let mut c = w.chars();
        let first = c.next().unwrap().to_ascii_uppercase();
        words.push(std::iter::once(first).chain(c).collect::<String>());
    }
    words.join(" ")
}

/// Builds a dump of roughly `target_bytes` bytes.
pub fn synth_corpus(seed: u64, target_bytes: usize) -> SynthCorpus {
    let mut rng = keyed_rng(seed, Purpose::Synthetic, 0);
    let vocab = CategoryVocabulary::bundled();
    let categories: Vec<&str> = vocab.names().filter(|c| *c != ENTITY).collect();
    let weights: Vec<f64> = (0..categories.len()).map(|r| 1.0 / (r as f64 + 1.0).powf(1.1)).collect();
    let total: f64 = weights.iter().sum();

    let entity_count = (target_bytes / 2000).clamp(50, 20_000);
    let mut ontology = String::new();
    let mut entities = Vec::with_capacity(entity_count);
    for i in 0..entity_count {
        let parts = rng.random_range(1..3);
        let title = format!("{} {i}", name(&mut rng, parts));
        if rng.random_bool(0.85) {
            let mut u = rng.random::<f64>() * total;
            let mut k = 0;
            while k + 1 < weights.len() && u >= weights[k] {
                u -= weights[k];
                k += 1;
            }
            let _ = writeln!(ontology, "{}\t{}", title.replace(' ', "_"), categories[k]);
        }
        entities.push(title);
    }
    // Popular entities are linked far more often than the rest.
    let pick = |rng: &mut ChaCha8Rng| -> &String {
        let r: f64 = rng.random();
        &entities[((r * r * r) * entities.len() as f64) as usize % entities.len()]
    };

    let mut dump = String::from(
        "<mediawiki xmlns=\"http://www.mediawiki.org/xml/export-0.10/\" xml:lang=\"en\">\n  <siteinfo><sitename>Synth</sitename></siteinfo>\n",
    );
    let mut pages = 0usize;
    while dump.len() < target_bytes {
        pages += 1;
        let id = pages as u64;
        let title = name(&mut rng, 2);
        let (ns, body) = if pages.is_multiple_of(30) {
            (14, format!("[[Category:{}]]", name(&mut rng, 1)))
        } else if pages.is_multiple_of(20) {
            (0, String::new())
        } else {
            (0, article_body(&mut rng, &pick))
        };
        let _ = write!(dump, "  <page>\n    <title>{}</title>\n    <ns>{ns}</ns>\n    <id>{id}</id>\n", escape(&title));
        if pages.is_multiple_of(20) && ns == 0 {
            let target = pick(&mut rng);
            let _ = write!(
                dump,
                "    <redirect title=\"{}\" />\n    <revision><id>{}</id><text xml:space=\"preserve\">#REDIRECT [[{}]]</text></revision>\n",
                escape(target.as_str()),
                id + 1_000_000,
                escape(target.as_str())
            );
        } else {
            let _ = write!(
                dump,
                "    <revision>\n      <id>{}</id>\n      <text xml:space=\"preserve\">{}</text>\n    </revision>\n",
                id + 1_000_000,
                escape(&body)
            );
        }
        dump.push_str("  </page>\n");
    }
    dump.push_str("</mediawiki>\n");
    SynthCorpus { dump, ontology, pages }
}

fn article_body<'e>(rng: &mut ChaCha8Rng, pick: &impl Fn(&mut ChaCha8Rng) -> &'e String) -> String {
    let mut out = String::from("{{Infobox place\n| name = x\n| area = {{convert|3|km2}}\n}}\n");
    for p in 0..rng.random_range(2..6) {
        if p == 1 {
            out.push_str("== History ==\n");
        }
        for _ in 0..rng.random_range(2..7) {
            sentence(rng, pick, &mut out);
            out.push(' ');
        }
        out.push_str("\n\n");
    }
    if rng.random_bool(0.3) {
        out.push_str("== See also ==\n");
        for _ in 0..3 {
            let _ = writeln!(out, "* [[{}]]", pick(rng));
        }
    }
    let _ = write!(out, "\n[[Category:{}]]\n", name(rng, 1));
    out
}

fn sentence<'e>(rng: &mut ChaCha8Rng, pick: &impl Fn(&mut ChaCha8Rng) -> &'e String, out: &mut String) {
    let len = rng.random_range(5..16);
    let links = *[0usize, 1, 1, 2, 2, 3, 3, 4, 5, 6].choose(rng).unwrap();
    let mut slots: Vec<usize> = (0..links).map(|_| rng.random_range(0..len)).collect();
    slots.sort_unstable();
    for i in 0..len {
        if i > 0 {
            out.push(' ');
        }
        if slots.first() == Some(&i) {
            slots.remove(0);
            while slots.first() == Some(&i) {
                slots.remove(0);
            }
            let e = pick(rng);
            match rng.random_range(0..4) {
                0 => {
                    let _ = write!(out, "[[{}|{}]]", e.replace(' ', "_"), e.to_lowercase());
                }
                1 => {
                    let _ = write!(out, "'''[[{}]]'''", e);
                }
                _ => {
                    let _ = write!(out, "[[{}]]", e);
                }
            }
            continue;
        }
        let w = WORDS.choose(rng).unwrap();
        match (i, rng.random_range(0..40)) {
            (0, _) => {
                let mut c = w.chars();
                out.extend(c.next().map(|f| f.to_ascii_uppercase()));
                out.push_str(c.as_str());
            }
            (_, 0) => out.push_str("Dr. Mora"),
            (_, 1) => {
                let _ = write!(out, "{w},");
            }
            (_, 2) => {
                let _ = write!(out, "''{w}''");
            }
            _ => out.push_str(w),
        }
    }
    out.push('.');
    match rng.random_range(0..10) {
        0 => out.push_str("<ref>{{cite web|url=http://example.org|title=Source}}</ref>"),
        1 => out.push_str("{{citation needed}}"),
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dump::stream_articles;

    #[test]
    fn deterministic_and_sized() {
        let a = synth_corpus(1, 200_000);
        assert_eq!(a.dump, synth_corpus(1, 200_000).dump);
        assert_ne!(a.dump, synth_corpus(2, 200_000).dump);
        assert!(a.dump.len() >= 200_000 && a.dump.len() < 230_000);
    }

    #[test]
    fn parses_with_expected_skips() {
        let s = synth_corpus(3, 100_000);
        let mut stream = stream_articles(s.dump.as_bytes());
        let articles: Vec<_> = stream.by_ref().collect::<Result<_, _>>().unwrap();
        let t = stream.tally();
        assert_eq!(t.pages as usize, s.pages);
        assert_eq!(t.redirects as usize, s.pages / 20 - s.pages / 60);
        assert_eq!(t.other_namespace as usize, s.pages / 30);
        assert_eq!(articles.len() + t.redirects as usize + t.other_namespace as usize, s.pages);
        assert!(articles.iter().all(|a| !a.anchors.is_empty()));
    }
}
