//! OPML subscription lists.

use std::collections::HashSet;

use quick_xml::events::Event;
use quick_xml::Reader;
use url::Url;

use crate::markup::decode_document;
use crate::source::FeedSource;
use crate::FeedError;

/// One [`FeedSource`] per `outline` carrying an `xmlUrl`, at any nesting
/// depth, in document order. Outlines whose URL is not absolute http(s) are
/// skipped, as are repeats.
pub fn import_opml(document: &[u8]) -> Result<Vec<FeedSource>, FeedError> {
    let text = decode_document(document);
    let mut reader = Reader::from_reader(text.as_bytes());
    let err = |reader: &Reader<&[u8]>, reason: String| FeedError::Parse {
        position: reader.error_position(),
        reason,
    };

    let mut depth = 0usize;
    let mut saw_root = false;
    let mut seen = HashSet::new();
    let mut sources = Vec::new();
    loop {
        let event = reader.read_event().map_err(|e| err(&reader, e.to_string()))?;
        let (start, is_empty) = match event {
            Event::Eof => break,
            Event::Start(e) => (e, false),
            Event::Empty(e) => (e, true),
            Event::End(_) => {
                depth = depth.saturating_sub(1);
                continue;
            }
            _ => continue,
        };
        if !saw_root {
            if start.local_name().as_ref() != b"opml" {
                return Err(err(&reader, "root element is not <opml>".into()));
            }
            saw_root = true;
        }
        if !is_empty {
            depth += 1;
        }
        if start.local_name().as_ref() != b"outline" {
            continue;
        }
        let mut url = None;
        let mut title = None;
        let mut text_attr = None;
        for a in start.attributes().flatten() {
            let value = html_escape::decode_html_entities(&String::from_utf8_lossy(&a.value))
                .trim()
                .to_string();
            match a.key.local_name().as_ref().to_ascii_lowercase().as_slice() {
                b"xmlurl" => url = Some(value),
                b"title" => title = Some(value),
                b"text" => text_attr = Some(value),
                _ => {}
            }
        }
        let Some(url) = url.and_then(|u| Url::parse(&u).ok()) else {
            continue;
        };
        if !matches!(url.scheme(), "http" | "https") || !seen.insert(url.to_string()) {
            continue;
        }
        let title = title.or(text_attr).filter(|t| !t.is_empty());
        sources.push(FeedSource::new(url, title));
    }
    if !saw_root {
        return Err(err(&reader, "no <opml> root element".into()));
    }
    if depth != 0 {
        return Err(err(&reader, "document ends inside an open element".into()));
    }
    Ok(sources)
}
