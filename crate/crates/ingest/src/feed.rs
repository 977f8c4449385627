//! RSS 2.0 and Atom 1.0 parsing into news items.

use std::collections::HashSet;

use chrono::{DateTime, Utc};
use feedrank_core::NewsItem;
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use url::Url;

use crate::markup::{clean_text, decode_document};
use crate::FeedError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Rss,
    Atom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    ChannelLink,
    Title,
    Link,
    Summary,
}

#[derive(Debug, Default)]
struct RawEntry {
    title: Option<String>,
    link: Option<String>,
    has_alternate: bool,
    summary: Option<String>,
}

struct Capture {
    depth: usize,
    field: Field,
    buf: String,
}

fn attr(e: &BytesStart<'_>, name: &[u8]) -> Option<String> {
    e.attributes()
        .flatten()
        .find(|a| a.key.local_name().as_ref() == name)
        .map(|a| html_escape::decode_html_entities(&String::from_utf8_lossy(&a.value)).into_owned())
}

fn parse_error(reader: &Reader<&[u8]>, reason: impl ToString) -> FeedError {
    FeedError::Parse {
        position: reader.error_position(),
        reason: reason.to_string(),
    }
}

/// Resolves `link` to an absolute http(s) URL.
fn resolve(link: &str, base: Option<&Url>) -> Option<Url> {
    let link = link.trim();
    if link.is_empty() {
        return None;
    }
    let url = match Url::parse(link) {
        Ok(u) => u,
        Err(url::ParseError::RelativeUrlWithoutBase) => base?.join(link).ok()?,
        Err(_) => return None,
    };
    matches!(url.scheme(), "http" | "https").then_some(url)
}

/// Parses an RSS 2.0 or Atom 1.0 document.
///
/// Entries without a headline or a resolvable http(s) link are skipped, and
/// repeated hyperlinks keep their first entry. Relative links resolve against
/// the feed's own site link, falling back to `fetch_url`.
pub fn parse_feed(
    document: &[u8],
    feed_id: &str,
    fetched_at: DateTime<Utc>,
    fetch_url: Option<&Url>,
) -> Result<Vec<NewsItem>, FeedError> {
    let text = decode_document(document);
    let mut reader = Reader::from_reader(text.as_bytes());
    reader.config_mut().expand_empty_elements = true;

    let mut format = None;
    let mut stack: Vec<String> = Vec::new();
    let mut channel_link: Option<String> = None;
    let mut entries: Vec<RawEntry> = Vec::new();
    let mut current: Option<RawEntry> = None;
    let mut capture: Option<Capture> = None;

    loop {
        match reader.read_event() {
            Err(e) => return Err(parse_error(&reader, e)),
            Ok(Event::Eof) => break,
            Ok(Event::Start(e)) => {
                let qname = String::from_utf8_lossy(e.name().as_ref()).into_owned();
                let local = String::from_utf8_lossy(e.local_name().as_ref()).into_owned();
                let fmt = match format {
                    Some(f) => f,
                    None => {
                        let f = if qname == "rss" {
                            Format::Rss
                        } else if local == "feed" {
                            Format::Atom
                        } else {
                            return Err(FeedError::UnknownFormat(qname));
                        };
                        format = Some(f);
                        f
                    }
                };
                // RSS matches unprefixed names so that e.g. atom:link inside
                // an RSS channel is ignored; Atom matches local names.
                let name = if fmt == Format::Rss { qname } else { local };
                let parent = stack.last().map(String::as_str);
                if let Some(c) = capture.as_mut() {
                    c.buf.push(' ');
                } else {
                    let field = match (fmt, parent, name.as_str()) {
                        (Format::Rss, Some("channel"), "link") => Some(Field::ChannelLink),
                        (Format::Rss, Some("channel" | "rss"), "item")
                        | (Format::Atom, Some("feed"), "entry") => {
                            current = Some(RawEntry::default());
                            None
                        }
                        (Format::Rss, Some("item"), "title") | (Format::Atom, Some("entry"), "title") => {
                            Some(Field::Title)
                        }
                        (Format::Rss, Some("item"), "link") => Some(Field::Link),
                        (Format::Rss, Some("item"), "description")
                        | (Format::Atom, Some("entry"), "summary") => Some(Field::Summary),
                        (Format::Atom, Some("feed"), "link") => {
                            let rel = attr(&e, b"rel").unwrap_or_else(|| "alternate".into());
                            if rel == "alternate" && channel_link.is_none() {
                                channel_link = attr(&e, b"href");
                            }
                            None
                        }
                        (Format::Atom, Some("entry"), "link") => {
                            if let (Some(entry), Some(href)) = (current.as_mut(), attr(&e, b"href")) {
                                let rel = attr(&e, b"rel").unwrap_or_else(|| "alternate".into());
                                if rel == "alternate" && !entry.has_alternate {
                                    entry.link = Some(href);
                                    entry.has_alternate = true;
                                } else if entry.link.is_none() {
                                    entry.link = Some(href);
                                }
                            }
                            None
                        }
                        _ => None,
                    };
                    let inside_entry = current.is_some();
                    capture = field
                        .filter(|f| *f == Field::ChannelLink || inside_entry)
                        .map(|field| Capture {
                            depth: stack.len(),
                            field,
                            buf: String::new(),
                        });
                }
                stack.push(name);
            }
            Ok(Event::End(_)) => {
                let Some(name) = stack.pop() else {
                    return Err(parse_error(&reader, "closing tag without an open element"));
                };
                if let Some(c) = capture.take_if(|c| c.depth == stack.len()) {
                    match c.field {
                        Field::ChannelLink => {
                            channel_link.get_or_insert(c.buf);
                        }
                        field => {
                            if let Some(entry) = current.as_mut() {
                                let slot = match field {
                                    Field::Title => &mut entry.title,
                                    Field::Link => &mut entry.link,
                                    _ => &mut entry.summary,
                                };
                                slot.get_or_insert(c.buf);
                            }
                        }
                    }
                } else if capture.as_ref().is_some_and(|c| c.depth < stack.len()) {
                    if let Some(c) = capture.as_mut() {
                        c.buf.push(' ');
                    }
                }
                let closes_entry = match format {
                    Some(Format::Rss) => name == "item",
                    Some(Format::Atom) => name == "entry",
                    None => false,
                };
                if closes_entry && capture.is_none() {
                    if let Some(entry) = current.take() {
                        entries.push(entry);
                    }
                }
            }
            Ok(Event::Text(t)) => {
                if let Some(c) = capture.as_mut() {
                    c.buf.push_str(&String::from_utf8_lossy(&t));
                }
            }
            Ok(Event::CData(t)) => {
                if let Some(c) = capture.as_mut() {
                    c.buf.push_str(&String::from_utf8_lossy(&t));
                }
            }
            Ok(_) => {}
        }
    }

    if format.is_none() {
        return Err(parse_error(&reader, "no root element"));
    }
    if let Some(open) = stack.last() {
        return Err(parse_error(&reader, format!("document ends inside <{open}>")));
    }

    let site = channel_link
        .as_deref()
        .and_then(|l| resolve(&html_escape::decode_html_entities(l), fetch_url));
    let base = site.as_ref().or(fetch_url);
    let mut seen = HashSet::new();
    let mut items = Vec::with_capacity(entries.len());
    for entry in entries {
        let headline = entry.title.as_deref().map(clean_text).unwrap_or_default();
        if headline.is_empty() {
            continue;
        }
        let Some(link) = entry
            .link
            .as_deref()
            .and_then(|l| resolve(&html_escape::decode_html_entities(l), base))
        else {
            continue;
        };
        let hyperlink = link.to_string();
        if !seen.insert(hyperlink.clone()) {
            continue;
        }
        let summary = entry.summary.as_deref().map(clean_text).filter(|s| !s.is_empty());
        items.push(NewsItem {
            headline,
            hyperlink,
            summary,
            feed_id: feed_id.to_string(),
            fetched_at,
        });
    }
    Ok(items)
}

#[cfg(test)]
mod tests {
    use chrono::TimeZone;

    use super::*;

    fn now() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2024, 5, 1, 12, 0, 0).unwrap()
    }

    fn parse(doc: &str) -> Result<Vec<NewsItem>, FeedError> {
        parse_feed(doc.as_bytes(), "f1", now(), None)
    }

    #[test]
    fn minimal_rss() {
        let items = parse(
            r#"<rss version="2.0"><channel><title>T</title>
               <item><title>Hello</title><link>https://a.test/1</link></item>
               </channel></rss>"#,
        )
        .unwrap();
        assert_eq!(items.len(), 1);
        assert_eq!(items[0].headline, "Hello");
        assert_eq!(items[0].hyperlink, "https://a.test/1");
        assert_eq!(items[0].summary, None);
        assert_eq!(items[0].feed_id, "f1");
    }

    #[test]
    fn rss_relative_links_use_channel_link() {
        let items = parse(
            r#"<rss><channel><item><title>A</title><link>/x?a=1&amp;b=2</link></item>
               <link>https://site.test/news/</link></channel></rss>"#,
        )
        .unwrap();
        assert_eq!(items[0].hyperlink, "https://site.test/x?a=1&b=2");
    }

    #[test]
    fn rss_relative_links_fall_back_to_fetch_url() {
        let base = Url::parse("https://feeds.test/rss.xml").unwrap();
        let doc = r#"<rss><channel><item><title>A</title><link>item/1</link></item></channel></rss>"#;
        let items = parse_feed(doc.as_bytes(), "f", now(), Some(&base)).unwrap();
        assert_eq!(items[0].hyperlink, "https://feeds.test/item/1");
        // without any base the relative link cannot be used
        assert!(parse(doc).unwrap().is_empty());
    }

    #[test]
    fn rss_description_markup_is_stripped() {
        let items = parse(
            r#"<rss><channel><item><title>A &amp; B</title><link>https://a.test/</link>
               <description>&lt;p&gt;Some &lt;b&gt;bold&lt;/b&gt; text&lt;/p&gt;</description></item>
               <item><title>C</title><link>https://a.test/c</link>
               <description><![CDATA[<div>Raw <i>html</i></div>]]></description></item>
               </channel></rss>"#,
        )
        .unwrap();
        assert_eq!(items[0].headline, "A & B");
        assert_eq!(items[0].summary.as_deref(), Some("Some bold text"));
        assert_eq!(items[1].summary.as_deref(), Some("Raw html"));
    }

    #[test]
    fn atom_prefers_alternate_link() {
        let items = parse(
            r#"<feed xmlns="http://www.w3.org/2005/Atom">
               <entry><title type="html">&lt;em&gt;One&lt;/em&gt;</title>
                 <link rel="self" href="https://a.test/self"/>
                 <link href="https://a.test/one"/>
                 <summary>S</summary></entry>
               <entry><title>Two</title><link rel="enclosure" href="https://a.test/two.mp3"/></entry>
               </feed>"#,
        )
        .unwrap();
        assert_eq!(items.len(), 2);
        assert_eq!(items[0].headline, "One");
        assert_eq!(items[0].hyperlink, "https://a.test/one");
        assert_eq!(items[0].summary.as_deref(), Some("S"));
        assert_eq!(items[1].hyperlink, "https://a.test/two.mp3");
    }

    #[test]
    fn prefixed_atom_and_xhtml_titles() {
        let items = parse(
            r#"<a:feed xmlns:a="http://www.w3.org/2005/Atom"><a:entry>
               <a:title type="xhtml"><div xmlns="http://www.w3.org/1999/xhtml">Big <b>news</b></div></a:title>
               <a:link href="https://a.test/n"/></a:entry></a:feed>"#,
        )
        .unwrap();
        assert_eq!(items[0].headline, "Big news");
    }

    #[test]
    fn duplicates_keep_first() {
        let items = parse(
            r#"<rss><channel>
               <item><title>First</title><link>https://a.test/1</link></item>
               <item><title>Second</title><link>https://a.test/1</link></item>
               </channel></rss>"#,
        )
        .unwrap();
        assert_eq!(items.len(), 1);
        assert_eq!(items[0].headline, "First");
    }

    #[test]
    fn skips_entries_without_title_or_http_link() {
        let items = parse(
            r#"<rss><channel>
               <item><link>https://a.test/1</link></item>
               <item><title>   </title><link>https://a.test/2</link></item>
               <item><title>Mail</title><link>mailto:x@y.test</link></item>
               <item><title>Ok</title><link>https://a.test/3</link></item>
               </channel></rss>"#,
        )
        .unwrap();
        assert_eq!(items.len(), 1);
    }

    #[test]
    fn html_is_unknown_format() {
        let r = parse("<!DOCTYPE html><html><body><p>hi</body></html>");
        assert!(matches!(r, Err(FeedError::UnknownFormat(_))), "{r:?}");
    }

    #[test]
    fn malformed_documents_are_parse_errors() {
        for doc in [
            "",
            "just text",
            "<rss><channel><item><title>x</title></channel></rss>",
            "<rss><channel>",
        ] {
            let r = parse(doc);
            assert!(matches!(r, Err(FeedError::Parse { .. })), "{doc:?} -> {r:?}");
        }
    }
}
