//! Byte decoding and markup-to-plain-text cleanup.

use std::borrow::Cow;

use encoding_rs::{Encoding, UTF_8};

/// Decodes a document using its BOM, else the encoding named in the XML
/// declaration, else UTF-8. Malformed sequences become U+FFFD.
pub fn decode_document(bytes: &[u8]) -> String {
    let (encoding, bom_len) = Encoding::for_bom(bytes)
        .or_else(|| declared_encoding(bytes).map(|e| (e, 0)))
        .unwrap_or((UTF_8, 0));
    let (text, _) = encoding.decode_without_bom_handling(&bytes[bom_len..]);
    text.into_owned()
}

/// The `encoding` pseudo-attribute of a leading `<?xml ... ?>` declaration.
fn declared_encoding(bytes: &[u8]) -> Option<&'static Encoding> {
    let head = &bytes[..bytes.len().min(512)];
    let start = head.windows(5).position(|w| w == b"<?xml")?;
    let end = start + head[start..].windows(2).position(|w| w == b"?>")?;
    let decl = std::str::from_utf8(&head[start..end]).ok()?;
    let after = &decl[decl.find("encoding")? + "encoding".len()..];
    let after = after.trim_start().strip_prefix('=')?.trim_start();
    let quote = after.chars().next().filter(|c| *c == '"' || *c == '\'')?;
    let value = &after[1..];
    let label = &value[..value.find(quote)?];
    let enc = Encoding::for_label(label.trim().as_bytes())?;
    // A UTF-16 label on a document we are reading byte-wise as ASCII is a lie.
    if enc == encoding_rs::UTF_16LE || enc == encoding_rs::UTF_16BE {
        return None;
    }
    Some(enc)
}

fn decode_entities(s: &str) -> Cow<'_, str> {
    html_escape::decode_html_entities(s)
}

fn looks_like_tag_start(next: Option<char>) -> bool {
    matches!(next, Some(c) if c.is_ascii_alphabetic() || c == '/' || c == '!' || c == '?')
}

/// Removes `<...>` tags, leaving a space in their place.
fn strip_tags(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars().peekable();
    while let Some(c) = chars.next() {
        if c == '<' && looks_like_tag_start(chars.peek().copied()) {
            for d in chars.by_ref() {
                if d == '>' {
                    break;
                }
            }
            out.push(' ');
        } else {
            out.push(c);
        }
    }
    out
}

/// Turns feed text that may carry escaped or literal HTML into plain text
/// with single spaces.
pub fn clean_text(raw: &str) -> String {
    let once = decode_entities(raw);
    let stripped = strip_tags(&once);
    let twice = decode_entities(&stripped);
    twice.split_whitespace().collect::<Vec<_>>().join(" ")
}
