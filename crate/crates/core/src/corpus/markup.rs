//! Splitting post bodies into code and prose.

/// Separates the text inside `<code>`/`<pre>` spans from the surrounding prose.
///
/// Code spans (including nested `<pre><code>`) are joined with a newline.
/// All other tags are dropped, replaced by a single space in prose so that
/// block boundaries do not glue words together. An open code tag with no
/// matching close runs to the end of the document. HTML entities are decoded
/// in both outputs.
pub fn separate_code(body_html: &str) -> (String, String) {
    let mut prose = String::with_capacity(body_html.len());
    let mut code = String::new();
    let mut depth = 0usize;
    // Whether the current code span already received text; used to insert
    // the separator between distinct spans.
    let mut span_open = false;
    let mut rest = body_html;

    while let Some(lt) = rest.find('<') {
        let (text, after) = rest.split_at(lt);
        push_text(text, depth, &mut prose, &mut code, &mut span_open);

        match parse_tag(after) {
            Some(tag) => {
                if tag.is_code {
                    if tag.closing {
                        if depth > 0 {
                            depth -= 1;
                            if depth == 0 {
                                span_open = false;
                            }
                        }
                    } else {
                        if depth == 0 && !code.is_empty() {
                            code.push('\n');
                        }
                        depth += 1;
                    }
                } else if depth == 0 {
                    prose.push(' ');
                }
                rest = &after[tag.len..];
            }
            None => {
                // A bare '<' that does not start a tag is visible text.
                push_text("<", depth, &mut prose, &mut code, &mut span_open);
                rest = &after[1..];
            }
        }
    }
    push_text(rest, depth, &mut prose, &mut code, &mut span_open);

    (
        html_escape::decode_html_entities(&prose).into_owned(),
        html_escape::decode_html_entities(&code).into_owned(),
    )
}

fn push_text(
    text: &str,
    depth: usize,
    prose: &mut String,
    code: &mut String,
    span_open: &mut bool,
) {
    if text.is_empty() {
        return;
    }
    if depth > 0 {
        code.push_str(text);
        *span_open = true;
    } else {
        prose.push_str(text);
    }
}

struct Tag {
    len: usize,
    closing: bool,
    is_code: bool,
}

/// Parses a tag at the start of `s` (which begins with `<`).
fn parse_tag(s: &str) -> Option<Tag> {
    let bytes = s.as_bytes();
    let mut i = 1;
    let closing = bytes.get(i) == Some(&b'/');
    if closing {
        i += 1;
    }
    match bytes.get(i) {
        Some(c) if c.is_ascii_alphabetic() || (*c == b'!' && !closing) => {}
        _ => return None,
    }
    let end = s.find('>')?;
    let name_start = i;
    let mut name_end = name_start;
    while name_end < end && bytes[name_end].is_ascii_alphanumeric() {
        name_end += 1;
    }
    let name = &s[name_start..name_end];
    let is_code = name.eq_ignore_ascii_case("code") || name.eq_ignore_ascii_case("pre");
    Some(Tag {
        len: end + 1,
        closing,
        is_code,
    })
}
