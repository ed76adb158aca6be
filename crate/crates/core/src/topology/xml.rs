//! Minimal, forgiving XML reader for network description files.
//!
//! Handles elements, attributes, text, comments, processing instructions and
//! the five predefined entities. Structural slips common in hand-written
//! description files are repaired with a warning instead of failing:
//! a closing tag carrying attributes with no matching open element is read as
//! an opening tag, and stray or mismatched closing tags pop to the nearest
//! matching ancestor or are dropped.

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Element {
    pub name: String,
    pub attrs: Vec<(String, String)>,
    pub children: Vec<Element>,
    pub text: String,
    pub line: usize,
}

impl Element {
    pub fn attr(&self, key: &str) -> Option<&str> {
        self.attrs
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn child(&self, name: &str) -> Option<&Element> {
        self.children.iter().find(|c| c.name == name)
    }

    pub fn children_named<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a Element> + 'a {
        self.children.iter().filter(move |c| c.name == name)
    }

    pub fn trimmed_text(&self) -> &str {
        self.text.trim()
    }
}

pub struct Document {
    pub root: Element,
    pub warnings: Vec<String>,
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn eof(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn bump(&mut self, n: usize) -> &'a str {
        let s = &self.src[self.pos..self.pos + n];
        self.line += s.bytes().filter(|&b| b == b'\n').count();
        self.pos += n;
        s
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Xml {
            line: self.line,
            message: message.into(),
        })
    }

    fn skip_until(&mut self, end: &str, what: &str) -> Result<&'a str> {
        match self.rest().find(end) {
            Some(i) => {
                let body = self.bump(i);
                self.bump(end.len());
                Ok(body)
            }
            None => self.err(format!("unterminated {what}")),
        }
    }

    fn skip_ws(&mut self) {
        let n = self.rest().len() - self.rest().trim_start().len();
        self.bump(n);
    }

    fn name(&mut self) -> Result<&'a str> {
        let n = self
            .rest()
            .find(|c: char| !(c.is_alphanumeric() || matches!(c, '_' | '-' | '.' | ':')))
            .unwrap_or(self.rest().len());
        if n == 0 {
            return self.err("expected a name");
        }
        Ok(self.bump(n))
    }
}

struct Tag {
    name: String,
    attrs: Vec<(String, String)>,
    closing: bool,
    self_closing: bool,
    line: usize,
}

fn unescape(s: &str, line: usize) -> Result<String> {
    if !s.contains('&') {
        return Ok(s.to_owned());
    }
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(i) = rest.find('&') {
        out.push_str(&rest[..i]);
        rest = &rest[i..];
        let end = rest.find(';').ok_or_else(|| Error::Xml {
            line,
            message: "unterminated entity".into(),
        })?;
        let ent = &rest[1..end];
        match ent {
            "lt" => out.push('<'),
            "gt" => out.push('>'),
            "amp" => out.push('&'),
            "quot" => out.push('"'),
            "apos" => out.push('\''),
            _ if ent.starts_with("#x") => out.push(
                u32::from_str_radix(&ent[2..], 16)
                    .ok()
                    .and_then(char::from_u32)
                    .ok_or_else(|| Error::Xml {
                        line,
                        message: format!("bad character reference &{ent};"),
                    })?,
            ),
            _ if ent.starts_with('#') => out.push(
                ent[1..]
                    .parse::<u32>()
                    .ok()
                    .and_then(char::from_u32)
                    .ok_or_else(|| Error::Xml {
                        line,
                        message: format!("bad character reference &{ent};"),
                    })?,
            ),
            _ => {
                return Err(Error::Xml {
                    line,
                    message: format!("unknown entity &{ent};"),
                })
            }
        }
        rest = &rest[end + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

fn read_tag(c: &mut Cursor<'_>) -> Result<Tag> {
    let line = c.line;
    c.bump(1); // '<'
    let closing = c.rest().starts_with('/');
    if closing {
        c.bump(1);
    }
    let name = c.name()?.to_owned();
    let mut attrs = Vec::new();
    loop {
        c.skip_ws();
        if c.eof() {
            return Err(Error::Xml {
                line,
                message: format!("unterminated tag <{name}>"),
            });
        }
        if c.rest().starts_with("/>") {
            c.bump(2);
            return Ok(Tag {
                name,
                attrs,
                closing,
                self_closing: true,
                line,
            });
        }
        if c.rest().starts_with('>') {
            c.bump(1);
            return Ok(Tag {
                name,
                attrs,
                closing,
                self_closing: false,
                line,
            });
        }
        if c.rest().starts_with('<') {
            return Err(Error::Xml {
                line,
                message: format!("unterminated tag <{name}>"),
            });
        }
        let key = c.name()?.to_owned();
        c.skip_ws();
        if !c.rest().starts_with('=') {
            return c.err(format!("attribute {key} of <{name}> has no value"));
        }
        c.bump(1);
        c.skip_ws();
        let quote = match c.rest().chars().next() {
            Some(q @ ('"' | '\'')) => q,
            _ => return c.err(format!("attribute {key} of <{name}> is not quoted")),
        };
        c.bump(1);
        let attr_line = c.line;
        let raw = c.skip_until(&quote.to_string(), "attribute value")?;
        attrs.push((key, unescape(raw, attr_line)?));
    }
}

pub fn parse(src: &str) -> Result<Document> {
    let mut c = Cursor {
        src,
        pos: 0,
        line: 1,
    };
    let mut warnings = Vec::new();
    // Synthetic document node; the real root is its first element child.
    let mut stack = vec![Element::default()];

    while !c.eof() {
        let rest = c.rest();
        if rest.starts_with("<?") {
            c.skip_until("?>", "processing instruction")?;
        } else if rest.starts_with("<!--") {
            c.skip_until("-->", "comment")?;
        } else if rest.starts_with("<![CDATA[") {
            c.bump(9);
            let body = c.skip_until("]]>", "CDATA section")?;
            stack.last_mut().unwrap().text.push_str(body);
        } else if rest.starts_with("<!") {
            c.skip_until(">", "declaration")?;
        } else if rest.starts_with('<') {
            let tag = read_tag(&mut c)?;
            if !tag.closing {
                let el = Element {
                    name: tag.name,
                    attrs: tag.attrs,
                    line: tag.line,
                    ..Element::default()
                };
                if tag.self_closing {
                    stack.last_mut().unwrap().children.push(el);
                } else {
                    stack.push(el);
                }
                continue;
            }
            match stack.iter().rposition(|e| e.name == tag.name) {
                Some(depth) if depth > 0 => {
                    if !tag.attrs.is_empty() {
                        warnings.push(format!(
                            "line {}: attributes on closing tag </{}> ignored",
                            tag.line, tag.name
                        ));
                    }
                    while stack.len() > depth {
                        let el = stack.pop().unwrap();
                        if stack.len() > depth {
                            warnings.push(format!(
                                "line {}: <{}> closed implicitly by </{}>",
                                el.line, el.name, tag.name
                            ));
                        }
                        stack.last_mut().unwrap().children.push(el);
                    }
                }
                _ if !tag.attrs.is_empty() => {
                    warnings.push(format!(
                        "line {}: closing tag </{}> with attributes read as an opening tag",
                        tag.line, tag.name
                    ));
                    stack.push(Element {
                        name: tag.name,
                        attrs: tag.attrs,
                        line: tag.line,
                        ..Element::default()
                    });
                }
                _ => warnings.push(format!(
                    "line {}: stray closing tag </{}> ignored",
                    tag.line, tag.name
                )),
            }
        } else {
            let n = rest.find('<').unwrap_or(rest.len());
            let line = c.line;
            let text = c.bump(n);
            let text = unescape(text, line)?;
            stack.last_mut().unwrap().text.push_str(&text);
        }
    }

    if stack.len() > 1 {
        let open = stack.last().unwrap();
        return c.err(format!(
            "end of document with <{}> (line {}) still open",
            open.name, open.line
        ));
    }
    let doc = stack.pop().unwrap();
    let mut roots = doc.children.into_iter();
    let root = match roots.next() {
        Some(r) => r,
        None => return c.err("document has no root element"),
    };
    if roots.next().is_some() {
        warnings.push("content after the root element ignored".into());
    }
    Ok(Document { root, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_elements_and_attrs() {
        let d =
            parse("<?xml version=\"1.0\"?>\n<a x=\"1\"><b>hi &amp; bye</b><c y='2'/></a>").unwrap();
        assert_eq!(d.root.name, "a");
        assert_eq!(d.root.attr("x"), Some("1"));
        assert_eq!(d.root.child("b").unwrap().trimmed_text(), "hi & bye");
        assert_eq!(d.root.child("c").unwrap().attr("y"), Some("2"));
        assert!(d.warnings.is_empty());
    }

    #[test]
    fn closing_tag_with_attrs_opens() {
        let d = parse("<r></N k=\"3\"><x>1</x></N></r>").unwrap();
        let n = d.root.child("N").unwrap();
        assert_eq!(n.attr("k"), Some("3"));
        assert_eq!(n.child("x").unwrap().trimmed_text(), "1");
        assert_eq!(d.warnings.len(), 1);
    }

    #[test]
    fn errors_carry_line_numbers() {
        match parse("<r>\n<a b=c></a>\n</r>") {
            Err(Error::Xml { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {:?}", other.err()),
        }
        match parse("<r>\n\n<a>1</a\n") {
            Err(Error::Xml { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {:?}", other.err()),
        }
        assert!(parse("<r><a>").is_err());
        assert!(parse("").is_err());
    }

    #[test]
    fn stray_close_is_dropped() {
        let d = parse("<r><a>1</a></b></r>").unwrap();
        assert_eq!(d.root.children.len(), 1);
        assert_eq!(d.warnings.len(), 1);
    }
}
