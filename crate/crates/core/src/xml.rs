//! Small helpers shared by the XML readers and writers.

use quick_xml::events::{BytesStart, Event};
use quick_xml::name::ResolveResult;
use quick_xml::NsReader;

use crate::error::{Error, Result};

/// Escapes an attribute value so that it survives attribute-value
/// normalization on re-read.
pub fn escape_attr(value: &str) -> String {
    let mut out = String::with_capacity(value.len());
    for c in value.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\n' => out.push_str("&#10;"),
            '\r' => out.push_str("&#13;"),
            '\t' => out.push_str("&#9;"),
            c => out.push(c),
        }
    }
    out
}

pub fn escape_text(value: &str) -> String {
    let mut out = String::with_capacity(value.len());
    for c in value.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '\r' => out.push_str("&#13;"),
            c => out.push(c),
        }
    }
    out
}

/// A start (or empty) element with its namespace resolved.
#[derive(Debug, Clone)]
pub struct Element {
    pub namespace: Option<String>,
    pub local: String,
    pub qname: Vec<u8>,
    pub attrs: Vec<Attr>,
    pub empty: bool,
}

#[derive(Debug, Clone)]
pub struct Attr {
    pub qname: String,
    pub namespace: Option<String>,
    pub local: String,
    pub value: String,
}

impl Element {
    pub fn is(&self, namespace: &str, local: &str) -> bool {
        self.namespace.as_deref() == Some(namespace) && self.local == local
    }

    /// Attribute by qualified name as written (`ID`, `rdf:about`, ...).
    pub fn attr(&self, name: &str) -> Option<&str> {
        self.attrs
            .iter()
            .find(|a| a.qname == name)
            .map(|a| a.value.as_str())
    }

    /// Attribute by namespace URI and local name.
    pub fn attr_ns(&self, namespace: &str, local: &str) -> Option<&str> {
        self.attrs
            .iter()
            .find(|a| a.namespace.as_deref() == Some(namespace) && a.local == local)
            .map(|a| a.value.as_str())
    }

    pub fn require(&self, name: &str) -> Result<&str> {
        self.attr(name).ok_or_else(|| {
            Error::SchemaViolation(format!("<{}> lacks attribute {name}", self.local))
        })
    }
}

#[derive(Debug)]
pub enum Node {
    Open(Element),
    Close,
    Text(String),
    Eof,
}

/// Pull reader yielding namespace-resolved elements and unescaped text over
/// an in-memory document. Comments, PIs and the XML declaration are skipped.
pub struct Pull<'a> {
    pub reader: NsReader<&'a [u8]>,
    pub input: &'a [u8],
}

impl<'a> Pull<'a> {
    pub fn new(input: &'a [u8]) -> Self {
        let mut reader = NsReader::from_reader(input);
        reader.config_mut().expand_empty_elements = false;
        Pull { reader, input }
    }

    fn element(&self, namespace: Option<String>, e: &BytesStart, empty: bool) -> Result<Element> {
        let mut attrs = Vec::new();
        for attr in e.attributes() {
            let attr = attr.map_err(Error::xml)?;
            let qname = String::from_utf8_lossy(attr.key.as_ref()).into_owned();
            if qname == "xmlns" || qname.starts_with("xmlns:") {
                continue;
            }
            let (ns, local) = self.reader.resolve_attribute(attr.key);
            let value = attr
                .decode_and_unescape_value(self.reader.decoder())
                .map_err(Error::xml)?
                .into_owned();
            attrs.push(Attr {
                qname,
                namespace: Self::namespace(ns)?,
                local: String::from_utf8_lossy(local.as_ref()).into_owned(),
                value,
            });
        }
        Ok(Element {
            namespace,
            local: String::from_utf8_lossy(e.local_name().as_ref()).into_owned(),
            qname: e.name().as_ref().to_vec(),
            attrs,
            empty,
        })
    }

    fn namespace(ns: ResolveResult) -> Result<Option<String>> {
        Ok(match ns {
            ResolveResult::Bound(ns) => Some(String::from_utf8_lossy(ns.as_ref()).into_owned()),
            ResolveResult::Unbound => None,
            ResolveResult::Unknown(prefix) => {
                return Err(Error::XmlSyntax(format!(
                    "undeclared namespace prefix {}",
                    String::from_utf8_lossy(&prefix)
                )))
            }
        })
    }

    pub fn next(&mut self) -> Result<Node> {
        loop {
            let (ns, event) = self.reader.read_resolved_event().map_err(Error::xml)?;
            let ns = Self::namespace(ns)?;
            match event {
                Event::Start(e) => return Ok(Node::Open(self.element(ns, &e, false)?)),
                Event::Empty(e) => return Ok(Node::Open(self.element(ns, &e, true)?)),
                Event::End(_) => return Ok(Node::Close),
                Event::Text(t) => {
                    let text = t.unescape().map_err(Error::xml)?.into_owned();
                    return Ok(Node::Text(text));
                }
                Event::CData(c) => {
                    return Ok(Node::Text(String::from_utf8_lossy(&c).into_owned()));
                }
                Event::Eof => return Ok(Node::Eof),
                Event::Comment(_) | Event::Decl(_) | Event::PI(_) | Event::DocType(_) => {}
            }
        }
    }

    /// Next node, skipping whitespace-only text.
    pub fn next_significant(&mut self) -> Result<Node> {
        loop {
            match self.next()? {
                Node::Text(t) if t.trim().is_empty() => continue,
                other => return Ok(other),
            }
        }
    }

    /// Raw bytes between the end of `el`'s start tag and the start of its end
    /// tag; consumes the end tag.
    pub fn raw_content(&mut self, el: &Element) -> Result<&'a [u8]> {
        if el.empty {
            return Ok(&[]);
        }
        let span = self
            .reader
            .read_to_end(quick_xml::name::QName(&el.qname))
            .map_err(Error::xml)?;
        Ok(&self.input[span.start as usize..span.end as usize])
    }

    /// Concatenated text content of `el`; nested elements are an error.
    pub fn text_content(&mut self, el: &Element) -> Result<String> {
        if el.empty {
            return Ok(String::new());
        }
        let mut out = String::new();
        loop {
            match self.next()? {
                Node::Text(t) => out.push_str(&t),
                Node::Close => return Ok(out),
                Node::Open(child) => {
                    return Err(Error::SchemaViolation(format!(
                        "unexpected <{}> inside <{}>",
                        child.local, el.local
                    )))
                }
                Node::Eof => return Err(Error::XmlSyntax("unexpected end of document".into())),
            }
        }
    }

    /// Skips the remainder of `el` (which has been opened).
    pub fn skip(&mut self, el: &Element) -> Result<()> {
        self.raw_content(el).map(|_| ())
    }
}

/// Checks that a fragment is well-formed XML (balanced, declared prefixes).
pub fn check_well_formed(fragment: &[u8]) -> Result<()> {
    let mut pull = Pull::new(fragment);
    let mut depth = 0usize;
    let mut roots = 0usize;
    loop {
        match pull.next()? {
            Node::Open(el) => {
                if depth == 0 {
                    roots += 1;
                }
                if !el.empty {
                    depth += 1;
                }
            }
            Node::Close => depth = depth.saturating_sub(1),
            Node::Text(t) => {
                if depth == 0 && !t.trim().is_empty() {
                    return Err(Error::XmlSyntax("text outside the root element".into()));
                }
            }
            Node::Eof => break,
        }
    }
    if depth != 0 {
        return Err(Error::XmlSyntax("unclosed element".into()));
    }
    if roots != 1 {
        return Err(Error::XmlSyntax(format!("expected one root element, found {roots}")));
    }
    Ok(())
}

/// Strips a leading XML declaration, if present.
pub fn strip_declaration(doc: &[u8]) -> &[u8] {
    let trimmed = trim_ascii_start(doc);
    if trimmed.starts_with(b"<?xml") {
        if let Some(end) = trimmed.windows(2).position(|w| w == b"?>") {
            return &trimmed[end + 2..];
        }
    }
    doc
}

fn trim_ascii_start(b: &[u8]) -> &[u8] {
    let start = b.iter().position(|c| !c.is_ascii_whitespace()).unwrap_or(b.len());
    &b[start..]
}
