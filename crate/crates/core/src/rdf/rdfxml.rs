use super::{is_absolute_uri, vocab, Term, Triple};
use crate::error::{Error, Result};
use crate::xml::{Element, Node, Pull};

/// Reads the restricted RDF/XML allowed in a relations datastream: node
/// elements identified by `rdf:about` (which must equal `subject`), each
/// holding flat property elements with either an `rdf:resource` or literal
/// text (optionally typed with `rdf:datatype`).
pub fn parse_relations(bytes: &[u8], subject: &str) -> Result<Vec<Triple>> {
    let mut pull = Pull::new(bytes);
    let root = match pull.next_significant().map_err(rdf_err)? {
        Node::Open(el) if el.is(vocab::RDF, "RDF") => el,
        _ => return Err(Error::RdfSyntax("root element must be rdf:RDF".into())),
    };
    let mut triples = Vec::new();
    if root.empty {
        return Ok(triples);
    }
    loop {
        match pull.next_significant().map_err(rdf_err)? {
            Node::Open(node) => parse_node(&mut pull, &node, subject, &mut triples)?,
            Node::Close => break,
            Node::Text(t) => return Err(Error::RdfSyntax(format!("unexpected text {:?}", t.trim()))),
            Node::Eof => return Err(Error::RdfSyntax("unexpected end of document".into())),
        }
    }
    Ok(triples)
}

fn rdf_err(e: Error) -> Error {
    match e {
        Error::XmlSyntax(m) | Error::SchemaViolation(m) => Error::RdfSyntax(m),
        other => other,
    }
}

fn check_subject(about: &str, subject: &str) -> Result<()> {
    if about.trim() != subject {
        return Err(Error::SubjectRestriction {
            expected: subject.to_string(),
            found: about.trim().to_string(),
        });
    }
    Ok(())
}

fn predicate_of(el: &Element) -> Result<String> {
    let ns = el
        .namespace
        .as_deref()
        .ok_or_else(|| Error::RdfSyntax(format!("property <{}> has no namespace", el.local)))?;
    if ns == vocab::MODEL || ns == vocab::VIEW {
        return Err(Error::ReservedPredicate(format!("{ns}{}", el.local)));
    }
    if ns == vocab::RDF && el.local != "type" {
        return Err(Error::RdfSyntax(format!("rdf:{} is not allowed as a property", el.local)));
    }
    Ok(format!("{ns}{}", el.local))
}

fn parse_node(pull: &mut Pull<'_>, node: &Element, subject: &str, out: &mut Vec<Triple>) -> Result<()> {
    let about = node
        .attr_ns(vocab::RDF, "about")
        .ok_or_else(|| Error::RdfSyntax(format!("<{}> needs rdf:about", node.local)))?;
    check_subject(about, subject)?;
    if node.attr_ns(vocab::RDF, "nodeID").is_some() || node.attr_ns(vocab::RDF, "ID").is_some() {
        return Err(Error::RdfSyntax("blank nodes and rdf:ID are not supported".into()));
    }
    if !node.is(vocab::RDF, "Description") {
        let ns = node.namespace.as_deref().unwrap_or_default();
        if ns == vocab::RDF {
            return Err(Error::RdfSyntax(format!("unexpected rdf:{}", node.local)));
        }
        out.push(Triple::new(subject, vocab::RDF_TYPE, Term::resource(format!("{ns}{}", node.local))));
    }
    if node.empty {
        return Ok(());
    }
    loop {
        match pull.next_significant().map_err(rdf_err)? {
            Node::Open(prop) => {
                let predicate = predicate_of(&prop)?;
                let object = if let Some(res) = prop.attr_ns(vocab::RDF, "resource") {
                    let res = res.trim();
                    if !is_absolute_uri(res) {
                        return Err(Error::RdfSyntax(format!("rdf:resource {res:?} is not an absolute URI")));
                    }
                    if !prop.empty {
                        let rest = pull.text_content(&prop).map_err(rdf_err)?;
                        if !rest.trim().is_empty() {
                            return Err(Error::RdfSyntax("rdf:resource property with content".into()));
                        }
                    }
                    Term::resource(res)
                } else {
                    if prop.attr_ns(vocab::RDF, "parseType").is_some() {
                        return Err(Error::RdfSyntax("rdf:parseType is not supported".into()));
                    }
                    let text = pull.text_content(&prop).map_err(|e| match e {
                        Error::SchemaViolation(_) => {
                            Error::RdfSyntax(format!("nested nodes under <{}> are not supported", prop.local))
                        }
                        e => rdf_err(e),
                    })?;
                    match prop.attr_ns(vocab::RDF, "datatype") {
                        Some(dt) => Term::typed(text, dt.trim()),
                        None => Term::literal(text),
                    }
                };
                out.push(Triple::new(subject, predicate, object));
            }
            Node::Close => return Ok(()),
            Node::Text(t) => return Err(Error::RdfSyntax(format!("unexpected text {:?}", t.trim()))),
            Node::Eof => return Err(Error::RdfSyntax("unexpected end of document".into())),
        }
    }
}
