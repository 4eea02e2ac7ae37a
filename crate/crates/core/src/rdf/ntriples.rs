use super::{is_absolute_uri, Term, Triple};
use crate::error::{Error, Result};

pub fn write_ntriples<'a>(triples: impl IntoIterator<Item = &'a Triple>) -> String {
    let mut out = String::new();
    for t in triples {
        out.push_str(&t.to_string());
        out.push('\n');
    }
    out
}

/// Line-oriented N-Triples reader (no blank nodes, no language tags).
pub fn parse_ntriples(text: &str) -> Result<Vec<Triple>> {
    let mut triples = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: &str| Error::RdfSyntax(format!("line {}: {msg}", n + 1));
        let mut cursor = Cursor { rest: line };
        let subject = cursor.term().map_err(|m| err(&m))?;
        let predicate = cursor.term().map_err(|m| err(&m))?;
        let object = cursor.term().map_err(|m| err(&m))?;
        if cursor.rest.trim() != "." {
            return Err(err("expected terminating '.'"));
        }
        if !subject.is_resource() || !predicate.is_resource() {
            return Err(err("subject and predicate must be IRIs"));
        }
        triples.push(Triple {
            subject,
            predicate,
            object,
        });
    }
    Ok(triples)
}

struct Cursor<'a> {
    rest: &'a str,
}

impl Cursor<'_> {
    fn iri(&mut self) -> std::result::Result<String, String> {
        let body = self.rest.strip_prefix('<').ok_or("expected '<'")?;
        let end = body.find('>').ok_or("unterminated IRI")?;
        let iri = &body[..end];
        if !is_absolute_uri(iri) {
            return Err(format!("not an absolute IRI: {iri}"));
        }
        self.rest = &body[end + 1..];
        Ok(iri.to_string())
    }

    fn term(&mut self) -> std::result::Result<Term, String> {
        self.rest = self.rest.trim_start();
        if self.rest.starts_with('<') {
            return self.iri().map(Term::Resource);
        }
        let body = self.rest.strip_prefix('"').ok_or("expected IRI or literal")?;
        let mut value = String::new();
        let mut chars = body.char_indices();
        let end = loop {
            match chars.next() {
                Some((i, '"')) => break i,
                Some((_, '\\')) => match chars.next() {
                    Some((_, 'n')) => value.push('\n'),
                    Some((_, 'r')) => value.push('\r'),
                    Some((_, 't')) => value.push('\t'),
                    Some((_, '"')) => value.push('"'),
                    Some((_, '\\')) => value.push('\\'),
                    _ => return Err("bad escape".into()),
                },
                Some((_, c)) => value.push(c),
                None => return Err("unterminated literal".into()),
            }
        };
        self.rest = &body[end + 1..];
        if let Some(after) = self.rest.strip_prefix("^^") {
            self.rest = after;
            let dt = self.iri()?;
            return Ok(Term::typed(value, dt));
        }
        Ok(Term::Literal(value))
    }
}
