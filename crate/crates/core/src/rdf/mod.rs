//! RDF terms and the two syntaxes the repository reads and writes:
//! the restricted RDF/XML of relations datastreams, and N-Triples.

mod ntriples;
mod rdfxml;

use std::fmt;

pub use ntriples::{parse_ntriples, write_ntriples};
pub use rdfxml::parse_relations;

use crate::model::Timestamp;

pub mod vocab {
    pub const RDF: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
    pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
    pub const RDFS: &str = "http://www.w3.org/2000/01/rdf-schema#";
    pub const XSD: &str = "http://www.w3.org/2001/XMLSchema#";
    pub const XSD_DATETIME: &str = "http://www.w3.org/2001/XMLSchema#dateTime";
    pub const MODEL: &str = "info:fedora/fedora-system:def/model#";
    pub const VIEW: &str = "info:fedora/fedora-system:def/view#";
    /// Relations vocabulary as written in stored RELS-EXT datastreams.
    pub const REL: &str = "info:fedora/fedora-system:def:relations-external#";
    pub const DC: &str = "http://purl.org/dc/elements/1.1/";

    pub const FEDORA_OBJECT: &str = "info:fedora/fedora-system:def/model#FedoraObject";
    pub const IS_MEMBER_OF: &str = "info:fedora/fedora-system:def:relations-external#isMemberOf";
    pub const HAS_MEMBER: &str = "info:fedora/fedora-system:def:relations-external#hasMember";
    pub const DISSEMINATES: &str = "info:fedora/fedora-system:def/view#disseminates";
    pub const DISSEMINATION_TYPE: &str = "info:fedora/fedora-system:def/view#disseminationType";
    pub const LAST_MODIFIED: &str = "info:fedora/fedora-system:def/view#lastModifiedDate";
    pub const MIME_TYPE: &str = "info:fedora/fedora-system:def/view#mimeType";
    pub const STATE: &str = "info:fedora/fedora-system:def/model#state";
    pub const LABEL: &str = "info:fedora/fedora-system:def/model#label";
    pub const CONTENT_MODEL: &str = "info:fedora/fedora-system:def/model#contentModel";
    pub const CREATED: &str = "info:fedora/fedora-system:def/model#createdDate";

    /// Prefix aliases understood in queries (`<fedora-view:disseminates>`).
    pub const ALIASES: &[(&str, &str)] = &[
        ("rdf", RDF),
        ("rdfs", RDFS),
        ("xsd", XSD),
        ("fedora-model", MODEL),
        ("fedora-view", VIEW),
        ("rel", REL),
        ("fedora", REL),
        ("dc", DC),
    ];
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Resource(String),
    Literal(String),
    TypedLiteral(String, String),
}

impl Term {
    pub fn resource(uri: impl Into<String>) -> Self {
        Term::Resource(uri.into())
    }

    pub fn literal(value: impl Into<String>) -> Self {
        Term::Literal(value.into())
    }

    /// Typed literal; `xsd:dateTime` values are normalized to the `...Z` form.
    pub fn typed(value: impl Into<String>, datatype: impl Into<String>) -> Self {
        let value = value.into();
        let datatype = datatype.into();
        if datatype == vocab::XSD_DATETIME {
            if let Ok(t) = Timestamp::parse_lenient(&value) {
                return Term::TypedLiteral(t.to_string(), datatype);
            }
        }
        Term::TypedLiteral(value, datatype)
    }

    pub fn date_time(t: Timestamp) -> Self {
        Term::TypedLiteral(t.to_string(), vocab::XSD_DATETIME.to_string())
    }

    pub fn is_resource(&self) -> bool {
        matches!(self, Term::Resource(_))
    }

    pub fn as_resource(&self) -> Option<&str> {
        match self {
            Term::Resource(u) => Some(u),
            _ => None,
        }
    }

    /// Lexical value without quoting or angle brackets.
    pub fn value(&self) -> &str {
        match self {
            Term::Resource(v) | Term::Literal(v) | Term::TypedLiteral(v, _) => v,
        }
    }
}

pub(crate) fn escape_literal(s: &str, out: &mut String) {
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
}

/// N-Triples rendering.
impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Resource(u) => write!(f, "<{u}>"),
            Term::Literal(v) => {
                let mut s = String::new();
                escape_literal(v, &mut s);
                write!(f, "\"{s}\"")
            }
            Term::TypedLiteral(v, dt) => {
                let mut s = String::new();
                escape_literal(v, &mut s);
                write!(f, "\"{s}\"^^<{dt}>")
            }
        }
    }
}

/// True for `scheme:rest` with a syntactically valid scheme.
pub fn is_absolute_uri(s: &str) -> bool {
    let Some((scheme, rest)) = s.split_once(':') else {
        return false;
    };
    let mut chars = scheme.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
        && !rest.is_empty()
        && !s.chars().any(|c| c.is_whitespace() || matches!(c, '<' | '>' | '"'))
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub subject: Term,
    pub predicate: Term,
    pub object: Term,
}

impl Triple {
    pub fn new(subject: impl Into<String>, predicate: impl Into<String>, object: Term) -> Self {
        Triple {
            subject: Term::Resource(subject.into()),
            predicate: Term::Resource(predicate.into()),
            object,
        }
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} .", self.subject, self.predicate, self.object)
    }
}
