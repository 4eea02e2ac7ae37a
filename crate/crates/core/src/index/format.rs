use std::fmt::Write as _;
use std::str::FromStr;

use super::engine::{TripleResult, TupleResult};
use super::query::{parse_query, Query, QueryLanguage};
use super::store::Snapshot;
use crate::error::{Error, Result};
use crate::rdf::{write_ntriples, Term};
use crate::xml::{escape_attr, escape_text};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResultFormat {
    Tsv,
    NTriples,
    Xml,
}

impl ResultFormat {
    pub fn content_type(self) -> &'static str {
        match self {
            ResultFormat::Tsv => "text/tab-separated-values; charset=utf-8",
            ResultFormat::NTriples => "application/n-triples",
            ResultFormat::Xml => "application/xml; charset=utf-8",
        }
    }
}

impl FromStr for ResultFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tsv" => Ok(ResultFormat::Tsv),
            "ntriples" | "n-triples" | "nt" => Ok(ResultFormat::NTriples),
            "xml" => Ok(ResultFormat::Xml),
            other => Err(Error::InvalidArgument(format!("unknown result format {other:?}"))),
        }
    }
}

/// Resources print bare; literals keep their N-Triples quoting.
fn tsv_cell(term: &Term) -> String {
    match term {
        Term::Resource(u) => u.clone(),
        other => other.to_string(),
    }
}

fn xml_term(out: &mut String, name: &str, term: &Term) {
    match term {
        Term::Resource(u) => {
            let _ = writeln!(out, "    <{name} uri=\"{}\"/>", escape_attr(u));
        }
        Term::Literal(v) => {
            let _ = writeln!(out, "    <{name}>{}</{name}>", escape_text(v));
        }
        Term::TypedLiteral(v, dt) => {
            let _ = writeln!(out, "    <{name} datatype=\"{}\">{}</{name}>", escape_attr(dt), escape_text(v));
        }
    }
}

pub fn format_tuples(result: &TupleResult, format: ResultFormat) -> Result<String> {
    let mut out = String::new();
    match format {
        ResultFormat::Tsv => {
            out.push_str(&result.vars.join("\t"));
            out.push('\n');
            for row in &result.rows {
                let cells: Vec<String> = row.iter().map(tsv_cell).collect();
                out.push_str(&cells.join("\t"));
                out.push('\n');
            }
        }
        ResultFormat::Xml => {
            out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
            let _ = writeln!(out, "<results truncated=\"{}\">", result.truncated);
            for row in &result.rows {
                out.push_str("  <result>\n");
                for (name, term) in result.vars.iter().zip(row) {
                    xml_term(&mut out, name, term);
                }
                out.push_str("  </result>\n");
            }
            out.push_str("</results>\n");
        }
        ResultFormat::NTriples => {
            return Err(Error::InvalidArgument("tuple results cannot be written as N-Triples".into()))
        }
    }
    Ok(out)
}

pub fn format_triples(result: &TripleResult, format: ResultFormat) -> Result<String> {
    let mut out = String::new();
    match format {
        ResultFormat::NTriples => out = write_ntriples(&result.triples),
        ResultFormat::Tsv => {
            out.push_str("subject\tpredicate\tobject\n");
            for t in &result.triples {
                let _ = writeln!(out, "{}\t{}\t{}", tsv_cell(&t.subject), tsv_cell(&t.predicate), tsv_cell(&t.object));
            }
        }
        ResultFormat::Xml => {
            out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
            let _ = writeln!(out, "<triples truncated=\"{}\">", result.truncated);
            for t in &result.triples {
                out.push_str("  <triple>\n");
                xml_term(&mut out, "subject", &t.subject);
                xml_term(&mut out, "predicate", &t.predicate);
                xml_term(&mut out, "object", &t.object);
                out.push_str("  </triple>\n");
            }
            out.push_str("</triples>\n");
        }
    }
    Ok(out)
}

/// Parses `text`, evaluates it against `snapshot` and renders the answer.
/// Tuple queries default to TSV and triple queries to N-Triples.
pub fn answer_query(
    snapshot: &Snapshot,
    text: &str,
    lang: QueryLanguage,
    format: Option<ResultFormat>,
    limit: usize,
) -> Result<(ResultFormat, String)> {
    match parse_query(text, lang)? {
        Query::Tuples(q) => {
            let format = format.unwrap_or(ResultFormat::Tsv);
            Ok((format, format_tuples(&snapshot.query_tuples(&q, limit), format)?))
        }
        Query::Triples(p) => {
            let format = format.unwrap_or(ResultFormat::NTriples);
            Ok((format, format_triples(&snapshot.query_triples(&p, limit), format)?))
        }
    }
}
