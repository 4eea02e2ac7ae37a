use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::rdf::{is_absolute_uri, vocab, Term};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PatternTerm {
    Var(String),
    Const(Term),
    Any,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TriplePattern {
    pub subject: PatternTerm,
    pub predicate: PatternTerm,
    pub object: PatternTerm,
}

impl TriplePattern {
    pub fn new(subject: PatternTerm, predicate: PatternTerm, object: PatternTerm) -> Self {
        TriplePattern {
            subject,
            predicate,
            object,
        }
    }

    pub fn positions(&self) -> [&PatternTerm; 3] {
        [&self.subject, &self.predicate, &self.object]
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.positions().into_iter().filter_map(|t| match t {
            PatternTerm::Var(v) => Some(v.as_str()),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConjunctiveQuery {
    pub select: Vec<String>,
    pub patterns: Vec<TriplePattern>,
}

impl ConjunctiveQuery {
    /// Builds a query, dropping repeated patterns. Every selected variable
    /// must occur in some pattern.
    pub fn new(select: Vec<String>, patterns: Vec<TriplePattern>) -> Result<Self> {
        if select.is_empty() {
            return Err(Error::QuerySyntax("select needs at least one variable".into()));
        }
        if patterns.is_empty() {
            return Err(Error::QuerySyntax("query needs at least one pattern".into()));
        }
        let mut unique: Vec<TriplePattern> = Vec::with_capacity(patterns.len());
        for p in patterns {
            if !unique.contains(&p) {
                unique.push(p);
            }
        }
        for v in &select {
            if !unique.iter().any(|p| p.variables().any(|x| x == v)) {
                return Err(Error::QuerySyntax(format!("${v} does not occur in any clause")));
            }
        }
        Ok(ConjunctiveQuery {
            select,
            patterns: unique,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Query {
    Tuples(ConjunctiveQuery),
    Triples(TriplePattern),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryLanguage {
    Itql,
    Spo,
}

impl FromStr for QueryLanguage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "itql" => Ok(QueryLanguage::Itql),
            "spo" => Ok(QueryLanguage::Spo),
            other => Err(Error::InvalidArgument(format!("unknown query language {other:?}"))),
        }
    }
}

impl fmt::Display for QueryLanguage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QueryLanguage::Itql => "itql",
            QueryLanguage::Spo => "spo",
        })
    }
}

pub fn parse_query(text: &str, language: QueryLanguage) -> Result<Query> {
    let tokens = tokenize(text)?;
    match language {
        QueryLanguage::Itql => parse_itql(&tokens).map(Query::Tuples),
        QueryLanguage::Spo => parse_spo(&tokens).map(Query::Triples),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Word(String),
    Var(String),
    Uri(String),
    Literal(Term),
    Star,
    Open,
    Close,
    Dot,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Word(w) => f.write_str(w),
            Token::Var(v) => write!(f, "${v}"),
            Token::Uri(u) => write!(f, "<{u}>"),
            Token::Literal(t) => write!(f, "{t}"),
            Token::Star => f.write_str("*"),
            Token::Open => f.write_str("("),
            Token::Close => f.write_str(")"),
            Token::Dot => f.write_str("."),
        }
    }
}

fn syntax(msg: impl Into<String>) -> Error {
    Error::QuerySyntax(msg.into())
}

/// Expands `prefix:local` when the prefix is a known alias.
fn expand_alias(uri: &str) -> String {
    if let Some((prefix, local)) = uri.split_once(':') {
        if let Some((_, ns)) = vocab::ALIASES.iter().find(|(a, _)| *a == prefix) {
            if !local.starts_with("//") {
                return format!("{ns}{local}");
            }
        }
    }
    uri.to_string()
}

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let mut tokens = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(start, c)) = chars.peek() {
        match c {
            c if c.is_whitespace() => {
                chars.next();
            }
            '(' => {
                chars.next();
                tokens.push(Token::Open);
            }
            ')' => {
                chars.next();
                tokens.push(Token::Close);
            }
            '*' => {
                chars.next();
                tokens.push(Token::Star);
            }
            '.' | ';' => {
                chars.next();
                tokens.push(Token::Dot);
            }
            '<' => {
                chars.next();
                let rest = &text[start + 1..];
                let end = rest.find('>').ok_or_else(|| syntax("unterminated <uri>"))?;
                let raw = rest[..end].trim();
                for _ in 0..rest[..=end].chars().count() {
                    chars.next();
                }
                tokens.push(Token::Uri(raw.to_string()));
            }
            '$' => {
                chars.next();
                let mut name = String::new();
                while let Some(&(_, c)) = chars.peek() {
                    if c.is_alphanumeric() || c == '_' {
                        name.push(c);
                        chars.next();
                    } else {
                        break;
                    }
                }
                if name.is_empty() {
                    return Err(syntax("empty variable name"));
                }
                tokens.push(Token::Var(name));
            }
            '\'' | '"' => {
                chars.next();
                let mut value = String::new();
                loop {
                    match chars.next() {
                        Some((_, '\\')) => match chars.next() {
                            Some((_, 'n')) => value.push('\n'),
                            Some((_, 't')) => value.push('\t'),
                            Some((_, 'r')) => value.push('\r'),
                            Some((_, e)) => value.push(e),
                            None => return Err(syntax("unterminated literal")),
                        },
                        Some((_, q)) if q == c => break,
                        Some((_, ch)) => value.push(ch),
                        None => return Err(syntax("unterminated literal")),
                    }
                }
                let term = if text[chars.peek().map_or(text.len(), |(i, _)| *i)..].starts_with("^^<") {
                    chars.next();
                    chars.next();
                    let (lt, _) = chars.next().expect("checked prefix");
                    let rest = &text[lt + 1..];
                    let end = rest.find('>').ok_or_else(|| syntax("unterminated datatype"))?;
                    for _ in 0..rest[..=end].chars().count() {
                        chars.next();
                    }
                    Term::typed(value, expand_alias(rest[..end].trim()))
                } else {
                    Term::Literal(value)
                };
                tokens.push(Token::Literal(term));
            }
            _ => {
                let mut word = String::new();
                while let Some(&(_, c)) = chars.peek() {
                    if c.is_whitespace() || matches!(c, '(' | ')' | '<' | '$' | '\'' | '"') {
                        break;
                    }
                    word.push(c);
                    chars.next();
                }
                tokens.push(Token::Word(word));
            }
        }
    }
    Ok(tokens)
}

struct Tokens<'a> {
    items: &'a [Token],
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.items.get(self.pos)
    }

    fn next(&mut self) -> Option<&'a Token> {
        let t = self.items.get(self.pos);
        self.pos += 1;
        t
    }

    fn keyword(&mut self, kw: &str) -> Result<()> {
        match self.next() {
            Some(Token::Word(w)) if w.eq_ignore_ascii_case(kw) => Ok(()),
            Some(t) => Err(syntax(format!("expected '{kw}', found '{t}'"))),
            None => Err(syntax(format!("expected '{kw}', found end of query"))),
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Token::Word(w)) if w.eq_ignore_ascii_case(kw))
    }
}

fn resource(uri: &str) -> Result<Term> {
    let uri = expand_alias(uri);
    if !is_absolute_uri(&uri) {
        return Err(syntax(format!("<{uri}> is not an absolute URI")));
    }
    Ok(Term::Resource(uri))
}

fn itql_term(tokens: &mut Tokens<'_>) -> Result<PatternTerm> {
    match tokens.next() {
        Some(Token::Var(v)) => Ok(PatternTerm::Var(v.clone())),
        Some(Token::Uri(u)) => resource(u).map(PatternTerm::Const),
        Some(Token::Literal(t)) => Ok(PatternTerm::Const(t.clone())),
        Some(t) => Err(syntax(format!("expected $variable, <uri> or 'literal', found '{t}'"))),
        None => Err(syntax("clause ends early")),
    }
}

fn itql_clause(tokens: &mut Tokens<'_>) -> Result<TriplePattern> {
    let subject = itql_term(tokens)?;
    let predicate = itql_term(tokens)?;
    let object = itql_term(tokens)?;
    if matches!(subject, PatternTerm::Const(Term::Literal(_) | Term::TypedLiteral(..))) {
        return Err(syntax("a literal cannot be a subject"));
    }
    if matches!(predicate, PatternTerm::Const(Term::Literal(_) | Term::TypedLiteral(..))) {
        return Err(syntax("a literal cannot be a predicate"));
    }
    Ok(TriplePattern::new(subject, predicate, object))
}

/// `CLAUSE (and CLAUSE)*`, where parentheses may group any sub-conjunction.
fn itql_conjunction(tokens: &mut Tokens<'_>, out: &mut Vec<TriplePattern>, depth: usize) -> Result<()> {
    loop {
        if tokens.peek() == Some(&Token::Open) {
            tokens.next();
            itql_conjunction(tokens, out, depth + 1)?;
            match tokens.next() {
                Some(Token::Close) => {}
                _ => return Err(syntax("missing ')'")),
            }
        } else {
            out.push(itql_clause(tokens)?);
        }
        if tokens.at_keyword("and") {
            tokens.next();
            continue;
        }
        match tokens.peek() {
            Some(Token::Close) if depth > 0 => return Ok(()),
            Some(Token::Dot) if depth == 0 => return Ok(()),
            None if depth == 0 => return Ok(()),
            Some(t) => return Err(syntax(format!("unexpected '{t}'"))),
            None => return Err(syntax("missing ')'")),
        }
    }
}

fn parse_itql(items: &[Token]) -> Result<ConjunctiveQuery> {
    let mut tokens = Tokens { items, pos: 0 };
    tokens.keyword("select")?;
    let mut select = Vec::new();
    while let Some(Token::Var(v)) = tokens.peek() {
        if !select.contains(v) {
            select.push(v.clone());
        }
        tokens.next();
    }
    if select.is_empty() {
        return Err(syntax("select needs at least one variable"));
    }
    tokens.keyword("from")?;
    match tokens.next() {
        Some(Token::Uri(model)) if model == "#ri" => {}
        Some(t) => return Err(syntax(format!("unknown model '{t}', expected <#ri>"))),
        None => return Err(syntax("missing model after 'from'")),
    }
    tokens.keyword("where")?;
    let mut patterns = Vec::new();
    itql_conjunction(&mut tokens, &mut patterns, 0)?;
    if tokens.peek() == Some(&Token::Dot) {
        tokens.next();
    }
    if let Some(t) = tokens.peek() {
        return Err(syntax(format!("trailing input at '{t}'")));
    }
    ConjunctiveQuery::new(select, patterns)
}

fn parse_spo(items: &[Token]) -> Result<TriplePattern> {
    let items = match items.last() {
        Some(Token::Dot) => &items[..items.len() - 1],
        _ => items,
    };
    if items.len() != 3 {
        return Err(syntax(format!("SPO query needs 3 terms, found {}", items.len())));
    }
    let term = |t: &Token| -> Result<PatternTerm> {
        match t {
            Token::Star => Ok(PatternTerm::Any),
            Token::Uri(u) => resource(u).map(PatternTerm::Const),
            Token::Literal(l) => Ok(PatternTerm::Const(l.clone())),
            other => Err(syntax(format!("expected *, <uri> or literal, found '{other}'"))),
        }
    };
    let pattern = TriplePattern::new(term(&items[0])?, term(&items[1])?, term(&items[2])?);
    if matches!(pattern.subject, PatternTerm::Const(ref t) if !t.is_resource())
        || matches!(pattern.predicate, PatternTerm::Const(ref t) if !t.is_resource())
    {
        return Err(syntax("subject and predicate must be URIs or *"));
    }
    Ok(pattern)
}
