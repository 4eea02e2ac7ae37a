use super::Repository;
use crate::error::{Error, Result};
use crate::model::{DigitalObject, Pid, State, Timestamp};

/// Conjunction of property conditions over the object registry.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SearchFilter {
    /// Glob over the PID (`*` and `?`).
    pub pid: Option<String>,
    /// Case-insensitive substring of the label.
    pub label: Option<String>,
    pub state: Option<State>,
    pub content_model: Option<String>,
    pub created_after: Option<Timestamp>,
    pub created_before: Option<Timestamp>,
    pub modified_after: Option<Timestamp>,
    pub modified_before: Option<Timestamp>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchHit {
    pub pid: Pid,
    pub label: String,
    pub state: State,
    pub content_model: String,
    pub created: Timestamp,
    pub last_modified: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchResult {
    pub hits: Vec<SearchHit>,
    /// Matches before `limit`/`offset` were applied.
    pub total: usize,
}

fn glob_match(pattern: &[char], text: &[char]) -> bool {
    match (pattern.first(), text.first()) {
        (None, None) => true,
        (Some('*'), _) => glob_match(&pattern[1..], text) || (!text.is_empty() && glob_match(pattern, &text[1..])),
        (Some('?'), Some(_)) => glob_match(&pattern[1..], &text[1..]),
        (Some(p), Some(t)) if p == t => glob_match(&pattern[1..], &text[1..]),
        _ => false,
    }
}

/// Splits on whitespace, keeping single- or double-quoted runs together.
fn split_conditions(text: &str) -> Result<Vec<String>> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut quote = None;
    for c in text.chars() {
        match (quote, c) {
            (None, '\'' | '"') => quote = Some(c),
            (Some(q), c) if c == q => quote = None,
            (None, c) if c.is_whitespace() => {
                if !current.is_empty() {
                    out.push(std::mem::take(&mut current));
                }
            }
            (_, c) => current.push(c),
        }
    }
    if quote.is_some() {
        return Err(Error::InvalidArgument("unterminated quote in search query".into()));
    }
    if !current.is_empty() {
        out.push(current);
    }
    Ok(out)
}

impl SearchFilter {
    /// Parses conditions like `label~Pavilion state=A pid=demo:* cDate>=2004-12-01`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut filter = SearchFilter::default();
        for cond in split_conditions(text)? {
            let bad = || Error::InvalidArgument(format!("bad search condition {cond:?}"));
            let op_start = cond.find(['=', '~', '<', '>']).ok_or_else(bad)?;
            let field = &cond[..op_start];
            let rest = &cond[op_start..];
            let (op, value) = ["<=", ">=", "=", "~", "<", ">"]
                .iter()
                .find_map(|op| rest.strip_prefix(op).map(|v| (*op, v)))
                .ok_or_else(bad)?;
            let date = || Timestamp::parse(value);
            match (field, op) {
                ("pid", "=" | "~") => filter.pid = Some(value.to_string()),
                ("label", "~") => filter.label = Some(value.to_string()),
                ("label", "=") => filter.label = Some(value.to_string()),
                ("state", "=") => {
                    filter.state = Some(State::parse(value).map_err(|_| bad())?);
                }
                ("cModel" | "contentModel", "=") => filter.content_model = Some(value.to_string()),
                ("cDate" | "createdDate", ">" | ">=") => filter.created_after = Some(date()?),
                ("cDate" | "createdDate", "<" | "<=") => filter.created_before = Some(date()?),
                ("mDate" | "lastModifiedDate", ">" | ">=") => filter.modified_after = Some(date()?),
                ("mDate" | "lastModifiedDate", "<" | "<=") => filter.modified_before = Some(date()?),
                _ => return Err(bad()),
            }
        }
        Ok(filter)
    }

    pub fn matches(&self, obj: &DigitalObject) -> bool {
        let props = &obj.properties;
        if let Some(glob) = &self.pid {
            let pattern: Vec<char> = glob.chars().collect();
            let text: Vec<char> = obj.pid.to_string().chars().collect();
            if !glob_match(&pattern, &text) {
                return false;
            }
        }
        if let Some(label) = &self.label {
            if !props.label.to_lowercase().contains(&label.to_lowercase()) {
                return false;
            }
        }
        self.state.map_or(true, |s| s == props.state)
            && self.content_model.as_ref().map_or(true, |m| *m == props.content_model)
            && self.created_after.map_or(true, |t| props.created >= t)
            && self.created_before.map_or(true, |t| props.created <= t)
            && self.modified_after.map_or(true, |t| props.last_modified >= t)
            && self.modified_before.map_or(true, |t| props.last_modified <= t)
    }
}

impl Repository {
    /// Objects matching `filter`, ordered by PID.
    pub fn registry_search(&self, filter: &SearchFilter, limit: usize, offset: usize) -> SearchResult {
        let objects = self.objects.read().clone();
        let matching: Vec<SearchHit> = objects
            .values()
            .filter(|obj| filter.matches(obj))
            .map(|obj| SearchHit {
                pid: obj.pid.clone(),
                label: obj.properties.label.clone(),
                state: obj.properties.state,
                content_model: obj.properties.content_model.clone(),
                created: obj.properties.created,
                last_modified: obj.properties.last_modified,
            })
            .collect();
        let total = matching.len();
        SearchResult {
            hits: matching.into_iter().skip(offset).take(limit).collect(),
            total,
        }
    }
}
