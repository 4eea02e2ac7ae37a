use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const URI_PREFIX: &str = "info:fedora/";
const MAX_PID_LEN: usize = 64;

/// Persistent identifier, rendered `namespace:id`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pid {
    namespace: String,
    id: String,
}

fn is_namespace_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '.' || c == '-'
}

fn is_id_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '.' | '~' | '_' | '-')
}

impl Pid {
    pub fn parse(text: &str) -> Result<Self> {
        let bad = || Error::MalformedPid(text.to_string());
        if text.len() > MAX_PID_LEN {
            return Err(bad());
        }
        let (namespace, id) = text.split_once(':').ok_or_else(bad)?;
        if namespace.is_empty() || !namespace.chars().all(is_namespace_char) {
            return Err(bad());
        }
        if id.is_empty() || !id.chars().all(is_id_char) {
            return Err(bad());
        }
        Ok(Pid {
            namespace: namespace.to_string(),
            id: id.to_string(),
        })
    }

    pub fn namespace(&self) -> &str {
        &self.namespace
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn uri(&self) -> String {
        format!("{URI_PREFIX}{self}")
    }

    /// Accepts `info:fedora/ns:id` (no representation path).
    pub fn from_uri(uri: &str) -> Option<Self> {
        uri.strip_prefix(URI_PREFIX).and_then(|rest| Pid::parse(rest).ok())
    }
}

impl fmt::Display for Pid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.namespace, self.id)
    }
}

impl FromStr for Pid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Pid::parse(s)
    }
}

/// Component identifiers (datastream, disseminator, method names).
pub fn is_component_id(s: &str) -> bool {
    !s.is_empty() && s.len() <= MAX_PID_LEN && s.chars().all(is_id_char)
}

/// What an object URI points at below the object itself.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RepPath {
    Datastream(String),
    Method { bdef: Pid, method: String },
}

impl RepPath {
    pub fn parse(path: &str) -> Result<Self> {
        let bad = || Error::MalformedPath(path.to_string());
        let mut parts = path.split('/');
        let first = parts.next().ok_or_else(bad)?;
        match (parts.next(), parts.next()) {
            (None, _) if is_component_id(first) => Ok(RepPath::Datastream(first.to_string())),
            (Some(method), None) if is_component_id(method) => Ok(RepPath::Method {
                bdef: Pid::parse(first).map_err(|_| bad())?,
                method: method.to_string(),
            }),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for RepPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RepPath::Datastream(ds) => f.write_str(ds),
            RepPath::Method { bdef, method } => write!(f, "{bdef}/{method}"),
        }
    }
}

/// `info:fedora/{pid}` or `info:fedora/{pid}/{path}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObjectUri {
    pub pid: Pid,
    pub path: Option<RepPath>,
}

impl ObjectUri {
    pub fn new(pid: Pid, path: Option<&str>) -> Result<Self> {
        let path = path.map(RepPath::parse).transpose()?;
        Ok(ObjectUri { pid, path })
    }

    pub fn object(pid: Pid) -> Self {
        ObjectUri { pid, path: None }
    }

    pub fn datastream(pid: Pid, ds: &str) -> Self {
        ObjectUri {
            pid,
            path: Some(RepPath::Datastream(ds.to_string())),
        }
    }

    pub fn method(pid: Pid, bdef: Pid, method: &str) -> Self {
        ObjectUri {
            pid,
            path: Some(RepPath::Method {
                bdef,
                method: method.to_string(),
            }),
        }
    }

    /// Parses the part after a prefix (`info:fedora/` or `{base}/get/`).
    fn parse_tail(tail: &str) -> Result<Self> {
        let (pid, path) = match tail.split_once('/') {
            Some((pid, path)) => (pid, Some(path)),
            None => (tail, None),
        };
        ObjectUri::new(Pid::parse(pid)?, path)
    }

    pub fn parse(uri: &str) -> Result<Self> {
        let tail = uri
            .strip_prefix(URI_PREFIX)
            .ok_or_else(|| Error::MalformedPath(uri.to_string()))?;
        Self::parse_tail(tail)
    }

    /// API-A-LITE URL: the `info:fedora/` prefix replaced by `{base}/get/`.
    pub fn to_url(&self, base_url: &str) -> String {
        let rendered = self.to_string();
        format!(
            "{}/get/{}",
            base_url.trim_end_matches('/'),
            &rendered[URI_PREFIX.len()..]
        )
    }

    pub fn from_url(url: &str, base_url: &str) -> Result<Self> {
        let prefix = format!("{}/get/", base_url.trim_end_matches('/'));
        let tail = url
            .strip_prefix(&prefix)
            .ok_or_else(|| Error::MalformedPath(url.to_string()))?;
        let tail = tail.split(['?', '#']).next().unwrap_or_default();
        Self::parse_tail(tail)
    }
}

impl fmt::Display for ObjectUri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.path {
            None => write!(f, "{URI_PREFIX}{}", self.pid),
            Some(path) => write!(f, "{URI_PREFIX}{}/{path}", self.pid),
        }
    }
}
