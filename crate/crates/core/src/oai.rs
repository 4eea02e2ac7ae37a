//! OAI-PMH 2.0 data provider over the triple index. Records are the objects
//! exposing a `bdef:OAI/getDC` dissemination; payloads are fetched through
//! the access layer and re-wrapped as `oai_dc`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine as _;

use crate::error::{Error, Result};
use crate::index::{parse_query, Query, QueryLanguage};
use crate::model::{ObjectUri, Pid, State, Timestamp};
use crate::rdf::Term;
use crate::storage::{DatastreamOutput, Repository};
use crate::xml::{escape_attr, escape_text, Node, Pull};

pub const OAI_NS: &str = "http://www.openarchives.org/OAI/2.0/";
pub const OAI_DC_NS: &str = "http://www.openarchives.org/OAI/2.0/oai_dc/";
pub const DC_NS: &str = "http://purl.org/dc/elements/1.1/";
pub const OAI_DC_PREFIX: &str = "oai_dc";
pub const DEFAULT_PAGE_SIZE: usize = 100;

/// Disseminations that count as a record's metadata.
const METADATA_TYPE: &str = "info:fedora/*/bdef:OAI/getDC";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OaiSet {
    pub spec: String,
    pub collection: Pid,
}

impl OaiSet {
    /// Parses `spec=pid`, or a bare pid used as its own spec.
    pub fn parse(text: &str) -> Result<Self> {
        let (spec, pid) = text.split_once('=').unwrap_or((text, text));
        if spec.is_empty() {
            return Err(Error::InvalidArgument(format!("empty set spec in {text:?}")));
        }
        Ok(OaiSet {
            spec: spec.to_string(),
            collection: Pid::parse(pid)?,
        })
    }
}

#[derive(Debug, Clone)]
pub struct OaiConfig {
    pub repository_name: String,
    /// Namespace part of `oai:{domain}:{pid}` identifiers.
    pub domain: String,
    pub admin_email: String,
    pub sets: Vec<OaiSet>,
    pub page_size: usize,
}

impl Default for OaiConfig {
    fn default() -> Self {
        OaiConfig {
            repository_name: "Fedora Repository".to_string(),
            domain: "localhost".to_string(),
            admin_email: "admin@localhost".to_string(),
            sets: Vec::new(),
            page_size: DEFAULT_PAGE_SIZE,
        }
    }
}

/// Protocol-level failure, reported inside a 200 response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OaiError {
    pub code: &'static str,
    pub message: String,
}

fn oai_err(code: &'static str, message: impl Into<String>) -> OaiError {
    OaiError {
        code,
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OaiItem {
    pub pid: Pid,
    pub dissemination: String,
    pub datestamp: Timestamp,
    pub sets: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Selection {
    set: Option<String>,
    from: Option<Timestamp>,
    until: Option<Timestamp>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Token {
    offset: usize,
    selection: Selection,
}

impl Token {
    fn encode(&self) -> String {
        let s = &self.selection;
        let opt = |t: Option<Timestamp>| t.map(|t| t.to_string()).unwrap_or_default();
        let raw = format!(
            "{}\n{}\n{}\n{}",
            self.offset,
            s.set.clone().unwrap_or_default(),
            opt(s.from),
            opt(s.until)
        );
        URL_SAFE_NO_PAD.encode(raw)
    }

    fn decode(token: &str) -> Option<Token> {
        let raw = String::from_utf8(URL_SAFE_NO_PAD.decode(token).ok()?).ok()?;
        let parts: Vec<&str> = raw.split('\n').collect();
        let [offset, set, from, until] = parts.as_slice() else {
            return None;
        };
        let time = |s: &str| -> Option<Option<Timestamp>> {
            if s.is_empty() {
                Some(None)
            } else {
                Timestamp::parse(s).ok().map(Some)
            }
        };
        Some(Token {
            offset: offset.parse().ok()?,
            selection: Selection {
                set: (!set.is_empty()).then(|| set.to_string()),
                from: time(from)?,
                until: time(until)?,
            },
        })
    }
}

/// OAI datestamps: day or second granularity, UTC.
fn parse_datestamp(text: &str, end_of_day: bool) -> std::result::Result<Timestamp, OaiError> {
    let bad = || oai_err("badArgument", format!("bad datestamp {text:?}"));
    let day_only = text.len() == 10;
    if !(day_only || (text.len() == 20 && text.ends_with('Z'))) {
        return Err(bad());
    }
    let t = Timestamp::parse(text).map_err(|_| bad())?;
    Ok(if day_only && end_of_day { t.plus_seconds(86_399) } else { t })
}

/// Collects the Dublin Core elements of any document into an `oai_dc`
/// container.
pub fn to_oai_dc(payload: &[u8]) -> Result<String> {
    let mut pull = Pull::new(payload);
    let mut elements: Vec<(String, String)> = Vec::new();
    loop {
        match pull.next()? {
            Node::Open(el) if el.namespace.as_deref() == Some(DC_NS) => {
                let text = pull.text_content(&el)?;
                elements.push((el.local.clone(), text.trim().to_string()));
            }
            Node::Eof => break,
            _ => {}
        }
    }
    let mut out = format!(
        "<oai_dc:dc xmlns:oai_dc=\"{OAI_DC_NS}\" xmlns:dc=\"{DC_NS}\" \
         xmlns:xsi=\"http://www.w3.org/2001/XMLSchema-instance\" \
         xsi:schemaLocation=\"{OAI_DC_NS} http://www.openarchives.org/OAI/2.0/oai_dc.xsd\">"
    );
    for (name, text) in elements {
        let _ = write!(out, "\n          <dc:{name}>{}</dc:{name}>", escape_text(&text));
    }
    out.push_str("\n        </oai_dc:dc>");
    Ok(out)
}

pub struct OaiProvider<'a> {
    repo: &'a Repository,
    config: &'a OaiConfig,
}

impl<'a> OaiProvider<'a> {
    pub fn new(repo: &'a Repository, config: &'a OaiConfig) -> Self {
        OaiProvider { repo, config }
    }

    fn base_url(&self) -> String {
        format!("{}/oai", self.repo.base_url())
    }

    pub fn identifier(&self, pid: &Pid) -> String {
        format!("oai:{}:{pid}", self.config.domain)
    }

    fn pid_of(&self, identifier: &str) -> Option<Pid> {
        let rest = identifier.strip_prefix("oai:")?.strip_prefix(&self.config.domain)?.strip_prefix(':')?;
        Pid::parse(rest).ok()
    }

    fn rows(&self, itql: &str) -> Result<Vec<Vec<Term>>> {
        match parse_query(itql, QueryLanguage::Itql)? {
            Query::Tuples(q) => Ok(self.repo.snapshot().query_tuples(&q, usize::MAX).rows),
            Query::Triples(_) => Err(Error::QuerySyntax("expected a tuple query".into())),
        }
    }

    /// Members of a set per the index: `isMemberOf` from the member or
    /// `hasMember` from the collection.
    pub fn set_members(&self, set: &OaiSet) -> Result<BTreeSet<Pid>> {
        let c = set.collection.uri();
        let mut members = BTreeSet::new();
        for q in [
            format!("select $m from <#ri> where $m <rel:isMemberOf> <{c}>"),
            format!("select $m from <#ri> where <{c}> <rel:hasMember> $m"),
        ] {
            for row in self.rows(&q)? {
                if let Some(p) = row[0].as_resource().and_then(Pid::from_uri) {
                    members.insert(p);
                }
            }
        }
        Ok(members)
    }

    /// Every record, ordered by PID.
    pub fn items(&self) -> Result<Vec<OaiItem>> {
        let rows = self.rows(&format!(
            "select $member $dissemination $date from <#ri> \
             where $member <fedora-view:disseminates> $dissemination \
             and $dissemination <fedora-view:disseminationType> <{METADATA_TYPE}> \
             and $dissemination <fedora-view:lastModifiedDate> $date"
        ))?;
        let memberships: Vec<(String, BTreeSet<Pid>)> = self
            .config
            .sets
            .iter()
            .map(|s| Ok((s.spec.clone(), self.set_members(s)?)))
            .collect::<Result<_>>()?;
        let mut items: BTreeMap<Pid, OaiItem> = BTreeMap::new();
        for row in rows {
            let Some(pid) = row[0].as_resource().and_then(Pid::from_uri) else { continue };
            let Ok(datestamp) = Timestamp::parse(row[2].value()) else { continue };
            let active = self.repo.object(&pid).is_ok_and(|o| o.properties.state == State::Active);
            if !active || items.contains_key(&pid) {
                continue;
            }
            let sets = memberships
                .iter()
                .filter(|(_, m)| m.contains(&pid))
                .map(|(spec, _)| spec.clone())
                .collect();
            items.insert(
                pid.clone(),
                OaiItem {
                    pid,
                    dissemination: row[1].value().to_string(),
                    datestamp,
                    sets,
                },
            );
        }
        Ok(items.into_values().collect())
    }

    fn select(&self, selection: &Selection) -> std::result::Result<Vec<OaiItem>, OaiError> {
        if let Some(spec) = &selection.set {
            if self.config.sets.is_empty() {
                return Err(oai_err("noSetHierarchy", "this repository does not support sets"));
            }
            if !self.config.sets.iter().any(|s| &s.spec == spec) {
                return Err(oai_err("badArgument", format!("unknown set {spec:?}")));
            }
        }
        let items = self.items().map_err(|e| oai_err("badArgument", e.to_string()))?;
        let chosen: Vec<OaiItem> = items
            .into_iter()
            .filter(|i| selection.set.as_ref().map_or(true, |s| i.sets.contains(s)))
            .filter(|i| selection.from.map_or(true, |f| i.datestamp >= f))
            .filter(|i| selection.until.map_or(true, |u| i.datestamp <= u))
            .collect();
        if chosen.is_empty() {
            return Err(oai_err("noRecordsMatch", "no records match the request"));
        }
        Ok(chosen)
    }

    fn header(&self, item: &OaiItem) -> String {
        let mut out = format!(
            "<header>\n        <identifier>{}</identifier>\n        <datestamp>{}</datestamp>",
            escape_text(&self.identifier(&item.pid)),
            item.datestamp
        );
        for s in &item.sets {
            let _ = write!(out, "\n        <setSpec>{}</setSpec>", escape_text(s));
        }
        out.push_str("\n      </header>");
        out
    }

    fn record(&self, item: &OaiItem) -> Result<String> {
        let uri = ObjectUri::parse(&item.dissemination)?;
        let bytes = match self.repo.get_representation(&uri, &BTreeMap::new(), None)? {
            DatastreamOutput::Content { bytes, .. } => bytes,
            DatastreamOutput::Redirect { url } => self.repo.fetch_url(&url)?.bytes,
        };
        Ok(format!(
            "<record>\n      {}\n      <metadata>\n        {}\n      </metadata>\n    </record>",
            self.header(item),
            to_oai_dc(&bytes)?
        ))
    }

    /// Answers one request. `args` are the raw query pairs, repeats included.
    pub fn handle(&self, args: &[(String, String)]) -> String {
        let mut map: BTreeMap<&str, &str> = BTreeMap::new();
        let mut repeated = false;
        for (k, v) in args {
            repeated |= map.insert(k.as_str(), v.as_str()).is_some();
        }
        let verb = map.get("verb").copied();
        let result = match verb {
            _ if repeated => Err(oai_err("badArgument", "repeated argument")),
            None => Err(oai_err("badVerb", "missing verb")),
            Some(v) => self.dispatch(v, &map),
        };
        let now = self.repo.now();
        let mut out = format!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<OAI-PMH xmlns=\"{OAI_NS}\" \
             xmlns:xsi=\"http://www.w3.org/2001/XMLSchema-instance\" \
             xsi:schemaLocation=\"{OAI_NS} http://www.openarchives.org/OAI/2.0/OAI-PMH.xsd\">\n  \
             <responseDate>{now}</responseDate>\n  <request"
        );
        let echo_args = matches!(&result, Err(e) if e.code == "badVerb" || e.code == "badArgument");
        if !echo_args {
            for (k, v) in &map {
                let _ = write!(out, " {k}=\"{}\"", escape_attr(v));
            }
        }
        let _ = writeln!(out, ">{}</request>", escape_text(&self.base_url()));
        match result {
            Ok(body) => out.push_str(&body),
            Err(e) => {
                let _ = writeln!(out, "  <error code=\"{}\">{}</error>", e.code, escape_text(&e.message));
            }
        }
        out.push_str("</OAI-PMH>\n");
        out
    }

    fn dispatch(&self, verb: &str, args: &BTreeMap<&str, &str>) -> std::result::Result<String, OaiError> {
        let (required, optional): (&[&str], &[&str]) = match verb {
            "Identify" | "ListSets" => (&[], &["resumptionToken"]),
            "ListMetadataFormats" => (&[], &["identifier"]),
            "GetRecord" => (&["identifier", "metadataPrefix"], &[]),
            "ListIdentifiers" | "ListRecords" => (&[], &["metadataPrefix", "set", "from", "until", "resumptionToken"]),
            other => return Err(oai_err("badVerb", format!("unknown verb {other:?}"))),
        };
        for k in args.keys().filter(|k| **k != "verb") {
            if !required.contains(k) && !optional.contains(k) {
                return Err(oai_err("badArgument", format!("unexpected argument {k}")));
            }
        }
        for k in required {
            if !args.contains_key(k) {
                return Err(oai_err("badArgument", format!("missing argument {k}")));
            }
        }
        match verb {
            "Identify" => self.identify(args),
            "ListMetadataFormats" => self.list_metadata_formats(args),
            "ListSets" => self.list_sets(args),
            "GetRecord" => self.get_record(args),
            _ => self.list(verb, args),
        }
    }

    fn identify(&self, args: &BTreeMap<&str, &str>) -> std::result::Result<String, OaiError> {
        if args.contains_key("resumptionToken") {
            return Err(oai_err("badResumptionToken", "Identify takes no resumption token"));
        }
        let earliest = self
            .items()
            .ok()
            .and_then(|items| items.iter().map(|i| i.datestamp).min())
            .unwrap_or_else(|| Timestamp::parse("1970-01-01T00:00:00Z").expect("epoch"));
        Ok(format!(
            "  <Identify>\n    <repositoryName>{}</repositoryName>\n    <baseURL>{}</baseURL>\n    \
             <protocolVersion>2.0</protocolVersion>\n    <adminEmail>{}</adminEmail>\n    \
             <earliestDatestamp>{earliest}</earliestDatestamp>\n    <deletedRecord>no</deletedRecord>\n    \
             <granularity>YYYY-MM-DDThh:mm:ssZ</granularity>\n  </Identify>\n",
            escape_text(&self.config.repository_name),
            escape_text(&self.base_url()),
            escape_text(&self.config.admin_email)
        ))
    }

    fn list_metadata_formats(&self, args: &BTreeMap<&str, &str>) -> std::result::Result<String, OaiError> {
        if let Some(id) = args.get("identifier") {
            let known = self.pid_of(id).is_some_and(|p| self.items().is_ok_and(|items| items.iter().any(|i| i.pid == p)));
            if !known {
                return Err(oai_err("idDoesNotExist", format!("no item {id}")));
            }
        }
        Ok(format!(
            "  <ListMetadataFormats>\n    <metadataFormat>\n      <metadataPrefix>{OAI_DC_PREFIX}</metadataPrefix>\n      \
             <schema>http://www.openarchives.org/OAI/2.0/oai_dc.xsd</schema>\n      \
             <metadataNamespace>{OAI_DC_NS}</metadataNamespace>\n    </metadataFormat>\n  </ListMetadataFormats>\n"
        ))
    }

    fn list_sets(&self, args: &BTreeMap<&str, &str>) -> std::result::Result<String, OaiError> {
        if args.contains_key("resumptionToken") {
            return Err(oai_err("badResumptionToken", "set lists are never split"));
        }
        if self.config.sets.is_empty() {
            return Err(oai_err("noSetHierarchy", "this repository does not support sets"));
        }
        let mut out = String::from("  <ListSets>\n");
        for s in &self.config.sets {
            let name = self
                .repo
                .object(&s.collection)
                .map(|o| o.properties.label.clone())
                .unwrap_or_else(|_| s.spec.clone());
            let _ = writeln!(
                out,
                "    <set>\n      <setSpec>{}</setSpec>\n      <setName>{}</setName>\n    </set>",
                escape_text(&s.spec),
                escape_text(&name)
            );
        }
        out.push_str("  </ListSets>\n");
        Ok(out)
    }

    fn check_prefix(prefix: &str) -> std::result::Result<(), OaiError> {
        if prefix != OAI_DC_PREFIX {
            return Err(oai_err("cannotDisseminateFormat", format!("unsupported metadata format {prefix:?}")));
        }
        Ok(())
    }

    fn get_record(&self, args: &BTreeMap<&str, &str>) -> std::result::Result<String, OaiError> {
        Self::check_prefix(args["metadataPrefix"])?;
        let id = args["identifier"];
        let missing = || oai_err("idDoesNotExist", format!("no item {id}"));
        let pid = self.pid_of(id).ok_or_else(missing)?;
        let items = self.items().map_err(|e| oai_err("badArgument", e.to_string()))?;
        let item = items.iter().find(|i| i.pid == pid).ok_or_else(missing)?;
        let record = self
            .record(item)
            .map_err(|e| oai_err("idDoesNotExist", format!("{id}: metadata unavailable ({})", e.code())))?;
        Ok(format!("  <GetRecord>\n    {record}\n  </GetRecord>\n"))
    }

    fn list(&self, verb: &str, args: &BTreeMap<&str, &str>) -> std::result::Result<String, OaiError> {
        let token = match args.get("resumptionToken") {
            Some(raw) => {
                if args.len() > 2 {
                    return Err(oai_err("badArgument", "resumptionToken is an exclusive argument"));
                }
                Some(Token::decode(raw).ok_or_else(|| oai_err("badResumptionToken", "unrecognized token"))?)
            }
            None => {
                let prefix = args
                    .get("metadataPrefix")
                    .ok_or_else(|| oai_err("badArgument", "missing argument metadataPrefix"))?;
                Self::check_prefix(prefix)?;
                None
            }
        };
        let (offset, selection) = match token {
            Some(t) => (t.offset, t.selection),
            None => {
                let from = args.get("from").map(|f| parse_datestamp(f, false)).transpose()?;
                let until = args.get("until").map(|u| parse_datestamp(u, true)).transpose()?;
                if let (Some(f), Some(u)) = (args.get("from"), args.get("until")) {
                    if f.len() != u.len() {
                        return Err(oai_err("badArgument", "from and until differ in granularity"));
                    }
                }
                if matches!((from, until), (Some(f), Some(u)) if f > u) {
                    return Err(oai_err("badArgument", "from is after until"));
                }
                let selection = Selection {
                    set: args.get("set").map(|s| s.to_string()),
                    from,
                    until,
                };
                (0, selection)
            }
        };
        let items = self.select(&selection)?;
        if offset >= items.len() && offset > 0 {
            return Err(oai_err("badResumptionToken", "token is past the end of the list"));
        }
        let page_size = self.config.page_size.max(1);
        let page = &items[offset..items.len().min(offset + page_size)];
        let mut out = format!("  <{verb}>\n");
        for item in page {
            if verb == "ListIdentifiers" {
                let _ = writeln!(out, "    {}", self.header(item).replace("\n      </header>", "\n    </header>"));
            } else {
                match self.record(item) {
                    Ok(r) => {
                        let _ = writeln!(out, "    {r}");
                    }
                    Err(e) => tracing::warn!(pid = %item.pid, error = %e, "record skipped"),
                }
            }
        }
        let next = offset + page.len();
        if next < items.len() || offset > 0 {
            let token = (next < items.len())
                .then(|| {
                    Token {
                        offset: next,
                        selection: selection.clone(),
                    }
                    .encode()
                })
                .unwrap_or_default();
            let _ = writeln!(
                out,
                "    <resumptionToken completeListSize=\"{}\" cursor=\"{offset}\">{token}</resumptionToken>",
                items.len()
            );
        }
        let _ = writeln!(out, "  </{verb}>");
        Ok(out)
    }
}
