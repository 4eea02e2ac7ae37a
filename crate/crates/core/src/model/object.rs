use std::collections::BTreeMap;
use std::fmt;

use indexmap::IndexMap;
use quick_xml::escape::escape;

use super::pid::{ObjectUri, Pid};
use super::time::Timestamp;
use crate::error::{Error, Result};

pub const DC: &str = "DC";
pub const RELS_EXT: &str = "RELS-EXT";
pub const POLICY: &str = "POLICY";
pub const AUDIT: &str = "AUDIT";
pub const RESERVED_DATASTREAMS: [&str; 4] = [DC, RELS_EXT, POLICY, AUDIT];

pub const OBJECT_TYPE: &str = "FedoraObject";
pub const BDEF_CONTENT_MODEL: &str = "BDEF";
pub const BMECH_CONTENT_MODEL: &str = "BMECH";
pub const AUDIT_NS: &str = "info:fedora/def:audit/";
pub const AUDIT_PROCESS: &str = "Fedora API-M";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum State {
    Active,
    Inactive,
    Deleted,
}

impl State {
    pub fn code(&self) -> &'static str {
        match self {
            State::Active => "A",
            State::Inactive => "I",
            State::Deleted => "D",
        }
    }

    pub fn parse(code: &str) -> Result<Self> {
        match code {
            "A" => Ok(State::Active),
            "I" => Ok(State::Inactive),
            "D" => Ok(State::Deleted),
            other => Err(Error::SchemaViolation(format!("unknown state {other:?}"))),
        }
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectProperties {
    pub state: State,
    pub label: String,
    pub content_model: String,
    pub created: Timestamp,
    pub last_modified: Timestamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ControlGroup {
    Managed,
    External,
    Redirected,
    InlineXml,
}

impl ControlGroup {
    pub fn code(&self) -> &'static str {
        match self {
            ControlGroup::Managed => "M",
            ControlGroup::External => "E",
            ControlGroup::Redirected => "R",
            ControlGroup::InlineXml => "X",
        }
    }

    pub fn parse(code: &str) -> Result<Self> {
        match code {
            "M" => Ok(ControlGroup::Managed),
            "E" => Ok(ControlGroup::External),
            "R" => Ok(ControlGroup::Redirected),
            "X" => Ok(ControlGroup::InlineXml),
            other => Err(Error::SchemaViolation(format!(
                "unknown CONTROL_GROUP {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ContentLocation {
    /// Key into the managed content store, `{pid}:{dsId}:{versionId}`.
    Internal(String),
    Url(String),
    Inline(Vec<u8>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatastreamVersion {
    pub id: String,
    pub label: String,
    pub created: Timestamp,
    pub location: ContentLocation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Datastream {
    pub id: String,
    pub control_group: ControlGroup,
    pub mime_type: String,
    pub format_uri: Option<String>,
    pub state: State,
    pub versionable: bool,
    pub versions: Vec<DatastreamVersion>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatastreamBinding {
    pub datastream_id: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DisseminatorVersion {
    pub id: String,
    pub bmech: Pid,
    pub label: String,
    pub created: Timestamp,
    /// binding key → bound datastream
    pub bindings: BTreeMap<String, DatastreamBinding>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Disseminator {
    pub id: String,
    pub bdef: Pid,
    pub state: State,
    pub versionable: bool,
    pub versions: Vec<DisseminatorVersion>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditRecord {
    pub id: String,
    pub process_type: String,
    pub action: String,
    pub component_id: String,
    pub responsibility: String,
    pub date: Timestamp,
    pub justification: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DigitalObject {
    pub pid: Pid,
    pub properties: ObjectProperties,
    pub datastreams: IndexMap<String, Datastream>,
    pub disseminators: IndexMap<String, Disseminator>,
    pub audit_trail: Vec<AuditRecord>,
}

/// Something with dated versions: datastreams and disseminators.
pub trait Versioned {
    type Version;

    fn component_id(&self) -> &str;
    fn version_list(&self) -> &[Self::Version];
    fn version_created(v: &Self::Version) -> Timestamp;
    fn version_id(v: &Self::Version) -> &str;
}

impl Versioned for Datastream {
    type Version = DatastreamVersion;

    fn component_id(&self) -> &str {
        &self.id
    }
    fn version_list(&self) -> &[DatastreamVersion] {
        &self.versions
    }
    fn version_created(v: &DatastreamVersion) -> Timestamp {
        v.created
    }
    fn version_id(v: &DatastreamVersion) -> &str {
        &v.id
    }
}

impl Versioned for Disseminator {
    type Version = DisseminatorVersion;

    fn component_id(&self) -> &str {
        &self.id
    }
    fn version_list(&self) -> &[DisseminatorVersion] {
        &self.versions
    }
    fn version_created(v: &DisseminatorVersion) -> Timestamp {
        v.created
    }
    fn version_id(v: &DisseminatorVersion) -> &str {
        &v.id
    }
}

/// Numeric suffix of `{componentId}.{n}`.
pub fn version_ordinal(version_id: &str) -> Option<u64> {
    version_id.rsplit_once('.').and_then(|(_, n)| n.parse().ok())
}

/// The version with the greatest CREATED ≤ `as_of` (latest when `as_of` is
/// absent). Equal timestamps resolve to the higher version ordinal.
pub fn resolve_version<C: Versioned>(component: &C, as_of: Option<Timestamp>) -> Result<&C::Version> {
    component
        .version_list()
        .iter()
        .filter(|v| as_of.map_or(true, |t| C::version_created(v) <= t))
        .max_by_key(|v| (C::version_created(v), version_ordinal(C::version_id(v))))
        .ok_or_else(|| Error::NoVersionAtTime(component.component_id().to_string()))
}

pub fn internal_id(pid: &Pid, ds_id: &str, version_id: &str) -> String {
    format!("{pid}:{ds_id}:{version_id}")
}

impl Datastream {
    pub fn latest(&self) -> &DatastreamVersion {
        self.versions.last().expect("datastream has at least one version")
    }

    pub fn next_version_id(&self) -> String {
        next_version_id(&self.id, self.versions.iter().map(|v| v.id.as_str()))
    }
}

impl Disseminator {
    pub fn latest(&self) -> &DisseminatorVersion {
        self.versions.last().expect("disseminator has at least one version")
    }

    pub fn next_version_id(&self) -> String {
        next_version_id(&self.id, self.versions.iter().map(|v| v.id.as_str()))
    }
}

fn next_version_id<'a>(component: &str, ids: impl Iterator<Item = &'a str>) -> String {
    let next = ids.filter_map(version_ordinal).max().map_or(0, |n| n + 1);
    format!("{component}.{next}")
}

impl DigitalObject {
    /// Bare object with no components.
    pub fn new(pid: Pid, label: &str, content_model: &str, created: Timestamp) -> Self {
        DigitalObject {
            pid,
            properties: ObjectProperties {
                state: State::Active,
                label: label.to_string(),
                content_model: content_model.to_string(),
                created,
                last_modified: created,
            },
            datastreams: IndexMap::new(),
            disseminators: IndexMap::new(),
            audit_trail: Vec::new(),
        }
    }

    pub fn uri(&self) -> ObjectUri {
        ObjectUri::object(self.pid.clone())
    }

    /// Every dated event on the object: component versions and audit records.
    pub fn event_dates(&self) -> impl Iterator<Item = Timestamp> + '_ {
        let ds = self
            .datastreams
            .values()
            .flat_map(|d| d.versions.iter().map(|v| v.created));
        let diss = self
            .disseminators
            .values()
            .flat_map(|d| d.versions.iter().map(|v| v.created));
        ds.chain(diss).chain(self.audit_trail.iter().map(|r| r.date))
    }

    pub fn derived_last_modified(&self) -> Timestamp {
        self.event_dates()
            .fold(self.properties.created, std::cmp::max)
    }

    pub fn is_bdef(&self) -> bool {
        self.properties.content_model == BDEF_CONTENT_MODEL
    }

    pub fn is_bmech(&self) -> bool {
        self.properties.content_model == BMECH_CONTENT_MODEL
    }

    pub fn next_audit_id(&self) -> String {
        format!("AUDREC{}", self.audit_trail.len() + 1)
    }

    /// Rebuilds the AUDIT datastream from `audit_trail` and refreshes the
    /// derived lastModifiedDate. Called after parse and after every mutation.
    pub fn normalize(&mut self) {
        self.regenerate_audit_datastream();
        self.properties.last_modified = self.derived_last_modified();
    }

    fn regenerate_audit_datastream(&mut self) {
        let content = render_audit_trail(&self.audit_trail);
        if let Some(ds) = self.datastreams.get_mut(AUDIT) {
            let created = ds.versions.first().map(|v| v.created);
            let first = DatastreamVersion {
                id: format!("{AUDIT}.0"),
                label: ds
                    .versions
                    .first()
                    .map(|v| v.label.clone())
                    .unwrap_or_else(|| "Object Audit Trail".to_string()),
                created: created
                    .or_else(|| self.audit_trail.first().map(|r| r.date))
                    .unwrap_or(self.properties.created),
                location: ContentLocation::Inline(content),
            };
            ds.versionable = false;
            ds.versions = vec![first];
        } else if let Some(first_record) = self.audit_trail.first() {
            self.datastreams.insert(
                AUDIT.to_string(),
                Datastream {
                    id: AUDIT.to_string(),
                    control_group: ControlGroup::Managed,
                    mime_type: "text/xml".to_string(),
                    format_uri: None,
                    state: State::Active,
                    versionable: false,
                    versions: vec![DatastreamVersion {
                        id: format!("{AUDIT}.0"),
                        label: "Object Audit Trail".to_string(),
                        created: first_record.date,
                        location: ContentLocation::Inline(content),
                    }],
                },
            );
        }
    }
}

/// Canonical inline XML for an audit trail, as stored in the AUDIT
/// datastream.
pub fn render_audit_trail(records: &[AuditRecord]) -> Vec<u8> {
    let mut out = String::new();
    out.push_str("\n        <audit:auditTrail xmlns:audit=\"");
    out.push_str(AUDIT_NS);
    out.push_str("\">\n");
    for r in records {
        out.push_str(&format!(
            "          <audit:record ID=\"{}\">\n",
            escape(r.id.as_str())
        ));
        out.push_str(&format!(
            "            <audit:process type=\"{}\"/>\n",
            escape(r.process_type.as_str())
        ));
        for (tag, value) in [
            ("action", r.action.as_str()),
            ("componentID", r.component_id.as_str()),
            ("responsibility", r.responsibility.as_str()),
            ("date", &r.date.to_string()),
            ("justification", r.justification.as_str()),
        ] {
            out.push_str(&format!(
                "            <audit:{tag}>{}</audit:{tag}>\n",
                escape(value)
            ));
        }
        out.push_str("          </audit:record>\n");
    }
    out.push_str("        </audit:auditTrail>\n      ");
    out.into_bytes()
}
