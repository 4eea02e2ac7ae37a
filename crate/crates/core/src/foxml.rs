//! FOXML 1.0 reader and canonical writer.
//!
//! Inline XML content (`foxml:xmlContent`) is carried as the exact byte range
//! found in the source document and written back verbatim. Everything else is
//! re-emitted in a canonical layout: two-space indentation, attributes in a
//! fixed order.

use std::collections::BTreeMap;

use indexmap::IndexMap;

use crate::error::{Error, Result};
use crate::model::*;
use crate::xml::{check_well_formed, escape_attr, escape_text, Element, Node, Pull};

pub const FOXML_NS: &str = "info:fedora/fedora-system:def/foxml#";
pub const MODEL_NS: &str = "info:fedora/fedora-system:def/model#";
pub const VIEW_NS: &str = "info:fedora/fedora-system:def/view#";
pub const RDF_NS: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
const XSI_NS: &str = "http://www.w3.org/2001/XMLSchema-instance";
const SCHEMA_LOCATION: &str =
    "info:fedora/fedora-system:def/foxml# http://www.fedora.info/definitions/1/0/foxml1-0.xsd";

const PROP_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
const PROP_STATE: &str = "info:fedora/fedora-system:def/model#state";
const PROP_LABEL: &str = "info:fedora/fedora-system:def/model#label";
const PROP_CONTENT_MODEL: &str = "info:fedora/fedora-system:def/model#contentModel";
const PROP_CREATED: &str = "info:fedora/fedora-system:def/model#createdDate";
const PROP_LAST_MODIFIED: &str = "info:fedora/fedora-system:def/view#lastModifiedDate";

/// Raw FOXML bytes together with the object they describe.
#[derive(Debug, Clone)]
pub struct FoxmlDocument {
    pub raw: Vec<u8>,
    pub object: DigitalObject,
}

impl FoxmlDocument {
    pub fn parse(raw: Vec<u8>) -> Result<Self> {
        let object = parse_foxml(&raw)?;
        Ok(FoxmlDocument { raw, object })
    }
}

/// Parses and validates.
pub fn parse_foxml(bytes: &[u8]) -> Result<DigitalObject> {
    let obj = parse_foxml_unchecked(bytes)?;
    let report = validate_object(&obj);
    if !report.is_empty() {
        return Err(report.into_error());
    }
    Ok(obj)
}

/// Parses structure only. Managed datastreams may still carry URL locations
/// (ingest internalizes them before validating).
pub fn parse_foxml_unchecked(bytes: &[u8]) -> Result<DigitalObject> {
    let mut pull = Pull::new(bytes);
    let root = match pull.next_significant()? {
        Node::Open(el) => el,
        _ => return Err(Error::SchemaViolation("missing root element".into())),
    };
    if !root.is(FOXML_NS, "digitalObject") {
        return Err(Error::SchemaViolation(format!(
            "root element must be foxml:digitalObject, found {}",
            root.local
        )));
    }
    let pid = Pid::parse(root.require("PID")?).map_err(|e| match e {
        Error::MalformedPid(p) => Error::SchemaViolation(format!("malformed PID attribute {p:?}")),
        e => e,
    })?;

    let mut properties = None;
    let mut datastreams = IndexMap::new();
    let mut disseminators = IndexMap::new();
    let mut seen_disseminator = false;

    if !root.empty {
        loop {
            match pull.next_significant()? {
                Node::Open(el) if el.is(FOXML_NS, "objectProperties") => {
                    if properties.is_some() || !datastreams.is_empty() || seen_disseminator {
                        return Err(Error::SchemaViolation(
                            "objectProperties must appear once, first".into(),
                        ));
                    }
                    properties = Some(parse_properties(&mut pull, &el)?);
                }
                Node::Open(el) if el.is(FOXML_NS, "datastream") => {
                    if properties.is_none() || seen_disseminator {
                        return Err(Error::SchemaViolation(
                            "datastreams must follow objectProperties and precede disseminators".into(),
                        ));
                    }
                    let ds = parse_datastream(&mut pull, &el)?;
                    if datastreams.contains_key(&ds.id) {
                        return Err(Error::SchemaViolation(format!("duplicate datastream {}", ds.id)));
                    }
                    datastreams.insert(ds.id.clone(), ds);
                }
                Node::Open(el) if el.is(FOXML_NS, "disseminator") => {
                    if properties.is_none() {
                        return Err(Error::SchemaViolation(
                            "disseminators must follow objectProperties".into(),
                        ));
                    }
                    seen_disseminator = true;
                    let diss = parse_disseminator(&mut pull, &el)?;
                    if disseminators.contains_key(&diss.id) || datastreams.contains_key(&diss.id) {
                        return Err(Error::SchemaViolation(format!("duplicate component {}", diss.id)));
                    }
                    disseminators.insert(diss.id.clone(), diss);
                }
                Node::Open(el) => {
                    return Err(Error::SchemaViolation(format!("unexpected element <{}>", el.local)))
                }
                Node::Text(t) => {
                    return Err(Error::SchemaViolation(format!("unexpected text {:?}", t.trim())))
                }
                Node::Close => break,
                Node::Eof => return Err(Error::XmlSyntax("unexpected end of document".into())),
            }
        }
    }
    match pull.next_significant()? {
        Node::Eof => {}
        _ => return Err(Error::XmlSyntax("content after the root element".into())),
    }

    let properties =
        properties.ok_or_else(|| Error::SchemaViolation("missing objectProperties".into()))?;
    let audit_trail = match datastreams.get(AUDIT) {
        Some(ds) => parse_audit_datastream(ds)?,
        None => Vec::new(),
    };
    let mut obj = DigitalObject {
        pid,
        properties,
        datastreams,
        disseminators,
        audit_trail,
    };
    obj.normalize();
    Ok(obj)
}

fn parse_properties(pull: &mut Pull<'_>, el: &Element) -> Result<ObjectProperties> {
    let mut values: BTreeMap<String, String> = BTreeMap::new();
    if !el.empty {
        loop {
            match pull.next_significant()? {
                Node::Open(p) if p.is(FOXML_NS, "property") => {
                    let name = p.require("NAME")?.to_string();
                    let value = p.require("VALUE")?.to_string();
                    if !p.empty {
                        pull.skip(&p)?;
                    }
                    values.insert(name, value);
                }
                Node::Open(p) => {
                    return Err(Error::SchemaViolation(format!(
                        "unexpected <{}> in objectProperties",
                        p.local
                    )))
                }
                Node::Close => break,
                Node::Text(_) => return Err(Error::SchemaViolation("text in objectProperties".into())),
                Node::Eof => return Err(Error::XmlSyntax("unexpected end of document".into())),
            }
        }
    }
    if let Some(t) = values.get(PROP_TYPE) {
        if t != OBJECT_TYPE {
            return Err(Error::SchemaViolation(format!("unsupported object type {t:?}")));
        }
    }
    let created = values
        .get(PROP_CREATED)
        .ok_or_else(|| Error::SchemaViolation("missing createdDate property".into()))
        .and_then(|v| Timestamp::parse_lenient(v).map_err(|_| Error::SchemaViolation(format!("bad createdDate {v:?}"))))?;
    let last_modified = match values.get(PROP_LAST_MODIFIED) {
        Some(v) => Timestamp::parse_lenient(v)
            .map_err(|_| Error::SchemaViolation(format!("bad lastModifiedDate {v:?}")))?,
        None => created,
    };
    Ok(ObjectProperties {
        state: values.get(PROP_STATE).map_or(Ok(State::Active), |s| State::parse(s))?,
        label: values.get(PROP_LABEL).cloned().unwrap_or_default(),
        content_model: values.get(PROP_CONTENT_MODEL).cloned().unwrap_or_default(),
        created,
        last_modified,
    })
}

fn parse_bool(el: &Element, name: &str, default: bool) -> Result<bool> {
    match el.attr(name) {
        None => Ok(default),
        Some("true") => Ok(true),
        Some("false") => Ok(false),
        Some(other) => Err(Error::SchemaViolation(format!("{name} must be true or false, got {other:?}"))),
    }
}

fn parse_created(el: &Element) -> Result<Timestamp> {
    let raw = el.require("CREATED")?;
    Timestamp::parse_lenient(raw).map_err(|_| Error::SchemaViolation(format!("bad CREATED {raw:?}")))
}

fn parse_datastream(pull: &mut Pull<'_>, el: &Element) -> Result<Datastream> {
    let id = el.require("ID")?.to_string();
    let control_group = ControlGroup::parse(el.require("CONTROL_GROUP")?)?;
    let mut ds = Datastream {
        id,
        control_group,
        mime_type: el.attr("MIMETYPE").unwrap_or_default().to_string(),
        format_uri: el.attr("FORMAT_URI").map(str::to_string),
        state: el.attr("STATE").map_or(Ok(State::Active), State::parse)?,
        versionable: parse_bool(el, "VERSIONABLE", true)?,
        versions: Vec::new(),
    };
    if !el.empty {
        loop {
            match pull.next_significant()? {
                Node::Open(v) if v.is(FOXML_NS, "datastreamVersion") => {
                    let version = parse_datastream_version(pull, &v, &ds)?;
                    ds.versions.push(version);
                }
                Node::Open(v) => {
                    return Err(Error::SchemaViolation(format!("unexpected <{}> in datastream", v.local)))
                }
                Node::Close => break,
                Node::Text(_) => return Err(Error::SchemaViolation("text in datastream".into())),
                Node::Eof => return Err(Error::XmlSyntax("unexpected end of document".into())),
            }
        }
    }
    if ds.versions.is_empty() {
        return Err(Error::SchemaViolation(format!("datastream {} has no versions", ds.id)));
    }
    Ok(ds)
}

fn parse_datastream_version(pull: &mut Pull<'_>, el: &Element, ds: &Datastream) -> Result<DatastreamVersion> {
    let id = el.require("ID")?.to_string();
    let label = el.attr("LABEL").unwrap_or_default().to_string();
    let created = parse_created(el)?;
    let mut location = None;
    if !el.empty {
        loop {
            match pull.next_significant()? {
                Node::Open(c) if c.is(FOXML_NS, "contentLocation") => {
                    let kind = c.require("TYPE")?;
                    let reference = c.require("REF")?.trim().to_string();
                    let loc = match (kind, ds.control_group) {
                        ("INTERNAL_ID", ControlGroup::Managed) => ContentLocation::Internal(reference),
                        (
                            "URL",
                            ControlGroup::Managed | ControlGroup::External | ControlGroup::Redirected,
                        ) => ContentLocation::Url(reference),
                        (kind, cg) => {
                            return Err(Error::SchemaViolation(format!(
                                "{id}: contentLocation TYPE {kind:?} not allowed for control group {}",
                                cg.code()
                            )))
                        }
                    };
                    if !c.empty {
                        pull.skip(&c)?;
                    }
                    set_location(&mut location, loc, &id)?;
                }
                Node::Open(c) if c.is(FOXML_NS, "xmlContent") => {
                    if ds.control_group != ControlGroup::InlineXml && ds.id != AUDIT {
                        return Err(Error::SchemaViolation(format!(
                            "{id}: xmlContent requires control group X"
                        )));
                    }
                    let raw = pull.raw_content(&c)?;
                    check_well_formed(raw)?;
                    set_location(&mut location, ContentLocation::Inline(raw.to_vec()), &id)?;
                }
                Node::Open(c) => {
                    return Err(Error::SchemaViolation(format!(
                        "unexpected <{}> in datastreamVersion",
                        c.local
                    )))
                }
                Node::Close => break,
                Node::Text(_) => return Err(Error::SchemaViolation("text in datastreamVersion".into())),
                Node::Eof => return Err(Error::XmlSyntax("unexpected end of document".into())),
            }
        }
    }
    let location = location.ok_or_else(|| Error::SchemaViolation(format!("{id} has no content")))?;
    Ok(DatastreamVersion {
        id,
        label,
        created,
        location,
    })
}

fn set_location(slot: &mut Option<ContentLocation>, loc: ContentLocation, id: &str) -> Result<()> {
    if slot.replace(loc).is_some() {
        return Err(Error::SchemaViolation(format!("{id} has more than one content element")));
    }
    Ok(())
}

fn parse_disseminator(pull: &mut Pull<'_>, el: &Element) -> Result<Disseminator> {
    let bdef_raw = el.require("BDEF_CONTRACT_PID")?;
    let mut diss = Disseminator {
        id: el.require("ID")?.to_string(),
        bdef: Pid::parse(bdef_raw)
            .map_err(|_| Error::SchemaViolation(format!("bad BDEF_CONTRACT_PID {bdef_raw:?}")))?,
        state: el.attr("STATE").map_or(Ok(State::Active), State::parse)?,
        versionable: parse_bool(el, "VERSIONABLE", true)?,
        versions: Vec::new(),
    };
    if !el.empty {
        loop {
            match pull.next_significant()? {
                Node::Open(v) if v.is(FOXML_NS, "disseminatorVersion") => {
                    diss.versions.push(parse_disseminator_version(pull, &v)?);
                }
                Node::Open(v) => {
                    return Err(Error::SchemaViolation(format!("unexpected <{}> in disseminator", v.local)))
                }
                Node::Close => break,
                Node::Text(_) => return Err(Error::SchemaViolation("text in disseminator".into())),
                Node::Eof => return Err(Error::XmlSyntax("unexpected end of document".into())),
            }
        }
    }
    if diss.versions.is_empty() {
        return Err(Error::SchemaViolation(format!("disseminator {} has no versions", diss.id)));
    }
    Ok(diss)
}

fn parse_disseminator_version(pull: &mut Pull<'_>, el: &Element) -> Result<DisseminatorVersion> {
    let bmech_raw = el.require("BMECH_SERVICE_PID")?;
    let mut version = DisseminatorVersion {
        id: el.require("ID")?.to_string(),
        bmech: Pid::parse(bmech_raw)
            .map_err(|_| Error::SchemaViolation(format!("bad BMECH_SERVICE_PID {bmech_raw:?}")))?,
        label: el.attr("LABEL").unwrap_or_default().to_string(),
        created: parse_created(el)?,
        bindings: BTreeMap::new(),
    };
    if el.empty {
        return Ok(version);
    }
    loop {
        match pull.next_significant()? {
            Node::Open(map) if map.is(FOXML_NS, "serviceInputMap") => {
                if map.empty {
                    continue;
                }
                loop {
                    match pull.next_significant()? {
                        Node::Open(b) if b.is(FOXML_NS, "datastreamBinding") => {
                            let key = b.require("KEY")?.to_string();
                            let binding = DatastreamBinding {
                                datastream_id: b.require("DATASTREAM_ID")?.to_string(),
                                label: b.attr("LABEL").unwrap_or_default().to_string(),
                            };
                            if !b.empty {
                                pull.skip(&b)?;
                            }
                            if version.bindings.insert(key.clone(), binding).is_some() {
                                return Err(Error::SchemaViolation(format!("duplicate binding key {key}")));
                            }
                        }
                        Node::Close => break,
                        _ => return Err(Error::SchemaViolation("unexpected content in serviceInputMap".into())),
                    }
                }
            }
            Node::Close => break,
            _ => {
                return Err(Error::SchemaViolation(
                    "unexpected content in disseminatorVersion".into(),
                ))
            }
        }
    }
    Ok(version)
}

fn parse_audit_datastream(ds: &Datastream) -> Result<Vec<AuditRecord>> {
    match &ds.latest().location {
        ContentLocation::Inline(bytes) => parse_audit_trail(bytes),
        _ => Err(Error::SchemaViolation("AUDIT must carry inline xmlContent".into())),
    }
}

/// Reads `audit:auditTrail` records.
pub fn parse_audit_trail(bytes: &[u8]) -> Result<Vec<AuditRecord>> {
    let mut pull = Pull::new(bytes);
    let root = match pull.next_significant()? {
        Node::Open(el) if el.is(AUDIT_NS, "auditTrail") => el,
        _ => return Err(Error::SchemaViolation("AUDIT content must be audit:auditTrail".into())),
    };
    let mut records = Vec::new();
    if root.empty {
        return Ok(records);
    }
    loop {
        match pull.next_significant()? {
            Node::Open(rec) if rec.is(AUDIT_NS, "record") => {
                records.push(parse_audit_record(&mut pull, &rec)?);
            }
            Node::Close => break,
            _ => return Err(Error::SchemaViolation("unexpected content in auditTrail".into())),
        }
    }
    Ok(records)
}

fn parse_audit_record(pull: &mut Pull<'_>, rec: &Element) -> Result<AuditRecord> {
    let mut fields: BTreeMap<String, String> = BTreeMap::new();
    let mut process_type = None;
    if !rec.empty {
        loop {
            match pull.next_significant()? {
                Node::Open(f) if f.namespace.as_deref() == Some(AUDIT_NS) => {
                    if f.local == "process" {
                        process_type = f.attr("type").map(str::to_string);
                        if !f.empty {
                            pull.skip(&f)?;
                        }
                    } else {
                        let text = pull.text_content(&f)?;
                        fields.insert(f.local.clone(), text);
                    }
                }
                Node::Close => break,
                _ => return Err(Error::SchemaViolation("unexpected content in audit:record".into())),
            }
        }
    }
    let field = |name: &str| fields.get(name).map(|s| s.trim().to_string()).unwrap_or_default();
    let date_raw = field("date");
    let date = Timestamp::parse_lenient(&date_raw)
        .map_err(|_| Error::SchemaViolation(format!("bad audit date {date_raw:?}")))?;
    Ok(AuditRecord {
        id: rec.require("ID")?.to_string(),
        process_type: process_type.unwrap_or_else(|| AUDIT_PROCESS.to_string()),
        action: field("action"),
        component_id: field("componentID"),
        responsibility: field("responsibility"),
        date,
        justification: fields.get("justification").cloned().unwrap_or_default(),
    })
}

/// Canonical FOXML for a valid object.
pub fn serialize_foxml(obj: &DigitalObject) -> Result<Vec<u8>> {
    let report = validate_object(obj);
    if !report.is_empty() {
        return Err(report.into_error());
    }
    Ok(write_foxml(obj))
}

fn write_foxml(obj: &DigitalObject) -> Vec<u8> {
    let mut out: Vec<u8> = Vec::with_capacity(4096);
    let line = |out: &mut Vec<u8>, depth: usize, text: &str| {
        out.extend(std::iter::repeat(b' ').take(depth * 2));
        out.extend_from_slice(text.as_bytes());
        out.push(b'\n');
    };
    let a = escape_attr;

    line(&mut out, 0, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    line(
        &mut out,
        0,
        &format!(
            r#"<foxml:digitalObject PID="{}" xmlns:foxml="{FOXML_NS}" xmlns:xsi="{XSI_NS}" xsi:schemaLocation="{SCHEMA_LOCATION}">"#,
            a(&obj.pid.to_string())
        ),
    );
    let p = &obj.properties;
    line(&mut out, 1, "<foxml:objectProperties>");
    for (name, value) in [
        (PROP_TYPE, OBJECT_TYPE.to_string()),
        (PROP_STATE, p.state.code().to_string()),
        (PROP_LABEL, p.label.clone()),
        (PROP_CREATED, p.created.to_string()),
        (PROP_LAST_MODIFIED, p.last_modified.to_string()),
        (PROP_CONTENT_MODEL, p.content_model.clone()),
    ] {
        line(
            &mut out,
            2,
            &format!(r#"<foxml:property NAME="{name}" VALUE="{}"/>"#, a(&value)),
        );
    }
    line(&mut out, 1, "</foxml:objectProperties>");

    for ds in obj.datastreams.values() {
        let format_uri = ds
            .format_uri
            .as_deref()
            .map(|f| format!(r#" FORMAT_URI="{}""#, a(f)))
            .unwrap_or_default();
        line(
            &mut out,
            1,
            &format!(
                r#"<foxml:datastream ID="{}" CONTROL_GROUP="{}" MIMETYPE="{}"{format_uri} STATE="{}" VERSIONABLE="{}">"#,
                a(&ds.id),
                ds.control_group.code(),
                a(&ds.mime_type),
                ds.state.code(),
                ds.versionable
            ),
        );
        for v in &ds.versions {
            line(
                &mut out,
                2,
                &format!(
                    r#"<foxml:datastreamVersion ID="{}" LABEL="{}" CREATED="{}">"#,
                    a(&v.id),
                    a(&v.label),
                    v.created
                ),
            );
            match &v.location {
                ContentLocation::Internal(id) => line(
                    &mut out,
                    3,
                    &format!(r#"<foxml:contentLocation TYPE="INTERNAL_ID" REF="{}"/>"#, a(id)),
                ),
                ContentLocation::Url(u) => line(
                    &mut out,
                    3,
                    &format!(r#"<foxml:contentLocation TYPE="URL" REF="{}"/>"#, a(u)),
                ),
                ContentLocation::Inline(bytes) => {
                    out.extend_from_slice(b"      <foxml:xmlContent>");
                    out.extend_from_slice(bytes);
                    out.extend_from_slice(b"</foxml:xmlContent>\n");
                }
            }
            line(&mut out, 2, "</foxml:datastreamVersion>");
        }
        line(&mut out, 1, "</foxml:datastream>");
    }

    for diss in obj.disseminators.values() {
        line(
            &mut out,
            1,
            &format!(
                r#"<foxml:disseminator ID="{}" BDEF_CONTRACT_PID="{}" STATE="{}" VERSIONABLE="{}">"#,
                a(&diss.id),
                a(&diss.bdef.to_string()),
                diss.state.code(),
                diss.versionable
            ),
        );
        for v in &diss.versions {
            line(
                &mut out,
                2,
                &format!(
                    r#"<foxml:disseminatorVersion ID="{}" BMECH_SERVICE_PID="{}" LABEL="{}" CREATED="{}">"#,
                    a(&v.id),
                    a(&v.bmech.to_string()),
                    a(&v.label),
                    v.created
                ),
            );
            line(&mut out, 3, "<foxml:serviceInputMap>");
            for (key, b) in &v.bindings {
                line(
                    &mut out,
                    4,
                    &format!(
                        r#"<foxml:datastreamBinding KEY="{}" DATASTREAM_ID="{}" LABEL="{}"/>"#,
                        a(key),
                        a(&b.datastream_id),
                        a(&b.label)
                    ),
                );
            }
            line(&mut out, 3, "</foxml:serviceInputMap>");
            line(&mut out, 2, "</foxml:disseminatorVersion>");
        }
        line(&mut out, 1, "</foxml:disseminator>");
    }
    line(&mut out, 0, "</foxml:digitalObject>");
    out
}

/// The inline XML fragment of a datastream's resolved version.
pub fn extract_inline_xml(obj: &DigitalObject, ds_id: &str, as_of: Option<Timestamp>) -> Result<Vec<u8>> {
    let ds = obj
        .datastreams
        .get(ds_id)
        .ok_or_else(|| Error::NotFound(format!("{}/{ds_id}", obj.pid)))?;
    if ds.control_group != ControlGroup::InlineXml && ds.id != AUDIT {
        return Err(Error::WrongControlGroup(ds_id.to_string()));
    }
    match &resolve_version(ds, as_of)?.location {
        ContentLocation::Inline(bytes) => Ok(bytes.clone()),
        _ => Err(Error::WrongControlGroup(ds_id.to_string())),
    }
}

/// Minimal `oai_dc` record carrying only the identifier.
pub fn minimal_dc(pid: &Pid, title: Option<&str>) -> Vec<u8> {
    let title = title
        .map(|t| format!("\n          <dc:title>{}</dc:title>", escape_text(t)))
        .unwrap_or_default();
    format!(
        "\n        <oai_dc:dc xmlns:oai_dc=\"http://www.openarchives.org/OAI/2.0/oai_dc/\" xmlns:dc=\"http://purl.org/dc/elements/1.1/\">{title}\n          <dc:identifier>{}</dc:identifier>\n        </oai_dc:dc>\n      ",
        escape_text(&pid.to_string())
    )
    .into_bytes()
}
