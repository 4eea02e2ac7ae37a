use std::fmt;

use super::object::*;
use super::pid::is_component_id;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub kind: &'static str,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.detail)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn kinds(&self) -> Vec<&'static str> {
        self.violations.iter().map(|v| v.kind).collect()
    }

    fn push(&mut self, kind: &'static str, detail: impl Into<String>) {
        self.violations.push(Violation {
            kind,
            detail: detail.into(),
        });
    }

    pub fn into_error(self) -> crate::Error {
        crate::Error::InvariantViolation(self.violations.iter().map(|v| v.to_string()).collect())
    }
}

pub fn validate_object(obj: &DigitalObject) -> ValidationReport {
    let mut report = ValidationReport::default();
    let props = &obj.properties;

    if props.created > props.last_modified {
        report.push("date order", "createdDate is after lastModifiedDate");
    }
    let derived = obj.derived_last_modified();
    if props.last_modified != derived {
        report.push(
            "last modified",
            format!("lastModifiedDate {} but latest event is {derived}", props.last_modified),
        );
    }

    for (key, ds) in &obj.datastreams {
        check_datastream(obj, key, ds, &mut report);
    }
    for (key, diss) in &obj.disseminators {
        check_disseminator(obj, key, diss, &mut report);
    }
    check_audit(obj, &mut report);
    report
}

fn check_component_id(key: &str, id: &str, obj: &DigitalObject, report: &mut ValidationReport) {
    if key != id || !is_component_id(id) {
        report.push("component id", format!("bad component id {id:?} under key {key:?}"));
    }
    if obj.datastreams.contains_key(id) && obj.disseminators.contains_key(id) {
        report.push("id collision", format!("{id} is both a datastream and a disseminator"));
    }
}

fn check_version_ids<'a>(
    component: &str,
    ids: impl Iterator<Item = &'a str>,
    report: &mut ValidationReport,
) {
    let prefix = format!("{component}.");
    for id in ids {
        let ok = id
            .strip_prefix(&prefix)
            .is_some_and(|n| !n.is_empty() && n.bytes().all(|b| b.is_ascii_digit()));
        if !ok {
            report.push("version id", format!("{id} is not of the form {component}.n"));
        }
    }
}

fn check_strictly_increasing(
    component: &str,
    dates: impl Iterator<Item = super::Timestamp>,
    report: &mut ValidationReport,
) {
    let dates: Vec<_> = dates.collect();
    if dates.windows(2).any(|w| w[0] >= w[1]) {
        report.push("version order", format!("{component} versions are not in increasing date order"));
    }
}

fn check_datastream(obj: &DigitalObject, key: &str, ds: &Datastream, report: &mut ValidationReport) {
    check_component_id(key, &ds.id, obj, report);
    if ds.versions.is_empty() {
        report.push("empty versions", format!("{} has no versions", ds.id));
        return;
    }
    check_version_ids(&ds.id, ds.versions.iter().map(|v| v.id.as_str()), report);
    check_strictly_increasing(&ds.id, ds.versions.iter().map(|v| v.created), report);
    if !ds.versionable && ds.versions.len() != 1 {
        report.push("versionable", format!("{} is not versionable but has {} versions", ds.id, ds.versions.len()));
    }
    // AUDIT is system-generated inline content whatever its declared group.
    if ds.id == AUDIT {
        return;
    }
    if matches!(ds.id.as_str(), DC | RELS_EXT) && ds.control_group != ControlGroup::InlineXml {
        report.push("reserved datastream", format!("{} must be inline XML", ds.id));
    }
    for v in &ds.versions {
        match (&v.location, ds.control_group) {
            (ContentLocation::Internal(id), ControlGroup::Managed) => {
                let expected = internal_id(&obj.pid, &ds.id, &v.id);
                if *id != expected {
                    report.push("internal id", format!("{} refers to {id}, expected {expected}", v.id));
                }
            }
            (ContentLocation::Url(u), ControlGroup::External | ControlGroup::Redirected) => {
                if url::Url::parse(u).is_err() {
                    report.push("location url", format!("{} has a non-absolute URL {u:?}", v.id));
                }
            }
            (ContentLocation::Inline(_), ControlGroup::InlineXml) => {}
            _ => report.push(
                "location mismatch",
                format!("{} location does not match control group {}", v.id, ds.control_group.code()),
            ),
        }
    }
}

fn check_disseminator(
    obj: &DigitalObject,
    key: &str,
    diss: &Disseminator,
    report: &mut ValidationReport,
) {
    check_component_id(key, &diss.id, obj, report);
    if diss.versions.is_empty() {
        report.push("empty versions", format!("{} has no versions", diss.id));
        return;
    }
    check_version_ids(&diss.id, diss.versions.iter().map(|v| v.id.as_str()), report);
    check_strictly_increasing(&diss.id, diss.versions.iter().map(|v| v.created), report);
    if !diss.versionable && diss.versions.len() != 1 {
        report.push("versionable", format!("{} is not versionable but has {} versions", diss.id, diss.versions.len()));
    }
    for v in &diss.versions {
        for (binding_key, binding) in &v.bindings {
            let existed = obj
                .datastreams
                .get(&binding.datastream_id)
                .is_some_and(|ds| {
                    // an unversionable datastream is replaced in place, so only its existence counts
                    !ds.versionable || ds.versions.first().is_some_and(|first| first.created <= v.created)
                });
            if !existed {
                report.push(
                    "dangling binding",
                    format!("{} binds {binding_key} to missing datastream {}", v.id, binding.datastream_id),
                );
            }
        }
    }
}

fn check_audit(obj: &DigitalObject, report: &mut ValidationReport) {
    for (i, r) in obj.audit_trail.iter().enumerate() {
        let expected = format!("AUDREC{}", i + 1);
        if r.id != expected {
            report.push("audit id", format!("record {} should be {expected}", r.id));
        }
    }
    if obj.audit_trail.windows(2).any(|w| w[0].date > w[1].date) {
        report.push("audit order", "audit record dates decrease");
    }
    let rendered = render_audit_trail(&obj.audit_trail);
    match obj.datastreams.get(AUDIT) {
        Some(ds) => {
            let matches = ds.versions.len() == 1
                && matches!(&ds.versions[0].location, ContentLocation::Inline(b) if *b == rendered);
            if !matches {
                report.push("audit content", "AUDIT datastream does not match the audit trail");
            }
        }
        None if !obj.audit_trail.is_empty() => {
            report.push("audit content", "audit trail present without an AUDIT datastream");
        }
        None => {}
    }
}
