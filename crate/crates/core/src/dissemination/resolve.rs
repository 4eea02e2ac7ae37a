use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::contract::{placeholders, BDefContract, BMechBinding, ParamSpec};
use crate::error::{Error, Result};
use crate::model::{resolve_version, ControlGroup, DigitalObject, ObjectUri, Pid, RepPath, State, Timestamp};
use crate::storage::{DatastreamOutput, Fetched, Repository};
use crate::xml::{escape_attr, escape_text};

/// Nesting limit when a service URL points back into this repository.
const MAX_SELF_DEPTH: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodInfo {
    pub bdef: Pid,
    pub method: String,
    pub params: Vec<ParamSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatastreamProfile {
    pub id: String,
    pub version_id: String,
    pub label: String,
    pub control_group: ControlGroup,
    pub mime_type: String,
    pub created: Timestamp,
    pub uri: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectProfile {
    pub pid: Pid,
    pub label: String,
    pub state: State,
    pub content_model: String,
    pub created: Timestamp,
    pub last_modified: Timestamp,
    pub as_of: Option<Timestamp>,
    pub datastreams: Vec<DatastreamProfile>,
    pub methods: Vec<(MethodInfo, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DispatchPlan {
    pub resolved_url: String,
    pub mime_type: String,
    pub as_of: Option<Timestamp>,
}

fn form_encode(value: &str) -> String {
    url::form_urlencoded::byte_serialize(value.as_bytes()).collect()
}

impl ObjectProfile {
    /// Representation URIs: datastreams first, then methods.
    pub fn representation_uris(&self) -> Vec<String> {
        self.datastreams
            .iter()
            .map(|d| d.uri.clone())
            .chain(self.methods.iter().map(|(_, uri)| uri.clone()))
            .collect()
    }

    pub fn to_xml(&self, base_url: &str) -> String {
        let url = |uri: &str| ObjectUri::parse(uri).map(|u| u.to_url(base_url)).unwrap_or_default();
        let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        let _ = write!(
            out,
            "<objectProfile pid=\"{}\" uri=\"{}\"",
            escape_attr(&self.pid.to_string()),
            escape_attr(&self.pid.uri())
        );
        if let Some(t) = self.as_of {
            let _ = write!(out, " asOfDateTime=\"{t}\"");
        }
        out.push_str(">\n");
        let _ = writeln!(out, "  <label>{}</label>", escape_text(&self.label));
        let _ = writeln!(out, "  <state>{}</state>", self.state.code());
        let _ = writeln!(out, "  <contentModel>{}</contentModel>", escape_text(&self.content_model));
        let _ = writeln!(out, "  <createdDate>{}</createdDate>", self.created);
        let _ = writeln!(out, "  <lastModifiedDate>{}</lastModifiedDate>", self.last_modified);
        out.push_str("  <datastreams>\n");
        for d in &self.datastreams {
            let _ = writeln!(
                out,
                "    <datastream id=\"{}\" versionId=\"{}\" label=\"{}\" controlGroup=\"{}\" mimeType=\"{}\" created=\"{}\" uri=\"{}\" url=\"{}\"/>",
                escape_attr(&d.id),
                escape_attr(&d.version_id),
                escape_attr(&d.label),
                d.control_group.code(),
                escape_attr(&d.mime_type),
                d.created,
                escape_attr(&d.uri),
                escape_attr(&url(&d.uri))
            );
        }
        out.push_str("  </datastreams>\n  <methods>\n");
        for (m, uri) in &self.methods {
            let _ = writeln!(
                out,
                "    <method bdef=\"{}\" name=\"{}\" uri=\"{}\" url=\"{}\">",
                escape_attr(&m.bdef.to_string()),
                escape_attr(&m.method),
                escape_attr(uri),
                escape_attr(&url(uri))
            );
            for p in &m.params {
                let _ = write!(out, "      <param name=\"{}\" required=\"{}\"", escape_attr(&p.name), p.required);
                if let Some(d) = &p.default {
                    let _ = write!(out, " default=\"{}\"", escape_attr(d));
                }
                out.push_str("/>\n");
            }
            out.push_str("    </method>\n");
        }
        out.push_str("  </methods>\n</objectProfile>\n");
        out
    }
}

impl Repository {
    /// Methods of the object's active disseminators that exist at `as_of`.
    /// With `strict`, a missing BDef is an error; otherwise it is skipped.
    fn methods_of(&self, obj: &DigitalObject, as_of: Option<Timestamp>, strict: bool) -> Result<Vec<MethodInfo>> {
        let mut out = Vec::new();
        for diss in obj.disseminators.values() {
            if diss.state != State::Active || resolve_version(diss, as_of).is_err() {
                continue;
            }
            let contract = match self.object(&diss.bdef).and_then(|b| BDefContract::from_object(&b, None)) {
                Ok(c) => c,
                Err(_) if !strict => continue,
                Err(e) => {
                    return Err(match e {
                        Error::NotFound(_) => Error::MissingDependency(format!("{} is not in the repository", diss.bdef)),
                        other => other,
                    })
                }
            };
            for m in contract.methods {
                out.push(MethodInfo {
                    bdef: diss.bdef.clone(),
                    method: m.name,
                    params: m.params,
                });
            }
        }
        Ok(out)
    }

    pub fn list_methods(&self, pid: &Pid, as_of: Option<Timestamp>) -> Result<Vec<MethodInfo>> {
        let obj = self.object(pid)?;
        self.methods_of(&obj, as_of, true)
    }

    pub fn get_object_profile(&self, pid: &Pid, as_of: Option<Timestamp>) -> Result<ObjectProfile> {
        let obj = self.object(pid)?;
        let datastreams = obj
            .datastreams
            .values()
            .filter_map(|ds| {
                let v = resolve_version(ds, as_of).ok()?;
                Some(DatastreamProfile {
                    id: ds.id.clone(),
                    version_id: v.id.clone(),
                    label: v.label.clone(),
                    control_group: ds.control_group,
                    mime_type: ds.mime_type.clone(),
                    created: v.created,
                    uri: ObjectUri::datastream(pid.clone(), &ds.id).to_string(),
                })
            })
            .collect();
        let methods = self
            .methods_of(&obj, as_of, false)?
            .into_iter()
            .map(|m| {
                let uri = ObjectUri::method(pid.clone(), m.bdef.clone(), &m.method).to_string();
                (m, uri)
            })
            .collect();
        let p = &obj.properties;
        Ok(ObjectProfile {
            pid: pid.clone(),
            label: p.label.clone(),
            state: p.state,
            content_model: p.content_model.clone(),
            created: p.created,
            last_modified: p.last_modified,
            as_of,
            datastreams,
            methods,
        })
    }

    /// API-A-LITE URL of a datastream, carrying `as_of` when given.
    pub fn datastream_url(&self, pid: &Pid, ds_id: &str, as_of: Option<Timestamp>) -> String {
        let url = ObjectUri::datastream(pid.clone(), ds_id).to_url(self.base_url());
        match as_of {
            Some(t) => format!("{url}?asOfDateTime={t}"),
            None => url,
        }
    }

    /// Expands the service binding for `method` into a concrete request.
    pub fn resolve_dissemination(
        &self,
        pid: &Pid,
        bdef: &Pid,
        method: &str,
        params: &BTreeMap<String, String>,
        as_of: Option<Timestamp>,
    ) -> Result<DispatchPlan> {
        let obj = self.object(pid)?;
        let diss = obj
            .disseminators
            .values()
            .find(|d| &d.bdef == bdef && d.state == State::Active)
            .ok_or_else(|| Error::NotFound(format!("{pid} has no disseminator for {bdef}")))?;
        let version = resolve_version(diss, as_of)?;
        let missing = |p: &Pid| Error::MissingDependency(format!("{p} is not in the repository"));
        let bdef_obj = self.object(bdef).map_err(|_| missing(bdef))?;
        let contract = BDefContract::from_object(&bdef_obj, None)?;
        let signature = contract
            .method(method)
            .ok_or_else(|| Error::UnknownMethod(format!("{bdef}/{method}")))?;
        let bmech_obj = self.object(&version.bmech).map_err(|_| missing(&version.bmech))?;
        let mech = BMechBinding::from_object(&bmech_obj, None)?;
        let binding = mech
            .binding(method)
            .ok_or_else(|| Error::MissingDependency(format!("{} does not bind {method}", mech.pid)))?;

        let mut values: BTreeMap<&str, String> = BTreeMap::new();
        for p in &signature.params {
            let value = match params.get(&p.name).or(p.default.as_ref()) {
                Some(v) => v.clone(),
                None if p.required => return Err(Error::MissingParameter(p.name.clone())),
                None => String::new(),
            };
            values.insert(&p.name, form_encode(&value));
        }
        for key in &binding.inputs {
            let bound = version
                .bindings
                .get(key)
                .ok_or_else(|| Error::MissingDependency(format!("{}: input {key} is not bound", version.id)))?;
            let ds = obj
                .datastreams
                .get(&bound.datastream_id)
                .ok_or_else(|| Error::MissingDependency(format!("{pid}/{}", bound.datastream_id)))?;
            resolve_version(ds, as_of)?;
            values.insert(key, self.datastream_url(pid, &ds.id, as_of));
        }

        let mut resolved = binding.url_template.clone();
        for name in placeholders(&binding.url_template) {
            let value = values
                .get(name)
                .ok_or_else(|| Error::MissingDependency(format!("{}: unresolvable placeholder {{{name}}}", mech.pid)))?;
            resolved = resolved.replacen(&format!("{{{name}}}"), value, 1);
        }
        Ok(DispatchPlan {
            resolved_url: resolved,
            mime_type: binding.mime_type.clone(),
            as_of,
        })
    }

    /// Issues the planned request. The result has the same shape as a
    /// datastream response.
    pub fn dispatch(&self, plan: &DispatchPlan) -> Result<DatastreamOutput> {
        self.dispatch_at(plan, 0)
    }

    fn dispatch_at(&self, plan: &DispatchPlan, depth: usize) -> Result<DatastreamOutput> {
        let fetched = self.fetch_url_at(&plan.resolved_url, depth)?;
        Ok(DatastreamOutput::Content {
            mime_type: plan.mime_type.clone(),
            bytes: fetched.bytes,
        })
    }

    /// Resolves and dispatches a method dissemination.
    pub fn get_dissemination(
        &self,
        pid: &Pid,
        bdef: &Pid,
        method: &str,
        params: &BTreeMap<String, String>,
        as_of: Option<Timestamp>,
    ) -> Result<DatastreamOutput> {
        let plan = self.resolve_dissemination(pid, bdef, method, params, as_of)?;
        self.dispatch(&plan)
    }

    /// Any representation addressed by URI: the object profile (as XML), a
    /// datastream, or a method dissemination.
    pub fn get_representation(
        &self,
        uri: &ObjectUri,
        params: &BTreeMap<String, String>,
        as_of: Option<Timestamp>,
    ) -> Result<DatastreamOutput> {
        self.representation_at(uri, params, as_of, 0)
    }

    fn representation_at(
        &self,
        uri: &ObjectUri,
        params: &BTreeMap<String, String>,
        as_of: Option<Timestamp>,
        depth: usize,
    ) -> Result<DatastreamOutput> {
        match &uri.path {
            None => Ok(DatastreamOutput::Content {
                mime_type: "application/xml".to_string(),
                bytes: self.get_object_profile(&uri.pid, as_of)?.to_xml(self.base_url()).into_bytes(),
            }),
            Some(RepPath::Datastream(ds)) => self.datastream_content(&uri.pid, ds, as_of, depth),
            Some(RepPath::Method { bdef, method }) => {
                let plan = self.resolve_dissemination(&uri.pid, bdef, method, params, as_of)?;
                self.dispatch_at(&plan, depth)
            }
        }
    }

    /// GET of a URL; URLs under this repository's own access path are
    /// answered in-process.
    pub fn fetch_url(&self, url: &str) -> Result<Fetched> {
        self.fetch_url_at(url, 0)
    }

    pub(crate) fn fetch_url_at(&self, url: &str, depth: usize) -> Result<Fetched> {
        let own_prefix = format!("{}/get/", self.base_url());
        if !url.starts_with(&own_prefix) {
            return self.fetcher().fetch(url);
        }
        if depth >= MAX_SELF_DEPTH {
            return Err(Error::UpstreamFetchFailed(format!("{url}: too many nested self-references")));
        }
        let uri = ObjectUri::from_url(url, self.base_url())?;
        let mut params = BTreeMap::new();
        let mut as_of = None;
        if let Ok(parsed) = url::Url::parse(url) {
            for (k, v) in parsed.query_pairs() {
                if k == "asOfDateTime" {
                    as_of = Some(Timestamp::parse(&v)?);
                } else {
                    params.insert(k.into_owned(), v.into_owned());
                }
            }
        }
        match self.representation_at(&uri, &params, as_of, depth + 1)? {
            DatastreamOutput::Content { mime_type, bytes } => Ok(Fetched {
                mime_type: Some(mime_type),
                bytes,
            }),
            DatastreamOutput::Redirect { url } => self.fetch_url_at(&url, depth + 1),
        }
    }
}
