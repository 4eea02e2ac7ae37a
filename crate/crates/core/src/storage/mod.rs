//! Durable object registry and managed-content store with the management
//! (API-M) operations: versioning on modify, an audit record per change,
//! and an index update committed in the same per-object critical section.

mod fetch;
mod files;
mod search;
mod txn;

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::Arc;

use im::OrdMap;
use parking_lot::{Mutex, RwLock};

pub use fetch::{Fetched, Fetcher, HttpFetcher, DEFAULT_FETCH_TIMEOUT};
pub use search::{SearchFilter, SearchHit, SearchResult};
pub use txn::FaultPoint;

use crate::dissemination::{BDefContract, BMechBinding};
use crate::error::{Error, Result};
use crate::foxml::{minimal_dc, parse_foxml, parse_foxml_unchecked, serialize_foxml};
use crate::index::{extract_triples, ContractLookup, Snapshot, TripleIndex, DEFAULT_ROW_LIMIT};
use crate::model::{
    internal_id, is_component_id, validate_object, AuditRecord, Clock, ContentLocation, ControlGroup, Datastream,
    DatastreamBinding, DatastreamVersion, DigitalObject, Disseminator, DisseminatorVersion, Pid, State, SystemClock,
    Timestamp, AUDIT, AUDIT_PROCESS, DC,
};
use crate::rdf::{vocab, Triple};
use crate::xml::{check_well_formed, strip_declaration};
use files::DiskLayout;
use txn::UndoLog;

pub const DEFAULT_BASE_URL: &str = "http://localhost:8080/fedora";

pub struct RepositoryOptions {
    /// Public base URL, used to render representation URLs.
    pub base_url: String,
    pub fetcher: Arc<dyn Fetcher>,
    pub clock: Arc<dyn Clock>,
    /// Cap on index query results.
    pub row_limit: usize,
}

impl Default for RepositoryOptions {
    fn default() -> Self {
        RepositoryOptions {
            base_url: DEFAULT_BASE_URL.to_string(),
            fetcher: Arc::new(HttpFetcher::default()),
            clock: Arc::new(SystemClock),
            row_limit: DEFAULT_ROW_LIMIT,
        }
    }
}

/// Outcome of a component or property mutation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChangeResult {
    pub pid: Pid,
    pub component_id: String,
    pub new_version_id: Option<String>,
    pub audit_record_id: String,
    pub timestamp: Timestamp,
}

/// Content supplied for a new datastream version.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NewContent {
    Bytes(Vec<u8>),
    Url(String),
}

#[derive(Debug, Clone)]
pub struct NewDatastream {
    pub id: String,
    pub control_group: ControlGroup,
    pub mime_type: String,
    pub label: String,
    pub format_uri: Option<String>,
    pub versionable: bool,
    pub content: NewContent,
}

#[derive(Debug, Clone, Default)]
pub struct DatastreamChange {
    /// New content; `None` carries the current content into the new version.
    pub content: Option<NewContent>,
    pub label: Option<String>,
    pub mime_type: Option<String>,
}

#[derive(Debug, Clone)]
pub struct NewDisseminator {
    pub id: String,
    pub bdef: Pid,
    pub bmech: Pid,
    pub label: String,
    /// Binding key → datastream id.
    pub bindings: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default)]
pub struct DisseminatorChange {
    pub bmech: Option<Pid>,
    pub label: Option<String>,
    pub bindings: Option<BTreeMap<String, String>>,
}

/// What a datastream request resolves to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DatastreamOutput {
    Content { mime_type: String, bytes: Vec<u8> },
    Redirect { url: String },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RebuildStats {
    pub objects: usize,
    pub triples: usize,
    /// File name and error for each object that could not be indexed.
    pub failures: Vec<(String, String)>,
}

type ObjectMap = OrdMap<Pid, Arc<DigitalObject>>;

/// Contract lookup over a set of objects.
struct Contracts<'a>(&'a ObjectMap);

impl ContractLookup for Contracts<'_> {
    fn method_names(&self, bdef: &Pid) -> Option<Vec<String>> {
        let obj = self.0.get(bdef)?;
        let contract = BDefContract::from_object(obj, None).ok()?;
        Some(contract.methods.into_iter().map(|m| m.name).collect())
    }
}

/// Working copy of one object during a mutation.
struct Draft {
    obj: DigitalObject,
    now: Timestamp,
    stage: Vec<(String, Vec<u8>)>,
    discard: Vec<String>,
}

struct Change {
    component_id: String,
    action: &'static str,
    new_version_id: Option<String>,
}

pub struct Repository {
    files: DiskLayout,
    objects: RwLock<ObjectMap>,
    index: TripleIndex,
    locks: Mutex<HashMap<Pid, Arc<Mutex<()>>>>,
    rebuild_gate: RwLock<()>,
    options: RepositoryOptions,
    fault: Mutex<Option<FaultPoint>>,
}

fn managed_ids(obj: &DigitalObject) -> impl Iterator<Item = &str> {
    obj.datastreams
        .values()
        .filter(|ds| ds.control_group == ControlGroup::Managed)
        .flat_map(|ds| ds.versions.iter())
        .filter_map(|v| match &v.location {
            ContentLocation::Internal(id) => Some(id.as_str()),
            _ => None,
        })
}

fn invariant(e: Error) -> Error {
    match e {
        Error::InvariantViolation(_) => e,
        other => Error::InvariantViolation(vec![format!("{}: {other}", other.code())]),
    }
}

impl Repository {
    /// Opens (creating if needed) a repository rooted at `root` and builds
    /// the index from the stored objects.
    pub fn open(root: &Path, options: RepositoryOptions) -> Result<Self> {
        let repo = Repository {
            files: DiskLayout::open(root)?,
            objects: RwLock::new(OrdMap::new()),
            index: TripleIndex::new(),
            locks: Mutex::new(HashMap::new()),
            rebuild_gate: RwLock::new(()),
            options,
            fault: Mutex::new(None),
        };
        let stats = repo.rebuild_index()?;
        for (file, error) in &stats.failures {
            tracing::warn!(%file, %error, "object skipped while indexing");
        }
        Ok(repo)
    }

    pub fn base_url(&self) -> &str {
        self.options.base_url.trim_end_matches('/')
    }

    pub fn row_limit(&self) -> usize {
        self.options.row_limit
    }

    pub fn now(&self) -> Timestamp {
        self.options.clock.now()
    }

    pub fn fetcher(&self) -> &dyn Fetcher {
        self.options.fetcher.as_ref()
    }

    pub fn index(&self) -> &TripleIndex {
        &self.index
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.index.snapshot()
    }

    /// Arms (or with `None` disarms) an abort at the given step of every
    /// subsequent write.
    pub fn inject_fault(&self, point: Option<FaultPoint>) {
        *self.fault.lock() = point;
    }

    fn checkpoint(&self, point: FaultPoint) -> Result<()> {
        if *self.fault.lock() == Some(point) {
            return Err(Error::FaultInjected(point.to_string()));
        }
        Ok(())
    }

    fn pid_lock(&self, pid: &Pid) -> Arc<Mutex<()>> {
        self.locks.lock().entry(pid.clone()).or_default().clone()
    }

    pub fn object(&self, pid: &Pid) -> Result<Arc<DigitalObject>> {
        self.objects
            .read()
            .get(pid)
            .cloned()
            .ok_or_else(|| Error::NotFound(pid.to_string()))
    }

    pub fn contains(&self, pid: &Pid) -> bool {
        self.objects.read().contains_key(pid)
    }

    pub fn pids(&self) -> Vec<Pid> {
        self.objects.read().keys().cloned().collect()
    }

    /// Internal ids of every stored content file.
    pub fn content_ids(&self) -> Result<Vec<String>> {
        Ok(self.files.content_ids()?)
    }

    /// Stores managed content ahead of an ingest that references it.
    pub fn stage_content(&self, internal_id: &str, bytes: &[u8]) -> Result<()> {
        if internal_id.is_empty() || internal_id.contains('/') {
            return Err(Error::InvalidArgument(format!("bad internal id {internal_id:?}")));
        }
        Ok(self.files.write_content(internal_id, bytes)?)
    }

    pub fn read_content(&self, internal_id: &str) -> Result<Vec<u8>> {
        self.files
            .read_content(internal_id)?
            .ok_or_else(|| Error::MissingContent(internal_id.to_string()))
    }

    /// Writes `new` (or removes the object when `None`) together with staged
    /// content, then publishes the cache entry and index triples.
    fn commit(&self, pid: &Pid, new: Option<DigitalObject>, stage: Vec<(String, Vec<u8>)>, discard: Vec<String>) -> Result<()> {
        let mut view = self.objects.read().clone();
        let new = new.map(Arc::new);
        match &new {
            Some(obj) => view.insert(pid.clone(), obj.clone()),
            None => view.remove(pid),
        };
        let contracts = Contracts(&view);
        let mut changes: Vec<(Pid, Vec<Triple>)> = Vec::new();
        changes.push((
            pid.clone(),
            match &new {
                Some(obj) => extract_triples(obj, &contracts)?,
                None => Vec::new(),
            },
        ));
        for (other, obj) in view.iter() {
            if other != pid && obj.disseminators.values().any(|d| &d.bdef == pid) {
                changes.push((other.clone(), extract_triples(obj, &contracts)?));
            }
        }
        let bytes = new.as_deref().map(serialize_foxml).transpose()?;

        self.checkpoint(FaultPoint::Prepared)?;
        let mut log = UndoLog::new(&self.files);
        let durable = (|| -> Result<()> {
            for (id, content) in &stage {
                log.write_content(id, content)?;
            }
            self.checkpoint(FaultPoint::ContentStaged)?;
            match &bytes {
                Some(b) => log.write_object(pid, b)?,
                None => log.remove_object(pid)?,
            }
            self.checkpoint(FaultPoint::ObjectWritten)?;
            self.checkpoint(FaultPoint::BeforeCommit)
        })();
        if let Err(e) = durable {
            log.rollback();
            return Err(e);
        }
        log.commit();

        {
            let mut objects = self.objects.write();
            match new {
                Some(obj) => objects.insert(pid.clone(), obj),
                None => objects.remove(pid),
            };
        }
        self.index.commit(changes);

        for id in discard {
            if let Err(e) = self.files.remove_content(&id) {
                tracing::warn!(%id, error = %e, "could not remove discarded content");
            }
        }
        Ok(())
    }

    /// Parses, validates and stores a new object. Managed content given by
    /// URL is fetched and internalized; content given by internal id must
    /// already be staged.
    pub fn ingest(&self, xml: &[u8], _principal: &str) -> Result<Pid> {
        let mut obj = parse_foxml_unchecked(xml)?;
        let pid = obj.pid.clone();
        let _gate = self.rebuild_gate.read();
        let lock = self.pid_lock(&pid);
        let _guard = lock.lock();
        if self.contains(&pid) {
            return Err(Error::DuplicatePid(pid.to_string()));
        }

        if !obj.datastreams.contains_key(DC) {
            let title = (!obj.properties.label.is_empty()).then_some(obj.properties.label.as_str());
            let dc = Datastream {
                id: DC.to_string(),
                control_group: ControlGroup::InlineXml,
                mime_type: "text/xml".to_string(),
                format_uri: None,
                state: State::Active,
                versionable: true,
                versions: vec![DatastreamVersion {
                    id: format!("{DC}.0"),
                    label: "Dublin Core Record".to_string(),
                    created: obj.properties.created,
                    location: ContentLocation::Inline(minimal_dc(&pid, title)),
                }],
            };
            obj.datastreams.insert(DC.to_string(), dc);
        }

        let mut stage = Vec::new();
        for ds in obj.datastreams.values_mut() {
            if ds.control_group != ControlGroup::Managed {
                continue;
            }
            for v in &mut ds.versions {
                if let ContentLocation::Url(url) = &v.location {
                    let fetched = self.options.fetcher.fetch(url)?;
                    let id = internal_id(&pid, &ds.id, &v.id);
                    stage.push((id.clone(), fetched.bytes));
                    v.location = ContentLocation::Internal(id);
                }
            }
        }
        for id in managed_ids(&obj) {
            if !self.files.has_content(id) && !stage.iter().any(|(s, _)| s == id) {
                return Err(Error::MissingContent(id.to_string()));
            }
        }

        if obj.is_bdef() {
            BDefContract::from_object(&obj, None).map_err(invariant)?;
        }
        if obj.is_bmech() {
            let mech = BMechBinding::from_object(&obj, None).map_err(invariant)?;
            if let Some(bdef) = self.objects.read().get(&mech.bdef) {
                let contract = BDefContract::from_object(bdef, None).map_err(invariant)?;
                mech.check_against(&contract)?;
            }
        }
        crate::index::extract_relation_triples(&obj).map_err(invariant)?;
        obj.normalize();
        let report = validate_object(&obj);
        if !report.is_empty() {
            return Err(report.into_error());
        }
        self.commit(&pid, Some(obj), stage, Vec::new())?;
        Ok(pid)
    }

    /// Canonical FOXML of the stored object.
    pub fn export(&self, pid: &Pid) -> Result<Vec<u8>> {
        serialize_foxml(&*self.object(pid)?)
    }

    /// Removes the object, its managed content and its triples.
    pub fn purge_object(&self, pid: &Pid, _principal: &str) -> Result<()> {
        let _gate = self.rebuild_gate.read();
        let lock = self.pid_lock(pid);
        let _guard = lock.lock();
        let current = self.object(pid)?;
        let discard = managed_ids(&current).map(str::to_string).collect();
        self.commit(pid, None, Vec::new(), discard)
    }

    /// Runs `edit` on a copy of the object, appends the audit record and
    /// commits the result.
    fn mutate<F>(&self, pid: &Pid, principal: &str, justification: &str, edit: F) -> Result<ChangeResult>
    where
        F: FnOnce(&Self, &mut Draft) -> Result<Change>,
    {
        let _gate = self.rebuild_gate.read();
        let lock = self.pid_lock(pid);
        let _guard = lock.lock();
        let current = self.object(pid)?;
        let now = std::cmp::max(self.options.clock.now(), current.properties.last_modified.plus_seconds(1));
        let mut draft = Draft {
            obj: (*current).clone(),
            now,
            stage: Vec::new(),
            discard: Vec::new(),
        };
        let change = edit(self, &mut draft)?;
        let audit_record_id = draft.obj.next_audit_id();
        draft.obj.audit_trail.push(AuditRecord {
            id: audit_record_id.clone(),
            process_type: AUDIT_PROCESS.to_string(),
            action: change.action.to_string(),
            component_id: change.component_id.clone(),
            responsibility: principal.to_string(),
            date: now,
            justification: justification.to_string(),
        });
        draft.obj.normalize();
        let report = validate_object(&draft.obj);
        if !report.is_empty() {
            return Err(report.into_error());
        }
        self.commit(pid, Some(draft.obj), draft.stage, draft.discard)?;
        Ok(ChangeResult {
            pid: pid.clone(),
            component_id: change.component_id,
            new_version_id: change.new_version_id,
            audit_record_id,
            timestamp: now,
        })
    }

    /// Turns supplied content into a version location, staging managed bytes.
    fn place_content(
        &self,
        draft: &mut Draft,
        ds_id: &str,
        version_id: &str,
        group: ControlGroup,
        content: NewContent,
    ) -> Result<ContentLocation> {
        match (group, content) {
            (ControlGroup::InlineXml, NewContent::Bytes(bytes)) => {
                let body = strip_declaration(&bytes);
                check_well_formed(body)?;
                Ok(ContentLocation::Inline(body.to_vec()))
            }
            (ControlGroup::Managed, content) => {
                let bytes = match content {
                    NewContent::Bytes(b) => b,
                    NewContent::Url(u) => self.options.fetcher.fetch(&u)?.bytes,
                };
                let id = internal_id(&draft.obj.pid, ds_id, version_id);
                draft.stage.push((id.clone(), bytes));
                Ok(ContentLocation::Internal(id))
            }
            (ControlGroup::External | ControlGroup::Redirected, NewContent::Url(u)) => {
                url::Url::parse(&u).map_err(|e| Error::InvalidArgument(format!("{u}: {e}")))?;
                Ok(ContentLocation::Url(u))
            }
            (group, _) => Err(Error::InvalidArgument(format!(
                "control group {} does not accept this kind of content",
                group.code()
            ))),
        }
    }

    pub fn add_datastream(&self, pid: &Pid, spec: NewDatastream, principal: &str) -> Result<ChangeResult> {
        self.mutate(pid, principal, "", |repo, draft| {
            if spec.id == AUDIT {
                return Err(Error::ReservedId(spec.id));
            }
            if !is_component_id(&spec.id) {
                return Err(Error::InvalidArgument(format!("bad datastream id {:?}", spec.id)));
            }
            if draft.obj.datastreams.contains_key(&spec.id) || draft.obj.disseminators.contains_key(&spec.id) {
                return Err(Error::DuplicateComponent(spec.id));
            }
            let version_id = format!("{}.0", spec.id);
            let location = repo.place_content(draft, &spec.id, &version_id, spec.control_group, spec.content)?;
            draft.obj.datastreams.insert(
                spec.id.clone(),
                Datastream {
                    id: spec.id.clone(),
                    control_group: spec.control_group,
                    mime_type: spec.mime_type,
                    format_uri: spec.format_uri,
                    state: State::Active,
                    versionable: spec.versionable,
                    versions: vec![DatastreamVersion {
                        id: version_id.clone(),
                        label: spec.label,
                        created: draft.now,
                        location,
                    }],
                },
            );
            Ok(Change {
                component_id: spec.id,
                action: "addDatastream",
                new_version_id: Some(version_id),
            })
        })
    }

    pub fn modify_datastream(
        &self,
        pid: &Pid,
        ds_id: &str,
        change: DatastreamChange,
        principal: &str,
        justification: &str,
    ) -> Result<ChangeResult> {
        self.mutate(pid, principal, justification, |repo, draft| {
            if ds_id == AUDIT {
                return Err(Error::ReservedId(ds_id.to_string()));
            }
            let ds = draft
                .obj
                .datastreams
                .get(ds_id)
                .ok_or_else(|| Error::NotFound(format!("{pid}/{ds_id}")))?
                .clone();
            let version_id = ds.next_version_id();
            let latest = ds.latest();
            let content = match change.content {
                Some(c) => c,
                None => match &latest.location {
                    ContentLocation::Internal(id) => NewContent::Bytes(repo.read_content(id)?),
                    ContentLocation::Url(u) => NewContent::Url(u.clone()),
                    ContentLocation::Inline(b) => NewContent::Bytes(b.clone()),
                },
            };
            let location = repo.place_content(draft, ds_id, &version_id, ds.control_group, content)?;
            let version = DatastreamVersion {
                id: version_id.clone(),
                label: change.label.unwrap_or_else(|| latest.label.clone()),
                created: draft.now,
                location,
            };
            let target = draft.obj.datastreams.get_mut(ds_id).expect("checked above");
            if let Some(mime) = change.mime_type {
                target.mime_type = mime;
            }
            if target.versionable {
                target.versions.push(version);
            } else {
                for old in target.versions.drain(..) {
                    if let ContentLocation::Internal(id) = old.location {
                        draft.discard.push(id);
                    }
                }
                target.versions.push(version);
            }
            let action = if ds.control_group == ControlGroup::InlineXml {
                "modifyDatastreamByValue"
            } else {
                "modifyDatastreamByRef"
            };
            Ok(Change {
                component_id: ds_id.to_string(),
                action,
                new_version_id: Some(version_id),
            })
        })
    }

    pub fn purge_datastream(&self, pid: &Pid, ds_id: &str, principal: &str) -> Result<ChangeResult> {
        self.mutate(pid, principal, "", |_, draft| {
            if ds_id == DC || ds_id == AUDIT {
                return Err(Error::ReservedId(ds_id.to_string()));
            }
            if !draft.obj.datastreams.contains_key(ds_id) {
                return Err(Error::NotFound(format!("{pid}/{ds_id}")));
            }
            let bound = draft
                .obj
                .disseminators
                .values()
                .flat_map(|d| d.versions.iter())
                .any(|v| v.bindings.values().any(|b| b.datastream_id == ds_id));
            if bound {
                return Err(Error::BoundDatastream(ds_id.to_string()));
            }
            let removed = draft.obj.datastreams.shift_remove(ds_id).expect("checked above");
            for v in removed.versions {
                if let ContentLocation::Internal(id) = v.location {
                    draft.discard.push(id);
                }
            }
            Ok(Change {
                component_id: ds_id.to_string(),
                action: "purgeDatastream",
                new_version_id: None,
            })
        })
    }

    /// Checks the BDef/BMech pair and the binding map for a disseminator.
    fn disseminator_version(
        &self,
        obj: &DigitalObject,
        bdef: &Pid,
        bmech: &Pid,
        bindings: &BTreeMap<String, String>,
    ) -> Result<BTreeMap<String, DatastreamBinding>> {
        let (bdef_obj, bmech_obj) = {
            let objects = self.objects.read();
            let lookup = |p: &Pid| {
                objects
                    .get(p)
                    .cloned()
                    .ok_or_else(|| Error::MissingDependency(format!("{p} is not in the repository")))
            };
            (lookup(bdef)?, lookup(bmech)?)
        };
        let contract = BDefContract::from_object(&bdef_obj, None)?;
        let mech = BMechBinding::from_object(&bmech_obj, None)?;
        if &mech.bdef != bdef {
            return Err(Error::MissingDependency(format!("{bmech} implements {} not {bdef}", mech.bdef)));
        }
        mech.check_against(&contract)?;
        let needed = mech.input_keys();
        for key in &needed {
            if !bindings.contains_key(*key) {
                return Err(Error::InvalidArgument(format!("binding key {key} is not bound")));
            }
        }
        let mut out = BTreeMap::new();
        for (key, ds_id) in bindings {
            if !needed.contains(key.as_str()) {
                return Err(Error::InvalidArgument(format!("{bmech} has no input {key}")));
            }
            if !obj.datastreams.contains_key(ds_id) {
                return Err(Error::InvalidArgument(format!("binding {key} names missing datastream {ds_id}")));
            }
            out.insert(
                key.clone(),
                DatastreamBinding {
                    datastream_id: ds_id.clone(),
                    label: String::new(),
                },
            );
        }
        Ok(out)
    }

    pub fn add_disseminator(&self, pid: &Pid, spec: NewDisseminator, principal: &str) -> Result<ChangeResult> {
        self.mutate(pid, principal, "", |repo, draft| {
            if !is_component_id(&spec.id) {
                return Err(Error::InvalidArgument(format!("bad disseminator id {:?}", spec.id)));
            }
            if draft.obj.datastreams.contains_key(&spec.id) || draft.obj.disseminators.contains_key(&spec.id) {
                return Err(Error::DuplicateComponent(spec.id));
            }
            let bindings = repo.disseminator_version(&draft.obj, &spec.bdef, &spec.bmech, &spec.bindings)?;
            let version_id = format!("{}.0", spec.id);
            draft.obj.disseminators.insert(
                spec.id.clone(),
                Disseminator {
                    id: spec.id.clone(),
                    bdef: spec.bdef,
                    state: State::Active,
                    versionable: true,
                    versions: vec![DisseminatorVersion {
                        id: version_id.clone(),
                        bmech: spec.bmech,
                        label: spec.label,
                        created: draft.now,
                        bindings,
                    }],
                },
            );
            Ok(Change {
                component_id: spec.id,
                action: "addDisseminator",
                new_version_id: Some(version_id),
            })
        })
    }

    pub fn modify_disseminator(
        &self,
        pid: &Pid,
        diss_id: &str,
        change: DisseminatorChange,
        principal: &str,
        justification: &str,
    ) -> Result<ChangeResult> {
        self.mutate(pid, principal, justification, |repo, draft| {
            let diss = draft
                .obj
                .disseminators
                .get(diss_id)
                .ok_or_else(|| Error::NotFound(format!("{pid}/{diss_id}")))?
                .clone();
            let latest = diss.latest();
            let bmech = change.bmech.unwrap_or_else(|| latest.bmech.clone());
            let requested = change.bindings.unwrap_or_else(|| {
                latest
                    .bindings
                    .iter()
                    .map(|(k, b)| (k.clone(), b.datastream_id.clone()))
                    .collect()
            });
            let mut bindings = repo.disseminator_version(&draft.obj, &diss.bdef, &bmech, &requested)?;
            for (key, binding) in &mut bindings {
                if let Some(prev) = latest.bindings.get(key) {
                    if prev.datastream_id == binding.datastream_id {
                        binding.label = prev.label.clone();
                    }
                }
            }
            let version_id = diss.next_version_id();
            let version = DisseminatorVersion {
                id: version_id.clone(),
                bmech,
                label: change.label.unwrap_or_else(|| latest.label.clone()),
                created: draft.now,
                bindings,
            };
            let target = draft.obj.disseminators.get_mut(diss_id).expect("checked above");
            if !target.versionable {
                target.versions.clear();
            }
            target.versions.push(version);
            Ok(Change {
                component_id: diss_id.to_string(),
                action: "modifyDisseminator",
                new_version_id: Some(version_id),
            })
        })
    }

    pub fn purge_disseminator(&self, pid: &Pid, diss_id: &str, principal: &str) -> Result<ChangeResult> {
        self.mutate(pid, principal, "", |_, draft| {
            if draft.obj.disseminators.shift_remove(diss_id).is_none() {
                return Err(Error::NotFound(format!("{pid}/{diss_id}")));
            }
            Ok(Change {
                component_id: diss_id.to_string(),
                action: "purgeDisseminator",
                new_version_id: None,
            })
        })
    }

    pub fn set_object_property(&self, pid: &Pid, name: &str, value: &str, principal: &str) -> Result<ChangeResult> {
        let property = ObjectProperty::parse(name)?;
        self.mutate(pid, principal, "", |_, draft| {
            let props = &mut draft.obj.properties;
            match property {
                ObjectProperty::State => {
                    props.state = State::parse(value).map_err(|_| Error::InvalidArgument(format!("bad state {value:?}")))?
                }
                ObjectProperty::Label => props.label = value.to_string(),
                ObjectProperty::ContentModel => props.content_model = value.to_string(),
                ObjectProperty::CreatedDate | ObjectProperty::LastModifiedDate => {
                    return Err(Error::ImmutableProperty(name.to_string()))
                }
            }
            Ok(Change {
                component_id: String::new(),
                action: "setObjectProperty",
                new_version_id: None,
            })
        })
    }

    pub fn get_object_property(&self, pid: &Pid, name: &str) -> Result<String> {
        let property = ObjectProperty::parse(name)?;
        let obj = self.object(pid)?;
        let props = &obj.properties;
        Ok(match property {
            ObjectProperty::State => props.state.code().to_string(),
            ObjectProperty::Label => props.label.clone(),
            ObjectProperty::ContentModel => props.content_model.clone(),
            ObjectProperty::CreatedDate => props.created.to_string(),
            ObjectProperty::LastModifiedDate => props.last_modified.to_string(),
        })
    }

    /// Content of the datastream version current at `as_of`.
    pub fn get_datastream_content(&self, pid: &Pid, ds_id: &str, as_of: Option<Timestamp>) -> Result<DatastreamOutput> {
        self.datastream_content(pid, ds_id, as_of, 0)
    }

    pub(crate) fn datastream_content(
        &self,
        pid: &Pid,
        ds_id: &str,
        as_of: Option<Timestamp>,
        depth: usize,
    ) -> Result<DatastreamOutput> {
        let obj = self.object(pid)?;
        let ds = obj
            .datastreams
            .get(ds_id)
            .ok_or_else(|| Error::NotFound(format!("{pid}/{ds_id}")))?;
        let version = crate::model::resolve_version(ds, as_of)?;
        let bytes = match &version.location {
            ContentLocation::Inline(b) => b.trim_ascii().to_vec(),
            ContentLocation::Internal(id) => self.read_content(id)?,
            ContentLocation::Url(url) if ds.control_group == ControlGroup::Redirected => {
                return Ok(DatastreamOutput::Redirect { url: url.clone() })
            }
            ContentLocation::Url(url) => self.fetch_url_at(url, depth)?.bytes,
        };
        Ok(DatastreamOutput::Content {
            mime_type: ds.mime_type.clone(),
            bytes,
        })
    }

    /// Sorted distinct dates of every component version and audit record.
    pub fn get_object_history(&self, pid: &Pid) -> Result<Vec<Timestamp>> {
        let obj = self.object(pid)?;
        let mut dates: Vec<Timestamp> = obj.event_dates().collect();
        dates.sort();
        dates.dedup();
        Ok(dates)
    }

    /// Drops the index and cache, re-reads every stored object and indexes
    /// it. Unreadable objects are reported and skipped.
    pub fn rebuild_index(&self) -> Result<RebuildStats> {
        let _gate = self.rebuild_gate.write();
        let mut stats = RebuildStats::default();
        let mut loaded = ObjectMap::new();
        for path in self.files.object_files()? {
            let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            match std::fs::read(&path).map_err(Error::from).and_then(|b| parse_foxml(&b)) {
                Ok(obj) => {
                    loaded.insert(obj.pid.clone(), Arc::new(obj));
                }
                Err(e) => stats.failures.push((name, format!("{}: {e}", e.code()))),
            }
        }
        let contracts = Contracts(&loaded);
        let mut all = Vec::new();
        let mut indexed = ObjectMap::new();
        for (pid, obj) in loaded.iter() {
            match extract_triples(obj, &contracts) {
                Ok(triples) => {
                    all.push((pid.clone(), triples));
                    indexed.insert(pid.clone(), obj.clone());
                }
                Err(e) => stats.failures.push((format!("{pid}"), format!("{}: {e}", e.code()))),
            }
        }
        stats.objects = indexed.len();
        *self.objects.write() = indexed;
        self.index.replace_all(all);
        stats.triples = self.index.snapshot().len();
        Ok(stats)
    }

    /// Extraction from the stored bytes of every object, for coherence checks.
    pub fn extract_from_storage(&self) -> Result<Vec<Triple>> {
        let objects = self.objects.read().clone();
        let contracts = Contracts(&objects);
        let mut all = Vec::new();
        for pid in objects.keys() {
            let bytes = self
                .files
                .read_object(pid)?
                .ok_or_else(|| Error::NotFound(pid.to_string()))?;
            all.extend(extract_triples(&parse_foxml(&bytes)?, &contracts)?);
        }
        all.sort();
        Ok(all)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ObjectProperty {
    State,
    Label,
    ContentModel,
    CreatedDate,
    LastModifiedDate,
}

impl ObjectProperty {
    /// Accepts short names and full property URIs.
    fn parse(name: &str) -> Result<Self> {
        let short = name
            .strip_prefix(vocab::MODEL)
            .or_else(|| name.strip_prefix(vocab::VIEW))
            .unwrap_or(name);
        Ok(match short {
            "state" => ObjectProperty::State,
            "label" => ObjectProperty::Label,
            "contentModel" => ObjectProperty::ContentModel,
            "createdDate" => ObjectProperty::CreatedDate,
            "lastModifiedDate" => ObjectProperty::LastModifiedDate,
            _ => return Err(Error::UnknownProperty(name.to_string())),
        })
    }
}
