//! REST surface under `/fedora`: API-A-LITE access, the management subset,
//! index and registry search, and the OAI provider.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, RawQuery, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::Router;
use fcrepo_core::dissemination::ObjectProfile;
use fcrepo_core::index::{answer_query, QueryLanguage, ResultFormat};
use fcrepo_core::model::{ControlGroup, ObjectUri, Pid, Timestamp};
use fcrepo_core::oai::{OaiConfig, OaiProvider};
use fcrepo_core::storage::{
    ChangeResult, DatastreamChange, DatastreamOutput, DisseminatorChange, NewContent, NewDatastream, NewDisseminator,
    Repository, SearchFilter,
};
use fcrepo_core::xml::{escape_attr, escape_text};
use fcrepo_core::Error;

pub const PRINCIPAL_HEADER: &str = "x-principal";
const XML: &str = "application/xml; charset=utf-8";
const DEFAULT_MAX_RESULTS: usize = 100;

#[derive(Clone)]
pub struct AppState {
    pub repo: Arc<Repository>,
    pub oai: Arc<OaiConfig>,
}

/// A request failure rendered as `<error code="...">`.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn unauthorized() -> Self {
        ApiError {
            status: StatusCode::UNAUTHORIZED,
            code: "Unauthorized",
            message: "mutating requests need an X-Principal header".into(),
        }
    }
}

pub fn status_of(e: &Error) -> StatusCode {
    match e {
        Error::NotFound(_) | Error::NoVersionAtTime(_) | Error::UnknownMethod(_) => StatusCode::NOT_FOUND,
        Error::DuplicatePid(_) | Error::DuplicateComponent(_) | Error::BoundDatastream(_) | Error::MissingDependency(_) => {
            StatusCode::CONFLICT
        }
        Error::UpstreamFetchFailed(_) | Error::UpstreamBadStatus { .. } => StatusCode::BAD_GATEWAY,
        Error::FaultInjected(_) | Error::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        _ => StatusCode::BAD_REQUEST,
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError {
            status: status_of(&e),
            code: e.code(),
            message: e.to_string(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = format!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<error code=\"{}\">{}</error>\n",
            self.code,
            escape_text(&self.message)
        );
        (self.status, [(header::CONTENT_TYPE, XML)], body).into_response()
    }
}

type ApiResult = Result<Response, ApiError>;

/// Runs repository work off the async executor.
async fn blocking<F>(f: F) -> Response
where
    F: FnOnce() -> ApiResult + Send + 'static,
{
    match tokio::task::spawn_blocking(f).await {
        Ok(Ok(r)) => r,
        Ok(Err(e)) => e.into_response(),
        Err(join) => ApiError::from(Error::Io(std::io::Error::other(join.to_string()))).into_response(),
    }
}

fn pairs(query: Option<String>) -> Vec<(String, String)> {
    query
        .map(|q| url::form_urlencoded::parse(q.as_bytes()).into_owned().collect())
        .unwrap_or_default()
}

fn first<'a>(pairs: &'a [(String, String)], key: &str) -> Option<&'a str> {
    pairs.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
}

fn principal(headers: &HeaderMap) -> Result<String, ApiError> {
    headers
        .get(PRINCIPAL_HEADER)
        .and_then(|v| v.to_str().ok())
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(str::to_string)
        .ok_or_else(ApiError::unauthorized)
}

fn parse_pid(text: &str) -> Result<Pid, ApiError> {
    Ok(Pid::parse(text)?)
}

fn as_of(pairs: &[(String, String)]) -> Result<Option<Timestamp>, ApiError> {
    Ok(first(pairs, "asOfDateTime").map(Timestamp::parse).transpose()?)
}

fn content_response(out: DatastreamOutput) -> Response {
    match out {
        DatastreamOutput::Content { mime_type, bytes } => {
            (StatusCode::OK, [(header::CONTENT_TYPE, mime_type)], bytes).into_response()
        }
        DatastreamOutput::Redirect { url } => (StatusCode::FOUND, [(header::LOCATION, url)]).into_response(),
    }
}

fn xml_response(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, XML)], body).into_response()
}

fn change_xml(r: &ChangeResult) -> String {
    let mut out = format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<changeResult pid=\"{}\" componentId=\"{}\"",
        escape_attr(&r.pid.to_string()),
        escape_attr(&r.component_id)
    );
    if let Some(v) = &r.new_version_id {
        let _ = write!(out, " newVersionId=\"{}\"", escape_attr(v));
    }
    let _ = writeln!(out, " auditRecordId=\"{}\" timestamp=\"{}\"/>", escape_attr(&r.audit_record_id), r.timestamp);
    out
}

fn profile_html(p: &ObjectProfile, base_url: &str) -> String {
    let link = |uri: &str| {
        let url = ObjectUri::parse(uri).map(|u| u.to_url(base_url)).unwrap_or_default();
        format!("<a href=\"{}\">{}</a>", escape_attr(&url), escape_text(uri))
    };
    let mut out = format!(
        "<!DOCTYPE html>\n<html><head><title>{pid}</title></head><body>\n<h1>{pid}</h1>\n<table>\n\
         <tr><th>Label</th><td>{}</td></tr>\n<tr><th>State</th><td>{}</td></tr>\n\
         <tr><th>Content model</th><td>{}</td></tr>\n<tr><th>Created</th><td>{}</td></tr>\n\
         <tr><th>Last modified</th><td>{}</td></tr>\n</table>\n<h2>Datastreams</h2>\n<ul>\n",
        escape_text(&p.label),
        p.state,
        escape_text(&p.content_model),
        p.created,
        p.last_modified,
        pid = escape_text(&p.pid.to_string()),
    );
    for d in &p.datastreams {
        let _ = writeln!(out, "<li>{} ({}, {})</li>", link(&d.uri), escape_text(&d.version_id), escape_text(&d.mime_type));
    }
    out.push_str("</ul>\n<h2>Methods</h2>\n<ul>\n");
    for (_, uri) in &p.methods {
        let _ = writeln!(out, "<li>{}</li>", link(uri));
    }
    out.push_str("</ul>\n</body></html>\n");
    out
}

async fn get_representation(
    State(app): State<AppState>,
    Path(rest): Path<String>,
    RawQuery(query): RawQuery,
    headers: HeaderMap,
) -> Response {
    blocking(move || {
        let uri = ObjectUri::parse(&format!("info:fedora/{rest}"))?;
        let pairs = pairs(query);
        let as_of = as_of(&pairs)?;
        let repo = &app.repo;
        if uri.path.is_none() {
            let profile = repo.get_object_profile(&uri.pid, as_of)?;
            let wants_html = match first(&pairs, "format") {
                Some(f) => f.eq_ignore_ascii_case("html"),
                None => headers
                    .get(header::ACCEPT)
                    .and_then(|a| a.to_str().ok())
                    .is_some_and(|a| a.contains("text/html")),
            };
            return Ok(if wants_html {
                let html = profile_html(&profile, repo.base_url());
                (StatusCode::OK, [(header::CONTENT_TYPE, "text/html; charset=utf-8")], html).into_response()
            } else {
                xml_response(StatusCode::OK, profile.to_xml(repo.base_url()))
            });
        }
        let params: BTreeMap<String, String> = pairs.into_iter().filter(|(k, _)| k != "asOfDateTime").collect();
        Ok(content_response(repo.get_representation(&uri, &params, as_of)?))
    })
    .await
}

async fn risearch(
    State(app): State<AppState>,
    RawQuery(query): RawQuery,
    headers: HeaderMap,
    body: Bytes,
) -> Response {
    blocking(move || {
        let mut pairs = pairs(query);
        let mut text = None;
        if !body.is_empty() {
            let is_form = headers
                .get(header::CONTENT_TYPE)
                .and_then(|v| v.to_str().ok())
                .is_some_and(|v| v.starts_with("application/x-www-form-urlencoded"));
            if is_form {
                pairs.extend(url::form_urlencoded::parse(&body).into_owned());
            } else {
                text = Some(String::from_utf8_lossy(&body).into_owned());
            }
        }
        let repo = &app.repo;
        let text = match (text, first(&pairs, "query"), first(&pairs, "queryRef")) {
            (Some(t), _, _) => t,
            (None, Some(q), _) => q.to_string(),
            (None, None, Some(r)) => String::from_utf8_lossy(&repo.fetch_url(r)?.bytes).into_owned(),
            (None, None, None) => return Err(Error::InvalidArgument("query or queryRef is required".into()).into()),
        };
        let lang: QueryLanguage = first(&pairs, "lang").unwrap_or("itql").parse()?;
        let format = first(&pairs, "format").map(str::parse::<ResultFormat>).transpose()?;
        let limit = match first(&pairs, "limit") {
            Some(l) => l
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad limit {l:?}")))?,
            None => repo.row_limit(),
        };
        let (format, out) = answer_query(&repo.snapshot(), &text, lang, format, limit)?;
        Ok((StatusCode::OK, [(header::CONTENT_TYPE, format.content_type())], out).into_response())
    })
    .await
}

async fn search(State(app): State<AppState>, RawQuery(query): RawQuery) -> Response {
    blocking(move || {
        let pairs = pairs(query);
        let filter = SearchFilter::parse(first(&pairs, "query").unwrap_or(""))?;
        let number = |key: &str, default: usize| -> Result<usize, ApiError> {
            match first(&pairs, key) {
                Some(v) => v
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("bad {key} {v:?}")).into()),
                None => Ok(default),
            }
        };
        let max = number("maxResults", DEFAULT_MAX_RESULTS)?;
        let offset = number("resumptionToken", 0)?;
        let result = app.repo.registry_search(&filter, max, offset);
        let mut out = format!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<searchResults total=\"{}\">\n",
            result.total
        );
        for h in &result.hits {
            let _ = writeln!(
                out,
                "  <object>\n    <pid>{}</pid>\n    <label>{}</label>\n    <state>{}</state>\n    \
                 <contentModel>{}</contentModel>\n    <createdDate>{}</createdDate>\n    \
                 <lastModifiedDate>{}</lastModifiedDate>\n  </object>",
                escape_text(&h.pid.to_string()),
                escape_text(&h.label),
                h.state,
                escape_text(&h.content_model),
                h.created,
                h.last_modified
            );
        }
        let next = offset + result.hits.len();
        if max > 0 && next < result.total {
            let _ = writeln!(out, "  <resumptionToken>{next}</resumptionToken>");
        }
        out.push_str("</searchResults>\n");
        Ok(xml_response(StatusCode::OK, out))
    })
    .await
}

async fn oai(State(app): State<AppState>, RawQuery(query): RawQuery) -> Response {
    blocking(move || {
        let body = OaiProvider::new(&app.repo, &app.oai).handle(&pairs(query));
        Ok((StatusCode::OK, [(header::CONTENT_TYPE, "text/xml; charset=utf-8")], body).into_response())
    })
    .await
}

async fn ingest(State(app): State<AppState>, headers: HeaderMap, body: Bytes) -> Response {
    blocking(move || {
        let who = principal(&headers)?;
        let pid = app.repo.ingest(&body, &who)?;
        let out = format!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<ingestResult pid=\"{}\"/>\n",
            escape_attr(&pid.to_string())
        );
        Ok(xml_response(StatusCode::CREATED, out))
    })
    .await
}

async fn export(State(app): State<AppState>, Path(pid): Path<String>) -> Response {
    blocking(move || {
        let bytes = app.repo.export(&parse_pid(&pid)?)?;
        Ok((StatusCode::OK, [(header::CONTENT_TYPE, XML)], bytes).into_response())
    })
    .await
}

async fn purge_object(State(app): State<AppState>, Path(pid): Path<String>, headers: HeaderMap) -> Response {
    blocking(move || {
        let who = principal(&headers)?;
        let pid = parse_pid(&pid)?;
        app.repo.purge_object(&pid, &who)?;
        let out = format!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<purgeResult pid=\"{}\"/>\n",
            escape_attr(&pid.to_string())
        );
        Ok(xml_response(StatusCode::OK, out))
    })
    .await
}

async fn stage_content(
    State(app): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> Response {
    blocking(move || {
        principal(&headers)?;
        app.repo.stage_content(&id, &body)?;
        Ok(StatusCode::CREATED.into_response())
    })
    .await
}

fn new_content(pairs: &[(String, String)], body: &Bytes) -> Option<NewContent> {
    match first(pairs, "dsLocation") {
        Some(url) => Some(NewContent::Url(url.to_string())),
        None if !body.is_empty() => Some(NewContent::Bytes(body.to_vec())),
        None => None,
    }
}

async fn add_datastream(
    State(app): State<AppState>,
    Path(pid): Path<String>,
    RawQuery(query): RawQuery,
    headers: HeaderMap,
    body: Bytes,
) -> Response {
    blocking(move || {
        let who = principal(&headers)?;
        let pid = parse_pid(&pid)?;
        let pairs = pairs(query);
        let id = first(&pairs, "dsId").ok_or_else(|| Error::InvalidArgument("dsId is required".into()))?;
        let control_group = ControlGroup::parse(first(&pairs, "controlGroup").unwrap_or("M"))
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let default_mime = match control_group {
            ControlGroup::InlineXml => "text/xml",
            _ => "application/octet-stream",
        };
        let versionable = match first(&pairs, "versionable") {
            Some(v) => v
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad versionable {v:?}")))?,
            None => true,
        };
        let spec = NewDatastream {
            id: id.to_string(),
            control_group,
            mime_type: first(&pairs, "mimeType").unwrap_or(default_mime).to_string(),
            label: first(&pairs, "label").unwrap_or("").to_string(),
            format_uri: first(&pairs, "formatUri").map(str::to_string),
            versionable,
            content: new_content(&pairs, &body)
                .ok_or_else(|| Error::InvalidArgument("content body or dsLocation is required".into()))?,
        };
        let r = app.repo.add_datastream(&pid, spec, &who)?;
        Ok(xml_response(StatusCode::CREATED, change_xml(&r)))
    })
    .await
}

async fn modify_datastream(
    State(app): State<AppState>,
    Path((pid, ds)): Path<(String, String)>,
    RawQuery(query): RawQuery,
    headers: HeaderMap,
    body: Bytes,
) -> Response {
    blocking(move || {
        let who = principal(&headers)?;
        let pid = parse_pid(&pid)?;
        let pairs = pairs(query);
        let change = DatastreamChange {
            content: new_content(&pairs, &body),
            label: first(&pairs, "label").map(str::to_string),
            mime_type: first(&pairs, "mimeType").map(str::to_string),
        };
        let justification = first(&pairs, "justification").unwrap_or("");
        let r = app.repo.modify_datastream(&pid, &ds, change, &who, justification)?;
        Ok(xml_response(StatusCode::OK, change_xml(&r)))
    })
    .await
}

async fn purge_datastream(
    State(app): State<AppState>,
    Path((pid, ds)): Path<(String, String)>,
    headers: HeaderMap,
) -> Response {
    blocking(move || {
        let who = principal(&headers)?;
        let r = app.repo.purge_datastream(&parse_pid(&pid)?, &ds, &who)?;
        Ok(xml_response(StatusCode::OK, change_xml(&r)))
    })
    .await
}

/// `binding=KEY:DSID`, repeatable.
fn bindings(pairs: &[(String, String)]) -> Result<Option<BTreeMap<String, String>>, ApiError> {
    let mut out = BTreeMap::new();
    for (_, v) in pairs.iter().filter(|(k, _)| k == "binding") {
        let (key, ds) = v
            .split_once(':')
            .ok_or_else(|| Error::InvalidArgument(format!("binding {v:?} is not KEY:DSID")))?;
        out.insert(key.to_string(), ds.to_string());
    }
    Ok((!out.is_empty()).then_some(out))
}

async fn add_disseminator(
    State(app): State<AppState>,
    Path(pid): Path<String>,
    RawQuery(query): RawQuery,
    headers: HeaderMap,
) -> Response {
    blocking(move || {
        let who = principal(&headers)?;
        let pid = parse_pid(&pid)?;
        let pairs = pairs(query);
        let required = |key: &str| {
            first(&pairs, key).ok_or_else(|| ApiError::from(Error::InvalidArgument(format!("{key} is required"))))
        };
        let spec = NewDisseminator {
            id: required("dissId")?.to_string(),
            bdef: parse_pid(required("bdefPid")?)?,
            bmech: parse_pid(required("bmechPid")?)?,
            label: first(&pairs, "label").unwrap_or("").to_string(),
            bindings: bindings(&pairs)?.unwrap_or_default(),
        };
        let r = app.repo.add_disseminator(&pid, spec, &who)?;
        Ok(xml_response(StatusCode::CREATED, change_xml(&r)))
    })
    .await
}

async fn modify_disseminator(
    State(app): State<AppState>,
    Path((pid, diss)): Path<(String, String)>,
    RawQuery(query): RawQuery,
    headers: HeaderMap,
) -> Response {
    blocking(move || {
        let who = principal(&headers)?;
        let pid = parse_pid(&pid)?;
        let pairs = pairs(query);
        let change = DisseminatorChange {
            bmech: first(&pairs, "bmechPid").map(parse_pid).transpose()?,
            label: first(&pairs, "label").map(str::to_string),
            bindings: bindings(&pairs)?,
        };
        let justification = first(&pairs, "justification").unwrap_or("");
        let r = app.repo.modify_disseminator(&pid, &diss, change, &who, justification)?;
        Ok(xml_response(StatusCode::OK, change_xml(&r)))
    })
    .await
}

async fn purge_disseminator(
    State(app): State<AppState>,
    Path((pid, diss)): Path<(String, String)>,
    headers: HeaderMap,
) -> Response {
    blocking(move || {
        let who = principal(&headers)?;
        let r = app.repo.purge_disseminator(&parse_pid(&pid)?, &diss, &who)?;
        Ok(xml_response(StatusCode::OK, change_xml(&r)))
    })
    .await
}

async fn get_property(State(app): State<AppState>, Path((pid, name)): Path<(String, String)>) -> Response {
    blocking(move || {
        let value = app.repo.get_object_property(&parse_pid(&pid)?, &name)?;
        Ok((StatusCode::OK, [(header::CONTENT_TYPE, "text/plain; charset=utf-8")], value).into_response())
    })
    .await
}

async fn set_property(
    State(app): State<AppState>,
    Path((pid, name)): Path<(String, String)>,
    RawQuery(query): RawQuery,
    headers: HeaderMap,
    body: Bytes,
) -> Response {
    blocking(move || {
        let who = principal(&headers)?;
        let pairs = pairs(query);
        let value = match first(&pairs, "value") {
            Some(v) => v.to_string(),
            None => String::from_utf8_lossy(&body).trim().to_string(),
        };
        let r = app.repo.set_object_property(&parse_pid(&pid)?, &name, &value, &who)?;
        Ok(xml_response(StatusCode::OK, change_xml(&r)))
    })
    .await
}

async fn history(State(app): State<AppState>, Path(pid): Path<String>) -> Response {
    blocking(move || {
        let pid = parse_pid(&pid)?;
        let dates = app.repo.get_object_history(&pid)?;
        let mut out = format!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<objectHistory pid=\"{}\">\n",
            escape_attr(&pid.to_string())
        );
        for d in dates {
            let _ = writeln!(out, "  <objectChangeDate>{d}</objectChangeDate>");
        }
        out.push_str("</objectHistory>\n");
        Ok(xml_response(StatusCode::OK, out))
    })
    .await
}

async fn not_found() -> Response {
    ApiError::from(Error::NotFound("no such route".into())).into_response()
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/fedora/get/*rest", get(get_representation))
        .route("/fedora/risearch", get(risearch).post(risearch))
        .route("/fedora/search", get(search))
        .route("/fedora/oai", get(oai))
        .route("/fedora/manage/ingest", post(ingest))
        .route("/fedora/manage/export/:pid", get(export))
        .route("/fedora/manage/content/:id", put(stage_content))
        .route("/fedora/manage/object/:pid", axum::routing::delete(purge_object))
        .route("/fedora/manage/object/:pid/history", get(history))
        .route("/fedora/manage/object/:pid/datastream", post(add_datastream))
        .route(
            "/fedora/manage/object/:pid/datastream/:ds",
            put(modify_datastream).delete(purge_datastream),
        )
        .route("/fedora/manage/object/:pid/disseminator", post(add_disseminator))
        .route(
            "/fedora/manage/object/:pid/disseminator/:diss",
            put(modify_disseminator).delete(purge_disseminator),
        )
        .route("/fedora/manage/object/:pid/property/:name", get(get_property).put(set_property))
        .fallback(not_found)
        .with_state(state)
}

/// Serves until the listener fails.
pub async fn serve(listener: tokio::net::TcpListener, state: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}
