#![allow(dead_code)]

use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use axum::extract::RawQuery;
use axum::http::{header, StatusCode};
use axum::response::IntoResponse;
use axum::Router;
use fcrepo_core::fixtures::load_fixtures;
use fcrepo_core::oai::{OaiConfig, OaiSet};
use fcrepo_core::storage::{Fetched, Fetcher, HttpFetcher, Repository, RepositoryOptions};
use fcrepo_core::Result;
use fcrepo_server::http::{serve, AppState};
use tempfile::TempDir;
use tokio::runtime::Runtime;

/// Real HTTP for loopback addresses; canned bytes for anything else, so
/// fixture URLs on the public internet resolve offline.
pub struct LoopbackFetcher {
    http: HttpFetcher,
}

impl Default for LoopbackFetcher {
    fn default() -> Self {
        LoopbackFetcher {
            http: HttpFetcher::new(Duration::from_secs(5)),
        }
    }
}

impl Fetcher for LoopbackFetcher {
    fn fetch(&self, url: &str) -> Result<Fetched> {
        if url.starts_with("http://127.0.0.1") {
            return self.http.fetch(url);
        }
        Ok(Fetched {
            mime_type: Some("application/octet-stream".into()),
            bytes: format!("remote content of {url}").into_bytes(),
        })
    }
}

/// Echoes the request target back; `/fail` answers 500.
fn stub_router() -> Router {
    async fn echo(uri: axum::http::Uri, RawQuery(q): RawQuery) -> impl IntoResponse {
        let body = format!("<html><body>{} {}</body></html>", uri.path(), q.unwrap_or_default());
        ([(header::CONTENT_TYPE, "text/html")], body)
    }
    async fn fail() -> impl IntoResponse {
        (StatusCode::INTERNAL_SERVER_ERROR, "boom")
    }
    Router::new().route("/zpan", axum::routing::get(echo)).route("/fail", axum::routing::get(fail))
}

pub struct TestServer {
    pub base_url: String,
    pub stub_url: String,
    pub repo: Arc<Repository>,
    pub dir: TempDir,
    runtime: Runtime,
}

fn listener(runtime: &Runtime) -> (tokio::net::TcpListener, SocketAddr) {
    runtime.block_on(async {
        let l = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let addr = l.local_addr().unwrap();
        (l, addr)
    })
}

impl TestServer {
    /// A server over an empty repository, plus a stub service.
    pub fn empty() -> Self {
        let runtime = Runtime::new().unwrap();
        let (repo_listener, repo_addr) = listener(&runtime);
        let (stub_listener, stub_addr) = listener(&runtime);
        let base_url = format!("http://{repo_addr}/fedora");
        let dir = TempDir::new().unwrap();
        let options = RepositoryOptions {
            base_url: base_url.clone(),
            fetcher: Arc::new(LoopbackFetcher::default()),
            ..RepositoryOptions::default()
        };
        let repo = Arc::new(Repository::open(dir.path(), options).unwrap());
        let state = AppState {
            repo: repo.clone(),
            oai: Arc::new(OaiConfig {
                domain: "example.org".into(),
                sets: vec![OaiSet::parse("demo:10").unwrap()],
                ..OaiConfig::default()
            }),
        };
        runtime.spawn(async move { serve(repo_listener, state).await });
        runtime.spawn(async move { axum::serve(stub_listener, stub_router()).await });
        TestServer {
            base_url,
            stub_url: format!("http://{stub_addr}"),
            repo,
            dir,
            runtime,
        }
    }

    /// A server with the demo fixtures bound to the stub's ZPAN service.
    pub fn with_fixtures() -> Self {
        let s = Self::empty();
        load_fixtures(&s.repo, &format!("{}/zpan", s.stub_url)).unwrap();
        s
    }

    pub fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base_url)
    }
}

/// Client that reports redirects and error statuses instead of acting on them.
pub fn client() -> ureq::Agent {
    ureq::AgentBuilder::new().redirects(0).timeout(Duration::from_secs(10)).build()
}

pub struct Reply {
    pub status: u16,
    pub headers: Vec<(String, String)>,
    pub body: Vec<u8>,
}

impl Reply {
    pub fn text(&self) -> String {
        String::from_utf8_lossy(&self.body).into_owned()
    }

    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }

    pub fn header_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.headers.iter().map(|(k, _)| k.to_ascii_lowercase()).collect();
        names.sort();
        names
    }
}

fn reply(result: std::result::Result<ureq::Response, ureq::Error>) -> Reply {
    let resp = match result {
        Ok(r) => r,
        Err(ureq::Error::Status(_, r)) => r,
        Err(e) => panic!("transport error: {e}"),
    };
    let status = resp.status();
    let headers = resp
        .headers_names()
        .into_iter()
        .map(|n| {
            let v = resp.header(&n).unwrap_or_default().to_string();
            (n, v)
        })
        .collect();
    let mut body = Vec::new();
    std::io::Read::read_to_end(&mut resp.into_reader(), &mut body).unwrap();
    Reply { status, headers, body }
}

pub fn get(url: &str) -> Reply {
    reply(client().get(url).call())
}

pub fn send(method: &str, url: &str, principal: Option<&str>, body: &[u8]) -> Reply {
    let mut req = client().request(method, url);
    if let Some(p) = principal {
        req = req.set("X-Principal", p);
    }
    reply(req.send_bytes(body))
}

pub fn send_form(url: &str, form: &[(&str, &str)]) -> Reply {
    reply(client().post(url).send_form(form))
}

/// Value of `code` in an XML error body.
pub fn error_code(body: &str) -> Option<String> {
    let start = body.find("<error code=\"")? + "<error code=\"".len();
    let end = body[start..].find('"')? + start;
    Some(body[start..end].to_string())
}
