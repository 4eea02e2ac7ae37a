use std::collections::BTreeMap;
use std::sync::atomic::{AtomicI64, Ordering};
use std::sync::Arc;

use fcrepo_core::fixtures::{load_fixtures, DEFAULT_ZPAN_SERVICE};
use fcrepo_core::model::{Clock, Pid, Timestamp};
use fcrepo_core::rdf::Triple;
use fcrepo_core::storage::{Fetched, Fetcher, Repository, RepositoryOptions};
use fcrepo_core::{Error, Result};
use parking_lot::Mutex;
use tempfile::TempDir;

/// Answers every URL with a body naming the URL; records what was asked.
#[derive(Default)]
pub struct EchoFetcher {
    pub requests: Mutex<Vec<String>>,
}

impl Fetcher for EchoFetcher {
    fn fetch(&self, url: &str) -> Result<Fetched> {
        self.requests.lock().push(url.to_string());
        if url.contains("unreachable") {
            return Err(Error::UpstreamFetchFailed(url.to_string()));
        }
        Ok(Fetched {
            mime_type: Some("text/plain".into()),
            bytes: format!("fetched {url}").into_bytes(),
        })
    }
}

/// Advances one second per reading, starting in mid 2005.
pub struct StepClock(AtomicI64);

impl Default for StepClock {
    fn default() -> Self {
        StepClock(AtomicI64::new(0))
    }
}

impl Clock for StepClock {
    fn now(&self) -> Timestamp {
        let n = self.0.fetch_add(1, Ordering::SeqCst);
        Timestamp::parse("2005-06-01T00:00:00Z").unwrap().plus_seconds(n)
    }
}

pub struct TestRepo {
    pub dir: TempDir,
    pub repo: Repository,
    pub fetcher: Arc<EchoFetcher>,
}

pub fn options(fetcher: Arc<EchoFetcher>) -> RepositoryOptions {
    RepositoryOptions {
        fetcher,
        clock: Arc::new(StepClock::default()),
        ..RepositoryOptions::default()
    }
}

pub fn empty_repo() -> TestRepo {
    let dir = TempDir::new().unwrap();
    let fetcher = Arc::new(EchoFetcher::default());
    let repo = Repository::open(dir.path(), options(fetcher.clone())).unwrap();
    TestRepo { dir, repo, fetcher }
}

pub fn fixture_repo() -> TestRepo {
    let t = empty_repo();
    load_fixtures(&t.repo, DEFAULT_ZPAN_SERVICE).unwrap();
    t
}

pub fn pid(s: &str) -> Pid {
    Pid::parse(s).unwrap()
}

/// Everything a failed write must leave untouched.
#[derive(Debug, PartialEq, Eq)]
pub struct Observable {
    pub exports: BTreeMap<Pid, Vec<u8>>,
    pub content: BTreeMap<String, Vec<u8>>,
    pub triples: Vec<Triple>,
}

pub fn observe(repo: &Repository) -> Observable {
    let exports = repo.pids().into_iter().map(|p| (p.clone(), repo.export(&p).unwrap())).collect();
    let content = repo
        .content_ids()
        .unwrap()
        .into_iter()
        .map(|id| {
            let bytes = repo.read_content(&id).unwrap();
            (id, bytes)
        })
        .collect();
    Observable {
        exports,
        content,
        triples: repo.snapshot().triples(),
    }
}

/// Index content equals extraction from stored bytes.
pub fn assert_coherent(repo: &Repository) {
    let mut stored = repo.extract_from_storage().unwrap();
    stored.sort();
    stored.dedup();
    assert_eq!(repo.snapshot().triples(), stored);
}
