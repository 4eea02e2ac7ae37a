use std::io::Read;
use std::time::Duration;

use crate::error::{Error, Result};

pub const DEFAULT_FETCH_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fetched {
    pub mime_type: Option<String>,
    pub bytes: Vec<u8>,
}

/// Outbound HTTP GET used for External content and service dispatch.
pub trait Fetcher: Send + Sync {
    fn fetch(&self, url: &str) -> Result<Fetched>;
}

pub struct HttpFetcher {
    agent: ureq::Agent,
}

impl HttpFetcher {
    pub fn new(timeout: Duration) -> Self {
        HttpFetcher {
            agent: ureq::AgentBuilder::new().timeout(timeout).build(),
        }
    }
}

impl Default for HttpFetcher {
    fn default() -> Self {
        Self::new(DEFAULT_FETCH_TIMEOUT)
    }
}

impl Fetcher for HttpFetcher {
    fn fetch(&self, url: &str) -> Result<Fetched> {
        let response = match self.agent.get(url).call() {
            Ok(r) => r,
            Err(ureq::Error::Status(status, _)) => {
                return Err(Error::UpstreamBadStatus {
                    url: url.to_string(),
                    status,
                })
            }
            Err(e) => return Err(Error::UpstreamFetchFailed(format!("{url}: {e}"))),
        };
        let mime_type = response.header("Content-Type").map(str::to_string);
        let mut bytes = Vec::new();
        response
            .into_reader()
            .read_to_end(&mut bytes)
            .map_err(|e| Error::UpstreamFetchFailed(format!("{url}: {e}")))?;
        Ok(Fetched { mime_type, bytes })
    }
}
