//! `fcrepo` administration commands. Every flag has an `FCREPO_*`
//! environment override.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use clap::{Parser, Subcommand};
use fcrepo_core::fixtures::{load_fixtures, DEFAULT_ZPAN_SERVICE};
use fcrepo_core::index::{answer_query, QueryLanguage, ResultFormat};
use fcrepo_core::model::Pid;
use fcrepo_core::oai::{OaiConfig, OaiSet};
use fcrepo_core::storage::{HttpFetcher, Repository, RepositoryOptions, DEFAULT_BASE_URL};
use fcrepo_core::{Error, Result};

use crate::http::{self, AppState};

pub const USAGE_EXIT: i32 = 2;
pub const FAILURE_EXIT: i32 = 1;

#[derive(Debug, Parser)]
#[command(name = "fcrepo", version, about = "Digital object repository with a relationship index")]
pub struct Cli {
    /// Repository data directory (created if missing).
    #[arg(long, env = "FCREPO_ROOT")]
    pub root: PathBuf,
    /// Public base URL used in representation URLs.
    #[arg(long, env = "FCREPO_BASE_URL", default_value = DEFAULT_BASE_URL)]
    pub base_url: String,
    /// Recorded as the responsible agent of changes made from the CLI.
    #[arg(long, env = "FCREPO_PRINCIPAL", default_value = "fedoraAdmin")]
    pub principal: String,
    /// Outbound HTTP timeout in seconds.
    #[arg(long, env = "FCREPO_TIMEOUT", default_value_t = 10)]
    pub timeout: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP server.
    Serve {
        #[arg(long, env = "FCREPO_BIND", default_value = "127.0.0.1:8080")]
        bind: String,
        /// OAI set as `spec=collectionPid` (or a bare pid); repeatable.
        #[arg(long = "oai-set", env = "FCREPO_OAI_SETS", value_delimiter = ',', default_value = "demo:10")]
        oai_sets: Vec<String>,
        /// Namespace of `oai:{domain}:{pid}` identifiers; defaults to the base URL host.
        #[arg(long, env = "FCREPO_OAI_DOMAIN")]
        oai_domain: Option<String>,
    },
    /// Ingest a FOXML document; prints the new pid.
    Ingest {
        file: PathBuf,
        /// Stage managed content first, as `internalId=file`; repeatable.
        #[arg(long = "content", value_name = "ID=FILE")]
        content: Vec<String>,
    },
    /// Write an object's FOXML to stdout or a file.
    Export {
        pid: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Remove an object.
    Purge { pid: String },
    /// Query the relationship index; `@file` reads the query from a file.
    Query {
        #[arg(long, default_value = "itql")]
        lang: String,
        #[arg(long)]
        format: Option<String>,
        #[arg(long)]
        limit: Option<usize>,
        query: String,
    },
    /// Drop and rebuild the index from stored objects.
    RebuildIndex,
    /// Load the demo objects; objects already present are left alone.
    LoadFixtures {
        #[arg(long, env = "FCREPO_ZPAN_SERVICE", default_value = DEFAULT_ZPAN_SERVICE)]
        zpan_service: String,
    },
}

fn open(cli: &Cli) -> Result<Repository> {
    let options = RepositoryOptions {
        base_url: cli.base_url.clone(),
        fetcher: Arc::new(HttpFetcher::new(Duration::from_secs(cli.timeout))),
        ..RepositoryOptions::default()
    };
    Repository::open(&cli.root, options)
}

fn read_file(path: &std::path::Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))
}

fn oai_config(base_url: &str, sets: &[String], domain: Option<&str>) -> Result<OaiConfig> {
    let domain = match domain {
        Some(d) => d.to_string(),
        None => url::Url::parse(base_url)
            .ok()
            .and_then(|u| u.host_str().map(str::to_string))
            .unwrap_or_else(|| "localhost".to_string()),
    };
    Ok(OaiConfig {
        domain,
        sets: sets.iter().filter(|s| !s.is_empty()).map(|s| OaiSet::parse(s)).collect::<Result<_>>()?,
        ..OaiConfig::default()
    })
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let repo = open(cli)?;
    match &cli.command {
        Command::Serve {
            bind,
            oai_sets,
            oai_domain,
        } => {
            let state = AppState {
                oai: Arc::new(oai_config(&cli.base_url, oai_sets, oai_domain.as_deref())?),
                repo: Arc::new(repo),
            };
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(async {
                let listener = tokio::net::TcpListener::bind(bind).await?;
                tracing::info!(address = %listener.local_addr()?, base_url = %cli.base_url, "serving");
                http::serve(listener, state).await
            })?;
        }
        Command::Ingest { file, content } => {
            for spec in content {
                let (id, path) = spec
                    .split_once('=')
                    .ok_or_else(|| Error::InvalidArgument(format!("--content {spec:?} is not ID=FILE")))?;
                repo.stage_content(id, &read_file(path.as_ref())?)?;
            }
            let pid = repo.ingest(&read_file(file)?, &cli.principal)?;
            writeln!(out, "{pid}")?;
        }
        Command::Export { pid, output } => {
            let bytes = repo.export(&Pid::parse(pid)?)?;
            match output {
                Some(path) => std::fs::write(path, bytes)?,
                None => out.write_all(&bytes)?,
            }
        }
        Command::Purge { pid } => {
            let pid = Pid::parse(pid)?;
            repo.purge_object(&pid, &cli.principal)?;
            writeln!(out, "purged {pid}")?;
        }
        Command::Query {
            lang,
            format,
            limit,
            query,
        } => {
            let text = match query.strip_prefix('@') {
                Some(path) => String::from_utf8_lossy(&read_file(path.as_ref())?).into_owned(),
                None => query.clone(),
            };
            let lang: QueryLanguage = lang.parse()?;
            let format = format.as_deref().map(str::parse::<ResultFormat>).transpose()?;
            let limit = limit.unwrap_or(repo.row_limit());
            let (_, body) = answer_query(&repo.snapshot(), &text, lang, format, limit)?;
            out.write_all(body.as_bytes())?;
        }
        Command::RebuildIndex => {
            let stats = repo.rebuild_index()?;
            for (file, error) in &stats.failures {
                writeln!(out, "skipped {file}: {error}")?;
            }
            writeln!(out, "indexed {} objects, {} triples", stats.objects, stats.triples)?;
        }
        Command::LoadFixtures { zpan_service } => {
            let report = load_fixtures(&repo, zpan_service)?;
            for pid in &report.ingested {
                writeln!(out, "ingested {pid}")?;
            }
            for pid in &report.already_present {
                writeln!(out, "already present {pid}")?;
            }
        }
    }
    Ok(())
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { USAGE_EXIT } else { 0 };
            let rendered = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = sink.write_all(rendered.as_bytes());
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {}: {e}", e.code());
            FAILURE_EXIT
        }
    }
}
