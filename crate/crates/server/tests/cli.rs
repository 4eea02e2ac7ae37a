mod support;

use std::path::Path;
use std::process::Command;

use fcrepo_core::fixtures::{image_bytes, DEMO_11_FOXML, COLLECTION_QUERY};
use fcrepo_server::cli::run;
use support::{get, TestServer};
use tempfile::TempDir;

struct Outcome {
    code: i32,
    out: String,
    err: String,
}

fn fcrepo(root: &Path, args: &[&str]) -> Outcome {
    let mut argv = vec!["fcrepo".to_string(), "--root".into(), root.display().to_string()];
    argv.extend(args.iter().map(|a| a.to_string()));
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(argv, &mut out, &mut err);
    Outcome {
        code,
        out: String::from_utf8(out).unwrap(),
        err: String::from_utf8(err).unwrap(),
    }
}

fn binary() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fcrepo"));
    for (key, _) in std::env::vars() {
        if key.starts_with("FCREPO_") {
            cmd.env_remove(key);
        }
    }
    cmd
}

#[test]
fn load_fixtures_is_idempotent() {
    let dir = TempDir::new().unwrap();
    let first = fcrepo(dir.path(), &["load-fixtures"]);
    assert_eq!(first.code, 0, "{}", first.err);
    assert_eq!(first.out.matches("ingested ").count(), 7);
    let second = fcrepo(dir.path(), &["load-fixtures"]);
    assert_eq!(second.out.matches("already present ").count(), 7);
    assert!(!second.out.contains("ingested "));
}

#[test]
fn query_matches_risearch_byte_for_byte() {
    let s = TestServer::with_fixtures();
    let scratch = TempDir::new().unwrap();
    let file = scratch.path().join("collection_members.itql");
    std::fs::write(&file, COLLECTION_QUERY).unwrap();
    let reference = format!("@{}", file.display());
    let local = fcrepo(s.dir.path(), &["query", "--format", "tsv", &reference]);
    assert_eq!(local.code, 0, "{}", local.err);
    assert_eq!(local.out.lines().count(), 3);

    let form: String = url::form_urlencoded::Serializer::new(String::new())
        .append_pair("lang", "itql")
        .append_pair("format", "tsv")
        .append_pair("query", COLLECTION_QUERY)
        .finish();
    let remote = get(&s.url(&format!("/risearch?{form}")));
    assert_eq!(remote.text(), local.out);

    let default_format = fcrepo(s.dir.path(), &["query", COLLECTION_QUERY]);
    assert_eq!(default_format.out, local.out, "tuples default to tsv");
}

#[test]
fn ingest_export_purge() {
    let dir = TempDir::new().unwrap();
    let root = dir.path().join("repo");
    let foxml = dir.path().join("demo11.xml");
    std::fs::write(&foxml, DEMO_11_FOXML).unwrap();
    let mut args = vec!["ingest".to_string(), foxml.display().to_string()];
    for v in ["HIGH.0", "HIGH.1", "HIGH.2"] {
        let path = dir.path().join(v);
        std::fs::write(&path, image_bytes("demo:11", v)).unwrap();
        args.push("--content".into());
        args.push(format!("demo:11:HIGH:{v}={}", path.display()));
    }
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    let ingest = fcrepo(&root, &refs);
    assert_eq!((ingest.code, ingest.out.as_str()), (0, "demo:11\n"), "{}", ingest.err);

    let out = dir.path().join("export.xml");
    let export = fcrepo(&root, &["export", "demo:11", "-o", out.to_str().unwrap()]);
    assert_eq!(export.code, 0);
    let exported = std::fs::read_to_string(&out).unwrap();
    assert_eq!(fcrepo(&root, &["export", "demo:11"]).out, exported);

    let rebuilt = fcrepo(&root, &["rebuild-index"]);
    assert!(rebuilt.out.starts_with("indexed 1 objects"), "{}", rebuilt.out);

    assert_eq!(fcrepo(&root, &["purge", "demo:11"]).out, "purged demo:11\n");
    let gone = fcrepo(&root, &["export", "demo:11"]);
    assert_eq!(gone.code, 1);
    assert!(gone.err.starts_with("error: NotFound:"), "{}", gone.err);
}

#[test]
fn errors_and_exit_codes() {
    let dir = TempDir::new().unwrap();
    let bad_pid = fcrepo(dir.path(), &["export", "no such"]);
    assert_eq!(bad_pid.code, 1);
    assert!(bad_pid.err.contains("MalformedPid"));
    let bad_query = fcrepo(dir.path(), &["query", "select from"]);
    assert!(bad_query.err.contains("QuerySyntax"));
    let bad_content = fcrepo(dir.path(), &["ingest", "x.xml", "--content", "nofile"]);
    assert_eq!(bad_content.code, 1);
    let usage = fcrepo(dir.path(), &["frobnicate"]);
    assert_eq!(usage.code, 2);
    let help = fcrepo(dir.path(), &["--help"]);
    assert_eq!(help.code, 0);
    assert!(help.out.contains("load-fixtures"));
}

#[test]
fn binary_exit_codes() {
    let missing_root = binary().args(["export", "demo:11"]).output().unwrap();
    assert_eq!(missing_root.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing_root.stderr).contains("--root"));

    let dir = TempDir::new().unwrap();
    let not_found = binary().arg("--root").arg(dir.path()).args(["export", "no:such"]).output().unwrap();
    assert_eq!(not_found.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&not_found.stderr).contains("NotFound"));

    let env_root = binary().env("FCREPO_ROOT", dir.path()).args(["query", "--lang", "spo", "* * *"]).output().unwrap();
    assert_eq!(env_root.status.code(), Some(0));
    assert!(env_root.stdout.is_empty());
}
