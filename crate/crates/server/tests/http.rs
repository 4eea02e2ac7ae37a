mod support;

use fcrepo_core::fixtures::{image_bytes, DEMO_11_FOXML, COLLECTION_QUERY};
use support::{error_code, get, send, send_form, TestServer};

fn encode(s: &str) -> String {
    url::form_urlencoded::byte_serialize(s.as_bytes()).collect()
}

#[test]
fn object_profiles() {
    let s = TestServer::with_fixtures();
    let r = get(&s.url("/get/demo:11"));
    assert_eq!(r.status, 200);
    assert!(r.header("content-type").unwrap().starts_with("application/xml"));
    for ds in ["HIGH", "THUMB", "DC"] {
        assert!(r.text().contains(&format!("<datastream id=\"{ds}\"")), "{ds}");
    }
    let html = get(&s.url("/get/demo:11?format=html"));
    assert!(html.header("content-type").unwrap().starts_with("text/html"));
    assert!(html.text().contains("<h1>demo:11</h1>"));

    let missing = get(&s.url("/get/demo:999"));
    assert_eq!((missing.status, error_code(&missing.text()).as_deref()), (404, Some("NotFound")));
    let bad = get(&s.url("/get/bad^pid"));
    assert_eq!((bad.status, error_code(&bad.text()).as_deref()), (400, Some("MalformedPid")));
    let bad_date = get(&s.url("/get/demo:11?asOfDateTime=last+tuesday"));
    assert_eq!(bad_date.status, 400);
}

#[test]
fn datastream_access() {
    let s = TestServer::with_fixtures();
    let r = get(&s.url("/get/demo:11/HIGH?asOfDateTime=2004-12-15T00:00:00Z"));
    assert_eq!(r.status, 200);
    assert_eq!(r.body, image_bytes("demo:11", "HIGH.1"));
    assert_eq!(r.header("content-type"), Some("image/jpeg"));
    assert_eq!(get(&s.url("/get/demo:11/NOPE")).status, 404);
    assert_eq!(get(&s.url("/get/demo:11/HIGH?asOfDateTime=2004-01-01")).status, 404);
    let redirect = get(&s.url("/get/demo:12/WEBPAGE"));
    assert_eq!(redirect.status, 302);
    assert!(redirect.header("location").unwrap().starts_with("http://www.virginia.edu/"));
}

#[test]
fn disseminations() {
    let s = TestServer::with_fixtures();
    let r = get(&s.url("/get/demo:11/BDEF:2/ZPAN?zoom=2&pan=left"));
    assert_eq!(r.status, 200, "{}", r.text());
    assert_eq!(r.header("content-type"), Some("text/html"));
    let body = r.text();
    assert!(body.contains(&format!("src={}/get/demo:11/HIGH", s.base_url)), "{body}");
    assert!(body.contains("zoom=2") && body.contains("pan=left"));

    let unknown = get(&s.url("/get/demo:11/bdef:9/X"));
    assert_eq!(unknown.status, 404);
    assert_eq!(get(&s.url("/get/demo:11/BDEF:2/SPIN")).status, 404);

    // a binding whose service answers 500
    let change = format!(
        "/manage/object/demo:12/disseminator/DISS1?bmechPid=BMECH:3&label={}",
        encode("relabelled")
    );
    assert_eq!(send("PUT", &s.url(&change), Some("admin"), b"").status, 200);
    let failing = fcrepo_core::fixtures::fixture_documents(&format!("{}/fail", s.stub_url))
        .into_iter()
        .find(|(p, _)| *p == "BMECH:3")
        .unwrap()
        .1
        .replace("BMECH:3", "BMECH:4");
    assert_eq!(send("POST", &s.url("/manage/ingest"), Some("admin"), failing.as_bytes()).status, 201);
    let add = "/manage/object/demo:10/disseminator?dissId=DISS1&bdefPid=BDEF:2&bmechPid=BMECH:4&binding=HIGHRES_IMG:DC";
    assert_eq!(send("POST", &s.url(add), Some("admin"), b"").status, 201);
    let upstream = get(&s.url("/get/demo:10/BDEF:2/ZPAN"));
    assert_eq!((upstream.status, error_code(&upstream.text()).as_deref()), (502, Some("UpstreamBadStatus")));
}

#[test]
fn missing_required_parameter_is_400() {
    let s = TestServer::with_fixtures();
    let docs = fcrepo_core::fixtures::fixture_documents(&format!("{}/zpan", s.stub_url));
    let doc = |p: &str| docs.iter().find(|(q, _)| *q == p).unwrap().1.clone();
    let bdef = doc("BDEF:2").replace("PID=\"BDEF:2\"", "PID=\"BDEF:20\"").replace(" default=\"1\"", "");
    let bmech = doc("BMECH:3").replace("BMECH:3", "BMECH:30").replace("bdef=\"BDEF:2\"", "bdef=\"BDEF:20\"");
    for d in [bdef, bmech] {
        assert_eq!(send("POST", &s.url("/manage/ingest"), Some("admin"), d.as_bytes()).status, 201);
    }
    let add = "/manage/object/demo:11/disseminator?dissId=DISS3&bdefPid=BDEF:20&bmechPid=BMECH:30&binding=HIGHRES_IMG:HIGH";
    assert_eq!(send("POST", &s.url(add), Some("admin"), b"").status, 201);
    let r = get(&s.url("/get/demo:11/BDEF:20/ZPAN?pan=left"));
    assert_eq!((r.status, error_code(&r.text()).as_deref()), (400, Some("MissingParameter")));
    assert_eq!(get(&s.url("/get/demo:11/BDEF:20/ZPAN?zoom=3")).status, 200);
}

#[test]
fn management_lifecycle() {
    let s = TestServer::empty();
    let ingest = s.url("/manage/ingest");
    let denied = send("POST", &ingest, None, DEMO_11_FOXML.as_bytes());
    assert_eq!((denied.status, error_code(&denied.text()).as_deref()), (401, Some("Unauthorized")));
    let unstaged = send("POST", &ingest, Some("admin"), DEMO_11_FOXML.as_bytes());
    assert_eq!(error_code(&unstaged.text()).as_deref(), Some("MissingContent"));

    for v in ["HIGH.0", "HIGH.1", "HIGH.2"] {
        let r = send("PUT", &s.url(&format!("/manage/content/demo:11:HIGH:{v}")), Some("admin"), b"jpeg");
        assert_eq!(r.status, 201);
    }
    let r = send("POST", &ingest, Some("admin"), DEMO_11_FOXML.as_bytes());
    assert_eq!(r.status, 201);
    assert!(r.text().contains("pid=\"demo:11\""));
    assert_eq!(send("POST", &ingest, Some("admin"), DEMO_11_FOXML.as_bytes()).status, 409);

    let modify = send("PUT", &s.url("/manage/object/demo:11/datastream/HIGH?justification=rescan"), Some("curator"), b"v3");
    assert_eq!(modify.status, 200, "{}", modify.text());
    assert!(modify.text().contains("newVersionId=\"HIGH.3\""));
    assert_eq!(get(&s.url("/get/demo:11/HIGH")).body, b"v3");

    let add = send(
        "POST",
        &s.url("/manage/object/demo:11/datastream?dsId=NOTES&controlGroup=X&label=Notes"),
        Some("curator"),
        b"<notes>kept</notes>",
    );
    assert_eq!(add.status, 201, "{}", add.text());
    assert_eq!(get(&s.url("/get/demo:11/NOTES")).body, b"<notes>kept</notes>");
    assert_eq!(send("DELETE", &s.url("/manage/object/demo:11/datastream/NOTES"), Some("c"), b"").status, 200);
    assert_eq!(get(&s.url("/get/demo:11/NOTES")).status, 404);

    let prop = send("PUT", &s.url("/manage/object/demo:11/property/label?value=Renamed"), Some("c"), b"");
    assert_eq!(prop.status, 200);
    assert_eq!(get(&s.url("/manage/object/demo:11/property/label")).text(), "Renamed");
    let immutable = send("PUT", &s.url("/manage/object/demo:11/property/createdDate?value=2001-01-01"), Some("c"), b"");
    assert_eq!(error_code(&immutable.text()).as_deref(), Some("ImmutableProperty"));

    let history = get(&s.url("/manage/object/demo:11/history")).text();
    assert!(history.contains("<objectChangeDate>2004-12-12T00:22:00Z</objectChangeDate>"));

    let export = get(&s.url("/manage/export/demo:11"));
    assert_eq!(export.status, 200);
    assert!(export.text().contains("<audit:responsibility>curator</audit:responsibility>"));

    let purge = s.url("/manage/object/demo:11");
    assert_eq!(send("DELETE", &purge, None, b"").status, 401);
    assert_eq!(send("DELETE", &purge, Some("admin"), b"").status, 200);
    assert_eq!(send("DELETE", &purge, Some("admin"), b"").status, 404);
}

#[test]
fn index_search() {
    let s = TestServer::with_fixtures();
    let r = get(&s.url(&format!("/risearch?lang=itql&format=tsv&query={}", encode(COLLECTION_QUERY))));
    assert_eq!(r.status, 200);
    assert!(r.header("content-type").unwrap().starts_with("text/tab-separated-values"));
    let text = r.text();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3, "{lines:?}");
    assert_eq!(lines[0], "member\tcollection\tdissemination");

    let posted = send_form(&s.url("/risearch"), &[("lang", "itql"), ("format", "tsv"), ("query", COLLECTION_QUERY)]);
    assert_eq!(posted.body, r.body);
    let raw = send("POST", &s.url("/risearch?format=tsv"), None, COLLECTION_QUERY.as_bytes());
    assert_eq!(raw.body, r.body);

    let bad = get(&s.url("/risearch?lang=itql&query=select+from"));
    assert_eq!((bad.status, error_code(&bad.text()).as_deref()), (400, Some("QuerySyntax")));

    let by_ref = get(&s.url(&format!(
        "/risearch?lang=spo&queryRef={}",
        encode(&s.url("/get/demo:11/DC"))
    )));
    assert_eq!(by_ref.status, 400, "a DC record is not a query");

    let spo = get(&s.url(&format!("/risearch?lang=spo&query={}", encode("<info:fedora/demo:11> <rel:isMemberOf> *"))));
    assert_eq!(spo.text(), "<info:fedora/demo:11> <info:fedora/fedora-system:def:relations-external#isMemberOf> <info:fedora/demo:10> .\n");
    assert_eq!(spo.header("content-type"), Some("application/n-triples"));
}

#[test]
fn empty_repository_spo_is_empty() {
    let s = TestServer::empty();
    let r = get(&s.url("/risearch?lang=spo&query=*+*+*"));
    assert_eq!(r.status, 200);
    assert!(r.body.is_empty());
}

#[test]
fn registry_search() {
    let s = TestServer::with_fixtures();
    let r = get(&s.url("/search?query=label~Pavilion"));
    assert!(r.text().contains("<pid>demo:11</pid>"));
    let active = get(&s.url(&format!("/search?query={}", encode("state=A pid=demo:*")))).text();
    assert_eq!(active.matches("<object>").count(), 3);
    let none = get(&s.url("/search?maxResults=0")).text();
    assert_eq!(none.matches("<object>").count(), 0);
    assert!(!none.contains("resumptionToken"));
    let paged = get(&s.url("/search?maxResults=2")).text();
    assert!(paged.contains("<resumptionToken>2</resumptionToken>"));
    assert!(get(&s.url("/search?maxResults=2&resumptionToken=2")).text().contains("<resumptionToken>4</resumptionToken>"));
    assert_eq!(get(&s.url("/search?query=colour=red")).status, 400);
}

#[test]
fn oai_endpoint() {
    let s = TestServer::with_fixtures();
    let r = get(&s.url("/oai?verb=ListRecords&metadataPrefix=oai_dc&set=demo:10"));
    assert_eq!(r.status, 200);
    assert!(r.text().contains("<identifier>oai:example.org:demo:12</identifier>"));
    let err = get(&s.url("/oai?verb=ListRecords&metadataPrefix=marcxml"));
    assert_eq!(err.status, 200);
    assert!(err.text().contains("code=\"cannotDisseminateFormat\""));
}

#[test]
fn reads_have_no_side_effects() {
    let s = TestServer::with_fixtures();
    let before = get(&s.url("/manage/export/demo:11")).body;
    for path in ["/get/demo:11", "/get/demo:11/HIGH", "/get/demo:11/BDEF:2/ZPAN", "/search?query=pid=demo:11", "/oai?verb=Identify"] {
        get(&s.url(path));
        get(&s.url(path));
    }
    assert_eq!(get(&s.url("/manage/export/demo:11")).body, before);
}

#[test]
fn unknown_routes_are_404_with_a_code() {
    let s = TestServer::empty();
    let r = get(&s.url("/nowhere"));
    assert_eq!((r.status, error_code(&r.text()).as_deref()), (404, Some("NotFound")));
}
