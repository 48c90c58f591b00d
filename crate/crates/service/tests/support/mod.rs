#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, BufReader};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use axum::extract::{Form, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use kgexplore_core::ontology::{build_ontology, OntologyModel};
use kgexplore_core::rdf::vocab::xsd;
use kgexplore_core::rdf::{parse_rdf, write_ntriples, Iri, Literal, RdfFormat, Term, Triple};
use kgexplore_core::results::Binding;
use kgexplore_core::store::InstanceStore;
use oxigraph::io::RdfFormat as OxFormat;
use oxigraph::sparql::{QueryResults, SparqlEvaluator};
use oxigraph::store::Store;
use serde_json::{json, Map, Value};
use tokio::sync::oneshot;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

pub fn read_triples(name: &str) -> Vec<Triple> {
    let path = fixture(name);
    parse_rdf(std::fs::File::open(&path).unwrap(), RdfFormat::from_path(&path)).unwrap()
}

pub fn ontology() -> OntologyModel {
    build_ontology(&read_triples("ontology.ttl")).unwrap()
}

pub fn store() -> InstanceStore {
    InstanceStore::new(read_triples("instances.nt"))
}

pub fn manifest() -> Value {
    serde_json::from_slice(&std::fs::read(fixture("manifest.json")).unwrap()).unwrap()
}

pub fn ex(s: &str) -> Iri {
    Iri::new(format!("http://ex.org/{s}")).unwrap()
}

pub fn oxigraph_store(triples: &[Triple]) -> Store {
    let store = Store::new().unwrap();
    store
        .load_from_reader(OxFormat::NTriples, write_ntriples(triples).as_bytes())
        .unwrap();
    store
}

/// Numeric literals by value: the engine stores them in canonical form.
pub fn canonical(bindings: Vec<Binding>) -> Vec<Binding> {
    let mut out: Vec<Binding> = bindings
        .into_iter()
        .map(|b| {
            b.into_iter()
                .map(|(k, v)| {
                    let v = match v {
                        Term::Literal(l) if l.datatype() == &xsd::double() => {
                            let value: f64 = l.lexical().trim().parse().unwrap();
                            Term::Literal(Literal::new(value.to_string(), xsd::double()).unwrap())
                        }
                        Term::Literal(l) if l.datatype() == &xsd::integer() => {
                            let value: i64 = l.lexical().trim().parse().unwrap();
                            Term::Literal(Literal::new(value.to_string(), xsd::integer()).unwrap())
                        }
                        other => other,
                    };
                    (k, v)
                })
                .collect()
        })
        .collect();
    out.sort();
    out
}

#[derive(Debug, Clone, Default)]
pub struct StubOptions {
    pub delay: Option<Duration>,
    pub fail_status: Option<u16>,
    pub body_override: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Recorded {
    pub method: String,
    pub accept: Option<String>,
    pub authorization: Option<String>,
    pub query: String,
}

struct StubState {
    store: Store,
    options: StubOptions,
    log: Arc<Mutex<Vec<Recorded>>>,
}

/// An axum app served from its own runtime thread; stopped on drop.
pub struct AppHandle {
    pub addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<()>>,
}

impl AppHandle {
    pub fn url(&self, path: &str) -> String {
        format!("http://{}{path}", self.addr)
    }
}

impl Drop for AppHandle {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

pub fn spawn_app(app: Router) -> AppHandle {
    let (addr_tx, addr_rx) = std::sync::mpsc::channel();
    let (shutdown_tx, shutdown_rx) = oneshot::channel::<()>();
    let thread = std::thread::spawn(move || {
        let runtime = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(2)
            .enable_all()
            .build()
            .unwrap();
        runtime.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            addr_tx.send(listener.local_addr().unwrap()).unwrap();
            axum::serve(listener, app)
                .with_graceful_shutdown(async {
                    let _ = shutdown_rx.await;
                })
                .await
                .unwrap();
        });
    });
    AppHandle {
        addr: addr_rx.recv().unwrap(),
        shutdown: Some(shutdown_tx),
        thread: Some(thread),
    }
}

/// A SPARQL protocol endpoint over an in-memory oxigraph store.
pub struct SparqlStub {
    pub url: String,
    pub log: Arc<Mutex<Vec<Recorded>>>,
    pub app: AppHandle,
}

fn term_json(term: &oxigraph::model::Term) -> Value {
    match term {
        oxigraph::model::Term::NamedNode(n) => json!({ "type": "uri", "value": n.as_str() }),
        oxigraph::model::Term::BlankNode(b) => json!({ "type": "bnode", "value": b.as_str() }),
        oxigraph::model::Term::Literal(l) => {
            let mut obj = Map::new();
            obj.insert("type".into(), json!("literal"));
            obj.insert("value".into(), json!(l.value()));
            if let Some(lang) = l.language() {
                obj.insert("xml:lang".into(), json!(lang));
            } else if l.datatype().as_str() != "http://www.w3.org/2001/XMLSchema#string" {
                obj.insert("datatype".into(), json!(l.datatype().as_str()));
            }
            Value::Object(obj)
        }
        #[allow(unreachable_patterns)]
        other => panic!("unexpected term {other}"),
    }
}

fn evaluate(store: &Store, query: &str) -> Result<Value, String> {
    let parsed = SparqlEvaluator::new().parse_query(query).map_err(|e| e.to_string())?;
    let QueryResults::Solutions(solutions) = parsed.on_store(store).execute().map_err(|e| e.to_string())? else {
        return Err("only SELECT is supported".into());
    };
    let vars: Vec<String> = solutions.variables().iter().map(|v| v.as_str().to_string()).collect();
    let mut rows = Vec::new();
    for solution in solutions {
        let solution = solution.map_err(|e| e.to_string())?;
        let row: Map<String, Value> = solution
            .iter()
            .map(|(v, t)| (v.as_str().to_string(), term_json(t)))
            .collect();
        rows.push(Value::Object(row));
    }
    Ok(json!({ "head": { "vars": vars }, "results": { "bindings": rows } }))
}

async fn answer(state: Arc<StubState>, method: &str, headers: HeaderMap, params: HashMap<String, String>) -> Response {
    let header = |name: &str| headers.get(name).and_then(|v| v.to_str().ok()).map(str::to_string);
    let query = params.get("query").cloned().unwrap_or_default();
    state.log.lock().unwrap().push(Recorded {
        method: method.to_string(),
        accept: header("accept"),
        authorization: header("authorization"),
        query: query.clone(),
    });
    if let Some(d) = state.options.delay {
        tokio::time::sleep(d).await;
    }
    if let Some(status) = state.options.fail_status {
        return (StatusCode::from_u16(status).unwrap(), "endpoint failure").into_response();
    }
    if let Some(body) = &state.options.body_override {
        return ([("content-type", "application/sparql-results+json")], body.clone()).into_response();
    }
    match evaluate(&state.store, &query) {
        Ok(doc) => (
            [("content-type", "application/sparql-results+json")],
            serde_json::to_string(&doc).unwrap(),
        )
            .into_response(),
        Err(e) => (StatusCode::BAD_REQUEST, e).into_response(),
    }
}

async fn get_query(
    State(state): State<Arc<StubState>>,
    headers: HeaderMap,
    Query(params): Query<HashMap<String, String>>,
) -> Response {
    answer(state, "GET", headers, params).await
}

async fn post_query(
    State(state): State<Arc<StubState>>,
    headers: HeaderMap,
    Form(params): Form<HashMap<String, String>>,
) -> Response {
    answer(state, "POST", headers, params).await
}

pub fn spawn_sparql_stub(store: Store, options: StubOptions) -> SparqlStub {
    let log = Arc::new(Mutex::new(Vec::new()));
    let state = Arc::new(StubState {
        store,
        options,
        log: log.clone(),
    });
    let app = spawn_app(
        Router::new()
            .route("/sparql", get(get_query).post(post_query))
            .with_state(state),
    );
    SparqlStub {
        url: app.url("/sparql"),
        log,
        app,
    }
}

/// Endpoint over the fixture instances, optionally with the schema triples.
pub fn fixture_endpoint(with_schema: bool) -> SparqlStub {
    let mut triples = read_triples("instances.nt");
    if with_schema {
        triples.extend(read_triples("ontology.nt"));
    }
    spawn_sparql_stub(oxigraph_store(&triples), StubOptions::default())
}

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_kgexplore")
}

/// Runs `kgexplore build` over the fixture ontology and instance data.
pub fn build_fixture_index(dir: &Path, extra: &[&str]) -> PathBuf {
    let index = dir.join("fixture.idx");
    let out = Command::new(bin())
        .args(["build", "--ontology"])
        .arg(fixture("ontology.ttl"))
        .arg("--data")
        .arg(fixture("instances.nt"))
        .arg("--index")
        .arg(&index)
        .args(extra)
        .env_clear()
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    index
}

/// A `kgexplore serve` child process; killed on drop.
pub struct Server {
    pub base: String,
    child: Child,
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

pub fn spawn_server(index: &Path, endpoint: &str, extra: &[&str]) -> Server {
    let mut child = Command::new(bin())
        .args(["serve", "--port", "0", "--index"])
        .arg(index)
        .args(["--endpoint", endpoint])
        .args(extra)
        .env_clear()
        .stdout(Stdio::piped())
        .stderr(Stdio::inherit())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let base = line
        .trim()
        .strip_prefix("listening on ")
        .unwrap_or_else(|| panic!("unexpected banner {line:?}"))
        .to_string();
    Server { base, child }
}

/// Small blocking JSON client.
pub fn call(client: &reqwest::blocking::Client, base: &str, method: &str, path: &str, body: Option<&Value>) -> (u16, String) {
    let url = format!("{base}{path}");
    let request = match method {
        "GET" => client.get(url),
        "POST" => client.post(url).json(body.unwrap_or(&Value::Null)),
        other => panic!("unsupported method {other}"),
    };
    let response = request.send().unwrap();
    let status = response.status().as_u16();
    (status, response.text().unwrap())
}

pub fn counts_of(value: &Value) -> BTreeMap<String, u64> {
    value
        .as_object()
        .unwrap()
        .iter()
        .map(|(k, v)| (k.clone(), v.as_u64().unwrap()))
        .collect()
}
