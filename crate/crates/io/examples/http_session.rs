//! Starts the HTTP service on a loopback port over the two-blob fixture and
//! walks through a session with plain HTTP/1.1 requests: upload a trait,
//! run a crown query, fetch its segments and the merge tree.

use std::io::{Read, Write};
use std::net::{SocketAddr, TcpStream};

use serde_json::{json, Value};
use timt_core::traits::{TraitExpr, TraitPrimitive};
use timt_io::dataset::{load_dataset, save_dataset, Dtype};
use timt_io::fixtures::{generate_fixture, FixtureKind, FixtureParams};
use timt_io::service::{serve, Session};
use timt_io::trait_doc::TraitDocument;

fn request(addr: SocketAddr, method: &str, path: &str, body: Option<&Value>) -> std::io::Result<(u16, Value)> {
    let payload = body.map(|b| b.to_string()).unwrap_or_default();
    let mut stream = TcpStream::connect(addr)?;
    write!(
        stream,
        "{method} {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n{payload}",
        payload.len()
    )?;
    let mut raw = String::new();
    stream.read_to_string(&mut raw)?;
    let (head, body) = raw.split_once("\r\n\r\n").unwrap_or((&raw, ""));
    let status = head.split_whitespace().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    Ok((status, serde_json::from_str(body).unwrap_or(Value::Null)))
}

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("timt-http-session");
    let params = FixtureParams { dims: Some([24, 20, 12]), ..Default::default() };
    let mf = generate_fixture(FixtureKind::TwoBlob3d, &params, 0)?;
    let path = dir.join("blobs.json");
    save_dataset(&mf, &path, Dtype::F32, None)?;
    let session = Session::new(load_dataset(&path)?, None, None)?;

    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
    let addr = listener.local_addr()?;
    tokio::spawn(serve(listener, session));
    println!("serving on http://{addr}");

    let low = mf.channel("potential")?.values.iter().cloned().fold(f64::INFINITY, f64::min);
    let doc = TraitDocument::new(TraitExpr::leaf(TraitPrimitive::point(&["potential"], &[low])));
    let doc: Value = serde_json::from_slice(&doc.canonical_bytes())?;

    let steps = tokio::task::spawn_blocking(move || -> std::io::Result<()> {
        let (status, stats) = request(addr, "GET", "/dataset", None)?;
        println!("GET /dataset -> {status}, channels {}", stats["channels"].as_array().map_or(0, Vec::len));

        let (status, put) = request(addr, "PUT", "/traits/deep", Some(&doc))?;
        println!("PUT /traits/deep -> {status}, version {}", put["version"]);

        let query = json!({ "trait": "deep", "spec": { "method": "crown", "delta": 0.5 } });
        let (status, q) = request(addr, "POST", "/query", Some(&query))?;
        let id = q["id"].as_str().unwrap_or_default().to_string();
        println!("POST /query -> {status}, segmentation {id}");

        let (_, segs) = request(addr, "GET", &format!("/segments/{id}"), None)?;
        for s in segs["segments"].as_array().into_iter().flatten() {
            println!("  segment {} with {} vertices", s["id"], s["size"]);
        }

        let (status, tree) = request(addr, "GET", "/tree/deep", None)?;
        println!("GET /tree/deep -> {status}, {} nodes", tree["nodes"].as_array().map_or(0, Vec::len));
        Ok(())
    });
    steps.await??;
    Ok(())
}
