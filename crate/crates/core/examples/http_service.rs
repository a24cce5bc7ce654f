//! Serve the pilot over HTTP on an ephemeral port and make a few requests.
//!
//! `cargo run -p campusqa --example http_service`

use std::sync::Arc;

use campusqa::{pilot, ServiceConfig};
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::{TcpListener, TcpStream};

async fn request(addr: std::net::SocketAddr, method: &str, path: &str, actor: &str, body: &str) -> std::io::Result<String> {
    let mut s = TcpStream::connect(addr).await?;
    let req = format!(
        "{method} {path} HTTP/1.1\r\nHost: localhost\r\nx-actor: {actor}\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
        body.len()
    );
    s.write_all(req.as_bytes()).await?;
    let mut out = String::new();
    s.read_to_string(&mut out).await?;
    Ok(out)
}

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixture = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/pilot");
    let tmp = tempfile::tempdir()?;
    let mut config = ServiceConfig::load(fixture.join("campusqa.toml"))?;
    config.store = tmp.path().join("store");
    let app = Arc::new(pilot::load_pilot_app(config, &fixture)?);

    let listener = TcpListener::bind("127.0.0.1:0").await?;
    let addr = listener.local_addr()?;
    tokio::spawn(async move {
        axum::serve(listener, campusqa::service::http::router(app)).await.unwrap();
    });
    println!("listening on {addr}\n");

    for (method, path, actor, body) in [
        ("GET", "/health", "", ""),
        ("GET", "/outcomes/plo?program=p1&term=Fall-2025", "", ""),
        ("POST", "/wf/run", "e01", r#"{"workflow_id":"at_risk","date":"2025-12-13"}"#),
        ("POST", "/wf/run", "e10", r#"{"workflow_id":"at_risk","date":"2025-12-13","student":"s03"}"#),
        ("GET", "/reports/at_risk-20251213-s03/markdown", "", ""),
    ] {
        let reply = request(addr, method, path, actor, body).await?;
        let (head, body) = reply.split_once("\r\n\r\n").unwrap_or((&reply, ""));
        println!("{method} {path}\n  {}\n{body}\n", head.lines().next().unwrap_or(""));
    }
    Ok(())
}
