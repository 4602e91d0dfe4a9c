//! Starts the analysis service on a local port with a fresh net and queries
//! it over plain HTTP: the winrate curve of a position, a λ comparison, and
//! a move.
//!
//!     cargo run --example analysis_client

use std::sync::Arc;

use serde_json::{json, Value};
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::{TcpListener, TcpStream};

use sai::network::{save_weights, Network, NetworkConfig};
use sai_service::api::{router, AppState};

async fn request(addr: std::net::SocketAddr, method: &str, path: &str, body: Option<Value>) -> Value {
    let body = body.map(|b| b.to_string()).unwrap_or_default();
    let mut stream = TcpStream::connect(addr).await.unwrap();
    let head = format!(
        "{method} {path} HTTP/1.1\r\nHost: localhost\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        body.len()
    );
    stream.write_all(head.as_bytes()).await.unwrap();
    stream.write_all(body.as_bytes()).await.unwrap();
    let mut raw = String::new();
    stream.read_to_string(&mut raw).await.unwrap();
    let (status, rest) = raw.split_once("\r\n").unwrap();
    let payload = rest.split_once("\r\n\r\n").map_or("", |(_, b)| b);
    println!("{method} {path} -> {status}");
    serde_json::from_str(payload).unwrap_or(Value::Null)
}

#[tokio::main]
async fn main() {
    let dir = std::env::temp_dir().join("sai-analysis-client");
    std::fs::create_dir_all(&dir).unwrap();
    let net = Network::random(NetworkConfig { blocks: 1, filters: 16, ..NetworkConfig::default() }, 0).unwrap();
    save_weights(&net, &dir.join("random.weights")).unwrap();

    let state = Arc::new(AppState::new(2000, Some(dir.clone())));
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, router(state)).await.unwrap() });

    let nets = request(addr, "GET", "/nets", None).await;
    println!("{nets}");
    let path = nets["available"][0].clone();
    request(addr, "POST", "/nets/load", Some(json!({ "path": path }))).await;

    let position = json!({ "moves": ["D4", "C3", "E5"], "komi": 7.5 });
    let mut analyze = position.clone();
    analyze["visits"] = json!(200);
    analyze["lambdas"] = json!([0.0, 0.5, 1.0]);
    let a = request(addr, "POST", "/analyze", Some(analyze)).await;
    println!("to move {}, alpha {:.2}, beta {:.3}, winrate {:.3}", a["to_move"], a["alpha"].as_f64().unwrap(), a["beta"].as_f64().unwrap(), a["winrate"].as_f64().unwrap());
    for p in a["winrate_curve"].as_array().unwrap().iter().step_by(10) {
        println!("  x {:+6.1}  winrate {:.3}", p["x"].as_f64().unwrap(), p["winrate"].as_f64().unwrap());
    }
    for info in a["lambda_info"].as_array().unwrap() {
        println!("  lambda {}: xbar {:+.2}, move {}", info["lambda"], info["xbar"].as_f64().unwrap(), info["move"]);
    }

    let mut genmove = position.clone();
    genmove["visits"] = json!(200);
    genmove["lambda"] = json!(0.5);
    let m = request(addr, "POST", "/genmove", Some(genmove)).await;
    println!("genmove: {}", m["move"]);

    let bad = request(addr, "POST", "/analyze", Some(json!({ "moves": ["D4", "D4"], "komi": 7.5 }))).await;
    println!("illegal move rejected: {bad}");
}
