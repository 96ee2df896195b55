//! Minimal JSON-over-HTTP client shared by the remote backends.

use std::time::Duration;

use serde::{de::DeserializeOwned, Serialize};

#[derive(Clone)]
pub struct JsonClient {
    agent: ureq::Agent,
    api_key: Option<String>,
}

impl std::fmt::Debug for JsonClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("JsonClient").field("api_key", &self.api_key.as_ref().map(|_| "***")).finish()
    }
}

impl JsonClient {
    pub fn new(timeout: Duration, api_key: Option<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(true)
            .build()
            .into();
        JsonClient { agent, api_key }
    }

    pub fn post<Req: Serialize, Resp: DeserializeOwned>(&self, url: &str, body: &Req) -> Result<Resp, String> {
        let mut req = self.agent.post(url);
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send_json(body).map_err(|e| e.to_string())?;
        resp.body_mut().read_json::<Resp>().map_err(|e| e.to_string())
    }
}

impl Default for JsonClient {
    fn default() -> Self {
        JsonClient::new(Duration::from_secs(60), None)
    }
}

/// Joins a base URL and a path with exactly one slash.
pub fn join_url(base: &str, path: &str) -> String {
    format!("{}/{}", base.trim_end_matches('/'), path.trim_start_matches('/'))
}

#[cfg(test)]
pub(crate) mod testing {
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::mpsc;
    use std::thread;

    /// Serves `bodies` in order, one per connection, and reports each
    /// request's (path, body).
    pub fn serve(bodies: Vec<String>) -> (String, mpsc::Receiver<(String, String)>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for body in bodies {
                let Ok((stream, _)) = listener.accept() else { return };
                let mut reader = BufReader::new(stream);
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                let path = line.split_whitespace().nth(1).unwrap_or("").to_string();
                let mut len = 0usize;
                loop {
                    let mut h = String::new();
                    reader.read_line(&mut h).unwrap();
                    if h == "\r\n" || h.is_empty() {
                        break;
                    }
                    if let Some(v) = h.to_ascii_lowercase().strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                }
                let mut buf = vec![0; len];
                reader.read_exact(&mut buf).unwrap();
                let _ = tx.send((path, String::from_utf8_lossy(&buf).into_owned()));
                let mut stream = reader.into_inner();
                let _ = write!(
                    stream,
                    "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
                    body.len(),
                    body
                );
            }
        });
        (url, rx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn url_join() {
        assert_eq!(join_url("http://h:1/", "/tag"), "http://h:1/tag");
        assert_eq!(join_url("http://h:1", "tag"), "http://h:1/tag");
    }

    #[test]
    fn round_trip_against_local_server() {
        let (url, rx) = testing::serve(vec![r#"{"ok":true}"#.into()]);
        let v: serde_json::Value = JsonClient::default().post(&join_url(&url, "x"), &serde_json::json!({"a": 1})).unwrap();
        assert_eq!(v["ok"], true);
        let (path, body) = rx.recv().unwrap();
        assert_eq!(path, "/x");
        assert_eq!(serde_json::from_str::<serde_json::Value>(&body).unwrap(), serde_json::json!({"a": 1}));
    }
}
