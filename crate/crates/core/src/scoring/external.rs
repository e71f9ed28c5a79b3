//! Client for an external scorer speaking line-delimited JSON over a child
//! process's stdin/stdout or a TCP socket.
//!
//! ```text
//! request:  {"id": "<string>", "text": "<finding text>"}
//! response: {"id": "<string>", "sentence_certainty": <float>,
//!            "aspects": {"number": "...", "extent": "...", "probability": "...",
//!                        "framing": "...", "condition": "...", "suggestion": "..."}}
//! ```
//!
//! Responses may arrive in any order; they are matched by id and returned in
//! request order. At most `max_in_flight` requests are outstanding at once.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{clamp_certainty, require_text, CertaintyScore, Scorer, MAX_CERTAINTY, MIN_CERTAINTY};
use crate::corpus::{AspectLabels, ScientificFinding};
use crate::error::{Error, Result};

pub const PROTOCOL_VERSION: &str = "ldjson-1";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransportError {
    #[error("cannot reach external scorer `{endpoint}`: {message}")]
    Unreachable { endpoint: String, message: String },
    #[error("timed out after {timeout_ms} ms waiting for response to `{id}`")]
    Timeout { id: String, timeout_ms: u128 },
    #[error("malformed response ({reason}): {payload}")]
    Malformed { payload: String, reason: String },
    #[error("response id `{id}` matches no outstanding request: {payload}")]
    IdMismatch { id: String, payload: String },
    #[error("external scorer closed the stream with {outstanding} requests outstanding")]
    Closed { outstanding: usize },
    #[error("transport i/o failure: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Endpoint {
    /// Program and arguments, whitespace-separated.
    Command(String),
    /// `host:port`.
    Tcp(String),
}

impl Endpoint {
    /// `tcp://host:port` or a bare `host:port` selects TCP; anything else is
    /// a command line.
    pub fn parse(spec: &str) -> Endpoint {
        if let Some(addr) = spec.strip_prefix("tcp://") {
            return Endpoint::Tcp(addr.to_string());
        }
        let looks_like_addr = !spec.contains(char::is_whitespace)
            && spec
                .rsplit_once(':')
                .is_some_and(|(host, port)| !host.is_empty() && port.parse::<u16>().is_ok());
        if looks_like_addr {
            Endpoint::Tcp(spec.to_string())
        } else {
            Endpoint::Command(spec.to_string())
        }
    }

    fn describe(&self) -> String {
        match self {
            Endpoint::Command(c) => format!("cmd:{c}"),
            Endpoint::Tcp(a) => format!("tcp:{a}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExternalConfig {
    pub timeout: Duration,
    pub max_in_flight: usize,
}

impl Default for ExternalConfig {
    fn default() -> Self {
        ExternalConfig {
            timeout: Duration::from_secs(30),
            max_in_flight: 32,
        }
    }
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct WireRequest {
    pub id: String,
    pub text: String,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct WireResponse {
    pub id: String,
    pub sentence_certainty: f64,
    pub aspects: AspectLabels,
}

/// Parses one response line. Schema violations are `Malformed`.
pub fn parse_response(line: &str) -> std::result::Result<WireResponse, TransportError> {
    let resp: WireResponse = serde_json::from_str(line).map_err(|e| TransportError::Malformed {
        payload: line.to_string(),
        reason: e.to_string(),
    })?;
    if !resp.sentence_certainty.is_finite() {
        return Err(TransportError::Malformed {
            payload: line.to_string(),
            reason: "sentence_certainty is not finite".into(),
        });
    }
    Ok(resp)
}

enum Incoming {
    Line(String),
    Eof,
    Failed(String),
}

struct Connection {
    writer: Box<dyn Write + Send>,
    incoming: mpsc::Receiver<Incoming>,
    child: Option<Child>,
    socket: Option<TcpStream>,
}

impl Connection {
    fn open(endpoint: &Endpoint, timeout: Duration) -> std::result::Result<Connection, TransportError> {
        let unreachable = |message: String| TransportError::Unreachable {
            endpoint: endpoint.describe(),
            message,
        };
        let mut socket = None;
        let (writer, reader, child): (Box<dyn Write + Send>, Box<dyn BufRead + Send>, Option<Child>) = match endpoint {
            Endpoint::Command(cmdline) => {
                let mut parts = cmdline.split_whitespace();
                let program = parts.next().ok_or_else(|| unreachable("empty command".into()))?;
                let mut child = Command::new(program)
                    .args(parts)
                    .stdin(Stdio::piped())
                    .stdout(Stdio::piped())
                    .stderr(Stdio::inherit())
                    .spawn()
                    .map_err(|e| unreachable(e.to_string()))?;
                let stdin = child.stdin.take().expect("piped stdin");
                let stdout = child.stdout.take().expect("piped stdout");
                (Box::new(BufWriter::new(stdin)), Box::new(BufReader::new(stdout)), Some(child))
            }
            Endpoint::Tcp(addr) => {
                let sock = addr
                    .to_socket_addrs()
                    .map_err(|e| unreachable(e.to_string()))?
                    .next()
                    .ok_or_else(|| unreachable("address did not resolve".into()))?;
                let stream = TcpStream::connect_timeout(&sock, timeout).map_err(|e| unreachable(e.to_string()))?;
                let read_half = stream.try_clone().map_err(|e| unreachable(e.to_string()))?;
                socket = Some(stream.try_clone().map_err(|e| unreachable(e.to_string()))?);
                (Box::new(BufWriter::new(stream)), Box::new(BufReader::new(read_half)), None)
            }
        };

        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            let mut reader = reader;
            loop {
                let mut line = String::new();
                let msg = match reader.read_line(&mut line) {
                    Ok(0) => Incoming::Eof,
                    Ok(_) => Incoming::Line(line.trim_end_matches(['\n', '\r']).to_string()),
                    Err(e) => Incoming::Failed(e.to_string()),
                };
                let done = !matches!(msg, Incoming::Line(_));
                if tx.send(msg).is_err() || done {
                    break;
                }
            }
        });
        Ok(Connection {
            writer,
            incoming: rx,
            child,
            socket,
        })
    }

    fn close(mut self) {
        let _ = self.writer.flush();
        drop(self.writer);
        if let Some(sock) = self.socket.take() {
            let _ = sock.shutdown(std::net::Shutdown::Both);
        }
        if let Some(mut child) = self.child.take() {
            let deadline = Instant::now() + Duration::from_secs(2);
            loop {
                match child.try_wait() {
                    Ok(Some(_)) => break,
                    Ok(None) if Instant::now() < deadline => thread::sleep(Duration::from_millis(10)),
                    _ => {
                        let _ = child.kill();
                        let _ = child.wait();
                        break;
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExternalScorer {
    endpoint: Endpoint,
    config: ExternalConfig,
    scorer_id: String,
}

impl ExternalScorer {
    pub fn new(endpoint: Endpoint, config: ExternalConfig) -> ExternalScorer {
        let scorer_id = format!("external:{}", endpoint.describe());
        ExternalScorer {
            endpoint,
            config,
            scorer_id,
        }
    }

    pub fn endpoint(&self) -> &Endpoint {
        &self.endpoint
    }
}

impl Scorer for ExternalScorer {
    fn scorer_id(&self) -> &str {
        &self.scorer_id
    }

    fn scorer_version(&self) -> &str {
        PROTOCOL_VERSION
    }

    fn score(&self, finding: &ScientificFinding) -> Result<CertaintyScore> {
        Ok(self.score_all(std::slice::from_ref(finding))?.remove(0))
    }

    fn score_all(&self, findings: &[ScientificFinding]) -> Result<Vec<CertaintyScore>> {
        score_external(findings, &self.endpoint, &self.config)
    }
}

/// Scores every finding through the endpoint, returning results in input
/// order. Any transport or protocol failure aborts the batch; no score is
/// ever fabricated.
pub fn score_external(
    findings: &[ScientificFinding],
    endpoint: &Endpoint,
    config: &ExternalConfig,
) -> Result<Vec<CertaintyScore>> {
    let mut ids = HashSet::new();
    for f in findings {
        require_text(f)?;
        if !ids.insert(f.finding_id.as_str()) {
            return Err(Error::InvalidInput(format!("duplicate finding id {}", f.finding_id)));
        }
    }
    if findings.is_empty() {
        return Ok(Vec::new());
    }
    let mut conn = Connection::open(endpoint, config.timeout)?;
    let result = exchange(&mut conn, findings, endpoint, config);
    conn.close();
    result.map_err(Error::from)
}

fn exchange(
    conn: &mut Connection,
    findings: &[ScientificFinding],
    endpoint: &Endpoint,
    config: &ExternalConfig,
) -> std::result::Result<Vec<CertaintyScore>, TransportError> {
    let max_in_flight = config.max_in_flight.max(1);
    let scorer_id = format!("external:{}", endpoint.describe());
    let mut results: Vec<Option<CertaintyScore>> = vec![None; findings.len()];
    let mut pending: HashMap<&str, (usize, Instant)> = HashMap::new();
    let mut next = 0;
    let mut done = 0;
    let io_err = |e: std::io::Error| TransportError::Io(e.to_string());

    while done < findings.len() {
        let mut wrote = false;
        while pending.len() < max_in_flight && next < findings.len() {
            let f = &findings[next];
            let line = serde_json::to_string(&WireRequest {
                id: f.finding_id.clone(),
                text: f.text.clone(),
            })
            .expect("request serializes");
            conn.writer.write_all(line.as_bytes()).map_err(io_err)?;
            conn.writer.write_all(b"\n").map_err(io_err)?;
            pending.insert(f.finding_id.as_str(), (next, Instant::now()));
            next += 1;
            wrote = true;
        }
        if wrote {
            conn.writer.flush().map_err(io_err)?;
        }

        let (oldest_id, oldest_at) = pending
            .iter()
            .min_by_key(|(_, (idx, at))| (*at, *idx))
            .map(|(id, (_, at))| (id.to_string(), *at))
            .expect("pending is nonempty while work remains");
        let wait = (oldest_at + config.timeout).saturating_duration_since(Instant::now());
        let line = match conn.incoming.recv_timeout(wait) {
            Ok(Incoming::Line(line)) => line,
            Ok(Incoming::Eof) | Err(mpsc::RecvTimeoutError::Disconnected) => {
                return Err(TransportError::Closed {
                    outstanding: findings.len() - done,
                })
            }
            Ok(Incoming::Failed(msg)) => return Err(TransportError::Io(msg)),
            Err(mpsc::RecvTimeoutError::Timeout) => {
                return Err(TransportError::Timeout {
                    id: oldest_id,
                    timeout_ms: config.timeout.as_millis(),
                })
            }
        };
        if line.trim().is_empty() {
            continue;
        }
        let resp = parse_response(&line)?;
        let Some((idx, _)) = pending.remove(resp.id.as_str()) else {
            return Err(TransportError::IdMismatch {
                id: resp.id,
                payload: line,
            });
        };
        let raw = resp.sentence_certainty;
        let sentence_certainty = clamp_certainty(raw);
        if sentence_certainty != raw {
            log::warn!(
                "external score {raw} for `{}` outside [{MIN_CERTAINTY}, {MAX_CERTAINTY}]; clamped to {sentence_certainty}",
                resp.id
            );
        }
        results[idx] = Some(CertaintyScore {
            finding_id: resp.id,
            sentence_certainty,
            aspects: resp.aspects,
            scorer_id: scorer_id.clone(),
            scorer_version: PROTOCOL_VERSION.to_string(),
        });
        done += 1;
    }
    Ok(results.into_iter().map(|r| r.expect("every slot filled")).collect())
}
