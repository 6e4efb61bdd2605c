//! Client for the line-delimited JSON match-exchange protocol.
//!
//! The bridge is a child process. It prints the handshake line
//! `wildloc-matcher v1`, then answers each request line
//! `{"v":1,"a":"<path>","b":"<path>"}` with exactly one response line,
//! either `{"status":"ok","matches":[[ax,ay,bx,by,c],...]}` or
//! `{"status":"error","message":"<text>"}`.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{ImageDims, PixelPoint};

use super::MatchPair;

pub const HANDSHAKE: &str = "wildloc-matcher v1";
pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
pub struct MatchRequest<'a> {
    pub v: u32,
    pub a: &'a str,
    pub b: &'a str,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum MatchResponse {
    Ok { matches: Vec<[f64; 5]> },
    Error { message: String },
}

/// Parses one response line and checks it against both image extents.
pub fn parse_response(line: &str, dims_a: ImageDims, dims_b: ImageDims) -> Result<Vec<MatchPair>> {
    let resp: MatchResponse = serde_json::from_str(line.trim())
        .map_err(|e| Error::ExternalMatcher(format!("malformed response: {e}")))?;
    let matches = match resp {
        MatchResponse::Ok { matches } => matches,
        MatchResponse::Error { message } => return Err(Error::ExternalMatcher(message)),
    };
    let inside = |x: f64, y: f64, d: ImageDims| {
        x.is_finite()
            && y.is_finite()
            && (0.0..=d.width as f64).contains(&x)
            && (0.0..=d.height as f64).contains(&y)
    };
    matches
        .into_iter()
        .map(|[ax, ay, bx, by, c]| {
            if !inside(ax, ay, dims_a) || !inside(bx, by, dims_b) {
                return Err(Error::ExternalMatcher(format!(
                    "match ({ax}, {ay}) -> ({bx}, {by}) lies outside the images"
                )));
            }
            if !(0.0..=1.0).contains(&c) {
                return Err(Error::ExternalMatcher(format!("confidence {c} outside [0, 1]")));
            }
            Ok(MatchPair {
                a: PixelPoint::new(ax, ay),
                b: PixelPoint::new(bx, by),
                confidence: c,
            })
        })
        .collect()
}

struct BridgeProcess {
    child: Child,
    stdin: Option<ChildStdin>,
    stdout: BufReader<ChildStdout>,
}

impl BridgeProcess {
    fn spawn(command: &[String]) -> Result<Self> {
        let (program, args) = command
            .split_first()
            .ok_or_else(|| Error::ExternalMatcherUnavailable("empty matcher command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::ExternalMatcherUnavailable(format!("{program}: {e}")))?;
        let stdin = child.stdin.take();
        let stdout = BufReader::new(child.stdout.take().expect("stdout is piped"));
        let mut proc = BridgeProcess { child, stdin, stdout };
        let mut line = String::new();
        let n = proc
            .stdout
            .read_line(&mut line)
            .map_err(|e| Error::ExternalMatcherUnavailable(format!("handshake read: {e}")))?;
        if n == 0 || line.trim_end() != HANDSHAKE {
            return Err(Error::ExternalMatcherUnavailable(format!(
                "expected handshake {HANDSHAKE:?}, got {:?}",
                line.trim_end()
            )));
        }
        Ok(proc)
    }

    fn request(&mut self, a: &Path, b: &Path) -> Result<String> {
        let (a, b) = (path_str(a)?, path_str(b)?);
        let mut line = serde_json::to_string(&MatchRequest {
            v: PROTOCOL_VERSION,
            a: &a,
            b: &b,
        })
        .expect("request serializes");
        line.push('\n');
        let stdin = self
            .stdin
            .as_mut()
            .ok_or_else(|| Error::ExternalMatcher("bridge input already closed".into()))?;
        stdin
            .write_all(line.as_bytes())
            .and_then(|_| stdin.flush())
            .map_err(|e| Error::ExternalMatcher(format!("write request: {e}")))?;
        let mut resp = String::new();
        let n = self
            .stdout
            .read_line(&mut resp)
            .map_err(|e| Error::ExternalMatcher(format!("read response: {e}")))?;
        if n == 0 {
            return Err(Error::ExternalMatcher(
                "bridge closed its output mid-request".into(),
            ));
        }
        Ok(resp)
    }
}

impl Drop for BridgeProcess {
    fn drop(&mut self) {
        // closing stdin is the protocol's shutdown signal
        drop(self.stdin.take());
        let _ = self.child.wait();
    }
}

fn path_str(p: &Path) -> Result<String> {
    p.to_str()
        .map(str::to_owned)
        .ok_or_else(|| Error::ExternalMatcher(format!("non-UTF-8 path {}", p.display())))
}

/// A pool of bridge processes. Each process serves one request at a time.
pub struct ExternalMatcher {
    pool: Vec<Mutex<BridgeProcess>>,
    next: AtomicUsize,
}

impl std::fmt::Debug for ExternalMatcher {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ExternalMatcher({} processes)", self.pool.len())
    }
}

impl ExternalMatcher {
    /// Spawns `pool_size` bridges and checks each handshake.
    pub fn spawn(command: &[String], pool_size: usize) -> Result<Self> {
        let pool = (0..pool_size.max(1))
            .map(|_| BridgeProcess::spawn(command).map(Mutex::new))
            .collect::<Result<Vec<_>>>()?;
        Ok(ExternalMatcher {
            pool,
            next: AtomicUsize::new(0),
        })
    }

    pub fn match_files(
        &self,
        a: &Path,
        dims_a: ImageDims,
        b: &Path,
        dims_b: ImageDims,
    ) -> Result<Vec<MatchPair>> {
        let k = self.next.fetch_add(1, Ordering::Relaxed) % self.pool.len();
        let line = {
            let mut proc = self.pool[k].lock().unwrap_or_else(|e| e.into_inner());
            proc.request(a, b)?
        };
        parse_response(&line, dims_a, dims_b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims(w: u32, h: u32) -> ImageDims {
        ImageDims::new(w, h).unwrap()
    }

    #[test]
    fn request_wire_format() {
        let s = serde_json::to_string(&MatchRequest {
            v: 1,
            a: "x.png",
            b: "y.png",
        })
        .unwrap();
        assert_eq!(s, r#"{"v":1,"a":"x.png","b":"y.png"}"#);
    }

    #[test]
    fn parses_ok_and_error() {
        let ok = parse_response(
            r#"{"status":"ok","matches":[[1,2,3,4,0.5],[0,0,10,10,1]]}"#,
            dims(10, 10),
            dims(10, 10),
        )
        .unwrap();
        assert_eq!(ok.len(), 2);
        assert_eq!(ok[0].b, PixelPoint::new(3.0, 4.0));

        let err = parse_response(
            r#"{"status":"error","message":"no such file"}"#,
            dims(10, 10),
            dims(10, 10),
        );
        assert!(matches!(err, Err(Error::ExternalMatcher(m)) if m == "no such file"));
    }

    #[test]
    fn rejects_out_of_contract_matches() {
        let d = dims(10, 10);
        assert!(parse_response(r#"{"status":"ok","matches":[[1,2,3,4,1.5]]}"#, d, d).is_err());
        assert!(parse_response(r#"{"status":"ok","matches":[[11,2,3,4,0.5]]}"#, d, d).is_err());
        assert!(parse_response(r#"{"status":"maybe"}"#, d, d).is_err());
        assert!(parse_response("not json", d, d).is_err());
    }
}
