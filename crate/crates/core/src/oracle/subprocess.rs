//! External classifier behind a child process.
//!
//! Newline-delimited JSON over the child's standard input/output, one
//! object per line (see [`wire`](super::wire)). One request is in flight at
//! a time; responses whose id does not match the outstanding request are
//! treated as stale leftovers of a timed-out attempt and discarded.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Mutex, PoisonError};
use std::thread;
use std::time::{Duration, Instant};

use crate::compositor::Image;
use crate::error::{Error, Result};
use crate::oracle::wire::{self, WireResponse};
use crate::oracle::{LabelId, Oracle, Prediction, QueryCounter};

#[derive(Debug, Clone, PartialEq)]
pub struct SubprocessConfig {
    /// Program and arguments.
    pub command: Vec<String>,
    pub timeout: Duration,
    /// Additional attempts after a transport failure.
    pub retries: u32,
}

impl SubprocessConfig {
    pub fn new(command: Vec<String>) -> Self {
        SubprocessConfig {
            command,
            timeout: Duration::from_secs(30),
            retries: 2,
        }
    }
}

struct ChildIo {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

impl Drop for ChildIo {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

pub struct SubprocessOracle {
    io: Mutex<ChildIo>,
    config: SubprocessConfig,
    counter: QueryCounter,
    next_id: AtomicU64,
}

impl SubprocessOracle {
    pub fn spawn(config: SubprocessConfig) -> Result<Self> {
        if config.command.is_empty() {
            return Err(Error::Config("subprocess oracle needs a command".into()));
        }
        let mut child = Command::new(&config.command[0])
            .args(&config.command[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::Transport(format!("spawn {:?} failed: {e}", config.command[0])))?;
        let stdin = child.stdin.take().expect("stdin was piped");
        let stdout = child.stdout.take().expect("stdout was piped");
        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(SubprocessOracle {
            io: Mutex::new(ChildIo {
                child,
                stdin,
                lines,
            }),
            config,
            counter: QueryCounter::new(),
            next_id: AtomicU64::new(0),
        })
    }

    fn round_trip(
        io: &mut ChildIo,
        request_line: &str,
        id: &str,
        timeout: Duration,
    ) -> Result<(WireResponse, String)> {
        io.stdin
            .write_all(request_line.as_bytes())
            .and_then(|_| io.stdin.write_all(b"\n"))
            .and_then(|_| io.stdin.flush())
            .map_err(|e| Error::Transport(format!("write to child failed: {e}")))?;
        let deadline = Instant::now() + timeout;
        loop {
            let remaining = deadline
                .checked_duration_since(Instant::now())
                .ok_or_else(|| Error::Transport("timeout waiting for child response".into()))?;
            match io.lines.recv_timeout(remaining) {
                Ok(Ok(text)) => {
                    let resp = wire::decode_response(&text)?;
                    if resp.id == id {
                        return Ok((resp, text));
                    }
                    log::debug!("discarding stale child response id {:?}", resp.id);
                }
                Ok(Err(e)) => {
                    return Err(Error::Transport(format!("read from child failed: {e}")))
                }
                Err(RecvTimeoutError::Timeout) => {
                    return Err(Error::Transport("timeout waiting for child response".into()))
                }
                Err(RecvTimeoutError::Disconnected) => {
                    return Err(Error::Transport("child closed its stdout".into()))
                }
            }
        }
    }
}

impl Oracle for SubprocessOracle {
    fn classify(&self, image: &Image, ground_truth: LabelId) -> Result<Prediction> {
        self.counter.increment();
        let b64 = wire::encode_image(image)?;
        let mut io = self.io.lock().unwrap_or_else(PoisonError::into_inner);
        let mut last_transport = None;
        for _ in 0..=self.config.retries {
            let id = format!("q-{}", self.next_id.fetch_add(1, Ordering::Relaxed) + 1);
            let line = wire::encode_request(&id, &b64, ground_truth);
            match Self::round_trip(&mut io, &line, &id, self.config.timeout) {
                Ok((resp, raw)) => return wire::response_to_prediction(resp, ground_truth, &raw),
                Err(e) if e.is_transport() => last_transport = Some(e),
                Err(e) => return Err(e),
            }
        }
        Err(last_transport.expect("at least one attempt was made"))
    }

    fn query_count(&self) -> u64 {
        self.counter.total()
    }

    /// One request pipe, one request in flight.
    fn concurrent_safe(&self) -> bool {
        false
    }
}
