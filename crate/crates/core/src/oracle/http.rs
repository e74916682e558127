//! External classifier behind an HTTP endpoint.
//!
//! `POST {base}/classify` with the request JSON; a 200 carrying the response
//! JSON is the only success. Any other status, a timeout, or a connection
//! failure is a transport failure and is retried. Safe for concurrent use up
//! to `max_in_flight` simultaneous requests. Plain HTTP only.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Condvar, Mutex, PoisonError};
use std::time::Duration;

use crate::compositor::Image;
use crate::error::{Error, Result};
use crate::oracle::wire;
use crate::oracle::{LabelId, Oracle, Prediction, QueryCounter};

#[derive(Debug, Clone, PartialEq)]
pub struct HttpConfig {
    /// Server base, e.g. `http://127.0.0.1:8080`.
    pub url: String,
    pub timeout: Duration,
    /// Additional attempts after a transport failure.
    pub retries: u32,
    pub max_in_flight: usize,
}

impl HttpConfig {
    pub fn new(url: impl Into<String>) -> Self {
        HttpConfig {
            url: url.into(),
            timeout: Duration::from_secs(30),
            retries: 2,
            max_in_flight: 4,
        }
    }
}

/// Counting gate bounding concurrent requests.
struct Gate {
    state: Mutex<usize>,
    cv: Condvar,
    max: usize,
}

impl Gate {
    fn new(max: usize) -> Self {
        Gate {
            state: Mutex::new(0),
            cv: Condvar::new(),
            max: max.max(1),
        }
    }

    fn acquire(&self) -> GateGuard<'_> {
        let mut in_flight = self.state.lock().unwrap_or_else(PoisonError::into_inner);
        while *in_flight >= self.max {
            in_flight = self.cv.wait(in_flight).unwrap_or_else(PoisonError::into_inner);
        }
        *in_flight += 1;
        GateGuard { gate: self }
    }
}

struct GateGuard<'a> {
    gate: &'a Gate,
}

impl Drop for GateGuard<'_> {
    fn drop(&mut self) {
        let mut in_flight = self
            .gate
            .state
            .lock()
            .unwrap_or_else(PoisonError::into_inner);
        *in_flight -= 1;
        self.gate.cv.notify_one();
    }
}

pub struct HttpOracle {
    agent: ureq::Agent,
    endpoint: String,
    config: HttpConfig,
    counter: QueryCounter,
    next_id: AtomicU64,
    gate: Gate,
}

impl HttpOracle {
    pub fn new(config: HttpConfig) -> Result<Self> {
        if config.url.is_empty() {
            return Err(Error::Config("http oracle needs a url".into()));
        }
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .build()
            .into();
        let endpoint = format!("{}/classify", config.url.trim_end_matches('/'));
        Ok(HttpOracle {
            agent,
            endpoint,
            gate: Gate::new(config.max_in_flight),
            config,
            counter: QueryCounter::new(),
            next_id: AtomicU64::new(0),
        })
    }

    fn post_once(&self, body: &str) -> Result<String> {
        let mut resp = self
            .agent
            .post(&self.endpoint)
            .header("content-type", "application/json")
            .send(body.as_bytes())
            .map_err(|e| Error::Transport(format!("POST {} failed: {e}", self.endpoint)))?;
        resp.body_mut()
            .read_to_string()
            .map_err(|e| Error::Transport(format!("reading response body failed: {e}")))
    }
}

impl Oracle for HttpOracle {
    fn classify(&self, image: &Image, ground_truth: LabelId) -> Result<Prediction> {
        self.counter.increment();
        let b64 = wire::encode_image(image)?;
        let id = format!("q-{}", self.next_id.fetch_add(1, Ordering::Relaxed) + 1);
        let body = wire::encode_request(&id, &b64, ground_truth);
        let _permit = self.gate.acquire();
        let mut last_transport = None;
        for _ in 0..=self.config.retries {
            match self.post_once(&body) {
                Ok(text) => {
                    let resp = wire::decode_response(&text)?;
                    if resp.id != id {
                        return Err(Error::Protocol {
                            reason: format!("response id {:?} does not match request {id:?}", resp.id),
                            payload: text,
                        });
                    }
                    return wire::response_to_prediction(resp, ground_truth, &text);
                }
                Err(e) if e.is_transport() => last_transport = Some(e),
                Err(e) => return Err(e),
            }
        }
        Err(last_transport.expect("at least one attempt was made"))
    }

    fn query_count(&self) -> u64 {
        self.counter.total()
    }

    fn concurrent_safe(&self) -> bool {
        true
    }
}
