//! HTTP client for a real QA model service.
//!
//! Wire protocol: POST a JSON body
//! `{"question": string, "context": string|null, "options": ["yes","no"]}`
//! and expect `{"answer": "yes"|"no", "confidence": number in [0,1]}`.
//! Transport failures are retried idempotently with capped backoff and
//! are never interpreted as answers; malformed payloads and non-success
//! statuses surface as distinct errors.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::domain::Label;
use crate::error::{Error, Result};

use super::{Oracle, OracleAnswer, Query};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteConfig {
    pub timeout_ms: u64,
    pub max_retries: u32,
    pub backoff_ms: u64,
    pub backoff_cap_ms: u64,
    /// Upper bound on concurrent in-flight requests.
    pub max_in_flight: usize,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        RemoteConfig {
            timeout_ms: 5_000,
            max_retries: 2,
            backoff_ms: 250,
            backoff_cap_ms: 2_000,
            max_in_flight: 8,
        }
    }
}

#[derive(Serialize)]
struct WireRequest<'a> {
    question: &'a str,
    context: Option<&'a str>,
    options: [&'a str; 2],
}

#[derive(Deserialize)]
struct WireResponse {
    answer: String,
    confidence: f64,
}

pub struct RemoteOracle {
    agent: ureq::Agent,
    endpoint: String,
    config: RemoteConfig,
    gate: Semaphore,
    retries_total: AtomicU64,
}

impl RemoteOracle {
    pub fn new(endpoint: impl Into<String>, config: RemoteConfig) -> Result<Self> {
        if config.max_in_flight == 0 {
            return Err(Error::Config("max_in_flight must be positive".into()));
        }
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(config.timeout_ms)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(RemoteOracle {
            agent,
            endpoint: endpoint.into(),
            gate: Semaphore::new(config.max_in_flight),
            config,
            retries_total: AtomicU64::new(0),
        })
    }

    /// Total retries performed over the client's lifetime.
    pub fn retries_total(&self) -> u64 {
        self.retries_total.load(Ordering::Relaxed)
    }

    fn attempt(&self, query: &Query) -> Result<OracleAnswer> {
        let body = WireRequest {
            question: &query.question_text,
            context: query.context.as_deref(),
            options: ["yes", "no"],
        };
        let mut response = self
            .agent
            .post(&self.endpoint)
            .send_json(&body)
            .map_err(|e| Error::OracleTransport(e.to_string()))?;
        let status = response.status().as_u16();
        if !(200..300).contains(&status) {
            return Err(Error::OracleStatus(status));
        }
        let wire: WireResponse = response
            .body_mut()
            .read_json()
            .map_err(|e| Error::OracleMalformed(e.to_string()))?;
        let label = match wire.answer.as_str() {
            "yes" => Label::T,
            "no" => Label::F,
            other => {
                return Err(Error::OracleMalformed(format!(
                    "answer must be \"yes\" or \"no\", got {other:?}"
                )))
            }
        };
        if !(0.0..=1.0).contains(&wire.confidence) || !wire.confidence.is_finite() {
            return Err(Error::OracleMalformed(format!(
                "confidence {} outside [0, 1]",
                wire.confidence
            )));
        }
        Ok(OracleAnswer {
            label,
            confidence: wire.confidence,
        })
    }

    fn retriable(error: &Error, status_retry: bool) -> bool {
        match error {
            Error::OracleTransport(_) => true,
            Error::OracleStatus(code) => status_retry && *code >= 500,
            _ => false,
        }
    }
}

impl Oracle for RemoteOracle {
    fn ask(&self, query: &Query) -> Result<OracleAnswer> {
        let _permit = self.gate.acquire();
        let mut attempt = 0u32;
        loop {
            match self.attempt(query) {
                Ok(answer) => return Ok(answer),
                Err(e) if Self::retriable(&e, true) && attempt < self.config.max_retries => {
                    let backoff = self
                        .config
                        .backoff_ms
                        .saturating_mul(1 << attempt.min(16))
                        .min(self.config.backoff_cap_ms);
                    log::debug!(
                        "remote oracle attempt {} failed ({e}); retrying in {backoff} ms",
                        attempt + 1
                    );
                    self.retries_total.fetch_add(1, Ordering::Relaxed);
                    std::thread::sleep(Duration::from_millis(backoff));
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }
}

/// Counting semaphore bounding in-flight requests.
struct Semaphore {
    available: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Semaphore);

impl Semaphore {
    fn new(n: usize) -> Self {
        Semaphore {
            available: Mutex::new(n),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut available = self.available.lock().unwrap();
        while *available == 0 {
            available = self.cv.wait(available).unwrap();
        }
        *available -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut available = self.0.available.lock().unwrap();
        *available += 1;
        self.0.cv.notify_one();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{ground_template, Relation, StatementTemplate};
    use std::io::{Read, Write};
    use std::net::TcpListener;

    fn query() -> Query {
        let s = ground_template(&StatementTemplate::new(Relation::IsA, "bird"), "swallow")
            .unwrap();
        Query::new(s, None)
    }

    /// Stub server: the i-th accepted connection gets the i-th canned
    /// response after its configured delay, each on its own thread so a
    /// slow connection never blocks a retry.
    fn stub_server(responses: Vec<(u64, String)>) -> String {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        std::thread::spawn(move || {
            for (delay_ms, body) in responses {
                let Ok((mut stream, _)) = listener.accept() else {
                    return;
                };
                std::thread::spawn(move || {
                    let mut buf = [0u8; 4096];
                    let _ = stream.read(&mut buf);
                    if delay_ms > 0 {
                        std::thread::sleep(Duration::from_millis(delay_ms));
                    }
                    let response = format!(
                        "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
                        body.len(),
                        body
                    );
                    let _ = stream.write_all(response.as_bytes());
                });
            }
            // hold the listener open briefly so late retries see RST
            // only after the configured responses are consumed
            std::thread::sleep(Duration::from_millis(2_000));
        });
        format!("http://{addr}/ask")
    }

    #[test]
    fn parses_well_formed_response() {
        let url = stub_server(vec![(0, r#"{"answer":"yes","confidence":0.9}"#.into())]);
        let oracle = RemoteOracle::new(url, RemoteConfig::default()).unwrap();
        let a = oracle.ask(&query()).unwrap();
        assert_eq!(a.label, Label::T);
        assert_eq!(a.confidence, 0.9);
    }

    #[test]
    fn out_of_range_confidence_is_malformed() {
        let url = stub_server(vec![(0, r#"{"answer":"yes","confidence":1.5}"#.into())]);
        let oracle = RemoteOracle::new(url, RemoteConfig::default()).unwrap();
        assert!(matches!(
            oracle.ask(&query()),
            Err(Error::OracleMalformed(_))
        ));
    }

    #[test]
    fn bad_answer_string_is_malformed() {
        let url = stub_server(vec![(0, r#"{"answer":"maybe","confidence":0.5}"#.into())]);
        let oracle = RemoteOracle::new(url, RemoteConfig::default()).unwrap();
        assert!(matches!(
            oracle.ask(&query()),
            Err(Error::OracleMalformed(_))
        ));
    }

    #[test]
    fn timeout_then_success_retries_once() {
        let body = r#"{"answer":"no","confidence":0.7}"#.to_string();
        let url = stub_server(vec![(600, body.clone()), (0, body)]);
        let config = RemoteConfig {
            timeout_ms: 200,
            max_retries: 2,
            backoff_ms: 10,
            backoff_cap_ms: 20,
            max_in_flight: 2,
        };
        let oracle = RemoteOracle::new(url, config).unwrap();
        let a = oracle.ask(&query()).unwrap();
        assert_eq!(a.label, Label::F);
        assert_eq!(oracle.retries_total(), 1);
    }

    #[test]
    fn unreachable_endpoint_is_transport_error() {
        // nothing listens on this port
        let config = RemoteConfig {
            timeout_ms: 200,
            max_retries: 0,
            backoff_ms: 1,
            backoff_cap_ms: 1,
            max_in_flight: 1,
        };
        let oracle = RemoteOracle::new("http://127.0.0.1:9/ask", config).unwrap();
        let err = oracle.ask(&query()).unwrap_err();
        assert!(err.is_retriable(), "expected transport error, got {err}");
    }
}
