//! OpenAI-compatible chat-completion client.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use super::prompt::Prompt;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransportError {
    /// Connection problems, timeouts, 429 and 5xx responses.
    #[error("retryable: {0}")]
    Retryable(String),
    /// 401 and 403.
    #[error("authentication failed: {0}")]
    Auth(String),
    /// Anything else: bad request, unparsable body.
    #[error("{0}")]
    Fatal(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChatRequest {
    pub model: String,
    pub temperature: f64,
    pub system: String,
    pub user: String,
}

/// One chat-completion round trip.
pub trait ChatTransport: Send + Sync {
    fn chat(&self, request: &ChatRequest) -> Result<String, TransportError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteConfig {
    /// Full chat-completions URL, e.g. `https://api.openai.com/v1/chat/completions`.
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    #[serde(default)]
    pub max_tokens: Option<u32>,
}

fn default_workers() -> usize {
    4
}
fn default_max_retries() -> u32 {
    5
}
fn default_backoff_ms() -> u64 {
    500
}
fn default_timeout_secs() -> u64 {
    60
}

/// Blocking HTTP transport.
pub struct HttpTransport {
    client: reqwest::blocking::Client,
    endpoint: String,
    api_key: String,
    max_tokens: Option<u32>,
}

impl HttpTransport {
    /// Reads the API key from the configured environment variable.
    pub fn from_config(config: &RemoteConfig) -> Result<HttpTransport, TransportError> {
        let api_key = std::env::var(&config.api_key_env).map_err(|_| {
            TransportError::Auth(format!(
                "environment variable {} is not set",
                config.api_key_env
            ))
        })?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| TransportError::Fatal(e.to_string()))?;
        Ok(HttpTransport {
            client,
            endpoint: config.endpoint.clone(),
            api_key,
            max_tokens: config.max_tokens,
        })
    }
}

/// Text of the first choice in a chat-completions response body.
pub fn parse_completion(body: &str) -> Result<String, TransportError> {
    let v: Value = serde_json::from_str(body)
        .map_err(|e| TransportError::Fatal(format!("response body: {e}")))?;
    v.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| TransportError::Fatal("response has no choices[0].message.content".into()))
}

impl ChatTransport for HttpTransport {
    fn chat(&self, request: &ChatRequest) -> Result<String, TransportError> {
        let mut body = json!({
            "model": request.model,
            "temperature": request.temperature,
            "messages": [
                {"role": "system", "content": request.system},
                {"role": "user", "content": request.user},
            ],
        });
        if let Some(m) = self.max_tokens {
            body["max_tokens"] = json!(m);
        }
        let resp = self
            .client
            .post(&self.endpoint)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(|e| TransportError::Retryable(e.to_string()))?;
        let status = resp.status();
        let text = resp
            .text()
            .map_err(|e| TransportError::Retryable(e.to_string()))?;
        match status.as_u16() {
            200..=299 => parse_completion(&text),
            401 | 403 => Err(TransportError::Auth(format!("HTTP {status}"))),
            408 | 429 | 500..=599 => Err(TransportError::Retryable(format!("HTTP {status}"))),
            _ => Err(TransportError::Fatal(format!(
                "HTTP {status}: {}",
                text.chars().take(200).collect::<String>()
            ))),
        }
    }
}

/// Outcome of one slot after retries.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotResult {
    pub text: String,
    /// Failed attempts before the final one.
    pub retries: u32,
    /// Set when the slot still failed after all retries.
    pub error: Option<String>,
}

/// Sends `n` identical requests over up to `workers` threads. Results are
/// placed by slot index. Stops early and returns the auth error if any
/// request is rejected as unauthorized.
pub fn run_slots(
    transport: &dyn ChatTransport,
    request: &ChatRequest,
    n: usize,
    workers: usize,
    max_retries: u32,
    backoff: Duration,
) -> Result<Vec<SlotResult>, TransportError> {
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<SlotResult>>> = Mutex::new(vec![None; n]);
    let auth_failure: Mutex<Option<TransportError>> = Mutex::new(None);
    thread::scope(|scope| {
        for _ in 0..workers.clamp(1, n.max(1)) {
            scope.spawn(|| loop {
                if auth_failure.lock().expect("lock").is_some() {
                    return;
                }
                let slot = next.fetch_add(1, Ordering::SeqCst);
                if slot >= n {
                    return;
                }
                let mut retries = 0;
                let outcome = loop {
                    match transport.chat(request) {
                        Ok(text) => {
                            break SlotResult {
                                text,
                                retries,
                                error: None,
                            }
                        }
                        Err(TransportError::Retryable(msg)) if retries < max_retries => {
                            log::debug!("slot {slot}: retry {} after {msg}", retries + 1);
                            retries += 1;
                            thread::sleep(backoff.saturating_mul(1 << (retries - 1).min(6)));
                        }
                        Err(e @ TransportError::Auth(_)) => {
                            *auth_failure.lock().expect("lock") = Some(e);
                            return;
                        }
                        Err(e) => {
                            break SlotResult {
                                text: String::new(),
                                retries,
                                error: Some(e.to_string()),
                            }
                        }
                    }
                };
                results.lock().expect("lock")[slot] = Some(outcome);
            });
        }
    });
    if let Some(e) = auth_failure.into_inner().expect("lock") {
        return Err(e);
    }
    Ok(results
        .into_inner()
        .expect("lock")
        .into_iter()
        .map(|r| r.expect("every slot filled"))
        .collect())
}

/// Generator backed by a chat transport.
pub struct RemoteGenerator {
    pub transport: Box<dyn ChatTransport>,
    pub model: String,
    pub workers: usize,
    pub max_retries: u32,
    pub backoff: Duration,
}

impl RemoteGenerator {
    pub fn from_config(config: &RemoteConfig) -> Result<RemoteGenerator, TransportError> {
        Ok(RemoteGenerator {
            transport: Box::new(HttpTransport::from_config(config)?),
            model: config.model.clone(),
            workers: config.workers,
            max_retries: config.max_retries,
            backoff: Duration::from_millis(config.backoff_ms),
        })
    }

    pub fn request(&self, prompt: &Prompt, temperature: f64) -> ChatRequest {
        ChatRequest {
            model: self.model.clone(),
            temperature,
            system: prompt.system.clone(),
            user: prompt.user.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Flaky {
        failures_before_success: usize,
        calls: Mutex<usize>,
    }

    impl ChatTransport for Flaky {
        fn chat(&self, _: &ChatRequest) -> Result<String, TransportError> {
            let mut c = self.calls.lock().unwrap();
            *c += 1;
            if *c <= self.failures_before_success {
                Err(TransportError::Retryable("503".into()))
            } else {
                Ok("CCO".into())
            }
        }
    }

    fn req() -> ChatRequest {
        ChatRequest {
            model: "m".into(),
            temperature: 1.0,
            system: "s".into(),
            user: "u".into(),
        }
    }

    #[test]
    fn retries_counted() {
        let t = Flaky {
            failures_before_success: 3,
            calls: Mutex::new(0),
        };
        let out = run_slots(&t, &req(), 1, 1, 5, Duration::ZERO).unwrap();
        assert_eq!(
            out,
            vec![SlotResult {
                text: "CCO".into(),
                retries: 3,
                error: None
            }]
        );
    }

    #[test]
    fn retry_cap_gives_empty_output() {
        let t = Flaky {
            failures_before_success: 100,
            calls: Mutex::new(0),
        };
        let out = run_slots(&t, &req(), 2, 1, 2, Duration::ZERO).unwrap();
        assert!(out
            .iter()
            .all(|r| r.text.is_empty() && r.retries == 2 && r.error.is_some()));
    }

    #[test]
    fn auth_aborts() {
        struct Denied;
        impl ChatTransport for Denied {
            fn chat(&self, _: &ChatRequest) -> Result<String, TransportError> {
                Err(TransportError::Auth("401".into()))
            }
        }
        assert!(matches!(
            run_slots(&Denied, &req(), 4, 2, 3, Duration::ZERO),
            Err(TransportError::Auth(_))
        ));
    }

    #[test]
    fn completion_body() {
        let body = r#"{"choices":[{"message":{"role":"assistant","content":"CCO"}}]}"#;
        assert_eq!(parse_completion(body).unwrap(), "CCO");
        assert!(parse_completion("{}").is_err());
    }
}
