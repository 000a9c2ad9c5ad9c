//! Blocking JSON-over-HTTP transport with bounded retries, shared by the
//! chat-completion provider and the remote embedding client.

use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;

/// Environment variable consulted for the bearer token.
pub const API_KEY_ENV: &str = "SHOPBENCH_API_KEY";

#[derive(Debug, Clone)]
pub struct TransportConfig {
    pub endpoint: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
    pub max_attempts: u32,
    pub backoff: Duration,
}

impl TransportConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            api_key: None,
            timeout: Duration::from_secs(120),
            max_attempts: 3,
            backoff: Duration::from_millis(500),
        }
    }

    /// Picks the API key up from [`API_KEY_ENV`] if it is set.
    pub fn with_env_key(mut self) -> Self {
        self.api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        self
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TransportError {
    #[error("could not build HTTP client: {0}")]
    Client(String),
    #[error("request to {endpoint} failed after {attempts} attempt(s): {last}")]
    Exhausted {
        endpoint: String,
        attempts: u32,
        last: String,
    },
    #[error("{endpoint} returned HTTP {status}: {body}")]
    Status {
        endpoint: String,
        status: u16,
        body: String,
    },
    #[error("could not decode response from {endpoint}: {message}")]
    Decode { endpoint: String, message: String },
}

impl TransportError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, TransportError::Exhausted { .. })
    }
}

#[derive(Debug, Clone)]
pub struct HttpTransport {
    client: reqwest::blocking::Client,
    config: TransportConfig,
}

impl HttpTransport {
    pub fn new(config: TransportConfig) -> Result<Self, TransportError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| TransportError::Client(e.to_string()))?;
        Ok(Self { client, config })
    }

    pub fn config(&self) -> &TransportConfig {
        &self.config
    }

    /// POSTs `body` and decodes the JSON response. Connection failures, 429
    /// and 5xx responses are retried with linear backoff; other statuses fail
    /// immediately.
    pub fn post_json<B: Serialize, R: DeserializeOwned>(&self, body: &B) -> Result<R, TransportError> {
        let endpoint = &self.config.endpoint;
        let attempts = self.config.max_attempts.max(1);
        let mut last = String::new();
        for attempt in 1..=attempts {
            let mut req = self.client.post(endpoint).json(body);
            if let Some(key) = &self.config.api_key {
                req = req.bearer_auth(key);
            }
            match req.send() {
                Ok(resp) => {
                    let status = resp.status();
                    if status.is_success() {
                        let text = resp.text().map_err(|e| TransportError::Decode {
                            endpoint: endpoint.clone(),
                            message: e.to_string(),
                        })?;
                        return serde_json::from_str(&text).map_err(|e| TransportError::Decode {
                            endpoint: endpoint.clone(),
                            message: e.to_string(),
                        });
                    }
                    let body = resp.text().unwrap_or_default();
                    if status.as_u16() == 429 || status.is_server_error() {
                        last = format!("HTTP {status}: {body}");
                    } else {
                        return Err(TransportError::Status {
                            endpoint: endpoint.clone(),
                            status: status.as_u16(),
                            body,
                        });
                    }
                }
                Err(e) => last = e.to_string(),
            }
            tracing::warn!(attempt, %endpoint, error = %last, "request failed");
            if attempt < attempts {
                std::thread::sleep(self.config.backoff * attempt);
            }
        }
        Err(TransportError::Exhausted {
            endpoint: endpoint.clone(),
            attempts,
            last,
        })
    }
}
