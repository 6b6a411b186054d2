//! Blocking HTTP client for the inference sidecar.

use std::time::Duration;

use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde::de::DeserializeOwned;
use serde::Serialize;

use super::protocol::{
    ClaimSplitRequest, ClaimSplitResponse, HealthResponse, NliPair, NliRequest, NliResponse,
};
use super::{BackendError, ClaimSplitter, EntailmentBackend, Verdict};

#[derive(Debug, Clone)]
pub struct RemoteConfig {
    /// Base URL, e.g. `http://127.0.0.1:8900`.
    pub endpoint: String,
    pub max_batch: usize,
    /// Retries after the first attempt on connection failures, timeouts,
    /// 429 and 5xx responses.
    pub max_retries: u32,
    pub timeout: Duration,
    pub backoff: Duration,
}

impl RemoteConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into().trim_end_matches('/').to_string(),
            max_batch: 32,
            max_retries: 3,
            timeout: Duration::from_secs(120),
            backoff: Duration::from_millis(250),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RemoteBackend {
    client: Client,
    config: RemoteConfig,
}

enum Attempt {
    Retry(String),
    Fatal(BackendError),
}

impl RemoteBackend {
    pub fn new(config: RemoteConfig) -> Result<Self, BackendError> {
        if config.max_batch == 0 {
            return Err(BackendError::InvalidInput("max_batch must be at least 1".into()));
        }
        let client = Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| BackendError::Unavailable(e.to_string()))?;
        Ok(Self { client, config })
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    pub fn health(&self) -> Result<HealthResponse, BackendError> {
        let url = format!("{}/healthz", self.config.endpoint);
        self.with_retries(|| {
            let resp = self.client.get(&url).send();
            Self::decode(resp)
        })
    }

    /// One `/nli` round trip. The batch must fit the configured maximum.
    pub fn call_nli(&self, pairs: &[NliPair]) -> Result<Vec<Verdict>, BackendError> {
        self.check_batch(pairs.len())?;
        let body = NliRequest { pairs: pairs.to_vec() };
        let resp: NliResponse = self.post("nli", &body)?;
        for w in &resp.warnings {
            tracing::warn!(warning = %w, "sidecar /nli");
        }
        if resp.verdicts.len() != pairs.len() {
            return Err(BackendError::Protocol(format!(
                "/nli returned {} verdicts for {} pairs",
                resp.verdicts.len(),
                pairs.len()
            )));
        }
        resp.verdicts.into_iter().map(Verdict::try_from).collect()
    }

    /// One `/claimsplit` round trip.
    pub fn call_claimsplit(&self, sentences: &[String]) -> Result<Vec<Vec<String>>, BackendError> {
        self.check_batch(sentences.len())?;
        let body = ClaimSplitRequest { sentences: sentences.to_vec() };
        let resp: ClaimSplitResponse = self.post("claimsplit", &body)?;
        for w in &resp.warnings {
            tracing::warn!(warning = %w, "sidecar /claimsplit");
        }
        if resp.claims.len() != sentences.len() {
            return Err(BackendError::Protocol(format!(
                "/claimsplit returned {} claim lists for {} sentences",
                resp.claims.len(),
                sentences.len()
            )));
        }
        Ok(resp.claims)
    }

    fn check_batch(&self, size: usize) -> Result<(), BackendError> {
        if size > self.config.max_batch {
            Err(BackendError::BatchTooLarge { size, max: self.config.max_batch })
        } else {
            Ok(())
        }
    }

    fn post<B: Serialize, R: DeserializeOwned>(&self, path: &str, body: &B) -> Result<R, BackendError> {
        let url = format!("{}/{path}", self.config.endpoint);
        self.with_retries(|| Self::decode(self.client.post(&url).json(body).send()))
    }

    fn decode<R: DeserializeOwned>(resp: reqwest::Result<reqwest::blocking::Response>) -> Result<R, Attempt> {
        let resp = match resp {
            Ok(r) => r,
            Err(e) if e.is_connect() || e.is_timeout() || e.is_request() => {
                return Err(Attempt::Retry(e.to_string()))
            }
            Err(e) => return Err(Attempt::Fatal(BackendError::Unavailable(e.to_string()))),
        };
        let status = resp.status();
        if status.is_server_error() || status == StatusCode::TOO_MANY_REQUESTS {
            return Err(Attempt::Retry(format!("HTTP {status}")));
        }
        if !status.is_success() {
            let text = resp.text().unwrap_or_default();
            return Err(Attempt::Fatal(BackendError::Protocol(format!("HTTP {status}: {text}"))));
        }
        let bytes = resp
            .bytes()
            .map_err(|e| Attempt::Retry(e.to_string()))?;
        serde_json::from_slice(&bytes)
            .map_err(|e| Attempt::Fatal(BackendError::Protocol(format!("malformed response: {e}"))))
    }

    fn with_retries<R>(&self, mut call: impl FnMut() -> Result<R, Attempt>) -> Result<R, BackendError> {
        let mut attempt = 0;
        loop {
            match call() {
                Ok(r) => return Ok(r),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retry(msg)) if attempt >= self.config.max_retries => {
                    return Err(BackendError::Unavailable(format!(
                        "{} after {} attempt(s): {msg}",
                        self.config.endpoint,
                        attempt + 1
                    )))
                }
                Err(Attempt::Retry(msg)) => {
                    tracing::debug!(attempt, %msg, "retrying sidecar call");
                    std::thread::sleep(self.config.backoff * (attempt + 1));
                    attempt += 1;
                }
            }
        }
    }
}

impl EntailmentBackend for RemoteBackend {
    fn classify_batch(&self, pairs: &[NliPair]) -> Result<Vec<Verdict>, BackendError> {
        let mut out = Vec::with_capacity(pairs.len());
        for chunk in pairs.chunks(self.config.max_batch) {
            out.extend(self.call_nli(chunk)?);
        }
        Ok(out)
    }

    fn fingerprint(&self) -> String {
        format!("remote:{}", self.config.endpoint)
    }
}

impl ClaimSplitter for RemoteBackend {
    fn split_batch(&self, sentences: &[String]) -> Result<Vec<Vec<String>>, BackendError> {
        let mut out = Vec::with_capacity(sentences.len());
        for chunk in sentences.chunks(self.config.max_batch) {
            out.extend(self.call_claimsplit(chunk)?);
        }
        Ok(out)
    }

    fn fingerprint(&self) -> String {
        format!("remote:{}", self.config.endpoint)
    }
}
