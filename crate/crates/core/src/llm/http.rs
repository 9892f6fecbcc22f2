//! OpenAI-compatible chat-completions backend with per-token log-probability
//! extraction, bounded retry, and a concurrency cap.

use std::collections::BTreeMap;
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::Deserialize;
use serde_json::json;

use super::{Backend, LlmError, ScoreRequest};

/// Retry schedule for transport failures and retryable status codes.
#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay_ms: u64,
    pub factor: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 3,
            base_delay_ms: 250,
            factor: 2.0,
        }
    }
}

impl RetryPolicy {
    fn delay(&self, attempt: u32) -> Duration {
        let ms = self.base_delay_ms as f64 * self.factor.powi(attempt as i32);
        Duration::from_millis(ms as u64)
    }
}

#[derive(Debug, Clone)]
pub struct HttpConfig {
    pub model_id: String,
    /// Base URL up to but excluding `/v1/chat/completions`.
    pub api_base: String,
    pub api_key: String,
    /// How many alternatives to request per output position.
    pub top_logprobs: u8,
    pub retry: RetryPolicy,
    /// Maximum in-flight requests.
    pub parallelism: usize,
    pub timeout: Duration,
}

impl HttpConfig {
    pub fn new(model_id: impl Into<String>, api_base: impl Into<String>, api_key: impl Into<String>) -> HttpConfig {
        HttpConfig {
            model_id: model_id.into(),
            api_base: api_base.into(),
            api_key: api_key.into(),
            top_logprobs: 20,
            retry: RetryPolicy::default(),
            parallelism: 4,
            timeout: Duration::from_secs(60),
        }
    }
}

/// Counting semaphore bounding in-flight requests.
struct Gate {
    permits: Mutex<usize>,
    available: Condvar,
}

impl Gate {
    fn new(permits: usize) -> Gate {
        Gate {
            permits: Mutex::new(permits.max(1)),
            available: Condvar::new(),
        }
    }

    fn acquire(&self) -> GateGuard<'_> {
        let mut permits = self.permits.lock().unwrap();
        while *permits == 0 {
            permits = self.available.wait(permits).unwrap();
        }
        *permits -= 1;
        GateGuard { gate: self }
    }
}

struct GateGuard<'a> {
    gate: &'a Gate,
}

impl Drop for GateGuard<'_> {
    fn drop(&mut self) {
        *self.gate.permits.lock().unwrap() += 1;
        self.gate.available.notify_one();
    }
}

pub struct HttpBackend {
    config: HttpConfig,
    client: reqwest::blocking::Client,
    gate: Gate,
}

// Wire types: only the fields the extraction needs.
#[derive(Debug, Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Debug, Deserialize)]
struct Choice {
    logprobs: Option<Logprobs>,
}

#[derive(Debug, Deserialize)]
struct Logprobs {
    content: Option<Vec<TokenLogprob>>,
}

#[derive(Debug, Deserialize)]
struct TokenLogprob {
    token: String,
    logprob: f64,
    #[serde(default)]
    top_logprobs: Vec<TopLogprob>,
}

#[derive(Debug, Deserialize)]
struct TopLogprob {
    token: String,
    logprob: f64,
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Result<HttpBackend, LlmError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| LlmError::Backend {
                backend: config.model_id.clone(),
                message: format!("failed to build http client: {e}"),
            })?;
        let gate = Gate::new(config.parallelism);
        Ok(HttpBackend { config, client, gate })
    }

    fn endpoint(&self) -> String {
        format!(
            "{}/v1/chat/completions",
            self.config.api_base.trim_end_matches('/')
        )
    }

    fn post_once(&self, body: &serde_json::Value) -> Result<ChatResponse, (bool, String)> {
        let response = self
            .client
            .post(self.endpoint())
            .header("authorization", format!("Bearer {}", self.config.api_key))
            .json(body)
            .send()
            .map_err(|e| (true, format!("transport error: {e}")))?;
        let status = response.status();
        if !status.is_success() {
            let retryable = status.as_u16() == 429 || status.is_server_error();
            let body = response.text().unwrap_or_default();
            return Err((retryable, format!("http {status}: {body}")));
        }
        response
            .json::<ChatResponse>()
            .map_err(|e| (false, format!("invalid response body: {e}")))
    }

    /// Per-label log-probabilities from the first output position's top-k
    /// list. A label matches a returned token when the trimmed token equals
    /// it; duplicates keep the highest log-probability. Labels absent from
    /// the returned top-k get the floor (min returned logprob − 10); the
    /// floor is computed here because only the backend sees the full list.
    fn extract(&self, response: &ChatResponse, labels: &[String]) -> Result<BTreeMap<String, f64>, LlmError> {
        let missing = || LlmError::MissingLogprobs {
            backend: self.identity(),
        };
        let first = response
            .choices
            .first()
            .and_then(|c| c.logprobs.as_ref())
            .and_then(|l| l.content.as_ref())
            .and_then(|c| c.first())
            .ok_or_else(missing)?;
        let mut seen: Vec<(String, f64)> = first
            .top_logprobs
            .iter()
            .map(|t| (t.token.clone(), t.logprob))
            .collect();
        if seen.is_empty() {
            seen.push((first.token.clone(), first.logprob));
        }
        let floor = seen
            .iter()
            .map(|(_, lp)| *lp)
            .fold(f64::INFINITY, f64::min)
            - 10.0;
        let mut matched: BTreeMap<String, f64> = BTreeMap::new();
        for (token, logprob) in &seen {
            let trimmed = token.trim();
            if labels.iter().any(|l| l == trimmed) {
                let slot = matched.entry(trimmed.to_string()).or_insert(f64::NEG_INFINITY);
                if *logprob > *slot {
                    *slot = *logprob;
                }
            }
        }
        Ok(labels
            .iter()
            .map(|l| (l.clone(), matched.get(l).copied().unwrap_or(floor)))
            .collect())
    }
}

impl Backend for HttpBackend {
    fn identity(&self) -> String {
        format!("http:{}@{}", self.config.model_id, self.config.api_base)
    }

    fn score(&self, req: &ScoreRequest<'_>) -> Result<BTreeMap<String, f64>, LlmError> {
        let _permit = self.gate.acquire();
        let body = json!({
            "model": self.config.model_id,
            "messages": [{"role": "user", "content": req.prompt}],
            "temperature": 0,
            "max_tokens": 1,
            "logprobs": true,
            "top_logprobs": self.config.top_logprobs,
        });
        let mut last_error = String::new();
        for attempt in 0..self.config.retry.max_attempts {
            match self.post_once(&body) {
                Ok(response) => return self.extract(&response, req.labels),
                Err((retryable, message)) => {
                    last_error = message;
                    if !retryable || attempt + 1 == self.config.retry.max_attempts {
                        break;
                    }
                    std::thread::sleep(self.config.retry.delay(attempt));
                }
            }
        }
        Err(LlmError::Backend {
            backend: self.identity(),
            message: last_error,
        })
    }
}
