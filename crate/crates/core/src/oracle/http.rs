//! OpenAI-compatible chat-completions backend.

use std::io::Cursor;
use std::time::Duration;

use base64::Engine as _;
use image::{ImageFormat, RgbImage};
use serde_json::{json, Value};

use super::{Completion, OracleBackend, OracleRequest, TokenProb};
use crate::error::OracleError;

pub const ENV_API_BASE: &str = "ZOOMEYE_API_BASE";
pub const ENV_API_KEY: &str = "ZOOMEYE_API_KEY";
pub const ENV_MODEL: &str = "ZOOMEYE_MODEL";

const TOP_LOGPROBS: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub initial_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            attempts: 3,
            initial_backoff: Duration::from_millis(500),
        }
    }
}

impl RetryPolicy {
    /// Delay after the `attempt`-th failure (1-based): 500 ms, 1 s, 2 s, …
    pub fn backoff(&self, attempt: u32) -> Duration {
        self.initial_backoff * 2u32.saturating_pow(attempt.saturating_sub(1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HttpConfig {
    pub api_base: String,
    pub api_key: Option<String>,
    pub model: String,
    pub retry: RetryPolicy,
    pub timeout: Duration,
}

impl HttpConfig {
    pub fn new(api_base: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            api_base: api_base.into().trim_end_matches('/').to_string(),
            api_key: None,
            model: model.into(),
            retry: RetryPolicy::default(),
            timeout: Duration::from_secs(120),
        }
    }

    /// Reads `ZOOMEYE_API_BASE`, `ZOOMEYE_API_KEY` and `ZOOMEYE_MODEL`.
    pub fn from_env() -> Result<Self, OracleError> {
        let base = std::env::var(ENV_API_BASE)
            .map_err(|_| OracleError::InvalidRequest(format!("{ENV_API_BASE} is not set")))?;
        let model = std::env::var(ENV_MODEL).unwrap_or_else(|_| "default".into());
        let mut cfg = Self::new(base, model);
        cfg.api_key = std::env::var(ENV_API_KEY).ok().filter(|k| !k.is_empty());
        Ok(cfg)
    }
}

pub struct HttpBackend {
    config: HttpConfig,
    agent: ureq::Agent,
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self { config, agent }
    }

    pub fn config(&self) -> &HttpConfig {
        &self.config
    }

    /// Chat-completions body for `request`.
    pub fn request_body(&self, request: &OracleRequest<'_>) -> Result<Value, OracleError> {
        let mut messages = Vec::with_capacity(request.history.len() * 2 + 1);
        for turn in &request.history {
            messages.push(json!({"role": "user", "content": turn.user}));
            messages.push(json!({"role": "assistant", "content": turn.assistant}));
        }
        let mut content = Vec::with_capacity(request.images.len() + 1);
        for view in &request.images {
            let img = view.render(request.source)?;
            content.push(json!({
                "type": "image_url",
                "image_url": {"url": data_url(&img)?},
            }));
        }
        content.push(json!({"type": "text", "text": request.prompt}));
        messages.push(json!({"role": "user", "content": content}));

        let mut body = json!({
            "model": self.config.model,
            "messages": messages,
            "temperature": 0,
            "max_tokens": request.max_new_tokens,
        });
        if request.want_logprobs {
            body["logprobs"] = json!(true);
            body["top_logprobs"] = json!(TOP_LOGPROBS);
        }
        Ok(body)
    }

    fn post_once(&self, body: &Value) -> Result<Value, Attempt> {
        let url = format!("{}/chat/completions", self.config.api_base);
        let mut req = self.agent.post(&url);
        if let Some(key) = &self.config.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req
            .send_json(body)
            .map_err(|e| Attempt::Retry(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| Attempt::Retry(e.to_string()))?;
        match status {
            200..=299 => serde_json::from_str(&text)
                .map_err(|e| Attempt::Fatal(OracleError::Protocol(format!("invalid JSON: {e}")))),
            408 | 429 | 500..=599 => Attempt::retry(format!("http status {status}")),
            _ => Err(Attempt::Fatal(OracleError::Protocol(format!(
                "http status {status}: {}",
                text.chars().take(200).collect::<String>()
            )))),
        }
    }
}

enum Attempt {
    Retry(String),
    Fatal(OracleError),
}

impl Attempt {
    fn retry<T>(reason: String) -> Result<T, Attempt> {
        Err(Attempt::Retry(reason))
    }
}

fn data_url(img: &RgbImage) -> Result<String, OracleError> {
    let mut buf = Cursor::new(Vec::new());
    img.write_to(&mut buf, ImageFormat::Png)
        .map_err(|e| OracleError::InvalidRequest(format!("cannot encode image: {e}")))?;
    Ok(format!(
        "data:image/png;base64,{}",
        base64::engine::general_purpose::STANDARD.encode(buf.get_ref())
    ))
}

/// Pulls the completion text and first-token candidates out of a
/// chat-completions response.
pub(crate) fn parse_response(resp: &Value) -> Result<Completion, OracleError> {
    let choice = resp
        .get("choices")
        .and_then(Value::as_array)
        .and_then(|c| c.first())
        .ok_or_else(|| OracleError::Protocol("response has no choices".into()))?;
    let message = choice
        .get("message")
        .ok_or_else(|| OracleError::Protocol("choice has no message".into()))?;
    let text = match message.get("content") {
        Some(Value::String(s)) => s.clone(),
        Some(Value::Null) | None => String::new(),
        Some(other) => {
            return Err(OracleError::Protocol(format!(
                "unexpected message content: {other}"
            )))
        }
    };

    let first = choice
        .get("logprobs")
        .and_then(|l| l.get("content"))
        .and_then(Value::as_array)
        .and_then(|c| c.first());
    let first_token = first.map(|entry| {
        let mut cands: Vec<TokenProb> = entry
            .get("top_logprobs")
            .and_then(Value::as_array)
            .map(|tops| tops.iter().filter_map(token_prob).collect())
            .unwrap_or_default();
        if let Some(chosen) = token_prob(entry) {
            if !cands.iter().any(|c| c.token == chosen.token) {
                cands.push(chosen);
            }
        }
        cands
    });
    Ok(Completion { text, first_token })
}

fn token_prob(v: &Value) -> Option<TokenProb> {
    Some(TokenProb {
        token: v.get("token")?.as_str()?.to_string(),
        prob: v.get("logprob")?.as_f64()?.exp(),
    })
}

impl OracleBackend for HttpBackend {
    fn complete(&self, request: &OracleRequest<'_>) -> Result<Completion, OracleError> {
        let body = self.request_body(request)?;
        let attempts = self.config.retry.attempts.max(1);
        let mut last = String::new();
        for attempt in 1..=attempts {
            match self.post_once(&body) {
                Ok(v) => return parse_response(&v),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retry(reason)) => {
                    log::warn!("attempt {attempt}/{attempts} failed: {reason}");
                    last = reason;
                    if attempt < attempts {
                        std::thread::sleep(self.config.retry.backoff(attempt));
                    }
                }
            }
        }
        Err(OracleError::Transport {
            attempts,
            reason: last,
        })
    }
}
