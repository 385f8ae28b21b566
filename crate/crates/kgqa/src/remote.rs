//! Minimal chat-completions client shared by the remote planner and the
//! remote matcher.
//!
//! The wire protocol is the widely implemented `POST {base}/chat/completions`
//! JSON shape. Requests run at temperature 0; transient failures (connection
//! errors, 429, 5xx) are retried with exponential backoff before surfacing a
//! transport error.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Environment variables configuring remote backends.
pub const ENV_API_BASE: &str = "KGQA_API_BASE";
pub const ENV_API_KEY: &str = "KGQA_API_KEY";
pub const ENV_MODEL: &str = "KGQA_MODEL";

#[derive(Debug, Clone)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub initial_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 3,
            initial_backoff: Duration::from_millis(200),
        }
    }
}

#[derive(Debug, Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: Vec<Message<'a>>,
    temperature: f32,
}

#[derive(Debug, Serialize)]
struct Message<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Debug, Deserialize)]
struct ChatResponseWire {
    choices: Vec<Choice>,
    #[serde(default)]
    usage: Option<Usage>,
}

#[derive(Debug, Deserialize)]
struct Choice {
    message: MessageWire,
}

#[derive(Debug, Deserialize)]
struct MessageWire {
    content: String,
}

#[derive(Debug, Default, Deserialize)]
struct Usage {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

/// One completed round-trip.
#[derive(Debug, Clone)]
pub struct ChatCompletion {
    pub content: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

pub struct ChatClient {
    base_url: String,
    api_key: String,
    model: String,
    retry: RetryPolicy,
    http: reqwest::blocking::Client,
}

impl ChatClient {
    pub fn new(base_url: impl Into<String>, api_key: impl Into<String>, model: impl Into<String>) -> Self {
        ChatClient {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            api_key: api_key.into(),
            model: model.into(),
            retry: RetryPolicy::default(),
            http: reqwest::blocking::Client::builder()
                .timeout(Duration::from_secs(120))
                .build()
                .expect("http client"),
        }
    }

    /// Read `KGQA_API_BASE`, `KGQA_API_KEY`, and `KGQA_MODEL`.
    pub fn from_env() -> Result<Self> {
        let var = |name: &str| {
            std::env::var(name)
                .map_err(|_| Error::Config(format!("environment variable {name} is not set")))
        };
        Ok(ChatClient::new(
            var(ENV_API_BASE)?,
            var(ENV_API_KEY)?,
            var(ENV_MODEL)?,
        ))
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn model(&self) -> &str {
        &self.model
    }

    /// Send one system + user exchange and return the assistant content with
    /// reported token usage (whitespace-token estimates when the server
    /// omits usage).
    pub fn complete(&self, system: &str, user: &str) -> Result<ChatCompletion> {
        let url = format!("{}/chat/completions", self.base_url);
        let request = ChatRequest {
            model: &self.model,
            messages: vec![
                Message { role: "system", content: system },
                Message { role: "user", content: user },
            ],
            temperature: 0.0,
        };
        let mut last_error = String::new();
        let mut backoff = self.retry.initial_backoff;
        for attempt in 1..=self.retry.max_attempts {
            if attempt > 1 {
                std::thread::sleep(backoff);
                backoff *= 2;
            }
            let sent = self
                .http
                .post(&url)
                .bearer_auth(&self.api_key)
                .json(&request)
                .send();
            match sent {
                Err(e) => last_error = format!("request failed: {e}"),
                Ok(response) => {
                    let status = response.status();
                    if status.is_success() {
                        let wire: ChatResponseWire = response.json().map_err(|e| {
                            Error::Transport {
                                msg: format!("malformed completion body: {e}"),
                                attempts: attempt,
                            }
                        })?;
                        let choice = wire.choices.into_iter().next().ok_or_else(|| {
                            Error::Transport {
                                msg: "completion had no choices".to_string(),
                                attempts: attempt,
                            }
                        })?;
                        let usage = wire.usage.unwrap_or_default();
                        let content = choice.message.content;
                        let prompt_tokens = if usage.prompt_tokens > 0 {
                            usage.prompt_tokens
                        } else {
                            crate::metrics::estimate_tokens(user) + crate::metrics::estimate_tokens(system)
                        };
                        let completion_tokens = if usage.completion_tokens > 0 {
                            usage.completion_tokens
                        } else {
                            crate::metrics::estimate_tokens(&content)
                        };
                        return Ok(ChatCompletion {
                            content,
                            prompt_tokens,
                            completion_tokens,
                        });
                    }
                    if status.as_u16() == 429 || status.is_server_error() {
                        last_error = format!("retryable status {status}");
                        continue;
                    }
                    // non-retryable client error
                    let body = response.text().unwrap_or_default();
                    return Err(Error::Transport {
                        msg: format!("status {status}: {body}"),
                        attempts: attempt,
                    });
                }
            }
        }
        Err(Error::Transport {
            msg: last_error,
            attempts: self.retry.max_attempts,
        })
    }
}

/// Extract the first top-level JSON object from model output, tolerating
/// code fences and surrounding prose.
pub fn extract_json_object(content: &str) -> Result<serde_json::Value> {
    let start = content.find('{').ok_or_else(|| {
        Error::PlanFormat("backend output contains no JSON object".to_string())
    })?;
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, c) in content[start..].char_indices() {
        if in_string {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                in_string = false;
            }
            continue;
        }
        match c {
            '"' => in_string = true,
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    let slice = &content[start..start + i + 1];
                    return serde_json::from_str(slice).map_err(|e| {
                        Error::PlanFormat(format!("backend output is not valid JSON: {e}"))
                    });
                }
            }
            _ => {}
        }
    }
    Err(Error::PlanFormat(
        "backend output has an unterminated JSON object".to_string(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extracts_object_from_fenced_output() {
        let content = "Here you go:\n```json\n{\"a\": {\"b\": 1}}\n```";
        let v = extract_json_object(content).unwrap();
        assert_eq!(v["a"]["b"], 1);
    }

    #[test]
    fn extracts_object_with_braces_in_strings() {
        let content = "{\"text\": \"a { b } c\", \"n\": 2}";
        let v = extract_json_object(content).unwrap();
        assert_eq!(v["n"], 2);
    }

    #[test]
    fn missing_object_is_plan_format_error() {
        assert!(matches!(
            extract_json_object("no json here"),
            Err(Error::PlanFormat(_))
        ));
    }
}
