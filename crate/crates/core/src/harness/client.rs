use std::cell::Cell;
use std::time::Duration;

use serde_json::{json, Value};

use super::{HarnessError, LiveSource};

/// Environment variable holding the endpoint's bearer token.
pub const API_KEY_VAR: &str = "STACKEVAL_API_KEY";

const TIMEOUT: Duration = Duration::from_secs(120);

thread_local! {
    static CALLS: Cell<usize> = const { Cell::new(0) };
}

/// Requests issued from the current thread so far.
pub fn network_calls() -> usize {
    CALLS.with(Cell::get)
}

/// Chat-completions client.
#[derive(Debug, Clone)]
pub struct ChatClient {
    agent: ureq::Agent,
    api_key: Option<String>,
}

impl ChatClient {
    pub fn new(api_key: Option<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(TIMEOUT))
            .http_status_as_error(false)
            .build()
            .into();
        ChatClient { agent, api_key }
    }

    /// Reads the key from [`API_KEY_VAR`].
    pub fn from_env() -> Self {
        Self::new(std::env::var(API_KEY_VAR).ok().filter(|k| !k.is_empty()))
    }

    pub fn complete(&self, live: &LiveSource, prompt: &str) -> Result<String, HarnessError> {
        let key = self
            .api_key
            .as_deref()
            .ok_or_else(|| HarnessError::Auth(format!("{API_KEY_VAR} is not set")))?;
        let url = format!("{}/chat/completions", live.endpoint.trim_end_matches('/'));
        let body = json!({
            "model": live.model,
            "temperature": live.temperature,
            "messages": [{"role": "user", "content": prompt}],
        });
        CALLS.with(|c| c.set(c.get() + 1));
        let mut resp = self
            .agent
            .post(&url)
            .header("Authorization", &format!("Bearer {key}"))
            .send_json(&body)
            .map_err(|e| HarnessError::Network(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| HarnessError::Network(e.to_string()))?;
        match status {
            200..=299 => {}
            401 | 403 => return Err(HarnessError::Auth(format!("endpoint answered {status}"))),
            _ => return Err(HarnessError::Network(format!("endpoint answered {status}"))),
        }
        extract_content(&text)
    }
}

fn extract_content(body: &str) -> Result<String, HarnessError> {
    if body.trim().is_empty() {
        return Err(HarnessError::MalformedResponse("empty body".into()));
    }
    let v: Value = serde_json::from_str(body).map_err(|e| HarnessError::MalformedResponse(e.to_string()))?;
    let content = v
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .ok_or_else(|| HarnessError::MalformedResponse("no choices[0].message.content".into()))?;
    if content.trim().is_empty() {
        return Err(HarnessError::MalformedResponse("empty completion".into()));
    }
    Ok(content.to_string())
}

/// One completion using the key from the environment.
pub fn query_llm(live: &LiveSource, prompt: &str) -> Result<String, HarnessError> {
    ChatClient::from_env().complete(live, prompt)
}
