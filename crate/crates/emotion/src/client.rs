//! Chat-completion client with an offline fixture mode.

use std::fs;
use std::path::PathBuf;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{EmotionError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EndpointConfig {
    /// Base address of an OpenAI-compatible API, without the route.
    pub base_url: String,
    pub model: String,
    /// Environment variable holding the bearer token; the token itself is never stored.
    pub token_env: String,
    pub timeout_secs: u64,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        Self {
            base_url: "https://api.openai.com/v1".into(),
            model: "gpt-3.5-turbo".into(),
            token_env: "OPENAI_API_KEY".into(),
            timeout_secs: 60,
        }
    }
}

impl EndpointConfig {
    pub fn timeout(&self) -> Duration {
        Duration::from_secs(self.timeout_secs)
    }
}

/// Moves one prompt to an endpoint and returns the reply text.
pub trait Transport: Send + Sync {
    fn complete(&self, endpoint: &EndpointConfig, token: &str, prompt: &str) -> Result<String>;
}

/// Transport used when the crate is built without the `live` feature.
#[derive(Debug, Default)]
pub struct DisabledTransport;

impl Transport for DisabledTransport {
    fn complete(&self, _: &EndpointConfig, _: &str, _: &str) -> Result<String> {
        Err(EmotionError::Transport(
            "live requests need a build with the `live` feature".into(),
        ))
    }
}

#[cfg(feature = "live")]
pub use http::HttpTransport;

#[cfg(feature = "live")]
mod http {
    use super::*;

    /// `POST {base_url}/chat/completions` with a single user message.
    #[derive(Debug, Default)]
    pub struct HttpTransport;

    impl Transport for HttpTransport {
        fn complete(&self, endpoint: &EndpointConfig, token: &str, prompt: &str) -> Result<String> {
            let url = format!("{}/chat/completions", endpoint.base_url.trim_end_matches('/'));
            let body = serde_json::json!({
                "model": endpoint.model,
                "messages": [{"role": "user", "content": prompt}],
            });
            let reply: serde_json::Value = ureq::post(&url)
                .timeout(endpoint.timeout())
                .set("Authorization", &format!("Bearer {token}"))
                .send_json(body)
                .map_err(|e| EmotionError::Transport(e.to_string()))?
                .into_json()
                .map_err(|e| EmotionError::Transport(e.to_string()))?;
            reply["choices"][0]["message"]["content"]
                .as_str()
                .map(str::to_string)
                .ok_or_else(|| EmotionError::Transport(format!("unexpected reply shape: {reply}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exchange {
    pub key: String,
    pub prompt: String,
    pub response: String,
}

pub struct ChatClient {
    pub endpoint: EndpointConfig,
    /// When set, replies are read from `<dir>/<key>` and the transport is never used.
    pub mock_dir: Option<PathBuf>,
    transport: Box<dyn Transport>,
    log: Mutex<Vec<Exchange>>,
}

impl ChatClient {
    pub fn new(endpoint: EndpointConfig, transport: Box<dyn Transport>) -> Self {
        Self {
            endpoint,
            mock_dir: None,
            transport,
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn mock(fixture_dir: impl Into<PathBuf>) -> Self {
        Self::new(EndpointConfig::default(), Box::new(DisabledTransport)).with_mock(fixture_dir)
    }

    pub fn with_mock(mut self, fixture_dir: impl Into<PathBuf>) -> Self {
        self.mock_dir = Some(fixture_dir.into());
        self
    }

    #[cfg(feature = "live")]
    pub fn live(endpoint: EndpointConfig) -> Self {
        Self::new(endpoint, Box::new(HttpTransport))
    }

    pub fn is_mock(&self) -> bool {
        self.mock_dir.is_some()
    }

    /// Send `prompt`; `key` names the request inside a fixture directory.
    pub fn complete(&self, key: &str, prompt: &str) -> Result<String> {
        let response = match &self.mock_dir {
            Some(dir) => {
                let path = dir.join(key);
                if !path.is_file() {
                    return Err(EmotionError::MissingFixture(path));
                }
                fs::read_to_string(&path).map_err(|e| EmotionError::io(&path, e))?
            }
            None => {
                let token = std::env::var(&self.endpoint.token_env).map_err(|_| {
                    EmotionError::Transport(format!("environment variable {} is not set", self.endpoint.token_env))
                })?;
                self.transport.complete(&self.endpoint, &token, prompt)?
            }
        };
        self.log.lock().expect("exchange log").push(Exchange {
            key: key.to_string(),
            prompt: prompt.to_string(),
            response: response.clone(),
        });
        Ok(response)
    }

    /// Every request made so far, in order.
    pub fn exchanges(&self) -> Vec<Exchange> {
        self.log.lock().expect("exchange log").clone()
    }
}
