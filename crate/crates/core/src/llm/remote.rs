//! OpenAI-compatible chat-completions client.

use std::time::Duration;

use serde_json::{json, Value};

use super::{ChatProvider, GatewayError, ProviderReply, ProviderRequest};

#[derive(Clone, PartialEq)]
pub struct RemoteConfig {
    /// Base URL; `/chat/completions` is appended.
    pub base_url: String,
    pub model: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
}

impl std::fmt::Debug for RemoteConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteConfig")
            .field("base_url", &self.base_url)
            .field("model", &self.model)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .field("timeout", &self.timeout)
            .finish()
    }
}

impl RemoteConfig {
    /// Reads `MEALPRINT_LLM_URL`, `MEALPRINT_LLM_MODEL`, `MEALPRINT_LLM_API_KEY`
    /// and `MEALPRINT_LLM_TIMEOUT_SECS`.
    pub fn from_env() -> Result<Self, GatewayError> {
        let base_url = std::env::var("MEALPRINT_LLM_URL")
            .map_err(|_| GatewayError::Config("MEALPRINT_LLM_URL is not set".into()))?;
        let model = std::env::var("MEALPRINT_LLM_MODEL").unwrap_or_else(|_| "gpt-4o".into());
        let api_key = std::env::var("MEALPRINT_LLM_API_KEY").ok().filter(|k| !k.is_empty());
        let timeout = match std::env::var("MEALPRINT_LLM_TIMEOUT_SECS") {
            Ok(s) => Duration::from_secs(
                s.parse().map_err(|_| GatewayError::Config(format!("bad MEALPRINT_LLM_TIMEOUT_SECS `{s}`")))?,
            ),
            Err(_) => Duration::from_secs(60),
        };
        Ok(RemoteConfig { base_url, model, api_key, timeout })
    }
}

pub struct RemoteProvider {
    config: RemoteConfig,
    agent: ureq::Agent,
}

impl RemoteProvider {
    pub fn new(config: RemoteConfig) -> Result<Self, GatewayError> {
        if config.base_url.trim().is_empty() {
            return Err(GatewayError::Config("empty base URL".into()));
        }
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(RemoteProvider { config, agent })
    }

    fn body(&self, request: &ProviderRequest) -> Value {
        let mut body = json!({
            "model": self.config.model,
            "temperature": request.temperature,
            "messages": request.messages,
        });
        if let Some(schema) = request.function {
            body["tools"] = json!([{
                "type": "function",
                "function": {
                    "name": schema.function_name(),
                    "parameters": schema.parameters(),
                }
            }]);
            body["tool_choice"] = json!({ "type": "function", "function": { "name": schema.function_name() } });
        }
        body
    }
}

impl ChatProvider for RemoteProvider {
    fn name(&self) -> &str {
        "remote"
    }

    fn send(&self, request: &ProviderRequest) -> Result<ProviderReply, GatewayError> {
        let url = format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'));
        let body = self.body(request);
        tracing::debug!(%url, model = %self.config.model, template = %request.template, "chat completion request");
        let mut call = self.agent.post(&url).header("Content-Type", "application/json");
        if let Some(key) = &self.config.api_key {
            call = call.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = call.send_json(&body).map_err(|e| GatewayError::Transport(e.to_string()))?;
        let status = response.status().as_u16();
        let text = response.body_mut().read_to_string().map_err(|e| GatewayError::Transport(e.to_string()))?;
        tracing::debug!(status, bytes = text.len(), "chat completion response");
        if !(200..300).contains(&status) {
            return Err(GatewayError::Http { status, body: text });
        }
        parse_reply(&text)
    }
}

fn parse_reply(text: &str) -> Result<ProviderReply, GatewayError> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| GatewayError::Transport(format!("invalid response JSON: {e}")))?;
    let message = &value["choices"][0]["message"];
    if message.is_null() {
        return Err(GatewayError::Transport("response has no choices".into()));
    }
    let content = message["content"].as_str().map(str::to_string);
    // Arguments arrive as a JSON string; unparseable ones go to schema checking as content.
    let (function_arguments, content) = match message["tool_calls"][0]["function"]["arguments"].as_str() {
        Some(args) => match serde_json::from_str(args) {
            Ok(v) => (Some(v), content),
            Err(_) => (None, Some(args.to_string())),
        },
        None => (None, content),
    };
    Ok(ProviderReply { content, function_arguments })
}
