//! Chat-completion gateway with structured-output enforcement.
//!
//! Providers only move messages. The gateway renders templates, pins the
//! temperature to zero, validates function-call replies against the named
//! schema and retries a schema violation twice before failing.

pub mod chat;
mod remote;
mod stub;
pub mod templates;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use chat::{chat_followup, ChatSessionState};
pub use remote::{RemoteConfig, RemoteProvider};
pub use stub::StubProvider;
pub use templates::{ExtractedIngredient, ProcessImpactResults, SchemaId, TemplateId, VisualizationPayload};

/// Attempts after the first for a schema-violating reply.
pub const SCHEMA_RETRIES: u32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum GatewayError {
    #[error("provider transport error: {0}")]
    Transport(String),
    #[error("provider returned HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("reply violates schema `{schema}` after {attempts} attempts: {detail}")]
    SchemaViolation { schema: &'static str, attempts: u32, detail: String },
    #[error("message is empty")]
    EmptyMessage,
    #[error("unknown chat session `{0}`")]
    UnknownSession(String),
    #[error("template variable `{0}` is missing")]
    MissingVariable(String),
    #[error("provider configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage { role: Role::User, content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        ChatMessage { role: Role::Assistant, content: content.into() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatRequest {
    pub template: TemplateId,
    pub vars: BTreeMap<String, String>,
    pub schema: Option<SchemaId>,
    /// Turns after the system prompt, oldest first.
    pub history: Vec<ChatMessage>,
    temperature: f64,
}

impl ChatRequest {
    pub fn new(template: TemplateId) -> Self {
        ChatRequest { template, vars: BTreeMap::new(), schema: None, history: Vec::new(), temperature: 0.0 }
    }

    pub fn var(mut self, name: &str, value: impl Into<String>) -> Self {
        self.vars.insert(name.to_string(), value.into());
        self
    }

    pub fn schema(mut self, schema: SchemaId) -> Self {
        self.schema = Some(schema);
        self
    }

    pub fn history(mut self, history: Vec<ChatMessage>) -> Self {
        self.history = history;
        self
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }
}

/// What a provider receives: rendered messages plus the request metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct ProviderRequest {
    pub template: TemplateId,
    pub vars: BTreeMap<String, String>,
    pub messages: Vec<ChatMessage>,
    pub function: Option<SchemaId>,
    pub temperature: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProviderReply {
    pub content: Option<String>,
    pub function_arguments: Option<Value>,
}

pub trait ChatProvider: Send + Sync {
    fn name(&self) -> &str;
    fn send(&self, request: &ProviderRequest) -> Result<ProviderReply, GatewayError>;
}

#[derive(Debug, Clone, PartialEq)]
pub enum Completion {
    Structured(Value),
    Text(String),
}

#[derive(Clone)]
pub struct LlmGateway {
    provider: Arc<dyn ChatProvider>,
    retries: u32,
}

impl std::fmt::Debug for LlmGateway {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LlmGateway").field("provider", &self.provider.name()).finish()
    }
}

impl LlmGateway {
    pub fn new(provider: Arc<dyn ChatProvider>) -> Self {
        LlmGateway { provider, retries: SCHEMA_RETRIES }
    }

    pub fn stub() -> Self {
        Self::new(Arc::new(StubProvider::default()))
    }

    pub fn remote(config: RemoteConfig) -> Result<Self, GatewayError> {
        Ok(Self::new(Arc::new(RemoteProvider::new(config)?)))
    }

    pub fn provider_name(&self) -> &str {
        self.provider.name()
    }

    pub fn complete(&self, request: &ChatRequest) -> Result<Completion, GatewayError> {
        let system = request.template.render(&request.vars)?;
        let mut messages = vec![ChatMessage { role: Role::System, content: system }];
        messages.extend(request.history.iter().cloned());
        let outgoing = ProviderRequest {
            template: request.template,
            vars: request.vars.clone(),
            messages,
            function: request.schema,
            temperature: request.temperature,
        };

        let Some(schema) = request.schema else {
            let reply = self.provider.send(&outgoing)?;
            return Ok(Completion::Text(reply.content.unwrap_or_default()));
        };

        let attempts = self.retries + 1;
        let mut detail = String::new();
        for attempt in 1..=attempts {
            let reply = self.provider.send(&outgoing)?;
            match structured_payload(&reply).and_then(|v| schema.validate(&v)) {
                Ok(value) => return Ok(Completion::Structured(value)),
                Err(e) => {
                    tracing::warn!(schema = schema.function_name(), attempt, error = %e, "schema violation");
                    detail = e;
                }
            }
        }
        Err(GatewayError::SchemaViolation { schema: schema.function_name(), attempts, detail })
    }

    pub fn extract_ingredients(&self, user_message: &str) -> Result<Vec<ExtractedIngredient>, GatewayError> {
        let request = ChatRequest::new(TemplateId::IngredientExtraction)
            .var("user_message", user_message)
            .schema(SchemaId::ProcessIngredients);
        let value = self.structured(&request)?;
        let parsed: templates::ProcessIngredients = serde_json::from_value(value).expect("validated");
        Ok(parsed.ingredients)
    }

    /// The optional prose pass over the engine's results text.
    pub fn summarize_results(&self, user_message: &str, results_text: &str) -> Result<ProcessImpactResults, GatewayError> {
        let request = ChatRequest::new(TemplateId::ResultGeneration)
            .var("user_message", user_message)
            .var("results_text", results_text)
            .schema(SchemaId::ProcessImpactResults);
        let value = self.structured(&request)?;
        Ok(serde_json::from_value(value).expect("validated"))
    }

    fn structured(&self, request: &ChatRequest) -> Result<Value, GatewayError> {
        match self.complete(request)? {
            Completion::Structured(v) => Ok(v),
            Completion::Text(_) => unreachable!("schema requests yield structured output"),
        }
    }
}

fn structured_payload(reply: &ProviderReply) -> Result<Value, String> {
    if let Some(args) = &reply.function_arguments {
        return Ok(args.clone());
    }
    match &reply.content {
        Some(text) => serde_json::from_str(text).map_err(|e| format!("reply is not a function call: {e}")),
        None => Err("reply has neither function arguments nor content".into()),
    }
}
