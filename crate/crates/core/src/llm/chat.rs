//! Follow-up conversation over a fixed results text.

use serde::{Deserialize, Serialize};

use super::{ChatMessage, ChatRequest, Completion, GatewayError, LlmGateway, TemplateId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatSessionState {
    pub session_id: String,
    pub user_message: String,
    results_text: String,
    history: Vec<ChatMessage>,
}

impl ChatSessionState {
    pub fn new(session_id: impl Into<String>, user_message: impl Into<String>, results_text: impl Into<String>) -> Self {
        ChatSessionState {
            session_id: session_id.into(),
            user_message: user_message.into(),
            results_text: results_text.into(),
            history: Vec::new(),
        }
    }

    pub fn results_text(&self) -> &str {
        &self.results_text
    }

    pub fn history(&self) -> &[ChatMessage] {
        &self.history
    }
}

/// Asks `message` against the session's data and records both turns.
pub fn chat_followup(
    gateway: &LlmGateway,
    state: &mut ChatSessionState,
    message: &str,
) -> Result<String, GatewayError> {
    let message = message.trim();
    if message.is_empty() {
        return Err(GatewayError::EmptyMessage);
    }
    let mut history = state.history.clone();
    history.push(ChatMessage::user(message));
    let request = ChatRequest::new(TemplateId::ResultGeneration)
        .var("user_message", state.user_message.clone())
        .var("results_text", state.results_text.clone())
        .history(history);
    let answer = match gateway.complete(&request)? {
        Completion::Text(t) => t,
        Completion::Structured(v) => v.to_string(),
    };
    state.history.push(ChatMessage::user(message));
    state.history.push(ChatMessage::assistant(answer.clone()));
    Ok(answer)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn history_grows_and_text_is_kept() {
        let gateway = LlmGateway::stub();
        let text = "BONSAI database results for 'Olives' in Netherlands:\n\
            - Market share from Italy: 39.0%, impact for 30 grams: 0.054 kg CO2-eq\n";
        let mut state = ChatSessionState::new("s1", "pizza", text);
        let answer = chat_followup(&gateway, &mut state, "What are the market shares?").unwrap();
        assert!(answer.contains("Italy"));
        assert!(answer.contains("39.0"));
        chat_followup(&gateway, &mut state, "And the totals?").unwrap();
        assert_eq!(state.history().len(), 4);
        assert_eq!(state.results_text(), text);
    }

    #[test]
    fn empty_message_rejected() {
        let mut state = ChatSessionState::new("s1", "pizza", "");
        let err = chat_followup(&LlmGateway::stub(), &mut state, "   ").unwrap_err();
        assert!(matches!(err, GatewayError::EmptyMessage));
        assert!(state.history().is_empty());
    }
}
