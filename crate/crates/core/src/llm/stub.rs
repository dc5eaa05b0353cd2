//! Deterministic offline provider.
//!
//! Canned fixtures win; otherwise extraction runs the grammar and chat
//! answers quote the lines of the results text that match the question.

use serde::Deserialize;
use serde_json::{json, Value};

use super::{ChatProvider, GatewayError, ProviderReply, ProviderRequest, Role, SchemaId, TemplateId};
use crate::recipe::{self, ConversionTable};

const CANNED: &str = include_str!("../../assets/stub/canned.json");

#[derive(Debug, Clone, Deserialize)]
struct CannedEntry {
    template: TemplateId,
    user_message: String,
    response: Value,
}

#[derive(Debug, Clone)]
pub struct StubProvider {
    canned: Vec<CannedEntry>,
    table: ConversionTable,
}

impl Default for StubProvider {
    fn default() -> Self {
        StubProvider {
            canned: serde_json::from_str(CANNED).expect("bundled stub fixtures are valid"),
            table: ConversionTable::default(),
        }
    }
}

impl StubProvider {
    pub fn with_table(table: ConversionTable) -> Self {
        StubProvider { table, ..Self::default() }
    }

    fn canned(&self, template: TemplateId, user_message: &str) -> Option<&Value> {
        self.canned
            .iter()
            .find(|c| c.template == template && c.user_message.trim() == user_message.trim())
            .map(|c| &c.response)
    }
}

impl ChatProvider for StubProvider {
    fn name(&self) -> &str {
        "stub"
    }

    fn send(&self, request: &ProviderRequest) -> Result<ProviderReply, GatewayError> {
        let user_message = request.vars.get("user_message").map(String::as_str).unwrap_or("");
        let results_text = request.vars.get("results_text").map(String::as_str).unwrap_or("");

        if let Some(schema) = request.function {
            let args = match self.canned(request.template, user_message) {
                Some(v) => v.clone(),
                None => match schema {
                    SchemaId::ProcessIngredients => {
                        let parsed = recipe::parse_deterministic(user_message, &self.table);
                        let items: Vec<Value> = parsed
                            .ingredients
                            .iter()
                            .map(|i| json!({ "name": i.name, "quantity": i.grams }))
                            .collect();
                        json!({ "ingredients": items })
                    }
                    SchemaId::ProcessImpactResults => json!({
                        "answer_user": summary(results_text),
                        "visualization_data": { "ingredients": [], "impacts": [] }
                    }),
                },
            };
            return Ok(ProviderReply { content: None, function_arguments: Some(args) });
        }

        let question = request
            .messages
            .iter()
            .rev()
            .find(|m| m.role == Role::User)
            .map(|m| m.content.as_str())
            .unwrap_or("");
        Ok(ProviderReply { content: Some(grounded_answer(question, results_text)), function_arguments: None })
    }
}

fn summary(results_text: &str) -> String {
    let headers: Vec<&str> = results_text.lines().filter(|l| is_block_header(l)).collect();
    if headers.is_empty() {
        return "No database results were retrieved.".into();
    }
    let mut out = String::from("Impact data was retrieved from:\n");
    for h in headers {
        out.push_str("- ");
        out.push_str(h.trim_end_matches(':'));
        out.push('\n');
    }
    out
}

fn is_block_header(line: &str) -> bool {
    line.ends_with(':') && line.contains(" results for '")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Topic {
    Market,
    Country,
    Lifecycle,
    Totals,
}

fn topic(question: &str) -> Topic {
    let q = question.to_lowercase();
    if q.contains("market") || q.contains("origin") || q.contains("share") {
        Topic::Market
    } else if q.contains("countr") || q.contains("region") || q.contains("vary") {
        Topic::Country
    } else if q.contains("lifecycle") || q.contains("life cycle") || q.contains("stage") || q.contains("pattern") {
        Topic::Lifecycle
    } else {
        Topic::Totals
    }
}

fn line_matches(topic: Topic, line: &str) -> bool {
    match topic {
        Topic::Market => line.starts_with("- Market share"),
        Topic::Country => false,
        Topic::Lifecycle => line.starts_with("- ") && line.contains("%") && !line.starts_with("- Market share"),
        Topic::Totals => line.starts_with("- Impact for") || line.starts_with("- Market impact for"),
    }
}

/// Quotes the results-text lines relevant to `question`, under their block headers.
pub(crate) fn grounded_answer(question: &str, results_text: &str) -> String {
    let topic = topic(question);
    let mut out = String::new();
    let mut header: Option<&str> = None;
    let mut header_written = false;
    for line in results_text.lines() {
        let line = line.trim_end();
        if is_block_header(line) {
            header = Some(line);
            header_written = false;
            let picked = match topic {
                Topic::Country => line.contains("DATA FROM") || line.contains(" in "),
                _ => false,
            };
            if picked {
                out.push_str(line.trim_end_matches(':'));
                out.push('\n');
                header_written = true;
            }
            continue;
        }
        if line_matches(topic, line) {
            if let (Some(h), false) = (header, header_written) {
                out.push_str(h);
                out.push('\n');
                header_written = true;
            }
            out.push_str(line);
            out.push('\n');
        }
    }
    if out.is_empty() {
        return match topic {
            Topic::Market => "None of the selected products has market share data.".into(),
            _ => "The retrieved data has no entries on that topic.".into(),
        };
    }
    let lead = match topic {
        Topic::Market => "Market share data from the retrieved results:",
        Topic::Country => "Regions behind each database result:",
        Topic::Lifecycle => "Lifecycle stage breakdowns from the retrieved results:",
        Topic::Totals => "Impact values from the retrieved results:",
    };
    format!("{lead}\n{}", out.trim_end())
}

#[cfg(test)]
mod tests {
    use super::*;

    const RESULTS: &str = "Results for selected most similar items to 'olives':\n\n\
BONSAI database results for 'Olives' in Netherlands:\n\
- Production impact for 30 grams: 0.0495 kg CO2-eq\n\
- Market impact for 30 grams: 0.0558 kg CO2-eq\n\
- Market share from Italy: 39.0%, impact for 30 grams: 0.054 kg CO2-eq\n\
- Market share from Germany: 34.0%, impact for 30 grams: 0.06 kg CO2-eq\n\n\
Agribalyse database results for 'Oregano, dried' (DATA FROM FRANCE):\n\
- Impact for 5 grams: 0.00232 kg CO2-eq\n\
- Agriculture impact for 5 grams: 0.001 kg CO2-eq, Percentage: 43.1%\n";

    #[test]
    fn market_answer_cites_regions() {
        let answer = grounded_answer("What are the market shares?", RESULTS);
        assert!(answer.contains("Italy"));
        assert!(answer.contains("Germany"));
        assert!(answer.contains("'Olives'"));
        assert!(!answer.contains("Oregano"));
    }

    #[test]
    fn lifecycle_answer() {
        let answer = grounded_answer("Any lifecycle patterns?", RESULTS);
        assert!(answer.contains("Agriculture impact for 5 grams: 0.001"));
    }

    #[test]
    fn no_market_data() {
        let answer = grounded_answer("market shares?", "Agribalyse database results for 'X' (DATA FROM FRANCE):\n- Impact for 5 grams: 1 kg CO2-eq\n");
        assert!(answer.contains("None of the selected products"));
    }
}
