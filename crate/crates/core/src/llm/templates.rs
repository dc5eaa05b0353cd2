//! Prompt templates and structured-output schemas.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::GatewayError;

const INGREDIENT_EXTRACTION_V1: &str = include_str!("../../assets/prompts/ingredient_extraction.v1.txt");
const RESULT_GENERATION_V1: &str = include_str!("../../assets/prompts/result_generation.v1.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TemplateId {
    IngredientExtraction,
    ResultGeneration,
}

impl TemplateId {
    pub fn version(self) -> &'static str {
        "v1"
    }

    pub fn text(self) -> &'static str {
        match self {
            TemplateId::IngredientExtraction => INGREDIENT_EXTRACTION_V1,
            TemplateId::ResultGeneration => RESULT_GENERATION_V1,
        }
    }

    pub fn variables(self) -> &'static [&'static str] {
        match self {
            TemplateId::IngredientExtraction => &["user_message"],
            TemplateId::ResultGeneration => &["user_message", "results_text"],
        }
    }

    /// Fills every `{name}` placeholder; all declared variables are required.
    pub fn render(self, vars: &BTreeMap<String, String>) -> Result<String, GatewayError> {
        let mut text = self.text().trim_end().to_string();
        for name in self.variables() {
            let value = vars.get(*name).ok_or_else(|| GatewayError::MissingVariable(name.to_string()))?;
            text = text.replace(&format!("{{{name}}}"), value);
        }
        Ok(text)
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TemplateId::IngredientExtraction => f.write_str("ingredient_extraction"),
            TemplateId::ResultGeneration => f.write_str("result_generation"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemaId {
    ProcessIngredients,
    ProcessImpactResults,
}

impl SchemaId {
    pub fn function_name(self) -> &'static str {
        match self {
            SchemaId::ProcessIngredients => "process_ingredients",
            SchemaId::ProcessImpactResults => "process_impact_results",
        }
    }

    /// JSON schema sent with the function-calling request.
    pub fn parameters(self) -> Value {
        match self {
            SchemaId::ProcessIngredients => json!({
                "type": "object",
                "properties": {
                    "ingredients": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "properties": {
                                "name": { "type": "string", "description": "Ingredient name" },
                                "quantity": { "type": "number", "description": "Quantity in grams" }
                            },
                            "required": ["name", "quantity"],
                            "additionalProperties": false
                        }
                    }
                },
                "required": ["ingredients"],
                "additionalProperties": false
            }),
            SchemaId::ProcessImpactResults => json!({
                "type": "object",
                "properties": {
                    "answer_user": { "type": "string" },
                    "visualization_data": {
                        "type": "object",
                        "properties": {
                            "ingredients": { "type": "array", "items": { "type": "string" } },
                            "impacts": { "type": "array", "items": { "type": "number" } }
                        },
                        "required": ["ingredients", "impacts"],
                        "additionalProperties": false
                    }
                },
                "required": ["answer_user", "visualization_data"],
                "additionalProperties": false
            }),
        }
    }

    /// Checks a reply against the schema, returning the normalized value.
    pub fn validate(self, value: &Value) -> Result<Value, String> {
        match self {
            SchemaId::ProcessIngredients => {
                let parsed: ProcessIngredients = serde_json::from_value(value.clone()).map_err(|e| e.to_string())?;
                for (i, item) in parsed.ingredients.iter().enumerate() {
                    if item.name.trim().is_empty() {
                        return Err(format!("ingredients[{i}].name is empty"));
                    }
                    if !(item.quantity > 0.0 && item.quantity.is_finite()) {
                        return Err(format!("ingredients[{i}].quantity must be a positive number"));
                    }
                }
                Ok(serde_json::to_value(parsed).expect("serializable"))
            }
            SchemaId::ProcessImpactResults => {
                let parsed: ProcessImpactResults = serde_json::from_value(value.clone()).map_err(|e| e.to_string())?;
                let viz = &parsed.visualization_data;
                if viz.ingredients.len() != viz.impacts.len() {
                    return Err("visualization_data arrays differ in length".into());
                }
                if viz.impacts.iter().any(|v| !v.is_finite()) {
                    return Err("visualization_data.impacts must be finite".into());
                }
                Ok(serde_json::to_value(parsed).expect("serializable"))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtractedIngredient {
    pub name: String,
    pub quantity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessIngredients {
    pub ingredients: Vec<ExtractedIngredient>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VisualizationPayload {
    pub ingredients: Vec<String>,
    pub impacts: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessImpactResults {
    pub answer_user: String,
    pub visualization_data: VisualizationPayload,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_fills_placeholders() {
        let vars = BTreeMap::from([("user_message".to_string(), "200g of rice".to_string())]);
        let text = TemplateId::IngredientExtraction.render(&vars).unwrap();
        assert!(text.ends_with("User Message: 200g of rice"));
        assert!(text.contains("'process_ingredients'"));
        assert!(!text.contains('{'));
    }

    #[test]
    fn render_requires_all_variables() {
        let vars = BTreeMap::from([("user_message".to_string(), "x".to_string())]);
        let err = TemplateId::ResultGeneration.render(&vars).unwrap_err();
        assert!(matches!(err, GatewayError::MissingVariable(ref v) if v == "results_text"));
    }

    #[test]
    fn result_template_carries_reference_table() {
        let text = TemplateId::ResultGeneration.text();
        assert!(text.contains("Sending an email = 0.004 kg CO2-eq"));
        assert!(text.contains("DO NOT include total recipe impact on visualization!"));
    }

    #[test]
    fn schema_validation() {
        let ok = json!({"ingredients": [{"name": "Olives", "quantity": 30}]});
        assert!(SchemaId::ProcessIngredients.validate(&ok).is_ok());
        for bad in [
            json!({"ingredients": [{"name": "Olives"}]}),
            json!({"ingredients": [{"name": "", "quantity": 3}]}),
            json!({"ingredients": [{"name": "x", "quantity": -3}]}),
            json!({"items": []}),
        ] {
            assert!(SchemaId::ProcessIngredients.validate(&bad).is_err(), "{bad}");
        }
        let viz = json!({"answer_user": "x", "visualization_data": {"ingredients": ["a"], "impacts": []}});
        assert!(SchemaId::ProcessImpactResults.validate(&viz).is_err());
    }
}
