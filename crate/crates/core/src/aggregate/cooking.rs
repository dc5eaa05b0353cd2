//! Cooking detection and the energy estimate.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::AggregateError;

const DEFAULT_DISHES: &str = include_str!("../../config/dishes.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CookingMethod {
    Bake,
    Boil,
    Fry,
    Simmer,
    None,
}

impl fmt::Display for CookingMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CookingMethod::Bake => "Baking",
            CookingMethod::Boil => "Boiling",
            CookingMethod::Fry => "Frying",
            CookingMethod::Simmer => "Simmering",
            CookingMethod::None => "None",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DetectedBy {
    Verb,
    Dish,
    Ingredient,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CookingSpec {
    pub method: CookingMethod,
    pub duration_min: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature_c: Option<f64>,
    pub detected_by: DetectedBy,
    /// Keyword that triggered the detection.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trigger: Option<String>,
}

impl CookingSpec {
    pub fn none() -> Self {
        CookingSpec { method: CookingMethod::None, duration_min: 0.0, temperature_c: None, detected_by: DetectedBy::None, trigger: None }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
struct MethodDefault {
    method: CookingMethod,
    duration_min: f64,
    #[serde(default)]
    temperature_c: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
struct VerbRule {
    method: CookingMethod,
    words: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
struct DishRule {
    keywords: Vec<String>,
    method: CookingMethod,
    duration_min: f64,
    #[serde(default)]
    temperature_c: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
struct DishFile {
    defaults: Vec<MethodDefault>,
    verbs: Vec<VerbRule>,
    dishes: Vec<DishRule>,
    #[serde(default)]
    ingredient_dishes: Vec<DishRule>,
}

/// Keyword tables mapping recipe text to a cooking method.
#[derive(Debug, Clone)]
pub struct DishTable {
    defaults: Vec<MethodDefault>,
    verbs: Vec<(CookingMethod, Regex)>,
    dishes: Vec<(DishRule, Regex)>,
    ingredient_dishes: Vec<(DishRule, Regex)>,
}

fn word_regex(words: &[String]) -> Result<Regex, AggregateError> {
    let alternation = words.iter().map(|w| regex::escape(&w.to_lowercase())).collect::<Vec<_>>().join("|");
    Regex::new(&format!(r"(?i)\b(?:{alternation})\b")).map_err(|e| AggregateError::InvalidDishTable(e.to_string()))
}

impl Default for DishTable {
    fn default() -> Self {
        Self::from_json(DEFAULT_DISHES).expect("bundled dish table is valid")
    }
}

impl DishTable {
    pub fn from_json(text: &str) -> Result<Self, AggregateError> {
        let file: DishFile = serde_json::from_str(text).map_err(|e| AggregateError::InvalidDishTable(e.to_string()))?;
        for method in [CookingMethod::Bake, CookingMethod::Boil, CookingMethod::Fry, CookingMethod::Simmer] {
            if !file.defaults.iter().any(|d| d.method == method) {
                return Err(AggregateError::InvalidDishTable(format!("no default for {method:?}")));
            }
        }
        let all_rules = file.dishes.iter().chain(&file.ingredient_dishes);
        if let Some(bad) = all_rules.clone().find(|d| !(d.duration_min > 0.0) || d.method == CookingMethod::None) {
            return Err(AggregateError::InvalidDishTable(format!("bad rule for {:?}", bad.keywords)));
        }
        let verbs = file.verbs.iter().map(|v| Ok((v.method, word_regex(&v.words)?))).collect::<Result<_, AggregateError>>()?;
        let compile = |rules: Vec<DishRule>| -> Result<Vec<(DishRule, Regex)>, AggregateError> {
            rules.into_iter().map(|d| { let re = word_regex(&d.keywords)?; Ok((d, re)) }).collect()
        };
        Ok(DishTable {
            defaults: file.defaults,
            verbs,
            dishes: compile(file.dishes)?,
            ingredient_dishes: compile(file.ingredient_dishes)?,
        })
    }

    pub fn load(path: &Path) -> Result<Self, AggregateError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AggregateError::InvalidDishTable(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    fn default_for(&self, method: CookingMethod) -> &MethodDefault {
        self.defaults.iter().find(|d| d.method == method).expect("checked at load")
    }
}

fn duration_minutes(text: &str) -> Option<f64> {
    let re = Regex::new(r"(?i)(\d+(?:[.,]\d+)?)\s*(minutes?|mins?|hours?|hrs?|h)\b").expect("valid regex");
    let caps = re.captures(text)?;
    let value: f64 = caps[1].replace(',', ".").parse().ok()?;
    let unit = caps[2].to_lowercase();
    Some(if unit.starts_with('h') { value * 60.0 } else { value })
}

fn temperature_c(text: &str) -> Option<f64> {
    let re = Regex::new(r"(?i)(\d+(?:\.\d+)?)\s*(?:°\s*c\b|º\s*c\b|degrees?\s*c(?:elsius)?\b|c\b)").expect("valid regex");
    re.captures(text).and_then(|c| c[1].parse().ok())
}

/// Method, duration and temperature for a recipe. Verbs in the text win over
/// dish names, which win over ingredient names.
pub fn detect_cooking<'a>(text: &str, ingredient_names: impl IntoIterator<Item = &'a str>, table: &DishTable) -> CookingSpec {
    let stated_duration = duration_minutes(text);
    let stated_temperature = temperature_c(text);

    let verb = table
        .verbs
        .iter()
        .filter_map(|(m, re)| re.find(text).map(|hit| (hit.start(), *m, hit.as_str().to_lowercase())))
        .min_by_key(|(pos, _, _)| *pos);
    let dish = table.dishes.iter().find_map(|(rule, re)| re.find(text).map(|hit| (rule, hit.as_str().to_lowercase())));
    let names: Vec<&str> = ingredient_names.into_iter().collect();
    let ingredient = table
        .ingredient_dishes
        .iter()
        .find_map(|(rule, re)| names.iter().find_map(|n| re.find(n)).map(|hit| (rule, hit.as_str().to_lowercase())));

    let (method, detected_by, trigger, rule) = if let Some((_, m, word)) = verb {
        let rule = dish.as_ref().map(|(r, _)| *r).filter(|r| r.method == m);
        (m, DetectedBy::Verb, word, rule)
    } else if let Some((rule, word)) = dish {
        (rule.method, DetectedBy::Dish, word, Some(rule))
    } else if let Some((rule, word)) = ingredient {
        (rule.method, DetectedBy::Ingredient, word, Some(rule))
    } else {
        return CookingSpec::none();
    };

    let fallback = table.default_for(method);
    let duration_min = stated_duration.or(rule.map(|r| r.duration_min)).unwrap_or(fallback.duration_min);
    let temperature_c = stated_temperature.or(rule.and_then(|r| r.temperature_c)).or(fallback.temperature_c);
    CookingSpec { method, duration_min, temperature_c, detected_by, trigger: Some(trigger) }
}

/// Appliance power per method and the electricity grid factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CookingConfig {
    pub power_kw: BTreeMap<CookingMethod, f64>,
    /// kg CO2-eq per kWh when the country has no entry.
    pub default_grid_factor: f64,
    #[serde(default)]
    pub grid_factors: BTreeMap<String, f64>,
    /// Relative half-width of the range around the point estimate.
    pub spread: f64,
}

impl Default for CookingConfig {
    fn default() -> Self {
        CookingConfig {
            power_kw: BTreeMap::from([
                (CookingMethod::Bake, 2.0),
                (CookingMethod::Boil, 1.5),
                (CookingMethod::Fry, 1.2),
                (CookingMethod::Simmer, 0.8),
            ]),
            default_grid_factor: 0.30,
            grid_factors: BTreeMap::new(),
            spread: 0.2,
        }
    }
}

impl CookingConfig {
    pub fn grid_factor(&self, country: &str) -> f64 {
        self.grid_factors.get(&crate::region::normalize(country)).copied().unwrap_or(self.default_grid_factor)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CookingImpact {
    pub required: bool,
    pub method: CookingMethod,
    pub duration_min: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature_c: Option<f64>,
    pub power_kw: f64,
    pub grid_factor: f64,
    pub min: f64,
    pub max: f64,
    pub midpoint: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trigger: Option<String>,
}

impl CookingImpact {
    pub fn none() -> Self {
        CookingImpact {
            required: false,
            method: CookingMethod::None,
            duration_min: 0.0,
            temperature_c: None,
            power_kw: 0.0,
            grid_factor: 0.0,
            min: 0.0,
            max: 0.0,
            midpoint: 0.0,
            trigger: None,
        }
    }
}

/// `power × hours × grid factor`, with a symmetric relative range.
pub fn cooking_energy(spec: &CookingSpec, config: &CookingConfig, country: &str) -> Result<CookingImpact, AggregateError> {
    if spec.method == CookingMethod::None {
        return Ok(CookingImpact::none());
    }
    if !(spec.duration_min > 0.0) || !spec.duration_min.is_finite() {
        return Err(AggregateError::InvalidDuration(spec.duration_min));
    }
    let power_kw = *config.power_kw.get(&spec.method).ok_or(AggregateError::NoPower(spec.method))?;
    let grid_factor = config.grid_factor(country);
    let midpoint = power_kw * (spec.duration_min / 60.0) * grid_factor;
    Ok(CookingImpact {
        required: true,
        method: spec.method,
        duration_min: spec.duration_min,
        temperature_c: spec.temperature_c,
        power_kw,
        grid_factor,
        min: midpoint * (1.0 - config.spread),
        max: midpoint * (1.0 + config.spread),
        midpoint,
        trigger: spec.trigger.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const PIZZA: &str = "Could you estimate the environmental impact of my veggie pizza? Ingredients: 200g of pizza dough, \
        100g of tomato sauce, a handful of shredded mozzarella, half a red onion, a few olives, and a sprinkle of oregano.";

    #[test]
    fn pizza_bakes() {
        let table = DishTable::default();
        let spec = detect_cooking(PIZZA, ["pizza dough"], &table);
        assert_eq!(spec.method, CookingMethod::Bake);
        assert_eq!(spec.duration_min, 12.0);
        assert_eq!(spec.temperature_c, Some(220.0));
        assert_eq!(spec.detected_by, DetectedBy::Dish);
        let impact = cooking_energy(&spec, &CookingConfig::default(), "NL").unwrap();
        assert!((impact.midpoint - 0.12).abs() < 1e-12);
        assert!((impact.min - 0.096).abs() < 1e-12);
        assert!((impact.max - 0.144).abs() < 1e-12);
    }

    #[test]
    fn boil_pasta() {
        let spec = detect_cooking("boil pasta 10 minutes", [], &DishTable::default());
        assert_eq!(spec.method, CookingMethod::Boil);
        assert_eq!(spec.duration_min, 10.0);
        assert_eq!(spec.detected_by, DetectedBy::Verb);
    }

    #[test]
    fn fruit_salad_is_raw() {
        let spec = detect_cooking("fruit salad: apple, banana", ["apple", "banana"], &DishTable::default());
        assert_eq!(spec.method, CookingMethod::None);
        let impact = cooking_energy(&spec, &CookingConfig::default(), "NL").unwrap();
        assert!(!impact.required);
        assert_eq!((impact.min, impact.midpoint, impact.max), (0.0, 0.0, 0.0));
    }

    #[test]
    fn stated_values_override_dish() {
        let spec = detect_cooking("Bake the lasagna for 1 hour at 200 °C", [], &DishTable::default());
        assert_eq!(spec.method, CookingMethod::Bake);
        assert_eq!(spec.duration_min, 60.0);
        assert_eq!(spec.temperature_c, Some(200.0));
    }

    #[test]
    fn ingredient_only_detection() {
        let spec = detect_cooking("bowl: 150g rice, 100g beans", ["rice", "beans"], &DishTable::default());
        assert_eq!(spec.method, CookingMethod::Boil);
        assert_eq!(spec.detected_by, DetectedBy::Ingredient);
        assert_eq!(spec.duration_min, 15.0);
    }

    #[test]
    fn zero_duration_rejected() {
        let spec = CookingSpec { method: CookingMethod::Bake, duration_min: 0.0, temperature_c: None, detected_by: DetectedBy::Verb, trigger: None };
        assert!(matches!(cooking_energy(&spec, &CookingConfig::default(), "NL"), Err(AggregateError::InvalidDuration(_))));
    }

    #[test]
    fn grid_factor_by_country() {
        let mut config = CookingConfig::default();
        config.grid_factors.insert("FR".into(), 0.06);
        assert_eq!(config.grid_factor("fr"), 0.06);
        assert_eq!(config.grid_factor("NL"), 0.30);
    }
}
